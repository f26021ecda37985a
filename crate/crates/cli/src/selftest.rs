//! Invariant battery behind `scatsynth validate`.
//!
//! Every check runs on a reduced signal length so the whole battery finishes
//! in a few seconds; the filter parameters (Q₁, Q₂, N₀, α, window) come from
//! the configuration under test.

use scatsynth::scattering::{retained_pairs, scatter_order2_all};
use scatsynth::{
    descriptor_energy, frame_bounds, textures, Block, DescriptorConfig, ForwardCache, ScatteringNetwork, SignalStats,
};

pub const SELF_TEST_LENGTH: usize = 1024;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn rel_dist(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The configuration scaled down to [`SELF_TEST_LENGTH`] samples.
pub fn reduced_config(cfg: &DescriptorConfig) -> DescriptorConfig {
    let mut small = cfg.clone();
    small.signal_length = cfg.signal_length.min(SELF_TEST_LENGTH);
    small
}

fn test_signals(n: usize) -> Vec<Vec<f64>> {
    vec![
        textures::white_noise(n, 1, 0.5),
        textures::am_noise(n, 8.0, 0.9, 2),
        textures::band_noise(n, n as f64 / 16.0, n as f64 / 4.0, 3),
        textures::am_tone(n, n as f64 / 8.0, 4.0, 0.7),
        textures::clicks(n, 6, 4),
    ]
}

pub fn check_frame(cfg: &DescriptorConfig) -> CheckOutcome {
    let net = match ScatteringNetwork::new(cfg) {
        Ok(net) => net,
        Err(e) => return outcome("frame condition", false, e.to_string()),
    };
    let mut banks = vec![net.primary_bank()];
    banks.extend(net.envelope_bank());
    banks.extend(net.dyadic_bank());
    let mut worst_eps: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut ok = true;
    for bank in banks {
        let fb = frame_bounds(bank);
        ok &= fb.epsilon < 1.0 && fb.upper_bound_holds();
        worst_eps = worst_eps.max(fb.epsilon);
        worst_sum = worst_sum.max(fb.max_half_sum);
    }
    outcome("frame condition", ok, format!("max epsilon {worst_eps:.6}, max half-sum {worst_sum:.15}"))
}

pub fn check_energy(cfg: &DescriptorConfig) -> CheckOutcome {
    let net = match ScatteringNetwork::new(cfg) {
        Ok(net) => net,
        Err(e) => return outcome("energy bound", false, e.to_string()),
    };
    let mut worst = f64::NEG_INFINITY;
    for x in test_signals(cfg.signal_length) {
        let energy = descriptor_energy(&net.descriptor(&x).expect("length matches"));
        let var = SignalStats::of(&x).variance;
        worst = worst.max(energy / var - 1.0);
    }
    outcome("energy bound", worst <= 1e-8, format!("max energy/variance - 1 = {worst:.3e}"))
}

pub fn check_invariance(cfg: &DescriptorConfig) -> CheckOutcome {
    let net = match ScatteringNetwork::new(cfg) {
        Ok(net) => net,
        Err(e) => return outcome("homogeneity and shift", false, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for (i, x) in test_signals(cfg.signal_length).into_iter().enumerate() {
        let base = net.descriptor(&x).expect("length matches").values;
        let a = -1.75 + i as f64;
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        let expect: Vec<f64> = base.iter().map(|v| a.abs() * v).collect();
        worst = worst.max(rel_dist(&net.descriptor(&scaled).expect("length").values, &expect));
        let mut shifted = x.clone();
        shifted.rotate_right(37 * (i + 1));
        worst = worst.max(rel_dist(&net.descriptor(&shifted).expect("length").values, &base));
    }
    outcome("homogeneity and shift", worst <= 1e-12, format!("max relative deviation {worst:.3e}"))
}

pub fn check_adjoint(cfg: &DescriptorConfig) -> CheckOutcome {
    let net = match ScatteringNetwork::new(cfg) {
        Ok(net) => net,
        Err(e) => return outcome("adjoint identity", false, e.to_string()),
    };
    let n = cfg.signal_length;
    let mut worst: f64 = 0.0;
    for seed in 0..3u64 {
        let x = textures::smooth_noise(n, 100 + seed);
        let u = textures::white_noise(n, 200 + seed, 1.0);
        let w = textures::white_noise(net.len(), 300 + seed, 1.0);
        let cache = ForwardCache::new(&net, &x).expect("length matches");
        let ju = cache.jvp(&u).expect("length matches");
        let jtw = cache.vjp(&w).expect("length matches");
        let (lhs, rhs) = (dot(&ju, &w), dot(&u, &jtw));
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    outcome("adjoint identity", worst <= 1e-10, format!("max relative gap {worst:.3e}"))
}

pub fn check_finite_differences(cfg: &DescriptorConfig) -> CheckOutcome {
    let net = match ScatteringNetwork::new(cfg) {
        Ok(net) => net,
        Err(e) => return outcome("finite differences", false, e.to_string()),
    };
    let n = cfg.signal_length;
    let x = textures::smooth_noise(n, 7);
    let mut v = textures::white_noise(n, 8, 1.0);
    let vn = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|e| *e /= vn);
    let h = 1e-5 * dot(&x, &x).sqrt();
    let plus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
    let sp = net.descriptor(&plus).expect("length").values;
    let sm = net.descriptor(&minus).expect("length").values;
    let fd: Vec<f64> = sp.iter().zip(&sm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let jv = ForwardCache::new(&net, &x).and_then(|c| c.jvp(&v)).expect("length matches");
    let err = rel_dist(&fd, &jv);
    outcome("finite differences", err <= 1e-4, format!("relative error {err:.3e}"))
}

pub fn check_triangularity(cfg: &DescriptorConfig) -> CheckOutcome {
    let net = match ScatteringNetwork::new(cfg) {
        Ok(net) => net,
        Err(e) => return outcome("order-2 triangularity", false, e.to_string()),
    };
    let Some(env) = net.envelope_bank() else {
        return outcome("order-2 triangularity", true, "order 2 disabled".into());
    };
    let n = cfg.signal_length;
    let x = textures::am_noise(n, 16.0, 0.9, 5);
    let scal = net.scalogram(&x).expect("length matches");
    let all = scatter_order2_all(&scal, env).expect("lengths match");
    let kept = retained_pairs(scal.lambda_grid(), env.lambda_grid());
    let (mut kept_sum, mut dropped_sum, mut dropped_n) = (0.0, 0.0, 0usize);
    for (b1, row) in all.iter().enumerate() {
        for (b2, &v) in row.iter().enumerate() {
            if kept.contains(&(b1, b2)) {
                kept_sum += v;
            } else {
                dropped_sum += v;
                dropped_n += 1;
            }
        }
    }
    let ratio = if dropped_n == 0 { 0.0 } else { (dropped_sum / dropped_n as f64) / (kept_sum / kept.len() as f64) };
    outcome("order-2 triangularity", ratio <= 0.05, format!("excluded/retained mean ratio {ratio:.4}"))
}

/// Emitted block sizes agree with `K₁ = |grid|`, `K₂ = |{λ₂ < λ₁}|`, `K_f = α·K₁`.
pub fn check_counts(cfg: &DescriptorConfig) -> CheckOutcome {
    let net = match ScatteringNetwork::new(cfg) {
        Ok(net) => net,
        Err(e) => return outcome("coefficient counts", false, e.to_string()),
    };
    let expected = expected_counts(&net);
    let emitted = net.descriptor(&textures::white_noise(cfg.signal_length, 9, 1.0)).expect("length").counts();
    let ok = Block::ALL.iter().all(|&b| emitted.get(b) == expected[b as usize]);
    outcome("coefficient counts", ok, format!("emitted {emitted:?}"))
}

/// Block sizes predicted from the bank grids alone, in [`Block::ALL`] order.
pub fn expected_counts(net: &ScatteringNetwork) -> [usize; 5] {
    let cfg = net.config();
    let k1 = net.primary_bank().len();
    let count_pairs = |first: &[f64]| {
        net.envelope_bank()
            .map_or(0, |env| first.iter().map(|&l1| env.lambda_grid().iter().filter(|&&l2| l2 < l1).count()).sum())
    };
    let k2 = if cfg.include_order2 { count_pairs(net.primary_bank().lambda_grid()) } else { 0 };
    let kf = if cfg.include_freq_scattering { cfg.alpha * k1 } else { 0 };
    let (d1, d2) = match net.dyadic_bank() {
        Some(dy) => (dy.len(), if cfg.dyadic_extra_order2 { count_pairs(dy.lambda_grid()) } else { 0 }),
        None => (0, 0),
    };
    [k1, k2, kf, d1, d2]
}

/// Runs every check at [`SELF_TEST_LENGTH`] (or the configured length if smaller).
pub fn run_battery(cfg: &DescriptorConfig) -> Vec<CheckOutcome> {
    let small = reduced_config(cfg);
    vec![
        check_frame(&small),
        check_energy(&small),
        check_invariance(&small),
        check_adjoint(&small),
        check_finite_differences(&small),
        check_triangularity(&small),
        check_counts(&small),
    ]
}
