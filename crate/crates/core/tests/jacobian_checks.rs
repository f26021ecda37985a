use scatsynth::fft::FftPair;
use scatsynth::{textures, DescriptorConfig, ForwardCache, ScatteringJacobian, ScatteringNetwork};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn rel_dist(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}

#[test]
fn adjoint_identity_holds_for_random_pairs() {
    let n = 512;
    let net = ScatteringNetwork::new(&DescriptorConfig::new(n)).unwrap();
    for seed in 0..5 {
        let x = textures::white_noise(n, seed, 1.0);
        let cache = ForwardCache::new(&net, &x).unwrap();
        let u = textures::white_noise(n, 50 + seed, 1.0);
        let w = textures::white_noise(net.len(), 90 + seed, 1.0);
        let lhs = dot(&cache.jvp(&u).unwrap(), &w);
        let rhs = dot(&u, &cache.vjp(&w).unwrap());
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "seed {seed}: {lhs} vs {rhs}");
    }
}

#[test]
fn central_differences_match_jvp_on_smooth_points() {
    let n = 512;
    let net = ScatteringNetwork::new(&DescriptorConfig::new(n)).unwrap();
    for seed in 0..10 {
        let x = textures::smooth_noise(n, 200 + seed);
        let mut v = textures::white_noise(n, 300 + seed, 1.0);
        let vn = norm(&v);
        v.iter_mut().for_each(|e| *e /= vn);
        let h = 1e-5 * norm(&x);
        let step = |sign: f64| -> Vec<f64> { x.iter().zip(&v).map(|(a, b)| a + sign * h * b).collect() };
        let plus = net.descriptor(&step(1.0)).unwrap().values;
        let minus = net.descriptor(&step(-1.0)).unwrap().values;
        let fd: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
        let jv = ForwardCache::new(&net, &x).unwrap().jvp(&v).unwrap();
        let err = rel_dist(&fd, &jv);
        assert!(err <= 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn dense_rows_agree_with_vjp() {
    let n = 512;
    let cfg = DescriptorConfig::new(n).with_q(1, 1).with_alpha(1);
    let net = ScatteringNetwork::new(&cfg).unwrap();
    assert!((25..=40).contains(&net.len()), "M = {}", net.len());
    let x = textures::am_noise(n, 6.0, 0.7, 4);
    let cache = ForwardCache::new(&net, &x).unwrap();
    let jac = cache.dense(4096).unwrap();
    for seed in 0..3 {
        let w = textures::white_noise(net.len(), seed, 1.0);
        let err = rel_dist(&jac.apply_transpose(&w), &cache.vjp(&w).unwrap());
        assert!(err <= 1e-10, "relative error {err}");
    }
}

#[test]
fn order1_rows_of_a_tone_live_on_the_tone_frequency() {
    let n = 1024;
    let net = ScatteringNetwork::new(&DescriptorConfig::new(n)).unwrap();
    let f = 90;
    let x = textures::tone(n, f as f64, 0.8);
    let jac = ForwardCache::new(&net, &x).unwrap().dense(4096).unwrap();
    let fft = FftPair::new(n);
    let bank = net.primary_bank();
    for b in 0..bank.len() {
        let gain = bank.filter(b)[f];
        if gain < 1e-6 * bank.filter(b).iter().cloned().fold(0.0, f64::max) {
            continue;
        }
        let spec = fft.forward_real(jac.row(b));
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        let on_line = spec[f].norm_sqr() + spec[n - f].norm_sqr();
        assert!(total > 0.0);
        assert!((total - on_line) <= 1e-8 * total, "band {b}: off-support fraction {}", 1.0 - on_line / total);
    }
}

#[test]
fn dense_dump_round_trips_through_the_binary_format() {
    let n = 256;
    let net = ScatteringNetwork::new(&DescriptorConfig::new(n).with_q(2, 1)).unwrap();
    let jac = ForwardCache::new(&net, &textures::white_noise(n, 1, 1.0)).unwrap().dense(4096).unwrap();
    let mut bytes = Vec::new();
    jac.write_binary(&mut bytes).unwrap();
    assert_eq!(bytes.len(), 16 + 8 * jac.rows() * jac.cols());
    assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize, jac.rows());
    let back = ScatteringJacobian::read_binary(&bytes).unwrap();
    assert_eq!(back.as_slice(), jac.as_slice());
}
