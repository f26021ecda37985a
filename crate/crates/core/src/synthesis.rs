//! Synthesis of signals whose scattering descriptor matches a target.
//!
//! Minimises `E(x) = ½‖Ŝx − Ŝy‖²` from a seeded white-noise start, either with
//! fixed-step gradient descent `x ← x − γ Jᵀr` or with Levenberg-Marquardt
//! steps `x ← x − Jᵀ(JJᵀ + μI)⁻¹ r`. The Jacobian is fat (M ≪ N), so the
//! damped system is solved in descriptor space and the step is the
//! minimum-norm update.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::DescriptorConfig;
use crate::error::{Error, Result};
use crate::jacobian::{ForwardCache, ScatteringJacobian, DEFAULT_DENSE_CAP};
use crate::scattering::{ScatteringNetwork, ScatteringVector, SignalStats};
use crate::textures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[serde(alias = "gradient_descent")]
    Gd,
    Lma,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" | "gradient-descent" => Ok(Optimizer::Gd),
            "lma" | "lm" => Ok(Optimizer::Lma),
            other => Err(Error::InvalidParameter(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScale {
    /// Mean and variance of the noise start equal those recorded in the target.
    #[default]
    MatchTargetVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub optimizer: Optimizer,
    /// Fixed gradient step. `None`: `0.1·‖target‖/‖Jᵀr₀‖` at the first step.
    #[serde(default)]
    pub step_gamma: Option<f64>,
    /// Initial damping. `None`: `1e-3·trace(JJᵀ)/M` at the first step.
    #[serde(default)]
    pub damping_mu: Option<f64>,
    pub damping_decrease: f64,
    pub damping_increase: f64,
    pub max_retries: usize,
    pub max_iterations: usize,
    pub target_relative_error: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub init_scale: InitScale,
    pub dense_cap: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            optimizer: Optimizer::Lma,
            step_gamma: None,
            damping_mu: None,
            damping_decrease: 0.3,
            damping_increase: 10.0,
            max_retries: 8,
            max_iterations: 100,
            target_relative_error: 1e-2,
            rng_seed: 0,
            init_scale: InitScale::MatchTargetVariance,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if let Some(g) = self.step_gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return bad("step_gamma must be finite and >= 0");
            }
        }
        if let Some(mu) = self.damping_mu {
            if !(mu >= 0.0 && mu.is_finite()) {
                return bad("damping_mu must be finite and >= 0");
            }
        }
        if !(self.target_relative_error > 0.0 && self.target_relative_error < 1.0) {
            return bad("target_relative_error must be in (0, 1)");
        }
        if !(self.damping_decrease > 0.0 && self.damping_decrease < 1.0) {
            return bad("damping_decrease must be in (0, 1)");
        }
        if self.damping_increase.is_nan() || self.damping_increase <= 1.0 {
            return bad("damping_increase must be > 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisState {
    pub iterate: Vec<f64>,
    pub iteration: usize,
    /// `‖Ŝxₙ − Ŝy‖/‖Ŝy‖` for n = 0..=iteration.
    pub error_history: Vec<f64>,
    pub current_damping: Option<f64>,
    pub step_gamma: Option<f64>,
    /// Descriptor of `iterate`.
    pub descriptor: Vec<f64>,
    /// Gradient steps that failed to decrease the error.
    pub non_descent_steps: usize,
}

impl SynthesisState {
    pub fn relative_error(&self) -> f64 {
        *self.error_history.last().expect("history is never empty")
    }
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub relative_error: f64,
    pub damping: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The damping loop ran out of retries without a decrease.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub state: SynthesisState,
    pub stop_reason: StopReason,
}

/// `(½‖Ŝx − target‖², ‖Ŝx − target‖/‖target‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub relative_error: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(current: &[f64], target: &[f64]) -> Vec<f64> {
    current.iter().zip(target).map(|(a, b)| a - b).collect()
}

/// `Jᵀ (JJᵀ + μI)⁻¹ r`, the damped minimum-norm Gauss-Newton step.
pub fn damped_min_norm_step(jac: &ScatteringJacobian, gram: &DMatrix<f64>, r: &[f64], mu: f64) -> Option<Vec<f64>> {
    let m = jac.rows();
    let mut a = gram.clone();
    for i in 0..m {
        a[(i, i)] += mu;
    }
    let chol = Cholesky::new(a)?;
    let w = chol.solve(&DVector::from_column_slice(r));
    if w.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(jac.apply_transpose(w.as_slice()))
}

/// Binds a network, a target descriptor and optimiser settings.
pub struct Synthesizer<'a> {
    net: &'a ScatteringNetwork,
    target: &'a ScatteringVector,
    target_norm: f64,
    cfg: SynthesisConfig,
}

impl<'a> Synthesizer<'a> {
    pub fn new(net: &'a ScatteringNetwork, target: &'a ScatteringVector, cfg: SynthesisConfig) -> Result<Self> {
        cfg.validate()?;
        if target.config_digest != net.digest() || target.len() != net.len() {
            return Err(Error::DigestMismatch { left: net.digest().to_string(), right: target.config_digest.clone() });
        }
        Ok(Synthesizer { net, target, target_norm: target.norm(), cfg })
    }

    pub fn config(&self) -> &SynthesisConfig {
        &self.cfg
    }

    fn relative(&self, diff_norm: f64) -> f64 {
        if self.target_norm == 0.0 {
            0.0
        } else {
            diff_norm / self.target_norm
        }
    }

    pub fn objective(&self, x: &[f64]) -> Result<Objective> {
        let s = self.net.descriptor(x)?;
        let d = norm(&residual(&s.values, &self.target.values));
        Ok(Objective { value: 0.5 * d * d, relative_error: self.relative(d) })
    }

    /// State at an arbitrary starting signal.
    pub fn state_at(&self, x: Vec<f64>) -> Result<SynthesisState> {
        let descriptor = self.net.descriptor(&x)?.values;
        let err = self.relative(norm(&residual(&descriptor, &self.target.values)));
        Ok(SynthesisState {
            iterate: x,
            iteration: 0,
            error_history: vec![err],
            current_damping: self.cfg.damping_mu,
            step_gamma: self.cfg.step_gamma,
            descriptor,
            non_descent_steps: 0,
        })
    }

    /// Seeded white Gaussian noise with the target's recorded mean and variance.
    pub fn initial_signal(&self) -> Vec<f64> {
        let n = self.net.signal_length();
        let stats = self.target.source.unwrap_or(SignalStats { mean: 0.0, variance: 1.0 });
        let mut rng = textures::rng(self.cfg.rng_seed);
        let raw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = SignalStats::of(&raw);
        let scale = if s.variance > 0.0 { (stats.variance / s.variance).sqrt() } else { 0.0 };
        raw.iter().map(|v| stats.mean + (v - s.mean) * scale).collect()
    }

    pub fn initial_state(&self) -> Result<SynthesisState> {
        self.state_at(self.initial_signal())
    }

    fn advance(&self, state: &SynthesisState, iterate: Vec<f64>, descriptor: Vec<f64>, err: f64) -> SynthesisState {
        let mut error_history = state.error_history.clone();
        error_history.push(err);
        SynthesisState {
            iterate,
            iteration: state.iteration + 1,
            error_history,
            current_damping: state.current_damping,
            step_gamma: state.step_gamma,
            descriptor,
            non_descent_steps: state.non_descent_steps,
        }
    }

    /// `x ← x − γ Jᵀ(Ŝx − Ŝy)`.
    pub fn gd_step(&self, state: &SynthesisState) -> Result<SynthesisState> {
        let r = residual(&state.descriptor, &self.target.values);
        let grad = ForwardCache::new(self.net, &state.iterate)?.vjp(&r)?;
        let gamma = match state.step_gamma {
            Some(g) => g,
            None => {
                let g = norm(&grad);
                if g > 0.0 {
                    0.1 * self.target_norm / g
                } else {
                    0.0
                }
            }
        };
        let next: Vec<f64> = state.iterate.iter().zip(&grad).map(|(x, g)| x - gamma * g).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIterate { iteration: state.iteration + 1 });
        }
        let descriptor = self.net.descriptor(&next)?.values;
        let err = self.relative(norm(&residual(&descriptor, &self.target.values)));
        if !err.is_finite() {
            return Err(Error::NonFiniteIterate { iteration: state.iteration + 1 });
        }
        let mut out = self.advance(state, next, descriptor, err);
        out.step_gamma = Some(gamma);
        if err > state.relative_error() && state.relative_error() > 1e-6 {
            out.non_descent_steps += 1;
        }
        Ok(out)
    }

    /// One accepted Levenberg-Marquardt step, retrying with larger damping
    /// until the residual decreases.
    pub fn lma_step(&self, state: &SynthesisState) -> Result<SynthesisState> {
        let r = residual(&state.descriptor, &self.target.values);
        let r_norm = norm(&r);
        if r_norm == 0.0 {
            let mut out = self.advance(state, state.iterate.clone(), state.descriptor.clone(), 0.0);
            out.current_damping = state.current_damping;
            return Ok(out);
        }
        let jac = ForwardCache::new(self.net, &state.iterate)?.dense(self.cfg.dense_cap)?;
        if !jac.is_finite() {
            return Err(Error::NonFiniteIterate { iteration: state.iteration });
        }
        let gram = jac.gram();
        let m = jac.rows() as f64;
        let trace_scale = gram.trace() / m;
        let floor = 1e-15 * trace_scale;
        let mut mu = state.current_damping.unwrap_or(1e-3 * trace_scale).max(floor);
        let current = state.relative_error();
        let mut any_solved = false;

        for _ in 0..=self.cfg.max_retries {
            if let Some(step) = damped_min_norm_step(&jac, &gram, &r, mu) {
                any_solved = true;
                let next: Vec<f64> = state.iterate.iter().zip(&step).map(|(x, s)| x - s).collect();
                if next.iter().all(|v| v.is_finite()) {
                    let descriptor = self.net.descriptor(&next)?.values;
                    let err = self.relative(norm(&residual(&descriptor, &self.target.values)));
                    if err < current {
                        let mut out = self.advance(state, next, descriptor, err);
                        out.current_damping = Some((mu * self.cfg.damping_decrease).max(floor));
                        return Ok(out);
                    }
                }
            }
            mu *= self.cfg.damping_increase;
        }
        if any_solved {
            Err(Error::RetryExhausted { retries: self.cfg.max_retries, damping: mu })
        } else {
            Err(Error::SingularSystem { damping: mu })
        }
    }

    pub fn step(&self, state: &SynthesisState) -> Result<SynthesisState> {
        match self.cfg.optimizer {
            Optimizer::Gd => self.gd_step(state),
            Optimizer::Lma => self.lma_step(state),
        }
    }

    /// Iterates from the seeded noise start until the target error or the
    /// iteration cap; `observe` sees every recorded iteration including 0.
    pub fn run(&self, mut observe: impl FnMut(&IterationRecord)) -> Result<SynthesisOutcome> {
        let clock = Instant::now();
        let mut state = self.initial_state()?;
        let record = |s: &SynthesisState| IterationRecord {
            iteration: s.iteration,
            relative_error: s.relative_error(),
            damping: s.current_damping,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        };
        observe(&record(&state));
        loop {
            if state.relative_error() <= self.cfg.target_relative_error {
                return Ok(SynthesisOutcome { state, stop_reason: StopReason::Converged });
            }
            if state.iteration >= self.cfg.max_iterations {
                return Ok(SynthesisOutcome { state, stop_reason: StopReason::MaxIterations });
            }
            match self.step(&state) {
                Ok(next) => state = next,
                Err(Error::RetryExhausted { .. }) | Err(Error::SingularSystem { .. }) => {
                    return Ok(SynthesisOutcome { state, stop_reason: StopReason::Stalled })
                }
                Err(e) => return Err(e),
            }
            observe(&record(&state));
        }
    }
}

pub fn objective(x: &[f64], target: &ScatteringVector, cfg: &DescriptorConfig) -> Result<Objective> {
    let net = ScatteringNetwork::new(cfg)?;
    Synthesizer::new(&net, target, SynthesisConfig::default())?.objective(x)
}

/// Runs a full synthesis; returns the final signal and state.
pub fn synthesize(
    target: &ScatteringVector,
    n_samples: usize,
    desc_cfg: &DescriptorConfig,
    cfg: &SynthesisConfig,
) -> Result<(Vec<f64>, SynthesisState)> {
    if n_samples != desc_cfg.signal_length {
        return Err(Error::LengthMismatch { expected: desc_cfg.signal_length, actual: n_samples });
    }
    let net = ScatteringNetwork::new(desc_cfg)?;
    let outcome = Synthesizer::new(&net, target, cfg.clone())?.run(|_| {})?;
    Ok((outcome.state.iterate.clone(), outcome.state))
}
