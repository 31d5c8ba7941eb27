//! Honest and adversarial provers.
//!
//! The honest prover stands in for a quantum estimator: it computes
//! `v_i = M^i e₁` exactly in double precision and perturbs each coordinate
//! by bounded uniform noise of at most `δ/n`, which is the accuracy the
//! estimator promises. With probability `failure_prob` it instead emits an
//! unrelated stream, modelling estimator failure.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::fxlinalg::{grid_precision, norm_l2, power_trajectory, FxVector, LinalgError, Matrix};
use crate::instance::{givens_product, PoweringInstance};
use crate::protocol::ProofStream;
use crate::rng::rng_from_seed;

/// Largest estimator failure probability the honest prover accepts.
pub const MAX_FAILURE_PROB: f64 = 0.25;

/// Minimum distance `‖v′_T − v_T‖₂` that triggers the soundness guarantee.
pub const SOUNDNESS_DISTANCE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ProverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("per-coordinate error must be finite and non-negative, got {0}")]
    BadNoise(f64),
    #[error("failure probability {0} outside [0, {MAX_FAILURE_PROB}]")]
    BadFailureProb(f64),
    #[error("unknown adversary `{0}`")]
    UnknownStrategy(String),
    #[error("strategy parameter invalid: {0}")]
    BadParameter(String),
}

/// Accuracy contract of the simulated estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Bound on `|v′_i(j) − v_i(j)|`.
    pub per_coord_error: f64,
    pub failure_prob: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(per_coord_error: f64, failure_prob: f64, seed: u64) -> Result<Self, ProverError> {
        if !(per_coord_error.is_finite() && per_coord_error >= 0.0) {
            return Err(ProverError::BadNoise(per_coord_error));
        }
        if !(0.0..=MAX_FAILURE_PROB).contains(&failure_prob) {
            return Err(ProverError::BadFailureProb(failure_prob));
        }
        Ok(Self { per_coord_error, failure_prob, seed })
    }

    /// Noise-free, never failing.
    pub fn exact() -> Self {
        Self { per_coord_error: 0.0, failure_prob: 0.0, seed: 0 }
    }

    /// The full `δ/n` budget.
    pub fn calibrated(delta: f64, n: usize, seed: u64) -> Self {
        Self { per_coord_error: delta / n as f64, failure_prob: 0.0, seed }
    }

    pub fn with_failure_prob(self, failure_prob: f64) -> Result<Self, ProverError> {
        Self::new(self.per_coord_error, failure_prob, self.seed)
    }
}

fn stream_precision(inst: &PoweringInstance, delta: f64) -> Result<u32, ProverError> {
    Ok(grid_precision(delta, inst.n(), inst.steps().max(1))?)
}

fn quantize(values: &[f64], frac_bits: u32) -> Result<FxVector, ProverError> {
    Ok(FxVector::from_f64_nearest(values, frac_bits)?)
}

/// Emits `v′_0 = e₁` and then noisy estimates of `M^i e₁` for `i = 1..=T`.
///
/// When the estimator does not fail, every coordinate lands within
/// `per_coord_error` of the truth (noise is drawn from a range shrunk by the
/// grid step to leave room for rounding), so the stream is `δ`-good for
/// `per_coord_error ≤ δ/n`.
pub fn honest_prove(
    inst: &PoweringInstance,
    delta: f64,
    noise: &NoiseModel,
) -> Result<ProofStream, ProverError> {
    let noise = NoiseModel::new(noise.per_coord_error, noise.failure_prob, noise.seed)?;
    let p = stream_precision(inst, delta)?;
    let n = inst.n();
    let grid = 2f64.powi(-(p as i32));
    let mut rng = rng_from_seed(noise.seed);
    let failed = rng.gen::<f64>() < noise.failure_prob;

    let trajectory = power_trajectory(inst.matrix(), inst.steps());
    let mut vectors = Vec::with_capacity(trajectory.len());
    vectors.push(FxVector::basis(n, 0, p));
    let spread = (noise.per_coord_error - grid).max(0.0);
    for exact in &trajectory[1..] {
        let values: Vec<f64> = if failed {
            random_unit(n, &mut rng)
        } else if spread > 0.0 {
            exact.iter().map(|x| x + rng.gen_range(-spread..=spread)).collect()
        } else {
            exact.clone()
        };
        vectors.push(quantize(&values, p)?);
    }
    Ok(ProofStream::new(n, inst.steps(), p, vectors))
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let norm = norm_l2(&v);
    if norm == 0.0 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return e;
    }
    v.into_iter().map(|x| x / norm).collect()
}

/// A unit vector orthogonal to the (near-unit) vector `v`, or `−v` when `n = 1`.
pub fn orthogonal_unit(v: &[f64]) -> Vec<f64> {
    if v.len() == 1 {
        return vec![-v[0]];
    }
    let k = (0..v.len())
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .expect("nonempty");
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let scale = v[k] / vv;
    let mut u: Vec<f64> = v.iter().map(|x| -scale * x).collect();
    u[k] += 1.0;
    let norm = norm_l2(&u);
    u.into_iter().map(|x| x / norm).collect()
}

/// Cheating strategies. Each one documents whether it forces
/// `‖v′_T − v_T‖₂ ≥ 1/5`; see [`AdversaryStrategy::guarantees_far_final`].
#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryStrategy {
    /// Honest stream with `v′_T` swapped for a unit vector orthogonal to `v_T`.
    /// Far: distance `√2` (or 2 when `n = 1`).
    FinalSwap,
    /// `v′_i = v_i + i·bias·d` for a fixed unit direction `d`, so per-step
    /// residuals stay near `bias` while the endpoint moves `T·bias`.
    /// Default `bias = 1/(4T)`; far iff `T·bias ≥ 1/5`.
    Drift { bias: Option<f64> },
    /// Honest up to step `s`, then a unit vector orthogonal to `v_s`, then the
    /// true dynamics from that vector. Only the residual at step `s` is
    /// large. Default `s = ⌈T/2⌉`. Far: distance `√2`.
    SingleJump { step: Option<usize> },
    /// `N^i e₁` for a different orthogonal `N` (random if not given). Not
    /// guaranteed far.
    PlausibleDynamics { other: Option<Matrix> },
    /// Only the first `keep` vectors (default `T`). Always malformed.
    Truncate { keep: Option<usize> },
    /// Honest stream with `v′_0 ≠ e₁`. Always rejected.
    WrongV0,
}

impl AdversaryStrategy {
    pub const NAMES: [&'static str; 6] =
        ["final-swap", "drift", "single-jump", "plausible-dynamics", "truncate", "wrong-v0"];

    pub fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::FinalSwap => "final-swap",
            AdversaryStrategy::Drift { .. } => "drift",
            AdversaryStrategy::SingleJump { .. } => "single-jump",
            AdversaryStrategy::PlausibleDynamics { .. } => "plausible-dynamics",
            AdversaryStrategy::Truncate { .. } => "truncate",
            AdversaryStrategy::WrongV0 => "wrong-v0",
        }
    }

    /// Whether every stream this strategy emits for a `T`-step instance
    /// satisfies `‖v′_T − v_T‖₂ ≥ 1/5`.
    pub fn guarantees_far_final(&self, steps: usize) -> bool {
        match self {
            AdversaryStrategy::FinalSwap => true,
            AdversaryStrategy::SingleJump { .. } => steps >= 1,
            AdversaryStrategy::Drift { bias } => {
                steps >= 1 && drift_bias(*bias, steps) * steps as f64 >= SOUNDNESS_DISTANCE + 0.01
            }
            _ => false,
        }
    }
}

fn drift_bias(bias: Option<f64>, steps: usize) -> f64 {
    bias.unwrap_or(1.0 / (4.0 * steps.max(1) as f64))
}

impl FromStr for AdversaryStrategy {
    type Err = ProverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "final-swap" => AdversaryStrategy::FinalSwap,
            "drift" => AdversaryStrategy::Drift { bias: None },
            "single-jump" => AdversaryStrategy::SingleJump { step: None },
            "plausible-dynamics" => AdversaryStrategy::PlausibleDynamics { other: None },
            "truncate" => AdversaryStrategy::Truncate { keep: None },
            "wrong-v0" => AdversaryStrategy::WrongV0,
            other => return Err(ProverError::UnknownStrategy(other.to_string())),
        })
    }
}

impl fmt::Display for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds a cheating stream. `seed` only matters for strategies with a
/// random default (a random `N` for plausible dynamics).
pub fn adversarial_prove(
    inst: &PoweringInstance,
    delta: f64,
    strategy: &AdversaryStrategy,
    seed: u64,
) -> Result<ProofStream, ProverError> {
    let p = stream_precision(inst, delta)?;
    let n = inst.n();
    let steps = inst.steps();
    let mut traj = power_trajectory(inst.matrix(), steps);

    match strategy {
        AdversaryStrategy::FinalSwap => {
            traj[steps] = orthogonal_unit(&traj[steps]);
        }
        AdversaryStrategy::Drift { bias } => {
            let bias = drift_bias(*bias, steps);
            if !bias.is_finite() {
                return Err(ProverError::BadParameter(format!("drift bias {bias}")));
            }
            for (i, v) in traj.iter_mut().enumerate().skip(1) {
                v[n - 1] += i as f64 * bias;
            }
        }
        AdversaryStrategy::SingleJump { step } => {
            if steps == 0 {
                return Err(ProverError::BadParameter("single-jump needs T ≥ 1".into()));
            }
            let s = step.unwrap_or(steps.div_ceil(2));
            if s == 0 || s > steps {
                return Err(ProverError::BadParameter(format!("jump step {s} outside [1, {steps}]")));
            }
            let mut current = orthogonal_unit(&traj[s]);
            traj[s] = current.clone();
            for v in traj.iter_mut().skip(s + 1) {
                current = inst.matrix().mul_vec(&current)?;
                *v = current.clone();
            }
        }
        AdversaryStrategy::PlausibleDynamics { other } => {
            let other = match other {
                Some(m) => {
                    if m.dim() != n {
                        return Err(ProverError::BadParameter("dynamics dimension mismatch".into()));
                    }
                    m.clone()
                }
                None => givens_product(n, &mut rng_from_seed(seed)),
            };
            traj = power_trajectory(&other, steps);
        }
        AdversaryStrategy::Truncate { keep } => {
            let keep = keep.unwrap_or(steps);
            if keep > steps {
                return Err(ProverError::BadParameter(format!("truncate keeps {keep} of {} vectors", steps + 1)));
            }
            traj.truncate(keep);
        }
        AdversaryStrategy::WrongV0 => {
            let mut v0 = vec![0.0; n];
            if n > 1 {
                v0[1] = 1.0;
            } else {
                v0[0] = -1.0;
            }
            traj[0] = v0;
        }
    }

    let vectors = traj
        .iter()
        .map(|v| quantize(v, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProofStream::new(n, steps, p, vectors))
}

/// `max_{i ≥ 1} ‖v′_i − M^i e₁‖₂`, or `None` if the stream is not a
/// well-formed `(T+1)`-vector stream starting at `e₁`.
pub fn max_deviation(inst: &PoweringInstance, stream: &ProofStream) -> Option<f64> {
    let traj = power_trajectory(inst.matrix(), inst.steps());
    let vectors = stream.vectors();
    if vectors.len() != traj.len() || vectors.iter().any(|v| v.len() != inst.n()) {
        return None;
    }
    if vectors[0] != FxVector::basis(inst.n(), 0, vectors[0].frac_bits()) {
        return None;
    }
    Some(
        vectors
            .iter()
            .zip(&traj)
            .skip(1)
            .map(|(v, exact)| {
                let d: Vec<f64> = v.to_f64().iter().zip(exact).map(|(a, b)| a - b).collect();
                norm_l2(&d)
            })
            .fold(0.0, f64::max),
    )
}

/// Whether the stream is `δ`-good for the instance's matrix.
pub fn is_delta_good(inst: &PoweringInstance, stream: &ProofStream, delta: f64) -> bool {
    max_deviation(inst, stream).is_some_and(|d| d <= delta)
}

/// `‖v′_T − v_T‖₂` for a stream with at least `T+1` vectors.
pub fn final_distance(inst: &PoweringInstance, stream: &ProofStream) -> Option<f64> {
    let last = stream.vectors().get(inst.steps())?;
    let exact = crate::fxlinalg::power_oracle(inst.matrix(), inst.steps());
    let d: Vec<f64> = last.to_f64().iter().zip(&exact).map(|(a, b)| a - b).collect();
    Some(norm_l2(&d))
}
