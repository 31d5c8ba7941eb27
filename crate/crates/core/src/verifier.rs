//! One-pass verification of a proof stream.
//!
//! The verifier rounds `M` toward zero onto the stream grid, checks
//! `v′_0 = e₁`, and for each later vector folds the residual
//! `w_i = M̃ v′_{i−1} − v′_i` into eleven independent sketches
//! `Δ_t = Σ α^t_{i,j} w_{i,j}`. All sketch arithmetic is exact at twice the
//! stream precision. Only the previous vector is buffered.

use std::fmt;
use std::io::Read;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::fxlinalg::{
    grid_precision, mat_vec, round_matrix_at, FxMatrix, FxScalar, FxVector, LinalgError,
};
use crate::instance::{default_delta, InstanceError, PoweringInstance};
use crate::kwise::{fresh_sampler, index_bits, BitSource, KwiseError, SignSampler};
use crate::protocol::{ProofStream, StreamError, StreamReader, RANGE_BITS};

pub const REPETITIONS: usize = 11;
pub const THRESHOLD_FACTOR: f64 = 30.0;
pub const DECISION_HI: f64 = 0.6;
pub const DECISION_LO: f64 = 0.4;

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Kwise(#[from] KwiseError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("configuration invalid: {0}")]
    Config(String),
    #[error("n = {n}, T = {steps} at {frac_bits} bits could overflow the 128-bit sketch")]
    Capacity { n: usize, steps: usize, frac_bits: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifierConfig {
    pub repetitions: usize,
    pub threshold_factor: f64,
    pub decision_hi: f64,
    pub decision_lo: f64,
    pub delta: f64,
}

impl VerifierConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            repetitions: REPETITIONS,
            threshold_factor: THRESHOLD_FACTOR,
            decision_hi: DECISION_HI,
            decision_lo: DECISION_LO,
            delta,
        }
    }

    /// Default `δ = min(1/(10⁴T²), 1/10)`; `T = 0` uses the `T = 1` value.
    pub fn for_steps(steps: usize) -> Result<Self, VerifierError> {
        Ok(Self::with_delta(default_delta(steps.max(1))?))
    }

    /// Abort threshold `threshold_factor · T · δ`.
    pub fn threshold(&self, steps: usize) -> f64 {
        self.threshold_factor * steps as f64 * self.delta
    }

    /// `repetitions · 4 · ⌈log₂(nT+1)⌉`.
    pub fn randomness_budget(&self, n: usize, steps: usize) -> u64 {
        if steps == 0 {
            return 0;
        }
        self.repetitions as u64 * 4 * index_bits(n, steps).max(1) as u64
    }

    fn validate(&self) -> Result<(), VerifierError> {
        if self.repetitions == 0 {
            return Err(VerifierError::Config("at least one repetition".into()));
        }
        let finite = [self.threshold_factor, self.decision_hi, self.decision_lo];
        if finite.iter().any(|x| !x.is_finite()) || self.threshold_factor < 0.0 {
            return Err(VerifierError::Config("thresholds must be finite".into()));
        }
        if self.decision_lo > self.decision_hi {
            return Err(VerifierError::Config("decision_lo above decision_hi".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    One,
    Zero,
    Abort,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::One => 0,
            Verdict::Zero => 1,
            Verdict::Abort => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::One => "ONE",
            Verdict::Zero => "ZERO",
            Verdict::Abort => "ABORT",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AbortReason {
    Malformed(String),
    WrongInitialVector,
    /// 0-based indices of the sketches that exceeded the threshold.
    ConsistencyCheck { iterations: Vec<usize> },
    /// The projection mass fell strictly between the decision thresholds.
    Undecided { mass: f64 },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::Malformed(msg) => write!(f, "malformed stream: {msg}"),
            AbortReason::WrongInitialVector => f.write_str("first vector is not e1"),
            AbortReason::ConsistencyCheck { iterations } => {
                write!(f, "consistency check failed in {} of the sketches", iterations.len())
            }
            AbortReason::Undecided { mass } => write!(f, "projection mass {mass} in the gap"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOutcome {
    pub verdict: Verdict,
    pub reason: Option<AbortReason>,
    /// Final `Δ_t` values at `2p` fractional bits (empty if the stream was cut short).
    pub deltas: Vec<FxScalar>,
    /// 0-based sketches with `|Δ_t| > 30Tδ`.
    pub fired: Vec<usize>,
    /// `‖Π v′_T‖₂²`, when the whole stream was read.
    pub projection_mass: Option<f64>,
    pub random_bits: u64,
    pub vectors_read: usize,
    pub samplers: Vec<SignSampler>,
}

impl ProtocolOutcome {
    fn abort(reason: AbortReason, random_bits: u64, vectors_read: usize, samplers: Vec<SignSampler>) -> Self {
        Self {
            verdict: Verdict::Abort,
            reason: Some(reason),
            deltas: Vec::new(),
            fired: Vec::new(),
            projection_mass: None,
            random_bits,
            vectors_read,
            samplers,
        }
    }
}

/// `n·T·(n·m̃ + 2^p)·2^{p+2}` bounds every partial sketch when stream values
/// lie in `[-4, 4]` and `|M̃| ≤ m̃·2^{-p}`; it must stay below `2^126`.
fn check_capacity(mt: &FxMatrix, n: usize, steps: usize) -> Result<(), VerifierError> {
    let p = mt.frac_bits();
    let per_entry = (n as f64 * mt.max_abs_raw() as f64 + 2f64.powi(p as i32))
        * 2f64.powi((p + RANGE_BITS) as i32);
    let total = n as f64 * steps.max(1) as f64 * per_entry;
    if total < 2f64.powi(126) {
        Ok(())
    } else {
        Err(VerifierError::Capacity { n, steps, frac_bits: p })
    }
}

fn check_vector(v: &FxVector, n: usize, p: u32, index: usize) -> Result<(), String> {
    if v.len() != n {
        return Err(format!("vector {index} has length {}, expected {n}", v.len()));
    }
    if v.frac_bits() != p {
        return Err(format!("vector {index} at {} bits, expected {p}", v.frac_bits()));
    }
    let bound = 1u64 << (p + RANGE_BITS);
    if let Some(j) = v.raw().iter().position(|r| r.unsigned_abs() > bound) {
        return Err(format!("vector {index} coordinate {} outside [-4, 4]", j + 1));
    }
    Ok(())
}

/// Exact `x ≥ bound` with `bound` taken at its binary value.
fn at_least(x: FxScalar, bound: f64) -> bool {
    BigRational::from_float(bound).is_some_and(|b| x.to_rational() >= b)
}

fn at_most(x: FxScalar, bound: f64) -> bool {
    BigRational::from_float(bound).is_some_and(|b| x.to_rational() <= b)
}

/// Grid precision used for an instance under `cfg`.
pub fn stream_precision(inst: &PoweringInstance, cfg: &VerifierConfig) -> Result<u32, VerifierError> {
    Ok(grid_precision(cfg.delta, inst.n(), inst.steps().max(1))?)
}

/// Verifies a one-pass source of vectors.
///
/// Errors are reserved for configuration problems. Anything wrong with the
/// stream itself yields an `ABORT` outcome.
pub fn verify_stream<I, B>(
    inst: &PoweringInstance,
    cfg: &VerifierConfig,
    stream: I,
    bits: &mut B,
) -> Result<ProtocolOutcome, VerifierError>
where
    I: IntoIterator<Item = Result<FxVector, StreamError>>,
    B: BitSource + ?Sized,
{
    cfg.validate()?;
    let n = inst.n();
    let steps = inst.steps();
    let p = stream_precision(inst, cfg)?;
    let mt = round_matrix_at(inst.matrix(), p)?;
    check_capacity(&mt, n, steps)?;

    let bits_before = bits.bits_consumed();
    let mut samplers = Vec::new();
    if steps > 0 {
        for _ in 0..cfg.repetitions {
            samplers.push(fresh_sampler(bits, n, steps)?);
        }
    }
    let random_bits = bits.bits_consumed() - bits_before;

    let mut stream = stream.into_iter();
    let mut read = 0usize;
    macro_rules! next_vector {
        ($index:expr) => {
            match stream.next() {
                None => {
                    let msg = format!("stream ended after {read} of {} vectors", steps + 1);
                    return Ok(ProtocolOutcome::abort(AbortReason::Malformed(msg), random_bits, read, samplers));
                }
                Some(Err(e)) => {
                    return Ok(ProtocolOutcome::abort(AbortReason::Malformed(e.to_string()), random_bits, read, samplers));
                }
                Some(Ok(v)) => {
                    read += 1;
                    if let Err(msg) = check_vector(&v, n, p, $index) {
                        return Ok(ProtocolOutcome::abort(AbortReason::Malformed(msg), random_bits, read, samplers));
                    }
                    v
                }
            }
        };
    }

    let mut prev = next_vector!(0);
    if prev != FxVector::basis(n, 0, p) {
        return Ok(ProtocolOutcome::abort(AbortReason::WrongInitialVector, random_bits, read, samplers));
    }

    let mut acc = vec![0i128; samplers.len()];
    for i in 1..=steps {
        let current = next_vector!(i);
        let product = mat_vec(&mt, &prev)?;
        for j in 0..n {
            let w = product.raw()[j]
                .checked_sub((current.raw()[j] as i128) << p)
                .ok_or(LinalgError::Overflow)?;
            if w == 0 {
                continue;
            }
            for (a, s) in acc.iter_mut().zip(&samplers) {
                let term = if s.sign(i, j + 1) > 0 { w } else { -w };
                *a = a.checked_add(term).ok_or(LinalgError::Overflow)?;
            }
        }
        prev = current;
    }

    match stream.next() {
        None => {}
        Some(Err(e)) => {
            return Ok(ProtocolOutcome::abort(AbortReason::Malformed(e.to_string()), random_bits, read, samplers));
        }
        Some(Ok(_)) => {
            let msg = format!("more than {} vectors", steps + 1);
            return Ok(ProtocolOutcome::abort(AbortReason::Malformed(msg), random_bits, read + 1, samplers));
        }
    }

    let deltas: Vec<FxScalar> = acc.iter().map(|&r| FxScalar::new(r, 2 * p)).collect();
    let threshold = cfg.threshold(steps);
    let fired: Vec<usize> = deltas
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs_exceeds(threshold))
        .map(|(t, _)| t)
        .collect();

    let mass_raw = inst
        .proj()
        .iter()
        .map(|&j| {
            let r = prev.raw()[j - 1] as i128;
            r * r
        })
        .sum::<i128>();
    let mass = FxScalar::new(mass_raw, 2 * p);
    let projection_mass = Some(mass.to_f64());

    let (verdict, reason) = if !fired.is_empty() {
        (Verdict::Abort, Some(AbortReason::ConsistencyCheck { iterations: fired.clone() }))
    } else if at_least(mass, cfg.decision_hi) {
        (Verdict::One, None)
    } else if at_most(mass, cfg.decision_lo) {
        (Verdict::Zero, None)
    } else {
        (Verdict::Abort, Some(AbortReason::Undecided { mass: mass.to_f64() }))
    };

    Ok(ProtocolOutcome {
        verdict,
        reason,
        deltas,
        fired,
        projection_mass,
        random_bits,
        vectors_read: read,
        samplers,
    })
}

/// Verifies an encoded proof. The header must match the instance and the
/// precision `cfg` implies, or the run aborts before any payload is read.
pub fn verify_wire<R, B>(
    inst: &PoweringInstance,
    cfg: &VerifierConfig,
    reader: R,
    bits: &mut B,
) -> Result<ProtocolOutcome, VerifierError>
where
    R: Read,
    B: BitSource + ?Sized,
{
    cfg.validate()?;
    let p = stream_precision(inst, cfg)?;
    let malformed = |msg: String| ProtocolOutcome::abort(AbortReason::Malformed(msg), 0, 0, Vec::new());
    let reader = match StreamReader::open(reader) {
        Ok(r) => r,
        Err(e) => return Ok(malformed(e.to_string())),
    };
    let h = reader.header();
    if h.n as usize != inst.n() || h.steps as usize != inst.steps() || h.frac_bits as u32 != p {
        return Ok(malformed(format!(
            "header (n={}, T={}, p={}) does not match instance (n={}, T={}, p={p})",
            h.n,
            h.steps,
            h.frac_bits,
            inst.n(),
            inst.steps()
        )));
    }
    verify_stream(inst, cfg, reader, bits)
}

/// Verifies an in-memory proof.
pub fn verify_proof<B: BitSource + ?Sized>(
    inst: &PoweringInstance,
    cfg: &VerifierConfig,
    proof: &ProofStream,
    bits: &mut B,
) -> Result<ProtocolOutcome, VerifierError> {
    verify_stream(inst, cfg, proof.vectors().iter().cloned().map(Ok), bits)
}

/// Reference for one sketch: materializes `w` in full with rational
/// arithmetic and returns `⟨α, w⟩` at `2p` fractional bits.
///
/// The stream must hold `T+1` well-formed vectors.
pub fn two_pass_delta_oracle(
    inst: &PoweringInstance,
    cfg: &VerifierConfig,
    proof: &ProofStream,
    sampler: &SignSampler,
) -> Result<FxScalar, VerifierError> {
    let n = inst.n();
    let steps = inst.steps();
    let p = stream_precision(inst, cfg)?;
    let mt = round_matrix_at(inst.matrix(), p)?;
    let vectors = proof.vectors();
    if vectors.len() != steps + 1 || vectors.iter().any(|v| v.len() != n || v.frac_bits() != p) {
        return Err(VerifierError::Config("oracle needs a well-formed stream".into()));
    }

    let rational: Vec<Vec<BigRational>> =
        vectors.iter().map(|v| (0..n).map(|j| v.get(j).to_rational()).collect()).collect();
    let mut w = Vec::with_capacity(n * steps);
    for i in 1..=steps {
        for j in 0..n {
            let mut entry = -rational[i][j].clone();
            for (k, prev) in rational[i - 1].iter().enumerate() {
                entry += mt.get(j, k).to_rational() * prev;
            }
            w.push(entry);
        }
    }

    let mut total = BigRational::zero();
    for i in 1..=steps {
        for j in 1..=n {
            let entry = &w[(i - 1) * n + (j - 1)];
            if sampler.sample_sign(i, j)? > 0 {
                total += entry;
            } else {
                total -= entry;
            }
        }
    }
    Ok(FxScalar::from_rational(&total, 2 * p)?)
}
