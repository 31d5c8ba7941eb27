//! Unitary matrix powering instances, their text format, generators, and the
//! promise-gap label.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::fxlinalg::{power_oracle, LinalgError, Matrix};
use crate::reduction::{self, ReductionError};
use crate::rng::rng_from_seed;

/// Largest accepted step count.
pub const MAX_STEPS: usize = 1 << 16;

/// Allowed `‖MᵀM − I‖_max` for an input matrix.
pub const UNITARY_TOLERANCE: f64 = 1e-9;

/// Promise thresholds on `‖Π M^T e₁‖₂²`.
pub const YES_THRESHOLD: f64 = 0.8;
pub const NO_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("matrix is not orthogonal: ‖MᵀM − I‖_max = {0:e}")]
    NotOrthogonal(f64),
    #[error("step count {0} exceeds the bound {MAX_STEPS}")]
    TooManySteps(usize),
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error("projection index {index} outside [1, {n}]")]
    ProjectionOutOfRange { index: usize, n: usize },
    #[error("empty matrix")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An `n × n` orthogonal matrix `M`, a step count `T`, and the support of the
/// coordinate projection `Π` (sorted, 1-based).
#[derive(Clone, Debug, PartialEq)]
pub struct PoweringInstance {
    matrix: Matrix,
    steps: usize,
    proj: Vec<usize>,
}

impl PoweringInstance {
    /// Validates orthogonality, the step bound, and the projection support.
    ///
    /// `T = 0` is accepted: it is what the circuit reduction produces for an
    /// empty circuit, and the verifier decides such instances on `v′₀` alone.
    pub fn new(
        matrix: Matrix,
        steps: usize,
        proj: impl IntoIterator<Item = usize>,
    ) -> Result<Self, InstanceError> {
        let n = matrix.dim();
        if n == 0 {
            return Err(InstanceError::Empty);
        }
        if steps > MAX_STEPS {
            return Err(InstanceError::TooManySteps(steps));
        }
        let defect = matrix.orthogonality_defect();
        if defect.is_nan() || defect > UNITARY_TOLERANCE {
            return Err(InstanceError::NotOrthogonal(defect));
        }
        let mut proj: Vec<usize> = proj.into_iter().collect();
        if let Some(&index) = proj.iter().find(|&&j| j == 0 || j > n) {
            return Err(InstanceError::ProjectionOutOfRange { index, n });
        }
        proj.sort_unstable();
        proj.dedup();
        Ok(Self { matrix, steps, proj })
    }

    pub fn n(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// 1-based support of `Π`.
    pub fn proj(&self) -> &[usize] {
        &self.proj
    }

    /// 0-based membership mask for `Π`.
    pub fn proj_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        for &j in &self.proj {
            mask[j - 1] = true;
        }
        mask
    }

    /// `‖Π v‖₂² = Σ_{j ∈ Π} v_j²`.
    pub fn projection_mass(&self, v: &[f64]) -> f64 {
        self.proj.iter().map(|&j| v[j - 1] * v[j - 1]).sum()
    }

    /// Parses the text format: `n T`, then `n` rows of `n` decimals, then a
    /// final line of 1-based projection indices (possibly empty). Blank lines
    /// and lines starting with `#` are ignored, except that an empty final
    /// line is read as an empty projection.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.starts_with('#'));
        let (line, header) = next_content(&mut lines).ok_or(InstanceError::Parse {
            line: 1,
            message: "missing `n T` header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(line, "header must be `n T`"));
        }
        let n: usize = fields[0].parse().map_err(|_| parse_err(line, "bad dimension"))?;
        let steps: usize = fields[1].parse().map_err(|_| parse_err(line, "bad step count"))?;
        if n == 0 {
            return Err(InstanceError::Empty);
        }

        let mut data = Vec::with_capacity(n * n);
        for row in 0..n {
            let (line, text) = next_content(&mut lines)
                .ok_or_else(|| parse_err(0, &format!("missing matrix row {}", row + 1)))?;
            let before = data.len();
            for tok in text.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| parse_err(line, &format!("bad entry `{tok}`")))?;
                data.push(v);
            }
            if data.len() - before != n {
                return Err(parse_err(line, &format!("expected {n} entries, found {}", data.len() - before)));
            }
        }

        let mut proj = Vec::new();
        let mut seen_proj = false;
        for (line, text) in lines {
            if text.is_empty() {
                continue;
            }
            if seen_proj {
                return Err(parse_err(line, "unexpected content after projection line"));
            }
            seen_proj = true;
            for tok in text.split_whitespace() {
                proj.push(tok.parse().map_err(|_| parse_err(line, &format!("bad index `{tok}`")))?);
            }
        }
        Self::new(Matrix::new(n, data)?, steps, proj)
    }

    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = format!("{} {}\n", n, self.steps);
        for i in 0..n {
            let row: Vec<String> = self.matrix.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        let proj: Vec<String> = self.proj.iter().map(|j| j.to_string()).collect();
        out.push_str(&proj.join(" "));
        out.push('\n');
        out
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

impl FromStr for PoweringInstance {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn next_content<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Option<(usize, &'a str)> {
    lines.find(|(_, l)| !l.is_empty())
}

fn parse_err(line: usize, message: &str) -> InstanceError {
    InstanceError::Parse { line, message: message.to_string() }
}

/// Which side of the promise gap an instance falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Promise {
    Yes,
    No,
    OutsidePromise,
}

impl Promise {
    /// The answer a correct verifier must give, if any.
    pub fn expected_bit(self) -> Option<bool> {
        match self {
            Promise::Yes => Some(true),
            Promise::No => Some(false),
            Promise::OutsidePromise => None,
        }
    }
}

impl fmt::Display for Promise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Promise::Yes => "YES",
            Promise::No => "NO",
            Promise::OutsidePromise => "OUTSIDE_PROMISE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PromiseLabel {
    pub class: Promise,
    /// `‖Π M^T e₁‖₂²`.
    pub mass: f64,
}

impl PromiseLabel {
    pub fn classify(mass: f64) -> Self {
        let class = if mass >= YES_THRESHOLD {
            Promise::Yes
        } else if mass <= NO_THRESHOLD {
            Promise::No
        } else {
            Promise::OutsidePromise
        };
        Self { class, mass }
    }
}

/// `min(1/(10⁴·T²), 1/10)`.
pub fn default_delta(steps: usize) -> Result<f64, InstanceError> {
    if steps == 0 {
        return Err(InstanceError::ZeroSteps);
    }
    let t = steps as f64;
    Ok((1.0 / (1e4 * t * t)).min(0.1))
}

pub fn label_instance(inst: &PoweringInstance) -> PromiseLabel {
    let v = power_oracle(inst.matrix(), inst.steps());
    PromiseLabel::classify(inst.projection_mass(&v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    SignedPermutation,
    GivensProduct,
    FromCircuit,
}

impl Generator {
    pub const ALL: [Generator; 3] =
        [Generator::SignedPermutation, Generator::GivensProduct, Generator::FromCircuit];

    pub fn name(self) -> &'static str {
        match self {
            Generator::SignedPermutation => "signed-permutation",
            Generator::GivensProduct => "givens-product",
            Generator::FromCircuit => "from-circuit",
        }
    }
}

impl FromStr for Generator {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| InstanceError::UnknownGenerator(s.to_string()))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Random signed permutation matrix: one `±1` per row and column.
pub fn signed_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut m = Matrix::zeros(n);
    for (row, &col) in perm.iter().enumerate() {
        m.set(row, col, if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
    }
    m
}

/// Product of `⌈n log₂ n⌉` Givens rotations on random coordinate pairs.
pub fn givens_product<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let count = if n < 2 { 0 } else { (n as f64 * (n as f64).log2()).ceil() as usize };
    givens_product_with(n, count, rng)
}

pub fn givens_product_with<R: Rng + ?Sized>(n: usize, rotations: usize, rng: &mut R) -> Matrix {
    let mut m = Matrix::identity(n);
    if n < 2 {
        return m;
    }
    for _ in 0..rotations {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let g = Matrix::givens(n, a, b, theta.cos(), theta.sin());
        m = g.mul(&m).expect("same dimension");
    }
    m
}

/// Picks a projection support placing `v` firmly on one side of the gap:
/// largest coordinates until the mass reaches 0.85 for YES, smallest while it
/// stays at most 0.15 for NO.
pub fn promise_projection(v: &[f64], yes: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| (v[b] * v[b]).total_cmp(&(v[a] * v[a])).then(a.cmp(&b)));
    let mut proj = Vec::new();
    let mut mass = 0.0;
    if yes {
        for &j in &order {
            if mass >= 0.85 {
                break;
            }
            mass += v[j] * v[j];
            proj.push(j + 1);
        }
    } else {
        for &j in order.iter().rev() {
            if mass + v[j] * v[j] > 0.15 {
                break;
            }
            mass += v[j] * v[j];
            proj.push(j + 1);
        }
    }
    proj.sort_unstable();
    proj
}

/// Generates an instance on the side of the promise chosen by the seed.
///
/// For `from-circuit`, `n` is read as the per-block state dimension: a random
/// circuit on `max(1, ⌊log₂ n⌋)` qubits with `T` gates is reduced, and the
/// reduction fixes both the dimension and the projection, so the result may
/// fall outside the promise.
pub fn gen_instance(
    kind: Generator,
    n: usize,
    steps: usize,
    seed: u64,
) -> Result<PoweringInstance, InstanceError> {
    let mut rng = rng_from_seed(seed);
    let yes = rng.gen_bool(0.5);
    gen_with_rng(kind, n, steps, yes, &mut rng)
}

/// Like [`gen_instance`] but with the promise side fixed by the caller.
pub fn gen_promise_instance(
    kind: Generator,
    n: usize,
    steps: usize,
    yes: bool,
    seed: u64,
) -> Result<PoweringInstance, InstanceError> {
    let mut rng = rng_from_seed(seed);
    gen_with_rng(kind, n, steps, yes, &mut rng)
}

fn gen_with_rng<R: Rng>(
    kind: Generator,
    n: usize,
    steps: usize,
    yes: bool,
    rng: &mut R,
) -> Result<PoweringInstance, InstanceError> {
    if n == 0 {
        return Err(InstanceError::Empty);
    }
    let matrix = match kind {
        Generator::SignedPermutation => signed_permutation(n, rng),
        Generator::GivensProduct => givens_product(n, rng),
        Generator::FromCircuit => {
            let qubits = (usize::BITS - 1 - n.leading_zeros()).max(1) as usize;
            let circuit = reduction::random_circuit(qubits, steps, true, rng);
            return Ok(reduction::circuit_to_instance(&circuit)?);
        }
    };
    let v = power_oracle(&matrix, steps);
    let proj = promise_projection(&v, yes);
    PoweringInstance::new(matrix, steps, proj)
}
