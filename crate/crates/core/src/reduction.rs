//! Quantum circuit to unitary matrix powering.
//!
//! A circuit with `T` gates on `m` qubits becomes a `(T+1)·2^m` square matrix
//! `U` split into `2^m` blocks: block `(i+1, i)` holds the `i`-th gate and
//! block `(1, T+1)` is the identity. Powering `U` from `e₁` then walks the
//! state through the circuit one gate per step, so `‖Π U^T e₁‖₂²` is the
//! probability that qubit 1 measures 0 when `Π` selects the final block's
//! states with that qubit clear.
//!
//! Qubit 1 is the most significant bit of a basis index. Circuits with any
//! complex gate are embedded over the reals by `a+bi ↦ [[a, −b], [b, a]]`,
//! which doubles every block and interleaves real and imaginary parts.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::fxlinalg::Matrix;
use crate::instance::{InstanceError, PoweringInstance};

/// Qubit count accepted by the dense simulator.
pub const MAX_QUBITS: usize = 12;

/// Largest dimension of a reduced matrix.
pub const MAX_DIMENSION: usize = 4096;

const GATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("qubit count {0} outside [1, {MAX_QUBITS}]")]
    QubitCount(usize),
    #[error("gate {gate}: qubit {qubit} out of range for {qubits} qubits")]
    QubitOutOfRange { gate: usize, qubit: usize, qubits: usize },
    #[error("gate {0}: control and target coincide")]
    ControlIsTarget(usize),
    #[error("gate {0} is not unitary")]
    NotUnitary(usize),
    #[error("matrix is not unitary")]
    NonUnitaryMatrix,
    #[error("reduced dimension {0} exceeds {MAX_DIMENSION}")]
    DimensionOverflow(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Instance(Box<InstanceError>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<InstanceError> for ReductionError {
    fn from(e: InstanceError) -> Self {
        ReductionError::Instance(Box::new(e))
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    I,
    X,
    Z,
    H,
    /// Phase gate `diag(1, i)`.
    S,
    /// Real rotation `[[cos θ, −sin θ], [sin θ, cos θ]]`.
    Ry(f64),
    Cnot,
    /// Arbitrary 2×2 unitary, optionally controlled.
    Unitary(Mat2),
}

/// A 2×2 operator on `target`, applied only where `control` (if any) is set.
/// Qubits are 0-based here; the text format is 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
}

impl Gate {
    pub fn single(kind: GateKind, target: usize) -> Self {
        Self { kind, target, control: None }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cnot, target, control: Some(control) }
    }

    pub fn controlled(matrix: Mat2, control: usize, target: usize) -> Self {
        Self { kind: GateKind::Unitary(matrix), target, control: Some(control) }
    }

    pub fn local_matrix(&self) -> Mat2 {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        match &self.kind {
            GateKind::I => [[one, z], [z, one]],
            GateKind::X | GateKind::Cnot => [[z, one], [one, z]],
            GateKind::Z => [[one, z], [z, -one]],
            GateKind::H => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::S => [[one, z], [z, c(0.0, 1.0)]],
            GateKind::Ry(theta) => {
                let (s, co) = theta.sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            GateKind::Unitary(m) => *m,
        }
    }

    pub fn is_real(&self) -> bool {
        self.local_matrix().iter().flatten().all(|v| v.im == 0.0)
    }

    /// Dense `2^m × 2^m` operator on the full register.
    pub fn full_matrix(&self, qubits: usize) -> ComplexMatrix {
        let dim = 1usize << qubits;
        let g = self.local_matrix();
        let tbit = 1usize << (qubits - 1 - self.target);
        let cbit = self.control.map(|q| 1usize << (qubits - 1 - q));
        let mut out = ComplexMatrix::zeros(dim);
        for col in 0..dim {
            let active = cbit.is_none_or(|b| col & b != 0);
            if !active {
                out.set(col, col, c(1.0, 0.0));
                continue;
            }
            let t_in = usize::from(col & tbit != 0);
            out.set(col & !tbit, col, g[0][t_in]);
            out.set(col | tbit, col, g[1][t_in]);
        }
        out
    }
}

fn is_unitary2(m: &Mat2) -> bool {
    for i in 0..2 {
        for j in 0..2 {
            let dot: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if (dot - c(target, 0.0)).norm() > GATE_TOLERANCE {
                return false;
            }
        }
    }
    true
}

/// Dense complex square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![c(0.0, 0.0); n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "complex matrix must be square");
        Self { n, data: rows.into_iter().flatten().collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: Complex64 = (0..n).map(|k| self.get(k, i).conj() * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - c(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Real `2n × 2n` encoding of a complex `n × n` unitary.
pub fn embed_real(g: &ComplexMatrix) -> Result<Matrix, ReductionError> {
    if g.unitarity_defect() > GATE_TOLERANCE {
        return Err(ReductionError::NonUnitaryMatrix);
    }
    Ok(embed_unchecked(g))
}

fn embed_unchecked(g: &ComplexMatrix) -> Matrix {
    let n = g.dim();
    let mut out = Matrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = g.get(i, j);
            out.set(2 * i, 2 * j, v.re);
            out.set(2 * i, 2 * j + 1, -v.im);
            out.set(2 * i + 1, 2 * j, v.im);
            out.set(2 * i + 1, 2 * j + 1, v.re);
        }
    }
    out
}

fn real_part(g: &ComplexMatrix) -> Matrix {
    let n = g.dim();
    Matrix::new(n, g.data.iter().map(|v| v.re).collect()).expect("square")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize, gates: Vec<Gate>) -> Result<Self, ReductionError> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(ReductionError::QubitCount(qubits));
        }
        for (idx, g) in gates.iter().enumerate() {
            for q in std::iter::once(g.target).chain(g.control) {
                if q >= qubits {
                    return Err(ReductionError::QubitOutOfRange { gate: idx + 1, qubit: q + 1, qubits });
                }
            }
            if g.control == Some(g.target) {
                return Err(ReductionError::ControlIsTarget(idx + 1));
            }
            if !is_unitary2(&g.local_matrix()) {
                return Err(ReductionError::NotUnitary(idx + 1));
            }
        }
        Ok(Self { qubits, gates })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_real(&self) -> bool {
        self.gates.iter().all(Gate::is_real)
    }

    /// Text format: first line `m`, then one gate per line with 1-based
    /// qubits. `I q`, `X q`, `Z q`, `H q`, `S q`, `RY q θ`, `CNOT c t`,
    /// `U q` / `CU c t` followed by eight numbers (re, im of entries
    /// 00, 01, 10, 11). Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, ReductionError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines
            .next()
            .ok_or(ReductionError::Parse { line: 1, message: "missing qubit count".into() })?;
        let qubits: usize = header
            .parse()
            .map_err(|_| ReductionError::Parse { line, message: "bad qubit count".into() })?;
        let mut gates = Vec::new();
        for (line, text) in lines {
            gates.push(parse_gate(line, text)?);
        }
        Self::new(qubits, gates)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.qubits);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, ReductionError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.target + 1;
        match (&self.kind, self.control) {
            (GateKind::I, None) => write!(f, "I {t}"),
            (GateKind::X, None) => write!(f, "X {t}"),
            (GateKind::Z, None) => write!(f, "Z {t}"),
            (GateKind::H, None) => write!(f, "H {t}"),
            (GateKind::S, None) => write!(f, "S {t}"),
            (GateKind::Ry(theta), None) => write!(f, "RY {t} {theta}"),
            (GateKind::Cnot, Some(ctl)) => write!(f, "CNOT {} {t}", ctl + 1),
            (_, ctl) => {
                let m = self.local_matrix();
                match ctl {
                    Some(ctl) => write!(f, "CU {} {t}", ctl + 1)?,
                    None => write!(f, "U {t}")?,
                }
                for v in m.iter().flatten() {
                    write!(f, " {} {}", v.re, v.im)?;
                }
                Ok(())
            }
        }
    }
}

fn parse_gate(line: usize, text: &str) -> Result<Gate, ReductionError> {
    let err = |message: String| ReductionError::Parse { line, message };
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let name = tokens[0].to_ascii_uppercase();
    let qubit = |i: usize| -> Result<usize, ReductionError> {
        let tok = tokens.get(i).ok_or_else(|| err(format!("{name}: missing qubit")))?;
        let q: usize = tok.parse().map_err(|_| err(format!("bad qubit `{tok}`")))?;
        q.checked_sub(1).ok_or_else(|| err("qubits are 1-based".into()))
    };
    let number = |i: usize| -> Result<f64, ReductionError> {
        let tok = tokens.get(i).ok_or_else(|| err(format!("{name}: missing parameter")))?;
        tok.parse().map_err(|_| err(format!("bad number `{tok}`")))
    };
    let matrix_from = |start: usize| -> Result<Mat2, ReductionError> {
        let mut m = [[c(0.0, 0.0); 2]; 2];
        for k in 0..4 {
            m[k / 2][k % 2] = c(number(start + 2 * k)?, number(start + 2 * k + 1)?);
        }
        Ok(m)
    };
    let (gate, arity) = match name.as_str() {
        "I" => (Gate::single(GateKind::I, qubit(1)?), 2),
        "X" => (Gate::single(GateKind::X, qubit(1)?), 2),
        "Z" => (Gate::single(GateKind::Z, qubit(1)?), 2),
        "H" => (Gate::single(GateKind::H, qubit(1)?), 2),
        "S" => (Gate::single(GateKind::S, qubit(1)?), 2),
        "RY" | "R" => (Gate::single(GateKind::Ry(number(2)?), qubit(1)?), 3),
        "CNOT" | "CX" => (Gate::cnot(qubit(1)?, qubit(2)?), 3),
        "U" => (Gate::single(GateKind::Unitary(matrix_from(2)?), qubit(1)?), 10),
        "CU" => (Gate::controlled(matrix_from(3)?, qubit(1)?, qubit(2)?), 11),
        other => return Err(err(format!("unknown gate `{other}`"))),
    };
    if tokens.len() != arity {
        return Err(err(format!("{name} takes {} arguments", arity - 1)));
    }
    Ok(gate)
}

/// The reduced matrix together with its block layout.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockUnitary {
    pub matrix: Matrix,
    /// `T + 1`.
    pub block_count: usize,
    /// `2^m`, or `2^{m+1}` after the real embedding.
    pub block_size: usize,
    /// Whether the real embedding was applied.
    pub embedded: bool,
    /// 1-based support of `Π`.
    pub proj: Vec<usize>,
}

impl BlockUnitary {
    /// 0-based index of the block containing 0-based coordinate `index`.
    pub fn block_of(&self, index: usize) -> usize {
        index / self.block_size
    }
}

pub fn circuit_to_block_unitary(circuit: &Circuit) -> Result<BlockUnitary, ReductionError> {
    let m = circuit.qubits;
    let state_dim = 1usize << m;
    let embedded = !circuit.is_real();
    let block_size = if embedded { 2 * state_dim } else { state_dim };
    let steps = circuit.gates.len();
    let block_count = steps + 1;
    let dim = block_count
        .checked_mul(block_size)
        .filter(|&d| d <= MAX_DIMENSION)
        .ok_or(ReductionError::DimensionOverflow(block_count.saturating_mul(block_size)))?;

    let mut u = Matrix::zeros(dim);
    let mut place = |block_row: usize, block_col: usize, op: &Matrix| {
        for i in 0..block_size {
            for j in 0..block_size {
                u.set(block_row * block_size + i, block_col * block_size + j, op.get(i, j));
            }
        }
    };
    for (i, gate) in circuit.gates.iter().enumerate() {
        let full = gate.full_matrix(m);
        let op = if embedded { embed_unchecked(&full) } else { real_part(&full) };
        // gate i+1 (1-based) sits in block (i+2, i+1)
        place(i + 1, i, &op);
    }
    place(0, steps, &Matrix::identity(block_size));

    let base = steps * block_size;
    let proj = (0..state_dim / 2)
        .flat_map(|b| {
            if embedded {
                vec![base + 2 * b + 1, base + 2 * b + 2]
            } else {
                vec![base + b + 1]
            }
        })
        .collect();
    Ok(BlockUnitary { matrix: u, block_count, block_size, embedded, proj })
}

/// Reduces a circuit to `(U, T, Π)` with `T` the gate count.
pub fn circuit_to_instance(circuit: &Circuit) -> Result<PoweringInstance, ReductionError> {
    let block = circuit_to_block_unitary(circuit)?;
    Ok(PoweringInstance::new(block.matrix, circuit.gates.len(), block.proj)?)
}

/// Probability that qubit 1 measures 0 after running the circuit on `|0^m⟩`,
/// by direct state-vector updates.
pub fn simulate_circuit(circuit: &Circuit) -> f64 {
    let m = circuit.qubits;
    let dim = 1usize << m;
    let mut state = vec![c(0.0, 0.0); dim];
    state[0] = c(1.0, 0.0);
    for gate in &circuit.gates {
        let g = gate.local_matrix();
        let tbit = 1usize << (m - 1 - gate.target);
        let cbit = gate.control.map(|q| 1usize << (m - 1 - q));
        for i0 in (0..dim).filter(|i| i & tbit == 0) {
            if let Some(b) = cbit {
                if i0 & b == 0 {
                    continue;
                }
            }
            let i1 = i0 | tbit;
            let (a0, a1) = (state[i0], state[i1]);
            state[i0] = g[0][0] * a0 + g[0][1] * a1;
            state[i1] = g[1][0] * a0 + g[1][1] * a1;
        }
    }
    state[..dim / 2].iter().map(|a| a.norm_sqr()).sum()
}

fn random_unitary2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    use std::f64::consts::TAU;
    let theta: f64 = rng.gen_range(0.0..TAU);
    let (alpha, beta, phase): (f64, f64, f64) =
        (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
    let g = Complex64::from_polar(1.0, phase);
    let (s, co) = theta.sin_cos();
    [
        [g * Complex64::from_polar(co, alpha), -g * Complex64::from_polar(s, beta)],
        [g * Complex64::from_polar(s, -beta), g * Complex64::from_polar(co, -alpha)],
    ]
}

/// Random circuit over the full gate library. With `allow_complex = false`
/// only real gates are drawn.
pub fn random_circuit<R: Rng + ?Sized>(
    qubits: usize,
    gates: usize,
    allow_complex: bool,
    rng: &mut R,
) -> Circuit {
    let choices = if allow_complex { 9 } else { 6 };
    let list = (0..gates)
        .map(|_| {
            let target = rng.gen_range(0..qubits);
            let pick = rng.gen_range(0..choices);
            let other = |rng: &mut R| {
                let mut ctl = rng.gen_range(0..qubits - 1);
                if ctl >= target {
                    ctl += 1;
                }
                ctl
            };
            match pick {
                0 => Gate::single(GateKind::I, target),
                1 => Gate::single(GateKind::X, target),
                2 => Gate::single(GateKind::Z, target),
                3 => Gate::single(GateKind::H, target),
                4 => Gate::single(GateKind::Ry(rng.gen_range(0.0..std::f64::consts::TAU)), target),
                5 if qubits > 1 => Gate::cnot(other(rng), target),
                5 => Gate::single(GateKind::H, target),
                6 => Gate::single(GateKind::S, target),
                7 => Gate::single(GateKind::Unitary(random_unitary2(rng)), target),
                _ if qubits > 1 => {
                    let ctl = other(rng);
                    Gate::controlled(random_unitary2(rng), ctl, target)
                }
                _ => Gate::single(GateKind::Unitary(random_unitary2(rng)), target),
            }
        })
        .collect();
    Circuit::new(qubits, list).expect("generated gates are valid")
}
