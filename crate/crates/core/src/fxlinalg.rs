//! Fixed-point scalars and vectors, dense real matrices, rounding onto a dyadic
//! grid, and the double-precision matrix powering reference.
//!
//! Every fixed-point value is an integer mantissa `raw` with an implied scale
//! of `2^-frac_bits`. Stream vectors keep 64-bit mantissas; anything produced
//! by a multiplication is widened to 128 bits and carries the summed
//! precision until it is explicitly rounded.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

/// Largest grid precision the stream format can carry with headroom for
/// values in `[-4, 4]` inside a signed 64-bit mantissa.
pub const MAX_FRAC_BITS: u32 = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("delta must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error("grid needs {required} fractional bits, more than the supported {max}")]
    PrecisionTooHigh { required: u32, max: u32 },
    #[error("{0} is not representable at {1} fractional bits")]
    NotRepresentable(String, u32),
    #[error("precision mismatch: {0} vs {1} fractional bits")]
    PrecisionMismatch(u32, u32),
    #[error("fixed-point overflow")]
    Overflow,
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn pow2(exp: i32) -> f64 {
    // exact for every exponent the crate uses (|exp| < 1000)
    2f64.powi(exp)
}

fn pow2_big(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

/// A fixed-point number `raw * 2^-frac_bits` with a 128-bit mantissa.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FxScalar {
    raw: i128,
    frac_bits: u32,
}

impl FxScalar {
    pub const fn new(raw: i128, frac_bits: u32) -> Self {
        Self { raw, frac_bits }
    }

    pub const fn zero(frac_bits: u32) -> Self {
        Self { raw: 0, frac_bits }
    }

    pub const fn raw(self) -> i128 {
        self.raw
    }

    pub const fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 * pow2(-(self.frac_bits as i32))
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.raw), pow2_big(self.frac_bits))
    }

    /// Exact conversion; fails unless `value * 2^frac_bits` is an integer that
    /// fits the mantissa.
    pub fn from_rational(value: &BigRational, frac_bits: u32) -> Result<Self> {
        let scaled = value * BigRational::from_integer(pow2_big(frac_bits));
        if !scaled.is_integer() {
            return Err(LinalgError::NotRepresentable(value.to_string(), frac_bits));
        }
        let raw = scaled
            .to_integer()
            .to_i128()
            .ok_or(LinalgError::Overflow)?;
        Ok(Self { raw, frac_bits })
    }

    /// Truncates `value` onto the grid, discarding the remainder toward zero.
    pub fn from_f64_toward_zero(value: f64, frac_bits: u32) -> Result<Self> {
        let scaled = scaled_f64(value, frac_bits)?;
        Ok(Self { raw: scaled.trunc() as i128, frac_bits })
    }

    /// Rounds `value` to the nearest grid point, ties away from zero.
    pub fn from_f64_nearest(value: f64, frac_bits: u32) -> Result<Self> {
        let scaled = scaled_f64(value, frac_bits)?;
        Ok(Self { raw: scaled.round() as i128, frac_bits })
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        self.same_precision(other)?;
        let raw = self.raw.checked_add(other.raw).ok_or(LinalgError::Overflow)?;
        Ok(Self { raw, ..self })
    }

    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.same_precision(other)?;
        let raw = self.raw.checked_sub(other.raw).ok_or(LinalgError::Overflow)?;
        Ok(Self { raw, ..self })
    }

    /// Exact product; the result carries the summed precision.
    pub fn checked_mul(self, other: Self) -> Result<Self> {
        let raw = self.raw.checked_mul(other.raw).ok_or(LinalgError::Overflow)?;
        Ok(Self { raw, frac_bits: self.frac_bits + other.frac_bits })
    }

    pub fn checked_scale(self, factor: i64) -> Result<Self> {
        let raw = self
            .raw
            .checked_mul(factor as i128)
            .ok_or(LinalgError::Overflow)?;
        Ok(Self { raw, ..self })
    }

    /// Re-expresses the value at a higher precision without loss.
    pub fn widen(self, frac_bits: u32) -> Result<Self> {
        assert!(frac_bits >= self.frac_bits, "widen cannot drop precision");
        let shift = frac_bits - self.frac_bits;
        let raw = if shift >= 127 {
            if self.raw == 0 { 0 } else { return Err(LinalgError::Overflow) }
        } else {
            let factor = 1i128 << shift;
            self.raw.checked_mul(factor).ok_or(LinalgError::Overflow)?
        };
        Ok(Self { raw, frac_bits })
    }

    /// Drops precision, rounding toward zero.
    pub fn round_toward_zero(self, frac_bits: u32) -> Self {
        if frac_bits >= self.frac_bits {
            return self;
        }
        let shift = self.frac_bits - frac_bits;
        let raw = if shift >= 127 { 0 } else { self.raw / (1i128 << shift) };
        Self { raw, frac_bits }
    }

    /// Drops precision, rounding to nearest with ties away from zero.
    pub fn round_nearest(self, frac_bits: u32) -> Self {
        if frac_bits >= self.frac_bits {
            return self;
        }
        let shift = self.frac_bits - frac_bits;
        if shift >= 127 {
            return Self { raw: 0, frac_bits };
        }
        let unit = 1i128 << shift;
        let half = unit >> 1;
        let magnitude = self.raw.unsigned_abs();
        let rounded = ((magnitude + half as u128) >> shift) as i128;
        let raw = if self.raw < 0 { -rounded } else { rounded };
        Self { raw, frac_bits }
    }

    /// Exact test of `|self| > bound`, with `bound` taken at its exact binary value.
    pub fn abs_exceeds(self, bound: f64) -> bool {
        match BigRational::from_float(bound) {
            Some(b) => self.to_rational().abs() > b,
            // NaN bounds never trigger; +inf is never exceeded
            None => false,
        }
    }

    fn same_precision(self, other: Self) -> Result<()> {
        if self.frac_bits == other.frac_bits {
            Ok(())
        } else {
            Err(LinalgError::PrecisionMismatch(self.frac_bits, other.frac_bits))
        }
    }
}

impl fmt::Display for FxScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

fn scaled_f64(value: f64, frac_bits: u32) -> Result<f64> {
    if !value.is_finite() {
        return Err(LinalgError::NonFinite(value));
    }
    let scaled = value * pow2(frac_bits as i32);
    if scaled.abs() >= 2f64.powi(126) {
        return Err(LinalgError::Overflow);
    }
    Ok(scaled)
}

/// A stream vector: `n` mantissas sharing one precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FxVector {
    raw: Vec<i64>,
    frac_bits: u32,
}

impl FxVector {
    pub fn new(raw: Vec<i64>, frac_bits: u32) -> Self {
        Self { raw, frac_bits }
    }

    pub fn zeros(n: usize, frac_bits: u32) -> Self {
        Self { raw: vec![0; n], frac_bits }
    }

    /// Standard basis vector with a one at 0-based position `index`.
    pub fn basis(n: usize, index: usize, frac_bits: u32) -> Self {
        assert!(index < n, "basis index {index} out of range for dimension {n}");
        assert!(frac_bits <= 62, "basis vector does not fit at {frac_bits} bits");
        let mut raw = vec![0; n];
        raw[index] = 1i64 << frac_bits;
        Self { raw, frac_bits }
    }

    /// Rounds each entry to the nearest grid point.
    pub fn from_f64_nearest(values: &[f64], frac_bits: u32) -> Result<Self> {
        let raw = values
            .iter()
            .map(|&v| {
                let s = FxScalar::from_f64_nearest(v, frac_bits)?;
                i64::try_from(s.raw()).map_err(|_| LinalgError::Overflow)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { raw, frac_bits })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn raw(&self) -> &[i64] {
        &self.raw
    }

    pub fn into_raw(self) -> Vec<i64> {
        self.raw
    }

    pub fn get(&self, index: usize) -> FxScalar {
        FxScalar::new(self.raw[index] as i128, self.frac_bits)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let scale = pow2(-(self.frac_bits as i32));
        self.raw.iter().map(|&r| r as f64 * scale).collect()
    }

    /// Euclidean norm in double precision.
    pub fn norm_l2(&self) -> f64 {
        norm_l2(&self.to_f64())
    }
}

/// A product vector with 128-bit mantissas, typically at twice stream precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WideVector {
    raw: Vec<i128>,
    frac_bits: u32,
}

impl WideVector {
    pub fn raw(&self) -> &[i128] {
        &self.raw
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn get(&self, index: usize) -> FxScalar {
        FxScalar::new(self.raw[index], self.frac_bits)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.raw.len()).map(|j| self.get(j).to_f64()).collect()
    }

    /// Rounds every entry to nearest at `frac_bits`.
    pub fn round_to(&self, frac_bits: u32) -> Result<FxVector> {
        let raw = self
            .raw
            .iter()
            .map(|&r| {
                let s = FxScalar::new(r, self.frac_bits).round_nearest(frac_bits);
                i64::try_from(s.raw()).map_err(|_| LinalgError::Overflow)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FxVector::new(raw, frac_bits.min(self.frac_bits)))
    }
}

/// Dense square matrix in double precision, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(LinalgError::DimensionMismatch { expected: n * n, actual: data.len() });
        }
        if let Some(&bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(bad));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (row, entries) in rows.into_iter().enumerate() {
            if entries.len() != n {
                return Err(LinalgError::NotSquare { rows: n, row, len: entries.len() });
            }
            data.extend(entries);
        }
        Self::new(n, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Plane rotation acting on 0-based coordinates `a` and `b`.
    pub fn givens(n: usize, a: usize, b: usize, cos: f64, sin: f64) -> Self {
        assert!(a < n && b < n && a != b);
        let mut m = Self::identity(n);
        m.set(a, a, cos);
        m.set(a, b, -sin);
        m.set(b, a, sin);
        m.set(b, b, cos);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if other.n != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, actual: other.n });
        }
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, actual: v.len() });
        }
        Ok((0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if other.n != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, actual: other.n });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { n: self.n, data })
    }

    /// `max |M[i,j]|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖MᵀM − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| self.get(k, i) * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Square matrix on a shared dyadic grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FxMatrix {
    n: usize,
    frac_bits: u32,
    raw: Vec<i64>,
}

impl FxMatrix {
    pub fn new(n: usize, raw: Vec<i64>, frac_bits: u32) -> Result<Self> {
        if raw.len() != n * n {
            return Err(LinalgError::DimensionMismatch { expected: n * n, actual: raw.len() });
        }
        Ok(Self { n, frac_bits, raw })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn raw(&self) -> &[i64] {
        &self.raw
    }

    pub fn get(&self, i: usize, j: usize) -> FxScalar {
        FxScalar::new(self.raw[i * self.n + j] as i128, self.frac_bits)
    }

    /// Largest entry magnitude as a mantissa.
    pub fn max_abs_raw(&self) -> u64 {
        self.raw.iter().map(|r| r.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn to_matrix(&self) -> Matrix {
        let scale = pow2(-(self.frac_bits as i32));
        Matrix { n: self.n, data: self.raw.iter().map(|&r| r as f64 * scale).collect() }
    }
}

/// Euclidean norm of a double-precision vector.
pub fn norm_l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Upper bound on the spectral norm: `min(n·‖M‖_max, ‖M‖_F)`.
pub fn spectral_norm_bound(m: &Matrix) -> f64 {
    (m.dim() as f64 * m.max_abs()).min(m.frobenius())
}

/// Smallest `p` with `2^-p ≤ delta / (6 n² T)`.
///
/// The comparison is done as `6 n² T · 2^-p ≤ delta`, whose left side is
/// exact in double precision.
pub fn grid_precision(delta: f64, n: usize, steps: usize) -> Result<u32> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(LinalgError::InvalidDelta(delta));
    }
    if steps == 0 {
        return Err(LinalgError::ZeroSteps);
    }
    let n = n.max(1) as f64;
    let scale = 6.0 * n * n * steps as f64;
    // well past MAX_FRAC_BITS, only to report the requirement
    for p in 0..=1000u32 {
        if scale * pow2(-(p as i32)) <= delta {
            if p > MAX_FRAC_BITS {
                return Err(LinalgError::PrecisionTooHigh { required: p, max: MAX_FRAC_BITS });
            }
            return Ok(p);
        }
    }
    Err(LinalgError::PrecisionTooHigh { required: u32::MAX, max: MAX_FRAC_BITS })
}

/// Rounds every entry of `m` toward zero onto the grid `2^-p` chosen by
/// [`grid_precision`], so that `|M̃[i,j] − M[i,j]| < 2^-p` and hence
/// `‖M − M̃‖₂ ≤ n·2^-p ≤ delta / (6T)`.
pub fn round_matrix(m: &Matrix, delta: f64, steps: usize) -> Result<FxMatrix> {
    let frac_bits = grid_precision(delta, m.dim(), steps)?;
    round_matrix_at(m, frac_bits)
}

/// Rounds toward zero onto an explicit grid.
pub fn round_matrix_at(m: &Matrix, frac_bits: u32) -> Result<FxMatrix> {
    let raw = m
        .data
        .iter()
        .map(|&v| {
            let s = FxScalar::from_f64_toward_zero(v, frac_bits)?;
            i64::try_from(s.raw()).map_err(|_| LinalgError::Overflow)
        })
        .collect::<Result<Vec<_>>>()?;
    FxMatrix::new(m.dim(), raw, frac_bits)
}

/// Exact product of a grid matrix and a stream vector, at the summed precision.
pub fn mat_vec(m: &FxMatrix, v: &FxVector) -> Result<WideVector> {
    if v.len() != m.n {
        return Err(LinalgError::DimensionMismatch { expected: m.n, actual: v.len() });
    }
    let mut raw = Vec::with_capacity(m.n);
    for i in 0..m.n {
        let row = &m.raw[i * m.n..(i + 1) * m.n];
        let mut acc: i128 = 0;
        for (&a, &b) in row.iter().zip(&v.raw) {
            if a == 0 || b == 0 {
                continue;
            }
            acc = acc
                .checked_add(a as i128 * b as i128)
                .ok_or(LinalgError::Overflow)?;
        }
        raw.push(acc);
    }
    Ok(WideVector { raw, frac_bits: m.frac_bits + v.frac_bits })
}

/// `M^T e₁` by repeated double-precision multiplication.
pub fn power_oracle(m: &Matrix, steps: usize) -> Vec<f64> {
    power_trajectory(m, steps).pop().expect("trajectory holds at least e1")
}

/// `[e₁, M e₁, …, M^T e₁]`.
pub fn power_trajectory(m: &Matrix, steps: usize) -> Vec<Vec<f64>> {
    let n = m.dim();
    let mut current = vec![0.0; n];
    if n > 0 {
        current[0] = 1.0;
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(current.clone());
    for _ in 0..steps {
        current = m.mul_vec(&current).expect("square matrix");
        out.push(current.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn norm_examples() {
        assert_eq!(FxVector::basis(4, 0, 10).norm_l2(), 1.0);
        assert_eq!(FxVector::zeros(3, 5).norm_l2(), 0.0);
        assert_eq!(FxVector::new(vec![3, 4], 2).norm_l2(), 1.25);
    }

    #[test]
    fn spectral_bound_examples() {
        let b = spectral_norm_bound(&Matrix::identity(3));
        assert!((1.0..=3.0).contains(&b));
        assert_eq!(spectral_norm_bound(&Matrix::zeros(4)), 0.0);
        let mut m = Matrix::zeros(2);
        m.set(1, 0, 0.5);
        assert_eq!(spectral_norm_bound(&m), 0.5);
    }

    #[test]
    fn grid_precision_follows_formula() {
        // 0.1 / (6·4·1) = 0.0041666…; 2^-7 = 0.0078 is too coarse, 2^-8 fits
        assert_eq!(grid_precision(0.1, 2, 1).unwrap(), 8);
        assert!(matches!(grid_precision(0.0, 2, 1), Err(LinalgError::InvalidDelta(_))));
        assert!(matches!(grid_precision(-1.0, 2, 1), Err(LinalgError::InvalidDelta(_))));
        assert_eq!(grid_precision(0.1, 2, 0), Err(LinalgError::ZeroSteps));
        assert!(matches!(
            grid_precision(1e-30, 1 << 10, 1 << 10),
            Err(LinalgError::PrecisionTooHigh { .. })
        ));
    }

    #[test]
    fn round_matrix_identity_unchanged() {
        for &(delta, steps) in &[(0.1, 1), (1e-4, 3), (1e-8, 16)] {
            let r = round_matrix(&Matrix::identity(3), delta, steps).unwrap();
            assert_eq!(r.to_matrix(), Matrix::identity(3));
        }
    }

    #[test]
    fn round_matrix_truncates_toward_zero() {
        let m = Matrix::from_rows(vec![vec![0.71, -0.71], vec![0.0, 1.0]]).unwrap();
        let r = round_matrix(&m, 0.1, 1).unwrap();
        assert_eq!(r.frac_bits(), 8);
        // floor(0.71 · 256) = 181, and the negative entry mirrors it
        assert_eq!(r.get(0, 0).to_rational(), rat(181, 256));
        assert_eq!(r.get(0, 1).to_rational(), rat(-181, 256));
        assert_eq!(r.get(0, 0).to_f64(), 0.70703125);
        assert_eq!(r.get(0, 1).to_f64(), -0.70703125);
    }

    #[test]
    fn round_matrix_rejects_bad_delta() {
        assert!(round_matrix(&Matrix::identity(2), 0.0, 1).is_err());
        assert!(Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn mat_vec_examples() {
        let p = 8;
        let id = round_matrix_at(&Matrix::identity(2), p).unwrap();
        let e1 = FxVector::basis(2, 0, p);
        assert_eq!(mat_vec(&id, &e1).unwrap().round_to(p).unwrap(), e1);

        let swap = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let swap = round_matrix_at(&swap, p).unwrap();
        let out = mat_vec(&swap, &e1).unwrap();
        assert_eq!(out.frac_bits(), 2 * p);
        assert_eq!(out.round_to(p).unwrap(), FxVector::basis(2, 1, p));

        let g = Matrix::givens(2, 0, 1, 0.6, 0.8);
        assert_eq!(g.mul_vec(&[1.0, 0.0]).unwrap(), vec![0.6, 0.8]);
        // on the grid the product is exactly the truncated first column
        let gq = round_matrix_at(&g, 20).unwrap();
        let out = mat_vec(&gq, &FxVector::basis(2, 0, 20)).unwrap();
        let expect0 = FxScalar::from_f64_toward_zero(0.6, 20).unwrap().widen(40).unwrap();
        let expect1 = FxScalar::from_f64_toward_zero(0.8, 20).unwrap().widen(40).unwrap();
        assert_eq!(out.get(0), expect0);
        assert_eq!(out.get(1), expect1);
    }

    #[test]
    fn mat_vec_dimension_mismatch() {
        let m = round_matrix_at(&Matrix::identity(3), 4).unwrap();
        assert!(matches!(
            mat_vec(&m, &FxVector::zeros(2, 4)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn power_oracle_examples() {
        let e1 = vec![1.0, 0.0, 0.0];
        assert_eq!(power_oracle(&Matrix::identity(3), 10), e1);
        let swap = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(power_oracle(&swap, 3), vec![0.0, 1.0]);
        let theta = 0.3f64;
        let rot = Matrix::givens(2, 0, 1, theta.cos(), theta.sin());
        let v = power_oracle(&rot, 4);
        assert!((v[0] - (4.0 * theta).cos()).abs() < 1e-12);
        assert!((v[1] - (4.0 * theta).sin()).abs() < 1e-12);
    }

    #[test]
    fn scalar_arithmetic_is_exact() {
        let a = FxScalar::new(3, 4);
        let b = FxScalar::new(5, 4);
        assert_eq!(a.checked_add(b).unwrap(), FxScalar::new(8, 4));
        assert_eq!(a.checked_mul(b).unwrap(), FxScalar::new(15, 8));
        assert_eq!(a.checked_scale(-7).unwrap(), FxScalar::new(-21, 4));
        assert!(matches!(a.checked_add(FxScalar::new(1, 5)), Err(LinalgError::PrecisionMismatch(4, 5))));
        assert_eq!(FxScalar::new(i128::MAX, 0).checked_add(FxScalar::new(1, 0)), Err(LinalgError::Overflow));
    }

    #[test]
    fn rounding_modes() {
        let x = FxScalar::new(-7, 2); // -1.75
        assert_eq!(x.round_toward_zero(0), FxScalar::new(-1, 0));
        assert_eq!(x.round_nearest(0), FxScalar::new(-2, 0));
        assert_eq!(FxScalar::new(2, 2).round_nearest(0), FxScalar::new(1, 0)); // 0.5 → 1
        assert_eq!(FxScalar::new(-2, 2).round_nearest(0), FxScalar::new(-1, 0));
    }

    #[test]
    fn abs_exceeds_is_strict() {
        let x = FxScalar::new(3, 2); // 0.75
        assert!(!x.abs_exceeds(0.75));
        assert!(x.abs_exceeds(0.7499999999));
        assert!(FxScalar::new(-3, 2).abs_exceeds(0.5));
        // 0.1 as a double is slightly above 1/10, and 2^-1 = 0.5 sits exactly on a bound
        assert!(!FxScalar::new(1, 1).abs_exceeds(0.5));
        assert!(FxScalar::new(1, 1).abs_exceeds(0.49999999999999994));
        assert!(!FxScalar::new(1, 0).abs_exceeds(f64::INFINITY));
    }

    #[test]
    fn from_rational_rejects_off_grid() {
        assert!(FxScalar::from_rational(&rat(1, 3), 10).is_err());
        assert_eq!(FxScalar::from_rational(&rat(-5, 8), 3).unwrap(), FxScalar::new(-5, 3));
    }

    #[test]
    fn orthogonality_defect_of_rotation() {
        let g = Matrix::givens(3, 0, 2, 0.6, 0.8);
        assert!(g.orthogonality_defect() < 1e-15);
        let mut bad = Matrix::identity(2);
        bad.set(0, 0, 1.1);
        assert!((bad.orthogonality_defect() - 0.21).abs() < 1e-12);
    }
}
