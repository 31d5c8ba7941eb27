//! Exactly 4-wise independent ±1 variables indexed by `(step, coordinate)`.
//!
//! A seed is four elements `c0..c3` of GF(2^k). The variable at index `x`
//! is `+1` when the low bit of `c0 + c1·x + c2·x² + c3·x³` is zero. For any
//! four distinct evaluation points the seed-to-values map is a Vandermonde
//! bijection, so the four low bits are jointly uniform.

use rand::RngCore;
use thiserror::Error;

/// Largest supported field degree.
pub const MAX_FIELD_BITS: u32 = 24;

/// Lexicographically smallest irreducible polynomial of each degree over
/// GF(2), bit `i` holding the coefficient of `x^i`. Index 0 is unused.
pub const IRREDUCIBLE: [u32; 25] = [
    0, 0x2, 0x7, 0xb, 0x13, 0x25, 0x43, 0x83, 0x11b, 0x203, 0x409, 0x805, 0x1009, 0x201b, 0x4021,
    0x8003, 0x1002b, 0x20009, 0x40009, 0x80027, 0x100009, 0x200005, 0x400003, 0x800021, 0x100001b,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KwiseError {
    #[error("index ({step}, {coord}) outside [1, {steps}] x [1, {n}]")]
    OutOfDomain { step: usize, coord: usize, steps: usize, n: usize },
    #[error("seed source exhausted: needed {needed} more bits")]
    InsufficientSeed { needed: u32 },
    #[error("field GF(2^{0}) is unsupported (1..={MAX_FIELD_BITS})")]
    UnsupportedField(u32),
    #[error("GF(2^{field_bits}) too small for {domain} indices")]
    FieldTooSmall { field_bits: u32, domain: u64 },
    #[error("seed coefficient {0:#x} is not a field element")]
    BadCoefficient(u32),
}

/// `⌈log₂(n·T + 1)⌉`: bits needed to name every index plus the zero element.
pub fn index_bits(n: usize, steps: usize) -> u32 {
    let domain = (n as u64) * (steps as u64);
    u64::BITS - domain.leading_zeros()
}

/// Carry-less multiplication in GF(2^k) modulo [`IRREDUCIBLE`]`[k]`.
pub fn gf_mul(a: u32, b: u32, field_bits: u32) -> u32 {
    let modulus = IRREDUCIBLE[field_bits as usize] as u64;
    let (a, b) = (a as u64, b as u64);
    let mut product = 0u64;
    for i in 0..field_bits {
        if (b >> i) & 1 == 1 {
            product ^= a << i;
        }
    }
    let k = field_bits;
    for bit in (k..2 * k).rev() {
        if (product >> bit) & 1 == 1 {
            product ^= modulus << (bit - k);
        }
    }
    product as u32
}

/// Source of uniformly random bits that counts what it hands out.
pub trait BitSource {
    /// The next `count ≤ 64` bits; the first bit drawn lands in the least
    /// significant position. `None` once the source cannot supply them.
    fn take_bits(&mut self, count: u32) -> Option<u64>;

    fn bits_consumed(&self) -> u64;
}

/// A finite, caller-supplied bit string.
#[derive(Clone, Debug)]
pub struct SeedBits {
    bits: Vec<bool>,
    pos: usize,
}

impl SeedBits {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits, pos: 0 }
    }

    /// All `8·len` bits, least significant bit of each byte first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|&b| (0..8).map(move |i| (b >> i) & 1 == 1))
            .collect();
        Self { bits, pos: 0 }
    }

    /// Concatenates `count`-bit little-endian words.
    pub fn from_words(words: &[u64], count: u32) -> Self {
        let bits = words
            .iter()
            .flat_map(|&w| (0..count).map(move |i| (w >> i) & 1 == 1))
            .collect();
        Self { bits, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

impl BitSource for SeedBits {
    fn take_bits(&mut self, count: u32) -> Option<u64> {
        assert!(count <= 64);
        let count = count as usize;
        if self.remaining() < count {
            return None;
        }
        let value = self.bits[self.pos..self.pos + count]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        self.pos += count;
        Some(value)
    }

    fn bits_consumed(&self) -> u64 {
        self.pos as u64
    }
}

/// Unbounded bits drawn from a PRNG, buffered one 64-bit word at a time.
#[derive(Clone, Debug)]
pub struct RngBits<R> {
    rng: R,
    buffer: u64,
    available: u32,
    consumed: u64,
}

impl<R: RngCore> RngBits<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, buffer: 0, available: 0, consumed: 0 }
    }
}

impl<R: RngCore> BitSource for RngBits<R> {
    fn take_bits(&mut self, count: u32) -> Option<u64> {
        assert!(count <= 64);
        let mut value = 0u64;
        let mut filled = 0;
        while filled < count {
            if self.available == 0 {
                self.buffer = self.rng.next_u64();
                self.available = 64;
            }
            let take = (count - filled).min(self.available);
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            value |= (self.buffer & mask) << filled;
            self.buffer = if take == 64 { 0 } else { self.buffer >> take };
            self.available -= take;
            filled += take;
        }
        self.consumed += count as u64;
        Some(value)
    }

    fn bits_consumed(&self) -> u64 {
        self.consumed
    }
}

/// Four GF(2^k) coefficients defining one family member over `[1,T] × [1,n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignSampler {
    field_bits: u32,
    coeffs: [u32; 4],
    n: usize,
    steps: usize,
}

impl SignSampler {
    pub fn from_coefficients(
        field_bits: u32,
        coeffs: [u32; 4],
        n: usize,
        steps: usize,
    ) -> Result<Self, KwiseError> {
        if field_bits == 0 || field_bits > MAX_FIELD_BITS {
            return Err(KwiseError::UnsupportedField(field_bits));
        }
        let domain = n as u64 * steps as u64;
        if (1u64 << field_bits) < domain + 1 {
            return Err(KwiseError::FieldTooSmall { field_bits, domain });
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >> field_bits != 0) {
            return Err(KwiseError::BadCoefficient(c));
        }
        Ok(Self { field_bits, coeffs, n, steps })
    }

    pub fn field_bits(&self) -> u32 {
        self.field_bits
    }

    pub fn coeffs(&self) -> [u32; 4] {
        self.coeffs
    }

    /// Bits of randomness that define this sampler.
    pub fn seed_bits(&self) -> u32 {
        4 * self.field_bits
    }

    /// Field element for 1-based `(step, coord)`: `(step−1)·n + (coord−1) + 1`.
    pub fn encode_index(&self, step: usize, coord: usize) -> u32 {
        ((step - 1) * self.n + (coord - 1) + 1) as u32
    }

    pub fn eval(&self, x: u32) -> u32 {
        let k = self.field_bits;
        let [c0, c1, c2, c3] = self.coeffs;
        let mut acc = c3;
        acc = gf_mul(acc, x, k) ^ c2;
        acc = gf_mul(acc, x, k) ^ c1;
        gf_mul(acc, x, k) ^ c0
    }

    /// `α(step, coord) ∈ {−1, +1}` for 1-based indices.
    pub fn sample_sign(&self, step: usize, coord: usize) -> Result<i8, KwiseError> {
        if step == 0 || step > self.steps || coord == 0 || coord > self.n {
            return Err(KwiseError::OutOfDomain { step, coord, steps: self.steps, n: self.n });
        }
        Ok(self.sign(step, coord))
    }

    /// Unchecked variant of [`Self::sample_sign`] for the verifier's inner loop.
    #[inline]
    pub fn sign(&self, step: usize, coord: usize) -> i8 {
        debug_assert!(step >= 1 && step <= self.steps && coord >= 1 && coord <= self.n);
        if self.eval(self.encode_index(step, coord)) & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Draws `4k` bits for a new sampler over `[1,T] × [1,n]`, `k = ⌈log₂(nT+1)⌉`.
pub fn fresh_sampler<B: BitSource + ?Sized>(
    bits: &mut B,
    n: usize,
    steps: usize,
) -> Result<SignSampler, KwiseError> {
    let k = index_bits(n, steps).max(1);
    if k > MAX_FIELD_BITS {
        return Err(KwiseError::UnsupportedField(k));
    }
    let mut coeffs = [0u32; 4];
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c = bits
            .take_bits(k)
            .ok_or(KwiseError::InsufficientSeed { needed: (4 - i as u32) * k })?
            as u32;
    }
    SignSampler::from_coefficients(k, coeffs, n, steps)
}
