//! The proof-stream wire format and the prover → tape → verifier pipeline.
//!
//! Layout: `b"SPQL"`, version byte `1`, `n` and `T` as little-endian `u32`,
//! the precision `p` as a `u8`, then `(T+1)·n` little-endian `i64`
//! mantissas in vector-major order. Every mantissa must satisfy
//! `|raw| ≤ 2^{p+2}`, i.e. the value lies in `[-4, 4]`.

use std::fmt;
use std::io::{self, Cursor, Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::fxlinalg::{FxVector, MAX_FRAC_BITS};
use crate::instance::{label_instance, PoweringInstance, PromiseLabel};
use crate::kwise::RngBits;
use crate::prover::{adversarial_prove, honest_prove, AdversaryStrategy, NoiseModel, ProverError};
use crate::rng::{derive_seed, rng_from_seed};
use crate::verifier::{verify_wire, ProtocolOutcome, Verdict, VerifierConfig, VerifierError};

pub const MAGIC: [u8; 4] = *b"SPQL";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;

/// Largest accepted `|value|`, as a power of two above the grid scale.
pub const RANGE_BITS: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("precision {0} exceeds the supported {MAX_FRAC_BITS} bits")]
    BadPrecision(u8),
    #[error("zero dimension")]
    ZeroDimension,
    #[error("truncated header")]
    TruncatedHeader,
    #[error("payload truncated in vector {vector}")]
    Truncated { vector: usize },
    #[error("mantissa {raw} at vector {vector}, coordinate {coord} exceeds 2^{bound_bits}")]
    OutOfRange { vector: usize, coord: usize, raw: i64, bound_bits: u32 },
    #[error("trailing bytes after the last vector")]
    TrailingData,
    #[error("vector {vector} has length {len}, expected {n}")]
    Length { vector: usize, len: usize, n: usize },
    #[error("read failed: {0}")]
    Io(String),
}

/// `n`, `T`, and `p` as carried by the header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub n: u32,
    pub steps: u32,
    pub frac_bits: u8,
}

impl StreamHeader {
    pub fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5..9].copy_from_slice(&self.n.to_le_bytes());
        out[9..13].copy_from_slice(&self.steps.to_le_bytes());
        out[13] = self.frac_bits;
        out
    }

    pub fn from_bytes(bytes: &[u8; HEADER_LEN]) -> Result<Self, StreamError> {
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(StreamError::BadMagic(magic));
        }
        if bytes[4] != VERSION {
            return Err(StreamError::BadVersion(bytes[4]));
        }
        let n = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes"));
        let steps = u32::from_le_bytes(bytes[9..13].try_into().expect("4 bytes"));
        let frac_bits = bytes[13];
        if frac_bits as u32 > MAX_FRAC_BITS {
            return Err(StreamError::BadPrecision(frac_bits));
        }
        if n == 0 {
            return Err(StreamError::ZeroDimension);
        }
        Ok(Self { n, steps, frac_bits })
    }

    /// Mantissa bound `2^{p+2}`.
    pub fn bound(self) -> i64 {
        1i64 << (self.frac_bits as u32 + RANGE_BITS)
    }
}

/// A materialized proof: `v′_0, …` at one shared precision.
///
/// The vector count is not forced to equal `T+1`, so truncated and
/// otherwise malformed proofs can be represented and sent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofStream {
    n: usize,
    steps: usize,
    frac_bits: u32,
    vectors: Vec<FxVector>,
}

impl ProofStream {
    pub fn new(n: usize, steps: usize, frac_bits: u32, vectors: Vec<FxVector>) -> Self {
        Self { n, steps, frac_bits, vectors }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn vectors(&self) -> &[FxVector] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<FxVector> {
        self.vectors
    }

    pub fn header(&self) -> StreamHeader {
        StreamHeader {
            n: self.n as u32,
            steps: self.steps as u32,
            frac_bits: self.frac_bits as u8,
        }
    }
}

pub fn write_stream<W: Write>(stream: &ProofStream, mut out: W) -> io::Result<()> {
    out.write_all(&stream.header().to_bytes())?;
    for v in &stream.vectors {
        for &raw in v.raw() {
            out.write_all(&raw.to_le_bytes())?;
        }
    }
    out.flush()
}

pub fn encode_stream(stream: &ProofStream) -> Vec<u8> {
    let values: usize = stream.vectors.iter().map(FxVector::len).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values);
    write_stream(stream, &mut out).expect("writing to a Vec cannot fail");
    out
}

/// Strict decode of a complete byte string.
pub fn decode_stream(bytes: &[u8]) -> Result<ProofStream, StreamError> {
    let reader = StreamReader::open(bytes)?;
    let header = reader.header();
    let vectors = reader.collect::<Result<Vec<_>, _>>()?;
    Ok(ProofStream::new(header.n as usize, header.steps as usize, header.frac_bits as u32, vectors))
}

/// Incremental decoder: yields one vector at a time, then checks for EOF.
/// Stops after the first error.
#[derive(Debug)]
pub struct StreamReader<R> {
    inner: R,
    header: StreamHeader,
    emitted: usize,
    done: bool,
}

fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<bool, StreamError> {
    match reader.read_exact(buf) {
        Ok(()) => Ok(true),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Ok(false),
        Err(e) => Err(StreamError::Io(e.to_string())),
    }
}

impl<R: Read> StreamReader<R> {
    pub fn open(mut inner: R) -> Result<Self, StreamError> {
        let mut buf = [0u8; HEADER_LEN];
        if !read_full(&mut inner, &mut buf)? {
            return Err(StreamError::TruncatedHeader);
        }
        let header = StreamHeader::from_bytes(&buf)?;
        Ok(Self { inner, header, emitted: 0, done: false })
    }

    pub fn header(&self) -> StreamHeader {
        self.header
    }

    fn read_vector(&mut self) -> Result<FxVector, StreamError> {
        let n = self.header.n as usize;
        let bound = self.header.bound();
        // grow as bytes arrive so a lying header cannot force a huge allocation
        let mut raw = Vec::with_capacity(n.min(1 << 12));
        let mut word = [0u8; 8];
        for coord in 0..n {
            if !read_full(&mut self.inner, &mut word)? {
                return Err(StreamError::Truncated { vector: self.emitted });
            }
            let value = i64::from_le_bytes(word);
            if value.unsigned_abs() > bound as u64 {
                return Err(StreamError::OutOfRange {
                    vector: self.emitted,
                    coord: coord + 1,
                    raw: value,
                    bound_bits: self.header.frac_bits as u32 + RANGE_BITS,
                });
            }
            raw.push(value);
        }
        Ok(FxVector::new(raw, self.header.frac_bits as u32))
    }
}

impl<R: Read> Iterator for StreamReader<R> {
    type Item = Result<FxVector, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.emitted == self.header.steps as usize + 1 {
            self.done = true;
            let mut probe = [0u8; 1];
            return match read_full(&mut self.inner, &mut probe) {
                Ok(false) => None,
                Ok(true) => Some(Err(StreamError::TrailingData)),
                Err(e) => Some(Err(e)),
            };
        }
        let item = self.read_vector();
        match item {
            Ok(_) => self.emitted += 1,
            Err(_) => self.done = true,
        }
        Some(item)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TapeError {
    #[error("the proof tape has already been read")]
    AlreadyRead,
}

/// Holds an encoded proof and hands out exactly one reader over it.
#[derive(Debug)]
pub struct ProofTape {
    bytes: Option<Vec<u8>>,
}

impl ProofTape {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self { bytes: Some(bytes) }
    }

    pub fn take_reader(&mut self) -> Result<Cursor<Vec<u8>>, TapeError> {
        self.bytes.take().map(Cursor::new).ok_or(TapeError::AlreadyRead)
    }

    pub fn is_consumed(&self) -> bool {
        self.bytes.is_none()
    }
}

/// Which prover a run uses.
#[derive(Clone, Debug, PartialEq)]
pub enum ProverSpec {
    /// Per-coordinate error `noise_scale · δ/n`, failing with `failure_prob`.
    Honest { noise_scale: f64, failure_prob: f64 },
    Adversary(AdversaryStrategy),
}

impl ProverSpec {
    pub fn honest() -> Self {
        ProverSpec::Honest { noise_scale: 1.0, failure_prob: 0.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProverSpec::Honest { .. } => "honest",
            ProverSpec::Adversary(s) => s.name(),
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, ProverSpec::Honest { .. })
    }

    pub fn prove(
        &self,
        inst: &PoweringInstance,
        delta: f64,
        seed: u64,
    ) -> Result<ProofStream, ProverError> {
        match self {
            ProverSpec::Honest { noise_scale, failure_prob } => {
                let noise =
                    NoiseModel::new(noise_scale * delta / inst.n() as f64, *failure_prob, seed)?;
                honest_prove(inst, delta, &noise)
            }
            ProverSpec::Adversary(strategy) => adversarial_prove(inst, delta, strategy, seed),
        }
    }
}

impl FromStr for ProverSpec {
    type Err = ProverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "honest" {
            Ok(ProverSpec::honest())
        } else {
            s.parse().map(ProverSpec::Adversary)
        }
    }
}

impl fmt::Display for ProverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error(transparent)]
    Tape(#[from] TapeError),
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: ProtocolOutcome,
    pub ground_truth: PromiseLabel,
    pub prover: ProverSpec,
    pub master_seed: u64,
    pub prover_seed: u64,
    pub verifier_seed: u64,
    pub elapsed: Duration,
}

impl RunReport {
    /// A non-abort verdict contradicting a promise label.
    pub fn is_wrong(&self) -> bool {
        match (self.outcome.verdict.bit(), self.ground_truth.class.expected_bit()) {
            (Some(got), Some(want)) => got != want,
            _ => false,
        }
    }

    /// A non-abort verdict matching a promise label.
    pub fn is_correct(&self) -> bool {
        match (self.outcome.verdict.bit(), self.ground_truth.class.expected_bit()) {
            (Some(got), Some(want)) => got == want,
            _ => false,
        }
    }
}

const PROVER_TAG: u64 = 1;
const VERIFIER_TAG: u64 = 2;

/// Proves, encodes onto a read-once tape, and verifies from the tape.
pub fn run_protocol(
    inst: &PoweringInstance,
    prover: &ProverSpec,
    cfg: &VerifierConfig,
    master_seed: u64,
) -> Result<RunReport, ProtocolError> {
    let started = Instant::now();
    let prover_seed = derive_seed(master_seed, &[PROVER_TAG]);
    let verifier_seed = derive_seed(master_seed, &[VERIFIER_TAG]);

    let stream = prover.prove(inst, cfg.delta, prover_seed)?;
    let mut tape = ProofTape::new(encode_stream(&stream));
    let mut bits = RngBits::new(rng_from_seed(verifier_seed));
    let outcome = verify_wire(inst, cfg, tape.take_reader()?, &mut bits)?;

    Ok(RunReport {
        outcome,
        ground_truth: label_instance(inst),
        prover: prover.clone(),
        master_seed,
        prover_seed,
        verifier_seed,
        elapsed: started.elapsed(),
    })
}

impl Verdict {
    /// `Some(true)` for ONE, `Some(false)` for ZERO, `None` for ABORT.
    pub fn bit(self) -> Option<bool> {
        match self {
            Verdict::One => Some(true),
            Verdict::Zero => Some(false),
            Verdict::Abort => None,
        }
    }
}
