//! Streaming proofs for unitary matrix powering.
//!
//! A prover streams estimates `v′_0, …, v′_T` of `M^i e₁`; a verifier reading
//! the stream once, with `O(log nT)` random bits, either answers whether
//! `‖Π M^T e₁‖₂²` is large or small, or aborts.

pub mod fxlinalg;
pub mod instance;
pub mod kwise;
pub mod protocol;
pub mod prover;
pub mod reduction;
pub mod rng;
pub mod verifier;
pub mod harness;
