//! Private-key packed additively homomorphic encryption (BFV over
//! `Z_q[X]/(X^n + 1)` with plaintext modulus `p ≡ 1 mod 2n`).
//!
//! Plaintexts are length-`n` vectors over `Z_p` (slots). Supported
//! operations: SIMD addition, SIMD multiplication by a plaintext vector
//! (optionally decomposed into windows), and slot permutations from the
//! group `C_{n/2} × C_2` via key switching with hoisted decomposition.
//! Every ciphertext carries a noise estimate; see [`noise`].

mod context;
mod eval;
mod galois;
mod keys;
pub mod noise;
mod sampler;
mod serialize;

pub use context::{Ciphertext, PlaintextVector, PlaintextWindows, RingContext, SecretKey};
pub use eval::{CountedPt, CountingEvaluator, Evaluator, HeEvaluator, OpCount, OpCounter};
pub use galois::GroupElem;
pub use keys::{Hoisted, KeySet, PermutationKey};
pub use noise::{digit_count, NoiseEstimate, NoiseModel};
pub use sampler::GaussianSampler;
pub use serialize::{
    ciphertext_len, ciphertext_payload_len, ObjectKind, HEADER_LEN, MAGIC, VERSION,
};

use crate::modarith::{LengthMismatch, ParamError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PaheError {
    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),
    #[error("plaintext has {needed} windows but only {got} window ciphertexts were supplied")]
    MissingWindowCiphertexts { needed: usize, got: usize },
    #[error("no permutation key for {0}")]
    MissingKey(GroupElem),
    #[error("unsupported permutation: {0}")]
    UnsupportedPermutation(String),
    #[error("noise {bits:.1} bits exceeds the {limit:.1}-bit budget")]
    NoiseBudgetExceeded { bits: f64, limit: f64 },
    #[error("malformed encoding: {0}")]
    Deserialize(String),
    #[error(transparent)]
    Length(#[from] LengthMismatch),
    #[error(transparent)]
    Params(#[from] ParamError),
}
