//! Functional kernels for an RNS-CKKS workload: wide-word Montgomery
//! arithmetic, NTT-friendly prime bases, negacyclic number-theoretic
//! transforms (direct and four-step), recursive blocked transposes with
//! traffic accounting, and a toy RNS-CKKS scheme whose operations report a
//! kernel census.
//!
//! Everything here is exact desk-scale arithmetic meant for validation and
//! for feeding the architecture model in `cryptolight-model`; it is not a
//! hardened cryptographic library.

pub mod census;
pub mod ckks;
pub mod modarith;
pub mod ntt;
pub mod rns;
pub mod transpose;
pub mod wideint;

pub use census::KernelCounts;
pub use ckks::{Ciphertext, CkksContext, Complex, KeySwitchHint, Plaintext, SchemeParams};
pub use modarith::{ModElement, MontgomeryContext};
pub use rns::RnsBasis;
pub use wideint::WideUInt;

/// Errors surfaced by parsing, parameter validation, and serialization.
/// Contract violations (capacity mismatches, foreign-context elements) panic
/// instead, as they indicate caller bugs rather than bad input data.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("element is not invertible")]
    NotInvertible,
    #[error("serialization error: {0}")]
    Serialization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
