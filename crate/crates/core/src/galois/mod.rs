//! Arithmetic over GF(2^m), dense matrices, and Reed-Solomon codes with
//! joint erasure and error decoding.

mod field;
mod matrix;
mod rs;

use thiserror::Error;

pub use field::{gf_inv, gf_mul, Field, FieldElement, MAX_EXPONENT, MIN_EXPONENT};
pub use matrix::{mat_solve, FieldMatrix};
pub use rs::{rs_decode, RsCode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("unsupported field GF(2^{0}); m must be in 2..=16")]
    UnsupportedField(u8),
    #[error("value {value} is not an element of GF(2^{m})")]
    ValueOutOfRange { value: u16, m: u8 },
    #[error("operands from different fields: GF(2^{left}) and GF(2^{right})")]
    FieldMismatch { left: u8, right: u8 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("position {position} outside code of length {n}")]
    InvalidPosition { position: usize, n: usize },
    #[error("position {0} received twice")]
    DuplicatePosition(usize),
    #[error("need {needed} symbols, only {available} available")]
    InsufficientData { needed: usize, available: usize },
    #[error(
        "no codeword within {radius} errors of the {available} received symbols \
         (closest candidate disagrees on {closest})"
    )]
    DecodeFailure {
        available: usize,
        radius: usize,
        closest: usize,
    },
}
