//! Error taxonomy shared by the library.

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by ring arithmetic, key generation, evaluation, parameter
/// derivation, program handling, and the wire format.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two ring elements of different dimension were combined.
    #[error("ring dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// Two ring elements with different coefficient moduli were combined.
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(String, String),

    /// A rescaling was requested between moduli that do not divide.
    #[error("rescale requires target modulus to divide source: {0} does not divide {1}")]
    IndivisibleModulus(String, String),

    /// A parameter value is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Program text could not be parsed.
    #[error("program parse error at line {line}: {msg}")]
    ProgramParse { line: usize, msg: String },

    /// A syntactically valid program failed static validation.
    #[error("program validation failed at instruction {instr}: {msg}")]
    Validation { instr: usize, msg: String },

    /// A serialized object could not be decoded.
    #[error("wire format error: {0}")]
    Wire(String),
}

impl Error {
    pub(crate) fn modulus_mismatch(a: &crate::ring::Modulus, b: &crate::ring::Modulus) -> Self {
        Error::ModulusMismatch(a.to_string(), b.to_string())
    }
}
