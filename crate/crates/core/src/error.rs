// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Every failure the toolkit can report.
///
/// Variants are grouped by the layer that raises them; [`Error::category`]
/// collapses them into the coarse classes the CLI maps to exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    // pairing backend
    #[error("unsupported security level: {0} bits (only 128 is available)")]
    UnsupportedSecurityLevel(u32),
    #[error("invalid attribute token {0:?}")]
    InvalidAttributeToken(String),
    #[error("randomness source unavailable: {0}")]
    RandomnessUnavailable(String),
    #[error("invalid group element encoding: {0}")]
    InvalidGroupElement(String),

    // access policy
    #[error("policy syntax error at byte {position}: {message}")]
    SyntaxError { position: usize, message: String },
    #[error("threshold {threshold} out of range for {children} children")]
    ThresholdOutOfRange { threshold: u64, children: usize },
    #[error("interpolation point not in set")]
    PointNotInSet,
    #[error("interpolation set has duplicate or zero points")]
    DegenerateSet,
    #[error("attribute set does not satisfy the access policy")]
    NotSatisfied,

    // ABE
    #[error("attribute set is empty")]
    EmptyAttributeSet,
    #[error("attribute set does not satisfy the ciphertext policy")]
    PolicyNotSatisfied,
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("private key lacks attribute {0:?}")]
    AttributeMissing(String),

    // envelope
    #[error("wrapped key digest mismatch")]
    IntegrityFailure,
    #[error("bad padding or wrong key")]
    BadPadding,
    #[error("ciphertext was produced under a different data key")]
    DekMismatch,

    // containers
    #[error("corrupt container: {0}")]
    CorruptContainer(String),
    #[error("unsupported format version {0}")]
    VersionUnsupported(u8),

    // authority
    #[error("attribute {0:?} is not in the universe")]
    UnknownAttribute(String),
    #[error("invalid user id {0:?}")]
    InvalidUserId(String),
    #[error("user {0:?} already registered")]
    DuplicateUser(String),
    #[error("storage error: {0}")]
    StorageError(String),

    // docstore
    #[error("field {0:?} configured twice")]
    DuplicateField(String),
    #[error("field {0:?} is not configured in this collection")]
    UnknownField(String),
    #[error("field {0:?} is not deterministically encrypted")]
    NotDeterministicField(String),
    #[error("corrupt store: {0}")]
    CorruptStore(String),

    // bench
    #[error("benchmark setup missing: {0}")]
    SetupMissing(String),
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
}

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Crypto,
    Storage,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            UnsupportedSecurityLevel(_) | InvalidAttributeToken(_) | SyntaxError { .. }
            | ThresholdOutOfRange { .. } | DuplicateField(_) | UnknownField(_)
            | NotDeterministicField(_) | UnknownAttribute(_) | DuplicateUser(_)
            | InvalidUserId(_) | InvalidConfig(_) => {
                ErrorCategory::Usage
            }
            StorageError(_) | CorruptStore(_) | CorruptContainer(_) | VersionUnsupported(_)
            | SetupMissing(_) => ErrorCategory::Storage,
            _ => ErrorCategory::Crypto,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::StorageError(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
