use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("index {index} outside the covered range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("truncation N={have} too small: need at least {need}")]
    TruncationTooSmall { have: usize, need: usize },

    #[error("row {row} needs x_{needed} but the prefix stops at N={have}")]
    TruncationIncomplete {
        row: usize,
        needed: usize,
        have: usize,
    },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("bounded modulus `{0}`: f-density is only defined for unbounded moduli")]
    BoundedModulus(String),

    #[error("modular overflows to +inf at index {index}")]
    ModularOverflow { index: usize },

    #[error("Luxemburg norm unbounded: modular stays above 1 up to k = {k_max:e}")]
    UnboundedNorm { k_max: f64 },

    #[error("family `{family}` is undefined at index {index}")]
    FamilyUndefined { family: String, index: usize },

    #[error("scheme needs {needed} terms but the prefix has N={have}")]
    SchemeBeyondTruncation { needed: usize, have: usize },

    #[error("only {have} blocks available, need at least {need}")]
    TooFewBlocks { have: usize, need: usize },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("no threshold r_j within the truncation at level j={level}: f(|B_j(n)|)/f(n) = {ratio} is not below 1/{level} at n={at}")]
    WitnessStuck { level: usize, at: usize, ratio: f64 },

    #[error("nested intervals emptied at level {level}")]
    EmptyIntersection { level: usize },

    #[error("no Cauchy anchor found at level {level} (eps = {eps})")]
    MissingAnchor { level: usize, eps: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn spec(spec: &str, reason: impl Into<String>) -> Self {
        Error::Spec {
            spec: spec.to_string(),
            reason: reason.into(),
        }
    }
}
