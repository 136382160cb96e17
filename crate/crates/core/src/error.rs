use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("site range [{lo}, {hi}] does not cover the support [{support_lo}, {support_hi}]")]
    Window {
        lo: i64,
        hi: i64,
        support_lo: i64,
        support_hi: i64,
    },
    #[error("index out of realized range: {0}")]
    Range(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("light-cone violation: {0}")]
    LightCone(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("unsupported combination: {0}")]
    Capability(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("numerical tolerance not met: {0}")]
    Tolerance(String),
    #[error("invalid slot array: {0}")]
    Slots(String),
    #[error("identity violated: {0}")]
    Identity(String),
    #[error("internal consistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
