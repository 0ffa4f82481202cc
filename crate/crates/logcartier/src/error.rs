//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LcError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unbounded-search guard exceeded (non-pointed configuration): {0}")]
    NotPointed(String),
    #[error("chart validation failed: {0}")]
    InvalidChart(String),
    #[error("point outside the group lattice: {0}")]
    NotInGroup(String),
    #[error("support outside the monoid: {0}")]
    SupportOutside(String),
    #[error("operator basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("operator order overflow beyond bound {bound} at index {index}")]
    OrderOverflow { bound: u16, index: String },
    #[error("order bound unsupported: component {0} exceeds p (one divided-power block per variable)")]
    DividedPowerBlock(u16),
    #[error("theta decomposition requires a base with trivial log structure (Q = 0)")]
    ThetaNeedsTrivialBase,
    #[error("form is not closed: {0}")]
    NotClosed(String),
    #[error("connection is not integrable: {0}")]
    NotIntegrable(String),
    #[error("matrices do not commute: {0}")]
    NotCommuting(String),
    #[error("not nilpotent within cap {0}")]
    NotNilpotent(usize),
    #[error("nilpotence level {level} is not smaller than p = {p}")]
    LevelTooLarge { level: usize, p: u32 },
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("resource guard exceeded: {0}")]
    ResourceGuard(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, LcError>;
