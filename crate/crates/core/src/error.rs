use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// The potential parameters violate a validity constraint.
    #[error("invalid potential: {0}")]
    InvalidSpec(String),

    /// An index (stage, spacing order, Bloch level) is outside its range.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// Explicit interval enumeration requested beyond the stage cap.
    #[error("stage G={0} exceeds the interval-enumeration cap of {1} (2^G intervals)")]
    StageTooLarge(u32, u32),

    /// Two algebraically equivalent routes disagreed beyond tolerance.
    /// This signals an internal layout bug, not a caller mistake.
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    /// Closed-form and brute-force transmission disagree.
    #[error("oracle mismatch at k={k}: |T_closed - T_brute| = {delta:.3e} (rho={rho}, n={n}, G={stage}, V={v}, L={l})")]
    OracleMismatch {
        k: f64,
        delta: f64,
        rho: f64,
        n: f64,
        stage: u32,
        v: f64,
        l: f64,
    },

    /// A run-configuration file could not be parsed.
    #[error("config error{}: {msg}", line.map(|n| format!(" (line {n})")).unwrap_or_default())]
    Config { msg: String, line: Option<usize> },

    /// A grid file could not be parsed.
    #[error("malformed grid file {path} (line {line}): {msg}")]
    GridParse {
        path: String,
        line: usize,
        msg: String,
    },

    /// The scaling fit had no usable points (all reflections underflowed).
    #[error("degenerate scaling fit: {0}")]
    DegenerateFit(String),

    /// I/O failure with path context.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
