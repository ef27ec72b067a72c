use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-positive density {value:e} at cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },

    #[error("phase unwrap failed at cell {cell}: residual jump {jump:.4} rad exceeds pi")]
    UnwrapFailure { cell: usize, jump: f64 },

    #[error("time step not resolvable: {0}")]
    Unresolved(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("density fell below the floor in {cells} of {total} cells")]
    DensityCollapse { cells: usize, total: usize },

    #[error("supersonic regime: M = {0} (subsonic transform requires 0 <= M < 1)")]
    Supersonic(f64),

    #[error("node proximity at {position:?}: |psi|^2 = {density:e}")]
    NodeProximity { position: Vec<f64>, density: f64 },

    #[error("loop vertex {vertex} lies within {min_cells} cells of a vortex core")]
    LoopTouchesCore { vertex: usize, min_cells: f64 },

    #[error("zero-norm field")]
    ZeroNorm,

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("configuration error(s):\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One problem found while parsing or validating a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
