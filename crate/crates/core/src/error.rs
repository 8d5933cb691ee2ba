use thiserror::Error;

/// One config validation problem, located by its JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Errors produced by device construction, transport and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("width of {requested_nm:.3} nm gives {rows} transverse rows, need at least {min}")]
    TooNarrow { requested_nm: f64, rows: usize, min: usize },

    #[error("device is too short: {periods} unit cells, need at least 2")]
    TooShort { periods: usize },

    #[error("lattice topology: {0}")]
    Topology(String),

    #[error("left and right leads are disconnected")]
    Disconnected,

    #[error("hamiltonian is not hermitian: {0}")]
    NonHermitian(String),

    #[error("lead surface green's function did not converge at E = {energy} eV (eta = {eta} eV) after {iterations} iterations")]
    LeadNotConverged { energy: f64, eta: f64, iterations: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("energy grid too coarse: step {step:.3e} eV exceeds k_B T / 4 = {limit:.3e} eV")]
    GridTooCoarse { step: f64, limit: f64 },

    #[error("thermal window [{lo:.6}, {hi:.6}] eV exceeds curve range [{min:.6}, {max:.6}] eV")]
    WindowOutOfRange { lo: f64, hi: f64, min: f64, max: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("series resistance {r_ohm} ohm over-subtracts point {index} (1/G = {inverse_g_ohm} ohm)")]
    OverSubtraction { index: usize, r_ohm: f64, inverse_g_ohm: f64 },

    #[error("no half plateau resolvable: {0}")]
    NoHalfPlateau(String),

    #[error("schema error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { line: Option<usize>, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{} config issue(s): {}", .0.len(), .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ConfigIssue>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
