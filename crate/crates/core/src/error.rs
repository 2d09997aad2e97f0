use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grazing collision: |cos phi| = {cos_phi:.3e}")]
    Grazing { cos_phi: f64 },
    #[error("no collision within t_cap = {t_cap}")]
    CapExceeded { t_cap: f64 },
    #[error("operation not supported for the {0} variant")]
    UnsupportedVariant(&'static str),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("truncation too coarse: discarded branch mass {mass:.3e} exceeds {bound:.3e}")]
    TruncationTooCoarse { mass: f64, bound: f64 },
    #[error("no spectral gap: |lambda_1| = {lambda1}, |lambda_2| = {lambda2}")]
    NoGap { lambda1: f64, lambda2: f64 },
    #[error("empty subsystem")]
    EmptySubsystem,
    #[error("series did not converge: remainder bound {bound:.3e} exceeds tol {tol:.3e}")]
    NoConvergence { bound: f64, tol: f64 },
    #[error("inf roof {inf_roof} < 4|chi| + 1 with |chi| = {chi_sup}; replace the base map by its {power}-th power")]
    InducePowerNeeded {
        inf_roof: f64,
        chi_sup: f64,
        power: usize,
    },
    #[error("precision exhausted after {quotients} partial quotients")]
    PrecisionExhausted { quotients: usize },
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("degenerate range: all values coincide at scale resolution")]
    DegenerateRange,
    #[error("budget {budget} below the minimum {min}")]
    BudgetTooSmall { budget: usize, min: usize },
    #[error("fit window contains no usable points")]
    EmptyWindow,
    #[error("all window points are within 2 standard errors of zero")]
    NoiseDominated,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("series not decaying at s = {s_re} + {s_im}i (last term {last_term:.3e})")]
    SeriesNotDecaying {
        s_re: f64,
        s_im: f64,
        last_term: f64,
    },
    #[error("invalid config at `{key}`: {message}")]
    ConfigInvalid { key: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            key: key.into(),
            message: message.into(),
        }
    }
}
