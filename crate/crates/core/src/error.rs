use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("characteristic needs a non-empty, even number of corners (got {0})")]
    CornerCount(usize),
    #[error("corner x-coordinates must be strictly increasing (corner {index})")]
    NonMonotone { index: usize },
    #[error("slopes must be positive (k1 = {k1}, k2 = {k2})")]
    BadSign { k1: f64, k2: f64 },
    #[error("section between corners {from} and {to} has slope {found}, expected {expected}")]
    SlopeMismatch {
        from: usize,
        to: usize,
        found: f64,
        expected: f64,
    },
    #[error("odd corner {index} must lie above the following corner")]
    CornerOrder { index: usize },
    #[error("parameters must be positive (alpha = {alpha}, beta = {beta})")]
    BadParams { alpha: f64, beta: f64 },
    #[error("alpha = {alpha} is within tolerance of k2 but the isocline/dropping-section coincidence is ambiguous")]
    DegenerateLine { alpha: f64 },
    #[error("crossing root could not be refined near t = {tau}")]
    ToleranceExhausted { tau: f64 },
    #[error("trajectory is trapped inside region {region} without converging")]
    Trapped { region: usize },
    #[error("arc {arc}: {source}")]
    Arc { arc: usize, source: Box<Error> },
    #[error("point ({x}, {y}) is not on section {corner}")]
    OffSection { corner: usize, x: f64, y: f64 },
    #[error("no solution of the half-turn equation for S0 = {s0}")]
    NoSolution { s0: f64 },
    #[error("trajectory does not return to the section")]
    NonReturning,
    #[error("trajectory is not a closed circuit through the section")]
    OpenTrajectory,
    #[error("no root of the center condition for k1 = {k1}, k2 = {k2}")]
    NoRoot { k1: f64, k2: f64 },
    #[error("alpha = {alpha} >= k2 = {k2}: there is no saddle")]
    NotSaddle { alpha: f64, k2: f64 },
    #[error("separatrix gap does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ToleranceExhausted { .. }
                | Error::Trapped { .. }
                | Error::Arc { .. }
                | Error::NoSolution { .. }
                | Error::NonReturning
                | Error::OpenTrajectory
                | Error::NoRoot { .. }
                | Error::NoSignChange { .. }
                | Error::Geometry(_)
        )
    }
}
