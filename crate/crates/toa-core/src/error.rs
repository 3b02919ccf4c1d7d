use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("non-finite amplitude at index {0}")]
    NonFinite(usize),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("representation or grid mismatch: {0}")]
    Mismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("stability violation: dt*E_max = {0:.4} (must be < 0.5)")]
    Stability(f64),
    #[error("wrap-around: guard-band probability {0:.3e} exceeds 1e-6")]
    WrapAround(f64),
    #[error("clock momentum grid spans {span:.4}, needs at least {needed:.4}")]
    SliceCoverage { span: f64, needed: f64 },
    #[error("premature readout: detected-channel flux {0:.3e} still at the detector")]
    PrematureReadout(f64),
    #[error("no detected weight to read out")]
    EmptyReadout,
    #[error("support violation: weight {0:.3e} outside the allowed region")]
    SupportViolation(f64),
    #[error("time window too small: edge density ratio {0:.3e}")]
    WindowTooSmall(f64),
    #[error("aliasing: {0}")]
    Aliasing(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
}
