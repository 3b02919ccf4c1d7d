use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown experiment '{0}' (see `toa-lab list`)")]
    UnknownExperiment(String),
    #[error(transparent)]
    Core(#[from] toa_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl LabError {
    /// 2 for anything the user can fix in the config, 3 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        use toa_core::Error as E;
        match self {
            LabError::Core(e) => match e {
                E::Stability(_)
                | E::WrapAround(_)
                | E::NonFinite(_)
                | E::PrematureReadout(_)
                | E::WindowTooSmall(_)
                | E::Aliasing(_)
                | E::Resolution(_)
                | E::EmptyReadout
                | E::ZeroNorm => 3,
                _ => 2,
            },
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Config(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Output(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
