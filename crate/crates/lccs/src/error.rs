use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-physical coupling: {0}")]
    NonPhysicalCoupling(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical blowup at t = {t:.9} s (|x| exceeded {bound:.3e}), recent modes {mode_tail:?}")]
    NumericalBlowup {
        t: f64,
        bound: f64,
        mode_tail: Vec<u8>,
    },

    #[error("steady state not reached{}", match .f_s { Some(f) => format!(" at f_s = {f} Hz"), None => String::new() })]
    Unsettled { f_s: Option<f64> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("replay buffer holds {have} transitions, {want} requested")]
    InsufficientData { have: usize, want: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("training aborted: {0}")]
    TrainingAborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
