use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("physical range error: {0}")]
    Physics(String),
    #[error(transparent)]
    Core(#[from] tavis_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl RunError {
    /// Process exit code: 1 for configuration problems, 2 for physical-range
    /// violations reported by the configuration checks or the simulator.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output(_) => 1,
            RunError::Physics(_) | RunError::Core(_) => 2,
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Output(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Output(e.to_string())
    }
}
