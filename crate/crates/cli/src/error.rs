use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step {step}: {source}")]
    Dynamics {
        step: u64,
        #[source]
        source: orgtree::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad trace: {0}")]
    Trace(String),
}

impl RunError {
    /// 1 config, 2 dynamics, 3 I/O (a malformed or incomplete trace counts
    /// as I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Dynamics { .. } => 2,
            RunError::Io(_) | RunError::Trace(_) => 3,
        }
    }
}
