use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] quenched_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for failures of the theory's hypotheses, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use quenched_core::Error as E;
        match self {
            CliError::Core(E::NoDecay { .. } | E::DegenerateVariance { .. } | E::NotExpanding { .. }) => 2,
            _ => 1,
        }
    }
}
