use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config {path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Sim(#[from] tqpsim::Error),
}

impl CliError {
    /// 2 for anything the caller can fix by changing the invocation, 1 for
    /// numerical failures inside a run.
    pub fn exit_code(&self) -> u8 {
        use tqpsim::Error as E;
        match self {
            CliError::Sim(
                E::NonConvergence { .. }
                | E::Optimizer(_)
                | E::NotDensityMatrix(_)
                | E::NotNormalized(_)
                | E::NotInvolution(_)
                | E::AncillaNotPlus(_)
                | E::EmptyBranch(_),
            ) => 1,
            CliError::Json(_) => 1,
            _ => 2,
        }
    }
}
