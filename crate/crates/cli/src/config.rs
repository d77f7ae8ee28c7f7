use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable read for the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "TQPSIM_THREADS";
pub const DEFAULT_SEED: u64 = 1;

/// On-disk config: global fields plus one subcommand's parameter block.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "P: Deserialize<'de> + Default"))]
pub struct RunConfig<P> {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub params: P,
}

impl<P: Default> Default for RunConfig<P> {
    fn default() -> Self {
        Self {
            seed: None,
            out: None,
            cutoff: None,
            threads: None,
            params: P::default(),
        }
    }
}

impl<P: DeserializeOwned + Default> RunConfig<P> {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Command-line values; each one beats the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub cutoff: Option<usize>,
    pub threads: Option<usize>,
}

/// Where the worker count came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThreadSource {
    Flag,
    Env,
    Config,
    Default,
}

/// Fully resolved global settings handed to a subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub cutoff: Option<usize>,
    pub threads: usize,
    pub thread_source: ThreadSource,
    pub config_file: Option<PathBuf>,
}

impl Context {
    /// Resolves `P` and the globals. Thread precedence is `--threads`, then
    /// `TQPSIM_THREADS`, then the config file, then rayon's default.
    pub fn resolve<P: DeserializeOwned + Default>(
        overrides: &Overrides,
        env_threads: Option<&str>,
        default_out: &str,
    ) -> Result<(Self, P), CliError> {
        let file = match &overrides.config {
            Some(path) => RunConfig::<P>::load(path)?,
            None => RunConfig::default(),
        };
        let env_threads = match env_threads {
            Some(s) => Some(s.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))
            })?),
            None => None,
        };
        let (threads, thread_source) = if let Some(t) = overrides.threads {
            (t, ThreadSource::Flag)
        } else if let Some(t) = env_threads {
            (t, ThreadSource::Env)
        } else if let Some(t) = file.threads {
            (t, ThreadSource::Config)
        } else {
            (rayon::current_num_threads(), ThreadSource::Default)
        };
        if threads == 0 {
            return Err(CliError::Usage("thread count must be at least 1".into()));
        }
        let cutoff = overrides.cutoff.or(file.cutoff);
        if let Some(d) = cutoff {
            if d < 2 {
                return Err(CliError::Usage(format!("cutoff must be at least 2, got {d}")));
            }
        }
        let ctx = Context {
            seed: overrides.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out: overrides
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(default_out)),
            cutoff,
            threads,
            thread_source,
            config_file: overrides.config.clone(),
        };
        Ok((ctx, file.params))
    }

    /// Defaults for library callers: given output path, one thread per core.
    pub fn new(out: impl Into<PathBuf>, seed: u64) -> Self {
        Context {
            seed,
            out: out.into(),
            cutoff: None,
            threads: rayon::current_num_threads(),
            thread_source: ThreadSource::Default,
            config_file: None,
        }
    }

    pub fn with_cutoff(mut self, d: usize) -> Self {
        self.cutoff = Some(d);
        self
    }

    /// Runs `f` on a pool of `self.threads` workers.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.threads).build()?;
        Ok(pool.install(f))
    }
}
