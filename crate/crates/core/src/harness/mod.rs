//! Configuration, evaluation and output for the `dlc` command-line tool.

pub mod config;
pub mod output;
pub mod run;
pub mod selftest;

use thiserror::Error;

/// Environment variable holding the number of worker threads.
pub const THREADS_ENV: &str = "DLC_THREADS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DOMAIN: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Config(#[from] config::ConfigError),

    #[error("{0}")]
    Core(#[from] crate::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) | HarnessError::Io(_) => exit::USAGE,
            HarnessError::Core(e) if e.is_numerical() => exit::NUMERICAL,
            HarnessError::Core(crate::Error::InvalidParameter(_)) => exit::USAGE,
            HarnessError::Core(_) => exit::DOMAIN,
        }
    }
}

/// Thread count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(HarnessError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

/// Configure the global rayon pool. Has no effect if the pool already
/// exists.
pub fn init_threads(n: Option<usize>) {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        b = b.num_threads(n);
    }
    let _ = b.build_global();
}
