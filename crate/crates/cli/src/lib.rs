//! Configuration-driven experiment runner for `clusterflow-core`.
//!
//! The binary is a thin layer over this library: every subcommand is a
//! function here, so tests drive the same code paths as the command line.

use std::path::{Path, PathBuf};

use clusterflow_core::engine::EngineError;
use clusterflow_core::init::InitError;
use clusterflow_core::oracle::OracleError;
use thiserror::Error;

pub mod config;
pub mod oracle_check;
pub mod output;
pub mod run;
pub mod snapshot;
pub mod sweep;

pub use config::{ConfigError, RunConfig, SweepPlan};
pub use oracle_check::{oracle_check, OracleCheck};
pub use run::{execute_run, run_to_dir, with_initial_field, FieldTask, Manifest, RunSummary};
pub use snapshot::{snapshot, SnapshotFiles};
pub use sweep::{execute_sweep, SweepSummary};

/// Environment variable capping worker threads, whatever `--parallel` asks.
pub const MAX_PARALLEL_ENV: &str = "CLUSTERFLOW_MAX_PARALLEL";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial field: {0}")]
    Init(#[from] InitError),
    #[error("run aborted: {0}")]
    Engine(#[from] EngineError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("snapshot: {0}")]
    Snapshot(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input, 1 for failures while working.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Init(_) => 2,
            _ => 1,
        }
    }
}

/// Worker threads for a command: the request (default: all cores), capped
/// by [`MAX_PARALLEL_ENV`] when set.
pub fn thread_count(requested: Option<usize>) -> usize {
    let cap = std::env::var(MAX_PARALLEL_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    resolve_threads(requested, cap)
}

fn resolve_threads(requested: Option<usize>, cap: Option<usize>) -> usize {
    let want = requested
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.map_or(want, |c| want.min(c))
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// `--out` if given, else `output.dir`.
pub fn output_dir(config: &RunConfig, out: Option<&Path>) -> Result<PathBuf, ConfigError> {
    out.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .ok_or_else(|| ConfigError::invalid("output.dir", "no output directory; set output.dir or pass --out"))
}
