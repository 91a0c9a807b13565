use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clusterflow::{output_dir, thread_count, with_threads, CliError, RunConfig, SweepPlan};

/// Greedy resource-flow dynamics on lattices: runs, sweeps, oracle checks
/// and snapshot export.
#[derive(Parser, Debug)]
#[command(name = "clusterflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores; capped by CLUSTERFLOW_MAX_PARALLEL).
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration to absorption or run.max_steps.
    Run(Common),
    /// Run every grid point times seed of a sweep configuration.
    Sweep(Common),
    /// Compare engine frequencies with exact enumeration.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Overrides oracle.tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Export a captured field of a finished run as CSV (and PGM in 2D).
    Snapshot {
        /// Run output directory (holding manifest.json).
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        step: u64,
        /// Export directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    Ok(config)
}

fn execute(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Run(common) => {
            let config = load(&common)?;
            let out = output_dir(&config, common.out.as_deref())?;
            let summary = with_threads(thread_count(common.parallel), || clusterflow::execute_run(&config, &out))?;
            let m = &summary.manifest;
            match m.body.absorption_step {
                Some(step) => println!("absorbed at step {step}"),
                None => println!("not absorbed after {} steps", m.body.steps_taken),
            }
            println!(
                "{:.1} steps/s over {} vertices; artifacts in {}",
                m.timing.steps_per_second,
                m.body.vertex_count,
                out.display()
            );
            Ok(true)
        }
        Command::Sweep(common) => {
            let plan = SweepPlan::from_path(&common.config, common.seed)?;
            let out = match &common.out {
                Some(out) => out.clone(),
                None => {
                    let base = RunConfig::from_path(&common.config).ok();
                    let dir = base.and_then(|c| c.output.dir);
                    dir.ok_or_else(|| {
                        clusterflow::ConfigError::invalid("output.dir", "no output directory; set output.dir or pass --out")
                    })?
                }
            };
            let summary = with_threads(thread_count(common.parallel), || clusterflow::execute_sweep(&plan, &out))?;
            println!("{} runs, {} failed; summary in {}", summary.rows, summary.failures, summary.csv_path.display());
            Ok(true)
        }
        Command::OracleCheck { common, tolerance } => {
            let config = load(&common)?;
            let check = with_threads(thread_count(common.parallel), || clusterflow::oracle_check(&config, tolerance))?;
            let json = serde_json::to_string_pretty(&check).expect("report serializes") + "\n";
            if let Some(dir) = common.out.clone().or(config.output.dir.clone()) {
                clusterflow::output::write_file(&dir.join("oracle_report.json"), json.as_bytes())?;
            }
            print!("{json}");
            Ok(check.pass)
        }
        Command::Snapshot { run, step, out } => {
            let out = out.unwrap_or_else(|| run.clone());
            let files = clusterflow::snapshot(&run, step, &out)?;
            println!("{}", files.csv.display());
            if let Some(pgm) = files.pgm {
                println!("{}", pgm.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
