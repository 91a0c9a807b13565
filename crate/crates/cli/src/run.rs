//! Single runs and their manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clusterflow_core::engine::{self, Observer, StepView};
use clusterflow_core::graph::Graph;
use clusterflow_core::oracle::ToAmount;
use clusterflow_core::stats::{self, RunResult, VertexType};
use clusterflow_core::{sample_field, Exact, Field, Real, Resource, TimeSeriesRow, ValueMode};
use serde::{Deserialize, Serialize};

use crate::output::{self, Inventory, OutputEntry, CSV_SCHEMA_VERSION};
use crate::{CliError, RunConfig};

pub const TIMESERIES: &str = "timeseries.csv";
pub const FINAL_FIELD: &str = "final_field.csv";
pub const FINAL_PGM: &str = "final_field.pgm";
pub const MOVING_MASS: &str = "moving_mass.csv";
pub const MANIFEST: &str = "manifest.json";

pub fn snapshot_path(step: u64) -> String {
    format!("snapshots/step_{step}.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub version: u32,
    pub timeseries_columns: Vec<String>,
}

/// The reproducible part of a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestBody {
    pub artifact: String,
    pub version: String,
    pub config: serde_json::Value,
    pub mode: String,
    pub vertex_count: usize,
    pub csv_schema: CsvSchema,
    pub absorbed: bool,
    pub absorption_step: Option<u64>,
    pub steps_taken: u64,
    /// Final vertex types: `A`, `B`, `C`, `undetermined`.
    pub vertex_types: BTreeMap<String, usize>,
    pub outputs: Vec<OutputEntry>,
}

/// Machine-dependent measurements, kept out of the body digest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub engine_seconds: f64,
    pub steps_per_second: f64,
    pub vertex_updates_per_second: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub body: ManifestBody,
    /// SHA-256 of the compact JSON encoding of the body.
    pub body_sha256: String,
    pub timing: Timing,
}

impl Manifest {
    pub fn read(run_dir: &Path) -> Result<Manifest, CliError> {
        let path = run_dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Snapshot(format!("{}: {e}", path.display())))
    }

    /// The configuration the run was produced from.
    pub fn config(&self) -> Result<RunConfig, CliError> {
        serde_json::from_value(self.body.config.clone())
            .map_err(|e| CliError::Snapshot(format!("manifest config: {e}")))
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub final_row: Option<TimeSeriesRow>,
}

/// Work that needs the initial field in its concrete value mode.
pub trait FieldTask {
    type Output;
    fn run<V: Resource + ToAmount>(self, config: &RunConfig, graph: &Graph, field: Field<V>) -> Self::Output;
}

/// Builds the graph, samples `C_0` with `run.seed` and hands both to `task`.
pub fn with_initial_field<T: FieldTask>(config: &RunConfig, task: T) -> Result<T::Output, CliError> {
    let graph = config.graph()?;
    let spec = config.distribution()?;
    let seed = config.run.seed;
    Ok(match spec.mode {
        ValueMode::Exact => task.run(config, &graph, sample_field::<Exact>(&graph, &spec, seed)?),
        ValueMode::Real => task.run(config, &graph, sample_field::<Real>(&graph, &spec, seed)?),
    })
}

fn moving_mass_csv<V: Resource>(result: &RunResult<V>) -> String {
    let mut out = String::from("n,origins,mass,lower_bound\n");
    for n in 0..=result.steps_taken {
        let m = stats::moving_mass_fraction(result, n);
        let _ = writeln!(out, "{n},{},{},{}", m.origins, m.mass, m.lower_bound);
    }
    out
}

fn type_counts<V: Resource>(result: &RunResult<V>) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = ["A", "B", "C", "undetermined"].iter().map(|k| (k.to_string(), 0)).collect();
    for t in stats::vertex_type(result) {
        let key = match t {
            VertexType::A => "A",
            VertexType::B => "B",
            VertexType::C => "C",
            VertexType::Undetermined => "undetermined",
        };
        *counts.get_mut(key).expect("preset key") += 1;
    }
    counts
}

/// Runs `field0` to absorption or `run.max_steps` and writes every artifact
/// into `out`. `extra` observers see each step alongside the built-in ones.
pub fn run_to_dir<V: Resource>(
    config: &RunConfig,
    graph: &Graph,
    field0: Field<V>,
    out: &Path,
    extra: &mut [&mut dyn Observer<V>],
) -> Result<(RunSummary, RunResult<V>), CliError> {
    let started = Instant::now();
    let opts = config.run_options();
    let mut inventory = Inventory::new(out);
    let every = config.output.snapshot_every;
    let mut snapshot_error: Option<CliError> = None;
    let mut snapshots = |view: &StepView<'_, V>| {
        let step = view.field.step;
        if every > 0 && step.is_multiple_of(every) && snapshot_error.is_none() {
            let text = output::field_csv(view.graph, view.field);
            if let Err(e) = inventory.write(&snapshot_path(step), text.as_bytes()) {
                snapshot_error = Some(e);
            }
        }
    };
    let engine_started = Instant::now();
    let result = {
        let mut observers: Vec<&mut dyn Observer<V>> = vec![&mut snapshots];
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        engine::run(graph, field0, &opts, &mut observers)?
    };
    let engine_seconds = engine_started.elapsed().as_secs_f64();
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    let columns = output::timeseries_columns(opts.moment_alpha, &opts.joint_thresholds);
    inventory.write(TIMESERIES, output::timeseries_csv(&result.rows, &columns).as_bytes())?;
    inventory.write(FINAL_FIELD, output::field_csv(graph, &result.final_field).as_bytes())?;
    let levels: Vec<f64> = result.final_field.values.iter().map(|v| v.to_f64()).collect();
    if let Some(image) = output::field_pgm(graph, &levels) {
        inventory.write(FINAL_PGM, &image)?;
    }
    inventory.write(MOVING_MASS, moving_mass_csv(&result).as_bytes())?;

    let mut recorded = config.clone();
    recorded.output.dir = None;
    let body = ManifestBody {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(&recorded).expect("config serializes"),
        mode: V::MODE.as_str().to_string(),
        vertex_count: graph.vertex_count(),
        csv_schema: CsvSchema {
            version: CSV_SCHEMA_VERSION,
            timeseries_columns: columns,
        },
        absorbed: result.absorbed,
        absorption_step: result.absorption_step,
        steps_taken: result.steps_taken,
        vertex_types: type_counts(&result),
        outputs: inventory.into_entries(),
    };
    let body_sha256 = output::sha256_hex(&serde_json::to_vec(&body).expect("manifest serializes"));
    let rate = |count: f64| if engine_seconds > 0.0 { count / engine_seconds } else { 0.0 };
    let mut manifest = Manifest {
        body,
        body_sha256,
        timing: Timing {
            wall_seconds: 0.0,
            engine_seconds,
            steps_per_second: rate(result.steps_taken as f64),
            vertex_updates_per_second: rate(result.steps_taken as f64 * graph.vertex_count() as f64),
            threads: rayon::current_num_threads(),
        },
    };
    manifest.timing.wall_seconds = started.elapsed().as_secs_f64();
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    output::write_file(&out.join(MANIFEST), text.as_bytes())?;
    let summary = RunSummary {
        dir: out.to_path_buf(),
        manifest,
        final_row: result.rows.last().cloned(),
    };
    Ok((summary, result))
}

struct WriteRun<'a> {
    out: &'a Path,
}

impl FieldTask for WriteRun<'_> {
    type Output = Result<RunSummary, CliError>;

    fn run<V: Resource + ToAmount>(self, config: &RunConfig, graph: &Graph, field: Field<V>) -> Self::Output {
        run_to_dir(config, graph, field, self.out, &mut []).map(|(summary, _)| summary)
    }
}

/// The `run` subcommand: one run of `config` written to `out`.
pub fn execute_run(config: &RunConfig, out: &Path) -> Result<RunSummary, CliError> {
    with_initial_field(config, WriteRun { out })?
}
