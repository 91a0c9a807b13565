//! Run configuration.
//!
//! Configurations are TOML files with four main sections, `graph.*`,
//! `init.*`, `run.*` and `output.*`, plus optional `oracle.*` and `sweep.*`.
//! Dotted keys and tables are interchangeable:
//!
//! ```toml
//! graph.kind = "torus"
//! graph.lengths = [64, 64]
//! init.kind = "uniform_real"
//! init.a = 0
//! init.b = 1
//! run.seed = 7
//! run.max_steps = 100000
//! ```
//!
//! Every semantic error names the key at fault.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clusterflow_core::graph::{Boundary, EdgeTemplate, Graph, GraphError};
use clusterflow_core::init::{DistributionSpec, InitError, Law};
use clusterflow_core::{JointThreshold, RunOptions, ValueMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.to_string(),
        }
    }

    /// The offending key, when known.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// A number or the word `inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Number(f64),
    Word(InfWord),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InfWord {
    #[serde(rename = "inf")]
    Inf,
}

impl Level {
    pub fn to_f64(self) -> f64 {
        match self {
            Level::Number(v) => v,
            Level::Word(InfWord::Inf) => f64::INFINITY,
        }
    }
}

/// One length for every axis, or one per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lengths {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKindName {
    #[default]
    Torus,
    Layered,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    #[default]
    Periodic,
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default)]
    pub kind: GraphKindName,
    /// Dimension; defaults to the number of per-axis lengths (or 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    pub lengths: Lengths,
    #[serde(default)]
    pub boundary: BoundaryName,
    /// Layer count `J` (layered graphs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    /// `[from_layer, to_layer, offset_0, ..., offset_{d-1}]`, layers from 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub templates: Vec<Vec<i64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawName {
    Constant,
    UniformReal,
    Exponential,
    Pareto,
    TwoPoint,
    UniformInt,
    Geometric,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    Real,
}

/// Law parameters. Parameters that the chosen kind does not use are
/// ignored, so sweeps can vary `init.kind` over one parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: LawName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v1: Option<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v2: Option<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Level>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_shape: Option<Vec<usize>>,
    #[serde(default)]
    pub random_shift: bool,
}

fn default_max_steps() -> u64 {
    100_000
}

fn default_one() -> u64 {
    1
}

fn default_alpha() -> f64 {
    2.0
}

fn default_window() -> usize {
    16
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    /// Time-series cadence in steps.
    #[serde(default = "default_one")]
    pub record_every: u64,
    /// Exponent of the cluster-size moment column.
    #[serde(default = "default_alpha")]
    pub moment_alpha: f64,
    /// Gap thresholds for the joint counter.
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Cluster-size thresholds for the joint counter.
    #[serde(default)]
    pub ks: Vec<u32>,
    #[serde(default = "default_window")]
    pub type_window: usize,
    /// When false, an absorbed state keeps being stepped until `max_steps`
    /// (used for throughput measurements).
    #[serde(default = "default_true")]
    pub stop_at_absorption: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            max_steps: default_max_steps(),
            record_every: 1,
            moment_alpha: default_alpha(),
            deltas: Vec::new(),
            ks: Vec::new(),
            type_window: default_window(),
            stop_at_absorption: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; not part of the recorded configuration.
    #[serde(default, skip_serializing)]
    pub dir: Option<PathBuf>,
    /// Capture a field snapshot every this many steps; 0 disables.
    #[serde(default)]
    pub snapshot_every: u64,
}

fn default_tolerance() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub horizon: usize,
    pub trials: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Seeds per grid point: `run.seed, run.seed + 1, ...`.
    #[serde(default = "default_one")]
    pub seeds: u64,
    /// Dotted config key -> list of values.
    #[serde(default)]
    pub grid: toml::Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSection,
    pub init: InitSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml_str(&read(path)?)
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig, ConfigError> {
        let value: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        RunConfig::from_table(value)
    }

    pub fn from_table(table: toml::Table) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every section against the module preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.graph()?;
        self.distribution()?;
        let run = &self.run;
        if run.record_every == 0 {
            return Err(ConfigError::invalid("run.record_every", "must be at least 1"));
        }
        if !(run.moment_alpha >= 1.0 && run.moment_alpha.is_finite()) {
            return Err(ConfigError::invalid("run.moment_alpha", "must be finite and at least 1"));
        }
        if let Some(d) = run.deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(ConfigError::invalid("run.deltas", format!("{d} is not a positive threshold")));
        }
        if run.ks.contains(&0) {
            return Err(ConfigError::invalid("run.ks", "size thresholds must be at least 1"));
        }
        if let Some(oracle) = &self.oracle {
            if oracle.trials == 0 {
                return Err(ConfigError::invalid("oracle.trials", "must be at least 1"));
            }
            if oracle.tolerance.is_nan() || oracle.tolerance < 0.0 {
                return Err(ConfigError::invalid("oracle.tolerance", "must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match (&self.graph.d, &self.graph.lengths) {
            (Some(d), _) => *d,
            (None, Lengths::PerAxis(v)) => v.len(),
            (None, Lengths::Uniform(_)) => 1,
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        match &self.graph.lengths {
            Lengths::Uniform(l) => vec![*l; self.dimension()],
            Lengths::PerAxis(v) => v.clone(),
        }
    }

    pub fn graph(&self) -> Result<Graph, ConfigError> {
        let d = self.dimension();
        let lengths = self.lengths();
        let boundary = match self.graph.boundary {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Free => Boundary::Free,
        };
        let result = match self.graph.kind {
            GraphKindName::Torus => {
                if self.graph.layers.is_some() {
                    return Err(ConfigError::invalid("graph.layers", "only valid for layered graphs"));
                }
                if !self.graph.templates.is_empty() {
                    return Err(ConfigError::invalid("graph.templates", "only valid for layered graphs"));
                }
                Graph::torus(d, &lengths, boundary)
            }
            GraphKindName::Layered => {
                let layers = self
                    .graph
                    .layers
                    .ok_or_else(|| ConfigError::invalid("graph.layers", "required for layered graphs"))?;
                let templates = self
                    .graph
                    .templates
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        if t.len() != d + 2 || t[0] < 0 || t[1] < 0 {
                            return Err(ConfigError::invalid(
                                "graph.templates",
                                format!("template {i} must be [from_layer, to_layer] followed by {d} offsets"),
                            ));
                        }
                        Ok(EdgeTemplate::new(t[0] as usize, t[1] as usize, t[2..].to_vec()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Graph::layered(layers, d, &lengths, &templates, boundary)
            }
        };
        result.map_err(|e| {
            let key = match &e {
                GraphError::ZeroDimension | GraphError::LengthCount { .. } => "graph.d",
                GraphError::LengthTooSmall { .. } | GraphError::TooManyVertices => "graph.lengths",
                GraphError::NoLayers => "graph.layers",
                _ => "graph.templates",
            };
            ConfigError::invalid(key, e)
        })
    }

    fn param(&self, name: &'static str, value: Option<f64>) -> Result<f64, ConfigError> {
        value.ok_or_else(|| {
            ConfigError::invalid(
                format!("init.{name}"),
                format!("required for init.kind = {:?}", self.init.kind),
            )
        })
    }

    fn level(&self, name: &'static str, value: Option<Level>) -> Result<f64, ConfigError> {
        self.param(name, value.map(Level::to_f64))
    }

    fn count(&self, name: &'static str, value: Option<f64>) -> Result<u64, ConfigError> {
        let v = self.param(name, value)?;
        if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
            Ok(v as u64)
        } else {
            Err(ConfigError::invalid(format!("init.{name}"), format!("{v} is not a nonnegative integer")))
        }
    }

    pub fn law(&self) -> Result<Law, ConfigError> {
        let i = &self.init;
        Ok(match i.kind {
            LawName::Constant => Law::Constant {
                value: self.level("value", i.value)?,
            },
            LawName::UniformReal => Law::UniformReal {
                a: self.param("a", i.a)?,
                b: self.param("b", i.b)?,
            },
            LawName::Exponential => Law::Exponential {
                rate: self.param("rate", i.rate)?,
            },
            LawName::Pareto => Law::Pareto {
                shape: self.param("shape", i.shape)?,
                scale: self.param("scale", i.scale)?,
            },
            LawName::TwoPoint => Law::TwoPoint {
                v1: self.level("v1", i.v1)?,
                p: self.param("p", i.p)?,
                v2: self.level("v2", i.v2)?,
            },
            LawName::UniformInt => Law::UniformInt {
                a: self.count("a", i.a)?,
                b: self.count("b", i.b)?,
            },
            LawName::Geometric => Law::Geometric {
                p: self.param("p", i.p)?,
            },
            LawName::Pattern => Law::Pattern {
                values: i
                    .values
                    .as_ref()
                    .ok_or_else(|| ConfigError::invalid("init.values", "required for init.kind = pattern"))?
                    .iter()
                    .map(|l| l.to_f64())
                    .collect(),
                shape: i.pattern_shape.clone().unwrap_or_default(),
                random_shift: i.random_shift,
            },
        })
    }

    pub fn mode(&self) -> Result<ValueMode, ConfigError> {
        Ok(match self.init.mode {
            Some(ModeName::Exact) => ValueMode::Exact,
            Some(ModeName::Real) => ValueMode::Real,
            None => self.law()?.default_mode(),
        })
    }

    pub fn distribution(&self) -> Result<DistributionSpec, ConfigError> {
        let mut law = self.law()?;
        // A one-dimensional pattern may omit its shape.
        if let Law::Pattern { values, shape, .. } = &mut law {
            if shape.is_empty() && self.dimension() == 1 {
                shape.push(values.len());
            }
        }
        let spec = DistributionSpec::with_mode(law, self.mode()?);
        spec.validate().map_err(|e| {
            let key = match &e {
                InitError::InvalidParameter { param, .. } => format!("init.{param}"),
                InitError::NotIntegral { .. } | InitError::ModeMismatch { .. } => "init.mode".into(),
                InitError::PatternShape { .. } => "init.pattern_shape".into(),
                _ => "init.kind".into(),
            };
            ConfigError::invalid(key, e)
        })?;
        if let Law::Pattern { shape, .. } = &spec.law {
            if self.graph.kind != GraphKindName::Torus {
                return Err(ConfigError::invalid("init.kind", InitError::NotTorus));
            }
            if shape.len() != self.dimension() {
                return Err(ConfigError::invalid(
                    "init.pattern_shape",
                    format!("needs one period per axis ({} axes)", self.dimension()),
                ));
            }
            for (axis, (&p, &l)) in shape.iter().zip(&self.lengths()).enumerate() {
                if l % p != 0 {
                    return Err(ConfigError::invalid(
                        "init.pattern_shape",
                        InitError::PeriodMismatch { axis, period: p, length: l },
                    ));
                }
            }
        }
        Ok(spec)
    }

    /// `(delta, k)` pairs of the joint counter, deltas outermost.
    pub fn joint_thresholds(&self) -> Vec<JointThreshold> {
        self.run
            .deltas
            .iter()
            .flat_map(|&delta| self.run.ks.iter().map(move |&k| JointThreshold { delta, k }))
            .collect()
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            max_steps: self.run.max_steps,
            seed: self.run.seed,
            record_every: self.run.record_every,
            moment_alpha: self.run.moment_alpha,
            joint_thresholds: self.joint_thresholds(),
            type_window: self.run.type_window,
            stop_at_absorption: self.run.stop_at_absorption,
        }
    }
}

/// One grid point of a sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub index: usize,
    /// `(dotted key, value)` for every grid axis, in axis order.
    pub assignments: Vec<(String, toml::Value)>,
    pub seed: u64,
    pub config: Result<RunConfig, String>,
}

/// Expanded sweep: grid axes (sorted by key) times seeds, seeds innermost.
#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub axes: Vec<String>,
    pub points: Vec<SweepPoint>,
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), String> {
    let mut parts = key.split('.').peekable();
    let mut current = table;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            current.insert(part.to_string(), value);
            return Ok(());
        }
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("{key}: {part} is not a section"))?;
    }
    Err(format!("empty grid key {key:?}"))
}

impl SweepPlan {
    pub fn from_path(path: &Path, seed: Option<u64>) -> Result<SweepPlan, ConfigError> {
        SweepPlan::from_toml_str(&read(path)?, seed)
    }

    /// `seed` overrides `run.seed`, the first seed of every grid point.
    pub fn from_toml_str(text: &str, seed: Option<u64>) -> Result<SweepPlan, ConfigError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let sweep: SweepSection = match table.remove("sweep") {
            Some(v) => v.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(format!("sweep: {e}")))?,
            None => SweepSection {
                seeds: 1,
                grid: toml::Table::new(),
            },
        };
        if sweep.seeds == 0 {
            return Err(ConfigError::invalid("sweep.seeds", "must be at least 1"));
        }
        let mut axes: Vec<(String, Vec<toml::Value>)> = Vec::new();
        for (key, values) in &sweep.grid {
            match values {
                toml::Value::Array(list) if !list.is_empty() => axes.push((key.clone(), list.clone())),
                _ => {
                    return Err(ConfigError::invalid(
                        format!("sweep.grid.\"{key}\""),
                        "must be a nonempty list of values",
                    ))
                }
            }
        }
        let base_seed = match seed {
            Some(s) => s,
            None => match table.get("run").and_then(|r| r.get("seed")) {
                None => 0,
                Some(v) => v
                    .as_integer()
                    .filter(|&s| s >= 0)
                    .ok_or_else(|| ConfigError::invalid("run.seed", "must be a nonnegative integer"))?
                    as u64,
            },
        };
        let mut combos: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
        for (key, values) in &axes {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push((key.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        let mut points = Vec::new();
        for assignments in combos {
            for s in 0..sweep.seeds {
                let seed = base_seed.wrapping_add(s);
                let mut t = table.clone();
                let config = assignments
                    .iter()
                    .try_for_each(|(k, v)| set_dotted(&mut t, k, v.clone()))
                    .and_then(|_| set_dotted(&mut t, "run.seed", toml::Value::Integer(seed as i64)))
                    .and_then(|_| RunConfig::from_table(t).map_err(|e| e.to_string()));
                points.push(SweepPoint {
                    index: points.len(),
                    assignments: assignments.clone(),
                    seed,
                    config,
                });
            }
        }
        Ok(SweepPlan {
            axes: axes.into_iter().map(|(k, _)| k).collect(),
            points,
        })
    }
}

/// Renders a grid value compactly for CSV cells: `16`, `[16;16]`, `geometric`.
pub fn render_value(value: &toml::Value) -> String {
    match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(render_value).collect();
            format!("[{}]", inner.join(";"))
        }
        other => other.to_string(),
    }
}

/// Flat `key -> value` listing of a config, for diagnostics.
pub fn flatten(config: &RunConfig) -> BTreeMap<String, String> {
    fn walk(prefix: &str, value: &serde_json::Value, out: &mut BTreeMap<String, String>) {
        match value {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out);
                }
            }
            other => {
                out.insert(prefix.to_string(), other.to_string());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk("", &serde_json::to_value(config).expect("config serializes"), &mut out);
    out
}
