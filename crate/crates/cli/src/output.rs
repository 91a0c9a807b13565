//! Artifact writers: time-series and field CSV, PGM images, digests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clusterflow_core::graph::Graph;
use clusterflow_core::{Field, JointThreshold, Resource, TimeSeriesRow};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Bumped whenever a CSV layout changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One entry of a manifest's output inventory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Collects written files and their digests.
#[derive(Debug)]
pub struct Inventory {
    root: PathBuf,
    entries: Vec<OutputEntry>,
}

impl Inventory {
    pub fn new(root: &Path) -> Self {
        Inventory {
            root: root.to_path_buf(),
            entries: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_file(&self.root.join(relative), bytes)?;
        self.entries.push(OutputEntry {
            path: relative.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn into_entries(mut self) -> Vec<OutputEntry> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        self.entries
    }
}

/// Column label for the cluster-size moment, e.g. `moment_alpha2`.
pub fn moment_column(alpha: f64) -> String {
    format!("moment_alpha{alpha}")
}

pub fn joint_column(t: &JointThreshold) -> String {
    format!("joint_gap_{}_{}", t.delta, t.k)
}

pub fn timeseries_columns(alpha: f64, joints: &[JointThreshold]) -> Vec<String> {
    let mut cols: Vec<String> = ["step", "activity", "ties", "count_A", "count_B", "count_C", "count_D", "count_E"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(["max_gap", "mean_gap", "active_count", "max_cluster"].map(String::from));
    cols.push(moment_column(alpha));
    cols.extend(joints.iter().map(joint_column));
    cols.push("total_mass".into());
    cols
}

pub fn timeseries_csv(rows: &[TimeSeriesRow], columns: &[String]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{}", r.step, r.activity, r.ties);
        for c in r.counts {
            let _ = write!(out, ",{c}");
        }
        let _ = write!(
            out,
            ",{},{},{},{},{}",
            r.max_gap, r.mean_gap, r.active_count, r.max_cluster, r.moment_alpha
        );
        for j in &r.joint_gap {
            let _ = write!(out, ",{j}");
        }
        let _ = writeln!(out, ",{}", r.total_mass);
    }
    out
}

fn coordinate_header(g: &Graph) -> String {
    let mut header = String::from("vertex");
    if !g.is_torus() {
        header.push_str(",layer");
    }
    for axis in 0..g.dimension() {
        let _ = write!(header, ",x{axis}");
    }
    header.push_str(",value\n");
    header
}

/// `vertex,[layer,]x0,...,value`, one row per vertex.
pub fn field_csv<V: Resource>(g: &Graph, field: &Field<V>) -> String {
    let mut out = coordinate_header(g);
    for (x, v) in field.values.iter().enumerate() {
        let (layer, coords) = g.coordinates(x);
        let _ = write!(out, "{x}");
        if !g.is_torus() {
            let _ = write!(out, ",{layer}");
        }
        for c in coords {
            let _ = write!(out, ",{c}");
        }
        let _ = writeln!(out, ",{v}");
    }
    out
}

/// Reads the value column of a field CSV; `inf` becomes `f64::INFINITY`.
pub fn parse_field_csv(text: &str) -> Result<Vec<f64>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty field file")?;
    if !header.starts_with("vertex") || !header.ends_with("value") {
        return Err(format!("unexpected header {header:?}"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cell = line.rsplit(',').next().unwrap_or("");
            if cell == "inf" {
                Ok(f64::INFINITY)
            } else {
                cell.parse::<f64>()
                    .map_err(|e| format!("line {}: bad value {cell:?}: {e}", i + 2))
            }
        })
        .collect()
}

/// Binary 8-bit PGM of a row-major `height x width` grid. Finite values are
/// min-max scaled to 0..=255 over the finite entries; Infinite is 255; a
/// field with no spread is all 0.
pub fn pgm(values: &[f64], height: usize, width: usize) -> Vec<u8> {
    assert_eq!(values.len(), height * width);
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let spread = hi - lo;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if v.is_infinite() {
            255
        } else if spread > 0.0 {
            ((v - lo) / spread * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// PGM for two-dimensional single-layer graphs, `None` otherwise. Rows run
/// along `x0`, columns along `x1`.
pub fn field_pgm(g: &Graph, values: &[f64]) -> Option<Vec<u8>> {
    if g.dimension() == 2 && g.layers() == 1 {
        let l = g.lengths();
        Some(pgm(values, l[0], l[1]))
    } else {
        None
    }
}
