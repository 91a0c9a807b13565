//! Parameter sweeps: grid points times seeds, one isolated run each.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{render_value, SweepPlan};
use crate::output;
use crate::run::{execute_run, RunSummary};
use crate::CliError;

pub const SWEEP_CSV: &str = "sweep.csv";

#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub csv_path: PathBuf,
    pub rows: usize,
    pub failures: usize,
}

pub fn run_dir(out: &Path, index: usize) -> PathBuf {
    out.join("runs").join(format!("run_{index:04}"))
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

const RESULT_COLUMNS: [&str; 13] = [
    "status",
    "absorbed",
    "absorption_step",
    "steps_taken",
    "final_activity",
    "final_max_gap",
    "final_active_count",
    "final_max_cluster",
    "final_moment",
    "final_total_mass",
    "a_vertices",
    "b_vertices",
    "error",
];

fn result_cells(outcome: &Result<RunSummary, String>) -> Vec<String> {
    match outcome {
        Ok(s) => {
            let m = &s.manifest.body;
            let mut cells = vec![
                "ok".to_string(),
                m.absorbed.to_string(),
                m.absorption_step.map_or(String::new(), |s| s.to_string()),
                m.steps_taken.to_string(),
            ];
            match &s.final_row {
                Some(r) => cells.extend([
                    r.activity.to_string(),
                    r.max_gap.to_string(),
                    r.active_count.to_string(),
                    r.max_cluster.to_string(),
                    r.moment_alpha.to_string(),
                    r.total_mass.to_string(),
                ]),
                None => cells.extend(std::iter::repeat_n(String::new(), 6)),
            }
            cells.push(m.vertex_types["A"].to_string());
            cells.push(m.vertex_types["B"].to_string());
            cells.push(String::new());
            cells
        }
        Err(e) => {
            let mut cells = vec!["error".to_string()];
            cells.extend(std::iter::repeat_n(String::new(), RESULT_COLUMNS.len() - 2));
            cells.push(quote(e));
            cells
        }
    }
}

/// Runs every point of `plan` (concurrently on the current pool), each in
/// `out/runs/run_NNNN`, and writes `out/sweep.csv` with one row per run in
/// plan order. Failed points are recorded and do not stop the sweep.
pub fn execute_sweep(plan: &SweepPlan, out: &Path) -> Result<SweepSummary, CliError> {
    let outcomes: Vec<Result<RunSummary, String>> = plan
        .points
        .par_iter()
        .with_max_len(1)
        .map(|point| {
            let config = point.config.as_ref().map_err(Clone::clone)?;
            execute_run(config, &run_dir(out, point.index)).map_err(|e| e.to_string())
        })
        .collect();

    let mut text = String::from("run,seed");
    for axis in &plan.axes {
        let _ = write!(text, ",{}", quote(axis));
    }
    for c in RESULT_COLUMNS {
        let _ = write!(text, ",{c}");
    }
    text.push('\n');
    let mut failures = 0;
    for (point, outcome) in plan.points.iter().zip(&outcomes) {
        failures += usize::from(outcome.is_err());
        let mut cells = vec![point.index.to_string(), point.seed.to_string()];
        cells.extend(point.assignments.iter().map(|(_, v)| quote(&render_value(v))));
        cells.extend(result_cells(outcome));
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    let csv_path = out.join(SWEEP_CSV);
    output::write_file(&csv_path, text.as_bytes())?;
    Ok(SweepSummary {
        csv_path,
        rows: plan.points.len(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_times_seeds_rows() {
        let text = r#"
graph.d = 2
graph.lengths = 16
init.kind = "geometric"
init.p = 0.5
sweep.seeds = 5
sweep.grid."graph.lengths" = [16, 32]
"#;
        let dir = tempfile::tempdir().unwrap();
        let plan = SweepPlan::from_toml_str(text, None).unwrap();
        let summary = execute_sweep(&plan, dir.path()).unwrap();
        assert_eq!((summary.rows, summary.failures), (10, 0));
        let csv = std::fs::read_to_string(&summary.csv_path).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 11);
        assert!(lines[0].starts_with("run,seed,graph.lengths,status,absorbed,absorption_step"));
        assert!(lines[6].starts_with("5,0,32,ok,true,"));
        assert!(run_dir(dir.path(), 9).join("manifest.json").exists());
    }

    #[test]
    fn failed_points_are_recorded() {
        let text = r#"
graph.lengths = 6
init.kind = "constant"
init.value = 1
sweep.grid."graph.lengths" = [1, 6]
"#;
        let dir = tempfile::tempdir().unwrap();
        let plan = SweepPlan::from_toml_str(text, None).unwrap();
        let summary = execute_sweep(&plan, dir.path()).unwrap();
        assert_eq!(summary.failures, 1);
        let csv = std::fs::read_to_string(&summary.csv_path).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[1].starts_with("0,0,1,error,"), "{}", lines[1]);
        assert!(lines[1].contains("graph.lengths"));
        assert!(lines[2].starts_with("1,0,6,ok,true,"));
    }
}
