//! Export of captured fields from a finished run.

use std::path::{Path, PathBuf};

use crate::output;
use crate::run::{snapshot_path, Manifest, FINAL_FIELD};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotFiles {
    pub csv: PathBuf,
    /// Written for two-dimensional single-layer graphs only.
    pub pgm: Option<PathBuf>,
}

/// Writes the field of `step` from `run_dir` into `out` as
/// `field_step_N.csv`, plus `field_step_N.pgm` when the graph is a
/// two-dimensional single-layer graph.
///
/// A step is available when the run's snapshot cadence captured it or when
/// it is the final step.
pub fn snapshot(run_dir: &Path, step: u64, out: &Path) -> Result<SnapshotFiles, CliError> {
    let manifest = Manifest::read(run_dir)?;
    let config = manifest.config()?;
    let graph = config.graph()?;
    let captured = snapshot_path(step);
    let source = if manifest.body.outputs.iter().any(|o| o.path == captured) {
        captured
    } else if step == manifest.body.steps_taken {
        FINAL_FIELD.to_string()
    } else {
        let every = config.output.snapshot_every;
        let cadence = if every == 0 {
            "the run captured no intermediate snapshots".to_string()
        } else {
            format!("snapshots were captured every {every} steps")
        };
        return Err(CliError::Snapshot(format!(
            "step {step} is not available: {cadence} and the final step is {}",
            manifest.body.steps_taken
        )));
    };
    let path = run_dir.join(&source);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let values = output::parse_field_csv(&text).map_err(|e| CliError::Snapshot(format!("{}: {e}", path.display())))?;
    if values.len() != graph.vertex_count() {
        return Err(CliError::Snapshot(format!(
            "{} has {} values for {} vertices",
            path.display(),
            values.len(),
            graph.vertex_count()
        )));
    }
    let csv = out.join(format!("field_step_{step}.csv"));
    output::write_file(&csv, text.as_bytes())?;
    let pgm = match output::field_pgm(&graph, &values) {
        Some(image) => {
            let p = out.join(format!("field_step_{step}.pgm"));
            output::write_file(&p, &image)?;
            Some(p)
        }
        None => None,
    };
    Ok(SnapshotFiles { csv, pgm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{execute_run, RunConfig};

    #[test]
    fn cycle5_step_one() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::from_toml_str(
            "graph.lengths = [5]\ninit.kind = \"pattern\"\ninit.values = [1, 3, 2, 0, 0]\noutput.snapshot_every = 1\n",
        )
        .unwrap();
        execute_run(&config, dir.path()).unwrap();
        let files = snapshot(dir.path(), 1, &dir.path().join("export")).unwrap();
        let text = std::fs::read_to_string(&files.csv).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).take(3).collect();
        assert_eq!(rows, ["0,0,0", "1,1,6", "2,2,0"]);
        assert!(files.pgm.is_none());
        let step0 = snapshot(dir.path(), 0, &dir.path().join("export")).unwrap();
        assert!(std::fs::read_to_string(step0.csv).unwrap().contains("\n1,1,3\n"));
        let err = snapshot(dir.path(), 5, dir.path()).unwrap_err();
        assert!(err.to_string().contains("step 5 is not available"), "{err}");
    }

    fn pixels(config: &str) -> Vec<u8> {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::from_toml_str(&format!("{config}output.snapshot_every = 1\n")).unwrap();
        execute_run(&config, dir.path()).unwrap();
        let files = snapshot(dir.path(), 0, dir.path()).unwrap();
        let bytes = std::fs::read(files.pgm.unwrap()).unwrap();
        let header = b"P5\n4 4\n255\n";
        assert!(bytes.starts_with(header));
        bytes[header.len()..].to_vec()
    }

    #[test]
    fn degenerate_fields_render_black() {
        let zero = pixels("graph.lengths = [4, 4]\ninit.kind = \"constant\"\ninit.value = 0\n");
        assert_eq!(zero, vec![0; 16]);
        let constant = pixels("graph.lengths = [4, 4]\ninit.kind = \"constant\"\ninit.value = 7\n");
        assert_eq!(constant, vec![0; 16]);
        let inf = pixels("graph.lengths = [4, 4]\ninit.kind = \"constant\"\ninit.value = \"inf\"\n");
        assert_eq!(inf, vec![255; 16]);
    }
}
