//! Document formats: trajectory JSON, heatmap CSV and solver diagnostics.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), so output
//! is byte-identical for identical values on every platform.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::freq::Heatmap;
use crate::ik::IkResult;
use crate::state_spaces::{SpaceError, SpaceId, Trajectory};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trajectory document parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid trajectory document: {0}")]
    Invalid(#[from] SpaceError),
    #[error("cannot write a non-finite value")]
    NonFinite,
}

/// Formats a float with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDocument {
    space: String,
    dt: f64,
    frames: Vec<Vec<f64>>,
}

pub fn parse_trajectory(document: &str) -> Result<Trajectory, IoError> {
    let doc: TrajectoryDocument = serde_json::from_str(document)?;
    let space: SpaceId = doc.space.parse()?;
    Ok(Trajectory::from_rows(space, doc.dt, doc.frames)?)
}

pub fn render_trajectory(traj: &Trajectory) -> Result<String, IoError> {
    let finite = traj.dt().is_finite() && traj.frames().iter().all(|f| f.values().iter().all(|v| v.is_finite()));
    if !finite {
        return Err(IoError::NonFinite);
    }
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"space\": \"{}\",", traj.space());
    let _ = writeln!(out, "  \"dt\": {},", format_f64(traj.dt()));
    out.push_str("  \"frames\": [\n");
    for (i, frame) in traj.frames().iter().enumerate() {
        let row: Vec<String> = frame.values().iter().map(|v| format_f64(*v)).collect();
        let sep = if i + 1 == traj.len() { "" } else { "," };
        let _ = writeln!(out, "    [{}]{sep}", row.join(", "));
    }
    out.push_str("  ]\n}\n");
    Ok(out)
}

/// Header `space,0,1,...` followed by one row per heatmap row.
pub fn render_heatmap_csv(heatmap: &Heatmap) -> String {
    let mut out = String::from("space");
    for k in 0..heatmap.columns {
        let _ = write!(out, ",{k}");
    }
    out.push('\n');
    for row in &heatmap.rows {
        out.push_str(row.space.as_str());
        for v in &row.values {
            out.push(',');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Per-frame solver diagnostics: `frame,objective,iterations,converged`.
pub fn render_diagnostics_csv(results: &[IkResult]) -> String {
    let mut out = String::from("frame,objective,iterations,converged\n");
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{}",
            format_f64(r.objective_value),
            r.iterations,
            r.converged
        );
    }
    out
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, IoError> {
    parse_trajectory(&read_text(path)?)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed write never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let err = |source| IoError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.flush().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
