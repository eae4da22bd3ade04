//! JSON reports and CSV trajectory exports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::chain::{eval_chain, ChainSystem};
use crate::config::OutputPaths;
use crate::error::Result;
use crate::integrator::Trajectory;
use crate::suite::{LabeledTrajectory, SuiteReport};

pub fn report_json(report: &SuiteReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn csv_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("q{i}")));
    cols.extend((1..=n).map(|i| format!("p{i}")));
    cols.extend((1..=n).map(|i| format!("L{i}")));
    cols.join(",")
}

/// One row per sample; `f64` display is the shortest round-trip form.
pub fn trajectory_csv(system: &ChainSystem, traj: &Trajectory) -> Result<String> {
    let mut out = csv_header(system.dim());
    out.push('\n');
    for s in &traj.samples {
        let ls = eval_chain(system, &s.x)?;
        let row = std::iter::once(s.t)
            .chain(s.x.q.iter().copied())
            .chain(s.x.p.iter().copied())
            .chain(ls.values.iter().copied());
        for (i, v) in row.enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Writes the report and the trajectories to the configured paths and
/// returns what was written.
pub fn emit_outputs(report: &SuiteReport, trajectories: &[LabeledTrajectory], paths: &OutputPaths) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(p) = &paths.report {
        write_file(p, &report_json(report)?)?;
        written.push(p.clone());
    }
    if let Some(dir) = &paths.trajectory_dir {
        fs::create_dir_all(dir)?;
        for t in trajectories {
            let p = dir.join(format!("{}.csv", t.label));
            write_file(&p, &trajectory_csv(&t.system, &t.trajectory)?)?;
            written.push(p);
        }
    }
    Ok(written)
}
