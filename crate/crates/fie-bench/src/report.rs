//! Plot-ready output files: records CSV, summary JSON, per-t CSV, ECDF CSVs.

use std::fs;
use std::path::Path;

use fie::{Error, Result};

use crate::run::RunOutcome;

fn csv_string<S: serde::Serialize>(rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| io_err(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| io_err(e.to_string()))
}

fn io_err(e: impl ToString) -> Error {
    Error::Numerical(format!("output: {}", e.to_string()))
}

/// Renders every output file as `(file name, content)` without touching the
/// file system. Ordering and float formatting are deterministic.
pub fn render_outputs(outcome: &RunOutcome) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    files.push(("records.csv".to_string(), csv_string(&outcome.records)?));

    let summary =
        serde_json::to_string_pretty(&outcome.summary.estimators).map_err(io_err)?;
    files.push(("summary.json".to_string(), summary + "\n"));

    files.push(("per_t.csv".to_string(), csv_string(&outcome.summary.per_t)?));

    for (name, points) in &outcome.summary.ecdf {
        files.push((format!("ecdf_{name}.csv"), csv_string(points)?));
    }
    Ok(files)
}

/// Writes all output files into `dir`, creating it if needed.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err)?;
    for (name, content) in render_outputs(outcome)? {
        fs::write(dir.join(name), content).map_err(io_err)?;
    }
    Ok(())
}

/// One-paragraph console summary of a finished run.
pub fn summary_table(outcome: &RunOutcome) -> String {
    let mut out = String::new();
    out.push_str("estimator  pooled_std  pooled_mean_abs  n_samples  failed\n");
    for e in &outcome.summary.estimators {
        out.push_str(&format!(
            "{:<9}  {:<10.6}  {:<15.6}  {:<9}  {}\n",
            e.estimator, e.pooled_std, e.pooled_mean_abs, e.n_samples, e.failed_instances
        ));
    }
    out
}
