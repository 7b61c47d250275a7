use std::path::{Path, PathBuf};

use gfvi_core::harness::{ComparisonReport, Verdict};
use serde::Serialize;

use crate::error::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const CSV_HEADER: [&str; 7] = ["experiment", "parameters", "estimate", "se", "exact", "z", "verdict"];

/// One line of `results.csv`. Missing values print as empty cells and a
/// missing verdict as `n/a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub parameters: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub exact: Option<f64>,
    pub z: Option<f64>,
    pub verdict: Option<Verdict>,
}

impl Row {
    pub fn value(experiment: &str, parameters: String, estimate: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters,
            estimate,
            se: None,
            exact: None,
            z: None,
            verdict: None,
        }
    }

    pub fn from_report(experiment: &str, parameters: String, r: &ComparisonReport) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters,
            estimate: r.estimate,
            se: Some(r.se),
            exact: Some(r.exact),
            z: Some(r.z),
            verdict: Some(r.verdict),
        }
    }

    fn record(&self) -> [String; 7] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.experiment.clone(),
            self.parameters.clone(),
            self.estimate.to_string(),
            opt(self.se),
            opt(self.exact),
            opt(self.z),
            self.verdict.map_or("n/a".to_string(), |v| v.to_string()),
        ]
    }
}

/// `key=value` pairs joined by `;`.
pub fn params(pairs: &[(&str, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub replicates: usize,
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
    pub verdict: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<toml::Table>,
    /// Per-test reports, including notes the CSV has no room for.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<ComparisonReport>,
}

/// Everything a run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub summary: Summary,
    /// Extra plot-ready files as `(file name, contents)`.
    pub artifacts: Vec<(String, String)>,
}

impl RunOutput {
    pub fn failed(&self) -> bool {
        self.summary.failed > 0
    }
}

pub fn tally(rows: &[Row]) -> (usize, usize, String) {
    let passed = rows.iter().filter(|r| r.verdict == Some(Verdict::Pass)).count();
    let failed = rows.iter().filter(|r| r.verdict == Some(Verdict::Fail)).count();
    let verdict = if failed > 0 {
        "fail"
    } else if passed > 0 {
        "pass"
    } else {
        "n/a"
    };
    (passed, failed, verdict.to_string())
}

pub fn results_csv(rows: &[Row]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.record()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `results.csv`, `summary.toml` and the artifacts into `dir`.
pub fn emit_report(dir: &Path, output: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    let write = |name: &str, contents: &str| -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    };
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let summary = toml::to_string(&output.summary).map_err(|e| CliError::Config(e.to_string()))?;
    let mut written = vec![write(RESULTS_FILE, &results_csv(&output.rows)?)?, write(SUMMARY_FILE, &summary)?];
    for (name, contents) in &output.artifacts {
        written.push(write(name, contents)?);
    }
    Ok(written)
}
