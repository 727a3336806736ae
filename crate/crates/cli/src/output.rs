//! Files written by a run: `<experiment>_<series>.csv|json` plus `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// One pass/fail test declared by an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold, detail: detail.into() }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, threshold, detail: detail.into() }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        let v = if passed { 1.0 } else { 0.0 };
        Self { name: name.into(), passed, value: v, threshold: 1.0, detail: detail.into() }
    }
}

/// Distance between a trajectory estimate and a reference at one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub t: f64,
    pub trace_distance: f64,
    /// Three-standard-error trace-distance band of the estimate.
    pub band_3se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: Vec<Metric>,
    pub max_trace_distance: Option<f64>,
    pub comparison: Vec<Comparison>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            passed: true,
            checks: Vec::new(),
            metrics: Vec::new(),
            max_trace_distance: None,
            comparison: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn get_metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn set_comparison(&mut self, rows: Vec<Comparison>) {
        self.max_trace_distance = rows.iter().map(|r| r.trace_distance).reduce(f64::max);
        self.comparison = rows;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad summary JSON: {e}")))
    }
}

/// A file to be written as `<experiment>_<series>`.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub series: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(series: impl Into<String>, contents: String) -> Self {
        Self { series: series.into(), contents }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub summary: Option<Summary>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, files: Vec<String>) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            files,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid manifest: {e}")))?;
        if m.manifest_version != MANIFEST_VERSION {
            return Err(CliError::Config(format!("unsupported manifest version {}", m.manifest_version)));
        }
        m.config.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read_file(path)?)
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// Writes all artifacts, the summary and the manifest into `dir`, returning
/// the written paths (manifest last).
pub fn emit_outputs(cfg: &ExperimentConfig, out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
    let prefix = cfg.experiment.name();
    let mut names = Vec::new();
    let mut written = Vec::new();
    let mut files: Vec<(String, &str)> = out.artifacts.iter().map(|a| (format!("{prefix}_{}", a.series), a.contents.as_str())).collect();
    let summary_json = out.summary.as_ref().map(Summary::to_json);
    if let Some(s) = &summary_json {
        files.push((format!("{prefix}_summary.json"), s));
    }
    for (name, contents) in files {
        let path = dir.join(&name);
        write_file(&path, contents)?;
        names.push(name);
        written.push(path);
    }
    let path = dir.join(MANIFEST_FILE);
    write_file(&path, &Manifest::new(cfg, names).to_json())?;
    written.push(path);
    Ok(written)
}

/// Empirical against analytic second moments of one kernel/sampler pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub pair: String,
    pub i: usize,
    pub j: usize,
    pub corr_re: f64,
    pub corr_im: f64,
    pub corr_se: f64,
    pub exact_re: f64,
    pub exact_im: f64,
    pub pseudo_re: f64,
    pub pseudo_im: f64,
    pub pseudo_se: f64,
}

pub const MOMENT_HEADER: &str = "pair,i,j,corr_re,corr_im,corr_se,exact_re,exact_im,pseudo_re,pseudo_im,pseudo_se";

pub fn moments_to_csv(rows: &[MomentRow]) -> String {
    let mut out = format!("{MOMENT_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.pair, r.i, r.j, r.corr_re, r.corr_im, r.corr_se, r.exact_re, r.exact_im, r.pseudo_re, r.pseudo_im, r.pseudo_se
        ));
    }
    out
}

pub fn moments_from_csv(text: &str) -> Result<Vec<MomentRow>, CliError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MOMENT_HEADER) {
        return Err(CliError::Config("missing moment CSV header".into()));
    }
    let bad = |line: &str| CliError::Config(format!("bad moment row `{line}`"));
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(bad(line));
        }
        let x = |k: usize| f[k].parse::<f64>().map_err(|_| bad(line));
        let n = |k: usize| f[k].parse::<usize>().map_err(|_| bad(line));
        rows.push(MomentRow {
            pair: f[0].to_string(),
            i: n(1)?,
            j: n(2)?,
            corr_re: x(3)?,
            corr_im: x(4)?,
            corr_se: x(5)?,
            exact_re: x(6)?,
            exact_im: x(7)?,
            pseudo_re: x(8)?,
            pseudo_im: x(9)?,
            pseudo_se: x(10)?,
        });
    }
    Ok(rows)
}

/// Long-format purity table `t,source,purity`.
pub const PURITY_HEADER: &str = "t,source,purity";

pub fn purity_to_csv(rows: &[(f64, String, f64)]) -> String {
    let mut out = format!("{PURITY_HEADER}\n");
    for (t, src, p) in rows {
        out.push_str(&format!("{t:.16e},{src},{p:.16e}\n"));
    }
    out
}

pub fn purity_from_csv(text: &str) -> Result<Vec<(f64, String, f64)>, CliError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(PURITY_HEADER) {
        return Err(CliError::Config("missing purity CSV header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || CliError::Config(format!("bad purity row `{line}`"));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok((f[0].parse().map_err(|_| bad())?, f[1].to_string(), f[2].parse().map_err(|_| bad())?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_rows_round_trip() {
        let rows = vec![MomentRow {
            pair: "exponential/recursive".into(),
            i: 3,
            j: 7,
            corr_re: 1.0 / 3.0,
            corr_im: -2e-300,
            corr_se: 0.1 + 0.2,
            exact_re: 0.65,
            exact_im: -0.0,
            pseudo_re: 1e-5,
            pseudo_im: 7.0,
            pseudo_se: 0.0,
        }];
        assert_eq!(moments_from_csv(&moments_to_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn purity_rows_round_trip() {
        let rows = vec![(0.1, "oracle:joint_unitary".to_string(), 0.1 + 0.2), (2.0 / 3.0, "ensemble".into(), 1.0)];
        assert_eq!(purity_from_csv(&purity_to_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn summary_tracks_failures() {
        let mut s = Summary::new("x");
        s.check(Check::at_most("a", 1.0, 2.0, ""));
        assert!(s.passed);
        s.check(Check::at_least("b", 1.0, 2.0, ""));
        assert!(!s.passed);
        assert_eq!(Summary::from_json(&s.to_json()).unwrap(), s);
    }
}
