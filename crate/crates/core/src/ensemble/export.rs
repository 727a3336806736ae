use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleResult;
use crate::hilbert::{DensityMatrix, Operator};
use crate::{Error, Result, C64};

pub const OBSERVABLE_HEADER: &str = "t,obs_name,re_mean,im_mean,se";

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRow {
    pub t: f64,
    pub name: String,
    pub mean: C64,
    pub se: f64,
}

/// Long-format table of observable means, one row per (time, observable).
/// `source` is written as a leading `# source=...` line when set.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ObservableTable {
    pub source: Option<String>,
    pub rows: Vec<ObservableRow>,
}

impl ObservableTable {
    pub fn from_result(res: &EnsembleResult) -> Self {
        let mut rows = Vec::new();
        for (s, &t) in res.times.iter().enumerate() {
            for series in res.observables.iter().chain(std::iter::once(&res.norm_sqr)) {
                rows.push(ObservableRow { t, name: series.name.clone(), mean: series.mean[s], se: series.se[s] });
            }
        }
        Self { source: None, rows }
    }

    /// Exact expectations `Tr(rho O)` of a deterministic series; `se` is zero.
    pub fn from_densities(
        source: &str,
        times: &[f64],
        rhos: &[DensityMatrix],
        observables: &[(&str, &Operator)],
    ) -> Result<Self> {
        let mut rows = Vec::new();
        for (&t, rho) in times.iter().zip(rhos) {
            for (name, op) in observables {
                rows.push(ObservableRow { t, name: name.to_string(), mean: rho.expectation(op)?, se: 0.0 });
            }
        }
        Ok(Self { source: Some(source.to_string()), rows })
    }

    pub fn with_source(mut self, source: &str) -> Self {
        self.source = Some(source.to_string());
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(src) = &self.source {
            out.push_str(&format!("# source={src}\n"));
        }
        out.push_str(OBSERVABLE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:.16e},{},{:.16e},{:.16e},{:.16e}\n", r.t, r.name, r.mean.re, r.mean.im, r.se));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().peekable();
        let source = match lines.peek().and_then(|l| l.strip_prefix("# source=")) {
            Some(src) => {
                let src = src.trim().to_string();
                lines.next();
                Some(src)
            }
            None => None,
        };
        if lines.next().map(str::trim) != Some(OBSERVABLE_HEADER) {
            return Err(Error::InvalidParameter(format!("expected header `{OBSERVABLE_HEADER}`")));
        }
        let num = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("bad number `{s}`: {e}")))
        };
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::InvalidParameter(format!("expected 5 fields in `{line}`")));
            }
            rows.push(ObservableRow {
                t: num(f[0])?,
                name: f[1].to_string(),
                mean: C64::new(num(f[2])?, num(f[3])?),
                se: num(f[4])?,
            });
        }
        Ok(Self { source, rows })
    }

    /// Rows of one observable in time order.
    pub fn series(&self, name: &str) -> Vec<&ObservableRow> {
        self.rows.iter().filter(|r| r.name == name).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySnapshot {
    pub t: f64,
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySeries {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub estimator: String,
    pub n_paths: u64,
    pub snapshots: Vec<DensitySnapshot>,
}

impl DensitySeries {
    pub fn from_result(res: &EnsembleResult) -> Self {
        let snapshots = res
            .times
            .iter()
            .zip(&res.mean_density)
            .zip(&res.density_se)
            .map(|((&t, rho), se)| DensitySnapshot {
                t,
                dim: rho.dim(),
                re: rho.data().iter().map(|z| z.re).collect(),
                im: rho.data().iter().map(|z| z.im).collect(),
                se: se.clone(),
            })
            .collect();
        Self { source: None, estimator: res.estimator.name().to_string(), n_paths: res.n_paths, snapshots }
    }

    /// Deterministic series; `estimator` is `exact`, `n_paths` zero and all SEs zero.
    pub fn from_densities(source: &str, times: &[f64], rhos: &[DensityMatrix]) -> Self {
        let snapshots = times
            .iter()
            .zip(rhos)
            .map(|(&t, rho)| DensitySnapshot {
                t,
                dim: rho.dim(),
                re: rho.data().iter().map(|z| z.re).collect(),
                im: rho.data().iter().map(|z| z.im).collect(),
                se: vec![0.0; rho.data().len()],
            })
            .collect();
        Self { source: Some(source.to_string()), estimator: "exact".into(), n_paths: 0, snapshots }
    }

    pub fn with_source(mut self, source: &str) -> Self {
        self.source = Some(source.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("bad density JSON: {e}")))
    }

    pub fn matrices(&self) -> Result<Vec<DensityMatrix>> {
        self.snapshots
            .iter()
            .map(|s| {
                if s.re.len() != s.im.len() {
                    return Err(Error::DimensionMismatch { expected: s.re.len(), found: s.im.len() });
                }
                DensityMatrix::from_data(s.dim, s.re.iter().zip(&s.im).map(|(&a, &b)| C64::new(a, b)).collect())
            })
            .collect()
    }
}
