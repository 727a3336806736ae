//! Versioned experiment configuration and the named presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Fig1a,
    Fig1b,
    Fig2,
    Cut,
    MarkovLimit,
    NoiseStats,
}

impl Experiment {
    pub const ALL: [Experiment; 6] =
        [Self::Fig1a, Self::Fig1b, Self::Fig2, Self::Cut, Self::MarkovLimit, Self::NoiseStats];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1a => "fig1a",
            Self::Fig1b => "fig1b",
            Self::Fig2 => "fig2",
            Self::Cut => "cut",
            Self::MarkovLimit => "markov_limit",
            Self::NoiseStats => "noise_stats",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

/// How dissipative trajectories treat the pole of `F(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Absorption {
    Exact,
    Freeze,
}

/// Fully resolved parameters of one run. Every experiment carries every
/// field; the ones it does not use keep their preset values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    /// System frequency (spin splitting, oscillator frequency, or omega1 of the cut model).
    pub omega: f64,
    /// Decay rate of the exponential kernel.
    pub gamma: f64,
    /// Environment frequency: Omega of the kernel, or omega2 of the cut model.
    pub env_omega: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub alpha_cat: f64,
    pub n_paths: u64,
    pub dt: f64,
    /// Run length; `null` lets fig2 pick twice the oracle revival time.
    pub t_end: Option<f64>,
    pub seed: u64,
    /// Fock truncation of the environment mode (pseudomode, single mode or cut oscillator).
    pub truncation: usize,
    /// Fock truncation of an oscillator system.
    pub system_dim: usize,
    /// Time between stored snapshots.
    pub snapshot_every: f64,
    /// Time between Q-function fields.
    pub q_interval: f64,
    /// Decay rates swept by `markov_limit`.
    pub gamma_sweep: Vec<f64>,
    pub absorption: Absorption,
    pub output_dir: String,
}

impl ExperimentConfig {
    /// Parameters of the corresponding figure, in units of `omega = 1`.
    pub fn preset(experiment: Experiment) -> Self {
        let base = Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            omega: 1.0,
            gamma: 1.0,
            env_omega: 0.0,
            lambda: 1.0,
            kappa: 0.0,
            alpha_cat: 2.0,
            n_paths: 10_000,
            dt: 1e-3,
            t_end: Some(10.0),
            seed: 1,
            truncation: 15,
            system_dim: 30,
            snapshot_every: 0.5,
            q_interval: 0.47,
            gamma_sweep: vec![10.0, 30.0, 100.0],
            absorption: Absorption::Exact,
            output_dir: "out".into(),
        };
        match experiment {
            Experiment::Fig1a => base,
            Experiment::Fig1b => Self { env_omega: 1.0, dt: 5e-4, t_end: Some(8.0), snapshot_every: 0.1, ..base },
            Experiment::Fig2 => Self {
                env_omega: 0.5,
                lambda: 0.1,
                n_paths: 1000,
                dt: 1e-2,
                t_end: None,
                snapshot_every: 0.1,
                ..base
            },
            Experiment::Cut => Self {
                env_omega: 1.0,
                lambda: 0.5f64.sqrt(),
                kappa: 0.2,
                t_end: Some(5.0),
                truncation: 4,
                ..base
            },
            Experiment::MarkovLimit => Self { t_end: Some(2.0), snapshot_every: 0.1, ..base },
            Experiment::NoiseStats => Self { env_omega: 0.5, dt: 0.25, t_end: Some(2.25), ..base },
        }
    }

    /// Applies `key=value`. Values are parsed as JSON where possible, then as
    /// a comma-separated list of numbers, then as a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got `{assignment}`")))?;
        let key = match key.trim() {
            "T" => "t_end",
            "Omega" => "env_omega",
            "omega1" => "omega",
            "omega2" => "env_omega",
            k => k,
        };
        if matches!(key, "schema_version" | "experiment") {
            return Err(CliError::Config(format!("`{key}` cannot be overridden")));
        }
        let raw = raw.trim();
        let value = serde_json::from_str::<Value>(raw).ok().or_else(|| number_list(raw)).unwrap_or_else(|| Value::String(raw.into()));
        let mut json = serde_json::to_value(&*self).expect("config serialises");
        let fields = json.as_object_mut().expect("config is an object");
        if !fields.contains_key(key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        fields.insert(key.to_string(), value);
        *self = serde_json::from_value(json).map_err(|e| CliError::Config(format!("bad value for `{key}`: {e}")))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        for (name, v) in [("omega", self.omega), ("env_omega", self.env_omega), ("kappa", self.kappa)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("dt", self.dt), ("snapshot_every", self.snapshot_every), ("q_interval", self.q_interval)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative".into());
        }
        if !(self.alpha_cat >= 0.0 && self.alpha_cat.is_finite()) {
            return bad("alpha_cat must be non-negative".into());
        }
        if self.truncation < 2 || self.system_dim < 2 {
            return bad("truncation and system_dim must be at least 2".into());
        }
        match self.t_end {
            Some(t) => {
                if !(t >= 0.0 && t.is_finite()) {
                    return bad("t_end must be non-negative".into());
                }
                if !is_multiple(t, self.dt) {
                    return bad(format!("t_end = {t} is not a whole number of steps dt = {}", self.dt));
                }
            }
            None if self.experiment == Experiment::Fig2 => {}
            None => return bad(format!("t_end is required for {}", self.experiment)),
        }
        if !is_multiple(self.snapshot_every, self.dt) {
            return bad(format!("snapshot_every = {} is not a whole number of steps", self.snapshot_every));
        }
        if self.experiment == Experiment::Fig2 && !is_multiple(self.q_interval, self.dt) {
            return bad(format!("q_interval = {} is not a whole number of steps", self.q_interval));
        }
        if self.experiment == Experiment::MarkovLimit
            && (self.gamma_sweep.is_empty() || self.gamma_sweep.iter().any(|g| !(*g > 0.0 && g.is_finite())))
        {
            return bad("gamma_sweep must be a non-empty list of positive rates".into());
        }
        if self.experiment == Experiment::NoiseStats && self.n_paths == 1 {
            return bad("noise_stats needs at least two paths".into());
        }
        Ok(())
    }

    /// Snapshot stride in steps of `dt`.
    pub fn stride(&self) -> usize {
        steps_in(self.snapshot_every, self.dt)
    }
}

pub(crate) fn steps_in(interval: f64, dt: f64) -> usize {
    (interval / dt).round().max(1.0) as usize
}

fn is_multiple(t: f64, dt: f64) -> bool {
    let n = (t / dt).round();
    (t / dt - n).abs() <= 1e-9 * n.max(1.0)
}

fn number_list(raw: &str) -> Option<Value> {
    let nums: Option<Vec<f64>> = raw.split(',').map(|s| s.trim().parse().ok()).collect();
    nums.filter(|v| v.len() > 1).map(|v| serde_json::json!(v))
}
