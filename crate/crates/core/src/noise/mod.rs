//! Complex Gaussian noise with a prescribed Hermitian correlation
//! `M[z_t^* z_s] = alpha(t, s)` and vanishing relation `M[z_t z_s] = 0`.

use std::fmt::Write as _;

use crate::{Error, Result, C64};

mod kernel;
mod rng;
mod sampler;
mod stats;

pub use kernel::{build_covariance, CorrelationKernel, Covariance};
pub use rng::{circular_normal, stream_rng, PathRng};
pub use sampler::{pivoted_cholesky, Sampler, SamplerKind};
pub use stats::{noise_statistics, NoiseStatistics};

/// Uniform grid `t_k = k dt`, `k = 0..=n_steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Requires `t_end / dt` to be an integer within 1e-9.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("need dt > 0 and t_end >= 0 (dt = {dt}, t_end = {t_end})")));
        }
        let ratio = t_end / dt;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidParameter(format!("t_end / dt = {ratio} is not an integer")));
        }
        Ok(Self { dt, n_steps: n as usize })
    }

    pub fn from_steps(dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

/// One realisation of the noise on a uniform grid. For white noise
/// `values[k]` is the constant value on `[t_k, t_{k+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    pub dt: f64,
    pub values: Vec<C64>,
    pub stream: u64,
}

impl NoisePath {
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn zeros(grid: &TimeGrid) -> Self {
        Self { dt: grid.dt(), values: vec![C64::new(0.0, 0.0); grid.len()], stream: 0 }
    }

    /// Debug export, header `t,re_z,im_z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re_z,im_z\n");
        for (k, z) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", k as f64 * self.dt, z.re, z.im);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_integral_ratio() {
        assert_eq!(TimeGrid::new(10.0, 1e-3).unwrap().n_steps(), 10_000);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(1.0, 0.0).is_err());
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let p = NoisePath { dt: 0.5, values: vec![C64::new(1.0, -1.0), C64::new(0.0, 2.0)], stream: 0 };
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,re_z,im_z");
        assert_eq!(lines.len(), 3);
        let f: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(f, vec![0.5, 0.0, 2.0]);
    }
}
