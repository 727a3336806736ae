//! Husimi Q-function `Q(beta) = |<beta|psi>|^2 / pi` on a rectangular grid.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::hilbert::special::coherent_amplitudes;
use crate::hilbert::StateVector;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl QGrid {
    /// `n x n` points spanning `[lo, hi]` on both axes.
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        let axis: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        Self { re: axis.clone(), im: axis }
    }

    fn cell_area(&self) -> f64 {
        let d = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
        d(&self.re) * d(&self.im)
    }
}

impl Default for QGrid {
    /// 81 x 81 over `[-4.5, 4.5]^2`.
    fn default() -> Self {
        Self::square(-4.5, 4.5, 81)
    }
}

/// Q values stored row-major with the imaginary axis as the row index:
/// `values[i_im * re.len() + i_re]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QField {
    pub grid: QGrid,
    pub values: Vec<f64>,
}

pub fn q_function(psi: &StateVector, grid: &QGrid) -> QField {
    let dim = psi.dim();
    let amps = psi.amplitudes();
    let mut values = Vec::with_capacity(grid.re.len() * grid.im.len());
    for &y in &grid.im {
        for &x in &grid.re {
            let basis = coherent_amplitudes(C64::new(x, y), dim);
            let overlap: C64 = basis.iter().zip(amps).map(|(b, a)| b.conj() * a).sum();
            values.push(overlap.norm_sqr() / PI);
        }
    }
    QField { grid: grid.clone(), values }
}

impl QField {
    /// Riemann sum of `Q dA`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> C64 {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        let nr = self.grid.re.len();
        C64::new(self.grid.re[k % nr], self.grid.im[k / nr])
    }

    /// Number of 4-connected regions where `Q >= fraction * max(Q)`.
    pub fn count_peaks(&self, fraction: f64) -> usize {
        let (nr, ni) = (self.grid.re.len(), self.grid.im.len());
        let threshold = fraction * self.max();
        let mut seen = vec![false; self.values.len()];
        let mut regions = 0;
        let mut stack = Vec::new();
        for start in 0..self.values.len() {
            if seen[start] || self.values[start] < threshold {
                continue;
            }
            regions += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(k) = stack.pop() {
                let (r, c) = (k / nr, k % nr);
                let mut visit = |rr: usize, cc: usize| {
                    let kk = rr * nr + cc;
                    if !seen[kk] && self.values[kk] >= threshold {
                        seen[kk] = true;
                        stack.push(kk);
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < ni {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < nr {
                    visit(r, c + 1);
                }
            }
        }
        regions
    }

    /// CSV with header `re_beta,im_beta,q`, one row per grid point in
    /// storage order, floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_beta,im_beta,q\n");
        let nr = self.grid.re.len();
        for (k, q) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", self.grid.re[k % nr], self.grid.im[k / nr], q);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("re_beta,im_beta,q") {
            return Err(Error::InvalidParameter("missing Q-function CSV header".into()));
        }
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("bad Q-function row '{line}': {e}")))?;
            if f.len() != 3 {
                return Err(Error::InvalidParameter(format!("bad Q-function row '{line}'")));
            }
            rows.push((f[0], f[1], f[2]));
        }
        let mut re: Vec<f64> = Vec::new();
        for r in &rows {
            if re.contains(&r.0) {
                break;
            }
            re.push(r.0);
        }
        if re.is_empty() || rows.len() % re.len() != 0 {
            return Err(Error::InvalidParameter("Q-function CSV is not a rectangular grid".into()));
        }
        let im: Vec<f64> = rows.iter().step_by(re.len()).map(|r| r.1).collect();
        let values = rows.iter().map(|r| r.2).collect();
        Ok(Self { grid: QGrid { re, im }, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{cat_state, coherent_state};

    #[test]
    fn vacuum_q_function() {
        let grid = QGrid::default();
        let q = q_function(&StateVector::basis(30, 0), &grid);
        assert!((q.max() - 1.0 / PI).abs() < 1e-14);
        assert!(q.argmax().norm() < 1e-12);
        for (k, v) in q.values.iter().enumerate() {
            let b = C64::new(grid.re[k % 81], grid.im[k / 81]);
            assert!((v - (-b.norm_sqr()).exp() / PI).abs() < 1e-14);
        }
        assert!((q.mass() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn coherent_peak_is_displaced() {
        let q = q_function(&coherent_state(C64::new(2.0, 0.0), 30).unwrap(), &QGrid::default());
        // 2.0 is not a grid node; the peak lands within one spacing of it
        assert!((q.argmax() - C64::new(2.0, 0.0)).norm() < 9.0 / 80.0);
        assert_eq!(q.count_peaks(0.5), 1);
        assert!((q.mass() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn cat_q_is_double_gaussian() {
        let alpha = C64::new(2.0, 0.0);
        let grid = QGrid::default();
        let q = q_function(&cat_state(alpha, 30).unwrap(), &grid);
        assert_eq!(q.count_peaks(0.5), 2);
        assert!((q.mass() - 1.0).abs() < 1e-2);
        // direct evaluation of |<b|a> + <b|-a>|^2 / (pi * norm)
        let n2 = 2.0 * (1.0 + (-8f64).exp());
        for (k, v) in q.values.iter().enumerate() {
            let b = C64::new(grid.re[k % 81], grid.im[k / 81]);
            let ov = |a: C64| (-(b.norm_sqr() + a.norm_sqr()) / 2.0 + b.conj() * a).exp();
            let direct = (ov(alpha) + ov(-alpha)).norm_sqr() / (PI * n2);
            assert!((v - direct).abs() < 1e-10);
            let gaussians = ((-(b - alpha).norm_sqr()).exp() + (-(b + alpha).norm_sqr()).exp()) / (2.0 * PI);
            // interference term is bounded by exp(-|b|^2 - |a|^2) / pi
            assert!((v - gaussians).abs() <= 1.000001 * (-b.norm_sqr() - 4.0).exp() / PI + 1e-3 * gaussians + 1e-10);
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let q = q_function(&coherent_state(C64::new(0.3, -1.1), 20).unwrap(), &QGrid::square(-2.0, 2.0, 7));
        let back = QField::from_csv(&q.to_csv()).unwrap();
        assert_eq!(back, q);
    }
}
