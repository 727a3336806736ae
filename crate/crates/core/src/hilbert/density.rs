use crate::hilbert::Operator;
use crate::linalg;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Which factor of a bipartite space survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Dense density matrix, row-major. Ensemble means are built with
/// [`DensityMatrix::zeros`] and accumulated, so construction does not
/// enforce the physical invariants; use [`DensityMatrix::validate`] for that.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn from_data(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    /// `|x><x|` without normalising `x`.
    pub fn from_outer(x: &[C64]) -> Self {
        let dim = x.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in x {
            for b in x {
                data.push(a * b.conj());
            }
        }
        Self { dim, data }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut rho = Self::zeros(dim);
        for i in 0..dim {
            rho.data[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(rho^2)`, assuming Hermiticity.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(rho A)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: op.dim() });
        }
        Ok(op.nonzeros().iter().map(|&(i, j, v)| v * self.get(j, i)).sum())
    }

    /// `rho <- (rho + rho^dagger) / 2`.
    pub fn hermitize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn add_assign(&mut self, other: &DensityMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut h = self.clone();
        h.hermitize();
        linalg::hermitian_eigenvalues(self.dim, &h.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `1/2 Tr|rho - sigma|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut diff = DensityMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        };
        diff.hermitize();
        Ok(0.5 * linalg::hermitian_eigenvalues(self.dim, &diff.data).iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Checks Hermiticity (1e-10), unit trace (1e-10) and positivity (-1e-8).
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
        }
        Ok(())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(self.get(r / b, c / b) * other.get(r % b, c % b));
            }
        }
        DensityMatrix { dim: n, data }
    }

    /// Partial trace over one factor of a `d1 x d2` bipartite space
    /// (first factor = slow index).
    pub fn partial_trace(&self, dims: (usize, usize), keep: Keep) -> Result<DensityMatrix> {
        let (d1, d2) = dims;
        if d1 * d2 != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: d1 * d2 });
        }
        let n = self.dim;
        let out = match keep {
            Keep::First => {
                let mut r = DensityMatrix::zeros(d1);
                for i in 0..d1 {
                    for k in 0..d1 {
                        let mut acc = ZERO;
                        for j in 0..d2 {
                            acc += self.data[(i * d2 + j) * n + k * d2 + j];
                        }
                        r.data[i * d1 + k] = acc;
                    }
                }
                r
            }
            Keep::Second => {
                let mut r = DensityMatrix::zeros(d2);
                for j in 0..d2 {
                    for l in 0..d2 {
                        let mut acc = ZERO;
                        for i in 0..d1 {
                            acc += self.data[(i * d2 + j) * n + i * d2 + l];
                        }
                        r.data[j * d2 + l] = acc;
                    }
                }
                r
            }
        };
        Ok(out)
    }
}
