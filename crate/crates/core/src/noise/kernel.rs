use crate::linalg;
use crate::noise::TimeGrid;
use crate::{Error, Result, C64};

/// Environment correlation `alpha(t, s) = M[z_t^* z_s]`.
#[derive(Clone, Debug, PartialEq)]
pub enum CorrelationKernel {
    /// White noise, `alpha = delta(t - s)`. Only the discretised covariance exists.
    Delta,
    /// `weight * exp(-gamma |t - s| - i omega (t - s))`.
    Exponential { gamma: f64, omega: f64, weight: f64 },
    /// Single environment oscillator: `g2 * exp(-i omega (t - s))`.
    SingleMode { omega: f64, g2: f64 },
    /// Hermitian matrix tabulated on a uniform time grid.
    Sampled { dt: f64, matrix: Vec<C64> },
}

impl CorrelationKernel {
    /// Exponential kernel with the conventional `gamma / 2` prefactor.
    pub fn exponential(gamma: f64, omega: f64) -> Result<Self> {
        Self::exponential_weighted(gamma, omega, 0.5 * gamma)
    }

    pub fn exponential_weighted(gamma: f64, omega: f64, weight: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(weight > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponential kernel needs gamma > 0 and weight > 0 (gamma = {gamma}, weight = {weight})"
            )));
        }
        Ok(Self::Exponential { gamma, omega, weight })
    }

    pub fn single_mode(omega: f64, g2: f64) -> Result<Self> {
        if !(g2 >= 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("single-mode kernel needs g2 >= 0 (g2 = {g2})")));
        }
        Ok(Self::SingleMode { omega, g2 })
    }

    /// Tabulated kernel on the grid `t_k = k dt`. The matrix is
    /// Hermitised so that `alpha(t, s) = alpha(s, t)^*` holds exactly.
    pub fn sampled(dt: f64, n: usize, mut matrix: Vec<C64>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: matrix.len() });
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("sampled kernel needs dt > 0".into()));
        }
        for i in 0..n {
            matrix[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (matrix[i * n + j] + matrix[j * n + i].conj());
                matrix[i * n + j] = avg;
                matrix[j * n + i] = avg.conj();
            }
        }
        Ok(Self::Sampled { dt, matrix })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Exponential { .. } => "exponential",
            Self::SingleMode { .. } => "single_mode",
            Self::Sampled { .. } => "sampled",
        }
    }

    fn sampled_len(matrix: &[C64]) -> usize {
        (matrix.len() as f64).sqrt().round() as usize
    }

    fn sampled_index(dt: f64, n: usize, t: f64) -> Result<usize> {
        let k = (t / dt).round();
        if (t - k * dt).abs() > 1e-9 * dt.max(1.0) || k < 0.0 || k as usize >= n {
            return Err(Error::InvalidParameter(format!("time {t} is not on the sampled kernel grid")));
        }
        Ok(k as usize)
    }

    /// `alpha(t, s)`.
    pub fn eval(&self, t: f64, s: f64) -> Result<C64> {
        match *self {
            Self::Delta => Err(Error::DeltaNotPointwise),
            Self::Exponential { gamma, omega, weight } => {
                let tau = t - s;
                Ok(weight * C64::new(-gamma * tau.abs(), -omega * tau).exp())
            }
            Self::SingleMode { omega, g2 } => Ok(g2 * C64::new(0.0, -omega * (t - s)).exp()),
            Self::Sampled { dt, ref matrix } => {
                let n = Self::sampled_len(matrix);
                let (i, j) = (Self::sampled_index(dt, n, t)?, Self::sampled_index(dt, n, s)?);
                Ok(matrix[i * n + j])
            }
        }
    }

    /// `A(t) = int_0^t alpha(t, s) ds` in closed form where one exists.
    pub fn integral_from_zero(&self, t: f64) -> Option<C64> {
        match *self {
            Self::Exponential { gamma, omega, weight } => {
                let k = C64::new(gamma, omega);
                Some(weight * (1.0 - (-k * t).exp()) / k)
            }
            Self::SingleMode { omega, g2 } => {
                if omega == 0.0 {
                    Some(C64::new(g2 * t, 0.0))
                } else {
                    let k = C64::new(0.0, omega);
                    Some(g2 * (1.0 - (-k * t).exp()) / k)
                }
            }
            Self::Delta => Some(C64::new(0.5, 0.0)),
            Self::Sampled { .. } => None,
        }
    }
}

/// Hermitian covariance `C[i][j] = alpha(t_i, t_j)` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Covariance {
    pub n: usize,
    pub data: Vec<C64>,
}

impl Covariance {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(self.n, &self.data)
    }
}

/// Discretises the kernel on `grid` and checks positive semidefiniteness.
/// The delta kernel becomes `I / dt`.
pub fn build_covariance(kernel: &CorrelationKernel, grid: &TimeGrid) -> Result<Covariance> {
    let n = grid.len();
    let dt = grid.dt();
    let data = match kernel {
        CorrelationKernel::Delta => (0..n * n)
            .map(|k| if k / n == k % n { C64::new(1.0 / dt, 0.0) } else { C64::new(0.0, 0.0) })
            .collect(),
        CorrelationKernel::Sampled { dt: kdt, matrix } => {
            if (kdt - dt).abs() > 1e-12 * dt {
                return Err(Error::InvalidParameter("sampled kernel grid does not match".into()));
            }
            let m = CorrelationKernel::sampled_len(matrix);
            if m < n {
                return Err(Error::DimensionMismatch { expected: n, found: m });
            }
            (0..n * n).map(|k| matrix[(k / n) * m + k % n]).collect()
        }
        _ => {
            let times = grid.times();
            let mut data = Vec::with_capacity(n * n);
            for &t in &times {
                for &s in &times {
                    data.push(kernel.eval(t, s)?);
                }
            }
            data
        }
    };
    let cov = Covariance { n, data };
    let min = cov.eigenvalues()[0];
    if min < -1e-10 {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    Ok(cov)
}
