use crate::noise::rng::{circular_normal, PathRng};
use crate::noise::{build_covariance, CorrelationKernel, NoisePath, TimeGrid};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SamplerKind {
    /// Recursive sampler for closed-form kernels, white noise for delta,
    /// Cholesky for tabulated kernels.
    #[default]
    Auto,
    Cholesky,
    Recursive,
}

/// Draws noise paths for one kernel on one grid. Construction does all the
/// kernel-dependent work (factorisation, recursion constants) once; sampling
/// is then a pure function of the random stream.
#[derive(Clone, Debug)]
pub enum Sampler {
    /// Independent `CN(0, 1/dt)` values: piecewise-constant white noise.
    White { dt: f64, len: usize },
    /// `z = Lambda w` with `Lambda Lambda^dagger = conj(C)`, rows in grid order.
    Cholesky { dt: f64, len: usize, factor: Vec<C64> },
    /// Stationary complex Ornstein-Uhlenbeck recursion.
    OrnsteinUhlenbeck { dt: f64, len: usize, decay: C64, sd0: f64, sd_step: f64 },
    /// `z_t = w exp(i omega t)`, `E|w|^2 = g2`.
    Rotating { dt: f64, len: usize, omega: f64, sd: f64 },
}

impl Sampler {
    pub fn new(kernel: &CorrelationKernel, grid: &TimeGrid, kind: SamplerKind) -> Result<Self> {
        match (kind, kernel) {
            (SamplerKind::Auto, CorrelationKernel::Delta) => Ok(Self::White { dt: grid.dt(), len: grid.len() }),
            (SamplerKind::Auto, CorrelationKernel::Sampled { .. }) | (SamplerKind::Cholesky, _) => {
                Self::cholesky(kernel, grid)
            }
            (SamplerKind::Auto, _) | (SamplerKind::Recursive, _) => Self::recursive(kernel, grid),
        }
    }

    pub fn cholesky(kernel: &CorrelationKernel, grid: &TimeGrid) -> Result<Self> {
        let cov = build_covariance(kernel, grid)?;
        let n = cov.n;
        // conj(C) so that M[z_i z_j^*] = conj(C_ij), i.e. M[z_i^* z_j] = alpha(t_i, t_j).
        let a: Vec<C64> = cov.data.iter().map(|z| z.conj()).collect();
        let factor = pivoted_cholesky(n, &a)?;
        Ok(Self::Cholesky { dt: grid.dt(), len: n, factor })
    }

    pub fn recursive(kernel: &CorrelationKernel, grid: &TimeGrid) -> Result<Self> {
        let (dt, len) = (grid.dt(), grid.len());
        match *kernel {
            CorrelationKernel::Exponential { gamma, omega, weight } => Ok(Self::OrnsteinUhlenbeck {
                dt,
                len,
                decay: C64::new(-gamma * dt, omega * dt).exp(),
                sd0: weight.sqrt(),
                sd_step: (weight * (1.0 - (-2.0 * gamma * dt).exp())).sqrt(),
            }),
            CorrelationKernel::SingleMode { omega, g2 } => Ok(Self::Rotating { dt, len, omega, sd: g2.sqrt() }),
            _ => Err(Error::UnsupportedKernel(format!(
                "the recursive sampler needs an exponential or single-mode kernel, got {}",
                kernel.name()
            ))),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Self::White { len, .. }
            | Self::Cholesky { len, .. }
            | Self::OrnsteinUhlenbeck { len, .. }
            | Self::Rotating { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dt(&self) -> f64 {
        match *self {
            Self::White { dt, .. }
            | Self::Cholesky { dt, .. }
            | Self::OrnsteinUhlenbeck { dt, .. }
            | Self::Rotating { dt, .. } => dt,
        }
    }

    /// Fills `out` with one path (resizing it to the grid length).
    pub fn sample_into(&self, rng: &mut PathRng, out: &mut Vec<C64>) {
        out.clear();
        match *self {
            Self::White { dt, len } => {
                let sd = (1.0 / dt).sqrt();
                out.extend((0..len).map(|_| sd * circular_normal(rng)));
            }
            Self::Cholesky { len, ref factor, .. } => {
                let w: Vec<C64> = (0..len).map(|_| circular_normal(rng)).collect();
                out.extend((0..len).map(|i| {
                    factor[i * len..(i + 1) * len].iter().zip(&w).map(|(l, w)| l * w).sum::<C64>()
                }));
            }
            Self::OrnsteinUhlenbeck { len, decay, sd0, sd_step, .. } => {
                let mut z = sd0 * circular_normal(rng);
                out.push(z);
                for _ in 1..len {
                    z = decay * z + sd_step * circular_normal(rng);
                    out.push(z);
                }
            }
            Self::Rotating { dt, len, omega, sd } => {
                let w = sd * circular_normal(rng);
                out.extend((0..len).map(|k| w * C64::from_polar(1.0, omega * k as f64 * dt)));
            }
        }
    }

    pub fn sample(&self, rng: &mut PathRng, stream: u64) -> NoisePath {
        let mut values = Vec::with_capacity(self.len());
        self.sample_into(rng, &mut values);
        NoisePath { dt: self.dt(), values, stream }
    }
}

/// Pivoted Cholesky `A = Lambda Lambda^dagger` of a Hermitian PSD matrix with
/// diagonal regularisation `1e-12 trace / n`. Returns `Lambda` row-major with
/// rows in the original order (columns follow the pivot order).
pub fn pivoted_cholesky(n: usize, a: &[C64]) -> Result<Vec<C64>> {
    let trace: f64 = (0..n).map(|i| a[i * n + i].re).sum();
    let reg = 1e-12 * trace.abs() / n as f64;
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    let mut diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re + reg).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| diag[perm[x]].total_cmp(&diag[perm[y]])).unwrap();
        perm.swap(k, p);
        let pk = perm[k];
        let piv = diag[pk];
        if piv < -1e-10 {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: piv });
        }
        if piv <= 0.0 {
            // numerically exhausted rank; remaining columns stay zero
            break;
        }
        let lkk = piv.sqrt();
        l[pk * n + k] = C64::new(lkk, 0.0);
        for &i in &perm[k + 1..] {
            let mut v = a[i * n + pk];
            for m in 0..k {
                v -= l[i * n + m] * l[pk * n + m].conj();
            }
            let lik = v / lkk;
            l[i * n + k] = lik;
            diag[i] -= lik.norm_sqr();
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs_matrix() {
        let n = 3;
        let a = vec![
            C64::new(2.0, 0.0),
            C64::new(0.5, 0.5),
            C64::new(0.0, -0.3),
            C64::new(0.5, -0.5),
            C64::new(1.5, 0.0),
            C64::new(0.2, 0.0),
            C64::new(0.0, 0.3),
            C64::new(0.2, 0.0),
            C64::new(1.0, 0.0),
        ];
        let l = pivoted_cholesky(n, &a).unwrap();
        for i in 0..n {
            for j in 0..n {
                let v: C64 = (0..n).map(|k| l[i * n + k] * l[j * n + k].conj()).sum();
                assert!((v - a[i * n + j]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn recursive_rejects_delta() {
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        assert!(matches!(
            Sampler::recursive(&CorrelationKernel::Delta, &grid),
            Err(Error::UnsupportedKernel(_))
        ));
    }

    #[test]
    fn single_mode_paths_have_constant_modulus() {
        let grid = TimeGrid::new(5.0, 0.01).unwrap();
        let s = Sampler::recursive(&CorrelationKernel::single_mode(0.5, 1.0).unwrap(), &grid).unwrap();
        let mut rng = crate::noise::stream_rng(3, 0, 0);
        let p = s.sample(&mut rng, 0);
        let m0 = p.values[0].norm();
        assert!(p.values.iter().all(|z| (z.norm() - m0).abs() < 1e-12));
    }
}
