use crate::noise::{CorrelationKernel, TimeGrid};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
enum History {
    /// `alpha^*(t + dt, s) = decay * alpha^*(t, s)` for closed-form kernels.
    Recursive { decay: C64, weight: f64 },
    /// Tabulated kernel: trapezoid re-summation over the stored samples.
    Sampled { n: usize, matrix: Vec<C64>, samples: Vec<C64> },
}

/// Running memory integrals on a uniform grid:
/// `shift_integral(t) = int_0^t alpha^*(t, s) g(s) ds` for an integrand `g`
/// fed one sample per step, and `kernel_integral(t) = int_0^t alpha(t, s) ds`.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryAccumulator {
    pub shift_integral: C64,
    pub kernel_integral: C64,
    step: usize,
    dt: f64,
    last: C64,
    kernel: CorrelationKernel,
    history: History,
}

impl MemoryAccumulator {
    /// `g0` is the integrand at `t = 0`.
    pub fn new(kernel: &CorrelationKernel, grid: &TimeGrid, g0: C64) -> Result<Self> {
        let dt = grid.dt();
        let history = match kernel {
            CorrelationKernel::Exponential { gamma, omega, weight } => {
                History::Recursive { decay: C64::new(-gamma * dt, omega * dt).exp(), weight: *weight }
            }
            CorrelationKernel::SingleMode { omega, g2 } => {
                History::Recursive { decay: C64::new(0.0, omega * dt).exp(), weight: *g2 }
            }
            CorrelationKernel::Sampled { dt: kdt, matrix } => {
                let n = (matrix.len() as f64).sqrt().round() as usize;
                if (kdt - dt).abs() > 1e-12 * dt {
                    return Err(Error::InvalidParameter("sampled kernel grid does not match".into()));
                }
                if n < grid.len() {
                    return Err(Error::DimensionMismatch { expected: grid.len(), found: n });
                }
                History::Sampled { n, matrix: matrix.clone(), samples: vec![g0] }
            }
            CorrelationKernel::Delta => {
                return Err(Error::UnsupportedKernel(
                    "white noise has no memory integral; use the Markov stepper".into(),
                ))
            }
        };
        Ok(Self {
            shift_integral: C64::new(0.0, 0.0),
            kernel_integral: C64::new(0.0, 0.0),
            step: 0,
            dt,
            last: g0,
            kernel: kernel.clone(),
            history,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// `(shift_integral, kernel_integral)` one step ahead if the integrand
    /// there is `next`, without committing.
    pub fn peek(&self, next: C64) -> (C64, C64) {
        let dt = self.dt;
        match &self.history {
            History::Recursive { decay, weight } => {
                let s = decay * self.shift_integral + 0.5 * dt * weight * (decay * self.last + next);
                let a = self.kernel.integral_from_zero(self.time() + dt).unwrap_or_default();
                (s, a)
            }
            History::Sampled { n, matrix, samples } => {
                let m = self.step + 1;
                let row = &matrix[m * n..m * n + m + 1];
                let mut s = C64::new(0.0, 0.0);
                let mut a = C64::new(0.0, 0.0);
                for k in 0..=m {
                    let w = if k == 0 || k == m { 0.5 * dt } else { dt };
                    let g = if k == m { next } else { samples[k] };
                    s += w * row[k].conj() * g;
                    a += w * row[k];
                }
                (s, a)
            }
        }
    }

    /// Commits one step with integrand `next` at the new time.
    pub fn update(&mut self, next: C64) {
        let (s, a) = self.peek(next);
        self.shift_integral = s;
        self.kernel_integral = a;
        self.step += 1;
        self.last = next;
        if let History::Sampled { samples, .. } = &mut self.history {
            samples.push(next);
        }
    }
}

/// Functional form of [`MemoryAccumulator::update`].
pub fn memory_update(acc: &MemoryAccumulator, next: C64) -> MemoryAccumulator {
    let mut out = acc.clone();
    out.update(next);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero() -> C64 {
        C64::new(0.0, 0.0)
    }

    #[test]
    fn zero_integrand_stays_zero() {
        let k = CorrelationKernel::exponential(1.0, 0.5).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let mut acc = MemoryAccumulator::new(&k, &grid, zero()).unwrap();
        assert_eq!((acc.shift_integral, acc.kernel_integral), (zero(), zero()));
        for _ in 0..100 {
            acc.update(zero());
        }
        assert_eq!(acc.shift_integral, zero());
    }

    #[test]
    fn unit_integrand_saturates_at_half() {
        // int_0^inf (gamma/2) e^{-gamma u} du = 1/2
        let k = CorrelationKernel::exponential(2.0, 0.0).unwrap();
        let grid = TimeGrid::new(20.0, 1e-3).unwrap();
        let one = C64::new(1.0, 0.0);
        let mut acc = MemoryAccumulator::new(&k, &grid, one).unwrap();
        for _ in 0..grid.n_steps() {
            acc.update(one);
        }
        assert!((acc.shift_integral - C64::new(0.5, 0.0)).norm() < 1e-6);
        assert!((acc.kernel_integral - C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kernel_integral_limit_is_weight_over_rate() {
        let (gamma, omega) = (1.5, 0.8);
        let k = CorrelationKernel::exponential(gamma, omega).unwrap();
        let grid = TimeGrid::new(40.0, 0.01).unwrap();
        let mut acc = MemoryAccumulator::new(&k, &grid, zero()).unwrap();
        for _ in 0..grid.n_steps() {
            acc.update(zero());
        }
        let want = 0.5 * gamma / C64::new(gamma, omega);
        assert!((acc.kernel_integral - want).norm() < 1e-12);
    }

    #[test]
    fn recursive_matches_history_quadrature() {
        let k = CorrelationKernel::exponential(1.3, 0.7).unwrap();
        let grid = TimeGrid::new(1.0, 1e-3).unwrap();
        let cov = crate::noise::build_covariance(&k, &grid).unwrap();
        let sampled = CorrelationKernel::sampled(grid.dt(), cov.n, cov.data.clone()).unwrap();
        let g = |k: usize| C64::new((k as f64 * 0.01).sin(), (k as f64 * 0.003).cos());
        let mut rec = MemoryAccumulator::new(&k, &grid, g(0)).unwrap();
        let mut hist = MemoryAccumulator::new(&sampled, &grid, g(0)).unwrap();
        for step in 1..=1000 {
            rec.update(g(step));
            hist.update(g(step));
        }
        assert!((rec.shift_integral - hist.shift_integral).norm() < 1e-6);
        assert!((rec.kernel_integral - hist.kernel_integral).norm() < 1e-6);
    }

    #[test]
    fn delta_kernel_is_rejected() {
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        assert!(matches!(
            MemoryAccumulator::new(&CorrelationKernel::Delta, &grid, zero()),
            Err(Error::UnsupportedKernel(_))
        ));
    }
}
