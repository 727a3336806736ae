use crate::linalg;
use crate::noise::{CorrelationKernel, TimeGrid};
use crate::{Error, Result, C64};

/// Overflow guard on `|F|` for the numeric solver.
pub const F_GUARD: f64 = 1e9;

/// Constant-coefficient Riccati equation
/// `F' = c w + b F + c F^2`, `F(0) = 0`,
/// with `c` the coupling, `w` the zero-lag kernel weight and `b` the linear
/// coefficient. The exponential-kernel dissipative spin has `c = lambda`,
/// `w = gamma / 2`, `b = -gamma + i (omega - Omega)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiParams {
    pub coupling: f64,
    pub weight: f64,
    pub linear: C64,
}

impl RiccatiParams {
    /// Dissipative spin/oscillator with system frequency `omega` (`[H, A] = -omega A`)
    /// coupled through `lambda A` to an exponential environment.
    pub fn damped(gamma: f64, big_omega: f64, omega: f64, lambda: f64) -> Self {
        Self { coupling: lambda, weight: 0.5 * gamma, linear: C64::new(-gamma, omega - big_omega) }
    }

    /// Coefficients for a lowering-operator coupling to a closed-form kernel.
    pub fn for_kernel(kernel: &CorrelationKernel, omega: f64, lambda: f64) -> Result<Self> {
        match *kernel {
            CorrelationKernel::Exponential { gamma, omega: big_omega, weight } => Ok(Self {
                coupling: lambda,
                weight,
                linear: C64::new(-gamma, omega - big_omega),
            }),
            CorrelationKernel::SingleMode { omega: big_omega, g2 } => {
                Ok(Self { coupling: lambda, weight: g2, linear: C64::new(0.0, omega - big_omega) })
            }
            _ => Err(Error::UnsupportedKernel(format!(
                "the F(t) recursion needs an exponential or single-mode kernel, got {}",
                kernel.name()
            ))),
        }
    }

    pub fn rhs(&self, f: C64) -> C64 {
        let c = self.coupling;
        c * self.weight + self.linear * f + c * f * f
    }

    /// Roots `F+`, `F-` of `c F^2 + b F + c w = 0`.
    pub fn roots(&self) -> (C64, C64) {
        let (b, c) = (self.linear, self.coupling);
        let disc = (b * b - 4.0 * c * c * self.weight).sqrt();
        ((-b + disc) / (2.0 * c), (-b - disc) / (2.0 * c))
    }

    /// Exact solution from `F(0) = 0`.
    pub fn closed_form(&self, t: f64) -> C64 {
        let (b, c) = (self.linear, self.coupling);
        if c == 0.0 || self.weight == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let (fp, fm) = self.roots();
        let d = c * (fp - fm);
        if d.norm() <= 1e-12 * (1.0 + b.norm()) {
            let f0 = -b / (2.0 * c);
            return f0 - 1.0 / (c * t + 1.0 / f0);
        }
        if d.re > 0.0 {
            let e = (-d * t).exp();
            fp * fm * (1.0 - e) / (fp - fm * e)
        } else {
            let e = (d * t).exp();
            fp * fm * (e - 1.0) / (fp * e - fm)
        }
    }

    /// Generator of `(u, u')` for the linearising substitution
    /// `F = -u' / (c u)`, i.e. `u'' = b u' - c^2 w u`.
    fn linear_generator(&self) -> [C64; 4] {
        let c = self.coupling;
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-c * c * self.weight, 0.0), self.linear]
    }
}

/// Numeric and exact `F(t)` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FSeries {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    pub closed_form: Vec<C64>,
}

/// Classic RK4 from `F(0) = 0`. Fails with `FDiverged` once `|F|` passes the
/// overflow guard; the reported time extrapolates the pole from the last
/// well-resolved point using `F ~ 1 / (c (t_c - t))`.
pub fn solve_f(params: &RiccatiParams, grid: &TimeGrid) -> Result<FSeries> {
    let h = grid.dt();
    let c = params.coupling;
    let times = grid.times();
    let mut values = Vec::with_capacity(times.len());
    let mut f = C64::new(0.0, 0.0);
    values.push(f);
    let mut resolved = (0.0, f);
    for k in 0..grid.n_steps() {
        let k1 = params.rhs(f);
        let k2 = params.rhs(f + 0.5 * h * k1);
        let k3 = params.rhs(f + 0.5 * h * k2);
        let k4 = params.rhs(f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t = times[k + 1];
        if !(f.norm() <= F_GUARD) {
            let (t0, f0) = resolved;
            let time = if f0.norm() > 0.0 { t0 + (1.0 / (c * f0)).re } else { t0 };
            return Err(Error::FDiverged { time });
        }
        if c * f.norm() * h < 0.05 {
            resolved = (t, f);
        }
        values.push(f);
    }
    let closed_form = times.iter().map(|&t| params.closed_form(t)).collect();
    Ok(FSeries { times, values, closed_form })
}

/// Blow-up time of `F` on resonance with the `gamma / 2` kernel weight.
pub fn critical_time(gamma: f64, lambda: f64) -> Result<f64> {
    let threshold = 2.0 * lambda * lambda;
    if !(gamma > 0.0) || gamma >= threshold {
        return Err(Error::NotSupercritical { gamma, threshold });
    }
    let k = (threshold * gamma - gamma * gamma).sqrt();
    Ok((std::f64::consts::PI + 2.0 * (gamma / k).atan()) / k)
}

/// `F(t)` for large `t` in the resonant subcritical regime.
pub fn subcritical_asymptote(gamma: f64, lambda: f64) -> f64 {
    (gamma - (gamma * gamma - 2.0 * gamma * lambda * lambda).sqrt()) / (2.0 * lambda)
}

#[derive(Clone, Debug, PartialEq)]
enum Rep {
    /// Markov limit: `F = value` for all `t`.
    Constant { coupling: f64, value: C64, half_factor: C64 },
    /// `F = -v / (c u)` with `(u, v = u')` propagated exactly.
    Linearized { coupling: f64, u: C64, v: C64, half: [C64; 4] },
}

/// Running `F(t)` for a trajectory stepper with fixed step `dt`.
///
/// The Riccati equation is carried in its linearised form, so the damping
/// factor `exp(-c int F dt) = u(t2) / u(t1)` stays exact across the poles of
/// `F` in the supercritical regime.
#[derive(Clone, Debug, PartialEq)]
pub struct FCoefficient {
    rep: Rep,
    time: f64,
    half_dt: f64,
}

impl FCoefficient {
    pub fn new(params: &RiccatiParams, dt: f64) -> Self {
        let g = params.linear_generator();
        let scaled: Vec<C64> = g.iter().map(|x| x * (0.5 * dt)).collect();
        let e = linalg::expm(2, &scaled);
        Self {
            rep: Rep::Linearized {
                coupling: params.coupling,
                u: C64::new(1.0, 0.0),
                v: C64::new(0.0, 0.0),
                half: [e[0], e[1], e[2], e[3]],
            },
            time: 0.0,
            half_dt: 0.5 * dt,
        }
    }

    /// Time-independent `F`, as for white noise (`F = lambda / 2`).
    pub fn constant(coupling: f64, value: C64, dt: f64) -> Self {
        let half_factor = (-coupling * value * (0.5 * dt)).exp();
        Self { rep: Rep::Constant { coupling, value, half_factor }, time: 0.0, half_dt: 0.5 * dt }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Current `F`. Infinite exactly at a pole.
    pub fn value(&self) -> C64 {
        match self.rep {
            Rep::Constant { value, .. } => value,
            Rep::Linearized { coupling, u, v, .. } => {
                if coupling == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    -v / (coupling * u)
                }
            }
        }
    }

    /// Advances by `dt / 2` and returns `exp(-c int F)` over the half step.
    pub fn advance_half(&mut self) -> C64 {
        self.time += self.half_dt;
        match &mut self.rep {
            Rep::Constant { half_factor, .. } => *half_factor,
            Rep::Linearized { u, v, half, .. } => {
                let (u0, v0) = (*u, *v);
                let u1 = half[0] * u0 + half[1] * v0;
                let v1 = half[2] * u0 + half[3] * v0;
                let ratio = u1 / u0;
                // keep (u, v) O(1); F and the ratios are scale-free
                let s = (u1.norm_sqr() + v1.norm_sqr()).sqrt();
                *u = u1 / s;
                *v = v1 / s;
                ratio
            }
        }
    }

    pub fn coupling(&self) -> f64 {
        match self.rep {
            Rep::Constant { coupling, .. } | Rep::Linearized { coupling, .. } => coupling,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn starts_at_zero() {
        let p = RiccatiParams::damped(1.0, 1.0, 1.0, 1.0);
        assert_eq!(p.closed_form(0.0), C64::new(0.0, 0.0));
        let s = solve_f(&p, &TimeGrid::new(1.0, 0.01).unwrap()).unwrap();
        assert_eq!(s.values[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn critical_time_on_resonance() {
        assert!((critical_time(1.0, 1.0).unwrap() - 1.5 * PI).abs() < 1e-12);
        assert!(matches!(critical_time(2.0, 1.0), Err(Error::NotSupercritical { .. })));
        assert!(critical_time(1.99, 1.0).unwrap().is_finite());
    }

    #[test]
    fn closed_form_has_the_printed_asymptote() {
        let p = RiccatiParams::damped(4.0, 1.0, 1.0, 1.0);
        let want = subcritical_asymptote(4.0, 1.0);
        assert!((want - (4.0 - 8f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((p.closed_form(50.0) - C64::new(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn closed_form_solves_the_ode() {
        for p in [
            RiccatiParams::damped(4.0, 0.3, 1.0, 1.0),
            RiccatiParams::damped(1.0, 1.0, 1.0, 1.0),
            RiccatiParams { coupling: 0.2, weight: 1.0, linear: C64::new(0.25, 0.1) },
        ] {
            for &t in &[0.1, 0.7, 2.3] {
                let h = 1e-5;
                let d = (p.closed_form(t + h) - p.closed_form(t - h)) / (2.0 * h);
                let f = p.closed_form(t);
                assert!((d - p.rhs(f)).norm() < 1e-6 * (1.0 + p.rhs(f).norm()), "{p:?} at {t}");
            }
        }
    }

    #[test]
    fn linearized_value_tracks_closed_form() {
        let p = RiccatiParams::damped(4.0, 0.5, 1.0, 1.0);
        let dt = 1e-2;
        let mut fc = FCoefficient::new(&p, dt);
        for _ in 0..400 {
            fc.advance_half();
            assert!((fc.value() - p.closed_form(fc.time())).norm() < 1e-10);
        }
    }

    #[test]
    fn damping_ratio_crosses_the_pole() {
        // resonant single mode: u = cos(t), F = tan(t)
        let p = RiccatiParams { coupling: 1.0, weight: 1.0, linear: C64::new(0.0, 0.0) };
        let dt = 1e-3;
        let mut fc = FCoefficient::new(&p, dt);
        let mut amp = C64::new(1.0, 0.0);
        for _ in 0..4000 {
            amp *= fc.advance_half();
        }
        assert!((amp - C64::new(2f64.cos(), 0.0)).norm() < 1e-10);
    }
}
