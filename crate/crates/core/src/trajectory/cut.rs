use crate::trajectory::{FCoefficient, RiccatiParams, StepScheme};
use crate::{Error, Result, C64};

/// Spin damped by a Markov bath and coupled to a distinguished oscillator.
/// Joint model:
/// `H = omega1/2 sigma_z + omega2 b^dagger b + kappa (sigma_- b^dagger + sigma_+ b)`,
/// Lindblad operator `lambda sigma_-`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutParams {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl CutParams {
    /// Riccati coefficients of `F2` for the single-mode channel. Substituting
    /// `delta phi_t / delta z_s = f(t,s) sigma_- phi_t` into the consistency
    /// condition gives `df/dt = f (i omega1 + lambda^2/2 + kappa F2)`, hence
    /// `F2' = kappa + (i (omega1 - omega2) + lambda^2/2) F2 + kappa F2^2`.
    pub fn riccati(&self) -> RiccatiParams {
        RiccatiParams {
            coupling: self.kappa,
            weight: 1.0,
            linear: C64::new(0.5 * self.lambda * self.lambda, self.omega1 - self.omega2),
        }
    }
}

/// Linear two-noise spin equation obtained by moving the cut so that the
/// oscillator belongs to the environment:
///
/// `dphi/dt = -i omega1/2 sigma_z phi + lambda sigma_- phi xi_t - lambda^2/2 sigma_+ sigma_- phi
///            + kappa sigma_- phi z_t - kappa F2(t) sigma_+ sigma_- phi`
///
/// with `xi` white and `M[z_t^* z_s] = exp(-i omega2 (t - s))`.
#[derive(Clone, Debug)]
pub struct TwoChannelCutStepper {
    params: CutParams,
    up_half: C64,
    down_half: C64,
}

impl TwoChannelCutStepper {
    pub fn new(params: CutParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !params.kappa.is_finite() || !params.lambda.is_finite() {
            return Err(Error::InvalidParameter("cut model needs dt > 0 and finite couplings".into()));
        }
        let lam2 = params.lambda * params.lambda;
        Ok(Self {
            params,
            up_half: C64::new(-0.5 * lam2, -0.5 * params.omega1).scale(0.5 * dt).exp(),
            down_half: C64::new(0.0, 0.5 * params.omega1).scale(0.5 * dt).exp(),
        })
    }

    pub fn f_coefficient(&self, dt: f64) -> FCoefficient {
        FCoefficient::new(&self.params.riccati(), dt)
    }

    /// `xi` is the white-noise value on the step (variance `1/dt`), `z0`, `z1`
    /// the single-mode noise at the endpoints.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        phi: &mut [C64],
        xi: C64,
        z0: C64,
        z1: C64,
        f2: &mut FCoefficient,
        dt: f64,
        scheme: StepScheme,
    ) -> Result<()> {
        if phi.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: phi.len() });
        }
        let CutParams { kappa, lambda, .. } = self.params;
        phi[0] *= self.up_half * f2.advance_half();
        phi[1] *= self.down_half;
        // only sigma_- acts here, so the up amplitude is constant within the
        // sub-step and Heun reduces to the trapezoid rule
        let drive = match scheme {
            StepScheme::EulerHeun => lambda * xi + 0.5 * kappa * (z0 + z1),
            StepScheme::Euler => lambda * xi + kappa * z0,
        };
        phi[1] += drive * dt * phi[0];
        phi[0] *= self.up_half * f2.advance_half();
        phi[1] *= self.down_half;
        if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ZeroNorm { norm: f64::NAN });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{sigma_minus, sigma_z};
    use crate::noise::CorrelationKernel;
    use crate::trajectory::{LinearStepper, OAnsatz, Scratch};

    fn run_pair(params: CutParams, xi: impl Fn(usize) -> C64, z: impl Fn(usize) -> C64) -> (Vec<C64>, Vec<C64>) {
        let dt = 1e-3;
        let cut = TwoChannelCutStepper::new(params, dt).unwrap();
        let mut f2 = cut.f_coefficient(dt);
        let mut phi = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        for k in 0..2000 {
            cut.step(&mut phi, xi(k), z(k), z(k + 1), &mut f2, dt, StepScheme::EulerHeun).unwrap();
        }
        let h = sigma_z().scale(C64::new(0.5 * params.omega1, 0.0));
        let (lam, kernel) = if params.kappa == 0.0 {
            (params.lambda, CorrelationKernel::Delta)
        } else {
            (params.kappa, CorrelationKernel::single_mode(params.omega2, 1.0).unwrap())
        };
        let ansatz = OAnsatz::LoweringScaled { lowering: sigma_minus() };
        let mut lin = LinearStepper::new(&h, &ansatz, lam, &kernel, dt).unwrap();
        let mut f = lin.f_coefficient(dt).unwrap();
        let mut psi = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let mut ws = Scratch::new(2);
        for k in 0..2000 {
            let (a, b) = if params.kappa == 0.0 { (xi(k), xi(k)) } else { (z(k), z(k + 1)) };
            lin.step(&mut psi, k as f64 * dt, a, b, Some(&mut f), dt, StepScheme::EulerHeun, &mut ws).unwrap();
        }
        (phi, psi)
    }

    #[test]
    fn no_oscillator_coupling_is_markov_linear() {
        let p = CutParams { omega1: 1.0, omega2: 1.0, kappa: 0.0, lambda: 0.7 };
        let (a, b) = run_pair(p, |k| C64::new((k as f64 * 0.01).sin(), 0.2), |_| C64::new(0.0, 0.0));
        assert!((a[0] - b[0]).norm() < 1e-12 && (a[1] - b[1]).norm() < 1e-12);
    }

    #[test]
    fn no_bath_coupling_is_single_mode_linear() {
        let p = CutParams { omega1: 1.0, omega2: 0.8, kappa: 0.3, lambda: 0.0 };
        let (a, b) = run_pair(p, |_| C64::new(0.0, 0.0), |k| C64::new(0.0, 0.8 * k as f64 * 1e-3).exp());
        assert!((a[0] - b[0]).norm() < 1e-12 && (a[1] - b[1]).norm() < 1e-12);
    }
}
