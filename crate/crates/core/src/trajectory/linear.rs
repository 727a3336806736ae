use crate::hilbert::Operator;
use crate::noise::CorrelationKernel;
use crate::trajectory::nonmarkov::DiagonalFlow;
use crate::trajectory::{check_dim, integrate, lowering_structure, FCoefficient, RiccatiParams, Scratch, StepScheme};
use crate::{Error, Result, C64, I};

/// Operator replacing the functional derivative `delta psi_t / delta z_s`
/// in the linear equation.
#[derive(Clone, Debug)]
pub enum OAnsatz {
    /// `L = lambda M`, `M` Hermitian and commuting with `H`: `O = lambda M`.
    MeasurementLike { m: Operator },
    /// `L = lambda A` with `[H, A] = -omega A`: `O(t, s) = f(t, s) A`.
    LoweringScaled { lowering: Operator },
}

#[derive(Clone, Debug)]
enum Family {
    Measurement { m: Operator, m2: Operator },
    Lowering { a: Operator, h_off: Operator, flow: DiagonalFlow, riccati: Option<RiccatiParams> },
}

/// Linear non-Markovian QSD
/// `dpsi/dt = -iH psi + L psi z_t - L^dagger int_0^t alpha(t,s) O(t,s) ds psi`,
/// whose memory term is `lambda^2 A(t) M^2 psi` for the measurement family and
/// `lambda F(t) A^dagger A psi` for the lowering family. The delta kernel
/// gives the linear Markov equation (`A = 1/2`, `F = lambda / 2`).
#[derive(Clone, Debug)]
pub struct LinearStepper {
    h: Operator,
    lambda: f64,
    kernel: CorrelationKernel,
    family: Family,
}

impl LinearStepper {
    pub fn new(h: &Operator, ansatz: &OAnsatz, lambda: f64, kernel: &CorrelationKernel, dt: f64) -> Result<Self> {
        let family = match ansatz {
            OAnsatz::MeasurementLike { m } => {
                check_dim(h.dim(), m.dim())?;
                if !m.is_hermitian() || h.commutator(m)?.data().iter().any(|z| z.norm() > 1e-12) {
                    return Err(Error::InvalidAnsatz(
                        "measurement-like ansatz needs a Hermitian coupling commuting with H".into(),
                    ));
                }
                if matches!(kernel, CorrelationKernel::Sampled { .. }) {
                    return Err(Error::UnsupportedKernel("linear stepper needs a closed-form kernel".into()));
                }
                Family::Measurement { m: m.clone(), m2: m.matmul(m)? }
            }
            OAnsatz::LoweringScaled { lowering } => {
                let structure = lowering_structure(h, lowering)?;
                let riccati = match kernel {
                    CorrelationKernel::Delta => None,
                    k => Some(RiccatiParams::for_kernel(k, structure.omega, lambda)?),
                };
                Family::Lowering {
                    a: lowering.clone(),
                    h_off: h.off_diagonal(),
                    flow: DiagonalFlow::new(h, &structure, dt, 0.0),
                    riccati,
                }
            }
        };
        Ok(Self { h: h.clone(), lambda, kernel: kernel.clone(), family })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Fresh `F(t)` for the lowering family (`None` for the measurement family).
    pub fn f_coefficient(&self, dt: f64) -> Option<FCoefficient> {
        match &self.family {
            Family::Measurement { .. } => None,
            Family::Lowering { riccati: Some(p), .. } => Some(FCoefficient::new(p, dt)),
            Family::Lowering { riccati: None, .. } => {
                Some(FCoefficient::constant(self.lambda, C64::new(0.5 * self.lambda, 0.0), dt))
            }
        }
    }

    /// Advances the unnormalised `psi` from `t` to `t + dt`. `f` must be the
    /// coefficient from [`Self::f_coefficient`] for the lowering family.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        psi: &mut [C64],
        t: f64,
        z0: C64,
        z1: C64,
        f: Option<&mut FCoefficient>,
        dt: f64,
        scheme: StepScheme,
        ws: &mut Scratch,
    ) -> Result<()> {
        let lam = self.lambda;
        match &mut self.family {
            Family::Measurement { m, m2 } => {
                let a0 = self.kernel.integral_from_zero(t).unwrap_or_default();
                let a1 = self.kernel.integral_from_zero(t + dt).unwrap_or_default();
                let h = &self.h;
                let (m, m2) = (&*m, &*m2);
                integrate(psi, scheme, ws, |stage, x, out| {
                    let (z, a) = if stage == 0 { (z0, a0) } else { (z1, a1) };
                    out.fill(C64::new(0.0, 0.0));
                    h.apply_add(-I * dt, x, out);
                    m.apply_add(lam * z * dt, x, out);
                    m2.apply_add(-lam * lam * a * dt, x, out);
                });
            }
            Family::Lowering { a, h_off, flow, .. } => {
                let f = f.ok_or_else(|| Error::InvalidParameter("lowering family needs F(t)".into()))?;
                flow.apply(psi, f.advance_half());
                let (a, h_off) = (&*a, &*h_off);
                integrate(psi, scheme, ws, |stage, x, out| {
                    let z = if stage == 0 { z0 } else { z1 };
                    out.fill(C64::new(0.0, 0.0));
                    h_off.apply_add(-I * dt, x, out);
                    a.apply_add(lam * z * dt, x, out);
                });
                flow.apply(psi, f.advance_half());
            }
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ZeroNorm { norm: f64::NAN });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{sigma_minus, sigma_x, sigma_z, StateVector};

    #[test]
    fn noiseless_closed_system_is_unitary() {
        let h = sigma_x();
        let ansatz = OAnsatz::MeasurementLike { m: Operator::zeros(2) };
        let dt = 1e-3;
        let mut s = LinearStepper::new(&h, &ansatz, 0.0, &CorrelationKernel::Delta, dt).unwrap();
        let mut psi = StateVector::spin_up().into_amplitudes();
        let mut ws = Scratch::new(2);
        let zero = C64::new(0.0, 0.0);
        for k in 0..1000 {
            s.step(&mut psi, k as f64 * dt, zero, zero, None, dt, StepScheme::EulerHeun, &mut ws).unwrap();
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-6);
        assert!((psi[0] - C64::new(1f64.cos(), 0.0)).norm() < 1e-6);
    }

    #[test]
    fn lowering_ansatz_requires_ladder_structure() {
        let ansatz = OAnsatz::LoweringScaled { lowering: sigma_minus() };
        let k = CorrelationKernel::single_mode(1.0, 1.0).unwrap();
        assert!(matches!(LinearStepper::new(&sigma_x(), &ansatz, 1.0, &k, 1e-3), Err(Error::InvalidAnsatz(_))));
        assert!(LinearStepper::new(&sigma_z(), &ansatz, 1.0, &k, 1e-3).is_ok());
    }

    #[test]
    fn noiseless_single_mode_up_amplitude_is_vacuum_rabi() {
        // up amplitude of spin coupled resonantly to one vacuum mode: e^{-it/2} cos(t)
        let h = sigma_z().scale(C64::new(0.5, 0.0));
        let ansatz = OAnsatz::LoweringScaled { lowering: sigma_minus() };
        let k = CorrelationKernel::single_mode(1.0, 1.0).unwrap();
        let dt = 1e-3;
        let mut s = LinearStepper::new(&h, &ansatz, 1.0, &k, dt).unwrap();
        let mut f = s.f_coefficient(dt).unwrap();
        let mut psi = StateVector::spin_up().into_amplitudes();
        let mut ws = Scratch::new(2);
        let zero = C64::new(0.0, 0.0);
        for k in 0..3000 {
            s.step(&mut psi, k as f64 * dt, zero, zero, Some(&mut f), dt, StepScheme::EulerHeun, &mut ws).unwrap();
        }
        let want = C64::new(0.0, -1.5).exp() * 3f64.cos();
        assert!((psi[0] - want).norm() < 1e-10);
    }
}
