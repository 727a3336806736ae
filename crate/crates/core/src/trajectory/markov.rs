use crate::hilbert::{normalize_slice, Operator, StateVector};
use crate::trajectory::{check_dim, expect, integrate, Scratch, StepScheme};
use crate::{Result, C64, I};

/// Nonlinear Markov QSD
/// `dpsi = -iH psi dt + (L - <L>) psi o (dz + <L^dagger> dt) - (1/2)(L^dagger L - <L^dagger L>) psi dt`.
#[derive(Clone, Debug)]
pub struct MarkovQsdStepper {
    h: Operator,
    l: Operator,
    ldl: Operator,
}

impl MarkovQsdStepper {
    pub fn new(h: &Operator, l: &Operator) -> Result<Self> {
        check_dim(h.dim(), l.dim())?;
        Ok(Self { h: h.clone(), l: l.clone(), ldl: l.dagger().matmul(l)? })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `dz` is the complex noise increment over the step, `M|dz|^2 = dt`.
    /// Returns the norm before renormalisation.
    pub fn step(&self, psi: &mut [C64], dz: C64, dt: f64, scheme: StepScheme, ws: &mut Scratch) -> Result<f64> {
        integrate(psi, scheme, ws, |_, x, out| {
            let n2 = crate::hilbert::norm_sqr(x);
            let el = expect(&self.l, x, n2);
            let eldl = expect(&self.ldl, x, n2);
            let c = dz + el.conj() * dt;
            let diag = 0.5 * dt * eldl - c * el;
            out.iter_mut().zip(x).for_each(|(o, v)| *o = diag * v);
            self.h.apply_add(-I * dt, x, out);
            self.ldl.apply_add(C64::new(-0.5 * dt, 0.0), x, out);
            self.l.apply_add(c, x, out);
        });
        normalize_slice(psi)
    }
}

/// One nonlinear Markov QSD step on a normalised state.
pub fn markov_qsd_step(
    psi: &StateVector,
    h: &Operator,
    l: &Operator,
    dz: C64,
    dt: f64,
    scheme: StepScheme,
) -> Result<StateVector> {
    check_dim(h.dim(), psi.dim())?;
    let stepper = MarkovQsdStepper::new(h, l)?;
    let mut out = psi.clone();
    stepper.step(out.amplitudes_mut(), dz, dt, scheme, &mut Scratch::new(psi.dim()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{sigma_minus, sigma_z};

    #[test]
    fn closed_system_keeps_populations() {
        let h = sigma_z().scale(C64::new(0.5, 0.0));
        let l = Operator::zeros(2);
        let mut psi = StateVector::spin_up();
        for _ in 0..1000 {
            psi = markov_qsd_step(&psi, &h, &l, C64::new(0.3, -0.2), 1e-3, StepScheme::EulerHeun).unwrap();
        }
        assert!((psi.expectation(&sigma_z()).unwrap().re - 1.0).abs() < 1e-12);
        let phase = psi.amplitudes()[0];
        assert!((phase - C64::new(0.0, -0.5).exp()).norm() < 1e-6);
    }

    #[test]
    fn eigenstate_of_l_is_fixed() {
        let h = Operator::zeros(2);
        let l = sigma_z();
        let psi = StateVector::spin_down();
        let out = markov_qsd_step(&psi, &h, &l, C64::new(1.3, 0.4), 1e-2, StepScheme::EulerHeun).unwrap();
        assert!((out.amplitudes()[1] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(out.amplitudes()[0].norm() < 1e-14);
    }

    #[test]
    fn output_is_normalised() {
        let h = sigma_z();
        let l = sigma_minus();
        let psi = StateVector::from_real(&[3.0, 2.0]).unwrap().normalize().unwrap();
        let out = markov_qsd_step(&psi, &h, &l, C64::new(0.1, 0.05), 1e-2, StepScheme::Euler).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }
}
