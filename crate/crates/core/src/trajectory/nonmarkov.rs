use crate::hilbert::{norm_sqr, normalize_slice, Operator};
use crate::trajectory::{check_dim, expect, integrate, FCoefficient, MemoryAccumulator, Scratch, StepScheme};
use crate::{Error, Result, C64, I};

/// Nonlinear non-Markovian QSD for a Hermitian coupling `L = lambda M`
/// with `[H, M] = 0`:
///
/// `dpsi/dt = -iH psi - lambda^2 A(t) (M^2 - <M^2>) psi
///            + lambda (M - <M>) psi (z_t + lambda S(t) + lambda A(t) <M>)`
///
/// where `A(t) = int_0^t alpha(t,s) ds` and `S(t) = int_0^t alpha^*(t,s) <M>_s ds`.
/// `M = H` is the energy-measurement case.
#[derive(Clone, Debug)]
pub struct MeasurementStepper {
    h: Operator,
    m: Operator,
    m2: Operator,
    lambda: f64,
}

impl MeasurementStepper {
    pub fn new(h: &Operator, m: &Operator, lambda: f64) -> Result<Self> {
        check_dim(h.dim(), m.dim())?;
        if !m.is_hermitian() {
            return Err(Error::InvalidAnsatz("measurement coupling must be Hermitian".into()));
        }
        let comm = h.commutator(m)?;
        if comm.data().iter().any(|z| z.norm() > 1e-12) {
            return Err(Error::InvalidAnsatz("measurement coupling must commute with H".into()));
        }
        Ok(Self { h: h.clone(), m: m.clone(), m2: m.matmul(m)?, lambda })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Integrand of the shift integral for the accumulator.
    pub fn integrand(&self, psi: &[C64]) -> C64 {
        expect(&self.m, psi, norm_sqr(psi))
    }

    /// Advances `psi` and `acc` by one step; `z0`, `z1` are the noise at the
    /// step endpoints. Returns the norm before renormalisation.
    pub fn step(
        &self,
        psi: &mut [C64],
        z0: C64,
        z1: C64,
        acc: &mut MemoryAccumulator,
        dt: f64,
        scheme: StepScheme,
        ws: &mut Scratch,
    ) -> Result<f64> {
        let lam = self.lambda;
        let (s0, a0) = (acc.shift_integral, acc.kernel_integral);
        let acc_ref = &*acc;
        integrate(psi, scheme, ws, |stage, x, out| {
            let n2 = norm_sqr(x);
            let em = expect(&self.m, x, n2);
            let em2 = expect(&self.m2, x, n2);
            let (z, s, a) = if stage == 0 {
                (z0, s0, a0)
            } else {
                let (s1, a1) = acc_ref.peek(em);
                (z1, s1, a1)
            };
            let noise = lam * (z + lam * s + lam * a * em);
            let mem = lam * lam * a;
            let diag = dt * (mem * em2 - noise * em);
            out.iter_mut().zip(x).for_each(|(o, v)| *o = diag * v);
            self.h.apply_add(-I * dt, x, out);
            self.m2.apply_add(-mem * dt, x, out);
            self.m.apply_add(noise * dt, x, out);
        });
        let norm = normalize_slice(psi)?;
        acc.update(self.integrand(psi));
        Ok(norm)
    }
}

/// Structure required by the lowering-operator ansatz: `[H, A] = -omega A`
/// and `A^dagger A` diagonal with non-negative integer eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct LoweringStructure {
    pub omega: f64,
    pub levels: Vec<u32>,
    pub max_level: u32,
}

pub fn lowering_structure(h: &Operator, a: &Operator) -> Result<LoweringStructure> {
    check_dim(h.dim(), a.dim())?;
    let comm = h.commutator(a)?;
    let a2: f64 = a.data().iter().map(|z| z.norm_sqr()).sum();
    if a2 == 0.0 {
        return Err(Error::InvalidAnsatz("lowering operator is zero".into()));
    }
    let overlap: C64 = a.data().iter().zip(comm.data()).map(|(x, y)| x.conj() * y).sum::<C64>() / a2;
    let omega = -overlap.re;
    let scale = 1.0 + h.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let resid = comm.data().iter().zip(a.data()).map(|(c, x)| (c + omega * x).norm()).fold(0.0, f64::max);
    if resid > 1e-9 * scale {
        return Err(Error::InvalidAnsatz(format!("[H, A] is not proportional to A (residual {resid:.3e})")));
    }
    let n = a.dagger().matmul(a)?;
    if !n.is_diagonal() {
        return Err(Error::InvalidAnsatz("A^dagger A must be diagonal".into()));
    }
    let mut levels = Vec::with_capacity(n.dim());
    for d in n.diagonal() {
        let k = d.re.round();
        if (d - C64::new(k, 0.0)).norm() > 1e-9 || k < 0.0 {
            return Err(Error::InvalidAnsatz("A^dagger A must have integer eigenvalues".into()));
        }
        levels.push(k as u32);
    }
    let max_level = levels.iter().copied().max().unwrap_or(0);
    Ok(LoweringStructure { omega, levels, max_level })
}

/// Exact flow of the diagonal part over half a step:
/// `psi_k *= phase_k * ratio^{n_k}`.
#[derive(Clone, Debug)]
pub(crate) struct DiagonalFlow {
    phase_half: Vec<C64>,
    levels: Vec<u32>,
    powers: Vec<C64>,
}

impl DiagonalFlow {
    pub(crate) fn new(h: &Operator, structure: &LoweringStructure, dt: f64, extra_rate: f64) -> Self {
        let phase_half = h
            .diagonal()
            .iter()
            .zip(&structure.levels)
            .map(|(e, &n)| ((-I * e - extra_rate * n as f64) * (0.5 * dt)).exp())
            .collect();
        Self {
            phase_half,
            levels: structure.levels.clone(),
            powers: vec![C64::new(1.0, 0.0); structure.max_level as usize + 1],
        }
    }

    pub(crate) fn apply(&mut self, psi: &mut [C64], ratio: C64) {
        for k in 1..self.powers.len() {
            self.powers[k] = self.powers[k - 1] * ratio;
        }
        for ((p, ph), &n) in psi.iter_mut().zip(&self.phase_half).zip(&self.levels) {
            *p *= ph * self.powers[n as usize];
        }
    }
}

/// Nonlinear non-Markovian QSD for a lowering coupling `L = lambda A`:
///
/// `dpsi/dt = -iH psi - lambda F(t) (A^dagger A - <A^dagger A>) psi
///            + lambda (A - <A>) psi (z_t + lambda S(t) + <A^dagger> F(t))`
///
/// with `S(t) = int_0^t alpha^*(t,s) <A^dagger>_s ds`. The diagonal part
/// (`H` diagonal and the `F` damping) is integrated exactly in a Strang
/// splitting around a Heun step of the rest; the `<A^dagger A>` term only
/// rescales the state and is absorbed by the renormalisation.
#[derive(Clone, Debug)]
pub struct DissipativeStepper {
    h_off: Operator,
    a: Operator,
    lambda: f64,
    structure: LoweringStructure,
    flow: DiagonalFlow,
}

impl DissipativeStepper {
    pub fn new(h: &Operator, a: &Operator, lambda: f64, dt: f64) -> Result<Self> {
        let structure = lowering_structure(h, a)?;
        let flow = DiagonalFlow::new(h, &structure, dt, 0.0);
        Ok(Self { h_off: h.off_diagonal(), a: a.clone(), lambda, structure, flow })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Frequency `omega` in `[H, A] = -omega A`.
    pub fn omega(&self) -> f64 {
        self.structure.omega
    }

    pub fn integrand(&self, psi: &[C64]) -> C64 {
        expect(&self.a, psi, norm_sqr(psi)).conj()
    }

    /// Drops every component outside the kernel of `A^dagger A` and
    /// renormalises.
    pub fn project_dark(&self, psi: &mut [C64]) -> Result<()> {
        for (p, &n) in psi.iter_mut().zip(&self.structure.levels) {
            if n > 0 {
                *p = C64::new(0.0, 0.0);
            }
        }
        normalize_slice(psi).map(|_| ())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        psi: &mut [C64],
        z0: C64,
        z1: C64,
        f: &mut FCoefficient,
        acc: &mut MemoryAccumulator,
        dt: f64,
        scheme: StepScheme,
        ws: &mut Scratch,
    ) -> Result<()> {
        let r = f.advance_half();
        self.flow.apply(psi, r);
        normalize_slice(psi)?;
        let f_mid = f.value();
        let lam = self.lambda;
        let s0 = acc.shift_integral;
        let acc_ref = &*acc;
        let (a, h_off) = (&self.a, &self.h_off);
        integrate(psi, scheme, ws, |stage, x, out| {
            let n2 = norm_sqr(x);
            let ea = expect(a, x, n2);
            let (z, s) = if stage == 0 { (z0, s0) } else { (z1, acc_ref.peek(ea.conj()).0) };
            let noise = lam * (z + lam * s + ea.conj() * f_mid);
            let diag = -noise * ea * dt;
            out.iter_mut().zip(x).for_each(|(o, v)| *o = diag * v);
            h_off.apply_add(-I * dt, x, out);
            a.apply_add(noise * dt, x, out);
        });
        let r = f.advance_half();
        self.flow.apply(psi, r);
        normalize_slice(psi)?;
        acc.update(self.integrand(psi));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation, number, sigma_minus, sigma_z, sigma_x, StateVector};
    use crate::noise::{CorrelationKernel, TimeGrid};
    use crate::trajectory::RiccatiParams;

    #[test]
    fn measurement_eigenstate_is_fixed() {
        let h = sigma_z().scale(C64::new(0.5, 0.0));
        let stepper = MeasurementStepper::new(&h, &sigma_z(), 1.0).unwrap();
        let kernel = CorrelationKernel::exponential(1.0, 0.0).unwrap();
        let grid = TimeGrid::new(1.0, 1e-2).unwrap();
        let mut psi = StateVector::spin_up().into_amplitudes();
        let mut acc = MemoryAccumulator::new(&kernel, &grid, stepper.integrand(&psi)).unwrap();
        let mut ws = Scratch::new(2);
        for k in 0..100 {
            let z = C64::new((k as f64).sin(), 0.3);
            stepper.step(&mut psi, z, z, &mut acc, 1e-2, StepScheme::EulerHeun, &mut ws).unwrap();
        }
        assert!((psi[0].norm() - 1.0).abs() < 1e-14);
        assert!(psi[1].norm() < 1e-14);
    }

    #[test]
    fn measurement_rejects_noncommuting_coupling() {
        let h = sigma_z();
        assert!(matches!(MeasurementStepper::new(&h, &sigma_x(), 1.0), Err(Error::InvalidAnsatz(_))));
    }

    #[test]
    fn lowering_structure_of_spin_and_oscillator() {
        let s = lowering_structure(&sigma_z().scale(C64::new(0.5, 0.0)), &sigma_minus()).unwrap();
        assert!((s.omega - 1.0).abs() < 1e-14);
        assert_eq!(s.levels, vec![1, 0]);
        let o = lowering_structure(&number(5).scale(C64::new(2.0, 0.0)), &annihilation(5)).unwrap();
        assert!((o.omega - 2.0).abs() < 1e-14);
        assert_eq!(o.levels, vec![0, 1, 2, 3, 4]);
        assert!(matches!(lowering_structure(&sigma_x(), &sigma_minus()), Err(Error::InvalidAnsatz(_))));
    }

    #[test]
    fn dark_state_is_fixed() {
        let h = sigma_z().scale(C64::new(0.5, 0.0));
        let dt = 1e-2;
        let mut stepper = DissipativeStepper::new(&h, &sigma_minus(), 1.0, dt).unwrap();
        let kernel = CorrelationKernel::exponential(1.0, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, dt).unwrap();
        let mut f = FCoefficient::new(&RiccatiParams::for_kernel(&kernel, 1.0, 1.0).unwrap(), dt);
        let mut psi = StateVector::spin_down().into_amplitudes();
        let mut acc = MemoryAccumulator::new(&kernel, &grid, stepper.integrand(&psi)).unwrap();
        let mut ws = Scratch::new(2);
        for _ in 0..100 {
            let z = C64::new(0.7, -1.1);
            stepper.step(&mut psi, z, z, &mut f, &mut acc, dt, StepScheme::EulerHeun, &mut ws).unwrap();
        }
        assert!(psi[0].norm() < 1e-14);
        assert!((psi[1].norm() - 1.0).abs() < 1e-14);
    }
}
