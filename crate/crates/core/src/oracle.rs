//! Exact reference dynamics the trajectory ensembles are checked against.
//!
//! Every function here is deterministic. Series are returned at the same
//! snapshot steps as [`crate::ensemble::run_ensemble`] for equal grid and stride.

use crate::ensemble::{run_ensemble, snapshot_steps, EnsembleConfig, EnsembleResult, Estimator};
use crate::hilbert::{annihilation, number, sigma_minus, sigma_z, DensityMatrix, Keep, Operator, StateVector};
use crate::linalg;
use crate::noise::{CorrelationKernel, TimeGrid};
use crate::trajectory::models::MarkovQsdModel;
use crate::trajectory::CutParams;
use crate::{Error, Result, C64, I};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest admissible population of the top Fock level of a truncated mode.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;

/// `out += c * op * rho` using the sparse structure of `op`.
fn left_add(c: C64, op: &Operator, rho: &[C64], out: &mut [C64]) {
    let d = op.dim();
    for &(i, k, v) in op.nonzeros() {
        let cv = c * v;
        let (src, dst) = (&rho[k * d..(k + 1) * d], &mut out[i * d..(i + 1) * d]);
        dst.iter_mut().zip(src).for_each(|(o, r)| *o += cv * r);
    }
}

/// `out += c * rho * op`.
fn right_add(c: C64, rho: &[C64], op: &Operator, out: &mut [C64]) {
    let d = op.dim();
    for &(k, j, v) in op.nonzeros() {
        let cv = c * v;
        for i in 0..d {
            out[i * d + j] += cv * rho[i * d + k];
        }
    }
}

/// Right-hand side of the Lindblad equation
/// `drho/dt = -i[H, rho] + sum_m (L rho L^dagger - {L^dagger L, rho}/2)`.
struct Lindbladian {
    h: Operator,
    jumps: Vec<(Operator, Operator)>,
    ldl: Operator,
    tmp: Vec<C64>,
}

impl Lindbladian {
    fn new(h: &Operator, ls: &[Operator]) -> Result<Self> {
        let d = h.dim();
        let mut ldl = Operator::zeros(d);
        for l in ls {
            if l.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: l.dim() });
            }
            ldl = &ldl + &l.dagger().matmul(l)?;
        }
        Ok(Self {
            h: h.clone(),
            jumps: ls.iter().map(|l| (l.clone(), l.dagger())).collect(),
            ldl,
            tmp: vec![ZERO; d * d],
        })
    }

    fn eval(&mut self, rho: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        left_add(-I, &self.h, rho, out);
        right_add(I, rho, &self.h, out);
        left_add(C64::new(-0.5, 0.0), &self.ldl, rho, out);
        right_add(C64::new(-0.5, 0.0), rho, &self.ldl, out);
        for (l, ld) in &self.jumps {
            self.tmp.fill(ZERO);
            left_add(C64::new(1.0, 0.0), l, rho, &mut self.tmp);
            right_add(C64::new(1.0, 0.0), &self.tmp, ld, out);
        }
    }
}

fn hermitize_slice(d: usize, x: &mut [C64]) {
    for i in 0..d {
        x[i * d + i].im = 0.0;
        for j in (i + 1)..d {
            let a = 0.5 * (x[i * d + j] + x[j * d + i].conj());
            x[i * d + j] = a;
            x[j * d + i] = a.conj();
        }
    }
}

/// Fixed-step RK4 integration of the Lindblad equation on `grid`, returning
/// `rho` at the snapshot steps for `stride`.
pub fn lindblad_evolve(
    rho0: &DensityMatrix,
    h: &Operator,
    ls: &[Operator],
    grid: &TimeGrid,
    stride: usize,
) -> Result<Vec<DensityMatrix>> {
    let d = h.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.dim() });
    }
    rho0.validate()?;
    let mut lv = Lindbladian::new(h, ls)?;
    let dt = grid.dt();
    let steps = snapshot_steps(grid.n_steps(), stride);
    let mut rho = rho0.data().to_vec();
    let n = d * d;
    let (mut k1, mut k2, mut k3, mut k4, mut y) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let mut out = Vec::with_capacity(steps.len());
    let mut next = 0;
    for k in 0..=grid.n_steps() {
        if steps[next] == k {
            out.push(DensityMatrix::from_data(d, rho.clone())?);
            next += 1;
            if next == steps.len() {
                break;
            }
        }
        lv.eval(&rho, &mut k1);
        y.iter_mut().zip(rho.iter().zip(&k1)).for_each(|(y, (r, a))| *y = r + 0.5 * dt * a);
        lv.eval(&y, &mut k2);
        y.iter_mut().zip(rho.iter().zip(&k2)).for_each(|(y, (r, a))| *y = r + 0.5 * dt * a);
        lv.eval(&y, &mut k3);
        y.iter_mut().zip(rho.iter().zip(&k3)).for_each(|(y, (r, a))| *y = r + dt * a);
        lv.eval(&y, &mut k4);
        for i in 0..n {
            rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        hermitize_slice(d, &mut rho);
    }
    Ok(out)
}

/// Environment mode attached to a system through `g (L b^dagger + L^dagger b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec {
    pub omega: f64,
    pub g: f64,
    pub truncation: usize,
}

impl ModeSpec {
    /// The mode whose vacuum fluctuations give the single-mode kernel
    /// `g2 exp(-i omega (t - s))`.
    pub fn for_single_mode(kernel: &CorrelationKernel, truncation: usize) -> Result<Self> {
        match *kernel {
            CorrelationKernel::SingleMode { omega, g2 } => Ok(Self { omega, g: g2.sqrt(), truncation }),
            ref k => Err(Error::UnsupportedKernel(format!("a single environment mode cannot produce the {} kernel", k.name()))),
        }
    }
}

/// `H_sys x 1 + Omega 1 x b^dagger b + g (L x b^dagger + L^dagger x b)`.
pub fn joint_hamiltonian(h_sys: &Operator, l: &Operator, mode: &ModeSpec) -> Result<Operator> {
    if h_sys.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: h_sys.dim(), found: l.dim() });
    }
    if mode.truncation < 2 {
        return Err(Error::InvalidParameter("mode truncation must be at least 2".into()));
    }
    let t = mode.truncation;
    let b = annihilation(t);
    let id_s = Operator::identity(h_sys.dim());
    let h = &h_sys.kron(&Operator::identity(t)) + &(&id_s.kron(&number(t)) * mode.omega);
    let coupling = &l.kron(&b.dagger()) + &l.dagger().kron(&b);
    Ok(&h + &(&coupling * mode.g))
}

/// Population of the top level of the second factor.
fn top_level_population(psi: &[C64], t: usize) -> f64 {
    psi.iter().skip(t - 1).step_by(t).map(|z| z.norm_sqr()).sum()
}

fn check_top_level(rho_mode: &DensityMatrix) -> Result<()> {
    let t = rho_mode.dim();
    let p = rho_mode.get(t - 1, t - 1).re;
    if p > TRUNCATION_TOLERANCE {
        return Err(Error::TruncationTooSmall { population: p });
    }
    Ok(())
}

/// Exact unitary evolution of system plus one environment mode by
/// diagonalising the joint Hamiltonian. Returns joint states at the snapshot
/// steps; the top mode level is checked at each of them.
pub fn joint_unitary_evolve(
    psi0_joint: &StateVector,
    h_sys: &Operator,
    l: &Operator,
    mode: &ModeSpec,
    grid: &TimeGrid,
    stride: usize,
) -> Result<Vec<StateVector>> {
    let h = joint_hamiltonian(h_sys, l, mode)?;
    let d = h.dim();
    if psi0_joint.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi0_joint.dim() });
    }
    let (vals, vecs) = linalg::hermitian_eigen(d, h.data());
    // coefficients in the eigenbasis: c = V^dagger psi0
    let psi0 = psi0_joint.amplitudes();
    let coeff: Vec<C64> = (0..d).map(|n| (0..d).map(|i| vecs[i * d + n].conj() * psi0[i]).sum()).collect();
    let mut out = Vec::new();
    for k in snapshot_steps(grid.n_steps(), stride) {
        let t = grid.time(k);
        let phased: Vec<C64> = coeff.iter().zip(&vals).map(|(c, e)| c * C64::new(0.0, -e * t).exp()).collect();
        let amps: Vec<C64> = (0..d).map(|i| (0..d).map(|n| vecs[i * d + n] * phased[n]).sum()).collect();
        let top = top_level_population(&amps, mode.truncation);
        if top > TRUNCATION_TOLERANCE {
            return Err(Error::TruncationTooSmall { population: top });
        }
        out.push(StateVector::new(amps)?);
    }
    Ok(out)
}

/// Reduced system states of a joint series.
pub fn reduce_to_system(states: &[StateVector], dims: (usize, usize)) -> Result<Vec<DensityMatrix>> {
    states.iter().map(|s| s.projector().partial_trace(dims, Keep::First)).collect()
}

/// System-reduced Lindblad evolution of system plus a damped pseudomode that
/// reproduces the zero-temperature exponential kernel exactly. `l` is the
/// full system coupling (including `lambda`); the mode couples with
/// `sqrt(weight)` and decays through `sqrt(2 gamma) b`.
pub fn pseudomode_evolve(
    rho0_sys: &DensityMatrix,
    h_sys: &Operator,
    l: &Operator,
    kernel: &CorrelationKernel,
    truncation: usize,
    grid: &TimeGrid,
    stride: usize,
) -> Result<Vec<DensityMatrix>> {
    let CorrelationKernel::Exponential { gamma, omega, weight } = *kernel else {
        return Err(Error::UnsupportedKernel(format!("pseudomode needs the exponential kernel, got {}", kernel.name())));
    };
    let mode = ModeSpec { omega, g: weight.sqrt(), truncation };
    let h = joint_hamiltonian(h_sys, l, &mode)?;
    let ds = h_sys.dim();
    let damping = &Operator::identity(ds).kron(&annihilation(truncation)) * (2.0 * gamma).sqrt();
    let rho0 = rho0_sys.tensor(&DensityMatrix::from_outer(StateVector::basis(truncation, 0).amplitudes()));
    let joint = lindblad_evolve(&rho0, &h, &[damping], grid, stride)?;
    joint
        .iter()
        .map(|rho| {
            check_top_level(&rho.partial_trace((ds, truncation), Keep::Second)?)?;
            rho.partial_trace((ds, truncation), Keep::First)
        })
        .collect()
}

/// `B(t) = int_0^t int_0^s alpha(s, u) du ds` for the closed-form kernels.
pub fn double_integral(kernel: &CorrelationKernel, t: f64) -> Result<C64> {
    match *kernel {
        CorrelationKernel::Delta => Ok(C64::new(0.5 * t, 0.0)),
        CorrelationKernel::Exponential { gamma, omega, weight } => {
            let k = C64::new(gamma, omega);
            Ok(weight / k * (t - (1.0 - (-k * t).exp()) / k))
        }
        CorrelationKernel::SingleMode { omega, g2 } => {
            if omega == 0.0 {
                Ok(C64::new(0.5 * g2 * t * t, 0.0))
            } else {
                let k = C64::new(0.0, omega);
                Ok(g2 / k * (t - (1.0 - (-k * t).exp()) / k))
            }
        }
        CorrelationKernel::Sampled { .. } => Err(Error::UnsupportedKernel("no closed form for a sampled kernel".into())),
    }
}

/// Exact reduced state of a spin with `H = omega/2 sigma_z` and coupling
/// `lambda sigma_z`: populations are frozen and
/// `rho_updown(t) = rho_updown(0) e^{-i omega t} e^{-4 lambda^2 Re B(t)}`.
pub fn dephasing_closed_form(
    rho0: &DensityMatrix,
    omega: f64,
    lambda: f64,
    kernel: &CorrelationKernel,
    t: f64,
) -> Result<DensityMatrix> {
    if rho0.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho0.dim() });
    }
    let b = double_integral(kernel, t)?;
    let c = rho0.get(0, 1) * C64::new(-4.0 * lambda * lambda * b.re, -omega * t).exp();
    DensityMatrix::from_data(2, vec![rho0.get(0, 0), c, c.conj(), rho0.get(1, 1)])
}

/// Joint spin-oscillator Hamiltonian of the cut model,
/// `omega1/2 sigma_z + omega2 b^dagger b + kappa (sigma_- b^dagger + sigma_+ b)`,
/// and its Lindblad operator `lambda sigma_-`.
pub fn cut_joint_model(params: &CutParams, truncation: usize) -> Result<(Operator, Operator)> {
    let h_spin = &sigma_z() * (0.5 * params.omega1);
    let mode = ModeSpec { omega: params.omega2, g: params.kappa, truncation };
    let h = joint_hamiltonian(&h_spin, &sigma_minus(), &mode)?;
    let l = &sigma_minus().kron(&Operator::identity(truncation)) * params.lambda;
    Ok((h, l))
}

#[derive(Clone, Debug)]
pub struct CutReference {
    /// Markov QSD ensemble on spin x oscillator, reduced to the spin.
    pub side_a: EnsembleResult,
    /// Joint Lindblad evolution, reduced to the spin.
    pub side_b: Vec<DensityMatrix>,
}

/// Both descriptions of the cut model with the oscillator on the system side.
#[allow(clippy::too_many_arguments)]
pub fn cut_reference(
    params: &CutParams,
    psi0_spin: &StateVector,
    truncation: usize,
    grid: &TimeGrid,
    stride: usize,
    n_paths: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<CutReference> {
    if psi0_spin.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: psi0_spin.dim() });
    }
    let (h, l) = cut_joint_model(params, truncation)?;
    let psi0 = psi0_spin.normalize()?.tensor(&StateVector::basis(truncation, 0));
    let joint = lindblad_evolve(&psi0.projector(), &h, std::slice::from_ref(&l), grid, stride)?;
    let mut side_b = Vec::with_capacity(joint.len());
    for rho in &joint {
        check_top_level(&rho.partial_trace((2, truncation), Keep::Second)?)?;
        side_b.push(rho.partial_trace((2, truncation), Keep::First)?);
    }
    let model = MarkovQsdModel::new(h, l, psi0)?;
    let mut cfg = EnsembleConfig::new(n_paths, grid.t_end(), grid.dt(), seed, Estimator::NormalizedNonlinear)
        .stride(stride)
        .reduce((2, truncation), Keep::First)
        .observe("sz", sigma_z().kron(&Operator::identity(truncation)));
    cfg.threads = threads;
    let side_a = run_ensemble(&model, &cfg)?;
    Ok(CutReference { side_a, side_b })
}
