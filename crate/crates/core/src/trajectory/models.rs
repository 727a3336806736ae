//! Ready-made unravellings for the ensemble driver. Each model owns its
//! operators, initial state and noise description; `prepare` builds the
//! samplers and steppers for a grid once, and the returned runner integrates
//! individual paths from their counter-based random streams.

use crate::ensemble::{path_failed, Estimator, PathRunner, Unravelling};
use crate::hilbert::{Operator, StateVector};
use crate::noise::{stream_rng, CorrelationKernel, Sampler, SamplerKind, TimeGrid};
use crate::trajectory::{
    check_dim, CutParams, DissipativeStepper, FCoefficient, LinearStepper, MarkovQsdStepper, MeasurementStepper,
    MemoryAccumulator, OAnsatz, RiccatiParams, Scratch, StepScheme, TwoChannelCutStepper,
};
use crate::{Error, Result, C64};

fn unit(psi0: &StateVector) -> Result<Vec<C64>> {
    Ok(psi0.normalize()?.into_amplitudes())
}

fn draw(sampler: &Sampler, seed: u64, channel: u64, path: u64) -> Vec<C64> {
    let mut rng = stream_rng(seed, channel, path);
    let mut z = Vec::with_capacity(sampler.len());
    sampler.sample_into(&mut rng, &mut z);
    z
}

/// Endpoint noise values for step `k`: white noise is held constant over the
/// step, colored noise is taken at both ends.
#[inline]
fn endpoints(z: &[C64], k: usize, white: bool) -> (C64, C64) {
    if white {
        (z[k], z[k])
    } else {
        (z[k], z[k + 1])
    }
}

/// Nonlinear Markov QSD with white noise.
#[derive(Clone, Debug)]
pub struct MarkovQsdModel {
    pub h: Operator,
    pub l: Operator,
    pub psi0: StateVector,
    pub scheme: StepScheme,
}

impl MarkovQsdModel {
    pub fn new(h: Operator, l: Operator, psi0: StateVector) -> Result<Self> {
        check_dim(h.dim(), l.dim())?;
        check_dim(h.dim(), psi0.dim())?;
        Ok(Self { h, l, psi0, scheme: StepScheme::default() })
    }

    pub fn with_scheme(mut self, scheme: StepScheme) -> Self {
        self.scheme = scheme;
        self
    }
}

struct MarkovRunner {
    stepper: MarkovQsdStepper,
    sampler: Sampler,
    psi0: Vec<C64>,
    grid: TimeGrid,
    scheme: StepScheme,
}

impl Unravelling for MarkovQsdModel {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn estimator(&self) -> Estimator {
        Estimator::NormalizedNonlinear
    }

    fn prepare<'a>(&'a self, grid: &TimeGrid) -> Result<Box<dyn PathRunner + 'a>> {
        Ok(Box::new(MarkovRunner {
            stepper: MarkovQsdStepper::new(&self.h, &self.l)?,
            sampler: Sampler::new(&CorrelationKernel::Delta, grid, SamplerKind::Auto)?,
            psi0: unit(&self.psi0)?,
            grid: *grid,
            scheme: self.scheme,
        }))
    }
}

impl PathRunner for MarkovRunner {
    fn run(&self, seed: u64, path: u64, visit: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
        let z = draw(&self.sampler, seed, 0, path);
        let dt = self.grid.dt();
        let mut psi = self.psi0.clone();
        let mut ws = Scratch::new(psi.len());
        visit(0, &psi);
        for k in 0..self.grid.n_steps() {
            self.stepper.step(&mut psi, z[k] * dt, dt, self.scheme, &mut ws).map_err(|e| path_failed(path, k + 1, e))?;
            visit(k + 1, &psi);
        }
        Ok(())
    }
}

/// Nonlinear non-Markovian QSD with `L = lambda M`, `M` Hermitian and
/// commuting with `H`.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    pub h: Operator,
    pub m: Operator,
    pub lambda: f64,
    pub kernel: CorrelationKernel,
    pub psi0: StateVector,
    pub sampler: SamplerKind,
    pub scheme: StepScheme,
}

impl MeasurementModel {
    pub fn new(h: Operator, m: Operator, lambda: f64, kernel: CorrelationKernel, psi0: StateVector) -> Result<Self> {
        if matches!(kernel, CorrelationKernel::Delta) {
            return Err(Error::UnsupportedKernel("use MarkovQsdModel for white noise".into()));
        }
        check_dim(h.dim(), psi0.dim())?;
        MeasurementStepper::new(&h, &m, lambda)?;
        Ok(Self { h, m, lambda, kernel, psi0, sampler: SamplerKind::Auto, scheme: StepScheme::default() })
    }

    pub fn with_sampler(mut self, kind: SamplerKind) -> Self {
        self.sampler = kind;
        self
    }

    pub fn with_scheme(mut self, scheme: StepScheme) -> Self {
        self.scheme = scheme;
        self
    }
}

struct MeasurementRunner<'a> {
    model: &'a MeasurementModel,
    stepper: MeasurementStepper,
    sampler: Sampler,
    psi0: Vec<C64>,
    grid: TimeGrid,
}

impl Unravelling for MeasurementModel {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn estimator(&self) -> Estimator {
        Estimator::NormalizedNonlinear
    }

    fn prepare<'a>(&'a self, grid: &TimeGrid) -> Result<Box<dyn PathRunner + 'a>> {
        let stepper = MeasurementStepper::new(&self.h, &self.m, self.lambda)?;
        let psi0 = unit(&self.psi0)?;
        // fail early on kernels the accumulator cannot handle
        MemoryAccumulator::new(&self.kernel, grid, stepper.integrand(&psi0))?;
        Ok(Box::new(MeasurementRunner {
            model: self,
            stepper,
            sampler: Sampler::new(&self.kernel, grid, self.sampler)?,
            psi0,
            grid: *grid,
        }))
    }
}

impl PathRunner for MeasurementRunner<'_> {
    fn run(&self, seed: u64, path: u64, visit: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
        let z = draw(&self.sampler, seed, 0, path);
        let dt = self.grid.dt();
        let mut psi = self.psi0.clone();
        let mut acc = MemoryAccumulator::new(&self.model.kernel, &self.grid, self.stepper.integrand(&psi))?;
        let mut ws = Scratch::new(psi.len());
        visit(0, &psi);
        for k in 0..self.grid.n_steps() {
            let (z0, z1) = endpoints(&z, k, false);
            self.stepper
                .step(&mut psi, z0, z1, &mut acc, dt, self.model.scheme, &mut ws)
                .map_err(|e| path_failed(path, k + 1, e))?;
            visit(k + 1, &psi);
        }
        Ok(())
    }
}

/// What a dissipative trajectory does when `F(t)` passes a pole.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DarkStatePolicy {
    /// Keep integrating the exact equation through the pole.
    #[default]
    Exact,
    /// Once `lambda |F| dt >= 1`, project onto the dark subspace and hold
    /// the trajectory there for the rest of the run.
    FreezeAtPole,
}

/// Nonlinear non-Markovian QSD with `L = lambda A`, `[H, A] = -omega A`.
#[derive(Clone, Debug)]
pub struct DissipativeModel {
    pub h: Operator,
    pub lowering: Operator,
    pub lambda: f64,
    pub kernel: CorrelationKernel,
    pub psi0: StateVector,
    pub sampler: SamplerKind,
    pub scheme: StepScheme,
    pub dark_state: DarkStatePolicy,
}

impl DissipativeModel {
    pub fn new(
        h: Operator,
        lowering: Operator,
        lambda: f64,
        kernel: CorrelationKernel,
        psi0: StateVector,
    ) -> Result<Self> {
        check_dim(h.dim(), psi0.dim())?;
        let stepper = DissipativeStepper::new(&h, &lowering, lambda, 1.0)?;
        RiccatiParams::for_kernel(&kernel, stepper.omega(), lambda)?;
        Ok(Self {
            h,
            lowering,
            lambda,
            kernel,
            psi0,
            sampler: SamplerKind::Auto,
            scheme: StepScheme::default(),
            dark_state: DarkStatePolicy::default(),
        })
    }

    pub fn with_dark_state(mut self, policy: DarkStatePolicy) -> Self {
        self.dark_state = policy;
        self
    }

    pub fn with_sampler(mut self, kind: SamplerKind) -> Self {
        self.sampler = kind;
        self
    }

    pub fn with_scheme(mut self, scheme: StepScheme) -> Self {
        self.scheme = scheme;
        self
    }
}

struct DissipativeRunner<'a> {
    model: &'a DissipativeModel,
    stepper: DissipativeStepper,
    riccati: RiccatiParams,
    sampler: Sampler,
    psi0: Vec<C64>,
    grid: TimeGrid,
}

impl Unravelling for DissipativeModel {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn estimator(&self) -> Estimator {
        Estimator::NormalizedNonlinear
    }

    fn prepare<'a>(&'a self, grid: &TimeGrid) -> Result<Box<dyn PathRunner + 'a>> {
        let stepper = DissipativeStepper::new(&self.h, &self.lowering, self.lambda, grid.dt())?;
        let riccati = RiccatiParams::for_kernel(&self.kernel, stepper.omega(), self.lambda)?;
        let psi0 = unit(&self.psi0)?;
        MemoryAccumulator::new(&self.kernel, grid, stepper.integrand(&psi0))?;
        Ok(Box::new(DissipativeRunner {
            model: self,
            stepper,
            riccati,
            sampler: Sampler::new(&self.kernel, grid, self.sampler)?,
            psi0,
            grid: *grid,
        }))
    }
}

impl PathRunner for DissipativeRunner<'_> {
    fn run(&self, seed: u64, path: u64, visit: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
        let z = draw(&self.sampler, seed, 0, path);
        let dt = self.grid.dt();
        let mut stepper = self.stepper.clone();
        let mut f = FCoefficient::new(&self.riccati, dt);
        let mut psi = self.psi0.clone();
        let mut acc = MemoryAccumulator::new(&self.model.kernel, &self.grid, stepper.integrand(&psi))?;
        let mut ws = Scratch::new(psi.len());
        visit(0, &psi);
        let freeze = self.model.dark_state == DarkStatePolicy::FreezeAtPole;
        let mut frozen = false;
        for k in 0..self.grid.n_steps() {
            if !frozen {
                let (z0, z1) = endpoints(&z, k, false);
                stepper
                    .step(&mut psi, z0, z1, &mut f, &mut acc, dt, self.model.scheme, &mut ws)
                    .map_err(|e| path_failed(path, k + 1, e))?;
                if freeze && f.coupling() * f.value().norm() * dt >= 1.0 {
                    stepper.project_dark(&mut psi).map_err(|e| path_failed(path, k + 1, e))?;
                    frozen = true;
                }
            }
            visit(k + 1, &psi);
        }
        Ok(())
    }
}

/// Linear non-Markovian QSD; averaged with the raw estimator.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub h: Operator,
    pub ansatz: OAnsatz,
    pub lambda: f64,
    pub kernel: CorrelationKernel,
    pub psi0: StateVector,
    pub sampler: SamplerKind,
    pub scheme: StepScheme,
}

impl LinearModel {
    pub fn new(h: Operator, ansatz: OAnsatz, lambda: f64, kernel: CorrelationKernel, psi0: StateVector) -> Result<Self> {
        check_dim(h.dim(), psi0.dim())?;
        LinearStepper::new(&h, &ansatz, lambda, &kernel, 1.0)?;
        Ok(Self { h, ansatz, lambda, kernel, psi0, sampler: SamplerKind::Auto, scheme: StepScheme::default() })
    }

    pub fn with_sampler(mut self, kind: SamplerKind) -> Self {
        self.sampler = kind;
        self
    }

    pub fn with_scheme(mut self, scheme: StepScheme) -> Self {
        self.scheme = scheme;
        self
    }
}

struct LinearRunner {
    stepper: LinearStepper,
    sampler: Sampler,
    white: bool,
    psi0: Vec<C64>,
    grid: TimeGrid,
    scheme: StepScheme,
}

impl Unravelling for LinearModel {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn estimator(&self) -> Estimator {
        Estimator::RawLinear
    }

    fn prepare<'a>(&'a self, grid: &TimeGrid) -> Result<Box<dyn PathRunner + 'a>> {
        Ok(Box::new(LinearRunner {
            stepper: LinearStepper::new(&self.h, &self.ansatz, self.lambda, &self.kernel, grid.dt())?,
            sampler: Sampler::new(&self.kernel, grid, self.sampler)?,
            white: matches!(self.kernel, CorrelationKernel::Delta),
            psi0: unit(&self.psi0)?,
            grid: *grid,
            scheme: self.scheme,
        }))
    }
}

impl PathRunner for LinearRunner {
    fn run(&self, seed: u64, path: u64, visit: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
        let z = draw(&self.sampler, seed, 0, path);
        let dt = self.grid.dt();
        let mut stepper = self.stepper.clone();
        let mut f = stepper.f_coefficient(dt);
        let mut psi = self.psi0.clone();
        let mut ws = Scratch::new(psi.len());
        visit(0, &psi);
        for k in 0..self.grid.n_steps() {
            let (z0, z1) = endpoints(&z, k, self.white);
            stepper
                .step(&mut psi, self.grid.time(k), z0, z1, f.as_mut(), dt, self.scheme, &mut ws)
                .map_err(|e| path_failed(path, k + 1, e))?;
            visit(k + 1, &psi);
        }
        Ok(())
    }
}

/// Spin-only linear equation with a white channel (stream 0) and a
/// single-mode channel (stream 1) replacing the damped oscillator.
#[derive(Clone, Debug)]
pub struct TwoChannelCutModel {
    pub params: CutParams,
    pub psi0: StateVector,
    pub scheme: StepScheme,
}

impl TwoChannelCutModel {
    pub fn new(params: CutParams, psi0: StateVector) -> Result<Self> {
        check_dim(2, psi0.dim())?;
        Ok(Self { params, psi0, scheme: StepScheme::default() })
    }

    pub fn with_scheme(mut self, scheme: StepScheme) -> Self {
        self.scheme = scheme;
        self
    }
}

struct CutRunner {
    stepper: TwoChannelCutStepper,
    white: Sampler,
    mode: Sampler,
    psi0: Vec<C64>,
    grid: TimeGrid,
    scheme: StepScheme,
}

impl Unravelling for TwoChannelCutModel {
    fn dim(&self) -> usize {
        2
    }

    fn estimator(&self) -> Estimator {
        Estimator::RawLinear
    }

    fn prepare<'a>(&'a self, grid: &TimeGrid) -> Result<Box<dyn PathRunner + 'a>> {
        let mode = CorrelationKernel::single_mode(self.params.omega2, 1.0)?;
        Ok(Box::new(CutRunner {
            stepper: TwoChannelCutStepper::new(self.params, grid.dt())?,
            white: Sampler::new(&CorrelationKernel::Delta, grid, SamplerKind::Auto)?,
            mode: Sampler::new(&mode, grid, SamplerKind::Auto)?,
            psi0: unit(&self.psi0)?,
            grid: *grid,
            scheme: self.scheme,
        }))
    }
}

impl PathRunner for CutRunner {
    fn run(&self, seed: u64, path: u64, visit: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
        let xi = draw(&self.white, seed, 0, path);
        let z = draw(&self.mode, seed, 1, path);
        let dt = self.grid.dt();
        let mut f2 = self.stepper.f_coefficient(dt);
        let mut phi = self.psi0.clone();
        visit(0, &phi);
        for k in 0..self.grid.n_steps() {
            self.stepper
                .step(&mut phi, xi[k], z[k], z[k + 1], &mut f2, dt, self.scheme)
                .map_err(|e| path_failed(path, k + 1, e))?;
            visit(k + 1, &phi);
        }
        Ok(())
    }
}
