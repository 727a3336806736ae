//! Monte Carlo reconstruction of `rho_t` from trajectories.
//!
//! Paths are processed in blocks of [`BLOCK`] consecutive indices; each block
//! is summed sequentially, blocks are combined by a pairwise tree inside
//! groups of [`GROUP`] blocks, and groups are folded in index order. The
//! grouping does not depend on the worker count, so results are bit-identical
//! for any number of threads.

mod export;
mod stats;

pub use export::{DensitySeries, DensitySnapshot, ObservableRow, ObservableTable, OBSERVABLE_HEADER};
pub use stats::{standard_error, standard_error_complex, Welford};

use rayon::prelude::*;

use crate::hilbert::{DensityMatrix, Keep, Operator, StateVector};
use crate::noise::TimeGrid;
use crate::{Error, Result, C64};

pub const BLOCK: u64 = 64;
pub const GROUP: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Plain mean of unnormalised projectors of a linear unravelling.
    RawLinear,
    /// Plain mean of normalised projectors of a nonlinear unravelling.
    NormalizedNonlinear,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RawLinear => "raw_linear",
            Self::NormalizedNonlinear => "normalized_nonlinear",
        }
    }
}

/// A stochastic model that can be sampled path by path.
pub trait Unravelling: Sync {
    fn dim(&self) -> usize;
    fn estimator(&self) -> Estimator;
    /// Precomputes everything that depends only on the grid (noise factors,
    /// propagators).
    fn prepare<'a>(&'a self, grid: &TimeGrid) -> Result<Box<dyn PathRunner + 'a>>;
}

pub trait PathRunner: Sync {
    /// Integrates path `path` under `seed`, calling `visit(k, psi_k)` for
    /// every grid index `k = 0..=n_steps`. Failures are reported as
    /// [`Error::PathFailed`].
    fn run(&self, seed: u64, path: u64, visit: &mut dyn FnMut(usize, &[C64])) -> Result<()>;
}

/// Wraps a stepper error with its path and step.
pub fn path_failed(path: u64, step: usize, source: Error) -> Error {
    Error::PathFailed { path, step, source: Box::new(source) }
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub op: Operator,
}

/// Density matrices are recorded for a subsystem of a bipartite state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduction {
    pub dims: (usize, usize),
    pub keep: Keep,
}

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub n_paths: u64,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub estimator: Estimator,
    pub observables: Vec<Observable>,
    pub snapshot_stride: usize,
    /// Worker count; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub reduction: Option<Reduction>,
    /// Track per-path min/max of every observable for `t >= monitor_from`.
    pub monitor_from: Option<f64>,
}

impl EnsembleConfig {
    pub fn new(n_paths: u64, t_end: f64, dt: f64, seed: u64, estimator: Estimator) -> Self {
        Self {
            n_paths,
            t_end,
            dt,
            seed,
            estimator,
            observables: Vec::new(),
            snapshot_stride: 10,
            threads: None,
            reduction: None,
            monitor_from: None,
        }
    }

    pub fn observe(mut self, name: &str, op: Operator) -> Self {
        self.observables.push(Observable { name: name.to_string(), op });
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn reduce(mut self, dims: (usize, usize), keep: Keep) -> Self {
        self.reduction = Some(Reduction { dims, keep });
        self
    }

    pub fn monitor_from(mut self, t: f64) -> Self {
        self.monitor_from = Some(t);
        self
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_end, self.dt)
    }

    /// Grid indices at which snapshots are taken: every `stride` steps plus the
    /// final step.
    pub fn snapshot_steps(&self, grid: &TimeGrid) -> Vec<usize> {
        snapshot_steps(grid.n_steps(), self.snapshot_stride)
    }
}

pub fn snapshot_steps(n_steps: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut v: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if *v.last().unwrap() != n_steps {
        v.push(n_steps);
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesStats {
    pub name: String,
    pub mean: Vec<C64>,
    pub se: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub steps: Vec<usize>,
    pub n_paths: u64,
    pub estimator: Estimator,
    pub mean_density: Vec<DensityMatrix>,
    /// Per-element standard error of `mean_density`, row-major per snapshot.
    pub density_se: Vec<Vec<f64>>,
    pub observables: Vec<SeriesStats>,
    /// `M[||psi||^2]`; identically one for nonlinear unravellings.
    pub norm_sqr: SeriesStats,
    /// Normalised expectation `<O>` at the final time, `[observable][path]`.
    pub path_final: Vec<Vec<C64>>,
    /// Per-path extrema of `Re <O>` over `t >= monitor_from`, `[observable][path]`.
    pub path_min: Vec<Vec<f64>>,
    pub path_max: Vec<Vec<f64>>,
}

impl EnsembleResult {
    pub fn observable(&self, name: &str) -> Option<&SeriesStats> {
        self.observables.iter().find(|s| s.name == name)
    }

    pub fn observable_index(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|s| s.name == name)
    }

    /// `3 * (sqrt(d)/2) * sqrt(sum_ij se_ij^2)`: a trace-distance scale
    /// matching three standard errors of the estimated matrix.
    pub fn trace_distance_tolerance(&self, snapshot: usize, n_se: f64) -> f64 {
        let d = self.mean_density[snapshot].dim() as f64;
        let s2: f64 = self.density_se[snapshot].iter().map(|s| s * s).sum();
        n_se * 0.5 * d.sqrt() * s2.sqrt()
    }
}

#[derive(Clone, Debug)]
struct Partial {
    n: u64,
    density: Vec<Welford>,
    obs: Vec<Welford>,
    norm: Vec<Welford>,
    finals: Vec<Vec<C64>>,
    mins: Vec<Vec<f64>>,
    maxs: Vec<Vec<f64>>,
}

impl Partial {
    fn empty(n_snap: usize, d2: usize, n_obs: usize) -> Self {
        Self {
            n: 0,
            density: vec![Welford::default(); n_snap * d2],
            obs: vec![Welford::default(); n_snap * n_obs],
            norm: vec![Welford::default(); n_snap],
            finals: vec![Vec::new(); n_obs],
            mins: vec![Vec::new(); n_obs],
            maxs: vec![Vec::new(); n_obs],
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            a.merge(b);
        }
        for (a, b) in self.obs.iter_mut().zip(&other.obs) {
            a.merge(b);
        }
        for (a, b) in self.norm.iter_mut().zip(&other.norm) {
            a.merge(b);
        }
        for (a, b) in self.finals.iter_mut().zip(other.finals) {
            a.extend(b);
        }
        for (a, b) in self.mins.iter_mut().zip(other.mins) {
            a.extend(b);
        }
        for (a, b) in self.maxs.iter_mut().zip(other.maxs) {
            a.extend(b);
        }
        self.n += other.n;
        self
    }
}

fn tree_reduce(mut parts: Vec<Partial>) -> Option<Partial> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Writes the (possibly reduced) projector `|psi><psi|` into `out`.
fn projector_into(psi: &[C64], reduction: Option<Reduction>, out: &mut [C64]) {
    match reduction {
        None => {
            let d = psi.len();
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = psi[i] * psi[j].conj();
                }
            }
        }
        Some(Reduction { dims: (d1, d2), keep: Keep::First }) => {
            for i in 0..d1 {
                for j in 0..d1 {
                    out[i * d1 + j] = (0..d2).map(|k| psi[i * d2 + k] * psi[j * d2 + k].conj()).sum();
                }
            }
        }
        Some(Reduction { dims: (d1, d2), keep: Keep::Second }) => {
            for k in 0..d2 {
                for l in 0..d2 {
                    out[k * d2 + l] = (0..d1).map(|i| psi[i * d2 + k] * psi[i * d2 + l].conj()).sum();
                }
            }
        }
    }
}

struct Plan<'a> {
    cfg: &'a EnsembleConfig,
    runner: &'a dyn PathRunner,
    grid: TimeGrid,
    snapshot_of: Vec<Option<usize>>,
    n_snap: usize,
    d_rec: usize,
    monitor_from_step: Option<usize>,
}

impl Plan<'_> {
    fn run_block(&self, block: u64) -> Result<Partial> {
        let cfg = self.cfg;
        let n_obs = cfg.observables.len();
        let d2 = self.d_rec * self.d_rec;
        let mut part = Partial::empty(self.n_snap, d2, n_obs);
        let first = block * BLOCK;
        let last = (first + BLOCK).min(cfg.n_paths);
        let mut rho = vec![C64::new(0.0, 0.0); d2];
        let n_steps = self.grid.n_steps();
        for path in first..last {
            let count = part.n + 1;
            let mut lo = vec![f64::INFINITY; n_obs];
            let mut hi = vec![f64::NEG_INFINITY; n_obs];
            let mut fin = vec![C64::new(0.0, 0.0); n_obs];
            let mut visit = |k: usize, psi: &[C64]| {
                let monitored = self.monitor_from_step.is_some_and(|m| k >= m);
                if monitored || k == n_steps {
                    let n2 = crate::hilbert::norm_sqr(psi);
                    for (o, obs) in cfg.observables.iter().enumerate() {
                        let v = obs.op.sandwich(psi) / n2;
                        if monitored {
                            lo[o] = lo[o].min(v.re);
                            hi[o] = hi[o].max(v.re);
                        }
                        if k == n_steps {
                            fin[o] = v;
                        }
                    }
                }
                if let Some(s) = self.snapshot_of[k] {
                    projector_into(psi, cfg.reduction, &mut rho);
                    for (w, x) in part.density[s * d2..(s + 1) * d2].iter_mut().zip(&rho) {
                        w.push(count, *x);
                    }
                    for (o, obs) in cfg.observables.iter().enumerate() {
                        part.obs[s * n_obs + o].push(count, obs.op.sandwich(psi));
                    }
                    part.norm[s].push(count, C64::new(crate::hilbert::norm_sqr(psi), 0.0));
                }
            };
            self.runner.run(cfg.seed, path, &mut visit)?;
            part.n = count;
            for o in 0..n_obs {
                part.finals[o].push(fin[o]);
                part.mins[o].push(lo[o]);
                part.maxs[o].push(hi[o]);
            }
        }
        Ok(part)
    }
}

/// Runs `cfg.n_paths` trajectories of `model` and reduces them.
pub fn run_ensemble(model: &dyn Unravelling, cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    if cfg.n_paths == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if model.estimator() != cfg.estimator {
        return Err(Error::ModelEstimatorMismatch(format!(
            "model needs the {} estimator, config asks for {}",
            model.estimator().name(),
            cfg.estimator.name()
        )));
    }
    let dim = model.dim();
    for obs in &cfg.observables {
        if obs.op.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: obs.op.dim() });
        }
    }
    let d_rec = match cfg.reduction {
        None => dim,
        Some(Reduction { dims: (d1, d2), keep }) => {
            if d1 * d2 != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: d1 * d2 });
            }
            if keep == Keep::First {
                d1
            } else {
                d2
            }
        }
    };
    let grid = cfg.grid()?;
    let steps = cfg.snapshot_steps(&grid);
    let mut snapshot_of = vec![None; grid.len()];
    for (s, &k) in steps.iter().enumerate() {
        snapshot_of[k] = Some(s);
    }
    let runner = model.prepare(&grid)?;
    let plan = Plan {
        cfg,
        runner: runner.as_ref(),
        grid,
        snapshot_of,
        n_snap: steps.len(),
        d_rec,
        monitor_from_step: cfg.monitor_from.map(|t| ((t / grid.dt()) - 1e-9).ceil().max(0.0) as usize),
    };

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            b = b.num_threads(n.max(1));
        }
        b.build().map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?
    };
    let n_blocks = cfg.n_paths.div_ceil(BLOCK);
    let mut total: Option<Partial> = None;
    let mut g0 = 0;
    while g0 < n_blocks {
        let g1 = (g0 + GROUP).min(n_blocks);
        let parts: Vec<Result<Partial>> = pool.install(|| (g0..g1).into_par_iter().map(|b| plan.run_block(b)).collect());
        let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
        let group = tree_reduce(parts).expect("non-empty group");
        total = Some(match total {
            None => group,
            Some(t) => t.merge(group),
        });
        g0 = g1;
    }
    let total = total.expect("at least one block");
    Ok(finish(total, cfg, &grid, &steps, d_rec))
}

fn finish(p: Partial, cfg: &EnsembleConfig, grid: &TimeGrid, steps: &[usize], d: usize) -> EnsembleResult {
    let d2 = d * d;
    let n_obs = cfg.observables.len();
    let n_snap = steps.len();
    let mut mean_density = Vec::with_capacity(n_snap);
    let mut density_se = Vec::with_capacity(n_snap);
    for s in 0..n_snap {
        let cells = &p.density[s * d2..(s + 1) * d2];
        let mut rho = DensityMatrix::from_data(d, cells.iter().map(|w| w.mean).collect()).expect("square cell block");
        rho.hermitize();
        mean_density.push(rho);
        density_se.push(cells.iter().map(Welford::standard_error).collect());
    }
    let observables = cfg
        .observables
        .iter()
        .enumerate()
        .map(|(o, obs)| SeriesStats {
            name: obs.name.clone(),
            mean: (0..n_snap).map(|s| p.obs[s * n_obs + o].mean).collect(),
            se: (0..n_snap).map(|s| p.obs[s * n_obs + o].standard_error()).collect(),
        })
        .collect();
    let norm_sqr = SeriesStats {
        name: "norm_sqr".into(),
        mean: p.norm.iter().map(|w| w.mean).collect(),
        se: p.norm.iter().map(Welford::standard_error).collect(),
    };
    EnsembleResult {
        times: steps.iter().map(|&k| grid.time(k)).collect(),
        steps: steps.to_vec(),
        n_paths: p.n,
        estimator: cfg.estimator,
        mean_density,
        density_se,
        observables,
        norm_sqr,
        path_final: p.finals,
        path_min: p.mins,
        path_max: p.maxs,
    }
}

/// Elementwise mean of projectors over paths, `paths[path][snapshot]`.
/// The nonlinear estimator normalises each state first.
pub fn mean_density(paths: &[Vec<StateVector>], estimator: Estimator) -> Result<Vec<DensityMatrix>> {
    let first = paths.first().ok_or(Error::EmptyEnsemble)?;
    let n_snap = first.len();
    let d = first.first().map(|s| s.dim()).ok_or(Error::EmptyEnsemble)?;
    let mut out = vec![DensityMatrix::zeros(d); n_snap];
    for path in paths {
        if path.len() != n_snap {
            return Err(Error::DimensionMismatch { expected: n_snap, found: path.len() });
        }
        for (acc, psi) in out.iter_mut().zip(path) {
            if psi.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: psi.dim() });
            }
            let rho = match estimator {
                Estimator::RawLinear => DensityMatrix::from_outer(psi.amplitudes()),
                Estimator::NormalizedNonlinear => psi.normalize()?.projector(),
            };
            acc.add_assign(&rho);
        }
    }
    let inv = 1.0 / paths.len() as f64;
    for rho in &mut out {
        rho.scale(inv);
        rho.hermitize();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_pair_averages_to_half_identity() {
        let paths = vec![vec![StateVector::spin_up()], vec![StateVector::spin_down()]];
        let rho = mean_density(&paths, Estimator::NormalizedNonlinear).unwrap();
        assert!(rho[0].max_abs_diff(&DensityMatrix::maximally_mixed(2)) < 1e-15);
        assert_eq!(mean_density(&[], Estimator::RawLinear), Err(Error::EmptyEnsemble));
    }

    #[test]
    fn snapshot_steps_include_the_end() {
        assert_eq!(snapshot_steps(25, 10), vec![0, 10, 20, 25]);
        assert_eq!(snapshot_steps(20, 10), vec![0, 10, 20]);
    }

    #[test]
    fn reduced_projector_matches_partial_trace() {
        let a = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let b = StateVector::new(vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let mut psi = a.tensor(&b).into_amplitudes();
        psi[4] += C64::new(0.3, 0.0);
        let full = DensityMatrix::from_outer(&psi);
        for keep in [Keep::First, Keep::Second] {
            let want = full.partial_trace((2, 3), keep).unwrap();
            let mut out = vec![C64::new(0.0, 0.0); want.dim() * want.dim()];
            projector_into(&psi, Some(Reduction { dims: (2, 3), keep }), &mut out);
            let got = DensityMatrix::from_data(want.dim(), out).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-15);
        }
    }
}
