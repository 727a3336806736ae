//! The named experiments. Each returns its data files and a summary of the
//! declared checks; nothing here touches the filesystem.

use nmqsd_core::ensemble::{run_ensemble, DensitySeries, EnsembleConfig, EnsembleResult, Estimator, ObservableTable, Unravelling};
use nmqsd_core::hilbert::{
    annihilation, cat_state, number, q_function, sigma_minus, sigma_z, DensityMatrix, QGrid, StateVector,
};
use nmqsd_core::noise::{build_covariance, noise_statistics, CorrelationKernel, Sampler, SamplerKind, TimeGrid};
use nmqsd_core::oracle::{
    cut_reference, dephasing_closed_form, joint_unitary_evolve, lindblad_evolve, pseudomode_evolve, reduce_to_system,
    ModeSpec,
};
use nmqsd_core::trajectory::models::{DarkStatePolicy, DissipativeModel, MeasurementModel, TwoChannelCutModel};
use nmqsd_core::trajectory::{critical_time, CutParams};
use nmqsd_core::C64;

use crate::config::{steps_in, Absorption, Experiment, ExperimentConfig};
use crate::output::{moments_to_csv, purity_to_csv, Artifact, Check, Comparison, MomentRow, RunOutput, Summary};
use crate::CliError;

/// `|psi0> = 3|up> + 2|down>`, normalised.
pub fn spin_initial_state() -> StateVector {
    StateVector::from_real(&[3.0, 2.0]).expect("finite amplitudes").normalize().expect("non-zero")
}

/// Purity below which a series counts as decohered.
pub const DIP_PURITY: f64 = 0.7;
/// Purity above which a series counts as revived.
pub const REVIVAL_PURITY: f64 = 0.95;
/// Relative fraction of the Q maximum used for peak counting.
pub const Q_PEAK_FRACTION: f64 = 0.5;

/// Runs `cfg` with at most `threads` workers (`None`: all cores).
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<(ExperimentConfig, RunOutput), CliError> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if cfg.n_paths == 0 {
        return Ok((cfg, RunOutput { summary: None, artifacts: Vec::new() }));
    }
    let out = match cfg.experiment {
        Experiment::Fig1a => fig1a(&cfg, threads)?,
        Experiment::Fig1b => fig1b(&cfg, threads)?,
        Experiment::Fig2 => fig2(&mut cfg, threads)?,
        Experiment::Cut => cut(&cfg, threads)?,
        Experiment::MarkovLimit => markov_limit(&cfg, threads)?,
        Experiment::NoiseStats => noise_stats(&cfg)?,
    };
    Ok((cfg, out))
}

fn ensemble_config(cfg: &ExperimentConfig, estimator: Estimator, threads: Option<usize>) -> EnsembleConfig {
    let mut e = EnsembleConfig::new(cfg.n_paths, cfg.t_end.unwrap_or(0.0), cfg.dt, cfg.seed, estimator).stride(cfg.stride());
    e.threads = threads;
    e
}

fn table(res: &EnsembleResult, source: &str) -> String {
    ObservableTable::from_result(res).with_source(source).to_csv()
}

fn density(res: &EnsembleResult, source: &str) -> String {
    DensitySeries::from_result(res).with_source(source).to_json()
}

fn compare(res: &EnsembleResult, reference: &[DensityMatrix]) -> Result<Vec<Comparison>, CliError> {
    res.mean_density
        .iter()
        .zip(reference)
        .enumerate()
        .map(|(s, (rho, want))| {
            Ok(Comparison {
                t: res.times[s],
                trace_distance: rho.trace_distance(want)?,
                band_3se: res.trace_distance_tolerance(s, 3.0),
            })
        })
        .collect()
}

/// Largest `|estimate - reference| / se` over snapshots with a positive SE.
/// Snapshots without spread must agree to rounding, otherwise the result is
/// `f64::MAX`.
fn worst_in_se(mean: &[C64], se: &[f64], reference: &[f64]) -> f64 {
    mean.iter()
        .zip(se)
        .zip(reference)
        .map(|((m, &e), &r)| {
            let d = (m.re - r).abs();
            if e > 0.0 {
                d / e
            } else if d <= 1e-12 {
                0.0
            } else {
                f64::MAX
            }
        })
        .fold(0.0, f64::max)
}

fn fig1a(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput, CliError> {
    let psi0 = spin_initial_state();
    let h = &sigma_z() * (0.5 * cfg.omega);
    let kernel = CorrelationKernel::exponential(cfg.gamma, cfg.env_omega)?;
    let model = MeasurementModel::new(h, sigma_z(), cfg.lambda, kernel.clone(), psi0.clone())?;
    let res = run_ensemble(&model, &ensemble_config(cfg, Estimator::NormalizedNonlinear, threads).observe("sz", sigma_z()))?;

    let rho0 = psi0.projector();
    let oracle: Vec<DensityMatrix> = res
        .times
        .iter()
        .map(|&t| dephasing_closed_form(&rho0, cfg.omega, cfg.lambda, &kernel, t))
        .collect::<Result<_, _>>()?;

    let mut summary = Summary::new(cfg.experiment.name());
    let sz = res.observable("sz").expect("observed");
    let sz0 = rho0.expectation(&sigma_z())?.re;
    let worst = worst_in_se(&sz.mean, &sz.se, &vec![sz0; sz.mean.len()]);
    summary.metric("sz_initial", sz0);
    summary.check(Check::at_most("mean_sz_constant_3se", worst, 3.0, format!("max |M[<sz>] - {sz0:.6}| in SE units")));

    let n = res.n_paths as f64;
    let p_up = rho0.get(0, 0).re;
    let up = res.path_final[0].iter().filter(|v| v.re > 0.99).count() as f64;
    let down = res.path_final[0].iter().filter(|v| v.re < -0.99).count() as f64;
    let sigma = (n * p_up * (1.0 - p_up)).sqrt();
    summary.metric("up_fraction", up / n);
    summary.metric("down_fraction", down / n);
    summary.check(Check::at_most(
        "up_fraction_binomial_3sigma",
        (up - n * p_up).abs() / sigma,
        3.0,
        format!("{up} of {n} paths with <sz> > 0.99 at T, expected {:.1}", n * p_up),
    ));
    summary.check(Check::at_most(
        "down_fraction_binomial_3sigma",
        (down - n * (1.0 - p_up)).abs() / sigma,
        3.0,
        format!("{down} of {n} paths with <sz> < -0.99 at T, expected {:.1}", n * (1.0 - p_up)),
    ));
    summary.set_comparison(compare(&res, &oracle)?);

    let src = "oracle:dephasing_closed_form";
    Ok(RunOutput {
        summary: Some(summary),
        artifacts: vec![
            Artifact::new("ensemble.csv", table(&res, "ensemble:normalized_nonlinear")),
            Artifact::new("ensemble_density.json", density(&res, "ensemble:normalized_nonlinear")),
            Artifact::new("oracle.csv", ObservableTable::from_densities(src, &res.times, &oracle, &[("sz", &sigma_z())])?.to_csv()),
            Artifact::new("oracle_density.json", DensitySeries::from_densities(src, &res.times, &oracle).to_json()),
        ],
    })
}

fn fig1b(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput, CliError> {
    let psi0 = spin_initial_state();
    let h = &sigma_z() * (0.5 * cfg.omega);
    let kernel = CorrelationKernel::exponential(cfg.gamma, cfg.env_omega)?;
    let policy = match cfg.absorption {
        Absorption::Exact => DarkStatePolicy::Exact,
        Absorption::Freeze => DarkStatePolicy::FreezeAtPole,
    };
    let model = DissipativeModel::new(h.clone(), sigma_minus(), cfg.lambda, kernel.clone(), psi0.clone())?.with_dark_state(policy);
    let mut summary = Summary::new(cfg.experiment.name());
    let resonant = (cfg.omega - cfg.env_omega).abs() < 1e-12;
    let t_c = if resonant { critical_time(cfg.gamma, cfg.lambda).ok() } else { None };
    let mut ecfg = ensemble_config(cfg, Estimator::NormalizedNonlinear, threads).observe("sz", sigma_z());
    if let Some(t) = t_c {
        ecfg = ecfg.monitor_from(t);
    }
    let res = run_ensemble(&model, &ecfg)?;
    let grid = ecfg.grid()?;
    let oracle = pseudomode_evolve(&psi0.projector(), &h, &(&sigma_minus() * cfg.lambda), &kernel, cfg.truncation, &grid, cfg.stride())?;

    match t_c {
        Some(t) if t <= grid.t_end() => {
            summary.metric("critical_time", t);
            let n = res.n_paths as f64;
            let absorbed = res.path_max[0].iter().filter(|&&v| v < -0.99).count() as f64;
            let worst = res.path_max[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            summary.metric("absorbed_fraction", absorbed / n);
            summary.metric("max_sz_after_tc", worst);
            summary.check(Check::at_least(
                "all_absorbed_after_tc",
                absorbed / n,
                1.0,
                format!("fraction of paths with <sz> < -0.99 for all t > t_c = {t:.6}; largest <sz> after t_c is {worst:.6}"),
            ));
        }
        Some(t) => summary.warnings.push(format!("critical time {t} lies beyond T; absorption not checked")),
        None => summary.warnings.push("F(t) has no pole for these parameters; absorption not checked".into()),
    }
    let sz = res.observable("sz").expect("observed");
    let want: Vec<f64> = oracle.iter().map(|r| r.expectation(&sigma_z()).map(|z| z.re)).collect::<Result<_, _>>()?;
    summary.check(Check::at_most(
        "mean_sz_matches_pseudomode_3se",
        worst_in_se(&sz.mean, &sz.se, &want),
        3.0,
        "max |M[<sz>] - pseudomode <sz>| in SE units",
    ));
    summary.set_comparison(compare(&res, &oracle)?);

    let src = "oracle:pseudomode";
    Ok(RunOutput {
        summary: Some(summary),
        artifacts: vec![
            Artifact::new("ensemble.csv", table(&res, "ensemble:normalized_nonlinear")),
            Artifact::new("ensemble_density.json", density(&res, "ensemble:normalized_nonlinear")),
            Artifact::new("oracle.csv", ObservableTable::from_densities(src, &res.times, &oracle, &[("sz", &sigma_z())])?.to_csv()),
            Artifact::new("oracle_density.json", DensitySeries::from_densities(src, &res.times, &oracle).to_json()),
        ],
    })
}

/// Time of the purity maximum in the first stretch above `REVIVAL_PURITY`
/// that follows a dip below `DIP_PURITY`.
pub fn revival_time(times: &[f64], purity: &[f64]) -> Option<f64> {
    let dip = purity.iter().position(|&p| p < DIP_PURITY)?;
    let start = dip + purity[dip..].iter().position(|&p| p > REVIVAL_PURITY)?;
    let end = start + purity[start..].iter().position(|&p| p <= REVIVAL_PURITY).unwrap_or(purity.len() - start);
    let best = (start..end).max_by(|&a, &b| purity[a].total_cmp(&purity[b]))?;
    Some(times[best])
}

/// True if `counts` contains two peaks, then one, then two again.
pub fn split_merge_split(counts: &[usize]) -> bool {
    let Some(a) = counts.iter().position(|&c| c == 2) else { return false };
    let Some(b) = counts[a..].iter().position(|&c| c == 1) else { return false };
    counts[a + b..].contains(&2)
}

/// Horizon of the revival search for fig2, in units of `1/omega`.
const REVIVAL_SEARCH: f64 = 40.0;

fn fig2(cfg: &mut ExperimentConfig, threads: Option<usize>) -> Result<RunOutput, CliError> {
    let dim = cfg.system_dim;
    let h = &number(dim) * cfg.omega;
    let a = annihilation(dim);
    let l = &a * cfg.lambda;
    let kernel = CorrelationKernel::single_mode(cfg.env_omega, 1.0)?;
    let mode = ModeSpec::for_single_mode(&kernel, cfg.truncation)?;
    let cat = cat_state(C64::new(cfg.alpha_cat, 0.0), dim)?;
    let joint0 = cat.tensor(&StateVector::basis(cfg.truncation, 0));

    let search = TimeGrid::new((REVIVAL_SEARCH / cfg.omega / cfg.dt).round() * cfg.dt, cfg.dt)?;
    let fine = reduce_to_system(&joint_unitary_evolve(&joint0, &h, &l, &mode, &search, 1)?, (dim, cfg.truncation))?;
    let fine_purity: Vec<f64> = fine.iter().map(DensityMatrix::purity).collect();
    let t_rev = revival_time(&search.times(), &fine_purity);
    if cfg.t_end.is_none() {
        let t_rev = t_rev.ok_or_else(|| {
            CliError::Config(format!("no purity revival within t = {REVIVAL_SEARCH}/omega; set t_end explicitly"))
        })?;
        cfg.t_end = Some((2.0 * t_rev / cfg.dt).round() * cfg.dt);
    }

    let model = DissipativeModel::new(h.clone(), a.clone(), cfg.lambda, kernel, cat)?;
    let ecfg = ensemble_config(cfg, Estimator::NormalizedNonlinear, threads).observe("n", number(dim));
    let res = run_ensemble(&model, &ecfg)?;
    let grid = ecfg.grid()?;
    let oracle = reduce_to_system(&joint_unitary_evolve(&joint0, &h, &l, &mode, &grid, cfg.stride())?, (dim, cfg.truncation))?;

    let mut summary = Summary::new(cfg.experiment.name());
    let traj_purity: Vec<f64> = res.mean_density.iter().map(DensityMatrix::purity).collect();
    let orc_purity: Vec<f64> = oracle.iter().map(DensityMatrix::purity).collect();
    for (label, p) in [("oracle", &orc_purity), ("ensemble", &traj_purity)] {
        let dip = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let dip_at = p.iter().position(|&x| x == dip).unwrap_or(0);
        let back = p[dip_at..].iter().cloned().fold(0.0, f64::max);
        summary.check(Check::at_most(&format!("{label}_purity_dips"), dip, DIP_PURITY, "minimum reduced purity"));
        summary.check(Check::at_least(&format!("{label}_purity_revives"), back, REVIVAL_PURITY, "largest purity after the dip"));
    }
    let ens_rev = revival_time(&res.times, &traj_purity);
    if let Some(t) = t_rev {
        summary.metric("oracle_revival_time", t);
    }
    if let Some(t) = ens_rev {
        summary.metric("ensemble_revival_time", t);
    }
    match (t_rev, ens_rev) {
        (Some(want), Some(got)) => {
            summary.check(Check::at_most(
                "revival_time_within_5pct",
                (got - want).abs() / want,
                0.05,
                "relative difference of ensemble and oracle revival times",
            ));
        }
        (want, got) => summary.check(Check::flag(
            "revival_time_within_5pct",
            false,
            format!("revival not found (oracle {want:?}, ensemble {got:?})"),
        )),
    }

    // Q-function of one trajectory at the plotting stride
    let q_every = steps_in(cfg.q_interval, cfg.dt);
    let qgrid = QGrid::default();
    let runner = model.prepare(&grid)?;
    let mut fields = Vec::new();
    runner.run(cfg.seed, 0, &mut |k, psi| {
        if k % q_every == 0 {
            let state = StateVector::new(psi.to_vec()).expect("finite trajectory");
            fields.push((grid.time(k), q_function(&state, &qgrid)));
        }
    })?;
    let counts: Vec<usize> = fields.iter().map(|(_, q)| q.count_peaks(Q_PEAK_FRACTION)).collect();
    summary.check(Check::flag(
        "q_split_merge_split",
        split_merge_split(&counts),
        format!("peak counts at Q >= {Q_PEAK_FRACTION} max: {counts:?}"),
    ));
    summary.metric("q_fields", fields.len() as f64);
    summary.set_comparison(compare(&res, &oracle)?);

    let src = "oracle:joint_unitary";
    let mut purity_rows = Vec::new();
    for (s, &t) in res.times.iter().enumerate() {
        purity_rows.push((t, "ensemble:normalized_nonlinear".to_string(), traj_purity[s]));
        purity_rows.push((t, src.to_string(), orc_purity[s]));
    }
    let mut artifacts = vec![
        Artifact::new("ensemble.csv", table(&res, "ensemble:normalized_nonlinear")),
        Artifact::new("ensemble_density.json", density(&res, "ensemble:normalized_nonlinear")),
        Artifact::new("oracle.csv", ObservableTable::from_densities(src, &res.times, &oracle, &[("n", &number(dim))])?.to_csv()),
        Artifact::new("oracle_density.json", DensitySeries::from_densities(src, &res.times, &oracle).to_json()),
        Artifact::new("purity.csv", purity_to_csv(&purity_rows)),
    ];
    for (k, (_, q)) in fields.iter().enumerate() {
        artifacts.push(Artifact::new(format!("q_{k:03}.csv"), q.to_csv()));
    }
    Ok(RunOutput { summary: Some(summary), artifacts })
}

fn cut(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput, CliError> {
    let params = CutParams { omega1: cfg.omega, omega2: cfg.env_omega, kappa: cfg.kappa, lambda: cfg.lambda };
    let psi0 = spin_initial_state();
    let ecfg = ensemble_config(cfg, Estimator::RawLinear, threads);
    let grid = ecfg.grid()?;
    let reference = cut_reference(&params, &psi0, cfg.truncation, &grid, cfg.stride(), cfg.n_paths, cfg.seed, threads)?;
    let model = TwoChannelCutModel::new(params, psi0)?;
    let ecfg = EnsembleConfig { seed: cfg.seed.wrapping_add(1), ..ecfg }.observe("sz", sigma_z());
    let res = run_ensemble(&model, &ecfg)?;

    let mut summary = Summary::new(cfg.experiment.name());
    let side_a = compare(&reference.side_a, &reference.side_b)?;
    let worst_a = side_a.iter().map(|c| c.trace_distance / c.band_3se.max(f64::MIN_POSITIVE)).skip(1).fold(0.0, f64::max);
    summary.metric("max_trace_distance_markov_joint_vs_lindblad", side_a.iter().map(|c| c.trace_distance).fold(0.0, f64::max));
    summary.check(Check::at_most(
        "markov_joint_vs_lindblad_3se",
        worst_a,
        1.0,
        "max trace distance in units of the 3 SE band (joint Markov QSD ensemble, spin-reduced)",
    ));
    let comparison = compare(&res, &reference.side_b)?;
    let last = comparison.last().expect("at least one snapshot");
    summary.check(Check::at_most(
        "two_channel_vs_lindblad_at_t_end",
        last.trace_distance,
        0.05,
        format!("trace distance at t = {}", last.t),
    ));
    summary.set_comparison(comparison);

    let src = "oracle:joint_lindblad";
    let side_b = &reference.side_b;
    Ok(RunOutput {
        summary: Some(summary),
        artifacts: vec![
            Artifact::new("ensemble.csv", table(&res, "ensemble:two_channel")),
            Artifact::new("ensemble_density.json", density(&res, "ensemble:two_channel")),
            Artifact::new("markov_joint.csv", table(&reference.side_a, "ensemble:markov_joint")),
            Artifact::new("markov_joint_density.json", density(&reference.side_a, "ensemble:markov_joint")),
            Artifact::new("oracle.csv", ObservableTable::from_densities(src, &res.times, side_b, &[("sz", &sigma_z())])?.to_csv()),
            Artifact::new("oracle_density.json", DensitySeries::from_densities(src, &res.times, side_b).to_json()),
        ],
    })
}

/// Step for rate `gamma`: at most `dt` and at most `0.05 / gamma`, dividing `t_end`.
pub fn markov_limit_dt(t_end: f64, dt: f64, gamma: f64) -> f64 {
    let n = (t_end / dt.min(0.05 / gamma) - 1e-9).ceil().max(1.0);
    t_end / n
}

fn markov_limit(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput, CliError> {
    let psi0 = spin_initial_state();
    let h = &sigma_z() * (0.5 * cfg.omega);
    let l = &sigma_minus() * cfg.lambda;
    let t_end = cfg.t_end.unwrap_or(0.0);
    let mut summary = Summary::new(cfg.experiment.name());
    let mut artifacts = Vec::new();
    let mut distances = Vec::new();
    let mut ens_table = ObservableTable::default().with_source("ensemble:normalized_nonlinear");
    let mut orc_table = ObservableTable::default().with_source("oracle:lindblad");
    for &gamma in &cfg.gamma_sweep {
        let dt = markov_limit_dt(t_end, cfg.dt, gamma);
        let kernel = CorrelationKernel::exponential(gamma, cfg.env_omega)?;
        let model = DissipativeModel::new(h.clone(), sigma_minus(), cfg.lambda, kernel.clone(), psi0.clone())?;
        let mut ecfg = EnsembleConfig::new(cfg.n_paths, t_end, dt, cfg.seed, Estimator::NormalizedNonlinear)
            .stride(steps_in(cfg.snapshot_every, dt))
            .observe(&format!("sz[gamma={gamma}]"), sigma_z());
        ecfg.threads = threads;
        let res = run_ensemble(&model, &ecfg)?;
        let grid = ecfg.grid()?;
        let lindblad = lindblad_evolve(&psi0.projector(), &h, std::slice::from_ref(&l), &grid, ecfg.snapshot_stride)?;
        let pseudo = pseudomode_evolve(&psi0.projector(), &h, &l, &kernel, cfg.truncation, &grid, ecfg.snapshot_stride)?;
        let s = res.mean_density.len() - 1;
        let d_ens = res.mean_density[s].trace_distance(&lindblad[s])?;
        let d_pm = pseudo[s].trace_distance(&lindblad[s])?;
        let d_ens_pm = res.mean_density[s].trace_distance(&pseudo[s])?;
        summary.metric(&format!("trace_distance_lindblad[gamma={gamma}]"), d_ens);
        summary.metric(&format!("band_3se[gamma={gamma}]"), res.trace_distance_tolerance(s, 3.0));
        summary.metric(&format!("pseudomode_vs_lindblad[gamma={gamma}]"), d_pm);
        summary.metric(&format!("trace_distance_pseudomode[gamma={gamma}]"), d_ens_pm);
        summary.metric(&format!("dt[gamma={gamma}]"), dt);
        distances.push(d_ens);
        ens_table.rows.extend(ObservableTable::from_result(&res).rows.into_iter().filter(|r| r.name != "norm_sqr"));
        orc_table.rows.extend(
            ObservableTable::from_densities("", &res.times, &lindblad, &[(&format!("sz[gamma={gamma}]"), &sigma_z())])?.rows,
        );
        artifacts.push(Artifact::new(format!("ensemble_density_gamma{gamma}.json"), density(&res, "ensemble:normalized_nonlinear")));
        artifacts.push(Artifact::new(
            format!("oracle_density_gamma{gamma}.json"),
            DensitySeries::from_densities("oracle:lindblad", &res.times, &lindblad).to_json(),
        ));
    }
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    summary.check(Check::flag("trace_distance_decreases_with_gamma", monotone, format!("trace distances at T: {distances:?}")));
    let last = *distances.last().expect("non-empty sweep");
    summary.check(Check::at_most("largest_gamma_within_0.03", last, 0.03, "trace distance at T for the largest gamma"));
    summary.max_trace_distance = distances.iter().cloned().reduce(f64::max);
    artifacts.insert(0, Artifact::new("ensemble.csv", ens_table.to_csv()));
    artifacts.insert(1, Artifact::new("oracle.csv", orc_table.to_csv()));
    Ok(RunOutput { summary: Some(summary), artifacts })
}

/// Kernel/sampler pairs exercised by `noise_stats`.
pub fn noise_pairs(cfg: &ExperimentConfig, grid: &TimeGrid) -> Result<Vec<(String, CorrelationKernel, SamplerKind)>, CliError> {
    let exp = CorrelationKernel::exponential(cfg.gamma, cfg.env_omega)?;
    let single = CorrelationKernel::single_mode(cfg.env_omega, 1.0)?;
    let n = grid.len();
    let tabulated = (0..n * n).map(|k| exp.eval(grid.time(k / n), grid.time(k % n))).collect::<Result<Vec<_>, _>>()?;
    let sampled = CorrelationKernel::sampled(grid.dt(), n, tabulated)?;
    Ok(vec![
        ("delta/white".into(), CorrelationKernel::Delta, SamplerKind::Auto),
        ("exponential/cholesky".into(), exp.clone(), SamplerKind::Cholesky),
        ("exponential/recursive".into(), exp, SamplerKind::Recursive),
        ("single_mode/cholesky".into(), single.clone(), SamplerKind::Cholesky),
        ("single_mode/recursive".into(), single, SamplerKind::Recursive),
        ("sampled/cholesky".into(), sampled, SamplerKind::Cholesky),
    ])
}

fn noise_stats(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let grid = TimeGrid::new(cfg.t_end.unwrap_or(0.0), cfg.dt)?;
    let mut summary = Summary::new(cfg.experiment.name());
    let mut rows = Vec::new();
    let n = grid.len();
    for (name, kernel, kind) in noise_pairs(cfg, &grid)? {
        let sampler = Sampler::new(&kernel, &grid, kind)?;
        let cov = build_covariance(&kernel, &grid)?;
        let stats = noise_statistics(&sampler, cfg.seed, cfg.n_paths);
        let corr = stats.max_correlation_deviation(&cov);
        let pseudo = stats.max_pseudo_deviation();
        summary.check(Check::at_most(&format!("{name}:correlation_5se"), corr, 5.0, "max |M[z_i* z_j] - alpha| in SE units"));
        summary.check(Check::at_most(&format!("{name}:pseudo_5se"), pseudo, 5.0, "max |M[z_i z_j]| in SE units"));
        for i in 0..n {
            for j in 0..n {
                let (c, p) = (&stats.correlation[i * n + j], &stats.pseudo[i * n + j]);
                let exact = cov.get(i, j);
                rows.push(MomentRow {
                    pair: name.clone(),
                    i,
                    j,
                    corr_re: c.mean.re,
                    corr_im: c.mean.im,
                    corr_se: c.standard_error(),
                    exact_re: exact.re,
                    exact_im: exact.im,
                    pseudo_re: p.mean.re,
                    pseudo_im: p.mean.im,
                    pseudo_se: p.standard_error(),
                });
            }
        }
    }
    Ok(RunOutput { summary: Some(summary), artifacts: vec![Artifact::new("moments.csv", moments_to_csv(&rows))] })
}
