use nmqsd_core::ensemble::{
    mean_density, path_failed, run_ensemble, EnsembleConfig, Estimator, PathRunner, Unravelling,
};
use nmqsd_core::hilbert::{sigma_minus, sigma_x, sigma_z, Operator, StateVector};
use nmqsd_core::noise::{CorrelationKernel, TimeGrid};
use nmqsd_core::oracle::lindblad_evolve;
use nmqsd_core::trajectory::models::{DissipativeModel, LinearModel, MarkovQsdModel};
use nmqsd_core::trajectory::OAnsatz;
use nmqsd_core::{Error, Result, C64};

fn psi_3_2() -> StateVector {
    StateVector::from_real(&[3.0, 2.0]).unwrap().normalize().unwrap()
}

fn damped_spin() -> MarkovQsdModel {
    MarkovQsdModel::new(&sigma_x() * 0.6, sigma_minus(), psi_3_2()).unwrap()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let kernel = CorrelationKernel::exponential(2.0, 1.0).unwrap();
    let model = DissipativeModel::new(&sigma_z() * 0.5, sigma_minus(), 1.0, kernel, psi_3_2()).unwrap();
    let cfg = EnsembleConfig::new(2100, 2.0, 5e-3, 77, Estimator::NormalizedNonlinear).stride(40).observe("sz", sigma_z());
    let one = run_ensemble(&model, &cfg.clone().threads(1)).unwrap();
    let three = run_ensemble(&model, &cfg.clone().threads(3)).unwrap();
    let eight = run_ensemble(&model, &cfg.threads(8)).unwrap();
    assert_eq!(one, three);
    assert_eq!(one, eight);
}

#[test]
fn single_path_gives_a_pure_state() {
    let cfg = EnsembleConfig::new(1, 2.0, 1e-3, 1, Estimator::NormalizedNonlinear).stride(200);
    let r = run_ensemble(&damped_spin(), &cfg).unwrap();
    for rho in &r.mean_density {
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let ev = rho.eigenvalues();
        assert!(ev.iter().filter(|&&e| e > 1e-10).count() == 1);
    }
    assert!(r.density_se.iter().flatten().all(|&s| s == 0.0));
}

#[test]
fn zero_coupling_reproduces_unitary_evolution() {
    let h = &(&sigma_x() * 0.6) + &(&sigma_z() * 0.2);
    let model = MarkovQsdModel::new(h.clone(), Operator::zeros(2), psi_3_2()).unwrap();
    let cfg = EnsembleConfig::new(50, 3.0, 1e-3, 2, Estimator::NormalizedNonlinear).stride(300);
    let r = run_ensemble(&model, &cfg).unwrap();
    let oracle = lindblad_evolve(&psi_3_2().projector(), &h, &[], &cfg.grid().unwrap(), 300).unwrap();
    for (rho, want) in r.mean_density.iter().zip(&oracle) {
        assert!(rho.trace_distance(want).unwrap() < 1e-6);
    }
}

#[test]
fn mismatched_estimator_is_rejected() {
    let cfg = EnsembleConfig::new(10, 1.0, 1e-2, 1, Estimator::RawLinear);
    assert!(matches!(run_ensemble(&damped_spin(), &cfg), Err(Error::ModelEstimatorMismatch(_))));
    let linear = LinearModel::new(
        &sigma_z() * 0.5,
        OAnsatz::LoweringScaled { lowering: sigma_minus() },
        1.0,
        CorrelationKernel::Delta,
        psi_3_2(),
    )
    .unwrap();
    let cfg = EnsembleConfig::new(10, 1.0, 1e-2, 1, Estimator::NormalizedNonlinear);
    assert!(matches!(run_ensemble(&linear, &cfg), Err(Error::ModelEstimatorMismatch(_))));
}

#[test]
fn empty_ensemble_is_rejected() {
    let cfg = EnsembleConfig::new(0, 1.0, 1e-2, 1, Estimator::NormalizedNonlinear);
    assert!(matches!(run_ensemble(&damped_spin(), &cfg), Err(Error::EmptyEnsemble)));
    assert!(matches!(mean_density(&[], Estimator::RawLinear), Err(Error::EmptyEnsemble)));
}

/// Fails deterministically on a fixed set of paths.
struct Faulty {
    bad: Vec<u64>,
}

impl Unravelling for Faulty {
    fn dim(&self) -> usize {
        2
    }
    fn estimator(&self) -> Estimator {
        Estimator::NormalizedNonlinear
    }
    fn prepare<'a>(&'a self, _grid: &TimeGrid) -> Result<Box<dyn PathRunner + 'a>> {
        Ok(Box::new(FaultyRunner { bad: &self.bad }))
    }
}

struct FaultyRunner<'a> {
    bad: &'a [u64],
}

impl PathRunner for FaultyRunner<'_> {
    fn run(&self, _seed: u64, path: u64, visit: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
        let psi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        visit(0, &psi);
        if self.bad.contains(&path) {
            return Err(path_failed(path, 3, Error::ZeroNorm { norm: 0.0 }));
        }
        for k in 1..=10 {
            visit(k, &psi);
        }
        Ok(())
    }
}

#[test]
fn failing_path_aborts_with_lowest_index() {
    let model = Faulty { bad: vec![3000, 1500, 70] };
    for threads in [1, 4] {
        let cfg = EnsembleConfig::new(4000, 1.0, 0.1, 1, Estimator::NormalizedNonlinear).threads(threads);
        match run_ensemble(&model, &cfg) {
            Err(Error::PathFailed { path, step, source }) => {
                assert_eq!((path, step), (70, 3));
                assert_eq!(*source, Error::ZeroNorm { norm: 0.0 });
            }
            other => panic!("expected a path failure, got {other:?}"),
        }
    }
}

#[test]
fn linear_and_nonlinear_markov_estimators_agree() {
    let h = &sigma_z() * 0.5;
    let linear = LinearModel::new(
        h.clone(),
        OAnsatz::LoweringScaled { lowering: sigma_minus() },
        1.0,
        CorrelationKernel::Delta,
        psi_3_2(),
    )
    .unwrap();
    let nonlinear = MarkovQsdModel::new(h, sigma_minus(), psi_3_2()).unwrap();
    let lin = run_ensemble(&linear, &EnsembleConfig::new(4000, 2.0, 2e-3, 31, Estimator::RawLinear).stride(250)).unwrap();
    let non = run_ensemble(
        &nonlinear,
        &EnsembleConfig::new(4000, 2.0, 2e-3, 32, Estimator::NormalizedNonlinear).stride(250),
    )
    .unwrap();
    for s in 1..lin.times.len() {
        for e in 0..4 {
            let diff = (lin.mean_density[s].data()[e] - non.mean_density[s].data()[e]).norm();
            let se = (lin.density_se[s][e].powi(2) + non.density_se[s][e].powi(2)).sqrt();
            assert!(diff <= 5.0 * se + 1e-12, "snapshot {s} element {e}: {diff} vs {se}");
        }
    }
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let cfg = |n| EnsembleConfig::new(n, 1.0, 2e-3, 5, Estimator::NormalizedNonlinear).stride(500).observe("sz", sigma_z());
    let small = run_ensemble(&damped_spin(), &cfg(1000)).unwrap();
    let large = run_ensemble(&damped_spin(), &cfg(16000)).unwrap();
    let ratio = small.observable("sz").unwrap().se[1] / large.observable("sz").unwrap().se[1];
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "se ratio {ratio}");
}

#[test]
fn ensemble_means_are_physical_states() {
    let kernel = CorrelationKernel::exponential(1.0, 1.0).unwrap();
    let model = DissipativeModel::new(&sigma_z() * 0.5, sigma_minus(), 1.0, kernel, psi_3_2()).unwrap();
    let cfg = EnsembleConfig::new(300, 6.0, 1e-3, 3, Estimator::NormalizedNonlinear).stride(250);
    let r = run_ensemble(&model, &cfg).unwrap();
    for rho in &r.mean_density {
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-14);
        assert!(rho.min_eigenvalue() > -1e-12);
    }
}

#[test]
fn raw_linear_trace_is_the_mean_squared_norm() {
    let model = LinearModel::new(
        &sigma_z() * 0.5,
        OAnsatz::LoweringScaled { lowering: sigma_minus() },
        1.0,
        CorrelationKernel::single_mode(1.0, 1.0).unwrap(),
        psi_3_2(),
    )
    .unwrap();
    let cfg = EnsembleConfig::new(500, 3.0, 5e-3, 8, Estimator::RawLinear).stride(60);
    let r = run_ensemble(&model, &cfg).unwrap();
    for (rho, n2) in r.mean_density.iter().zip(&r.norm_sqr.mean) {
        assert!((rho.trace() - n2).norm() < 1e-10);
    }
    assert!(r.norm_sqr.mean.iter().skip(1).any(|n| (n.re - 1.0).abs() > 1e-6));
}
