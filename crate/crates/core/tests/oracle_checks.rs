use nmqsd_core::hilbert::{annihilation, cat_state, number, sigma_minus, sigma_z, Operator, StateVector};
use nmqsd_core::noise::{CorrelationKernel, TimeGrid};
use nmqsd_core::oracle::{
    cut_joint_model, dephasing_closed_form, joint_unitary_evolve, lindblad_evolve, pseudomode_evolve, reduce_to_system,
    ModeSpec,
};
use nmqsd_core::trajectory::CutParams;
use nmqsd_core::C64;

fn psi_3_2() -> StateVector {
    StateVector::from_real(&[3.0, 2.0]).unwrap().normalize().unwrap()
}

#[test]
fn lindblad_keeps_trace_and_positivity_on_experiment_models() {
    let grid = TimeGrid::new(5.0, 1e-3).unwrap();
    let spin = lindblad_evolve(&psi_3_2().projector(), &(&sigma_z() * 0.5), &[sigma_minus()], &grid, 100).unwrap();
    let p = CutParams { omega1: 1.0, omega2: 1.0, kappa: 0.2, lambda: 0.5f64.sqrt() };
    let (h, l) = cut_joint_model(&p, 4).unwrap();
    let rho0 = psi_3_2().tensor(&StateVector::basis(4, 0)).projector();
    let joint = lindblad_evolve(&rho0, &h, &[l], &grid, 100).unwrap();
    for rho in spin.iter().chain(&joint) {
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!(rho.trace().im.abs() < 1e-14);
        assert!(rho.min_eigenvalue() > -1e-10);
    }
}

fn pseudomode_vs_lindblad(gamma: f64) -> f64 {
    let h = &sigma_z() * 0.5;
    let kernel = CorrelationKernel::exponential(gamma, 0.0).unwrap();
    let grid = TimeGrid::new(2.0, 5e-4).unwrap();
    let stride = grid.n_steps();
    let pm = pseudomode_evolve(&psi_3_2().projector(), &h, &sigma_minus(), &kernel, 6, &grid, stride).unwrap();
    let lb = lindblad_evolve(&psi_3_2().projector(), &h, &[sigma_minus()], &grid, stride).unwrap();
    pm[1].trace_distance(&lb[1]).unwrap()
}

#[test]
fn pseudomode_approaches_lindblad_for_broad_baths() {
    let d: Vec<f64> = [10.0, 30.0, 100.0].iter().map(|&g| pseudomode_vs_lindblad(g)).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert!(d[2] < 0.02, "{d:?}");
}

#[test]
fn pseudomode_dephasing_matches_closed_form() {
    let kernel = CorrelationKernel::exponential_weighted(2.0, 0.7, 1.0).unwrap();
    let (omega, lambda) = (1.3, 0.4);
    let grid = TimeGrid::new(3.0, 1e-3).unwrap();
    let rho0 = psi_3_2().projector();
    let pm = pseudomode_evolve(&rho0, &(&sigma_z() * (0.5 * omega)), &(&sigma_z() * lambda), &kernel, 14, &grid, 500).unwrap();
    for (k, rho) in pm.iter().enumerate() {
        let want = dephasing_closed_form(&rho0, omega, lambda, &kernel, k as f64 * 0.5).unwrap();
        assert!(rho.max_abs_diff(&want) < 1e-7, "t = {}: {}", k as f64 * 0.5, rho.max_abs_diff(&want));
    }
}

#[test]
fn single_mode_dephasing_matches_closed_form() {
    let kernel = CorrelationKernel::single_mode(0.9, 1.0).unwrap();
    let (omega, lambda) = (1.0, 0.3);
    let grid = TimeGrid::new(6.0, 1e-2).unwrap();
    let mode = ModeSpec::for_single_mode(&kernel, 16).unwrap();
    let psi0 = psi_3_2().tensor(&StateVector::basis(16, 0));
    let joint =
        joint_unitary_evolve(&psi0, &(&sigma_z() * (0.5 * omega)), &(&sigma_z() * lambda), &mode, &grid, 50).unwrap();
    let rho0 = psi_3_2().projector();
    for (k, rho) in reduce_to_system(&joint, (2, 16)).unwrap().iter().enumerate() {
        let want = dephasing_closed_form(&rho0, omega, lambda, &kernel, k as f64 * 0.5).unwrap();
        assert!(rho.max_abs_diff(&want) < 1e-9);
    }
}

#[test]
fn cat_coupled_to_one_mode_loses_and_regains_purity() {
    let dim = 30;
    let kernel = CorrelationKernel::single_mode(0.5, 1.0).unwrap();
    let mode = ModeSpec::for_single_mode(&kernel, 15).unwrap();
    let cat = cat_state(C64::new(2.0, 0.0), dim).unwrap();
    let grid = TimeGrid::new(14.0, 1e-2).unwrap();
    let joint = joint_unitary_evolve(
        &cat.tensor(&StateVector::basis(15, 0)),
        &number(dim),
        &(&annihilation(dim) * 0.1),
        &mode,
        &grid,
        25,
    )
    .unwrap();
    let purity: Vec<f64> = reduce_to_system(&joint, (dim, 15)).unwrap().iter().map(|r| r.purity()).collect();
    let (dip_at, dip) = purity.iter().enumerate().fold((0, 1.0), |b, (i, &p)| if p < b.1 { (i, p) } else { b });
    assert!(dip < 0.6, "minimum purity {dip}");
    let revival = purity[dip_at..].iter().cloned().fold(0.0, f64::max);
    assert!(revival > 0.95, "revival purity {revival}");
}

#[test]
fn lindblad_without_jumps_is_unitary() {
    let h = Operator::from_fn(3, |i, j| C64::new((i + j) as f64 * 0.3, (i as f64 - j as f64) * 0.1));
    let grid = TimeGrid::new(1.0, 1e-3).unwrap();
    let psi0 = StateVector::from_real(&[1.0, 2.0, 2.0]).unwrap().normalize().unwrap();
    let out = lindblad_evolve(&psi0.projector(), &h, &[], &grid, 1000).unwrap();
    let minus_ih: Vec<C64> = h.data().iter().map(|z| z * C64::new(0.0, -1.0)).collect();
    let u = nmqsd_core::linalg::expm(3, &minus_ih);
    let amps = psi0.amplitudes();
    let psi1: Vec<C64> = (0..3).map(|i| (0..3).map(|k| u[i * 3 + k] * amps[k]).sum()).collect();
    let want = StateVector::new(psi1).unwrap().projector();
    assert!(out[1].max_abs_diff(&want) < 1e-10);
}
