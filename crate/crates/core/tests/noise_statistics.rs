use nmqsd_core::ensemble::Welford;
use nmqsd_core::noise::{
    build_covariance, noise_statistics, stream_rng, CorrelationKernel, Sampler, SamplerKind, TimeGrid,
};
use nmqsd_core::C64;

const PATHS: u64 = 10_000;

fn grid10() -> TimeGrid {
    TimeGrid::from_steps(0.25, 9)
}

fn gaussian_kernel(grid: &TimeGrid) -> CorrelationKernel {
    let n = grid.len();
    let m = (0..n * n)
        .map(|k| {
            let tau = grid.time(k / n) - grid.time(k % n);
            C64::new(0.0, -0.3 * tau).exp() * (-tau * tau).exp()
        })
        .collect();
    CorrelationKernel::sampled(grid.dt(), n, m).unwrap()
}

fn pairs(grid: &TimeGrid) -> Vec<(&'static str, CorrelationKernel, SamplerKind)> {
    let exp = CorrelationKernel::exponential(1.3, 0.7).unwrap();
    let single = CorrelationKernel::single_mode(0.5, 1.0).unwrap();
    vec![
        ("delta/white", CorrelationKernel::Delta, SamplerKind::Auto),
        ("exponential/cholesky", exp.clone(), SamplerKind::Cholesky),
        ("exponential/recursive", exp, SamplerKind::Recursive),
        ("single_mode/cholesky", single.clone(), SamplerKind::Cholesky),
        ("single_mode/recursive", single, SamplerKind::Recursive),
        ("sampled/cholesky", gaussian_kernel(grid), SamplerKind::Cholesky),
    ]
}

#[test]
fn second_moments_match_every_kernel_and_sampler() {
    let grid = grid10();
    for (name, kernel, kind) in pairs(&grid) {
        let sampler = Sampler::new(&kernel, &grid, kind).unwrap();
        let cov = build_covariance(&kernel, &grid).unwrap();
        let stats = noise_statistics(&sampler, 2024, PATHS);
        let corr = stats.max_correlation_deviation(&cov);
        let pseudo = stats.max_pseudo_deviation();
        assert!(corr < 5.0, "{name}: M[z*z] off by {corr:.2} SE");
        assert!(pseudo < 5.0, "{name}: M[zz] off by {pseudo:.2} SE");
    }
}

#[test]
fn path_means_vanish() {
    let grid = grid10();
    for (name, kernel, kind) in pairs(&grid) {
        let sampler = Sampler::new(&kernel, &grid, kind).unwrap();
        let mut mean = vec![Welford::default(); grid.len()];
        let mut z = Vec::new();
        for path in 0..PATHS {
            sampler.sample_into(&mut stream_rng(99, 0, path), &mut z);
            for (w, v) in mean.iter_mut().zip(&z) {
                w.push(path + 1, *v);
            }
        }
        for w in &mean {
            assert!(w.mean.norm() < 5.0 * w.standard_error(), "{name}: mean {}", w.mean);
        }
    }
}

#[test]
fn unit_covariance_has_unit_variance() {
    let kernel = CorrelationKernel::sampled(1.0, 1, vec![C64::new(1.0, 0.0)]).unwrap();
    let sampler = Sampler::new(&kernel, &TimeGrid::from_steps(1.0, 0), SamplerKind::Cholesky).unwrap();
    let stats = noise_statistics(&sampler, 5, 100_000);
    assert!((stats.correlation[0].mean.re - 1.0).abs() < 0.02);
}

#[test]
fn recursive_exponential_is_stationary_with_the_right_lag_correlation() {
    let (gamma, omega) = (2.0, 1.5);
    // lag 1/gamma lands on step 4
    let grid = TimeGrid::from_steps(0.125, 8);
    let kernel = CorrelationKernel::exponential(gamma, omega).unwrap();
    let sampler = Sampler::new(&kernel, &grid, SamplerKind::Recursive).unwrap();
    let stats = noise_statistics(&sampler, 31, PATHS);
    let n = grid.len();
    for k in 0..n {
        let w = &stats.correlation[k * n + k];
        assert!((w.mean.re - gamma / 2.0).abs() < 3.0 * w.standard_error(), "variance at {k}: {}", w.mean);
    }
    let want = gamma / 2.0 * C64::new(-1.0, -omega / gamma).exp();
    let lag = &stats.correlation[6 * n + 2];
    assert!((lag.mean - want).norm() < 5.0 * lag.standard_error(), "{} vs {want}", lag.mean);
}

#[test]
fn recursive_and_cholesky_agree_for_the_exponential_kernel() {
    let grid = grid10();
    let kernel = CorrelationKernel::exponential(0.8, -0.4).unwrap();
    let a = noise_statistics(&Sampler::new(&kernel, &grid, SamplerKind::Recursive).unwrap(), 1, PATHS);
    let b = noise_statistics(&Sampler::new(&kernel, &grid, SamplerKind::Cholesky).unwrap(), 2, PATHS);
    for (x, y) in a.correlation.iter().zip(&b.correlation).chain(a.pseudo.iter().zip(&b.pseudo)) {
        let se = x.standard_error().hypot(y.standard_error());
        assert!((x.mean - y.mean).norm() < 5.0 * se);
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let grid = grid10();
    let kernel = CorrelationKernel::exponential(1.0, 0.0).unwrap();
    let sampler = Sampler::new(&kernel, &grid, SamplerKind::Auto).unwrap();
    let a = sampler.sample(&mut stream_rng(7, 0, 3), 3);
    let b = sampler.sample(&mut stream_rng(7, 0, 3), 3);
    let c = sampler.sample(&mut stream_rng(7, 0, 4), 4);
    let d = sampler.sample(&mut stream_rng(7, 1, 3), 3);
    assert_eq!(a, b);
    assert_ne!(a.values, c.values);
    assert_ne!(a.values, d.values);
}
