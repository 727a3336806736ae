use crate::ensemble::Welford;
use crate::noise::{stream_rng, Covariance, Sampler};
use crate::C64;

/// Empirical second moments `M[z_i^* z_j]` and `M[z_i z_j]` of a sampler.
#[derive(Clone, Debug)]
pub struct NoiseStatistics {
    pub n_points: usize,
    pub n_paths: u64,
    pub correlation: Vec<Welford>,
    pub pseudo: Vec<Welford>,
}

/// Draws `n_paths` paths on channel 0 and accumulates all pair moments.
pub fn noise_statistics(sampler: &Sampler, seed: u64, n_paths: u64) -> NoiseStatistics {
    let n = sampler.len();
    let mut correlation = vec![Welford::default(); n * n];
    let mut pseudo = vec![Welford::default(); n * n];
    let mut z = Vec::with_capacity(n);
    for path in 0..n_paths {
        let mut rng = stream_rng(seed, 0, path);
        sampler.sample_into(&mut rng, &mut z);
        for i in 0..n {
            for j in 0..n {
                correlation[i * n + j].push(path + 1, z[i].conj() * z[j]);
                pseudo[i * n + j].push(path + 1, z[i] * z[j]);
            }
        }
    }
    NoiseStatistics { n_points: n, n_paths, correlation, pseudo }
}

fn in_se(w: &Welford, target: C64) -> f64 {
    let d = (w.mean - target).norm();
    let se = w.standard_error();
    if se > 0.0 {
        d / se
    } else if d < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

impl NoiseStatistics {
    /// Largest `|M[z_i^* z_j] - C_ij|` in standard errors.
    pub fn max_correlation_deviation(&self, cov: &Covariance) -> f64 {
        let n = self.n_points;
        (0..n * n).map(|k| in_se(&self.correlation[k], cov.get(k / n, k % n))).fold(0.0, f64::max)
    }

    /// Largest `|M[z_i z_j]|` in standard errors.
    pub fn max_pseudo_deviation(&self) -> f64 {
        self.pseudo.iter().map(|w| in_se(w, C64::new(0.0, 0.0))).fold(0.0, f64::max)
    }
}
