use crate::hilbert::StateVector;
use crate::{Error, Result, C64};

/// Largest admissible population in the top Fock level.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;

/// Exact coherent-state amplitudes `e^{-|b|^2/2} b^n / sqrt(n!)` for
/// `n < dim`, without renormalising the truncated vector.
pub fn coherent_amplitudes(beta: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * beta / (n as f64).sqrt();
        }
        amps.push(c);
    }
    amps
}

pub fn check_truncation(amps: &[C64]) -> Result<()> {
    let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let top = amps.last().map(|z| z.norm_sqr()).unwrap_or(0.0) / total;
    if top >= TRUNCATION_TOLERANCE {
        return Err(Error::TruncationTooSmall { population: top });
    }
    Ok(())
}

/// Normalised coherent state `|beta>` on Fock levels `0..dim`.
pub fn coherent_state(beta: C64, dim: usize) -> Result<StateVector> {
    let amps = coherent_amplitudes(beta, dim);
    check_truncation(&amps)?;
    StateVector::new(amps)?.normalize()
}

/// Normalised even cat `|alpha> + |-alpha>`.
pub fn cat_state(alpha: C64, dim: usize) -> Result<StateVector> {
    let plus = coherent_amplitudes(alpha, dim);
    let minus = coherent_amplitudes(-alpha, dim);
    let amps: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| a + b).collect();
    check_truncation(&amps)?;
    StateVector::new(amps)?.normalize()
}

/// Analytic normalisation of `|alpha> + |-alpha>`: `[2(1 + e^{-2|alpha|^2})]^{-1/2}`.
pub fn cat_normalization(alpha: C64) -> f64 {
    (2.0 * (1.0 + (-2.0 * alpha.norm_sqr()).exp())).powf(-0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation, number};

    #[test]
    fn coherent_zero_is_vacuum() {
        assert_eq!(coherent_state(C64::new(0.0, 0.0), 10).unwrap(), StateVector::basis(10, 0));
    }

    #[test]
    fn coherent_mean_photon_number() {
        let s = coherent_state(C64::new(2.0, 0.0), 30).unwrap();
        assert!((s.expectation(&number(30)).unwrap().re - 4.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_is_annihilation_eigenstate() {
        let beta = C64::new(1.2, -0.7);
        let s = coherent_state(beta, 30).unwrap();
        let e = s.expectation(&annihilation(30)).unwrap();
        assert!((e - beta).norm() < 1e-9);
    }

    #[test]
    fn cat_normalization_matches_overlap() {
        let alpha = C64::new(2.0, 0.0);
        let plus = coherent_amplitudes(alpha, 30);
        let minus = coherent_amplitudes(-alpha, 30);
        // direct overlap <alpha|-alpha> = e^{-2|alpha|^2}
        let overlap: C64 = plus.iter().zip(&minus).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.re - (-8f64).exp()).abs() < 1e-12);
        let n = cat_normalization(alpha);
        assert!((n - (2.0 * (1.0 + (-8f64).exp())).powf(-0.5)).abs() < 1e-15);
        let cat = cat_state(alpha, 30).unwrap();
        for k in 0..30 {
            assert!((cat.amplitudes()[k] - n * (plus[k] + minus[k])).norm() < 1e-10);
        }
        // even cat has no odd Fock components
        assert!(cat.amplitudes().iter().skip(1).step_by(2).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn truncation_is_checked() {
        assert!(matches!(
            coherent_state(C64::new(2.0, 0.0), 8),
            Err(Error::TruncationTooSmall { .. })
        ));
        assert!(cat_state(C64::new(2.0, 0.0), 30).is_ok());
    }
}
