use crate::hilbert::{DensityMatrix, Operator};
use crate::{Error, Result, C64};

/// Norms at or below this are treated as a collapsed state.
pub const NORM_FLOOR: f64 = 1e-14;

/// Complex amplitude vector. Spin convention: index 0 = up, 1 = down;
/// oscillator convention: index n = Fock state n.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("state dimension must be positive".into()));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("state amplitudes must be finite".into()));
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Basis vector `|k>` in a `dim`-dimensional space.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[k] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn spin_up() -> Self {
        Self::basis(2, 0)
    }

    pub fn spin_down() -> Self {
        Self::basis(2, 1)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let mut out = self.clone();
        out.normalize_in_place()?;
        Ok(out)
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize_in_place(&mut self) -> Result<f64> {
        normalize_slice(&mut self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_dim(other.dim())?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `<psi|A|psi>` for a normalised state.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        self.check_dim(op.dim())?;
        Ok(op.sandwich(&self.amps))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_outer(&self.amps)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: d });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Normalises in place, returning the previous norm.
#[inline]
pub(crate) fn normalize_slice(x: &mut [C64]) -> Result<f64> {
    let n = norm_sqr(x).sqrt();
    if !(n > NORM_FLOOR) || !n.is_finite() {
        return Err(Error::ZeroNorm { norm: n });
    }
    let inv = 1.0 / n;
    x.iter_mut().for_each(|z| *z *= inv);
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{sigma_z, Operator};
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        let up = StateVector::from_real(&[1.0, 0.0]).unwrap();
        assert_eq!(up.normalize().unwrap(), up);

        let s = StateVector::from_real(&[3.0, 2.0]).unwrap().normalize().unwrap();
        let r13 = 13f64.sqrt();
        assert!((s.amplitudes()[0].re - 3.0 / r13).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - 2.0 / r13).abs() < 1e-15);

        let zero = StateVector::from_real(&[0.0, 0.0]).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::ZeroNorm { .. })));
    }

    #[test]
    fn expectation_examples() {
        assert!((StateVector::spin_up().expectation(&sigma_z()).unwrap().re - 1.0).abs() < 1e-15);
        let s = StateVector::from_real(&[3.0, 2.0]).unwrap().normalize().unwrap();
        let e = s.expectation(&sigma_z()).unwrap();
        assert!((e.re - 5.0 / 13.0).abs() < 1e-15 && e.im.abs() < 1e-15);
        assert!(matches!(s.expectation(&Operator::identity(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tensor_of_basis_states() {
        let j = StateVector::spin_up().tensor(&StateVector::basis(3, 0));
        assert_eq!(j, StateVector::basis(6, 0));
        // (sigma_z x 1)(down x |1>) = -(down x |1>)
        let s = StateVector::spin_down().tensor(&StateVector::basis(2, 1));
        let op = sigma_z().kron(&Operator::identity(2));
        let mut out = vec![C64::new(0.0, 0.0); 4];
        op.apply(s.amplitudes(), &mut out);
        for (o, a) in out.iter().zip(s.amplitudes()) {
            assert!((o + a).norm() < 1e-15);
        }
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
            .prop_map(|v| StateVector::new(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in arb_state(5)) {
            let once = s.normalize().unwrap();
            let twice = once.normalize().unwrap();
            for (a, b) in once.amplitudes().iter().zip(twice.amplitudes()) {
                prop_assert!((a - b).norm() <= 1e-14);
            }
            prop_assert!((once.norm() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn hermitian_expectation_is_real_and_bounded(s in arb_state(4), h in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let raw = Operator::from_fn(4, |i, j| C64::new(h[i * 4 + j].0, h[i * 4 + j].1));
            let herm = &(&raw + &raw.dagger()) * 0.5;
            let s = s.normalize().unwrap();
            let e = s.expectation(&herm).unwrap();
            prop_assert!(e.im.abs() <= 1e-12);
            // Cauchy-Schwarz: |<A>| <= ||A psi|| <= Frobenius norm
            let fro: f64 = herm.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(e.norm() <= fro + 1e-12);
        }
    }
}
