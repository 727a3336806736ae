//! Fixed-step integrators for the Markov and non-Markovian unravellings.
//!
//! Nonlinear steppers return unit-norm states; linear steppers leave the norm
//! alone because the raw ensemble average of `|psi><psi|` needs it. Colored
//! noise is sampled on the grid and enters the Heun stages at the step
//! endpoints; white noise is piecewise constant and enters both stages with
//! the same value, which is the Stratonovich midpoint rule.

mod cut;
mod linear;
mod markov;
mod memory;
pub mod models;
mod nonmarkov;
mod riccati;

pub use cut::{CutParams, TwoChannelCutStepper};
pub use linear::{LinearStepper, OAnsatz};
pub use markov::{markov_qsd_step, MarkovQsdStepper};
pub use memory::{memory_update, MemoryAccumulator};
pub use nonmarkov::{lowering_structure, DissipativeStepper, LoweringStructure, MeasurementStepper};
pub use riccati::{critical_time, solve_f, subcritical_asymptote, FCoefficient, FSeries, RiccatiParams, F_GUARD};

use crate::hilbert::Operator;
use crate::{Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepScheme {
    /// Predictor-corrector (trapezoidal) step; Stratonovich-consistent.
    #[default]
    EulerHeun,
    /// Explicit Euler, kept for convergence diagnostics.
    Euler,
}

/// Reusable buffers so that stepping does not allocate.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    k1: Vec<C64>,
    k2: Vec<C64>,
    pred: Vec<C64>,
}

impl Scratch {
    pub fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self { k1: z.clone(), k2: z.clone(), pred: z }
    }

    fn ensure(&mut self, dim: usize) {
        if self.k1.len() != dim {
            *self = Self::new(dim);
        }
    }
}

/// `<x|A|x> / <x|x>`.
#[inline]
pub(crate) fn expect(op: &Operator, x: &[C64], n2: f64) -> C64 {
    op.sandwich(x) / n2
}

/// One Heun (or Euler) step of `psi += increment(psi)`. The closure receives
/// the stage index (0 at `t`, 1 at `t + dt`), the state and the output buffer.
pub(crate) fn integrate<F>(psi: &mut [C64], scheme: StepScheme, ws: &mut Scratch, mut increment: F)
where
    F: FnMut(usize, &[C64], &mut [C64]),
{
    ws.ensure(psi.len());
    let Scratch { k1, k2, pred } = ws;
    increment(0, psi, k1);
    match scheme {
        StepScheme::Euler => {
            psi.iter_mut().zip(k1.iter()).for_each(|(p, k)| *p += k);
        }
        StepScheme::EulerHeun => {
            pred.iter_mut().zip(psi.iter().zip(k1.iter())).for_each(|(q, (p, k))| *q = p + k);
            increment(1, pred, k2);
            psi.iter_mut()
                .zip(k1.iter().zip(k2.iter()))
                .for_each(|(p, (a, b))| *p += 0.5 * (a + b));
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(crate::Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
