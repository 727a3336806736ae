//! Non-Markovian quantum state diffusion.
//!
//! Stochastic Schrödinger equations driven by colored complex Gaussian noise,
//! Monte Carlo reconstruction of reduced density matrices, and the exact
//! reference solvers the ensembles are checked against.
//!
//! Module map:
//! - [`hilbert`]: states, operators, density matrices, Q-function
//! - [`noise`]: correlation kernels and complex Gaussian path samplers
//! - [`trajectory`]: integrators for the Markov and non-Markovian unravellings
//! - [`ensemble`]: reproducible parallel ensemble driver
//! - [`oracle`]: Lindblad, joint-unitary, pseudomode and Heisenberg-cut references

pub mod ensemble;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod noise;
pub mod oracle;
pub mod trajectory;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
