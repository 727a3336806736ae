//! Finite-dimensional Hilbert-space primitives.

mod density;
mod operator;
pub mod qfunction;
mod special;
mod state;

pub use density::{DensityMatrix, Keep};
pub use operator::{annihilation, creation, number, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z, Operator};
pub use qfunction::{q_function, QField, QGrid};
pub use special::{cat_normalization, cat_state, check_truncation, coherent_amplitudes, coherent_state};
pub use state::{StateVector, NORM_FLOOR};

#[allow(unused_imports)]
pub(crate) use state::{norm_sqr, normalize_slice};
