//! Dense matrices, sign codes, the seeded generator and the scalar helpers
//! the objective is built from.

mod codes;
mod matrix;
mod rng;
mod scalar;

pub use codes::{sign_matrix, CodeMatrix};
pub use matrix::DenseMatrix;
pub use rng::{derive_seed, Rng};
pub use scalar::{sigmoid, softplus, Scalar};
