//! Dense linear algebra on row-major `f64` storage and the seeded random source.

mod matrix;
mod rng;

pub use matrix::{
    axpy, frobenius_norm, inner, matmul, matvec, matvec_t, outer, scale, uniform_init, Matrix,
    Shape, Vector,
};
pub use rng::Rng;
