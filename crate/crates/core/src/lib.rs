//! Log-determinant experiments for Wigner random matrices: ensemble samplers,
//! the tridiagonal beta model, exact determinant moments, resolvent probes and
//! the statistics used to check the limiting laws.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod dense;
pub mod ensembles;
pub mod error;
pub mod experiment;
pub mod moments;
pub mod resolvent;
pub mod seed;
pub mod stats;
pub mod tridiag;

pub use error::{Error, Result};

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
pub use num_complex;
