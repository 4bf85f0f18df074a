#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
//! Pauli-rotation circuit simulation, linear parameter regression, and
//! kernel-PCA pre-image reconstruction for variational state preparation.

pub mod circuit;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod oracle;
pub mod pathway;
pub mod preimage;
pub mod regression;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StateVector64 = circuit::StateVector<f64>;
pub type StateVector32 = circuit::StateVector<f32>;
pub type ObjectiveSpec64 = pathway::ObjectiveSpec<f64>;
pub type PathwayElement64 = pathway::PathwayElement<f64>;
pub type RegressionModel64 = regression::RegressionModel<f64>;
pub type RegressionModel32 = regression::RegressionModel<f32>;
pub type KernelModel64 = kernel::KernelModel<f64>;
pub type KernelModel32 = kernel::KernelModel<f32>;
pub type PreImageConfig64 = preimage::PreImageConfig<f64>;
