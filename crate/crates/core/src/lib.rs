//! Procedural-fairness auditing of tabular classifiers.
//!
//! The pipeline assigns every row to an intersectional subgroup, explains
//! model predictions with an ensemble of attribution methods, measures how
//! stable those explanations are under local perturbation, and condenses the
//! per-subgroup stabilities into a tail-weighted disparity score (MESD). The
//! [`optimize`] module searches model hyperparameters for a three-way
//! trade-off between utility, demographic parity and that disparity.

pub mod data;
pub mod explain;
pub mod perturb;
pub mod error;
pub mod mesd;
pub mod model;
pub mod objectives;
pub mod optimize;
pub mod seed;
pub mod stability;

pub use error::{Error, Result};
