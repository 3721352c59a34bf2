//! Equilibrium outcomes, optimal thresholds, Pareto frontiers and optimality
//! certificates for disclosure policies in a screening model of emissions.
//!
//! Start from [`model::ModelInstance`], call
//! [`canonicalize`](model::ModelInstance::canonicalize), and pass the
//! resulting [`model::CanonicalInstance`] to the other modules.

pub mod certify;
pub mod density;
pub mod error;
pub mod frontier;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod poly;
pub mod policy;
pub mod threshold;

pub use error::{Error, Result};
pub use model::{CanonicalInstance, ModelInstance};
