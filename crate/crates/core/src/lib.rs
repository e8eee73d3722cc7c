//! Iterative hard thresholding for sparse linear regression when each example
//! may only reveal a limited number of attributes.

pub mod data;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod metrics;
pub mod optim;
pub mod sparse;

pub use error::{Error, Result};
