//! Covariate balance diagnostics for matched observational studies.
//!
//! Imbalance between matched treated and control groups is measured by
//! integral probability metrics over a chosen function class (hyperplanes,
//! partitions, or RKHS balls), and the probability that a matching yields a
//! large covariate-mean discrepancy is bounded in terms of the class's
//! covering exponent. Matching methods: coarsened exact matching,
//! discriminant-score ratio matching, and kernel balancing.

pub mod bounds;
pub mod cem;
pub mod data;
pub mod error;
pub mod io;
pub mod ipm;
pub mod kernel;
pub mod matching;
pub mod numeric;
pub mod oracle;
pub mod propensity;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
