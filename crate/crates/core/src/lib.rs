//! Federated ridge-penalized logistic regression in which institutions never
//! reveal their per-site summary statistics.
//!
//! Each institution computes the Hessian, score and deviance of its own
//! records at the current coefficients, encodes them as fixed-point field
//! elements and splits them with Shamir's `t`-of-`w` scheme across `w`
//! computation centers. Centers add shares locally, and any `t` of them can
//! reconstruct the global sums needed for a Newton step. Fewer than `t`
//! centers see only uniformly distributed field elements.
//!
//! ```
//! use secure_logreg::data::{generate_synthetic, SyntheticSpec};
//! use secure_logreg::protocol::{run_protocol, ProtocolConfig};
//!
//! let (sites, _truth) = generate_synthetic(&SyntheticSpec::even(600, 4, 3, 7)).unwrap();
//! let fit = run_protocol(&sites, &ProtocolConfig::default()).unwrap();
//! assert!(fit.model.converged);
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod field;
pub mod fixed_point;
pub mod protocol;
pub mod regression;
pub mod sharing;
pub mod uniformity;

pub use error::{Error, Result};
