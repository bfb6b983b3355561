//! Exact and approximate symbol error rates, outage probabilities, error
//! floors and power metrics for maximal-ratio combining receivers in
//! macrodiversity Rayleigh fading with co-channel interference, validated
//! end-to-end by a built-in Monte Carlo link simulator and quadrature
//! references.

pub mod config;
pub mod error;
pub mod gamma_dist;
mod kernel;
mod limits;
pub mod mcsim;
pub mod metrics;
mod numeric;
pub mod oracles;
pub mod powermodel;
pub mod scenarios;
pub mod ser_analytic;
pub mod specfun;

pub use error::{Error, Result};
