//! The closed-form mean-SINR power metric and its Monte Carlo companion.

use crate::error::{Error, Result};
use crate::powermodel::SystemConfig;

pub use crate::mcsim::{mc_mean_sinr, MeanEstimate};

/// Trace-formula mean-SINR approximation with its components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub m_p_linear: f64,
    pub m_p_db: f64,
    /// Tr(P1)^2 + Tr(P1^2)
    pub numerator: f64,
    /// Tr(sum_i P1 P_i + sigma^2 P1)
    pub denominator: f64,
}

/// First-order delta-method approximation to the combiner mean SINR:
/// m_p = (Tr(P1)^2 + Tr(P1^2)) / Tr(sum_{i>=2} P1 P_i + sigma^2 P1).
///
/// Fails when the denominator is zero (no interference and no noise).
pub fn mean_sinr_metric(config: &SystemConfig) -> Result<MetricReport> {
    let trace: f64 = config.desired.trace();
    if !(trace > 0.0) {
        return Err(Error::InvalidParameter(
            "desired trace must be positive".into(),
        ));
    }
    let trace_sq: f64 = config.desired.entries.iter().map(|p| p * p).sum();
    let numerator = trace * trace + trace_sq;
    let mut denominator = config.noise_power * trace;
    for interferer in &config.interferers {
        denominator += config
            .desired
            .entries
            .iter()
            .zip(&interferer.entries)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
    if denominator <= 0.0 {
        return Err(Error::UndefinedMetric);
    }
    let m_p_linear = numerator / denominator;
    Ok(MetricReport {
        m_p_linear,
        m_p_db: 10.0 * m_p_linear.log10(),
        numerator,
        denominator,
    })
}
