//! Power matrices and scenario parameterizations.
//!
//! A macrodiversity link is described entirely by the per-source diagonal
//! power matrices (one average link power per receive antenna) plus the
//! noise power. This module builds, validates, normalizes and perturbs those
//! matrices; everything downstream is a pure function of a [`SystemConfig`].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Diagonal per-link average power matrix of one source: entry `i` is the
/// average power received at antenna `i` from this source, linear scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMatrix {
    pub entries: Vec<f64>,
    pub source_id: String,
}

impl PowerMatrix {
    pub fn new(entries: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter(
                "power matrix needs at least one antenna".into(),
            ));
        }
        if entries.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "power matrix entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            entries,
            source_id: source_id.into(),
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.entries.len()
    }

    /// Sum of the diagonal entries.
    pub fn trace(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn zero(n_r: usize, source_id: impl Into<String>) -> Self {
        Self {
            entries: vec![0.0; n_r],
            source_id: source_id.into(),
        }
    }
}

/// Normalization metadata kept when a config is built from scenario
/// parameters, so that the scenario can be recovered from the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioNormalization {
    pub trace_convention: f64,
    pub rho_db: f64,
    pub varsigma: f64,
}

/// Full system description: desired-source powers, interferer powers and the
/// noise level. `sigma2 = 0` is allowed and means error-floor evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub desired: PowerMatrix,
    pub interferers: Vec<PowerMatrix>,
    pub noise_power: f64,
    #[serde(default)]
    pub normalization: Option<ScenarioNormalization>,
}

impl SystemConfig {
    pub fn new(
        desired: PowerMatrix,
        interferers: Vec<PowerMatrix>,
        noise_power: f64,
    ) -> Result<Self> {
        if !noise_power.is_finite() || noise_power < 0.0 {
            return Err(Error::InvalidParameter(
                "noise power must be finite and nonnegative".into(),
            ));
        }
        let n_r = desired.n_antennas();
        if desired.entries.iter().any(|p| *p <= 0.0) {
            return Err(Error::InvalidParameter(
                "desired-source powers must all be positive".into(),
            ));
        }
        for m in &interferers {
            if m.n_antennas() != n_r {
                return Err(Error::InvalidParameter(format!(
                    "interferer '{}' has {} antennas, expected {}",
                    m.source_id,
                    m.n_antennas(),
                    n_r
                )));
            }
        }
        Ok(Self {
            desired,
            interferers,
            noise_power,
            normalization: None,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.desired.n_antennas()
    }

    /// Indices of antennas grouped by exactly equal desired power, groups of
    /// size >= 2 only.
    pub fn coincident_desired_groups(&self) -> Vec<Vec<usize>> {
        equal_groups(&self.desired.entries)
    }

    /// True when the closed forms can run without perturbation.
    pub fn has_distinct_desired_powers(&self) -> bool {
        self.coincident_desired_groups().is_empty()
    }
}

/// Groups of indices (size >= 2) whose values compare exactly equal.
fn equal_groups(values: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut groups = Vec::new();
    let mut current = vec![order[0]];
    for w in order.windows(2) {
        if values[w[1]] == values[w[0]] {
            current.push(w[1]);
        } else {
            if current.len() > 1 {
                current.sort_unstable();
                groups.push(std::mem::take(&mut current));
            }
            current = vec![w[1]];
        }
    }
    if current.len() > 1 {
        current.sort_unstable();
        groups.push(current);
    }
    groups
}

/// Scenario parameterization: average received SNR, total
/// signal-to-interference ratio and exponential decay parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Average received SNR in dB; `f64::INFINITY` selects the error-floor
    /// configuration (zero noise).
    pub rho_db: f64,
    /// Total signal-to-interference ratio Tr(P1)/Tr(P2), linear.
    pub varsigma: f64,
    pub alpha_desired: f64,
    pub alpha_interferer: f64,
    pub n_r: usize,
    /// Desired-source trace; defaults to n_r.
    pub trace_norm: Option<f64>,
    /// Antennas per location (> 1 for co-located receive antennas); the
    /// exponential profile runs over locations and repeats within each.
    #[serde(default = "default_one")]
    pub antennas_per_location: usize,
}

fn default_one() -> usize {
    1
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_desired > 0.0) || !(self.alpha_interferer > 0.0) {
            return Err(Error::InvalidParameter(
                "exponential decay parameters must be positive".into(),
            ));
        }
        if !(self.varsigma > 0.0) {
            return Err(Error::InvalidParameter(
                "varsigma must be positive".into(),
            ));
        }
        if self.n_r == 0 {
            return Err(Error::InvalidParameter("n_r must be at least 1".into()));
        }
        if self.rho_db.is_nan() {
            return Err(Error::InvalidParameter("rho_db must not be NaN".into()));
        }
        if self.antennas_per_location == 0 || self.n_r % self.antennas_per_location != 0 {
            return Err(Error::InvalidParameter(format!(
                "antennas_per_location {} must divide n_r {}",
                self.antennas_per_location, self.n_r
            )));
        }
        if let Some(t) = self.trace_norm {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(
                    "trace_norm must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.trace_norm.unwrap_or(self.n_r as f64)
    }
}

/// Exponential power profile: entry i is K * alpha^(i-1) with K chosen so the
/// entries sum to `trace`. alpha = 1 is the even (microdiversity) spread;
/// alpha < 1 concentrates power on the first antenna, alpha > 1 on the last.
pub fn exponential_profile(trace: f64, alpha: f64, n_r: usize) -> Result<PowerMatrix> {
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::InvalidParameter("trace must be positive".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter("alpha must be positive".into()));
    }
    if n_r == 0 {
        return Err(Error::InvalidParameter("n_r must be at least 1".into()));
    }
    let geometric: f64 = (0..n_r).map(|i| alpha.powi(i as i32)).sum();
    let k = trace / geometric;
    let entries = (0..n_r).map(|i| k * alpha.powi(i as i32)).collect();
    PowerMatrix::new(entries, "profile")
}

/// Exponential profile over `locations` with `per` co-located antennas each:
/// the level of location j is repeated `per` times and the total still sums
/// to `trace`.
pub fn exponential_profile_grouped(
    trace: f64,
    alpha: f64,
    locations: usize,
    per: usize,
) -> Result<PowerMatrix> {
    if per == 0 {
        return Err(Error::InvalidParameter(
            "antennas per location must be at least 1".into(),
        ));
    }
    let base = exponential_profile(trace / per as f64, alpha, locations)?;
    let mut entries = Vec::with_capacity(locations * per);
    for level in &base.entries {
        for _ in 0..per {
            entries.push(*level);
        }
    }
    PowerMatrix::new(entries, "profile")
}

/// Build a single-interferer config from scenario parameters.
///
/// Conventions: Tr(P1) = trace_norm (default n_r), Tr(P2) = Tr(P1)/varsigma,
/// sigma^2 = Tr(P1) / (n_r * 10^(rho_db/10)). rho_db = inf gives sigma^2 = 0,
/// the error-floor configuration.
pub fn scenario_to_config(params: &ScenarioParams) -> Result<SystemConfig> {
    params.validate()?;
    let trace = params.trace();
    let per = params.antennas_per_location;
    let locations = params.n_r / per;
    let desired = PowerMatrix {
        source_id: "desired".into(),
        ..exponential_profile_grouped(trace, params.alpha_desired, locations, per)?
    };
    let interferer = PowerMatrix {
        source_id: "interferer".into(),
        ..exponential_profile_grouped(
            trace / params.varsigma,
            params.alpha_interferer,
            locations,
            per,
        )?
    };
    let sigma2 = if params.rho_db == f64::INFINITY {
        0.0
    } else {
        trace / (params.n_r as f64 * 10f64.powf(params.rho_db / 10.0))
    };
    let mut config = SystemConfig::new(desired, vec![interferer], sigma2)?;
    config.normalization = Some(ScenarioNormalization {
        trace_convention: trace,
        rho_db: params.rho_db,
        varsigma: params.varsigma,
    });
    Ok(config)
}

/// Entrywise weighted sum of interferer matrices: the single matrix
/// sum_k P_k |s_k|^2 is equivalent to the individual interferers.
pub fn aggregate_interferers(
    interferers: &[PowerMatrix],
    magnitudes: &[f64],
) -> Result<PowerMatrix> {
    if interferers.len() != magnitudes.len() {
        return Err(Error::InvalidParameter(format!(
            "{} interferer matrices but {} magnitudes",
            interferers.len(),
            magnitudes.len()
        )));
    }
    if interferers.is_empty() {
        return Ok(PowerMatrix::zero(0, "aggregate"));
    }
    let n_r = interferers[0].n_antennas();
    let mut entries = vec![0.0; n_r];
    for (m, &w) in interferers.iter().zip(magnitudes) {
        if m.n_antennas() != n_r {
            return Err(Error::InvalidParameter(
                "interferer matrices disagree on antenna count".into(),
            ));
        }
        if !(w >= 0.0) {
            return Err(Error::InvalidParameter(
                "squared magnitudes must be nonnegative".into(),
            ));
        }
        for (e, p) in entries.iter_mut().zip(&m.entries) {
            *e += p * w;
        }
    }
    PowerMatrix::new(entries, "aggregate")
}

/// Replace exactly equal desired powers by slightly offset ones so the
/// distinct-power closed forms apply to co-located antennas.
///
/// A group of m equal desired entries p becomes p, p(1+d), ..., p(1+(m-1)d)
/// with d = epsilon_rel. Non-desired matrices are unchanged: ties in the
/// interference profile make the corresponding mixture pairs vanish in the
/// limit and are handled exactly downstream, so only the desired powers need
/// breaking. Already-distinct configs are returned unchanged.
pub fn perturb_coincident_powers(config: &SystemConfig, epsilon_rel: f64) -> Result<SystemConfig> {
    if !(epsilon_rel > 0.0) || !epsilon_rel.is_finite() {
        return Err(Error::InvalidParameter(
            "epsilon_rel must be positive and finite".into(),
        ));
    }
    let mut out = config.clone();
    for group in config.coincident_desired_groups() {
        for (j, &antenna) in group.iter().enumerate() {
            out.desired.entries[antenna] *= 1.0 + j as f64 * epsilon_rel;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, rel: f64) {
        assert!(
            (a - b).abs() <= rel * b.abs().max(1e-300),
            "{a} vs {b} (rel {})",
            (a - b).abs() / b.abs().max(1e-300)
        );
    }

    #[test]
    fn profile_even_spread() {
        let p = exponential_profile(3.0, 1.0, 3).unwrap();
        assert_eq!(p.entries, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn profile_decaying() {
        // K = 3 / (1 + 1/65 + 1/65^2) = 12675/4291, by exact rational
        // arithmetic
        let p = exponential_profile(3.0, 1.0 / 65.0, 3).unwrap();
        let k = 12675.0 / 4291.0;
        assert_close(p.entries[0], k, 1e-12);
        assert_close(p.entries[1], k / 65.0, 1e-12);
        assert_close(p.entries[2], k / 4225.0, 1e-12);
        assert_close(p.trace(), 3.0, 1e-12);
    }

    #[test]
    fn profile_growing_is_reversal() {
        let up = exponential_profile(3.0, 65.0, 3).unwrap();
        let down = exponential_profile(3.0, 1.0 / 65.0, 3).unwrap();
        for i in 0..3 {
            assert_close(up.entries[i], down.entries[2 - i], 1e-12);
        }
    }

    #[test]
    fn profile_trace_preserved() {
        for &alpha in &[1e-3, 0.3, 1.0, 4.7, 800.0] {
            for n in 1..7 {
                let p = exponential_profile(2.5, alpha, n).unwrap();
                assert_close(p.trace(), 2.5, 1e-12);
            }
        }
    }

    #[test]
    fn profile_rejects_bad_parameters() {
        assert!(exponential_profile(0.0, 1.0, 3).is_err());
        assert!(exponential_profile(-1.0, 1.0, 3).is_err());
        assert!(exponential_profile(3.0, 0.0, 3).is_err());
        assert!(exponential_profile(3.0, 1.0, 0).is_err());
    }

    #[test]
    fn grouped_profile_repeats_levels() {
        let p = exponential_profile_grouped(6.0, 1.0 / 65.0, 3, 2).unwrap();
        assert_eq!(p.n_antennas(), 6);
        assert_eq!(p.entries[0], p.entries[1]);
        assert_eq!(p.entries[2], p.entries[3]);
        assert_close(p.trace(), 6.0, 1e-12);
        // per-location levels match the 3-antenna profile with half the trace
        let base = exponential_profile(3.0, 1.0 / 65.0, 3).unwrap();
        assert_close(p.entries[0], base.entries[0], 1e-12);
    }

    #[test]
    fn scenario_s1() {
        let params = ScenarioParams {
            rho_db: 20.0,
            varsigma: 1.0,
            alpha_desired: 1.0 / 65.0,
            alpha_interferer: 1.0 / 65.0,
            n_r: 3,
            trace_norm: None,
            antennas_per_location: 1,
        };
        let cfg = scenario_to_config(&params).unwrap();
        assert_close(cfg.noise_power, 0.01, 1e-12);
        assert_eq!(cfg.interferers.len(), 1);
        for i in 0..3 {
            assert_close(cfg.interferers[0].entries[i], cfg.desired.entries[i], 1e-12);
        }
    }

    #[test]
    fn scenario_s7_interferer_uniform() {
        let params = ScenarioParams {
            rho_db: 20.0,
            varsigma: 10.0,
            alpha_desired: 1.0 / 65.0,
            alpha_interferer: 1.0,
            n_r: 3,
            trace_norm: None,
            antennas_per_location: 1,
        };
        let cfg = scenario_to_config(&params).unwrap();
        for e in &cfg.interferers[0].entries {
            assert_close(*e, 0.1, 1e-12);
        }
    }

    #[test]
    fn scenario_error_floor() {
        let params = ScenarioParams {
            rho_db: f64::INFINITY,
            varsigma: 1.0,
            alpha_desired: 1.0,
            alpha_interferer: 1.0,
            n_r: 3,
            trace_norm: None,
            antennas_per_location: 1,
        };
        let cfg = scenario_to_config(&params).unwrap();
        assert_eq!(cfg.noise_power, 0.0);
    }

    #[test]
    fn scenario_roundtrip() {
        let params = ScenarioParams {
            rho_db: 17.0,
            varsigma: 12.5,
            alpha_desired: 0.2,
            alpha_interferer: 3.0,
            n_r: 4,
            trace_norm: Some(2.0),
            antennas_per_location: 1,
        };
        let cfg = scenario_to_config(&params).unwrap();
        let rho = cfg.desired.trace() / (4.0 * cfg.noise_power);
        assert_close(10.0 * rho.log10(), 17.0, 1e-12);
        let varsigma = cfg.desired.trace() / cfg.interferers[0].trace();
        assert_close(varsigma, 12.5, 1e-12);
        assert_close(cfg.desired.trace(), 2.0, 1e-12);
    }

    #[test]
    fn aggregate_empty_and_identity() {
        assert_eq!(aggregate_interferers(&[], &[]).unwrap().n_antennas(), 0);
        let p2 = PowerMatrix::new(vec![1.0, 2.0], "i1").unwrap();
        let agg = aggregate_interferers(std::slice::from_ref(&p2), &[1.0]).unwrap();
        assert_eq!(agg.entries, p2.entries);
    }

    #[test]
    fn aggregate_sums_entrywise() {
        let a = PowerMatrix::new(vec![1.0, 2.0], "a").unwrap();
        let b = PowerMatrix::new(vec![3.0, 4.0], "b").unwrap();
        let agg = aggregate_interferers(&[a, b], &[1.0, 1.0]).unwrap();
        assert_eq!(agg.entries, vec![4.0, 6.0]);
    }

    #[test]
    fn aggregate_length_mismatch() {
        let a = PowerMatrix::new(vec![1.0], "a").unwrap();
        assert!(aggregate_interferers(&[a], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn perturb_distinct_unchanged() {
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 2.0, 3.0], "d").unwrap(),
            vec![PowerMatrix::new(vec![0.5, 0.25, 0.125], "i").unwrap()],
            0.1,
        )
        .unwrap();
        let out = perturb_coincident_powers(&cfg, 1e-5).unwrap();
        assert_eq!(out, cfg);
    }

    #[test]
    fn perturb_pair() {
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 1.0], "d").unwrap(),
            vec![],
            1.0,
        )
        .unwrap();
        let out = perturb_coincident_powers(&cfg, 1e-5).unwrap();
        assert_eq!(out.desired.entries, vec![1.0, 1.00001]);
    }

    #[test]
    fn perturb_colocated_pairs_six_antennas() {
        let params = ScenarioParams {
            rho_db: 20.0,
            varsigma: 20.0,
            alpha_desired: 1.0 / 65.0,
            alpha_interferer: 1.0 / 65.0,
            n_r: 6,
            trace_norm: None,
            antennas_per_location: 2,
        };
        let cfg = scenario_to_config(&params).unwrap();
        let out = perturb_coincident_powers(&cfg, 1e-5).unwrap();
        // all six desired powers pairwise distinct
        let mut d = out.desired.entries.clone();
        d.sort_by(f64::total_cmp);
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        // non-desired matrices unchanged
        assert_eq!(out.interferers, cfg.interferers);
        // trace moved by at most eps * (n_r - 1) * max entry
        let moved = (out.desired.trace() - cfg.desired.trace()).abs();
        assert!(moved <= 1e-5 * 5.0 * 3.0);
    }

    #[test]
    fn perturb_idempotent() {
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 1.0, 1.0, 2.0], "d").unwrap(),
            vec![PowerMatrix::new(vec![0.3, 0.3, 0.1, 0.1], "i").unwrap()],
            0.0,
        )
        .unwrap();
        let once = perturb_coincident_powers(&cfg, 1e-5).unwrap();
        let twice = perturb_coincident_powers(&once, 1e-5).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn perturb_rejects_bad_epsilon() {
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0], "d").unwrap(),
            vec![],
            1.0,
        )
        .unwrap();
        assert!(perturb_coincident_powers(&cfg, 0.0).is_err());
        assert!(perturb_coincident_powers(&cfg, -1.0).is_err());
    }
}
