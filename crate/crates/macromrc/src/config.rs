//! Config-file schema (TOML) consumed by the command-line tool and the FFI
//! layer.
//!
//! Powers are given either explicitly (`desired`, `interferers`, `sigma2`)
//! or through a `[scenario]` block (`rho_db`, `varsigma`, `alpha_desired`,
//! `alpha_interferer`, optional `trace_norm` / `antennas_per_location`).
//! dB only appears on user-facing surfaces; everything internal is linear.

use crate::error::{Error, Result};
use crate::powermodel::{scenario_to_config, PowerMatrix, ScenarioParams, SystemConfig};
use crate::ser_analytic::Modulation;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_r: Option<usize>,
    /// Desired-source link powers, linear.
    pub desired: Option<Vec<f64>>,
    /// One row per interferer.
    pub interferers: Option<Vec<Vec<f64>>>,
    /// Noise power, linear; overrides the scenario-derived value.
    pub sigma2: Option<f64>,
    /// bpsk | qpsk | 16qam | 64qam | 256qam
    pub modulation: Option<String>,
    pub perturb_epsilon_rel: Option<f64>,
    pub scenario: Option<ScenarioSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub rho_db: f64,
    pub varsigma: f64,
    pub alpha_desired: f64,
    pub alpha_interferer: f64,
    pub trace_norm: Option<f64>,
    pub antennas_per_location: Option<usize>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config parse: {e}")))
    }

    /// Build the system configuration. Explicit powers win over the
    /// scenario block for the matrices; `sigma2` (if set) overrides the
    /// noise either way.
    pub fn resolve(&self, rho_db_override: Option<f64>) -> Result<SystemConfig> {
        let mut config = if let Some(desired) = &self.desired {
            let n_r = self.n_r.unwrap_or(desired.len());
            if desired.len() != n_r {
                return Err(Error::InvalidParameter(format!(
                    "field 'desired' has {} entries but n_r = {n_r}",
                    desired.len()
                )));
            }
            let interferers = self
                .interferers
                .clone()
                .unwrap_or_default()
                .into_iter()
                .enumerate()
                .map(|(idx, row)| {
                    if row.len() != n_r {
                        return Err(Error::InvalidParameter(format!(
                            "field 'interferers[{idx}]' has {} entries but n_r = {n_r}",
                            row.len()
                        )));
                    }
                    PowerMatrix::new(row, format!("interferer{}", idx + 2))
                })
                .collect::<Result<Vec<_>>>()?;
            let sigma2 = match (self.sigma2, rho_db_override) {
                (_, Some(rho_db)) => {
                    let trace: f64 = desired.iter().sum();
                    trace / (n_r as f64 * 10f64.powf(rho_db / 10.0))
                }
                (Some(s), None) => s,
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "explicit configs need 'sigma2' (or an SNR grid)".into(),
                    ))
                }
            };
            SystemConfig::new(
                PowerMatrix::new(desired.clone(), "desired")?,
                interferers,
                sigma2,
            )?
        } else if let Some(s) = &self.scenario {
            let n_r = self.n_r.ok_or_else(|| {
                Error::InvalidParameter("field 'n_r' is required with [scenario]".into())
            })?;
            let params = ScenarioParams {
                rho_db: rho_db_override.unwrap_or(s.rho_db),
                varsigma: s.varsigma,
                alpha_desired: s.alpha_desired,
                alpha_interferer: s.alpha_interferer,
                n_r,
                trace_norm: s.trace_norm,
                antennas_per_location: s.antennas_per_location.unwrap_or(1),
            };
            let mut cfg = scenario_to_config(&params)?;
            if let Some(sigma2) = self.sigma2 {
                cfg.noise_power = sigma2;
            }
            cfg
        } else {
            return Err(Error::InvalidParameter(
                "config needs either 'desired' or a [scenario] block".into(),
            ));
        };
        config.desired.source_id = "desired".into();
        Ok(config)
    }

    pub fn modulation(&self) -> Result<Option<Modulation>> {
        self.modulation
            .as_deref()
            .map(Modulation::parse)
            .transpose()
    }
}
