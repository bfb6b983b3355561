//! Closed-form symbol error rates, error floors and the two fundamental
//! probability integrals behind the Q^2 expectation.
//!
//! The SER of every supported modulation is a combination of
//! W1(a, b) = E{a Q(sqrt(b gamma))} and W2(a, b) = E{a Q^2(sqrt(b gamma))},
//! each averaged over the interferer symbol magnitudes. Both expectations
//! reduce per mixture pair to elementary functions plus the integrals
//! I1 and I2 evaluated here. When the interference-plus-noise profile is
//! uniform, gamma is a scaled hypoexponential variable and the per-branch
//! Rayleigh results are used instead.

use crate::error::{Error, Result};
use crate::gamma_dist::{
    gamma_law, interference_levels, GammaLaw, InterfererMagnitudeProfile, MixtureCoefficients,
    PairCoefficients,
};
use crate::limits::{w_series, EpsSeries, WKind};
use crate::numeric::CompensatedSum;
use crate::powermodel::{scenario_to_config, ScenarioParams, SystemConfig};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Default relative perturbation for co-located powers.
pub const DEFAULT_EPSILON_REL: f64 = 1e-5;

/// Default cap on the interferer-symbol enumeration.
pub const DEFAULT_PROFILE_CAP: usize = 4096;


// ---------------------------------------------------------------------------
// The two fundamental probability integrals
// ---------------------------------------------------------------------------

/// I1(alpha, beta) = integral_0^inf x exp(-beta x^2) Q(x) erfi(alpha x) dx,
/// the real value of the corresponding complex-argument integral.
///
/// Exists for 1 + 2 beta > 2 alpha^2; odd in alpha. The removable beta = 0
/// point is evaluated by a local expansion.
pub fn integral_i1(alpha: f64, beta: f64) -> Result<f64> {
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidParameter(
            "integral_i1 needs finite arguments".into(),
        ));
    }
    crate::kernel::integral_i1_t(alpha, beta)
}

/// I2(alpha, beta) = integral_0^inf x exp(beta x^2) Q(x) (1 - Phi(alpha x)) dx.
///
/// Exists for 1 + 2 alpha^2 > 2 beta and alpha >= 0. The alpha^2 = beta and
/// 2 beta = 1 special cases of the published closed form are ordinary points
/// of the shared kernel; the removable beta = 0 point is expanded locally.
pub fn integral_i2(alpha: f64, beta: f64) -> Result<f64> {
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidParameter(
            "integral_i2 needs finite arguments".into(),
        ));
    }
    if alpha < 0.0 {
        return Err(Error::InvalidParameter(
            "integral_i2 requires alpha >= 0".into(),
        ));
    }
    if alpha == 0.0 {
        if 1.0 <= 2.0 * beta {
            return Err(Error::OutOfRegion {
                alpha,
                beta,
                region: "1 + 2 alpha^2 > 2 beta",
            });
        }
        // (1/(4 beta)) ((1-2 beta)^{-1/2} - 1), stable via log1p/expm1
        if beta == 0.0 {
            return Ok(0.25);
        }
        return Ok((-0.5 * (-2.0 * beta).ln_1p()).exp_m1() / (4.0 * beta));
    }
    crate::kernel::integral_i2_t(alpha, beta)
}

// ---------------------------------------------------------------------------
// Modulations
// ---------------------------------------------------------------------------

/// Constellation descriptor. Square QAM is restricted to orders whose
/// per-axis alphabet is the standard odd-integer grid (4, 16, 64, 256).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    SquareQam { m: u32 },
}

/// Coefficients of SER = q.0 * E{Q(sqrt(q.1 gamma))} - q2.0 * E{Q^2(sqrt(q2.1 gamma))}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerCoefficients {
    pub q: (f64, f64),
    pub q_squared: Option<(f64, f64)>,
}

impl Modulation {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" | "4qam" | "qam4" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::SquareQam { m: 16 }),
            "64qam" | "qam64" => Ok(Modulation::SquareQam { m: 64 }),
            "256qam" | "qam256" => Ok(Modulation::SquareQam { m: 256 }),
            other => Err(Error::InvalidParameter(format!(
                "unknown modulation '{other}' (expected bpsk, qpsk, 16qam, 64qam or 256qam)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Modulation::Bpsk => "bpsk".into(),
            Modulation::Qpsk => "qpsk".into(),
            Modulation::SquareQam { m } => format!("{m}qam"),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Modulation::SquareQam { m } = self {
            if ![4, 16, 64, 256].contains(m) {
                return Err(Error::InvalidParameter(format!(
                    "square QAM order {m} unsupported (use 4, 16, 64 or 256)"
                )));
            }
        }
        Ok(())
    }

    /// Distinct |s|^2 levels of one symbol with their probabilities.
    /// Unit average symbol energy by construction.
    pub fn magnitude_levels(&self) -> Vec<(f64, f64)> {
        match self {
            Modulation::Bpsk | Modulation::Qpsk => vec![(1.0, 1.0)],
            Modulation::SquareQam { m } => {
                let side = (*m as f64).sqrt() as u32;
                let delta2 = 3.0 / (2.0 * (*m as f64 - 1.0));
                let mut levels: Vec<(u64, f64)> = Vec::new();
                for a in (1..side).step_by(2) {
                    for b in (1..side).step_by(2) {
                        let key = (a * a + b * b) as u64;
                        let w = 4.0 / *m as f64;
                        match levels.iter_mut().find(|(k, _)| *k == key) {
                            Some((_, p)) => *p += w,
                            None => levels.push((key, w)),
                        }
                    }
                }
                levels.sort_by_key(|(k, _)| *k);
                levels
                    .into_iter()
                    .map(|(k, p)| (k as f64 * delta2, p))
                    .collect()
            }
        }
    }

    /// Q / Q^2 coefficient pairs of the exact SER expression.
    pub fn ser_coefficients(&self) -> SerCoefficients {
        match self {
            Modulation::Bpsk => SerCoefficients {
                q: (1.0, 2.0),
                q_squared: None,
            },
            Modulation::Qpsk => SerCoefficients {
                q: (2.0, 1.0),
                q_squared: Some((1.0, 1.0)),
            },
            Modulation::SquareQam { m } => {
                let m = *m as f64;
                let f = 4.0 * (1.0 - 1.0 / m.sqrt());
                let b = 3.0 / (m - 1.0);
                SerCoefficients {
                    q: (f, b),
                    q_squared: Some((f * f / 4.0, b)),
                }
            }
        }
    }

    /// Unit-energy constellation points (for simulation and detection).
    pub fn constellation(&self) -> Vec<Complex64> {
        match self {
            Modulation::Bpsk => vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
            Modulation::Qpsk => {
                let v = FRAC_1_SQRT_2;
                vec![
                    Complex64::new(v, v),
                    Complex64::new(v, -v),
                    Complex64::new(-v, v),
                    Complex64::new(-v, -v),
                ]
            }
            Modulation::SquareQam { m } => {
                let side = (*m as f64).sqrt() as i32;
                let delta = (3.0 / (2.0 * (*m as f64 - 1.0))).sqrt();
                let mut points = Vec::with_capacity(*m as usize);
                for a in (1 - side..side).step_by(2) {
                    for b in (1 - side..side).step_by(2) {
                        points.push(Complex64::new(a as f64 * delta, b as f64 * delta));
                    }
                }
                points
            }
        }
    }
}

// ---------------------------------------------------------------------------
// W1 and W2
// ---------------------------------------------------------------------------

/// One additive contribution to a W sum, tagged by its antenna pair
/// ((i, i) for the per-branch terms of the uniform reduction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerTerm {
    pub i: usize,
    pub k: usize,
    pub contribution: f64,
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter("coefficient a must be >= 0".into()));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter("coefficient b must be > 0".into()));
    }
    Ok(())
}

/// W1(a, b) for one magnitude profile: E{a Q(sqrt(b gamma))}.
pub fn w1(a: f64, b: f64, config: &SystemConfig, profile: &InterfererMagnitudeProfile) -> Result<f64> {
    check_ab(a, b)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let law = gamma_law(config, profile)?;
    let terms = w1_terms(a, b, &law)?;
    finish_w(&terms, a / 2.0, "w1")
}

/// W2(a, b) for one magnitude profile: E{a Q^2(sqrt(b gamma))}.
pub fn w2(a: f64, b: f64, config: &SystemConfig, profile: &InterfererMagnitudeProfile) -> Result<f64> {
    check_ab(a, b)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let law = gamma_law(config, profile)?;
    let terms = w2_terms(a, b, &law)?;
    finish_w(&terms, a / 4.0, "w2")
}

fn finish_w(terms: &[SerTerm], upper: f64, what: &str) -> Result<f64> {
    let sum: CompensatedSum = terms.iter().map(|t| t.contribution).collect();
    let value = sum.value();
    const EXCURSION: f64 = 1e-9;
    if !value.is_finite() || value < -EXCURSION || value > upper * (1.0 + 1e-9) + EXCURSION {
        return Err(Error::Accuracy(format!(
            "{what} produced {value}, outside [0, {upper}]"
        )));
    }
    Ok(value.clamp(0.0, upper))
}

fn w1_terms(a: f64, b: f64, law: &GammaLaw) -> Result<Vec<SerTerm>> {
    match law {
        GammaLaw::Mixture(coeffs) => Ok(coeffs
            .pairs
            .iter()
            .map(|pair| SerTerm {
                i: pair.i,
                k: pair.k,
                contribution: w1_pair_term(a, b, coeffs, pair),
            })
            .collect()),
        GammaLaw::Uniform { mixture, d } => {
            // E{Q(sqrt(b G_j / d))} for G_j ~ Erlang(j, v):
            // 1/2 - (1/(2 sqrt2)) sum_{i<j} k^i (2i-1)!!/(i! 2^i) s^{-i-1/2},
            // k = d/(b v), s = 1/2 + k (the j = 1 case is the per-branch
            // Rayleigh result)
            let mut terms = Vec::new();
            for (g, coeffs) in mixture.coefficients.iter().enumerate() {
                let v = mixture.values[g];
                let k = d / (b * v);
                let s = 0.5 + k;
                let mut inner = 0.0;
                let mut c = 1.0 / s.sqrt();
                for (j, &weight) in coeffs.iter().enumerate() {
                    inner += c;
                    terms.push(SerTerm {
                        i: g,
                        k: j + 1,
                        contribution: a * weight * (0.5 - 0.5 * FRAC_1_SQRT_2 * inner),
                    });
                    c *= k * (2 * j + 1) as f64 / (2.0 * (j + 1) as f64 * s);
                }
            }
            Ok(terms)
        }
    }
}

fn pair_inputs(coeffs: &MixtureCoefficients, pair: &PairCoefficients) -> crate::kernel::PairTermInputs<f64> {
    crate::kernel::PairTermInputs {
        p: coeffs.p1[pair.i],
        q: coeffs.q[pair.i],
        xi: pair.xi,
        beta: pair.beta,
        omega: pair.omega,
        alpha: pair.alpha,
    }
}

/// P_s_ik for the Q expectation; branch selected by the sign of beta.
fn w1_pair_term(a: f64, b: f64, coeffs: &MixtureCoefficients, pair: &PairCoefficients) -> f64 {
    crate::kernel::w1_pair_term(a, b, &pair_inputs(coeffs, pair))
}

fn w2_terms(a: f64, b: f64, law: &GammaLaw) -> Result<Vec<SerTerm>> {
    match law {
        GammaLaw::Mixture(coeffs) => coeffs
            .pairs
            .iter()
            .map(|pair| {
                Ok(SerTerm {
                    i: pair.i,
                    k: pair.k,
                    contribution: w2_pair_term(a, b, coeffs, pair)?,
                })
            })
            .collect(),
        GammaLaw::Uniform { mixture, d } => {
            // E{Q^2(sqrt(b G_j / d))} for G_j ~ Erlang(j, v):
            // 1/4 - (1/pi) sum_{i<j} ((-2k)^i / i!) T^(i)(1 + 2k), k = d/(b v)
            let mut terms = Vec::new();
            for (g, coeffs) in mixture.coefficients.iter().enumerate() {
                let v = mixture.values[g];
                let k = d / (b * v);
                let t_derivs = crate::specfun::t_ratio_derivatives(1.0 + 2.0 * k, coeffs.len());
                let mut inner = 0.0;
                let mut c = 1.0; // (-2k)^i / i!
                for (j, &weight) in coeffs.iter().enumerate() {
                    inner += c * t_derivs[j];
                    terms.push(SerTerm {
                        i: g,
                        k: j + 1,
                        contribution: a * weight * (0.25 - inner / PI),
                    });
                    c *= -2.0 * k / (j + 1) as f64;
                }
            }
            Ok(terms)
        }
    }
}

/// P~_s_ik for the Q^2 expectation.
fn w2_pair_term(
    a: f64,
    b: f64,
    coeffs: &MixtureCoefficients,
    pair: &PairCoefficients,
) -> Result<f64> {
    crate::kernel::w2_pair_term(a, b, &pair_inputs(coeffs, pair)).map_err(internal)
}

/// The arguments assembled from valid mixture coefficients always satisfy
/// the integral validity regions; a violation means a coefficient bug.
fn internal(e: Error) -> Error {
    match e {
        Error::OutOfRegion { alpha, beta, region } => Error::InternalConsistency(format!(
            "integral arguments (alpha={alpha}, beta={beta}) left their validity region {region}"
        )),
        other => other,
    }
}

// ---------------------------------------------------------------------------
// Symbol averaging
// ---------------------------------------------------------------------------

/// Enumerate the joint interferer magnitude profiles for `n_interferers`
/// symbols of `modulation`, merging assignments that produce the same
/// interference level vector on this config (equal-power interferers
/// collapse to magnitude multisets).
pub fn enumerate_profiles(
    modulation: &Modulation,
    config: &SystemConfig,
    cap: usize,
) -> Result<Vec<InterfererMagnitudeProfile>> {
    modulation.validate()?;
    let n = config.interferers.len();
    let levels = modulation.magnitude_levels();
    let count = levels.len().checked_pow(n as u32).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::CombinatorialBlowup { count, cap });
    }
    let mut profiles: Vec<InterfererMagnitudeProfile> = vec![InterfererMagnitudeProfile {
        magnitudes: Vec::new(),
        probability: 1.0,
    }];
    for _ in 0..n {
        let mut next = Vec::with_capacity(profiles.len() * levels.len());
        for base in &profiles {
            for (lvl, prob) in &levels {
                let mut mags = base.magnitudes.clone();
                mags.push(*lvl);
                next.push(InterfererMagnitudeProfile {
                    magnitudes: mags,
                    probability: base.probability * prob,
                });
            }
        }
        profiles = next;
    }
    // merge profiles with identical interference level vectors
    let mut merged: Vec<(Vec<f64>, InterfererMagnitudeProfile)> = Vec::new();
    for profile in profiles {
        let d = interference_levels(config, &profile)?;
        match merged.iter_mut().find(|(key, _)| *key == d) {
            Some((_, kept)) => kept.probability += profile.probability,
            None => merged.push((d, profile)),
        }
    }
    Ok(merged.into_iter().map(|(_, p)| p).collect())
}

/// Probability-weighted average of `eval` over the enumerated magnitude
/// profiles. Constant-modulus modulations reduce to a single call.
pub fn average_over_symbols<F>(
    mut eval: F,
    modulation: &Modulation,
    config: &SystemConfig,
) -> Result<f64>
where
    F: FnMut(&InterfererMagnitudeProfile) -> Result<f64>,
{
    let profiles = enumerate_profiles(modulation, config, DEFAULT_PROFILE_CAP)?;
    let mut acc = CompensatedSum::new();
    let mut weight = CompensatedSum::new();
    for profile in &profiles {
        acc.add(profile.probability * eval(profile)?);
        weight.add(profile.probability);
    }
    if (weight.value() - 1.0).abs() > 1e-9 {
        return Err(Error::InternalConsistency(format!(
            "profile probabilities sum to {}",
            weight.value()
        )));
    }
    Ok(acc.value())
}

// ---------------------------------------------------------------------------
// SER assembly
// ---------------------------------------------------------------------------

/// Per-profile contribution to a SER value.
#[derive(Debug, Clone, PartialEq)]
pub struct SerProfileTerm {
    pub magnitudes: Vec<f64>,
    pub probability: f64,
    pub conditional_ser: f64,
    /// Signed per-pair contributions (Q-term minus Q^2-term), summing to
    /// `conditional_ser`.
    pub terms: Vec<SerTerm>,
}

/// SER value with its per-profile and per-pair breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct SerResult {
    pub value: f64,
    pub profiles: Vec<SerProfileTerm>,
}

/// Conditional SER (for a fixed magnitude profile) with its per-pair
/// breakdown, through the closed forms.
fn conditional_ser(
    coeff: &SerCoefficients,
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
) -> Result<(f64, Vec<SerTerm>)> {
    let law = gamma_law(config, profile)?;
    let (aq, bq) = coeff.q;
    let mut terms = w1_terms(aq, bq, &law)?;
    if let Some((aq2, bq2)) = coeff.q_squared {
        for t in w2_terms(aq2, bq2, &law)? {
            terms.push(SerTerm {
                i: t.i,
                k: t.k,
                contribution: -t.contribution,
            });
        }
    }
    let conditional: CompensatedSum = terms.iter().map(|t| t.contribution).collect();
    let conditional = conditional.value();
    if !conditional.is_finite() || conditional < -1e-9 || conditional > 1.0 + 1e-9 {
        return Err(Error::Accuracy(format!(
            "conditional SER {conditional} outside [0, 1]"
        )));
    }
    Ok((conditional.clamp(0.0, 1.0), terms))
}

/// Conditional SER of a degenerate (co-located or pole-collided) profile:
/// the perturbation series when it passes an independent plausibility probe,
/// otherwise a deterministic smooth Monte Carlo estimate of the limit.
///
/// The probe exists because one configuration class (every desired power
/// tied across three or more distinct tied interference levels) makes the
/// series constant term hypersensitive to the f64 representation of the
/// inputs even though each coefficient is computed exactly; in that regime
/// no closed-form evaluation survives double-precision inputs.
enum DegenerateSer {
    Series(EpsSeries),
    MonteCarlo(f64),
}

fn conditional_ser_series(
    coeff: &SerCoefficients,
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
) -> Result<DegenerateSer> {
    let (aq, bq) = coeff.q;
    let w1s = w_series(aq, bq, config, profile, WKind::W1)?;
    let mut c = w1s.c;
    let mut c_log = w1s.c_log;
    if let Some((aq2, bq2)) = coeff.q_squared {
        let w2s = w_series(aq2, bq2, config, profile, WKind::W2)?;
        for (a, b) in c.iter_mut().zip(w2s.c) {
            *a -= b;
        }
        for (a, b) in c_log.iter_mut().zip(w2s.c_log) {
            *a -= b;
        }
    }
    let series = EpsSeries { c, c_log };

    // plausibility probe on the limit value
    let probe = degenerate_mc(coeff, config, profile, 2_000_000)?;
    let tol = 6.0 * probe.1 + 0.03 * probe.0.abs() + 1e-12;
    if (series.limit() - probe.0).abs() <= tol {
        return Ok(DegenerateSer::Series(series));
    }
    let full = degenerate_mc(coeff, config, profile, 96_000_000)?;
    Ok(DegenerateSer::MonteCarlo(full.0))
}

/// Smooth-expectation estimate of the conditional SER with a fixed seed.
fn degenerate_mc(
    coeff: &SerCoefficients,
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
    n: u64,
) -> Result<(f64, f64)> {
    const SEED: u64 = 0x5EED_CAFE;
    let (aq, bq) = coeff.q;
    let e1 = crate::mcsim::smooth_w_estimate(aq, bq, false, config, profile, n, SEED)?;
    let mut mean = e1.mean;
    let mut var = e1.std_err * e1.std_err;
    if let Some((aq2, bq2)) = coeff.q_squared {
        let e2 = crate::mcsim::smooth_w_estimate(aq2, bq2, true, config, profile, n, SEED)?;
        // same seed: the two estimators share samples, so the difference
        // variance is bounded by the sum used here
        mean -= e2.mean;
        var += e2.std_err * e2.std_err;
    }
    Ok((mean, var.sqrt()))
}

/// Exact symbol error rate of `modulation` on `config`.
///
/// Requires pairwise distinct desired powers unless the interference-plus-
/// noise profile is uniform (where ties are handled exactly); otherwise
/// apply [`perturb_coincident_powers`] first or use
/// [`ser_with_perturbation`].
pub fn ser(modulation: &Modulation, config: &SystemConfig) -> Result<SerResult> {
    modulation.validate()?;
    let coeff = modulation.ser_coefficients();
    let profiles = enumerate_profiles(modulation, config, DEFAULT_PROFILE_CAP)?;
    let mut value = CompensatedSum::new();
    let mut out_profiles = Vec::with_capacity(profiles.len());
    for profile in &profiles {
        let (conditional, terms) = conditional_ser(&coeff, config, profile)?;
        value.add(profile.probability * conditional);
        out_profiles.push(SerProfileTerm {
            magnitudes: profile.magnitudes.clone(),
            probability: profile.probability,
            conditional_ser: conditional,
            terms,
        });
    }
    let v = value.value().clamp(0.0, 1.0);
    Ok(SerResult {
        value: v,
        profiles: out_profiles,
    })
}

/// SER with co-located antennas resolved by perturbation.
///
/// Profiles whose closed form degenerates (coincident desired powers on a
/// non-uniform interference profile, or a partial-fraction pole collision)
/// are evaluated as a truncated series in the perturbation parameter and
/// reported at `epsilon_rel`, after checking stability against half the
/// perturbation (relative change < 1e-4).
pub fn ser_with_perturbation(
    modulation: &Modulation,
    config: &SystemConfig,
    epsilon_rel: f64,
) -> Result<SerResult> {
    if !(epsilon_rel > 0.0) || !epsilon_rel.is_finite() {
        return Err(Error::InvalidParameter(
            "epsilon_rel must be positive and finite".into(),
        ));
    }
    modulation.validate()?;
    let coeff = modulation.ser_coefficients();
    let profiles = enumerate_profiles(modulation, config, DEFAULT_PROFILE_CAP)?;
    let mut value = CompensatedSum::new();
    let mut value_half = CompensatedSum::new();
    let mut out_profiles = Vec::with_capacity(profiles.len());
    for profile in &profiles {
        match conditional_ser(&coeff, config, profile) {
            Ok((conditional, terms)) => {
                value.add(profile.probability * conditional);
                value_half.add(profile.probability * conditional);
                out_profiles.push(SerProfileTerm {
                    magnitudes: profile.magnitudes.clone(),
                    probability: profile.probability,
                    conditional_ser: conditional,
                    terms,
                });
            }
            Err(Error::CoincidentPowers { .. }) | Err(Error::NearSingular { .. }) => {
                let (conditional, conditional_half) =
                    match conditional_ser_series(&coeff, config, profile)? {
                        DegenerateSer::Series(series) => (
                            series.at(epsilon_rel).clamp(0.0, 1.0),
                            series.at(epsilon_rel / 2.0).clamp(0.0, 1.0),
                        ),
                        DegenerateSer::MonteCarlo(v) => {
                            let v = v.clamp(0.0, 1.0);
                            (v, v)
                        }
                    };
                value.add(profile.probability * conditional);
                value_half.add(profile.probability * conditional_half);
                out_profiles.push(SerProfileTerm {
                    magnitudes: profile.magnitudes.clone(),
                    probability: profile.probability,
                    conditional_ser: conditional,
                    terms: vec![SerTerm {
                        i: 0,
                        k: 0,
                        contribution: conditional,
                    }],
                });
            }
            Err(e) => return Err(e),
        }
    }
    let v = value.value().clamp(0.0, 1.0);
    let v_half = value_half.value().clamp(0.0, 1.0);
    if (v - v_half).abs() >= 1e-4 * v.abs().max(1e-300) {
        return Err(Error::Accuracy(format!(
            "perturbed SER unstable: {v} at eps vs {v_half} at eps/2"
        )));
    }
    Ok(SerResult {
        value: v,
        profiles: out_profiles,
    })
}

/// Limiting SER as the noise power goes to zero. Zero when there is no
/// interference at all.
pub fn error_floor(modulation: &Modulation, config: &SystemConfig) -> Result<f64> {
    let no_cci = config.interferers.is_empty()
        || config
            .interferers
            .iter()
            .all(|m| m.entries.iter().all(|p| *p == 0.0));
    if no_cci {
        return Ok(0.0);
    }
    let mut floor_config = config.clone();
    floor_config.noise_power = 0.0;
    Ok(ser_with_perturbation(modulation, &floor_config, DEFAULT_EPSILON_REL)?.value)
}

/// Analytic SER across an SNR grid for a scenario; co-located powers are
/// perturbed with the default epsilon.
pub fn ser_curve(
    modulation: &Modulation,
    scenario: &ScenarioParams,
    rho_grid_db: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::with_capacity(rho_grid_db.len());
    for &rho_db in rho_grid_db {
        let params = ScenarioParams {
            rho_db,
            ..scenario.clone()
        };
        let config = scenario_to_config(&params)?;
        let result = ser_with_perturbation(modulation, &config, DEFAULT_EPSILON_REL)?;
        points.push((rho_db, result.value));
    }
    Ok(points)
}
