//! Distribution of the post-combining ratio gamma = X^2 / Y.
//!
//! X = h1^H h1 is the desired-signal quadratic form and
//! Y = h1^H D(s) h1 the interference-plus-noise form, where
//! D(s) = sum_k P_k |s_k|^2 + sigma^2 I. With pairwise distinct desired
//! powers the joint density of (X, Y) is a signed two-branch exponential
//! mixture over ordered antenna pairs, and the CDF of gamma has a closed
//! form per pair. When D is proportional to the identity the ratio collapses
//! to gamma = X / d with X hypoexponential, which is handled as its own
//! variant rather than through the mixture.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::powermodel::SystemConfig;

/// Squared magnitudes of one interferer-symbol assignment together with its
/// probability under the symbol distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfererMagnitudeProfile {
    /// |s_u|^2 for each interferer, in config order.
    pub magnitudes: Vec<f64>,
    /// Weight of this profile in the constellation average.
    pub probability: f64,
}

impl InterfererMagnitudeProfile {
    /// Constant-modulus profile: every interferer at |s|^2 = 1.
    pub fn unit(n_interferers: usize) -> Self {
        Self {
            magnitudes: vec![1.0; n_interferers],
            probability: 1.0,
        }
    }
}

/// Coefficients of one ordered antenna pair (i, k) in the mixture expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCoefficients {
    pub i: usize,
    pub k: usize,
    pub xi: f64,
    /// Sign selects the analytic branch; never zero for a retained pair.
    pub beta: f64,
    pub omega: f64,
    pub alpha: f64,
}

/// The full per-profile coefficient set: desired powers, the diagonal
/// Q_i = P_i1 * D_i, and the retained ordered pairs.
///
/// Pairs whose antennas see an exactly tied interference-plus-noise profile
/// (D_i = D_k, so beta would be infinite) contribute zero in the limit and
/// are dropped; the remaining pairs reproduce the exact distribution of the
/// tied configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCoefficients {
    pub n_r: usize,
    /// Desired powers P_i1.
    pub p1: Vec<f64>,
    /// Q_i = P_i1 * D_i.
    pub q: Vec<f64>,
    /// D_i = sum_u P_iu |s_u|^2 + sigma^2.
    pub d: Vec<f64>,
    pub pairs: Vec<PairCoefficients>,
}

impl MixtureCoefficients {
    /// Slope Q_i / P_i1 = D_i of the support boundary line for antenna i.
    pub fn slope(&self, i: usize) -> f64 {
        self.d[i]
    }
}

/// Interference-plus-noise level per antenna for a magnitude profile.
pub(crate) fn interference_levels(
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
) -> Result<Vec<f64>> {
    if profile.magnitudes.len() != config.interferers.len() {
        return Err(Error::InvalidParameter(format!(
            "profile has {} magnitudes for {} interferers",
            profile.magnitudes.len(),
            config.interferers.len()
        )));
    }
    let n_r = config.n_antennas();
    Ok((0..n_r)
        .map(|i| {
            let cci: f64 = config
                .interferers
                .iter()
                .zip(&profile.magnitudes)
                .map(|(m, &s2)| m.entries[i] * s2)
                .sum();
            cci + config.noise_power
        })
        .collect())
}

/// Compute the mixture coefficients for one interferer-magnitude profile.
///
/// Requires pairwise distinct desired powers (perturb first if co-located)
/// and positive interference-plus-noise on every antenna. Fails with a
/// degenerate-interference error when D is uniform across all antennas; use
/// [`gamma_law`] to dispatch that case to the exact uniform reduction.
pub fn mixture_coefficients(
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
) -> Result<MixtureCoefficients> {
    let n_r = config.n_antennas();
    if n_r < 2 {
        return Err(Error::InvalidParameter(
            "mixture form needs at least 2 antennas".into(),
        ));
    }
    let groups = config.coincident_desired_groups();
    if !groups.is_empty() {
        return Err(Error::CoincidentPowers {
            antennas: groups.concat(),
        });
    }
    let d = interference_levels(config, profile)?;
    if d.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "interference plus noise must be positive and finite at every antenna".into(),
        ));
    }
    if d.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateInterference {
            antennas: (0..n_r).collect(),
        });
    }

    let p1 = config.desired.entries.clone();
    let q: Vec<f64> = p1.iter().zip(&d).map(|(p, dd)| p * dd).collect();
    let nu = |i: usize, k: usize| p1[i] - p1[k];
    // upsilon_ik = P_i1 Q_k - Q_i P_k1 = P_i1 P_k1 (D_k - D_i); the
    // difference form makes exact profile ties give exactly zero
    let upsilon = |i: usize, k: usize| p1[i] * p1[k] * (d[k] - d[i]);

    let mut pairs = Vec::with_capacity(n_r * (n_r - 1));
    for i in 0..n_r {
        for k in 0..n_r {
            if k == i {
                continue;
            }
            let ups_ik = upsilon(i, k);
            if ups_ik == 0.0 {
                // tied interference profile: this pair's contribution
                // vanishes in the D_k -> D_i limit
                continue;
            }
            let nu_ik = nu(i, k);
            let mut denom = 1.0;
            for l in 0..n_r {
                if l == i || l == k {
                    continue;
                }
                let lhs = ups_ik * nu(i, l);
                let rhs = nu_ik * upsilon(i, l);
                let factor = lhs - rhs;
                if factor.abs() < 1e-9 * lhs.abs().max(rhs.abs()) {
                    return Err(Error::NearSingular { i, k, l });
                }
                denom *= factor;
            }
            let xi = p1[i].powi(n_r as i32 - 2) * ups_ik.powi(n_r as i32 - 3) / denom;
            let beta = nu_ik / ups_ik;
            let omega = (1.0 - beta * q[i]) / p1[i];
            let alpha = q[i] / p1[i] + omega / (2.0 * beta);
            if !xi.is_finite() || !beta.is_finite() || !omega.is_finite() || !alpha.is_finite() {
                return Err(Error::Accuracy(format!(
                    "non-finite mixture coefficient at pair ({i}, {k})"
                )));
            }
            pairs.push(PairCoefficients {
                i,
                k,
                xi,
                beta,
                omega,
                alpha,
            });
        }
    }
    Ok(MixtureCoefficients { n_r, p1, q, d, pairs })
}

/// Joint density of (X, Y): the signed two-branch sum over retained pairs.
/// Zero for x < 0 or y < 0.
pub fn joint_pdf(x: f64, y: f64, coeffs: &MixtureCoefficients) -> f64 {
    if x < 0.0 || y < 0.0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for pair in &coeffs.pairs {
        let p = coeffs.p1[pair.i];
        let q = coeffs.q[pair.i];
        let edge = y - q * x / p;
        let active = if pair.beta > 0.0 {
            edge > 0.0
        } else {
            edge < 0.0
        };
        if !active {
            continue;
        }
        let sign = if pair.beta > 0.0 { 1.0 } else { -1.0 };
        acc.add(sign * pair.xi * (-x / p - pair.beta * edge).exp());
    }
    acc.value()
}

/// Closed-form CDF of gamma at r >= 0 for a fixed magnitude profile.
///
/// Internally everything is evaluated through scaled error functions so no
/// intermediate overflows for r up to 1e12 and beyond. The signed pair terms
/// are combined with compensated summation and the result clamped to [0, 1];
/// an excursion beyond 1e-9 outside that interval reports an accuracy error.
pub fn gamma_cdf(r: f64, coeffs: &MixtureCoefficients) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(
            "gamma_cdf requires r >= 0".into(),
        ));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let mut acc = CompensatedSum::new();
    for pair in &coeffs.pairs {
        acc.add(cdf_pair_term(r, coeffs, pair));
    }
    clamp_probability(acc.value(), "gamma_cdf")
}

/// One F_ik(r) term, branch chosen by the sign of beta. The common exponent
/// r omega^2/(4 beta) minus the squared erf-family argument collapses to
/// -r Q_i/P_i1^2 in both branches, which is what the scaled-function forms
/// rely on.
fn cdf_pair_term(r: f64, coeffs: &MixtureCoefficients, pair: &PairCoefficients) -> f64 {
    crate::kernel::cdf_pair_term(
        r,
        &crate::kernel::PairTermInputs {
            p: coeffs.p1[pair.i],
            q: coeffs.q[pair.i],
            xi: pair.xi,
            beta: pair.beta,
            omega: pair.omega,
            alpha: pair.alpha,
        },
    )
}

fn clamp_probability(value: f64, what: &str) -> Result<f64> {
    const EXCURSION: f64 = 1e-9;
    if !value.is_finite() || value < -EXCURSION || value > 1.0 + EXCURSION {
        return Err(Error::Accuracy(format!(
            "{what} produced {value}, outside [0, 1] by more than {EXCURSION}"
        )));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Signed Erlang-mixture representation of a sum of exponentials whose
/// means may repeat: the law of X = sum_i Exp(mean p_i) expands over the
/// distinct values v_g (multiplicity m_g) as
/// sum_g sum_{j=1..m_g} A_gj * Erlang(j, scale v_g).
///
/// The coefficients come from the partial fractions of
/// prod_g (1 + v_g s)^(-m_g); repeated means are handled exactly, so no
/// perturbation is ever needed on this path.
#[derive(Debug, Clone, PartialEq)]
pub struct ErlangMixture {
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// coefficients[g][j-1] = A_gj.
    pub coefficients: Vec<Vec<f64>>,
}

impl ErlangMixture {
    /// Build from per-antenna means, grouping exactly equal values.
    pub fn from_means(means: &[f64]) -> Result<Self> {
        if means.is_empty() || means.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "means must be positive and finite".into(),
            ));
        }
        let mut values: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        let mut sorted = means.to_vec();
        sorted.sort_by(f64::total_cmp);
        for &p in &sorted {
            if let Some(last) = values.last() {
                if *last == p {
                    *multiplicities.last_mut().expect("parallel vec") += 1;
                    continue;
                }
            }
            values.push(p);
            multiplicities.push(1);
        }
        // A_{g,m_g-n} = L^(n)(-1/v_g) / (n! v_g^n) with
        // L(s) = prod_{h != g} (1 + v_h s)^(-m_h); the derivatives follow
        // an exp-of-log recursion.
        let mut coefficients = Vec::with_capacity(values.len());
        for (g, &vg) in values.iter().enumerate() {
            let mg = multiplicities[g];
            // log-derivative building blocks t_h = v_h v_g / (v_g - v_h)
            let mut f0 = 1.0;
            let mut ts: Vec<(f64, usize)> = Vec::new();
            for (h, &vh) in values.iter().enumerate() {
                if h == g {
                    continue;
                }
                f0 *= ((vg - vh) / vg).powi(-(multiplicities[h] as i32));
                ts.push((vh * vg / (vg - vh), multiplicities[h]));
            }
            let mut derivs = vec![f0];
            for n in 1..mg {
                // phi^(k) = (-1)^k (k-1)! sum_h m_h t_h^k, Leibniz combine
                let mut sum = 0.0;
                let mut binom = 1.0; // C(n-1, k-1)
                let mut fact = 1.0; // (k-1)!
                for k in 1..=n {
                    if k > 1 {
                        binom *= (n - k + 1) as f64 / (k - 1) as f64;
                        fact *= (k - 1) as f64;
                    }
                    let phi_k: f64 = ts
                        .iter()
                        .map(|&(t, m)| m as f64 * t.powi(k as i32))
                        .sum::<f64>()
                        * fact
                        * if k % 2 == 0 { 1.0 } else { -1.0 };
                    sum += binom * phi_k * derivs[n - k];
                }
                derivs.push(sum);
            }
            let mut coeffs = vec![0.0; mg];
            let mut n_fact = 1.0;
            for (n, &f_n) in derivs.iter().enumerate() {
                if n > 0 {
                    n_fact *= n as f64;
                }
                coeffs[mg - 1 - n] = f_n / (n_fact * vg.powi(n as i32));
            }
            coefficients.push(coeffs);
        }
        Ok(Self {
            values,
            multiplicities,
            coefficients,
        })
    }

    /// CDF of the represented sum at x >= 0.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (g, coeffs) in self.coefficients.iter().enumerate() {
            let z = x / self.values[g];
            for (j, &a) in coeffs.iter().enumerate() {
                acc.add(a * regularized_gamma_p(j + 1, z));
            }
        }
        acc.value()
    }
}

/// P(j, z) for integer j: the Erlang-j CDF 1 - e^{-z} sum_{i<j} z^i/i!.
fn regularized_gamma_p(j: usize, z: f64) -> f64 {
    let mut tail = 0.0;
    let mut term = 1.0;
    for i in 0..j {
        if i > 0 {
            term *= z / i as f64;
        }
        tail += term;
    }
    1.0 - (-z).exp() * tail
}

/// The law of gamma for one magnitude profile: either the general mixture
/// form or the exact uniform reduction gamma = X / d.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaLaw {
    Mixture(MixtureCoefficients),
    /// D(s) = d * I: gamma = X / d with X a (possibly repeated-mean) sum of
    /// exponentials.
    Uniform { mixture: ErlangMixture, d: f64 },
}

/// Analyze a config-profile pair and build the appropriate law.
pub fn gamma_law(
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
) -> Result<GammaLaw> {
    let d = interference_levels(config, profile)?;
    if d.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "interference plus noise must be positive and finite at every antenna".into(),
        ));
    }
    if config.n_antennas() == 1 || d.windows(2).all(|w| w[0] == w[1]) {
        Ok(GammaLaw::Uniform {
            mixture: ErlangMixture::from_means(&config.desired.entries)?,
            d: d[0],
        })
    } else {
        Ok(GammaLaw::Mixture(mixture_coefficients(config, profile)?))
    }
}

impl GammaLaw {
    /// CDF of gamma at r >= 0.
    pub fn cdf(&self, r: f64) -> Result<f64> {
        match self {
            GammaLaw::Mixture(coeffs) => gamma_cdf(r, coeffs),
            GammaLaw::Uniform { mixture, d } => {
                if !(r >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "gamma_cdf requires r >= 0".into(),
                    ));
                }
                clamp_probability(mixture.cdf(r * d), "uniform gamma cdf")
            }
        }
    }
}

/// Outage probability Pr(gamma < threshold), averaged over the supplied
/// magnitude profiles (callers enumerate constellation profiles; pass one
/// unit profile for constant-modulus interferers). Degenerate profiles are
/// resolved through the perturbation series at the default epsilon.
pub fn outage_probability(
    config: &SystemConfig,
    profiles: &[InterfererMagnitudeProfile],
    threshold: f64,
) -> Result<f64> {
    if threshold <= 0.0 {
        return Ok(0.0);
    }
    if threshold.is_infinite() {
        return Ok(1.0);
    }
    let mut acc = CompensatedSum::new();
    let mut weight = 0.0;
    for profile in profiles {
        let cdf = match gamma_law(config, profile).and_then(|law| law.cdf(threshold)) {
            Ok(v) => v,
            Err(Error::CoincidentPowers { .. }) | Err(Error::NearSingular { .. }) => {
                let series = crate::limits::w_series(
                    0.0,
                    1.0,
                    config,
                    profile,
                    crate::limits::WKind::Cdf(threshold),
                )?;
                series
                    .at(crate::ser_analytic::DEFAULT_EPSILON_REL)
                    .clamp(0.0, 1.0)
            }
            Err(e) => return Err(e),
        };
        acc.add(profile.probability * cdf);
        weight += profile.probability;
    }
    if (weight - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "profile probabilities sum to {weight}, expected 1"
        )));
    }
    clamp_probability(acc.value(), "outage_probability")
}
