//! Independent numerical-integration references for the closed forms.
//!
//! Everything here evaluates a defining integral directly by adaptive
//! Gauss-Kronrod quadrature; the only code shared with the closed-form path
//! is the scalar special-function module. The test suite pairs every closed
//! form with one of these references.

use crate::error::{Error, Result};
use crate::gamma_dist::{joint_pdf, GammaLaw, MixtureCoefficients};
use crate::numeric::CompensatedSum;
use crate::specfun::{dawson, erfcx, gaussian_q};
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// How a semi-infinite domain is folded to a finite one before subdivision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainMap {
    /// Integrate [a, b] as given.
    Finite,
    /// x = tan(theta), theta in [0, pi/2); suits Gaussian-tailed integrands.
    Tan,
    /// x = scale * u / (1 - u), u in [0, 1); suits exponential tails with a
    /// known rate (scale ~ 1/rate).
    Rational { scale: f64 },
}

/// Tolerances and budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
    pub map: DomainMap,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-10,
            absolute_tolerance: 1e-14,
            max_subdivisions: 2000,
            map: DomainMap::Finite,
        }
    }
}

impl QuadratureSpec {
    pub fn with_map(map: DomainMap) -> Self {
        Self {
            map,
            ..Self::default()
        }
    }
}

// 15-point Kronrod nodes with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&xg, &wk)) in XGK[..7].iter().zip(WGK[..7].iter()).enumerate() {
        let f1 = f(c - h * xg);
        let f2 = f(c + h * xg);
        kron += wk * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration over pre-split pieces of [a, b]: the piece
/// with the largest error estimate is bisected until the total error meets
/// the tolerance or the subdivision budget is exhausted.
fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    edges: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut heap: BinaryHeap<Segment> = BinaryHeap::new();
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (val, err) = gk15(f, w[0], w[1]);
        heap.push(Segment {
            a: w[0],
            b: w[1],
            val,
            err,
        });
    }
    loop {
        let total_val: f64 = heap.iter().map(|s| s.val).sum();
        let total_err: f64 = heap.iter().map(|s| s.err).sum();
        if total_err
            <= spec
                .absolute_tolerance
                .max(spec.relative_tolerance * total_val.abs())
        {
            let acc: CompensatedSum = heap.iter().map(|s| s.val).collect();
            return Ok(acc.value());
        }
        if heap.len() >= spec.max_subdivisions {
            return Err(Error::OracleFailure(format!(
                "error {total_err:.3e} above tolerance after {} subdivisions",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval at floating-point resolution; accept as converged
            heap.push(Segment {
                err: 0.0,
                ..worst
            });
            continue;
        }
        for (a, b) in [(worst.a, m), (m, worst.b)] {
            let (val, err) = gk15(f, a, b);
            heap.push(Segment { a, b, val, err });
        }
    }
}

/// Integrate f over [0, inf) (or [a, b] for the finite map) using the
/// domain map recorded in `spec`. Interior split points (in the original
/// variable) can be supplied where the integrand has kinks.
pub fn integrate<F: Fn(f64) -> f64>(f: F, splits: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    match spec.map {
        DomainMap::Finite => integrate_pieces(&f, splits, spec),
        DomainMap::Tan => {
            let g = |theta: f64| {
                let c = theta.cos();
                f(theta.tan()) / (c * c)
            };
            let mut edges = vec![0.0];
            for &s in splits {
                if s > 0.0 && s.is_finite() {
                    edges.push(s.atan());
                }
            }
            edges.push(0.5 * PI);
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            integrate_pieces(&g, &edges, spec)
        }
        DomainMap::Rational { scale } => {
            let g = |u: f64| {
                let one_minus = 1.0 - u;
                let x = scale * u / one_minus;
                f(x) * scale / (one_minus * one_minus)
            };
            let mut edges = vec![0.0];
            for &s in splits {
                if s > 0.0 && s.is_finite() {
                    edges.push(s / (s + scale));
                }
            }
            edges.push(1.0);
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            integrate_pieces(&g, &edges, spec)
        }
    }
}

/// CDF of gamma by direct 2-D integration of the joint density over
/// { x >= 0, y >= 0, x^2 < r y }.
///
/// The inner y-integral is split at the support edges y = D_i x and the
/// outer x-integral at the abscissas x = r D_i where the lower boundary
/// crosses them; both tails use the rational map with the natural scales of
/// the density.
pub fn cdf_via_quadrature(r: f64, coeffs: &MixtureCoefficients) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter("r must be >= 0".into()));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let slopes: Vec<f64> = (0..coeffs.n_r).map(|i| coeffs.slope(i)).collect();
    let x_scale = coeffs.p1.iter().sum::<f64>() / coeffs.n_r as f64;
    let y_rate: f64 = coeffs
        .pairs
        .iter()
        .map(|p| p.beta.abs())
        .fold(f64::INFINITY, f64::min);
    let y_scale = (1.0 / y_rate).min(1e6 * x_scale * slopes.iter().sum::<f64>());

    // the acceptance comparison is 1e-8 absolute on a probability; drive
    // the nested integration about an order of magnitude below that
    let inner_spec = QuadratureSpec {
        relative_tolerance: 1e-10,
        absolute_tolerance: 1e-13,
        max_subdivisions: 900,
        map: DomainMap::Rational { scale: y_scale },
    };
    let outer_spec = QuadratureSpec {
        relative_tolerance: 1e-9,
        absolute_tolerance: 2e-9,
        max_subdivisions: 4000,
        map: DomainMap::Rational { scale: x_scale },
    };

    // steepest exponential rate across pairs: the density has boundary
    // layers of width 1/|beta| above each support edge, which plain
    // node-sampled refinement can miss entirely
    let beta_max: f64 = coeffs
        .pairs
        .iter()
        .map(|p| p.beta.abs())
        .fold(1.0, f64::max);
    // above the distribution scale the target is 1 - F, a small number:
    // integrate the complement region { y < x^2 / r } there instead, where
    // the inner intervals are finite and the absolute error budget matches
    // the magnitude
    let gamma_scale = {
        let px: f64 = coeffs.p1.iter().sum();
        let dy: f64 = coeffs
            .p1
            .iter()
            .zip(&coeffs.d)
            .map(|(p, d)| p * d)
            .sum();
        px * px / dy
    };
    let complement = r > gamma_scale;

    let inner = |x: f64| -> f64 {
        let lo = x * x / r;
        let layer_edges = |splits: &mut Vec<f64>, edges: &[f64]| {
            for &edge in edges {
                for k in [0.5, 2.0, 8.0, 32.0] {
                    splits.push(edge + k / beta_max);
                    if edge - k / beta_max > 0.0 {
                        splits.push(edge - k / beta_max);
                    }
                }
            }
        };
        if complement {
            // finite inner range [0, lo]
            let f = |y: f64| joint_pdf(x, y, coeffs);
            let mut splits: Vec<f64> = slopes
                .iter()
                .map(|s| s * x)
                .filter(|y| *y > 0.0 && *y < lo)
                .collect();
            let seed = splits.clone();
            layer_edges(&mut splits, &seed);
            layer_edges(&mut splits, &[0.0, lo]);
            splits.retain(|y| *y > 0.0 && *y < lo);
            splits.push(0.0);
            splits.push(lo);
            splits.sort_by(f64::total_cmp);
            splits.dedup();
            let finite = QuadratureSpec {
                map: DomainMap::Finite,
                ..inner_spec
            };
            integrate(f, &splits, &finite).unwrap_or(f64::NAN)
        } else {
            // integrate y over [lo, inf); shift so the rational map starts
            // at 0
            let f = |t: f64| joint_pdf(x, lo + t, coeffs);
            let mut splits: Vec<f64> = slopes
                .iter()
                .map(|s| s * x - lo)
                .filter(|t| *t > 0.0)
                .collect();
            let seed: Vec<f64> = splits.clone().into_iter().chain([0.0]).collect();
            layer_edges(&mut splits, &seed);
            integrate(f, &splits, &inner_spec).unwrap_or(f64::NAN)
        }
    };
    // the outer integrand inherits x-direction layers of width
    // ~1/(beta slope) after each crossing of the parabola with a support
    // line; seed splits inside them as well
    let slope_scale = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let mut outer_splits: Vec<f64> = slopes.iter().map(|s| s * r).collect();
    for edge in outer_splits.clone().into_iter().chain([0.0]) {
        for k in [0.5, 2.0, 8.0, 32.0] {
            outer_splits.push(edge + k / (beta_max * slope_scale));
            if edge - k / (beta_max * slope_scale) > 0.0 {
                outer_splits.push(edge - k / (beta_max * slope_scale));
            }
        }
    }
    let value = integrate(inner, &outer_splits, &outer_spec)?;
    if value.is_nan() {
        return Err(Error::OracleFailure(
            "inner quadrature failed to converge".into(),
        ));
    }
    Ok(if complement { 1.0 - value } else { value })
}

/// Which CDF feeds the W oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfSource {
    /// Use the closed-form CDF (validated separately against the 2-D
    /// quadrature).
    ClosedForm,
    /// Use [`cdf_via_quadrature`]; fully independent but much slower.
    Quadrature,
}

fn cdf_for(law: &GammaLaw, source: CdfSource, r: f64) -> Result<f64> {
    match (source, law) {
        (CdfSource::Quadrature, GammaLaw::Mixture(coeffs)) => cdf_via_quadrature(r, coeffs),
        _ => law.cdf(r),
    }
}

/// W1 reference: (a / sqrt(2 pi)) * integral_0^inf e^{-w^2/2} F(w^2/b) dw.
pub fn w1_via_quadrature(a: f64, b: f64, law: &GammaLaw, source: CdfSource) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let spec = QuadratureSpec {
        relative_tolerance: 1e-11,
        absolute_tolerance: 1e-16,
        max_subdivisions: 400,
        map: DomainMap::Tan,
    };
    let f = |w: f64| -> f64 {
        let fr = cdf_for(law, source, w * w / b).unwrap_or(f64::NAN);
        (-0.5 * w * w).exp() * fr
    };
    let value = a / (2.0 * PI).sqrt() * integrate(f, &[1.0, 8.0, 40.0], &spec)?;
    if value.is_nan() {
        return Err(Error::OracleFailure("inner CDF failed".into()));
    }
    Ok(value)
}

/// W2 reference: a sqrt(2/pi) * integral_0^inf e^{-w^2/2} Q(w) F(w^2/b) dw.
pub fn w2_via_quadrature(a: f64, b: f64, law: &GammaLaw, source: CdfSource) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let spec = QuadratureSpec {
        relative_tolerance: 1e-11,
        absolute_tolerance: 1e-16,
        max_subdivisions: 400,
        map: DomainMap::Tan,
    };
    let f = |w: f64| -> f64 {
        let fr = cdf_for(law, source, w * w / b).unwrap_or(f64::NAN);
        (-0.5 * w * w).exp() * gaussian_q(w) * fr
    };
    let value = a * (2.0 / PI).sqrt() * integrate(f, &[1.0, 8.0, 40.0], &spec)?;
    if value.is_nan() {
        return Err(Error::OracleFailure("inner CDF failed".into()));
    }
    Ok(value)
}

/// Which fundamental integral to reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralKind {
    I1,
    I2,
}

/// Reference for the fundamental integrals by quadrature of the defining
/// integrands, written in overflow-free scaled form:
///   I1: x (2/sqrt(pi)) dawson(alpha x) * (1/2) erfcx(x/sqrt(2)) * e^{-l x^2},
///       l = 1/2 + beta - alpha^2
///   I2: x (1/2) erfcx(x/sqrt(2)) erfcx(alpha x) * e^{-l x^2},
///       l = 1/2 + alpha^2 - beta
pub fn integral_via_quadrature(kind: IntegralKind, alpha: f64, beta: f64) -> Result<f64> {
    let two_over_sqrt_pi = 2.0 / PI.sqrt();
    let (rate, f): (f64, Box<dyn Fn(f64) -> f64>) = match kind {
        IntegralKind::I1 => {
            let lambda = 0.5 + beta - alpha * alpha;
            if lambda <= 0.0 {
                return Err(Error::OutOfRegion {
                    alpha,
                    beta,
                    region: "1 + 2 beta > 2 alpha^2",
                });
            }
            (
                lambda,
                Box::new(move |x: f64| {
                    x * two_over_sqrt_pi
                        * dawson(alpha * x)
                        * 0.5
                        * erfcx(x / std::f64::consts::SQRT_2)
                        * (-lambda * x * x).exp()
                }),
            )
        }
        IntegralKind::I2 => {
            let lambda = 0.5 + alpha * alpha - beta;
            if lambda <= 0.0 {
                return Err(Error::OutOfRegion {
                    alpha,
                    beta,
                    region: "1 + 2 alpha^2 > 2 beta",
                });
            }
            if alpha < 0.0 {
                return Err(Error::InvalidParameter(
                    "integral_i2 requires alpha >= 0".into(),
                ));
            }
            (
                lambda,
                Box::new(move |x: f64| {
                    x * 0.5
                        * erfcx(x / std::f64::consts::SQRT_2)
                        * erfcx(alpha * x)
                        * (-lambda * x * x).exp()
                }),
            )
        }
    };
    let spec = QuadratureSpec {
        relative_tolerance: 1e-12,
        absolute_tolerance: 1e-18,
        max_subdivisions: 800,
        map: DomainMap::Rational {
            scale: 1.0 / rate.sqrt(),
        },
    };
    integrate(|x| f(x), &[], &spec)
}
