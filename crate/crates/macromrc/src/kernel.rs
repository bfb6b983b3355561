//! Scalar-generic closed forms shared by the plain f64 evaluators and the
//! perturbation-limit (series) evaluators.
//!
//! Every per-pair formula — the CDF branches, the Q and Q^2 expectation
//! terms and the two fundamental integrals — is written once against the
//! [`Field`] trait. The f64 implementation delegates to `specfun`; the jet
//! implementation in `limits` reuses the identical formula bodies, which is
//! what keeps the perturbation limits faithful to the production path.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// The scalar arithmetic the closed forms need.
pub(crate) trait Field:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
{
    fn of(x: f64) -> Self;
    /// Value in the eps -> 0+ limit; +-inf when the quantity diverges.
    fn limit(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn atan(self) -> Self;
    fn erfcx_f(self) -> Self;
    fn dawson_f(self) -> Self;
    /// The atan-ratio kernel T.
    fn t_ratio_f(self) -> Self;
    /// order-th derivative of T.
    fn t_deriv_f(self, order: usize) -> Self;
    fn recip(self) -> Self {
        Self::of(1.0) / self
    }
    /// Exactly zero (for f64) or a normalized zero series (for jets); used
    /// to drop tied-profile pairs.
    fn vanishes(&self) -> bool;
    /// Sign as eps -> 0+ (the leading-coefficient sign for jets); selects
    /// the analytic branch.
    fn positive(&self) -> bool;
    /// T(-1 + u) for u in (0, 1): the boundary expansion of the kernel,
    /// which is logarithmic in u. Used where closed-form arguments approach
    /// the domain edge.
    fn t_ratio_boundary(u: Self) -> Self;
}

impl Field for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn limit(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn erfcx_f(self) -> Self {
        crate::specfun::erfcx(self)
    }
    fn dawson_f(self) -> Self {
        crate::specfun::dawson(self)
    }
    fn t_ratio_f(self) -> Self {
        crate::specfun::t_ratio(self)
    }
    fn t_deriv_f(self, order: usize) -> Self {
        crate::specfun::t_ratio_derivatives(self, order)[order]
    }
    fn vanishes(&self) -> bool {
        *self == 0.0
    }
    fn positive(&self) -> bool {
        *self > 0.0
    }
    fn t_ratio_boundary(u: Self) -> Self {
        // T(-1+u) = (2 ln(1+x) - ln u)/(2x), x = sqrt(1-u); stable for
        // small u where atanh(x) would lose digits
        let x = (1.0 - u).sqrt();
        (2.0 * (1.0 + x).ln() - u.ln()) / (2.0 * x)
    }
}

/// Per-pair mixture quantities over a generic scalar.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairTermInputs<T> {
    /// Desired power P_i1 of the leading antenna.
    pub p: T,
    /// Q_i = P_i1 * D_i.
    pub q: T,
    pub xi: T,
    pub beta: T,
    pub omega: T,
    pub alpha: T,
}

/// One F_ik(r) CDF term; the branch follows the sign of beta in the limit.
pub(crate) fn cdf_pair_term<T: Field>(r: f64, t: &PairTermInputs<T>) -> T {
    let rr = T::of(r);
    let log_scale = -(rr * t.q) / (t.p * t.p);
    let head = t.p * t.xi / t.beta * (T::of(1.0) - log_scale.exp());
    if t.beta.positive() {
        // exp(r w^2/4b) (1 - Phi(...)) collapses to e^{-rQ/P^2} erfcx(...)
        let tail = t.xi / (T::of(2.0) * t.beta)
            * ((T::of(PI) * rr) / t.beta).sqrt()
            * log_scale.exp()
            * ((rr * t.beta).sqrt() * t.alpha).erfcx_f();
        head + tail
    } else {
        let m = -t.beta;
        let scaled = log_scale.exp() * ((rr * m).sqrt() * t.alpha).dawson_f();
        let plain = (T::of(0.5) * (rr / m).sqrt() * t.omega).dawson_f();
        head - t.xi / t.beta * (rr / m).sqrt() * (scaled + plain)
    }
}

/// P_s_ik: the Q-expectation term of W1.
pub(crate) fn w1_pair_term<T: Field>(a: f64, b: f64, t: &PairTermInputs<T>) -> T {
    let bb = T::of(b);
    // s = 1/2 + Q/(b P^2) = c^2 + mu exactly
    let s = T::of(0.5) + t.q / (bb * t.p * t.p);
    let head = T::of(a * FRAC_1_SQRT_2)
        * (t.p * t.xi / t.beta)
        * (T::of(FRAC_1_SQRT_2) - T::of(0.5) / s.sqrt());
    if t.beta.positive() {
        // (1 - c/sqrt(s)) / (2 mu), mu = s - c^2, simplifies exactly to
        // 1 / (2 sqrt(s) (sqrt(s) + c)): no cancellation at omega^2 = 2 b beta
        let c = t.alpha * (t.beta / bb).sqrt();
        let g = T::of(0.5) / (s.sqrt() * (s.sqrt() + c));
        head + T::of(a) * t.xi / (T::of(2.0) * t.beta * (T::of(2.0 * b) * t.beta).sqrt()) * g
    } else {
        let m = -t.beta;
        // (1 + mQ) - (1 - mQ)/sqrt(2s), rewritten with a positive numerator
        let mq = m * t.q;
        let two_s = T::of(2.0) * s;
        let numer = T::of(4.0) * mq
            + (T::of(2.0) * t.q / (bb * t.p * t.p)) * (T::of(1.0) + mq) * (T::of(1.0) + mq);
        let denom =
            two_s.sqrt() * ((T::of(1.0) + mq) * two_s.sqrt() + T::of(1.0) - mq);
        let tail_sum = numer / denom / (t.p * (T::of(2.0 * b) * m).sqrt());
        head + T::of(a * FRAC_1_SQRT_2) * (bb / m).sqrt() * t.xi
            / (t.omega * t.omega + T::of(2.0 * b) * m)
            * tail_sum
    }
}

/// P~_s_ik: the Q^2-expectation term of W2.
pub(crate) fn w2_pair_term<T: Field>(a: f64, b: f64, t: &PairTermInputs<T>) -> Result<T> {
    let bb = T::of(b);
    let s = T::of(0.5) + t.q / (bb * t.p * t.p);
    let two_s = T::of(2.0) * s;
    let head = T::of(a * FRAC_1_SQRT_2)
        * (t.p * t.xi / t.beta)
        * (T::of(0.5 * FRAC_1_SQRT_2) - two_s.sqrt().atan() / (T::of(PI) * s.sqrt()));
    // both integral margins collapse onto s: gap = 1 + 2s for the paired
    // arguments and exactly 2 for the omega argument, so no divergent
    // subtraction is ever formed
    let gap_s = T::of(1.0) + two_s;
    let tail = if t.beta.positive() {
        let c = t.alpha * (t.beta / bb).sqrt();
        // second argument c^2 - s equals omega^2/(4 b beta) - 1/2 exactly
        let i2 = integral_i2_gap(c, c * c - s, gap_s)?;
        if std::env::var("MACROMRC_DEBUG_W2").is_ok() {
            let beta_i = c * c - s;
            eprintln!("w2 dbg: alpha={:?}\n  c={c:?}\n  beta_i={beta_i:?}\n  i2={i2:?}", t.alpha);
        }
        T::of(a * FRAC_1_SQRT_2) * t.xi / (t.beta * (bb * t.beta).sqrt()) * i2
    } else {
        let m = -t.beta;
        let s1 = T::of(0.5) + t.omega * t.omega / (T::of(4.0 * b) * m);
        let i1a = integral_i1_gap(t.alpha * (m / bb).sqrt(), s1, gap_s)?;
        let i1b = integral_i1_gap(t.omega / (T::of(2.0) * (bb * m).sqrt()), s1, T::of(2.0))?;
        -(T::of(a * FRAC_1_SQRT_2) * t.xi / (t.beta * (bb * m).sqrt())) * (i1a + i1b)
    };
    Ok(head + tail)
}

/// I1 over a generic scalar; validity 1 + 2 beta > 2 alpha^2, odd in alpha.
/// The f64 entry point derives the region margin by subtraction.
pub(crate) fn integral_i1_t<T: Field>(alpha: T, beta: T) -> Result<T> {
    let gap = T::of(1.0) + T::of(2.0) * beta - T::of(2.0) * alpha * alpha;
    integral_i1_gap(alpha, beta, gap)
}

/// I1 with the validity-region margin gap = 1 + 2 beta - 2 alpha^2 supplied
/// exactly by the caller. Inside the SER formulas the margin collapses
/// analytically (gap = 1 + 2s or exactly 2), so passing it avoids a
/// catastrophic subtraction of divergent arguments.
pub(crate) fn integral_i1_gap<T: Field>(alpha: T, beta: T, gap: T) -> Result<T> {
    if !(gap.limit() > 0.0) {
        return Err(Error::OutOfRegion {
            alpha: alpha.limit(),
            beta: beta.limit(),
            region: "1 + 2 beta > 2 alpha^2",
        });
    }
    if alpha.vanishes() {
        return Ok(T::of(0.0));
    }
    let b_lim = beta.limit();
    let ratio = if b_lim.abs() >= 1e-6 || b_lim.is_infinite() {
        // B/beta with B = T(2(beta - a^2)) - T(y0/g)/g, g = 1 + 2 beta;
        // 2(beta - a^2) = gap - 1 and y0/g = -1 + gap/g exactly
        let g = T::of(1.0) + T::of(2.0) * beta;
        let t1 = (gap - T::of(1.0)).t_ratio_f();
        let u = gap / g;
        let t2 = if u.positive() && u.limit() < 0.5 {
            T::t_ratio_boundary(u)
        } else {
            (u - T::of(1.0)).t_ratio_f()
        };
        (t1 - t2 / g) / beta
    } else {
        // expansion around the removable beta = 0 point
        let a2 = alpha * alpha;
        let y0 = -(T::of(2.0) * a2);
        let t = y0.t_ratio_f();
        let d1 = y0.t_deriv_f(1);
        let d2 = y0.t_deriv_f(2);
        let b1 = T::of(2.0) * (t + (T::of(1.0) + y0) * d1);
        let b2 = T::of(4.0) * (T::of(1.0) - y0 * y0) * d2
            - T::of(8.0) * t
            - T::of(16.0) * y0 * d1;
        b1 + T::of(0.5) * beta * b2
    };
    Ok(T::of(SQRT_2 / (2.0 * PI)) * alpha * ratio)
}

/// I2 over a generic scalar; validity 1 + 2 alpha^2 > 2 beta, alpha > 0
/// (the alpha = 0 boundary is handled by the f64 front end).
pub(crate) fn integral_i2_t<T: Field>(alpha: T, beta: T) -> Result<T> {
    let gap = T::of(1.0) + T::of(2.0) * alpha * alpha - T::of(2.0) * beta;
    integral_i2_gap(alpha, beta, gap)
}

/// I2 with the validity-region margin gap = 1 + 2 alpha^2 - 2 beta supplied
/// exactly by the caller.
pub(crate) fn integral_i2_gap<T: Field>(alpha: T, beta: T, gap: T) -> Result<T> {
    if !(gap.limit() > 0.0) {
        return Err(Error::OutOfRegion {
            alpha: alpha.limit(),
            beta: beta.limit(),
            region: "1 + 2 alpha^2 > 2 beta",
        });
    }
    if alpha.vanishes() {
        return Err(Error::InternalConsistency(
            "integral_i2 kernel requires alpha > 0".into(),
        ));
    }
    let a2 = alpha * alpha;
    let b_lim = beta.limit();
    if b_lim.abs() >= 1e-6 || b_lim.is_infinite() {
        // 2 (a^2 - beta) = gap - 1 and (1 - 2 beta)/(2 a^2) = -1 + gap/(2 a^2)
        let t1 = (gap - T::of(1.0)).t_ratio_f();
        let u = gap / (T::of(2.0) * a2);
        let t2 = if u.positive() && u.limit() < 0.5 {
            T::t_ratio_boundary(u)
        } else {
            (u - T::of(1.0)).t_ratio_f()
        };
        let n = T::of(SQRT_2) * alpha * t1 + t2 / (T::of(SQRT_2) * alpha) - T::of(0.5 * PI);
        Ok(n / (T::of(2.0 * PI) * beta))
    } else {
        let y1 = T::of(2.0) * a2;
        let y2 = (T::of(2.0) * a2).recip();
        let n1 = -(T::of(2.0 * SQRT_2) * alpha * y1.t_deriv_f(1))
            - y2.t_deriv_f(1) / (T::of(SQRT_2) * alpha * a2);
        let n2 = T::of(4.0 * SQRT_2) * alpha * y1.t_deriv_f(2)
            + y2.t_deriv_f(2) / (T::of(SQRT_2) * alpha * a2 * a2);
        Ok((n1 + T::of(0.5) * beta * n2) / T::of(2.0 * PI))
    }
}

