//! Exact perturbation limits via truncated series arithmetic.
//!
//! Co-located antennas make the mixture expansion singular in the
//! perturbation parameter: individual pair terms grow like eps^-k while
//! their sum stays finite, so plain f64 evaluation of a perturbed config
//! loses roughly k digits per tied antenna. This module evaluates the same
//! closed forms over truncated Laurent series in delta = sqrt(eps), where
//! each power of delta lives in its own float slot: the divergent orders
//! cancel slot-by-slot and the finite part comes out at full precision.
//!
//! The output is the SER (or CDF) of the perturbed configuration as a short
//! polynomial in eps, so both the exact eps -> 0 limit and the value at any
//! small eps are available.

use crate::error::{Error, Result};
use crate::gamma_dist::InterfererMagnitudeProfile;
use crate::kernel::{
    cdf_pair_term, w1_pair_term, w2_pair_term, Field, PairTermInputs,
};
use crate::numeric::Dd;
use crate::powermodel::SystemConfig;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Series length: supports tie groups up to six antennas (term valuations
/// down to delta^-10) while retaining the eps^0..eps^2 output orders.
const SLOTS: usize = 16;


/// Truncated log-augmented Laurent series:
/// sum_n coef[n] delta^(val+n) + ln(delta) * sum_n log[n] delta^(val+n).
///
/// The log part appears only through the boundary expansion of the T kernel
/// (the Q^2 expectation near coincident powers has eps^k ln(eps) structure);
/// everything downstream of that expansion is arithmetic, so products never
/// need to multiply two log-carrying jets.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Jet {
    val: i32,
    coef: [Dd; SLOTS],
    log: [Dd; SLOTS],
}

impl Jet {
    fn zero() -> Self {
        Jet {
            val: i32::MAX,
            coef: [Dd::ZERO; SLOTS],
            log: [Dd::ZERO; SLOTS],
        }
    }

    fn is_zero(&self) -> bool {
        self.val == i32::MAX
    }

    fn log_free(&self) -> bool {
        self.log.iter().all(|c| c.is_zero())
    }

    pub(crate) fn constant(c: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        let mut coef = [Dd::ZERO; SLOTS];
        coef[0] = Dd::from_f64(c);
        Jet {
            val: 0,
            coef,
            log: [Dd::ZERO; SLOTS],
        }
    }

    /// c * (1 + j * delta^2): one jittered power entry.
    fn jittered(c: f64, j: usize) -> Self {
        let mut coef = [Dd::ZERO; SLOTS];
        coef[0] = Dd::from_f64(c);
        coef[2] = Dd::from_f64(c).scale(j as f64);
        Jet {
            val: 0,
            coef,
            log: [Dd::ZERO; SLOTS],
        }
    }

    /// Natural log of a log-free jet with positive leading coefficient:
    /// ln(c delta^v (1 + w)) = ln(c) + ln1p-series(w) + v ln(delta).
    fn ln_jet(self) -> Jet {
        assert!(!self.is_zero() && self.log_free(), "ln of zero or log-carrying jet");
        let c0 = self.coef[0];
        assert!(c0.hi() > 0.0, "ln needs a positive leading coefficient");
        // w = self / (c0 delta^val) - 1, valuation > 0
        let mut w = self;
        w.val = 0;
        for c in &mut w.coef {
            *c = c.div(c0);
        }
        w.coef[0] = Dd::ZERO;
        let w = w.normalized();
        // ln(1+w) by Horner over the tail: sum (-1)^(k+1) w^k / k
        let mut acc = Jet::zero();
        for k in (1..SLOTS).rev() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc = (acc + Jet::constant(sign / k as f64)) * w;
        }
        let out = acc + Jet::constant(c0.value().ln());
        // re-anchor at order 0 so the ln(delta) coefficient can be added
        let mut aligned_coef = [Dd::ZERO; SLOTS];
        let mut aligned_log = [Dd::ZERO; SLOTS];
        for i in 0..SLOTS {
            aligned_coef[i] = out.at_order(i as i32);
            aligned_log[i] = out.log_at_order(i as i32);
        }
        aligned_log[0] = aligned_log[0].add(Dd::from_f64(self.val as f64));
        (Jet {
            val: 0,
            coef: aligned_coef,
            log: aligned_log,
        })
        .normalized()
    }

    /// Re-anchor the valuation on the first nonzero coefficient. Only exact
    /// zeros are stripped: coefficients legitimately span many orders of
    /// magnitude across slots, so magnitude-based stripping would corrupt
    /// valuations. Analytic cancellations of equal f64 inputs produce exact
    /// zeros; inexact residues are stripped only at the explicitly guarded
    /// subtraction points below.
    fn normalized(mut self) -> Self {
        if self.is_zero() {
            return self;
        }
        let mut shift = 0;
        while shift < SLOTS && self.coef[shift].is_zero() && self.log[shift].is_zero() {
            shift += 1;
        }
        if shift == SLOTS {
            return Self::zero();
        }
        if shift > 0 {
            self.coef.rotate_left(shift);
            self.log.rotate_left(shift);
            for c in &mut self.coef[SLOTS - shift..] {
                *c = Dd::ZERO;
            }
            for c in &mut self.log[SLOTS - shift..] {
                *c = Dd::ZERO;
            }
            self.val += shift as i32;
        }
        self
    }

    /// Strip leading slots of `self = lhs - rhs` that are cancellation
    /// residue: a slot counts as residue when it is negligible against the
    /// magnitudes that were subtracted to produce it.
    fn strip_residue_against(mut self, lhs: &Jet, rhs: &Jet, rel: f64) -> Self {
        loop {
            if self.is_zero() {
                return self;
            }
            let order = self.val;
            let scale = lhs
                .at_order(order)
                .hi()
                .abs()
                .max(rhs.at_order(order).hi().abs());
            if self.coef[0].hi().abs() > rel * scale {
                return self;
            }
            self.coef[0] = Dd::ZERO;
            self = self.normalized();
        }
    }

    /// Leading coefficient (sign carrier).
    fn lead(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.coef[0].hi()
        }
    }

    /// Coefficient of delta^k in absolute orders.
    fn at_order(&self, k: i32) -> Dd {
        if self.is_zero() {
            return Dd::ZERO;
        }
        let idx = k - self.val;
        if (0..SLOTS as i32).contains(&idx) {
            self.coef[idx as usize]
        } else {
            Dd::ZERO
        }
    }

    /// ln(delta)-part coefficient of delta^k in absolute orders.
    fn log_at_order(&self, k: i32) -> Dd {
        if self.is_zero() {
            return Dd::ZERO;
        }
        let idx = k - self.val;
        if (0..SLOTS as i32).contains(&idx) {
            self.log[idx as usize]
        } else {
            Dd::ZERO
        }
    }

    /// Apply an analytic function through its Taylor coefficients at the
    /// constant term: f(c0 + t) = sum_k taylor[k] t^k, t the tail (val > 0).
    fn compose(self, taylor: &dyn Fn(f64, usize) -> Vec<f64>) -> Jet {
        debug_assert!(self.val == 0, "composition requires a finite constant term");
        assert!(self.log_free(), "composition requires a log-free argument");
        let c0 = self.coef[0].value();
        let mut tail = self;
        tail.coef[0] = Dd::ZERO;
        let tail = tail.normalized();
        let coeffs = taylor(c0, SLOTS - 1);
        // Horner over the tail jet
        let mut acc = Jet::constant(coeffs[SLOTS - 1]);
        for k in (0..SLOTS - 1).rev() {
            acc = acc * tail + Jet::constant(coeffs[k]);
        }
        acc
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let val = self.val.min(rhs.val);
        let mut coef = [Dd::ZERO; SLOTS];
        let mut log = [Dd::ZERO; SLOTS];
        for i in 0..SLOTS {
            let k = val + i as i32;
            coef[i] = self.at_order(k).add(rhs.at_order(k));
            log[i] = self.log_at_order(k).add(rhs.log_at_order(k));
        }
        (Jet { val, coef, log }).normalized()
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for c in &mut self.coef {
            *c = c.neg();
        }
        for c in &mut self.log {
            *c = c.neg();
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        if self.is_zero() || rhs.is_zero() {
            return Jet::zero();
        }
        assert!(
            self.log_free() || rhs.log_free(),
            "product of two log-carrying jets"
        );
        let mut coef = [Dd::ZERO; SLOTS];
        let mut log = [Dd::ZERO; SLOTS];
        for i in 0..SLOTS {
            if !self.coef[i].is_zero() {
                for j in 0..SLOTS - i {
                    coef[i + j] = coef[i + j].add(self.coef[i].mul(rhs.coef[j]));
                    log[i + j] = log[i + j].add(self.coef[i].mul(rhs.log[j]));
                }
            }
            if !self.log[i].is_zero() {
                for j in 0..SLOTS - i {
                    log[i + j] = log[i + j].add(self.log[i].mul(rhs.coef[j]));
                }
            }
        }
        Jet {
            val: self.val + rhs.val,
            coef,
            log,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.reciprocal()
    }
}

impl Jet {
    fn reciprocal(self) -> Jet {
        assert!(!self.is_zero(), "division by zero jet");
        assert!(self.log_free(), "reciprocal of a log-carrying jet");
        let c0 = self.coef[0];
        let mut out = [Dd::ZERO; SLOTS];
        out[0] = Dd::from_f64(1.0).div(c0);
        for n in 1..SLOTS {
            let mut acc = Dd::ZERO;
            for k in 1..=n {
                acc = acc.add(self.coef[k].mul(out[n - k]));
            }
            out[n] = acc.neg().div(c0);
        }
        Jet {
            val: -self.val,
            coef: out,
            log: [Dd::ZERO; SLOTS],
        }
    }
}

impl Field for Jet {
    fn of(x: f64) -> Self {
        Jet::constant(x)
    }

    fn limit(self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        match self.val.cmp(&0) {
            std::cmp::Ordering::Greater => 0.0,
            std::cmp::Ordering::Equal => self.coef[0].value(),
            std::cmp::Ordering::Less => {
                if self.coef[0].hi() > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn sqrt(self) -> Self {
        assert!(!self.is_zero(), "sqrt of zero jet");
        assert!(self.log_free(), "sqrt of a log-carrying jet");
        assert!(self.val % 2 == 0, "sqrt needs an even valuation");
        let c0 = self.coef[0];
        assert!(c0.hi() > 0.0, "sqrt of a negative leading coefficient");
        let s0 = c0.sqrt();
        let two_s0 = s0.scale(2.0);
        let mut out = [Dd::ZERO; SLOTS];
        out[0] = s0;
        for n in 1..SLOTS {
            let mut acc = Dd::ZERO;
            for k in 1..n {
                acc = acc.add(out[k].mul(out[n - k]));
            }
            out[n] = self.coef[n].sub(acc).div(two_s0);
        }
        Jet {
            val: self.val / 2,
            coef: out,
            log: [Dd::ZERO; SLOTS],
        }
    }

    fn exp(self) -> Self {
        if self.is_zero() {
            return Jet::constant(1.0);
        }
        assert!(self.log_free(), "exp of a log-carrying jet");
        assert!(self.val >= 0, "exp of a divergent jet");
        let mut aligned = [Dd::ZERO; SLOTS];
        for (i, a) in aligned.iter_mut().enumerate() {
            *a = self.at_order(i as i32);
        }
        let e0 = aligned[0].value().exp();
        // exp of the tail: e_n = (1/n) sum_{k=1..n} k a_k e_{n-k}
        let mut out = [Dd::ZERO; SLOTS];
        out[0] = Dd::from_f64(1.0);
        for n in 1..SLOTS {
            let mut acc = Dd::ZERO;
            for k in 1..=n {
                acc = acc.add(aligned[k].scale(k as f64).mul(out[n - k]));
            }
            out[n] = acc.scale(1.0 / n as f64);
        }
        for c in &mut out {
            *c = c.scale(e0);
        }
        Jet {
            val: 0,
            coef: out,
            log: [Dd::ZERO; SLOTS],
        }
    }

    fn atan(self) -> Self {
        if self.is_zero() {
            return Jet::zero();
        }
        if self.val < 0 {
            // atan(X) = sign * pi/2 - atan(1/X)
            let sign = if self.lead() > 0.0 { 1.0 } else { -1.0 };
            return Jet::constant(sign * std::f64::consts::FRAC_PI_2)
                - self.reciprocal().atan();
        }
        if self.val > 0 {
            // Taylor at 0 through the composition with constant part 0
            let mut padded = [Dd::ZERO; SLOTS];
            for (i, a) in padded.iter_mut().enumerate() {
                *a = self.at_order(i as i32);
            }
            return (Jet {
                val: 0,
                coef: padded,
                log: [Dd::ZERO; SLOTS],
            })
            .compose(&atan_taylor);
        }
        self.compose(&atan_taylor)
    }

    fn erfcx_f(self) -> Self {
        if self.is_zero() {
            return Jet::constant(1.0);
        }
        if self.val < 0 {
            // asymptotic: erfcx(X) = (1/(X sqrt(pi))) sum_k (-1)^k (2k-1)!!/(2X^2)^k
            assert!(self.lead() > 0.0, "erfcx asymptotic needs X -> +inf");
            let inv = self.reciprocal();
            let inv2 = inv * inv;
            let mut acc = Jet::zero();
            let mut term = Jet::constant(1.0);
            for k in 0..SLOTS {
                acc = acc + term;
                term = term * inv2 * Jet::constant(-((2 * k + 1) as f64) / 2.0);
                if term.is_zero() {
                    break;
                }
            }
            return acc * inv * Jet::constant(1.0 / std::f64::consts::PI.sqrt());
        }
        assert!(self.val == 0, "erfcx of an infinitesimal argument: use Taylor");
        self.compose(&erfcx_taylor)
    }

    fn dawson_f(self) -> Self {
        if self.is_zero() {
            return Jet::zero();
        }
        if self.val < 0 {
            // asymptotic: D(X) = (1/(2X)) sum_k (2k-1)!!/(2X^2)^k
            let inv = self.reciprocal();
            let inv2 = inv * inv;
            let mut acc = Jet::zero();
            let mut term = Jet::constant(1.0);
            for k in 0..SLOTS {
                acc = acc + term;
                term = term * inv2 * Jet::constant((2 * k + 1) as f64 / 2.0);
                if term.is_zero() {
                    break;
                }
            }
            return acc * inv * Jet::constant(0.5);
        }
        if self.val > 0 {
            let mut padded = [Dd::ZERO; SLOTS];
            for (i, a) in padded.iter_mut().enumerate() {
                *a = self.at_order(i as i32);
            }
            return (Jet {
                val: 0,
                coef: padded,
                log: [Dd::ZERO; SLOTS],
            })
            .compose(&dawson_taylor);
        }
        self.compose(&dawson_taylor)
    }

    fn t_ratio_f(self) -> Self {
        self.t_deriv_f(0)
    }

    fn t_deriv_f(self, order: usize) -> Self {
        if self.is_zero() {
            return Jet::constant(crate::specfun::t_ratio_derivatives(0.0, order)[order]);
        }
        if self.val < 0 {
            // T(y) = atan(sqrt(y))/sqrt(y) for y -> +inf, via primitives
            assert!(
                order == 0,
                "derivatives of T at divergent arguments are not needed"
            );
            assert!(self.lead() > 0.0, "T at -inf is outside the domain");
            let root = self.sqrt();
            return root.atan() / root;
        }
        let mut padded = [Dd::ZERO; SLOTS];
        for (i, a) in padded.iter_mut().enumerate() {
            *a = self.at_order(i as i32);
        }
        (Jet {
            val: 0,
            coef: padded,
            log: [Dd::ZERO; SLOTS],
        })
        .compose(&|c0, n| t_deriv_taylor(c0, order, n))
    }

    fn t_ratio_boundary(u: Self) -> Self {
        // T(-1+u) = (2 ln(1+x) - ln(u)) / (2x), x = sqrt(1-u)
        let x = (Jet::constant(1.0) - u).sqrt();
        let two_ln1px = Jet::constant(2.0) * (Jet::constant(1.0) + x).ln_jet();
        (two_ln1px - u.ln_jet()) / (Jet::constant(2.0) * x)
    }

    fn vanishes(&self) -> bool {
        self.is_zero()
    }

    fn positive(&self) -> bool {
        self.lead() > 0.0
    }
}

/// Taylor coefficients of atan at a: from (1+x^2) y'' + 2x y' = 0.
fn atan_taylor(a: f64, n: usize) -> Vec<f64> {
    let w = 1.0 + a * a;
    let mut t = vec![0.0; n + 1];
    t[0] = a.atan();
    if n >= 1 {
        t[1] = 1.0 / w;
    }
    for k in 0..n.saturating_sub(1) {
        let kf = k as f64;
        t[k + 2] = -(2.0 * a * (kf + 1.0) * (kf + 1.0) * t[k + 1] + kf * (kf + 1.0) * t[k])
            / (w * (kf + 2.0) * (kf + 1.0));
    }
    t
}

/// Taylor coefficients of erfcx at a: E^(k+1) = 2x E^(k) + 2k E^(k-1).
fn erfcx_taylor(a: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    t[0] = crate::specfun::erfcx(a);
    if n >= 1 {
        t[1] = 2.0 * a * t[0] - 2.0 / std::f64::consts::PI.sqrt();
    }
    for k in 1..n {
        t[k + 1] = (2.0 * a * t[k] + 2.0 * t[k - 1]) / (k + 1) as f64;
    }
    t
}

/// Taylor coefficients of the Dawson function at a: D' = 1 - 2 x D.
fn dawson_taylor(a: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    t[0] = crate::specfun::dawson(a);
    if n >= 1 {
        t[1] = 1.0 - 2.0 * a * t[0];
    }
    for k in 1..n {
        t[k + 1] = (-2.0 * a * t[k] - 2.0 * t[k - 1]) / (k + 1) as f64;
    }
    t
}

/// Taylor coefficients of T^(order) at a.
fn t_deriv_taylor(a: f64, order: usize, n: usize) -> Vec<f64> {
    let derivs = crate::specfun::t_ratio_derivatives(a, order + n);
    let mut t = Vec::with_capacity(n + 1);
    let mut fact = 1.0;
    for k in 0..=n {
        if k > 0 {
            fact *= k as f64;
        }
        t.push(derivs[order + k] / fact);
    }
    t
}

/// SER-or-CDF contribution of a perturbed configuration as a short
/// expansion in the perturbation parameter eps. Degenerate Q^2 expectations
/// carry eps^k ln(eps) terms, hence the log coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSeries {
    /// coefficients of eps^0, eps^1, eps^2.
    pub c: [f64; 3],
    /// coefficients of eps^1 ln(eps), eps^2 ln(eps).
    pub c_log: [f64; 2],
}

impl EpsSeries {
    /// Exact limit as eps -> 0+.
    pub fn limit(&self) -> f64 {
        self.c[0]
    }

    /// Value at a concrete perturbation size.
    pub fn at(&self, eps: f64) -> f64 {
        let ln = eps.ln();
        self.c[0]
            + eps * (self.c[1] + self.c_log[0] * ln)
            + eps * eps * (self.c[2] + self.c_log[1] * ln)
    }
}

/// Which expectation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum WKind {
    W1,
    W2,
    Cdf(f64),
}

/// Jittered desired powers: antenna i becomes p_i (1 + i eps). The global
/// index pattern simultaneously separates tied powers and breaks
/// partial-fraction pole collisions between distinct antennas (reversed
/// power profiles tie the collision across whole locations, so a per-group
/// pattern would leave the first group members exactly collided).
fn jittered_powers(config: &SystemConfig) -> Vec<Jet> {
    config
        .desired
        .entries
        .iter()
        .enumerate()
        .map(|(i, &p)| Jet::jittered(p, i))
        .collect()
}

/// Single-pair W1 term jet on the jittered configuration (test hook).
#[cfg(test)]
pub(crate) fn w1_pair_jet(
    a: f64,
    b: f64,
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
    pair: (usize, usize),
) -> Jet {
    let n_r = config.n_antennas();
    let d = crate::gamma_dist::interference_levels(config, profile).unwrap();
    let p1 = jittered_powers(config);
    let q: Vec<Jet> = p1
        .iter()
        .zip(&d)
        .map(|(p, &dd)| *p * Jet::constant(dd))
        .collect();
    let (i, k) = pair;
    let ups = p1[i] * p1[k] * Jet::constant(d[k] - d[i]);
    let nu = p1[i] - p1[k];
    let mut denom = Jet::constant(1.0);
    for l in 0..n_r {
        if l == i || l == k {
            continue;
        }
        let ups_il = p1[i] * p1[l] * Jet::constant(d[l] - d[i]);
        let nu_il = p1[i] - p1[l];
        let lhs = ups * nu_il;
        let rhs = nu * ups_il;
        let factor = (lhs - rhs).strip_residue_against(&lhs, &rhs, 1e-9);
        denom = denom * factor;
    }
    let mut xi = Jet::constant(1.0);
    for _ in 0..n_r.saturating_sub(2) {
        xi = xi * p1[i];
    }
    for _ in 0..(n_r as i32 - 3).max(0) {
        xi = xi * ups;
    }
    if n_r as i32 - 3 < 0 {
        xi = xi / ups;
    }
    let xi = xi / denom;
    let beta = nu / ups;
    let omega = (Jet::constant(1.0) - beta * q[i]) / p1[i];
    let alpha = q[i] / p1[i] + omega / (Jet::constant(2.0) * beta);
    let inputs = PairTermInputs {
        p: p1[i],
        q: q[i],
        xi,
        beta,
        omega,
        alpha,
    };
    w1_pair_term(a, b, &inputs)
}

#[cfg(test)]
pub(crate) fn jet_coefficient(jet: &Jet, order: i32) -> f64 {
    jet.at_order(order).value()
}

/// Evaluate W1, W2 or the CDF on the jittered configuration, returning the
/// eps-series of the result.
pub(crate) fn w_series(
    a: f64,
    b: f64,
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
    kind: WKind,
) -> Result<EpsSeries> {
    let n_r = config.n_antennas();
    if n_r < 2 {
        return Err(Error::InvalidParameter(
            "mixture form needs at least 2 antennas".into(),
        ));
    }
    let max_group = config
        .coincident_desired_groups()
        .iter()
        .map(|g| g.len())
        .max()
        .unwrap_or(1);
    if max_group > 6 {
        return Err(Error::InvalidParameter(format!(
            "perturbation-limit series supports tie groups up to 6 antennas, got {max_group}"
        )));
    }
    let d = crate::gamma_dist::interference_levels(config, profile)?;
    if d.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "interference plus noise must be positive and finite at every antenna".into(),
        ));
    }
    let p1 = jittered_powers(config);
    let q: Vec<Jet> = p1
        .iter()
        .zip(&d)
        .map(|(p, &dd)| *p * Jet::constant(dd))
        .collect();

    // slot-wise compensated accumulation of the pair terms (plain and
    // ln(delta) parts); each slot also tracks the largest magnitude fed into
    // it so residues can be told from genuine coefficients
    #[derive(Default)]
    struct Slot {
        sum: Dd,
        max_abs: f64,
        log_sum: Dd,
        log_max_abs: f64,
    }
    let mut acc_val = i32::MAX;
    let mut acc: Vec<Slot> = Vec::new();
    let add_jet = |jet: Jet, acc_val: &mut i32, acc: &mut Vec<Slot>| {
        if jet.is_zero() {
            return;
        }
        if acc.is_empty() {
            *acc_val = jet.val;
            acc.resize_with(SLOTS, Slot::default);
        }
        if jet.val < *acc_val {
            let shift = (*acc_val - jet.val) as usize;
            let mut widened = Vec::with_capacity(SLOTS);
            widened.resize_with(shift.min(SLOTS), Slot::default);
            widened.extend(acc.drain(..));
            widened.truncate(SLOTS);
            *acc = widened;
            *acc_val = jet.val;
        }
        for i in 0..SLOTS {
            let idx = (jet.val - *acc_val) as usize + i;
            if idx >= acc.len() {
                break;
            }
            let c = jet.coef[i];
            if !c.is_zero() {
                acc[idx].sum = acc[idx].sum.add(c);
                acc[idx].max_abs = acc[idx].max_abs.max(c.hi().abs());
            }
            let l = jet.log[i];
            if !l.is_zero() {
                acc[idx].log_sum = acc[idx].log_sum.add(l);
                acc[idx].log_max_abs = acc[idx].log_max_abs.max(l.hi().abs());
            }
        }
    };

    for i in 0..n_r {
        for k in 0..n_r {
            if k == i {
                continue;
            }
            let ups = p1[i] * p1[k] * Jet::constant(d[k] - d[i]);
            if ups.vanishes() {
                continue;
            }
            let nu = p1[i] - p1[k];
            if nu.vanishes() {
                return Err(Error::InternalConsistency(
                    "jittered powers still tie".into(),
                ));
            }
            let mut denom = Jet::constant(1.0);
            for l in 0..n_r {
                if l == i || l == k {
                    continue;
                }
                let ups_il = p1[i] * p1[l] * Jet::constant(d[l] - d[i]);
                let nu_il = p1[i] - p1[l];
                let lhs = ups * nu_il;
                let rhs = nu * ups_il;
                // pole collisions cancel this difference analytically at
                // leading order; strip the f64 residue before dividing
                let factor = (lhs - rhs).strip_residue_against(&lhs, &rhs, 1e-9);
                if factor.vanishes() {
                    return Err(Error::NearSingular { i, k, l });
                }
                denom = denom * factor;
            }
            let mut xi = Jet::constant(1.0);
            for _ in 0..n_r.saturating_sub(2) {
                xi = xi * p1[i];
            }
            match n_r as i32 - 3 {
                e if e >= 0 => {
                    for _ in 0..e {
                        xi = xi * ups;
                    }
                }
                _ => {
                    xi = xi / ups;
                }
            }
            let xi = xi / denom;
            let beta = nu / ups;
            let omega = (Jet::constant(1.0) - beta * q[i]) / p1[i];
            let alpha = q[i] / p1[i] + omega / (Jet::constant(2.0) * beta);
            let inputs = PairTermInputs {
                p: p1[i],
                q: q[i],
                xi,
                beta,
                omega,
                alpha,
            };
            let term = match kind {
                WKind::W1 => w1_pair_term(a, b, &inputs),
                WKind::W2 => w2_pair_term(a, b, &inputs)?,
                WKind::Cdf(r) => cdf_pair_term(r, &inputs),
            };
            if std::env::var("MACROMRC_DEBUG_TERMS").is_ok() {
                eprintln!(
                    "pair ({i},{k}): beta_lead={:+.3e}@{} xi_lead={:+.3e}@{} term val={} lead={:+.6e} at0={:+.9e}",
                    beta.lead(), beta.val, xi.lead(), xi.val,
                    term.val, term.lead(),
                    term.at_order(0).hi()
                );
            }
            add_jet(term, &mut acc_val, &mut acc);
        }
    }

    if acc.is_empty() {
        return Ok(EpsSeries {
            c: [0.0; 3],
            c_log: [0.0; 2],
        });
    }
    if std::env::var("MACROMRC_DEBUG_SLOTS").is_ok() {
        for (i, slot) in acc.iter().enumerate() {
            eprintln!(
                "slot delta^{}: sum={:+.6e} max={:.3e} log_sum={:+.6e} log_max={:.3e}",
                acc_val + i as i32,
                slot.sum.value(),
                slot.max_abs,
                slot.log_sum.value(),
                slot.log_max_abs
            );
        }
    }
    // everything below delta^0 must have cancelled to accumulation round-off,
    // and so must the odd delta orders (the result is a function of
    // eps = delta^2) and the delta^0 ln(delta) part (the limit is finite)
    let mut out = [0.0; 3];
    let mut out_log = [0.0; 2];
    let residue = |c: f64, max_abs: f64| c.abs() > 1e-9 * max_abs.max(1e-300) && c.abs() > 1e-280;
    for (i, slot) in acc.iter().enumerate() {
        let order = acc_val + i as i32;
        let c = slot.sum.value();
        let l = slot.log_sum.value();
        if order < 0 || order % 2 == 1 {
            if residue(c, slot.max_abs) || residue(l, slot.log_max_abs) {
                return Err(Error::Accuracy(format!(
                    "perturbation series kept a delta^{order} residue of {c:.3e}/{l:.3e} (terms up to {:.3e}/{:.3e})",
                    slot.max_abs, slot.log_max_abs
                )));
            }
            continue;
        }
        if order == 0 && residue(l, slot.log_max_abs) {
            return Err(Error::Accuracy(format!(
                "perturbation series kept a ln(delta) residue of {l:.3e} at delta^0"
            )));
        }
        let idx = (order / 2) as usize;
        if idx < 3 {
            out[idx] = c;
            // delta^(2k) ln(delta) = eps^k ln(eps)/2
            if idx >= 1 {
                out_log[idx - 1] = 0.5 * l;
            }
        }
    }
    Ok(EpsSeries {
        c: out,
        c_log: out_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_dist::InterfererMagnitudeProfile;
    use crate::powermodel::PowerMatrix;

    fn jet(val: i32, coef: &[f64]) -> Jet {
        let mut c = [Dd::ZERO; SLOTS];
        for (slot, &v) in c.iter_mut().zip(coef) {
            *slot = Dd::from_f64(v);
        }
        Jet {
            val,
            coef: c,
            log: [Dd::ZERO; SLOTS],
        }
    }

    #[test]
    fn jet_arithmetic_basics() {
        let x = Jet::jittered(2.0, 1); // 2 + 2 d^2
        let y = Jet::constant(3.0);
        let s = x + y;
        assert_eq!(s.at_order(0).value(), 5.0);
        assert_eq!(s.at_order(2).value(), 2.0);
        let p = x * x; // 4 + 8 d^2 + 4 d^4
        assert_eq!(p.at_order(0).value(), 4.0);
        assert_eq!(p.at_order(2).value(), 8.0);
        assert_eq!(p.at_order(4).value(), 4.0);
        // (x - x) vanishes exactly
        assert!((x - x).is_zero());
        // valuation bookkeeping through division
        let q = jet(2, &[3.0]) / jet(1, &[2.0]);
        assert_eq!(q.val, 1);
        assert_eq!(q.coef[0].value(), 1.5);
    }

    #[test]
    fn jet_reciprocal_roundtrip() {
        let x = jet(-1, &[2.0, 1.0, 0.5, -0.3]);
        let r = x.reciprocal();
        let one = x * r;
        assert_eq!(one.val, 0);
        assert!((one.coef[0].value() - 1.0).abs() < 1e-15);
        for c in &one.coef[1..8] {
            assert!(c.value().abs() < 1e-14);
        }
    }

    #[test]
    fn jet_sqrt_and_exp_match_f64_evaluation() {
        // evaluate the series at a small delta and compare against f64
        let delta: f64 = 1e-3;
        let x = jet(0, &[1.7, 0.4, -0.2, 0.05]);
        let xv = 1.7 + 0.4 * delta - 0.2 * delta * delta + 0.05 * delta.powi(3);
        let eval = |j: &Jet| -> f64 {
            let mut v = 0.0;
            for (i, c) in j.coef.iter().enumerate() {
                v += c.value() * delta.powi(j.val + i as i32);
            }
            v
        };
        assert!((eval(&x.sqrt()) - xv.sqrt()).abs() < 1e-14);
        assert!((eval(&Field::exp(x)) - xv.exp()).abs() < 1e-12);
        assert!((eval(&x.atan()) - xv.atan()).abs() < 1e-14);
        assert!((eval(&x.erfcx_f()) - crate::specfun::erfcx(xv)).abs() < 1e-14);
        assert!((eval(&x.dawson_f()) - crate::specfun::dawson(xv)).abs() < 1e-14);
        assert!((eval(&x.t_ratio_f()) - crate::specfun::t_ratio(xv)).abs() < 1e-14);
    }

    #[test]
    fn jet_asymptotic_branches() {
        // argument ~ c/delta: compare against f64 at small delta
        let delta: f64 = 1e-3;
        let x = jet(-1, &[3.0, 0.2]);
        let xv = 3.0 / delta + 0.2;
        let eval = |j: &Jet| -> f64 {
            let mut v = 0.0;
            for (i, c) in j.coef.iter().enumerate() {
                v += c.value() * delta.powi(j.val + i as i32);
            }
            v
        };
        assert!(
            (eval(&x.erfcx_f()) - crate::specfun::erfcx(xv)).abs()
                < 1e-12 * crate::specfun::erfcx(xv)
        );
        assert!(
            (eval(&x.dawson_f()) - crate::specfun::dawson(xv)).abs()
                < 1e-12 * crate::specfun::dawson(xv)
        );
        assert!((eval(&x.atan()) - xv.atan()).abs() < 1e-12);
        // T at a divergent argument needs an even valuation (1/eps scale)
        let y = jet(-2, &[3.0, 0.0, 0.2]);
        let yv = 3.0 / (delta * delta) + 0.2;
        assert!(
            (eval(&y.t_ratio_f()) - crate::specfun::t_ratio(yv)).abs()
                < 1e-12 * crate::specfun::t_ratio(yv)
        );
        // negative divergent argument for atan
        let neg = jet(-1, &[-3.0]);
        assert!((eval(&neg.atan()) - (-3.0f64 / delta).atan()).abs() < 1e-12);
    }

    #[test]
    fn series_matches_f64_on_nondegenerate_config() {
        // on a regular config the eps-series constant term must equal the
        // plain evaluation and the eps-dependence must be mild
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 2.0, 3.5], "d").unwrap(),
            vec![PowerMatrix::new(vec![0.5, 0.2, 0.9], "i").unwrap()],
            0.1,
        )
        .unwrap();
        let unit = InterfererMagnitudeProfile::unit(1);
        let series = w_series(1.0, 2.0, &cfg, &unit, WKind::W1).unwrap();
        let direct = crate::ser_analytic::w1(1.0, 2.0, &cfg, &unit).unwrap();
        assert!(
            (series.limit() - direct).abs() < 1e-12 * direct,
            "{} vs {direct}",
            series.limit()
        );
        let w2_series = w_series(1.0, 1.0, &cfg, &unit, WKind::W2).unwrap();
        let w2_direct = crate::ser_analytic::w2(1.0, 1.0, &cfg, &unit).unwrap();
        assert!((w2_series.limit() - w2_direct).abs() < 1e-11 * w2_direct);
        let cdf_series = w_series(0.0, 1.0, &cfg, &unit, WKind::Cdf(1.0)).unwrap();
        let law = crate::gamma_dist::gamma_law(&cfg, &unit).unwrap();
        assert!((cdf_series.limit() - law.cdf(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn series_matches_jittered_f64_where_conditioning_allows() {
        // one co-located pair: the f64 evaluation of the same globally
        // jittered config at eps = 1e-5 is still well conditioned and must
        // agree with the series at that eps
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 1.0, 2.5], "d").unwrap(),
            vec![PowerMatrix::new(vec![0.5, 0.2, 0.9], "i").unwrap()],
            0.05,
        )
        .unwrap();
        let unit = InterfererMagnitudeProfile::unit(1);
        let eps = 1e-5;
        let mut perturbed = cfg.clone();
        for (i, e) in perturbed.desired.entries.iter_mut().enumerate() {
            *e *= 1.0 + i as f64 * eps;
        }
        let direct = crate::ser_analytic::w1(1.0, 2.0, &perturbed, &unit).unwrap();
        let series = w_series(1.0, 2.0, &cfg, &unit, WKind::W1).unwrap();
        assert!(
            (series.at(eps) - direct).abs() < 1e-7 * direct,
            "{} vs {direct}",
            series.at(eps)
        );
        let w2_direct = crate::ser_analytic::w2(1.0, 1.0, &perturbed, &unit).unwrap();
        let w2_series = w_series(1.0, 1.0, &cfg, &unit, WKind::W2).unwrap();
        assert!(
            (w2_series.at(eps) - w2_direct).abs() < 1e-6 * w2_direct,
            "{} vs {w2_direct}",
            w2_series.at(eps)
        );
    }
}

#[cfg(test)]
mod bigfloat_oracle {
    //! Re-derives one pair term in 400-bit bigfloat Laurent arithmetic and
    //! compares every retained coefficient against the quad-double jets.

    use super::*;
    use crate::powermodel::PowerMatrix;
    use dashu_base::SquareRoot;
    use dashu_float::FBig;

    const PREC: usize = 400;

    #[derive(Clone)]
    struct BigJet {
        val: i32,
        coef: Vec<FBig>,
    }

    fn big(x: f64) -> FBig {
        FBig::try_from(x).unwrap().with_precision(PREC).value()
    }

    impl BigJet {
        fn constant(x: f64) -> Self {
            let mut coef = vec![big(0.0); SLOTS];
            coef[0] = big(x);
            BigJet { val: 0, coef }
        }
        fn jittered(c: f64, j: usize) -> Self {
            let mut coef = vec![big(0.0); SLOTS];
            coef[0] = big(c);
            coef[2] = big(c) * big(j as f64);
            BigJet { val: 0, coef }
        }
        fn normalized(mut self) -> Self {
            let mut shift = 0;
            while shift < SLOTS && self.coef[shift] == big(0.0) {
                shift += 1;
            }
            if shift == SLOTS {
                self.val = i32::MAX;
                return self;
            }
            self.coef.rotate_left(shift);
            for c in &mut self.coef[SLOTS - shift..] {
                *c = big(0.0);
            }
            self.val += shift as i32;
            self
        }
        fn add(&self, rhs: &Self) -> Self {
            let val = self.val.min(rhs.val);
            let mut coef = vec![big(0.0); SLOTS];
            for (i, c) in coef.iter_mut().enumerate() {
                let k = val + i as i32;
                let a = self.at(k);
                let b = rhs.at(k);
                *c = a + b;
            }
            (BigJet { val, coef }).normalized()
        }
        fn at(&self, k: i32) -> FBig {
            if self.val == i32::MAX {
                return big(0.0);
            }
            let idx = k - self.val;
            if (0..SLOTS as i32).contains(&idx) {
                self.coef[idx as usize].clone()
            } else {
                big(0.0)
            }
        }
        fn neg(&self) -> Self {
            BigJet {
                val: self.val,
                coef: self.coef.iter().map(|c| -c.clone()).collect(),
            }
        }
        fn mul(&self, rhs: &Self) -> Self {
            let mut coef = vec![big(0.0); SLOTS];
            for i in 0..SLOTS {
                for j in 0..SLOTS - i {
                    let p = self.coef[i].clone() * rhs.coef[j].clone();
                    coef[i + j] += p;
                }
            }
            BigJet {
                val: self.val + rhs.val,
                coef,
            }
        }
        fn recip(&self) -> Self {
            let c0 = self.coef[0].clone();
            let mut out = vec![big(0.0); SLOTS];
            out[0] = big(1.0) / c0.clone();
            for n in 1..SLOTS {
                let mut acc = big(0.0);
                for k in 1..=n {
                    acc += self.coef[k].clone() * out[n - k].clone();
                }
                out[n] = -acc / c0.clone();
            }
            BigJet {
                val: -self.val,
                coef: out,
            }
        }
        fn div(&self, rhs: &Self) -> Self {
            self.mul(&rhs.recip())
        }
        fn sqrt(&self) -> Self {
            assert!(self.val % 2 == 0);
            let s0 = self.coef[0].sqrt();
            let mut out = vec![big(0.0); SLOTS];
            out[0] = s0.clone();
            for n in 1..SLOTS {
                let mut acc = big(0.0);
                for k in 1..n {
                    acc += out[k].clone() * out[n - k].clone();
                }
                out[n] = (self.coef[n].clone() - acc) / (big(2.0) * s0.clone());
            }
            BigJet {
                val: self.val / 2,
                coef: out,
            }
        }
    }

    /// Direct scalar evaluation of the W1 sum at a perturbed config in
    /// 400-bit arithmetic: the conditioning-free reference value.
    fn w1_direct_big(a: f64, b: f64, p_desired: &[FBig], d: &[f64]) -> FBig {
        let n_r = p_desired.len();
        let frac_1_sqrt_2 = big(2.0).sqrt().powi((-1).into());
        let mut total = big(0.0);
        for i in 0..n_r {
            for k in 0..n_r {
                if k == i || d[k] == d[i] {
                    continue;
                }
                let (pi, pk) = (p_desired[i].clone(), p_desired[k].clone());
                let qi = pi.clone() * big(d[i]);
                let ups = pi.clone() * pk.clone() * big(d[k] - d[i]);
                let nu = pi.clone() - pk.clone();
                let mut denom = big(1.0);
                for l in 0..n_r {
                    if l == i || l == k {
                        continue;
                    }
                    let ups_il =
                        pi.clone() * p_desired[l].clone() * big(d[l] - d[i]);
                    let nu_il = pi.clone() - p_desired[l].clone();
                    denom *= ups.clone() * nu_il - nu.clone() * ups_il;
                }
                let mut xi = big(1.0);
                for _ in 0..n_r - 2 {
                    xi *= pi.clone();
                }
                for _ in 0..n_r - 3 {
                    xi *= ups.clone();
                }
                xi /= denom;
                let beta = nu.clone() / ups.clone();
                let omega = (big(1.0) - beta.clone() * qi.clone()) / pi.clone();
                let alpha =
                    qi.clone() / pi.clone() + omega.clone() / (big(2.0) * beta.clone());
                let s = big(0.5) + qi.clone() / (big(b) * pi.clone() * pi.clone());
                let head = big(a) * frac_1_sqrt_2.clone()
                    * (pi.clone() * xi.clone() / beta.clone())
                    * (frac_1_sqrt_2.clone() - big(0.5) / s.sqrt());
                let term = if beta > big(0.0) {
                    let c = alpha.clone() * (beta.clone() / big(b)).sqrt();
                    let g = big(0.5) / (s.sqrt() * (s.sqrt() + c));
                    head + big(a) * xi
                        / (big(2.0) * beta.clone() * (big(2.0 * b) * beta).sqrt())
                        * g
                } else {
                    let m = -beta.clone();
                    let mq = m.clone() * qi.clone();
                    let two_s = big(2.0) * s.clone();
                    let numer = big(4.0) * mq.clone()
                        + (big(2.0) * qi.clone() / (big(b) * pi.clone() * pi.clone()))
                            * (big(1.0) + mq.clone()).powi(2.into());
                    let den = two_s.sqrt()
                        * ((big(1.0) + mq.clone()) * two_s.sqrt() + big(1.0) - mq);
                    let tail_sum =
                        numer / den / (pi.clone() * (big(2.0 * b) * m.clone()).sqrt());
                    head + big(a) * frac_1_sqrt_2.clone()
                        * (big(b) / m.clone()).sqrt()
                        * xi
                        / (omega.clone() * omega + big(2.0 * b) * m)
                        * tail_sum
                };
                total += term;
            }
        }
        total
    }

    #[test]
    fn drop_limit_vs_full_sum_bigfloat() {
        // Fix eps = 1e-2 (desired powers distinct) and approach the
        // interference tie D' -> tie; compare the full 30-pair sum with the
        // 24-pair sum-with-drops.
        let eps = 1e-2f64;
        let p_desired: Vec<FBig> = (0..6)
            .map(|i| big(1.0) + big(i as f64) * big(eps))
            .collect();
        let d1 = 0.1477f64;
        let d2 = d1 / 65.0;
        let d3 = d2 / 65.0;
        let tied = [d1, d1, d2, d2, d3, d3];
        let with_drops = w1_direct_big(2.0, 1.0, &p_desired, &tied).to_f64().value();
        eprintln!("sum-with-drops at tie: {with_drops:.9e}");
        for eta in [1e-2f64, 1e-3, 1e-4, 1e-6, 1e-8] {
            let d_near = [
                d1,
                d1 * (1.0 + eta),
                d2,
                d2 * (1.0 + 2.0 * eta),
                d3,
                d3 * (1.0 + 3.0 * eta),
            ];
            let full = w1_direct_big(2.0, 1.0, &p_desired, &d_near).to_f64().value();
            eprintln!("eta={eta:.0e}: full 30-pair sum = {full:.9e}");
        }
    }

    #[test]
    fn w1_series_matches_direct_bigfloat_inside_radius() {
        let d1 = 0.1477f64;
        let d2 = d1 / 65.0;
        let d3 = d2 / 65.0;
        let d = vec![d1, d1, d2, d2, d3, d3];
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0; 6], "d").unwrap(),
            vec![PowerMatrix::new(d.clone(), "i").unwrap()],
            0.0,
        )
        .unwrap();
        let unit = InterfererMagnitudeProfile::unit(1);
        let series = w_series(2.0, 1.0, &cfg, &unit, WKind::W1).unwrap();
        // control: the f64 evaluation is trustworthy at eps = 1e-2
        {
            let eps = 1e-2f64;
            let mut perturbed = cfg.clone();
            for (i, e) in perturbed.desired.entries.iter_mut().enumerate() {
                *e *= 1.0 + i as f64 * eps;
            }
            let f64_val = crate::ser_analytic::w1(2.0, 1.0, &perturbed, &unit).unwrap();
            let p_desired: Vec<FBig> = (0..6)
                .map(|i| big(1.0) * (big(1.0) + big(i as f64) * big(eps)))
                .collect();
            let d_vec = vec![0.1477f64, 0.1477, 0.1477 / 65.0, 0.1477 / 65.0,
                0.1477 / 65.0 / 65.0, 0.1477 / 65.0 / 65.0];
            let direct = w1_direct_big(2.0, 1.0, &p_desired, &d_vec).to_f64().value();
            eprintln!("control eps=1e-2: f64={f64_val:.9e} big-direct={direct:.9e}");
        }
        for eps in [1e-4f64, 3e-5, 1e-5] {
            let p_desired: Vec<FBig> = (0..6)
                .map(|i| big(1.0) * (big(1.0) + big(i as f64) * big(eps)))
                .collect();
            let direct = w1_direct_big(2.0, 1.0, &p_desired, &d).to_f64().value();
            let approx = series.at(eps);
            eprintln!(
                "eps={eps:.0e}: direct={direct:.9e} series={approx:.9e} rel={:.2e}",
                ((approx - direct) / direct).abs()
            );
        }
    }

    #[test]
    fn w1_pair_term_matches_bigfloat_series() {
        // deep-valuation S20-like configuration
        let d1 = 0.1477f64;
        let d2 = d1 / 65.0;
        let d3 = d2 / 65.0;
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0; 6], "d").unwrap(),
            vec![PowerMatrix::new(vec![d1, d1, d2, d2, d3, d3], "i").unwrap()],
            0.0,
        )
        .unwrap();
        let unit = InterfererMagnitudeProfile::unit(1);
        let d: Vec<f64> =
            crate::gamma_dist::interference_levels(&cfg, &unit).unwrap();
        let (a, b) = (2.0, 1.0);
        let (i, k) = (2usize, 4usize);
        let n_r = 6usize;

        // bigfloat replica of the pair chain
        let p1: Vec<BigJet> = (0..n_r).map(|j| BigJet::jittered(1.0, j)).collect();
        let q: Vec<BigJet> = (0..n_r)
            .map(|j| p1[j].mul(&BigJet::constant(d[j])))
            .collect();
        let ups = p1[i].mul(&p1[k]).mul(&BigJet::constant(d[k] - d[i]));
        let nu = p1[i].add(&p1[k].neg());
        let mut denom = BigJet::constant(1.0);
        for l in 0..n_r {
            if l == i || l == k {
                continue;
            }
            let ups_il = p1[i].mul(&p1[l]).mul(&BigJet::constant(d[l] - d[i]));
            let nu_il = p1[i].add(&p1[l].neg());
            let factor = ups.mul(&nu_il).add(&nu.mul(&ups_il).neg());
            denom = denom.mul(&factor);
        }
        let mut xi = BigJet::constant(1.0);
        for _ in 0..n_r - 2 {
            xi = xi.mul(&p1[i]);
        }
        for _ in 0..n_r - 3 {
            xi = xi.mul(&ups);
        }
        let xi = xi.div(&denom);
        let beta = nu.div(&ups);
        let omega = BigJet::constant(1.0)
            .add(&beta.mul(&q[i]).neg())
            .div(&p1[i]);
        let alpha = q[i]
            .div(&p1[i])
            .add(&omega.div(&BigJet::constant(2.0).mul(&beta)));
        // w1 beta > 0 branch, g-form
        let s = BigJet::constant(0.5).add(&q[i].div(&BigJet::constant(b).mul(&p1[i]).mul(&p1[i])));
        let head = BigJet::constant(a * std::f64::consts::FRAC_1_SQRT_2)
            .mul(&p1[i].mul(&xi).div(&beta))
            .mul(&BigJet::constant(std::f64::consts::FRAC_1_SQRT_2)
                .add(&BigJet::constant(0.5).div(&s.sqrt()).neg()));
        let c_ = alpha.mul(&beta.div(&BigJet::constant(b)).sqrt());
        let g = BigJet::constant(0.5).div(&s.sqrt().mul(&s.sqrt().add(&c_)));
        let tail = BigJet::constant(a)
            .mul(&xi)
            .div(&BigJet::constant(2.0)
                .mul(&beta)
                .mul(&BigJet::constant(2.0 * b).mul(&beta).sqrt()))
            .mul(&g);
        let term_big = head.add(&tail);

        // quad-double jet replica of each intermediate, compared slotwise
        let qp1: Vec<Jet> = (0..n_r).map(|j| Jet::jittered(1.0, j)).collect();
        let qq: Vec<Jet> = (0..n_r)
            .map(|j| qp1[j] * Jet::constant(d[j]))
            .collect();
        let qups = qp1[i] * qp1[k] * Jet::constant(d[k] - d[i]);
        let qnu = qp1[i] - qp1[k];
        let mut qdenom = Jet::constant(1.0);
        for l in 0..n_r {
            if l == i || l == k {
                continue;
            }
            let ups_il = qp1[i] * qp1[l] * Jet::constant(d[l] - d[i]);
            let nu_il = qp1[i] - qp1[l];
            let lhs = qups * nu_il;
            let rhs = qnu * ups_il;
            qdenom = qdenom * (lhs - rhs).strip_residue_against(&lhs, &rhs, 1e-9);
        }
        let mut qxi = Jet::constant(1.0);
        for _ in 0..n_r - 2 {
            qxi = qxi * qp1[i];
        }
        for _ in 0..n_r - 3 {
            qxi = qxi * qups;
        }
        let qxi = qxi / qdenom;
        let qbeta = qnu / qups;
        let qomega = (Jet::constant(1.0) - qbeta * qq[i]) / qp1[i];
        let qalpha = qq[i] / qp1[i] + qomega / (Jet::constant(2.0) * qbeta);
        let qs = Jet::constant(0.5) + qq[i] / (Jet::constant(b) * qp1[i] * qp1[i]);
        let qc = qalpha * (qbeta / Jet::constant(b)).sqrt();

        let to_fbig = |x: Dd| -> FBig {
            big(x.0) + big(x.1) + big(x.2) + big(x.3)
        };
        let check = |name: &str, qd_jet: &Jet, big_jet: &BigJet| {
            let mut worst: f64 = 0.0;
            for ord in big_jet.val..big_jet.val + 12 {
                let want = big_jet.at(ord);
                let got = to_fbig(qd_jet.at_order(ord));
                let wf = want.to_f64().value();
                if wf.abs() > 1e-280 {
                    let rel = ((got - want.clone()) / want).to_f64().value().abs();
                    worst = worst.max(rel);
                }
            }
            eprintln!("{name}: worst rel {worst:.3e}");
        };
        check("ups", &qups, &ups);
        check("nu", &qnu, &nu);
        check("denom", &qdenom, &denom);
        check("xi", &qxi, &xi);
        check("beta", &qbeta, &beta);
        check("omega", &qomega, &omega);
        check("alpha", &qalpha, &alpha);
        check("s", &qs, &s);
        check("c", &qc, &c_);

        let term_qd = w1_pair_jet(a, b, &cfg, &unit, (i, k));

        check("term", &term_qd, &term_big);
        assert!(term_qd.lead() != 0.0);
        let mut max_rel: f64 = 0.0;
        for ord in term_big.val..term_big.val + 14 {
            let want = term_big.at(ord);
            let got = to_fbig(term_qd.at_order(ord));
            if want.to_f64().value().abs() > 1e-280 {
                let rel = ((got - want.clone()) / want).to_f64().value().abs();
                max_rel = max_rel.max(rel);
                assert!(rel < 1e-25, "order {ord}: rel {rel:e}");
            }
        }
        eprintln!("max coefficient rel deviation vs bigfloat: {max_rel:e}");
    }
}
