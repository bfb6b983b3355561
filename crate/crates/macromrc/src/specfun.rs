//! Scalar special functions used by the analytic SER formulas.
//!
//! Everything here is plain `f64` and reentrant. The scaled variants
//! ([`erfcx`], [`dawson`]) exist so that products of the form
//! `exp(large) * erfc(...)` and `exp(large) * erfi(...)` can be evaluated
//! without overflow: the exponential factors are carried symbolically via
//! [`ScaledExpProduct`] and cancel analytically before anything is
//! exponentiated.



/// 2/sqrt(pi)
const TWO_OVER_SQRT_PI: f64 = 1.128_379_167_095_512_6;
/// 1/sqrt(pi)
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Gaussian Q-function, Q(x) = Pr(N(0,1) > x).
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return x.signum();
    }
    let ax = x.abs();
    if ax <= 1.5 {
        erf_series(x)
    } else {
        let tail = erfc_large(ax);
        let mag = 1.0 - tail;
        if x > 0.0 {
            mag
        } else {
            -mag
        }
    }
}

/// Complementary error function, 1 - erf(x).
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 0.0 } else { 2.0 };
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x <= 1.5 {
        1.0 - erf_series(x)
    } else {
        erfc_large(x)
    }
}

/// Scaled complementary error function, erfcx(x) = exp(x^2) * erfc(x).
///
/// Decays like 1/(x*sqrt(pi)) for large x instead of underflowing, which is
/// what keeps the beta > 0 branch of the gamma CDF finite at high SNR.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x < 0.0 {
        // erfcx(-x) = 2 exp(x^2) - erfcx(x); overflows to +inf for x < -26.6
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x <= 1.5 {
        (x * x).exp() * (1.0 - erf_series(x))
    } else {
        x * upper_gamma_half_cf(x * x) * FRAC_1_SQRT_PI
    }
}

/// Imaginary error function, erfi(x) = erf(ix)/i.
///
/// Overflows to +/-inf for |x| > 26.6; use [`dawson`] with explicit scale
/// bookkeeping in that regime.
pub fn erfi(x: f64) -> f64 {
    TWO_OVER_SQRT_PI * (x * x).exp() * dawson(x)
}

/// Dawson function, D(x) = exp(-x^2) * integral_0^x exp(t^2) dt.
///
/// Bounded (|D| <= 0.5410443), odd, peak near x = 0.9241. Serves as the
/// overflow-safe carrier of erfi: erfi(x) = (2/sqrt(pi)) exp(x^2) D(x).
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    let mag = if ax <= 1.0 {
        dawson_series(ax)
    } else if ax < 8.5 {
        dawson_rybicki(ax)
    } else {
        dawson_asymptotic(ax)
    };
    if x < 0.0 {
        -mag
    } else {
        mag
    }
}

/// erf(x) for |x| <= 1.5 via the all-positive confluent series
/// erf(x) = (2/sqrt(pi)) x e^{-x^2} sum_n (2x^2)^n / (1*3*...*(2n+1)).
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut odd = 1.0;
    for _ in 0..60 {
        odd += 2.0;
        term *= 2.0 * x2 / odd;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    TWO_OVER_SQRT_PI * x * (-x2).exp() * sum
}

/// erfc(x) for x > 1.5 through the continued fraction for Gamma(1/2, x^2).
fn erfc_large(x: f64) -> f64 {
    (-x * x).exp() * x * upper_gamma_half_cf(x * x) * FRAC_1_SQRT_PI
}

/// Modified-Lentz evaluation of the continued fraction for
/// Gamma(1/2, z) = e^{-z} z^{1/2} * CF(z), z = x^2 > 2.
fn upper_gamma_half_cf(z: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let a = 0.5;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=200 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Dawson for |x| <= 1: D(x) = e^{-x^2} sum_n x^{2n+1} / (n! (2n+1)),
/// all terms positive.
fn dawson_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..60 {
        term *= x2 / n as f64;
        let contrib = term / (2 * n + 1) as f64;
        sum += contrib;
        if contrib < sum * 1e-18 {
            break;
        }
    }
    (-x2).exp() * sum
}

/// Rybicki's sampling formula with step h: the discretization error is
/// O(exp(-(pi/2h)^2)), far below f64 resolution at h = 0.25.
fn dawson_rybicki(x: f64) -> f64 {
    const H: f64 = 0.25;
    const W: f64 = 7.0; // exp(-49) tail cutoff
    let k_lo = ((x - W) / H).ceil() as i64;
    let k_hi = ((x + W) / H).floor() as i64;
    let mut sum = 0.0;
    let mut k = if k_lo % 2 == 0 { k_lo + 1 } else { k_lo };
    while k <= k_hi {
        if k != 0 {
            let u = x - k as f64 * H;
            sum += (-u * u).exp() / k as f64;
        }
        k += 2;
    }
    FRAC_1_SQRT_PI * sum
}

/// Asymptotic series for x >= 8.5: D(x) ~ 1/(2x) * sum_k (2k-1)!!/(2x^2)^k.
fn dawson_asymptotic(x: f64) -> f64 {
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..30 {
        term *= (2 * k + 1) as f64 * inv2x2;
        sum += term;
        if term < 1e-18 {
            break;
        }
    }
    sum / (2.0 * x)
}

/// T(y) = atan(sqrt(y))/sqrt(y) for y > 0, continued as
/// atanh(sqrt(-y))/sqrt(-y) on (-1, 0) with T(0) = 1.
///
/// The closed forms of both fundamental SER integrals and the Erlang-branch
/// Q^2 expectations are built from this kernel and its derivatives; the
/// published validity regions are exactly its domain y > -1.
pub(crate) fn t_ratio(y: f64) -> f64 {
    if y > 0.0441 {
        let s = y.sqrt();
        s.atan() / s
    } else if y < -0.0441 {
        let s = (-y).sqrt();
        s.atanh() / s
    } else {
        // |y| <= 0.21^2: series sum (-y)^n / (2n+1)
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..20 {
            term *= -y;
            let contrib = term / (2 * n + 1) as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 {
                break;
            }
        }
        sum
    }
}

/// T(y) together with its first `n` derivatives.
///
/// Away from zero the derivatives follow from differentiating the identity
/// 2 y T' + T = 1/(1+y); near zero the power series is used directly.
pub(crate) fn t_ratio_derivatives(y: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    if y.abs() > 0.0441 {
        out.push(t_ratio(y));
        let mut pow = 1.0 + y; // (1+y)^(k+1)
        let mut fact = 1.0; // k!
        let mut sign = 1.0; // (-1)^k
        for k in 0..n {
            let kf = k as f64;
            if k > 0 {
                fact *= kf;
                sign = -sign;
                pow *= 1.0 + y;
            }
            let next = (sign * fact / pow - (2.0 * kf + 1.0) * out[k]) / (2.0 * y);
            out.push(next);
        }
    } else {
        // T^(k)(y) = sum_{m>=k} (-1)^m m!/(m-k)! y^(m-k) / (2m+1)
        for k in 0..=n {
            let mut sum = 0.0;
            let mut pow = 1.0;
            for m in k..k + 30 {
                let mut coef = 1.0;
                for j in (m - k + 1)..=m {
                    coef *= j as f64;
                }
                let contrib =
                    if m % 2 == 0 { 1.0 } else { -1.0 } * coef * pow / (2 * m + 1) as f64;
                sum += contrib;
                if contrib.abs() < 1e-18 && m > k + 3 {
                    break;
                }
                pow *= y;
            }
            out.push(sum);
        }
    }
    out
}

/// A value of the form `mantissa * exp(log_scale)` kept unexponentiated.
///
/// Terms such as `exp(r w^2 / 4 beta) * (1 - Phi(...))` reach exponents of
/// several hundred at high SNR before their analytic cancellation; carrying
/// the log factor separately keeps every intermediate finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledExpProduct {
    /// Natural-log prefactor.
    pub log_scale: f64,
    /// Finite multiplier of `exp(log_scale)`.
    pub mantissa: f64,
}

impl ScaledExpProduct {
    pub fn new(log_scale: f64, mantissa: f64) -> Self {
        Self {
            log_scale,
            mantissa,
        }
    }

    /// Collapse to a plain f64. Underflows to 0 and overflows to inf exactly
    /// as the represented product would.
    pub fn value(&self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        self.mantissa * self.log_scale.exp()
    }

    /// Multiply by an ordinary finite factor.
    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.log_scale, self.mantissa * factor)
    }

    /// Multiply by exp(delta) symbolically.
    pub fn mul_exp(&self, delta: f64) -> Self {
        Self::new(self.log_scale + delta, self.mantissa)
    }
}
