//! Small numeric helpers shared across modules.

/// Quad-double value: an unevaluated, non-overlapping sum of four doubles
/// giving roughly 62 significant digits. The perturbation-limit series
/// multiplies coefficients spanning dozens of orders of magnitude whose
/// convolutions cancel deeply; plain f64 (and even double-double) slots run
/// out of digits there.
///
/// The algorithms are the classic error-free-transformation cascades
/// (two_sum / two_prod with FMA, three_sum, five-term renormalization).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd(pub f64, pub f64, pub f64, pub f64);

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// (a, b, c) -> sum with two error terms.
#[inline]
fn three_sum(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let (t1, t2) = two_sum(a, b);
    let (r0, t3) = two_sum(c, t1);
    let (r1, r2) = two_sum(t2, t3);
    (r0, r1, r2)
}

/// (a, b, c) -> sum with one error term.
#[inline]
fn three_sum2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let (t1, t2) = two_sum(a, b);
    let (r0, t3) = two_sum(c, t1);
    (r0, t2 + t3)
}

/// Five-to-four renormalization into a non-overlapping representation.
#[inline]
#[allow(unused_assignments)]
fn renorm5(c0: f64, c1: f64, c2: f64, c3: f64, c4: f64) -> Dd {
    if !c0.is_finite() {
        return Dd(c0, c1, c2, c3);
    }
    let (s, c4) = quick_two_sum(c3, c4);
    let (s, c3) = quick_two_sum(c2, s);
    let (s, c2) = quick_two_sum(c1, s);
    let (c0, c1) = quick_two_sum(c0, s);

    let (mut s0, mut s1) = (c0, c1);
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let (t0, t1) = quick_two_sum(c0, c1);
    s0 = t0;
    s1 = t1;
    if s1 != 0.0 {
        let (t1, t2) = quick_two_sum(s1, c2);
        s1 = t1;
        s2 = t2;
        if s2 != 0.0 {
            let (t2, t3) = quick_two_sum(s2, c3);
            s2 = t2;
            s3 = t3;
            if s3 != 0.0 {
                s3 += c4;
            } else {
                s2 += c4;
            }
        } else {
            let (t1, t2) = quick_two_sum(s1, c3);
            s1 = t1;
            s2 = t2;
            if s2 != 0.0 {
                let (t2, t3) = quick_two_sum(s2, c4);
                s2 = t2;
                s3 = t3;
            } else {
                let (t1, t2) = quick_two_sum(s1, c4);
                s1 = t1;
                s2 = t2;
            }
        }
    } else {
        let (t0, t1) = quick_two_sum(s0, c2);
        s0 = t0;
        s1 = t1;
        if s1 != 0.0 {
            let (t1, t2) = quick_two_sum(s1, c3);
            s1 = t1;
            s2 = t2;
            if s2 != 0.0 {
                let (t2, t3) = quick_two_sum(s2, c4);
                s2 = t2;
                s3 = t3;
            } else {
                let (t1, t2) = quick_two_sum(s1, c4);
                s1 = t1;
                s2 = t2;
            }
        } else {
            let (t0, t1) = quick_two_sum(s0, c3);
            s0 = t0;
            s1 = t1;
            if s1 != 0.0 {
                let (t1, t2) = quick_two_sum(s1, c4);
                s1 = t1;
                s2 = t2;
            } else {
                let (t0, t1) = quick_two_sum(s0, c4);
                s0 = t0;
                s1 = t1;
            }
        }
    }
    Dd(s0, s1, s2, s3)
}

impl Dd {
    pub const ZERO: Dd = Dd(0.0, 0.0, 0.0, 0.0);

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd(x, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0 && self.1 == 0.0 && self.2 == 0.0 && self.3 == 0.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0 + self.1 + self.2 + self.3
    }

    /// Leading component (sign and magnitude carrier).
    #[inline]
    pub fn hi(self) -> f64 {
        self.0
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s0, t0) = two_sum(self.0, other.0);
        let (mut s1, t1) = two_sum(self.1, other.1);
        let (mut s2, t2) = two_sum(self.2, other.2);
        let (mut s3, t3) = two_sum(self.3, other.3);

        let (r1, mut e0) = two_sum(s1, t0);
        s1 = r1;
        let (r2, ne0, e1) = three_sum(s2, e0, t1);
        s2 = r2;
        e0 = ne0;
        let (r3, ne0) = three_sum2(s3, e0, t2);
        s3 = r3;
        let t = ne0 + e1 + t3;
        renorm5(s0, s1, s2, s3, t)
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd(-self.0, -self.1, -self.2, -self.3)
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    pub fn mul(self, other: Dd) -> Dd {
        let a = self;
        let b = other;
        let (p0, q0) = two_prod(a.0, b.0);
        let (p1, q1) = two_prod(a.0, b.1);
        let (p2, q2) = two_prod(a.1, b.0);
        let (p3, q3) = two_prod(a.0, b.2);
        let (p4, q4) = two_prod(a.1, b.1);
        let (p5, q5) = two_prod(a.2, b.0);

        // order eps
        let (p1, p2, q0) = three_sum(p1, p2, q0);
        // order eps^2: six-three sum of (p2, q1, q2) and (p3, p4, p5)
        let (p2, q1, q2) = three_sum(p2, q1, q2);
        let (p3, p4, p5) = three_sum(p3, p4, p5);
        let (s0, t0) = two_sum(p2, p3);
        let (mut s1, t1) = two_sum(q1, p4);
        let mut s2 = q2 + p5;
        let (r1, t0b) = two_sum(s1, t0);
        s1 = r1;
        s2 += t0b + t1;
        // order eps^3
        let s1 = s1
            + a.0 * b.3
            + a.1 * b.2
            + a.2 * b.1
            + a.3 * b.0
            + q0
            + q3
            + q4
            + q5;
        renorm5(p0, p1, s0, s1, s2)
    }

    pub fn div(self, other: Dd) -> Dd {
        // long division with quad-double remainders
        let q0 = self.0 / other.0;
        let mut r = self.sub(other.mul(Dd::from_f64(q0)));
        let q1 = r.0 / other.0;
        r = r.sub(other.mul(Dd::from_f64(q1)));
        let q2 = r.0 / other.0;
        r = r.sub(other.mul(Dd::from_f64(q2)));
        let q3 = r.0 / other.0;
        r = r.sub(other.mul(Dd::from_f64(q3)));
        let q4 = r.0 / other.0;
        renorm5(q0, q1, q2, q3, q4)
    }

    pub fn sqrt(self) -> Dd {
        if self.is_zero() {
            return Dd::ZERO;
        }
        // Babylonian iteration from the f64 seed; each step doubles the
        // correct digits, three steps reach quad-double accuracy
        let mut x = Dd::from_f64(self.0.sqrt());
        for _ in 0..3 {
            x = x.add(self.div(x)).scale(0.5);
        }
        x
    }

    #[inline]
    pub fn scale(self, k: f64) -> Dd {
        self.mul(Dd::from_f64(k))
    }
}

/// Neumaier compensated accumulator. The per-(i,k) mixture terms are signed
/// and can exceed the final sum by orders of magnitude at high SNR, so plain
/// summation loses digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dashu_float::FBig;

    #[test]
    fn compensated_sum_recovers_cancelled_digits() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn from_iterator() {
        let s: CompensatedSum = [1.0, 2.0, 3.0].into_iter().collect();
        assert_eq!(s.value(), 6.0);
    }

    // quad-double oracle helpers: exact binary bigfloats at 400 bits
    fn to_big(x: Dd) -> FBig {
        let prec = 400;
        let f = |v: f64| FBig::try_from(v).unwrap().with_precision(prec).value();
        f(x.0) + f(x.1) + f(x.2) + f(x.3)
    }

    fn rel_diff(x: Dd, want: &FBig) -> f64 {
        let got = to_big(x);
        let diff = (got - want).to_f64().value().abs();
        let scale = want.to_f64().value().abs().max(1e-300);
        diff / scale
    }

    fn rand_dd(state: &mut u64) -> Dd {
        // xorshift-based pseudo-random quad built from products and sums so
        // all four components are exercised
        let mut next = || {
            *state ^= *state << 13;
            *state ^= *state >> 7;
            *state ^= *state << 17;
            (*state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        let a = Dd::from_f64(next());
        let b = Dd::from_f64(next() * 1e-8);
        let c = Dd::from_f64(next() * 1e-16);
        let d = Dd::from_f64(next() * 1e-24);
        a.add(b).add(c).add(d)
    }

    #[test]
    fn quad_double_matches_bigfloat_oracle() {
        let mut state = 0x9E3779B97F4A7C15u64;
        for _ in 0..200 {
            let x = rand_dd(&mut state);
            let y = rand_dd(&mut state);
            let (bx, by) = (to_big(x), to_big(y));
            assert!(rel_diff(x.add(y), &(bx.clone() + by.clone())) < 1e-58);
            assert!(rel_diff(x.sub(y), &(bx.clone() - by.clone())) < 1e-58);
            assert!(rel_diff(x.mul(y), &(bx.clone() * by.clone())) < 1e-58);
            if y.hi().abs() > 1e-3 {
                assert!(rel_diff(x.div(y), &(bx.clone() / by.clone())) < 1e-56);
            }
            if x.hi() > 1e-3 {
                let s = x.sqrt();
                assert!(rel_diff(s.mul(s), &bx) < 1e-55);
            }
        }
    }

    #[test]
    fn quad_double_deep_cancellation() {
        // (1 + 1e-30) - 1 must keep the tiny part exactly
        let one = Dd::from_f64(1.0);
        let tiny = Dd::from_f64(1e-30);
        let diff = one.add(tiny).sub(one);
        assert!((diff.value() - 1e-30).abs() < 1e-45);
    }
}
