//! Quadratic surds `(a + b*sqrt(d)) / c` with exact comparisons and
//! certified enclosures of their integer multiples modulo one.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use regex::Regex;

use crate::error::{Error, Result};
use crate::interval::{Interval, MAX_BITS, START_BITS};

/// A real quadratic irrational `(a + b*sqrt(d)) / c`.
///
/// Canonical form: `d > 1` squarefree, `b != 0`, `c > 0`, `gcd(a, b, c) = 1`.
/// A double-double approximation is cached for fast bulk scans; exact work
/// always goes through the integer representation.
#[derive(Clone, Debug)]
pub struct Irrational {
    a: i64,
    b: i64,
    d: i64,
    c: i64,
    label: Option<String>,
    approx_hi: f64,
    approx_lo: f64,
}

impl PartialEq for Irrational {
    fn eq(&self, other: &Self) -> bool {
        (self.a, self.b, self.d, self.c) == (other.a, other.b, other.d, other.c)
    }
}

impl Eq for Irrational {}

impl Hash for Irrational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.a, self.b, self.d, self.c).hash(state);
    }
}

fn to_i64(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow)
}

/// Splits `d` as `k^2 * r` with `r` squarefree.
fn squarefree_part(d: i64) -> (i64, i64) {
    let mut k = 1i64;
    let mut r = d;
    let mut p = 2i64;
    while p.saturating_mul(p) <= r {
        while r % (p * p) == 0 {
            r /= p * p;
            k *= p;
        }
        p += 1;
    }
    (k, r)
}

impl Irrational {
    pub fn new(a: i64, b: i64, d: i64, c: i64) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidSurd("denominator is zero".into()));
        }
        if b == 0 {
            return Err(Error::InvalidSurd("coefficient of the root is zero".into()));
        }
        if d <= 1 {
            return Err(Error::InvalidSurd(format!("radicand {d} must exceed 1")));
        }
        let (k, r) = squarefree_part(d);
        if r == 1 {
            return Err(Error::InvalidSurd(format!("radicand {d} is a perfect square")));
        }
        let b = b.checked_mul(k).ok_or(Error::Overflow)?;
        let (mut a, mut b, mut c) = (a as i128, b as i128, c as i128);
        if c < 0 {
            a = -a;
            b = -b;
            c = -c;
        }
        let g = a.gcd(&b).gcd(&c);
        let mut x = Irrational {
            a: to_i64(a / g)?,
            b: to_i64(b / g)?,
            d: r,
            c: to_i64(c / g)?,
            label: None,
            approx_hi: 0.0,
            approx_lo: 0.0,
        };
        x.refresh_approx();
        Ok(x)
    }

    fn refresh_approx(&mut self) {
        let e = self.enclosure(256);
        let hi = e.mid_f64();
        let lo = e.sub(&Interval::from_f64(hi, 256)).mid_f64();
        self.approx_hi = hi;
        self.approx_lo = lo;
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// `(a, b, d, c)`.
    pub fn parts(&self) -> (i64, i64, i64, i64) {
        (self.a, self.b, self.d, self.c)
    }

    pub fn radicand(&self) -> i64 {
        self.d
    }

    pub fn to_f64(&self) -> f64 {
        self.approx_hi
    }

    pub fn neg(&self) -> Self {
        Irrational::new(-self.a, -self.b, self.d, self.c).expect("negation stays canonical")
    }

    pub fn add_int(&self, k: i64) -> Result<Self> {
        let a = self.a as i128 + k as i128 * self.c as i128;
        Irrational::new(to_i64(a)?, self.b, self.d, self.c)
    }

    pub fn mul_int(&self, k: i64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSurd("zero multiple is rational".into()));
        }
        let a = self.a as i128 * k as i128;
        let b = self.b as i128 * k as i128;
        Irrational::new(to_i64(a)?, to_i64(b)?, self.d, self.c)
    }

    pub fn div_int(&self, k: i64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("division by zero".into()));
        }
        let c = self.c as i128 * k as i128;
        Irrational::new(self.a, self.b, self.d, to_i64(c)?)
    }

    /// Sum of two surds over the same field; errors if the result is rational
    /// or the radicands differ.
    pub fn add(&self, other: &Irrational) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::InvalidSurd(format!(
                "cannot add surds with radicands {} and {}",
                self.d, other.d
            )));
        }
        let (c1, c2) = (self.c as i128, other.c as i128);
        let a = self.a as i128 * c2 + other.a as i128 * c1;
        let b = self.b as i128 * c2 + other.b as i128 * c1;
        let c = c1 * c2;
        if b == 0 {
            return Err(Error::InvalidSurd("sum is rational".into()));
        }
        let g = a.gcd(&b).gcd(&c);
        Irrational::new(to_i64(a / g)?, to_i64(b / g)?, self.d, to_i64(c / g)?)
    }

    pub fn sub(&self, other: &Irrational) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Exact sign of `x - num/den`.
    pub fn cmp_ratio(&self, num: &BigInt, den: &BigInt) -> Ordering {
        assert!(!den.is_zero());
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        // sign of den*a - num*c + den*b*sqrt(d)
        let u = &den * self.a - &num * self.c;
        let v = &den * self.b;
        match (u.sign(), v.sign()) {
            (_, num_bigint::Sign::NoSign) => u.sign().cmp(&num_bigint::Sign::NoSign),
            (su, sv) if su == sv || su == num_bigint::Sign::NoSign => {
                if v.is_positive() {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            _ => {
                let uu = &u * &u;
                let vv = &v * &v * self.d;
                // |u| vs |v| sqrt(d); the larger magnitude decides the sign
                if vv > uu {
                    if v.is_positive() {
                        Ordering::Greater
                    } else {
                        Ordering::Less
                    }
                } else if u.is_positive() {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    /// Exact `floor(q x)`.
    pub fn floor_multiple(&self, q: &BigInt) -> BigInt {
        let a = q * self.a;
        let b = q * self.b;
        let c = BigInt::from(self.c);
        if b.is_zero() {
            return a.div_floor(&c);
        }
        let r = (&b * &b * self.d).sqrt();
        if b.is_positive() {
            (a + r).div_floor(&c)
        } else {
            (a - r - BigInt::one()).div_floor(&c)
        }
    }

    /// Encloses `{q x}` (fractional part) at `bits` precision.
    pub fn frac_multiple(&self, q: &BigInt, bits: u32) -> Interval {
        let c = BigInt::from(self.c);
        let f = self.floor_multiple(q);
        let n = q * self.a - &c * &f;
        let b = q * self.b;
        let one = BigInt::one() << (bits as usize);
        if b.is_zero() {
            return Interval::from_ratio(&n, &c, bits);
        }
        let s = ((&b * &b * self.d) << (2 * bits as usize)).sqrt();
        let (low, high) = if b.is_positive() {
            (s.clone(), s + 1)
        } else {
            (-&s - 1, -s)
        };
        let base = n << (bits as usize);
        let lo = (&base + low).div_floor(&c).max(BigInt::zero());
        let hi = crate::interval::div_ceil(&(base + high), &c).min(one);
        Interval::from_scaled(lo.clone().min(hi.clone()), hi, bits)
    }

    /// Encloses `||q x||`, the distance from `q x` to the nearest integer.
    pub fn dist_multiple(&self, q: &BigInt, bits: u32) -> Interval {
        let t = self.frac_multiple(q, bits);
        let d = t.min(&Interval::one(bits).sub(&t));
        let half = BigInt::one() << (bits as usize - 1);
        let lo = d.lo_scaled().clone().max(BigInt::zero()).min(half.clone());
        let hi = d.hi_scaled().clone().min(half);
        Interval::from_scaled(lo, hi, bits)
    }

    /// Encloses `x` itself.
    pub fn enclosure(&self, bits: u32) -> Interval {
        let one = BigInt::one();
        let f = self.floor_multiple(&one);
        Interval::from_int(f, bits).add(&self.frac_multiple(&one, bits))
    }

    /// Encloses `q x`.
    pub fn multiple_enclosure(&self, q: &BigInt, bits: u32) -> Interval {
        let f = self.floor_multiple(q);
        Interval::from_int(f, bits).add(&self.frac_multiple(q, bits))
    }

    /// Encloses `|1 - e(n x)| = 2 sin(pi ||n x||)`, escalating precision until
    /// the enclosure excludes zero. `n` must be nonzero.
    pub fn divisor_modulus(&self, n: i64, bits: u32) -> Result<Interval> {
        if n == 0 {
            return Ok(Interval::zero(bits));
        }
        let q = BigInt::from(n.unsigned_abs());
        let mut b = bits.max(START_BITS);
        loop {
            let d = self.dist_multiple(&q, b);
            let v = d.sin_pi().mul_int(2);
            if v.is_positive() {
                return Ok(v);
            }
            if b >= MAX_BITS {
                return Err(Error::PrecisionExhausted {
                    bits: b,
                    context: format!("separating the small divisor at n = {n} from zero"),
                });
            }
            b *= 2;
        }
    }

    /// `e(n x) = exp(2 pi i n x)`, from a certified enclosure collapsed to
    /// the nearest doubles (error at most one ulp per component).
    pub fn unit_root(&self, n: i64) -> Complex64 {
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let t = self.frac_multiple(&BigInt::from(n.unsigned_abs()), START_BITS);
        let (c, s) = t.cos_sin_2pi();
        let z = Complex64::new(c.mid_f64(), s.mid_f64());
        if n < 0 {
            z.conj()
        } else {
            z
        }
    }

    /// Fast `{k x}` in `[0, 1)` from the cached double-double approximation.
    /// Absolute error is at most [`Irrational::fast_error_bound`].
    pub fn frac_mul_f64(&self, k: i64) -> f64 {
        let kf = k as f64;
        let p = kf * self.approx_hi;
        let e = kf.mul_add(self.approx_hi, -p);
        let r = kf * self.approx_lo;
        let n = p.round();
        let t = (p - n) + (e + r);
        let f = t - t.floor();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }

    /// Fast `||k x||`.
    pub fn dist_mul_f64(&self, k: i64) -> f64 {
        let f = self.frac_mul_f64(k);
        f.min(1.0 - f)
    }

    /// Bound on the absolute error of [`Irrational::frac_mul_f64`] for
    /// `|k| < 2^53`.
    pub fn fast_error_bound(&self, k: i64) -> f64 {
        4.0 * f64::EPSILON + (k.unsigned_abs() as f64) * (self.approx_hi.abs() + 1.0) * 1e-30
    }
}

/// Adaptive-precision enclosure of `||q x||` with width at most `tol`.
pub fn nearest_integer_distance(x: &Irrational, q: &BigInt, tol: f64) -> Result<Interval> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut bits = START_BITS;
    loop {
        let d = x.dist_multiple(q, bits);
        if d.width_le(tol) {
            return Ok(d);
        }
        if bits >= MAX_BITS {
            return Err(Error::PrecisionExhausted {
                bits,
                context: format!("enclosing ||q x|| for q = {q} to width {tol:e}"),
            });
        }
        bits *= 2;
    }
}

impl fmt::Display for Irrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.b < 0 { '-' } else { '+' };
        write!(
            f,
            "({}{}{}*sqrt({}))/{}",
            self.a,
            sign,
            self.b.unsigned_abs(),
            self.d,
            self.c
        )
    }
}

static OUTER_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\((?P<num>[^()]*(?:\([^()]*\)[^()]*)*)\)\s*(?:/\s*(?P<c>[+-]?\d+))?$").expect("valid regex"));

static TERM_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"^\s*(?P<sign>[+-])?\s*(?:(?:(?P<b>\d+)\s*\*\s*)?sqrt\s*\(\s*(?P<d>\d+)\s*\)|(?P<a>\d+))\s*")
        .expect("valid regex")
});

impl serde::Serialize for Irrational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Irrational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Irrational {
    type Err = Error;

    /// Parses `(a+b*sqrt(d))/c`. The integer and root terms may come in
    /// either order, `a`, `b*` and `/c` are optional, and the parentheses
    /// may be dropped when there is no denominator.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidSurd(format!("{why} in {s:?}"));
        let text = s.trim();
        let (num, c) = match OUTER_RE.captures(text) {
            Some(caps) => {
                let c = match caps.name("c") {
                    Some(m) => m.as_str().parse::<i64>().map_err(|e| bad(&e.to_string()))?,
                    None => 1,
                };
                (caps.name("num").expect("group always matches").as_str(), c)
            }
            None => (text, 1),
        };
        let mut rest = num;
        let mut a: Option<i64> = None;
        let mut root: Option<(i64, i64)> = None;
        let mut first = true;
        while !rest.trim().is_empty() {
            let caps = TERM_RE.captures(rest).ok_or_else(|| bad("unexpected text"))?;
            let sign = caps.name("sign").map(|m| m.as_str());
            if sign.is_none() && !first {
                return Err(bad("missing sign between terms"));
            }
            let neg = sign == Some("-");
            let int = |name: &str| -> Result<Option<i64>> {
                caps.name(name)
                    .map(|m| m.as_str().parse::<i64>().map_err(|e| bad(&e.to_string())))
                    .transpose()
            };
            if let Some(d) = int("d")? {
                let b = int("b")?.unwrap_or(1);
                if root.replace((if neg { -b } else { b }, d)).is_some() {
                    return Err(bad("more than one root term"));
                }
            } else {
                let v = int("a")?.expect("term is either a root or an integer");
                if a.replace(if neg { -v } else { v }).is_some() {
                    return Err(bad("more than one integer term"));
                }
            }
            rest = &rest[caps.get(0).expect("whole match").end()..];
            first = false;
        }
        let (b, d) = root.ok_or_else(|| bad("no sqrt term"))?;
        Irrational::new(a.unwrap_or(0), b, d, c)
    }
}

impl Irrational {
    /// `floor(x)` as an i64, for display and small cases.
    pub fn floor_i64(&self) -> i64 {
        self.floor_multiple(&BigInt::one())
            .to_i64()
            .expect("floor of a canonical surd fits in i64")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn parses_canonical_forms() {
        let x: Irrational = "(-1+1*sqrt(2))/1".parse().unwrap();
        assert_eq!(x.parts(), (-1, 1, 2, 1));
        let y: Irrational = "(1+sqrt(5))/2".parse().unwrap();
        assert_eq!(y.parts(), (1, 1, 5, 2));
        let z: Irrational = "sqrt(3)".parse().unwrap();
        assert_eq!(z.parts(), (0, 1, 3, 1));
        let w: Irrational = "(-1+2*sqrt(2))/3".parse().unwrap();
        assert_eq!(w.parts(), (-1, 2, 2, 3));
        let v: Irrational = "(2-2*sqrt(8))/4".parse().unwrap();
        // sqrt(8) = 2 sqrt(2); (2 - 4 sqrt 2)/4 = (1 - 2 sqrt 2)/2
        assert_eq!(v.parts(), (1, -2, 2, 2));
        let u: Irrational = "sqrt(2)-1".parse().unwrap();
        assert_eq!(u, x);
        assert_eq!(" ( 2*sqrt(2) - 1 ) / 3 ".parse::<Irrational>().unwrap(), w);
        assert!("sqrt(2)+sqrt(3)".parse::<Irrational>().is_err());
        assert!("1+2".parse::<Irrational>().is_err());
    }

    #[test]
    fn rejects_perfect_squares_and_garbage() {
        assert!(matches!(
            "(1+2*sqrt(4))/3".parse::<Irrational>(),
            Err(Error::InvalidSurd(_))
        ));
        assert!("(1+2*sqrt(2)/3".parse::<Irrational>().is_err());
        assert!("1+sqrt(2)/3".parse::<Irrational>().is_err());
        assert!("(1+sqrt(2))/0".parse::<Irrational>().is_err());
        assert!("pi".parse::<Irrational>().is_err());
        assert!("(1 2*sqrt(2))".parse::<Irrational>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["(-1+1*sqrt(2))/1", "(1+1*sqrt(5))/2", "(3-7*sqrt(11))/5"] {
            let x: Irrational = s.parse().unwrap();
            assert_eq!(x.to_string(), s);
            assert_eq!(x.to_string().parse::<Irrational>().unwrap(), x);
        }
    }

    #[test]
    fn exact_floor_and_comparison() {
        let x: Irrational = "sqrt(2)".parse().unwrap();
        assert_eq!(x.floor_multiple(&big(8)), big(11));
        assert_eq!(x.neg().floor_multiple(&big(8)), big(-12));
        assert_eq!(x.cmp_ratio(&big(141421), &big(100000)), Ordering::Greater);
        assert_eq!(x.cmp_ratio(&big(141422), &big(100000)), Ordering::Less);
        assert_eq!(x.neg().cmp_ratio(&big(-141421), &big(100000)), Ordering::Less);
        let g: Irrational = "(1-sqrt(5))/2".parse().unwrap();
        assert_eq!(g.cmp_ratio(&big(-618034), &big(1000000)), Ordering::Greater);
        assert_eq!(g.cmp_ratio(&big(0), &big(1)), Ordering::Less);
    }

    #[test]
    fn distance_enclosures() {
        let x: Irrational = "sqrt(2)".parse().unwrap();
        let d = nearest_integer_distance(&x, &big(8), 1e-12).unwrap();
        assert!(d.width_le(1e-12));
        assert!(d.lo_f64() <= 0.313_708_498_984_760_4 && 0.313_708_498_984_760_3 <= d.hi_f64());
        let g: Irrational = "(-1+sqrt(5))/2".parse().unwrap();
        let d = nearest_integer_distance(&g, &big(5), 1e-12).unwrap();
        assert!((d.mid_f64() - 0.090_169_943_749_474_24).abs() < 1e-15);
    }

    #[test]
    fn distance_never_exceeds_half() {
        // (1 + 1e-9 sqrt 2)/2 sits just above one half
        let x = Irrational::new(1_000_000_000, 1, 2, 2_000_000_000).unwrap();
        let d = x.dist_multiple(&big(1), 128);
        assert!(d.hi_f64() <= 0.5);
        assert!(d.lo_f64() > 0.49);
    }

    #[test]
    fn fast_path_agrees_with_exact() {
        let x: Irrational = "(-1+sqrt(3))/1".parse().unwrap();
        for k in [1i64, 7, 1000, 123_456, 999_983, -5, -777_777] {
            let exact = x.dist_multiple(&big(k.abs()), 128).mid_f64();
            let fast = x.dist_mul_f64(k);
            assert!((exact - fast).abs() <= x.fast_error_bound(k), "k = {k}");
        }
    }

    #[test]
    fn unit_roots_are_conjugate_symmetric() {
        let x: Irrational = "(-1+sqrt(2))/1".parse().unwrap();
        let z = x.unit_root(3);
        assert_eq!(x.unit_root(-3), z.conj());
        let angle = 2.0 * std::f64::consts::PI * 3.0 * (std::f64::consts::SQRT_2 - 1.0);
        assert!((z.re - angle.cos()).abs() < 1e-14);
        assert!((z.im - angle.sin()).abs() < 1e-14);
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn surd_arithmetic() {
        let a: Irrational = "(-1+sqrt(2))/1".parse().unwrap();
        let b = a.mul_int(2).unwrap().add_int(1).unwrap().div_int(3).unwrap();
        assert_eq!(b.to_string(), "(-1+2*sqrt(2))/3");
        assert!(a.sub(&a).is_err());
        let c: Irrational = "sqrt(3)".parse().unwrap();
        assert!(a.add(&c).is_err());
        assert_eq!(a.add(&a).unwrap(), a.mul_int(2).unwrap());
    }

    #[test]
    fn divisor_modulus_is_positive() {
        let a: Irrational = "(-1+sqrt(2))/1".parse().unwrap();
        let m = a.divisor_modulus(1, 128).unwrap();
        let expected = 2.0 * (std::f64::consts::PI * (std::f64::consts::SQRT_2 - 1.0)).sin();
        assert!((m.mid_f64() - expected).abs() < 1e-15);
        assert!(a.divisor_modulus(-4, 128).unwrap().is_positive());
    }
}
