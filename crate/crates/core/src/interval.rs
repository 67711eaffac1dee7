//! Outward-rounded interval arithmetic over dyadic rationals.
//!
//! An [`Interval`] stores two big integers `lo`, `hi` and a precision `bits`;
//! it denotes the closed set `[lo * 2^-bits, hi * 2^-bits]`. Every operation
//! rounds the lower endpoint toward `-inf` and the upper toward `+inf`, so the
//! result always contains the exact value of the operation applied to any
//! points of the operands.
//!
//! Elementary functions (`pi`, `sin`, `cos`) are evaluated with truncated
//! fixed-point series whose truncation and rounding errors are bounded
//! explicitly and folded into the result.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

/// Starting precision of adaptive evaluations.
pub const START_BITS: u32 = 128;
/// Hard cap on adaptive precision.
pub const MAX_BITS: u32 = 8192;

/// Guard bits used inside series evaluations.
const GUARD_BITS: u32 = 32;

/// `x * 2^-s`, rounded toward `-inf`.
pub(crate) fn floor_shr(x: &BigInt, s: u32) -> BigInt {
    // BigInt's Shr rounds toward -inf.
    x >> (s as usize)
}

/// `x * 2^-s`, rounded toward `+inf`.
pub(crate) fn ceil_shr(x: &BigInt, s: u32) -> BigInt {
    -((-x) >> (s as usize))
}

pub(crate) fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Smallest integer `s` with `s*s >= n` (n >= 0).
pub(crate) fn ceil_sqrt(n: &BigInt) -> BigInt {
    let s = n.sqrt();
    if &(&s * &s) < n {
        s + 1
    } else {
        s
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Largest f64 that is `<= n * 2^-bits`.
fn dyadic_to_f64_down(n: &BigInt, bits: u32) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    if n.is_negative() {
        return -dyadic_to_f64_up(&-n, bits);
    }
    let nb = n.bits() as i64;
    let s = (nb - 64).max(0);
    let m = floor_shr(n, s as u32).to_u128().expect("fits in 64 bits");
    let mut f = m as f64;
    if f as u128 > m {
        f = f.next_down();
    }
    let r = ldexp(f, s - bits as i64);
    if r < f64::MIN_POSITIVE * 2f64.powi(60) {
        // possible inexact scaling in the subnormal range
        r.next_down().max(0.0)
    } else {
        r
    }
}

/// Smallest f64 that is `>= n * 2^-bits`.
fn dyadic_to_f64_up(n: &BigInt, bits: u32) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    if n.is_negative() {
        return -dyadic_to_f64_down(&-n, bits);
    }
    let nb = n.bits() as i64;
    let s = (nb - 64).max(0);
    let m = ceil_shr(n, s as u32).to_u128().expect("fits in 65 bits");
    let mut f = m as f64;
    if (f as u128) < m {
        f = f.next_up();
    }
    let r = ldexp(f, s - bits as i64);
    if r < f64::MIN_POSITIVE * 2f64.powi(60) {
        r.next_up()
    } else {
        r
    }
}

/// A pair of f64 bounds, the reporting form of a certified quantity.
///
/// Produced from an [`Interval`] by outward rounding, so it still contains
/// the exact value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan());
        Enclosure { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Enclosure { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Widen a floating-point value by a relative error bound.
    pub fn around(value: f64, rel_err: f64) -> Self {
        let e = value.abs() * rel_err;
        Enclosure {
            lo: (value - e).next_down(),
            hi: (value + e).next_up(),
        }
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.15e}, {:.15e}]", self.lo, self.hi)
    }
}

/// Closed interval with dyadic endpoints `[lo, hi] * 2^-bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

impl Interval {
    /// Builds an interval from scaled endpoints; panics if `lo > hi`.
    pub fn from_scaled(lo: BigInt, hi: BigInt, bits: u32) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi, bits }
    }

    pub fn from_int<T: Into<BigInt>>(v: T, bits: u32) -> Self {
        let v: BigInt = v.into() << (bits as usize);
        Interval {
            lo: v.clone(),
            hi: v,
            bits,
        }
    }

    pub fn zero(bits: u32) -> Self {
        Self::from_int(0, bits)
    }

    pub fn one(bits: u32) -> Self {
        Self::from_int(1, bits)
    }

    /// Encloses `num / den` (`den != 0`).
    pub fn from_ratio(num: &BigInt, den: &BigInt, bits: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        let scaled = num << (bits as usize);
        Interval {
            lo: scaled.div_floor(&den),
            hi: div_ceil(&scaled, &den),
            bits,
        }
    }

    /// Encloses a finite f64 (exactly, when `bits` is large enough).
    pub fn from_f64(x: f64, bits: u32) -> Self {
        assert!(x.is_finite(), "non-finite value");
        if x == 0.0 {
            return Self::zero(bits);
        }
        let raw = x.to_bits();
        let sign = if raw >> 63 == 1 { -1i64 } else { 1 };
        let exp = ((raw >> 52) & 0x7ff) as i64;
        let frac = raw & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = BigInt::from(mant) * sign;
        let shift = e + bits as i64;
        if shift >= 0 {
            let v = m << (shift as usize);
            Interval {
                lo: v.clone(),
                hi: v,
                bits,
            }
        } else {
            let s = (-shift) as u32;
            Interval {
                lo: floor_shr(&m, s),
                hi: ceil_shr(&m, s),
                bits,
            }
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lo_scaled(&self) -> &BigInt {
        &self.lo
    }

    pub fn hi_scaled(&self) -> &BigInt {
        &self.hi
    }

    /// Re-expresses the interval at another precision, rounding outward.
    pub fn with_bits(&self, bits: u32) -> Self {
        match bits.cmp(&self.bits) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let s = (bits - self.bits) as usize;
                Interval {
                    lo: &self.lo << s,
                    hi: &self.hi << s,
                    bits,
                }
            }
            Ordering::Less => {
                let s = self.bits - bits;
                Interval {
                    lo: floor_shr(&self.lo, s),
                    hi: ceil_shr(&self.hi, s),
                    bits,
                }
            }
        }
    }

    fn aligned(a: &Interval, b: &Interval) -> (Interval, Interval) {
        let bits = a.bits.max(b.bits);
        (a.with_bits(bits), b.with_bits(bits))
    }

    pub fn lo_f64(&self) -> f64 {
        dyadic_to_f64_down(&self.lo, self.bits)
    }

    pub fn hi_f64(&self) -> f64 {
        dyadic_to_f64_up(&self.hi, self.bits)
    }

    /// Nearest-ish f64 to the midpoint (within one ulp).
    pub fn mid_f64(&self) -> f64 {
        let m = (&self.lo + &self.hi).div_floor(&BigInt::from(2));
        let lo = dyadic_to_f64_down(&m, self.bits);
        let hi = dyadic_to_f64_up(&m, self.bits);
        if lo == hi {
            lo
        } else {
            // pick the closer of the two bracketing doubles
            let lo_i = Interval::from_f64(lo, self.bits + 64);
            let hi_i = Interval::from_f64(hi, self.bits + 64);
            let mm = &m << 64usize;
            let dl = &mm - &lo_i.lo;
            let dh = &hi_i.lo - &mm;
            if dl <= dh {
                lo
            } else {
                hi
            }
        }
    }

    pub fn to_enclosure(&self) -> Enclosure {
        Enclosure {
            lo: self.lo_f64(),
            hi: self.hi_f64(),
        }
    }

    /// Upper bound on the width as an f64.
    pub fn width_f64(&self) -> f64 {
        dyadic_to_f64_up(&(&self.hi - &self.lo), self.bits)
    }

    /// The exact width as a point interval.
    pub fn width_interval(&self) -> Interval {
        let w = &self.hi - &self.lo;
        Interval {
            lo: w.clone(),
            hi: w,
            bits: self.bits,
        }
    }

    /// True when the width is at most `tol` (compared exactly).
    pub fn width_le(&self, tol: f64) -> bool {
        let w = Interval {
            lo: &self.hi - &self.lo,
            hi: &self.hi - &self.lo,
            bits: self.bits,
        };
        !w.certainly_gt(&Interval::from_f64(tol, self.bits.max(1100)))
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    /// Every point of `self` is `< ` every point of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        let (a, b) = Self::aligned(self, other);
        a.hi < b.lo
    }

    pub fn certainly_le(&self, other: &Interval) -> bool {
        let (a, b) = Self::aligned(self, other);
        a.hi <= b.lo
    }

    pub fn certainly_gt(&self, other: &Interval) -> bool {
        other.certainly_lt(self)
    }

    pub fn certainly_ge(&self, other: &Interval) -> bool {
        other.certainly_le(self)
    }

    /// Whether the exact rational `num/den` lies in the interval.
    pub fn contains_ratio(&self, num: &BigInt, den: &BigInt) -> bool {
        // lo * den <= num * 2^bits <= hi * den, with den > 0
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        let scaled = num << (self.bits as usize);
        &self.lo * &den <= scaled && scaled <= &self.hi * &den
    }

    pub fn contains_interval(&self, inner: &Interval) -> bool {
        let (a, b) = Self::aligned(self, inner);
        a.lo <= b.lo && b.hi <= a.hi
    }

    pub fn neg(&self) -> Self {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
            bits: self.bits,
        }
    }

    pub fn add(&self, other: &Interval) -> Self {
        let (a, b) = Self::aligned(self, other);
        Interval {
            lo: a.lo + b.lo,
            hi: a.hi + b.hi,
            bits: a.bits,
        }
    }

    pub fn sub(&self, other: &Interval) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Self {
        let (a, b) = Self::aligned(self, other);
        let p = [&a.lo * &b.lo, &a.lo * &b.hi, &a.hi * &b.lo, &a.hi * &b.hi];
        let min = p.iter().min().expect("four products");
        let max = p.iter().max().expect("four products");
        Interval {
            lo: floor_shr(min, a.bits),
            hi: ceil_shr(max, a.bits),
            bits: a.bits,
        }
    }

    pub fn mul_int<T: Into<BigInt>>(&self, k: T) -> Self {
        let k: BigInt = k.into();
        let (x, y) = (&self.lo * &k, &self.hi * &k);
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        Interval {
            lo,
            hi,
            bits: self.bits,
        }
    }

    pub fn sqr(&self) -> Self {
        let a = self.lo.abs();
        let b = self.hi.abs();
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        let lo = if self.contains_zero() {
            BigInt::zero()
        } else {
            floor_shr(&(&small * &small), self.bits)
        };
        Interval {
            lo,
            hi: ceil_shr(&(&large * &large), self.bits),
            bits: self.bits,
        }
    }

    pub fn powu(&self, n: u32) -> Self {
        let mut acc = Interval::one(self.bits);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Division; `None` when the divisor contains zero.
    pub fn div(&self, other: &Interval) -> Option<Self> {
        if other.contains_zero() {
            return None;
        }
        let (a, b) = Self::aligned(self, other);
        let s = a.bits as usize;
        let nums = [&a.lo << s, &a.hi << s];
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for n in &nums {
            for d in [&b.lo, &b.hi] {
                let f = n.div_floor(d);
                let c = div_ceil(n, d);
                lo = Some(match lo {
                    Some(l) if l <= f => l,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(h) if h >= c => h,
                    _ => c,
                });
            }
        }
        Some(Interval {
            lo: lo.expect("set"),
            hi: hi.expect("set"),
            bits: a.bits,
        })
    }

    pub fn div_int<T: Into<BigInt>>(&self, k: T) -> Self {
        let k: BigInt = k.into();
        assert!(!k.is_zero(), "division by zero");
        let (k, s) = if k.is_negative() {
            (-k, self.neg())
        } else {
            (k, self.clone())
        };
        Interval {
            lo: s.lo.div_floor(&k),
            hi: div_ceil(&s.hi, &k),
            bits: s.bits,
        }
    }

    /// Square root of the non-negative part; `None` if entirely negative.
    pub fn sqrt(&self) -> Option<Self> {
        if self.hi.is_negative() {
            return None;
        }
        let s = self.bits as usize;
        let lo = if self.lo.is_positive() {
            (&self.lo << s).sqrt()
        } else {
            BigInt::zero()
        };
        Some(Interval {
            lo,
            hi: ceil_sqrt(&(&self.hi << s)),
            bits: self.bits,
        })
    }

    pub fn abs(&self) -> Self {
        if self.lo.is_negative() && self.hi.is_positive() {
            Interval {
                lo: BigInt::zero(),
                hi: self.hi.clone().max(-&self.lo),
                bits: self.bits,
            }
        } else if self.hi.is_negative() || (self.hi.is_zero() && self.lo.is_negative()) {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Pointwise minimum `{min(x, y)}` over the two intervals.
    pub fn min(&self, other: &Interval) -> Self {
        let (a, b) = Self::aligned(self, other);
        Interval {
            lo: a.lo.min(b.lo),
            hi: a.hi.min(b.hi),
            bits: a.bits,
        }
    }

    pub fn max(&self, other: &Interval) -> Self {
        let (a, b) = Self::aligned(self, other);
        Interval {
            lo: a.lo.max(b.lo),
            hi: a.hi.max(b.hi),
            bits: a.bits,
        }
    }

    /// Hull of two intervals.
    pub fn hull(&self, other: &Interval) -> Self {
        let (a, b) = Self::aligned(self, other);
        Interval {
            lo: a.lo.min(b.lo),
            hi: a.hi.max(b.hi),
            bits: a.bits,
        }
    }

    /// `pi` at the given precision.
    pub fn pi(bits: u32) -> Self {
        static CACHE: Lazy<Mutex<HashMap<u32, Interval>>> = Lazy::new(|| Mutex::new(HashMap::new()));
        if let Some(v) = CACHE.lock().expect("pi cache").get(&bits) {
            return v.clone();
        }
        let v = compute_pi(bits);
        CACHE.lock().expect("pi cache").insert(bits, v.clone());
        v
    }

    /// `(sin x, cos x)` for intervals inside `[-2, 2]`.
    pub fn sin_cos(&self) -> (Interval, Interval) {
        let two = BigInt::from(2) << (self.bits as usize);
        assert!(
            self.lo >= -&two && self.hi <= two,
            "sin_cos argument outside [-2, 2]"
        );
        let p = self.bits;
        let mid = (&self.lo + &self.hi).div_floor(&BigInt::from(2));
        let rad = (&self.hi - &mid).max(&mid - &self.lo);
        let w = p + GUARD_BITS;
        let (s, c, err) = sin_cos_fixed(&(&mid << GUARD_BITS as usize), w);
        let widen = |v: BigInt| -> Interval {
            let at_w = Interval {
                lo: &v - &err,
                hi: &v + &err,
                bits: w,
            }
            .with_bits(p);
            let unit = Interval {
                lo: -BigInt::one() << (p as usize),
                hi: BigInt::one() << (p as usize),
                bits: p,
            };
            Interval {
                lo: (at_w.lo - &rad).max(unit.lo.clone()),
                hi: (at_w.hi + &rad).min(unit.hi),
                bits: p,
            }
        };
        (widen(s), widen(c))
    }

    pub fn sin(&self) -> Interval {
        self.sin_cos().0
    }

    /// `sin(pi x)` for `|x| <= 0.6`.
    pub fn sin_pi(&self) -> Interval {
        let bits = self.bits.max(START_BITS);
        Interval::pi(bits).mul(&self.with_bits(bits)).sin()
    }

    /// `(cos 2 pi t, sin 2 pi t)` for any `t`.
    pub fn cos_sin_2pi(&self) -> (Interval, Interval) {
        let bits = self.bits.max(START_BITS);
        let t = self.with_bits(bits);
        // reduce around the nearest integer so that |pi s| <= 2
        let mid = (&t.lo + &t.hi).div_floor(&BigInt::from(2));
        let half = BigInt::one() << (bits as usize - 1);
        let n = floor_shr(&(mid + half), bits);
        let s = t.sub(&Interval::from_int(n, bits));
        let theta = Interval::pi(bits).mul(&s);
        let (sn, cs) = theta.sin_cos();
        let cos2 = Interval::one(bits).sub(&sn.sqr().mul_int(2));
        let sin2 = sn.mul(&cs).mul_int(2);
        (cos2, sin2)
    }

    /// Natural logarithm; `None` unless the interval is positive.
    pub fn ln(&self) -> Option<Interval> {
        if !self.is_positive() {
            return None;
        }
        let p = self.bits;
        let w = p + GUARD_BITS + 16;
        let (lo, elo) = ln_fixed(&self.lo, p, w);
        let (hi, ehi) = ln_fixed(&self.hi, p, w);
        Some(
            Interval {
                lo: lo - elo,
                hi: hi + ehi,
                bits: w,
            }
            .with_bits(p),
        )
    }

    /// Exponential.
    pub fn exp(&self) -> Interval {
        let p = self.bits.max(START_BITS);
        let w = p + GUARD_BITS + 16;
        let s = (w - self.bits) as usize;
        let (lo, elo) = exp_fixed(&(&self.lo << s), w);
        let (hi, ehi) = exp_fixed(&(&self.hi << s), w);
        Interval {
            lo: (lo - elo).max(BigInt::zero()),
            hi: hi + ehi,
            bits: w,
        }
        .with_bits(p)
    }

    /// `x^t` for positive `x`, as `exp(t ln x)`.
    pub fn powf(&self, t: &Interval) -> Option<Interval> {
        let bits = self.bits.max(t.bits).max(START_BITS);
        let l = self.with_bits(bits).ln()?;
        Some(l.mul(&t.with_bits(bits)).exp())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_enclosure())
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_enclosure().serialize(serializer)
    }
}

/// `atan(1/m)` in fixed point at scale `2^w`, with an error bound in ulps.
fn atan_inv_fixed(m: u64, w: u32) -> (BigInt, BigInt) {
    let m2 = BigInt::from(m * m);
    let mut power = (BigInt::one() << (w as usize)) / BigInt::from(m);
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    loop {
        let term = &power / BigInt::from(2 * k + 1);
        if term.is_zero() {
            break;
        }
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &m2;
        k += 1;
    }
    // each term is off by at most 2 ulps; the omitted tail is below 3 ulps
    (sum, BigInt::from(2 * k + 3))
}

fn compute_pi(bits: u32) -> Interval {
    let w = bits + GUARD_BITS;
    let (a, ea) = atan_inv_fixed(5, w);
    let (b, eb) = atan_inv_fixed(239, w);
    let v = a * 16 - b * 4;
    let err = ea * 16 + eb * 4;
    Interval {
        lo: &v - &err,
        hi: &v + &err,
        bits: w,
    }
    .with_bits(bits)
}

/// `(sin x, cos x, err)` for a fixed-point `x` with `|x| <= 2` at scale `2^w`.
/// `err` bounds the absolute error of both results in ulps.
fn sin_cos_fixed(x: &BigInt, w: u32) -> (BigInt, BigInt, BigInt) {
    let one = BigInt::one() << (w as usize);
    let negative = x.is_negative();
    let x = &x.abs();
    let x2 = floor_shr(&(x * x), w);
    let mut steps: u64 = 0;

    let mut sin = x.clone();
    let mut term = x.clone();
    let mut k: u64 = 1;
    loop {
        term = floor_shr(&(&term * &x2), w).div_floor(&BigInt::from((2 * k) * (2 * k + 1)));
        if term.is_zero() {
            break;
        }
        if k % 2 == 1 {
            sin -= &term;
        } else {
            sin += &term;
        }
        k += 1;
    }
    steps = steps.max(k);

    let mut cos = one.clone();
    let mut term = one;
    let mut k: u64 = 1;
    loop {
        term = floor_shr(&(&term * &x2), w).div_floor(&BigInt::from((2 * k - 1) * (2 * k)));
        if term.is_zero() {
            break;
        }
        if k % 2 == 1 {
            cos -= &term;
        } else {
            cos += &term;
        }
        k += 1;
    }
    steps = steps.max(k);

    // term errors grow by at most 2 ulps per step (the factor x^2/D is < 1);
    // the sum of N such terms plus the alternating tail stays under (N+2)^2.
    let err = BigInt::from((steps + 2) * (steps + 2) + 4);
    if negative {
        sin = -sin;
    }
    (sin, cos, err)
}

/// `atanh(z)` for `0 <= z <= 1/3` in fixed point at scale `2^w`, with an
/// error bound in ulps (the input is taken as exact).
fn atanh_fixed(z: &BigInt, w: u32) -> (BigInt, BigInt) {
    let z2 = floor_shr(&(z * z), w);
    let mut power = z.clone();
    let mut sum = z.clone();
    let mut k: u64 = 1;
    loop {
        power = floor_shr(&(&power * &z2), w);
        let term = &power / BigInt::from(2 * k + 1);
        if term.is_zero() {
            break;
        }
        sum += term;
        k += 1;
    }
    (sum, BigInt::from((k + 2) * (k + 2) + 4))
}

/// `ln 2` at scale `2^w` with its error in ulps.
fn ln2_fixed(w: u32) -> (BigInt, BigInt) {
    static CACHE: Lazy<Mutex<HashMap<u32, (BigInt, BigInt)>>> = Lazy::new(|| Mutex::new(HashMap::new()));
    if let Some(v) = CACHE.lock().expect("ln2 cache").get(&w) {
        return v.clone();
    }
    // ln 2 = 2 atanh(1/3)
    let z = (BigInt::one() << (w as usize)) / BigInt::from(3);
    let (a, e) = atanh_fixed(&z, w);
    let v = (a * 2, (e + 2) * 2);
    CACHE.lock().expect("ln2 cache").insert(w, v.clone());
    v
}

/// `ln(m 2^-bits)` for `m > 0` at scale `2^w`, with an error bound in ulps.
fn ln_fixed(m: &BigInt, bits: u32, w: u32) -> (BigInt, BigInt) {
    let nb = m.bits() as i64;
    // m 2^-bits = y 2^k with y in [1, 2)
    let k = nb - 1 - bits as i64;
    let shift = w as i64 - (nb - 1);
    let y = if shift >= 0 {
        m << (shift as usize)
    } else {
        floor_shr(m, (-shift) as u32)
    };
    let one = BigInt::one() << (w as usize);
    let z = ((&y - &one) << (w as usize)) / (&y + &one);
    let (a, ea) = atanh_fixed(&z, w);
    let (l2, e2) = ln2_fixed(w);
    let v = a * 2 + &l2 * k;
    let err = (ea + 3) * 2 + e2 * k.unsigned_abs() + 2;
    (v, err)
}

/// `exp(x)` for fixed-point `x` at scale `2^w`, with an error bound in ulps.
fn exp_fixed(x: &BigInt, w: u32) -> (BigInt, BigInt) {
    let approx = dyadic_to_f64_down(x, w);
    let k = (approx / std::f64::consts::LN_2).round() as i64;
    let (l2, e2) = ln2_fixed(w);
    let r = x - &l2 * k;
    let er = e2 * k.unsigned_abs();
    let negative = r.is_negative();
    let ra = r.abs();
    let one = BigInt::one() << (w as usize);
    let mut sum = one.clone();
    let mut term = one.clone();
    let mut i: u64 = 1;
    loop {
        term = floor_shr(&(&term * &ra), w) / BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    // |r| < 0.4, so exp(|r|) < 1.5 and the error in r costs at most 2 er
    let mut err = BigInt::from((i + 2) * (i + 2)) + er * 2;
    if negative {
        sum = (&one << (w as usize)) / &sum;
        err += 1;
    }
    if k >= 0 {
        let s = k as usize;
        (sum << s, err << s)
    } else {
        let s = (-k) as u32;
        (floor_shr(&sum, s), ceil_shr(&err, s) + 1)
    }
}
