//! Sparse Fourier series on the circle and the operators of circle rotations.
//!
//! A series stores finitely many `f64` complex coefficients together with a
//! bound on the accumulated rounding error, measured as the l1 norm of the
//! difference between the stored and the exact coefficient vectors. Every
//! operator propagates that bound. Quantities that certificates depend on
//! are recomputed from the exact surd data in interval arithmetic instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diophantine::Irrational;
use crate::error::{Error, Result};
use crate::interval::{Interval, START_BITS};

/// Relative error of one certified unit root or divisor collapsed to
/// doubles, plus one complex multiplication or division.
const OP_REL_ERR: f64 = 8.0 * f64::EPSILON;

/// A finitely supported series `sum_n c_n e(n x)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SparseFourierSeries {
    coeffs: BTreeMap<i64, Complex64>,
    real_valued: bool,
    error: f64,
}

#[derive(Serialize, Deserialize)]
struct Term {
    n: i64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    real_valued: bool,
    error: f64,
    coefficients: Vec<Term>,
}

impl Serialize for SparseFourierSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            real_valued: self.real_valued,
            error: self.error,
            coefficients: self.iter().map(|(n, c)| Term { n, re: c.re, im: c.im }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseFourierSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SeriesRepr::deserialize(d)?;
        let mut f = SparseFourierSeries::from_coeffs(r.coefficients.into_iter().map(|t| (t.n, Complex64::new(t.re, t.im))));
        f.error = r.error;
        if r.real_valued {
            f = f.into_real_valued().map_err(serde::de::Error::custom)?;
        }
        Ok(f)
    }
}

impl SparseFourierSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a series from `(n, c_n)` pairs; zero coefficients are dropped
    /// and repeated frequencies are summed.
    pub fn from_coeffs<I: IntoIterator<Item = (i64, Complex64)>>(terms: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (n, c) in terms {
            *coeffs.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c: &mut Complex64| *c != Complex64::new(0.0, 0.0));
        SparseFourierSeries {
            coeffs,
            real_valued: false,
            error: 0.0,
        }
    }

    /// From real coefficients.
    pub fn from_real<I: IntoIterator<Item = (i64, f64)>>(terms: I) -> Self {
        Self::from_coeffs(terms.into_iter().map(|(n, c)| (n, Complex64::new(c, 0.0))))
    }

    pub fn single(n: i64, c: Complex64) -> Self {
        Self::from_coeffs([(n, c)])
    }

    pub fn constant(c: f64) -> Self {
        Self::from_real([(0, c)])
    }

    /// Marks the series as real valued after checking `c_{-n} = conj(c_n)`.
    pub fn into_real_valued(mut self) -> Result<Self> {
        for (&n, c) in &self.coeffs {
            if self.coeff(-n) != c.conj() {
                return Err(Error::Precondition(format!("coefficient at {} is not the conjugate of the one at {n}", -n)));
            }
        }
        self.real_valued = true;
        Ok(self)
    }

    /// Random centered trigonometric polynomial with frequencies in
    /// `[-radius, radius]` and unit l2 coefficient norm. Real valued when
    /// `real` is set.
    pub fn random_centered<R: Rng + ?Sized>(rng: &mut R, radius: i64, real: bool) -> Self {
        assert!(radius >= 1);
        let mut terms = Vec::new();
        for n in 1..=radius {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            terms.push((n, c));
            let minus = if real { c.conj() } else { Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) };
            terms.push((-n, minus));
        }
        let f = Self::from_coeffs(terms);
        let norm = f.l2_norm();
        let f = f.scale(Complex64::new(1.0 / norm, 0.0));
        if real {
            f.into_real_valued().expect("symmetric by construction")
        } else {
            f
        }
    }

    /// Coefficient at `n`; exactly zero off the support.
    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn support(&self) -> Vec<i64> {
        self.coeffs.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &c)| (n, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    /// Bound on the l1 distance between stored and exact coefficients.
    pub fn error(&self) -> f64 {
        self.error
    }

    pub fn is_centered(&self) -> bool {
        !self.coeffs.contains_key(&0)
    }

    pub fn require_centered(&self) -> Result<()> {
        match self.coeffs.get(&0) {
            Some(c) => Err(Error::NotCentered(c.to_string())),
            None => Ok(()),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Upper bound for the sup norm of the exact series, used as the
    /// continuity certificate.
    pub fn l1_bound(&self) -> f64 {
        (self.l1_norm() + self.error) * (1.0 + 1e-15)
    }

    /// Encloses the l1 norm of the exact series: the stored coefficients'
    /// moduli summed in interval arithmetic, widened by the tracked error.
    pub fn certified_l1(&self, bits: u32) -> Interval {
        let stored = self
            .coeffs
            .values()
            .fold(Interval::zero(bits), |acc, c| acc.add(&abs_enclosure(*c, bits)));
        let err = Interval::from_f64(self.error, bits);
        stored.hull(&stored.add(&err))
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::from_coeffs(self.iter().map(|(n, c)| (n, c * s)));
        out.error = self.error * s.norm() + OP_REL_ERR * out.l1_norm();
        out.real_valued = self.real_valued && s.im == 0.0;
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::from_coeffs(self.iter().chain(other.iter()));
        out.error = self.error + other.error + f64::EPSILON * out.l1_norm();
        out.real_valued = self.real_valued && other.real_valued;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Multiplies coefficient `n` by `m(n)`; `rel` bounds the relative error
    /// of each computed multiplier, `gain` the modulus of the exact one.
    fn map_multiplier<F: Fn(i64) -> Complex64>(&self, m: F, rel: f64, gain: f64) -> Self {
        let mut out = Self::from_coeffs(self.iter().map(|(n, c)| (n, c * m(n))));
        out.error = self.error * gain * (1.0 + rel) + rel * out.l1_norm() * (1.0 + 2.0 * rel);
        out.real_valued = self.real_valued;
        out
    }

    /// CSV with columns `n, re, im`, ordered by frequency.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im\n");
        for (n, c) in self.iter() {
            writeln!(out, "{n},{:e},{:e}", c.re, c.im).unwrap();
        }
        out
    }

    /// Largest coefficientwise discrepancy relative to the larger modulus.
    pub fn max_relative_difference(&self, other: &Self) -> f64 {
        let mut keys: Vec<i64> = self.support();
        keys.extend(other.support());
        keys.into_iter()
            .map(|n| {
                let (a, b) = (self.coeff(n), other.coeff(n));
                let scale = a.norm().max(b.norm());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).norm() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Encloses `|c|^2` for a stored coefficient.
pub fn modulus_sq_enclosure(c: Complex64, bits: u32) -> Interval {
    Interval::from_f64(c.re, bits)
        .sqr()
        .add(&Interval::from_f64(c.im, bits).sqr())
}

/// Encloses `|c|` for a stored coefficient.
pub fn abs_enclosure(c: Complex64, bits: u32) -> Interval {
    if c.im == 0.0 {
        return Interval::from_f64(c.re.abs(), bits);
    }
    if c.re == 0.0 {
        return Interval::from_f64(c.im.abs(), bits);
    }
    modulus_sq_enclosure(c, bits).sqrt().expect("non-negative")
}

/// `1 - e(n x)` as doubles (relative error at most two ulps per component).
pub fn small_divisor(x: &Irrational, n: i64) -> Complex64 {
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let q = BigInt::from(n.unsigned_abs());
    let (_, s) = x.frac_multiple(&q, START_BITS).cos_sin_2pi();
    // 1 - cos 2 pi t = 2 sin^2 pi ||t|| avoids cancellation near t = 0
    let re = x.dist_multiple(&q, START_BITS).sin_pi().sqr().mul_int(2);
    let z = Complex64::new(re.mid_f64(), -s.mid_f64());
    if n < 0 {
        z.conj()
    } else {
        z
    }
}

/// Per-frequency divisor diagnostics produced by the solvers.
#[derive(Clone, Debug, Serialize)]
pub struct SmallDivisorReport {
    pub entries: Vec<DivisorEntry>,
    /// Whether some divisor enclosure at the starting precision contained
    /// zero (and had to be refined).
    pub escalated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivisorEntry {
    pub n: i64,
    /// Encloses `|1 - e(n x)| = 2 sin(pi ||n x||)`.
    pub modulus: Interval,
    /// Encloses `|c_n| / |1 - e(n x)|` for the stored `c_n`.
    pub result: Interval,
}

impl SmallDivisorReport {
    pub fn min_modulus(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.modulus.lo_f64()).reduce(f64::min)
    }
}

fn divisor_report(f: &SparseFourierSeries, x: &Irrational) -> Result<SmallDivisorReport> {
    let mut entries = Vec::with_capacity(f.len());
    let mut escalated = false;
    for (n, c) in f.iter() {
        let q = BigInt::from(n.unsigned_abs());
        if x.dist_multiple(&q, START_BITS).sin_pi().contains_zero() {
            escalated = true;
        }
        let modulus = x.divisor_modulus(n, START_BITS)?;
        let mag = Interval::from_f64(c.norm(), modulus.bits()).add(&Interval::from_f64(0.0, modulus.bits()));
        let result = mag.div(&modulus).expect("modulus is positive");
        entries.push(DivisorEntry { n, modulus, result });
    }
    Ok(SmallDivisorReport { entries, escalated })
}

/// `T_alpha f`: coefficient `n` times `e(n alpha)`.
pub fn apply_rotation(f: &SparseFourierSeries, alpha: &Irrational) -> SparseFourierSeries {
    f.map_multiplier(|n| alpha.unit_root(n), OP_REL_ERR, 1.0)
}

/// `T_alpha^k f` for any integer `k`.
pub fn apply_rotation_power(f: &SparseFourierSeries, alpha: &Irrational, k: i64) -> SparseFourierSeries {
    f.map_multiplier(
        |n| {
            let m = n.checked_mul(k).expect("frequency times power overflows");
            alpha.unit_root(m)
        },
        OP_REL_ERR,
        1.0,
    )
}

/// `(I - T_alpha) f`.
pub fn apply_difference(f: &SparseFourierSeries, alpha: &Irrational) -> SparseFourierSeries {
    f.map_multiplier(|n| small_divisor(alpha, n), OP_REL_ERR, 2.0)
}

/// `(I - T_alpha^k) f`.
pub fn apply_power_difference(f: &SparseFourierSeries, alpha: &Irrational, k: i64) -> SparseFourierSeries {
    f.map_multiplier(
        |n| {
            let m = n.checked_mul(k).expect("frequency times power overflows");
            small_divisor(alpha, m)
        },
        OP_REL_ERR,
        2.0,
    )
}

/// Solves `(I - T_alpha) g = f` for centered `f`.
pub fn solve_coboundary(f: &SparseFourierSeries, alpha: &Irrational) -> Result<(SparseFourierSeries, SmallDivisorReport)> {
    f.require_centered()?;
    let report = divisor_report(f, alpha)?;
    let min = report.min_modulus().unwrap_or(2.0);
    let g = f.map_multiplier(|n| small_divisor(alpha, n).inv(), OP_REL_ERR, 1.0 / min);
    Ok((g, report))
}

/// `g` with `(1 - e(n alpha)) f_n = (1 - e(n beta)) g_n`, so that
/// `(I - T_alpha) f = (I - T_beta) g`.
pub fn transfer_coefficients(f: &SparseFourierSeries, alpha: &Irrational, beta: &Irrational) -> Result<SparseFourierSeries> {
    f.require_centered()?;
    let report = divisor_report(f, beta)?;
    let min = report.min_modulus().unwrap_or(2.0);
    Ok(f.map_multiplier(
        |n| small_divisor(alpha, n) / small_divisor(beta, n),
        2.0 * OP_REL_ERR,
        2.0 / min,
    ))
}

/// Solves `(I - T_alpha)(I - T_beta) h = f` for centered `f`.
pub fn double_solve(f: &SparseFourierSeries, alpha: &Irrational, beta: &Irrational) -> Result<SparseFourierSeries> {
    f.require_centered()?;
    let ra = divisor_report(f, alpha)?;
    let rb = divisor_report(f, beta)?;
    let min = ra.min_modulus().unwrap_or(2.0) * rb.min_modulus().unwrap_or(2.0);
    Ok(f.map_multiplier(
        |n| (small_divisor(alpha, n) * small_divisor(beta, n)).inv(),
        2.0 * OP_REL_ERR,
        1.0 / min,
    ))
}

/// `D(n, nu x) = |sin(pi n nu x) / sin(pi nu x)|`, with both arguments
/// reduced modulo one before the sine is taken; `D = n` at `nu = 0`.
pub fn kernel_magnitude(x: &Irrational, nu: i64, n: u64) -> f64 {
    if nu == 0 {
        return n as f64;
    }
    let big = (nu as i128) * (n as i128);
    assert!(big.unsigned_abs() < 1u128 << 53, "frequency times length exceeds the fast range");
    let top = x.dist_mul_f64(big as i64);
    let bottom = x.dist_mul_f64(nu);
    (std::f64::consts::PI * top).sin() / (std::f64::consts::PI * bottom).sin()
}

/// `|| sum_{k<n} T_alpha^k f ||_2` through the one-dimensional kernel.
pub fn browder_sum_norm(f: &SparseFourierSeries, alpha: &Irrational, n: u64) -> f64 {
    f.iter()
        .map(|(nu, c)| c.norm_sqr() * kernel_magnitude(alpha, nu, n).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `|| sum_{k<n} sum_{j<m} T_alpha^k T_beta^j f ||_2` through the product
/// of two kernels.
pub fn double_ergodic_sum_norm(f: &SparseFourierSeries, alpha: &Irrational, beta: &Irrational, n: u64, m: u64) -> f64 {
    f.iter()
        .map(|(nu, c)| {
            let a = kernel_magnitude(alpha, nu, n);
            let b = kernel_magnitude(beta, nu, m);
            c.norm_sqr() * (a * a) * (b * b)
        })
        .sum::<f64>()
        .sqrt()
}
