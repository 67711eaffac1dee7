//! Continued fractions of quadratic surds.
//!
//! The expansion runs on the classical state `(P + sqrt(D)) / Q` with
//! `Q | D - P^2`, so every partial quotient is computed exactly and the
//! eventual period is detected by a repeated state.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::surd::Irrational;
use crate::error::Result;
use crate::interval::{Interval, MAX_BITS, START_BITS};

/// Iterator over partial quotients `a_0, a_1, ...`.
#[derive(Clone, Debug)]
pub struct Expansion {
    p: BigInt,
    q: BigInt,
    d: BigInt,
    root: BigInt,
}

impl Expansion {
    pub fn new(x: &Irrational) -> Self {
        let (a, b, d, c) = x.parts();
        let (a, b, d, c) = (BigInt::from(a), BigInt::from(b), BigInt::from(d), BigInt::from(c));
        // x = (a + sign(b) sqrt(b^2 d)) / c, rescaled so that Q | D - P^2
        let dd = &b * &b * &d * &c * &c;
        let (mut p, mut q) = (&a * &c, &c * &c);
        if b.is_negative() {
            p = -p;
            q = -q;
        }
        let root = dd.sqrt();
        Expansion { p, q, d: dd, root }
    }

    fn state(&self) -> (BigInt, BigInt) {
        (self.p.clone(), self.q.clone())
    }
}

impl Iterator for Expansion {
    type Item = BigInt;

    fn next(&mut self) -> Option<BigInt> {
        // floor((P + sqrt D)/Q) = floor((P + floor sqrt D)/Q) for Q > 0;
        // for Q < 0 the irrational quotient flips to -(floor(..)+1)
        let a = if self.q.is_positive() {
            (&self.p + &self.root).div_floor(&self.q)
        } else {
            let qq = -&self.q;
            -((&self.p + &self.root).div_floor(&qq)) - 1
        };
        let p_next = &a * &self.q - &self.p;
        let q_next = (&self.d - &p_next * &p_next) / &self.q;
        self.p = p_next;
        self.q = q_next;
        Some(a)
    }
}

/// Partial quotients `a_0..=a_depth`.
pub fn continued_fraction(x: &Irrational, depth: usize) -> Vec<BigInt> {
    Expansion::new(x).take(depth + 1).collect()
}

/// Pre-period and period of the expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Periodicity {
    /// Index of the first quotient of the period.
    pub start: usize,
    pub len: usize,
    /// Quotients `a_0 .. a_{start+len-1}`.
    pub quotients: Vec<i64>,
}

pub fn periodicity(x: &Irrational) -> Periodicity {
    let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    let mut exp = Expansion::new(x);
    let mut quotients = Vec::new();
    loop {
        let s = exp.state();
        if let Some(&start) = seen.get(&s) {
            return Periodicity {
                start,
                len: quotients.len() - start,
                quotients,
            };
        }
        seen.insert(s, quotients.len());
        let a = exp.next().expect("infinite expansion");
        quotients.push(a.to_i64().expect("partial quotients of a surd are small"));
    }
}

/// Convergents `p_k / q_k` for the given quotients.
pub fn convergents(quotients: &[BigInt]) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::with_capacity(quotients.len());
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (BigInt::zero(), BigInt::one());
    // seed so that the first step yields (a_0, 1)
    std::mem::swap(&mut p, &mut p_prev);
    std::mem::swap(&mut q, &mut q_prev);
    for a in quotients {
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        out.push((p.clone(), q.clone()));
    }
    out
}

/// Boundedness diagnostics for a single irrational.
#[derive(Clone, Debug, Serialize)]
pub struct BadnessProfile {
    /// Largest partial quotient among `a_1, a_2, ...`; exact, since it covers
    /// the pre-period and one full period.
    pub max_quotient: i64,
    pub periodicity: Periodicity,
    /// `(q_k, q_k ||q_k x||)` for the convergent denominators up to `depth`.
    pub products: Vec<(String, Interval)>,
    /// Minimum of the products above.
    pub min_product: Interval,
}

/// Max partial quotient and `min q_k ||q_k x||` over convergent denominators.
pub fn badness_profile(x: &Irrational, depth: usize) -> Result<BadnessProfile> {
    if depth < 2 {
        return Err(crate::Error::InvalidParameter(format!("depth must be >= 2, got {depth}")));
    }
    let per = periodicity(x);
    let max_quotient = per.quotients.iter().skip(1).copied().max().unwrap_or(0);
    let quotients = continued_fraction(x, depth);
    let conv = convergents(&quotients);
    let mut products = Vec::with_capacity(conv.len());
    let mut min_product: Option<Interval> = None;
    for (_, q) in conv {
        let prod = relative_distance_product(x, &q)?;
        min_product = Some(match min_product {
            Some(m) => m.min(&prod),
            None => prod.clone(),
        });
        products.push((q.to_string(), prod));
    }
    Ok(BadnessProfile {
        max_quotient,
        periodicity: per,
        products,
        min_product: min_product.expect("depth >= 2 gives convergents"),
    })
}

/// `q ||q x||` with enough precision for a relative width near 1e-15.
fn relative_distance_product(x: &Irrational, q: &BigInt) -> Result<Interval> {
    let mut bits = START_BITS + 2 * q.bits() as u32;
    loop {
        let p = x.dist_multiple(q, bits).mul_int(q.clone());
        if p.width_f64() < 1e-15 * p.lo_f64().max(1e-300) || bits >= MAX_BITS {
            return Ok(p);
        }
        bits *= 2;
    }
}
