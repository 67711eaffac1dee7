//! Simultaneous approximation searches.
//!
//! Every search runs a fast double-double scan with a rigorous error bound
//! first; only candidates the scan cannot exclude are decided with interval
//! arithmetic, escalating precision until the strict comparison resolves.

use std::fmt::Write as _;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::surd::{nearest_integer_distance, Irrational};
use crate::error::{Error, Result};
use crate::interval::{Interval, MAX_BITS, START_BITS};

/// Precision settings shared by the certified searches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    /// Requested width of stored distance enclosures.
    pub tol: f64,
    pub start_bits: u32,
    pub max_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            tol: 1e-12,
            start_bits: START_BITS,
            max_bits: MAX_BITS,
        }
    }
}

/// An integer `q` with certified `||q alpha||`, `||q beta||` and
/// `sqrt(q) max(||q alpha||, ||q beta||)`.
#[derive(Clone, Debug, Serialize)]
pub struct ApproximationRecord {
    pub q: u64,
    pub dist_alpha: Interval,
    pub dist_beta: Interval,
    pub quality: Interval,
}

impl ApproximationRecord {
    pub fn new(alpha: &Irrational, beta: &Irrational, q: u64, tol: f64) -> Result<Self> {
        let qb = BigInt::from(q);
        let dist_alpha = nearest_integer_distance(alpha, &qb, tol)?;
        let dist_beta = nearest_integer_distance(beta, &qb, tol)?;
        let bits = dist_alpha.bits().max(dist_beta.bits());
        let root = Interval::from_int(q, bits).sqrt().expect("q is positive");
        let quality = root.mul(&dist_alpha.max(&dist_beta));
        Ok(ApproximationRecord {
            q,
            dist_alpha,
            dist_beta,
            quality,
        })
    }

    /// Whether `||q beta|| >= ||q alpha||` is certified.
    pub fn beta_dominates(&self) -> Option<bool> {
        if self.dist_beta.certainly_ge(&self.dist_alpha) {
            Some(true)
        } else if self.dist_beta.certainly_lt(&self.dist_alpha) {
            Some(false)
        } else {
            None
        }
    }
}

/// CSV with columns `q, dist_alpha_lo, dist_alpha_hi, dist_beta_lo,
/// dist_beta_hi, quality_lo, quality_hi`.
pub fn records_csv(records: &[ApproximationRecord]) -> String {
    let mut out = String::from("q,dist_alpha_lo,dist_alpha_hi,dist_beta_lo,dist_beta_hi,quality_lo,quality_hi\n");
    for r in records {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.q,
            r.dist_alpha.lo_f64(),
            r.dist_alpha.hi_f64(),
            r.dist_beta.lo_f64(),
            r.dist_beta.hi_f64(),
            r.quality.lo_f64(),
            r.quality.hi_f64()
        )
        .unwrap();
    }
    out
}

/// Outcome of [`dirichlet_pair_search`].
#[derive(Clone, Debug, Serialize)]
pub struct DirichletSearch {
    /// Certified hits, sorted by `q`.
    pub records: Vec<ApproximationRecord>,
    /// Values of `q` whose comparison stayed undecided at the precision cap.
    pub unresolved: Vec<u64>,
}

enum Decision {
    Yes,
    No,
    Undecided,
}

/// Decides `q max(||q alpha||, ||q beta||)^2 < 1`.
fn certify_dirichlet(alpha: &Irrational, beta: &Irrational, q: u64, policy: &PrecisionPolicy) -> Decision {
    let qb = BigInt::from(q);
    let mut bits = policy.start_bits;
    loop {
        let m = alpha.dist_multiple(&qb, bits).max(&beta.dist_multiple(&qb, bits));
        let v = m.sqr().mul_int(q);
        let one = Interval::one(bits);
        if v.certainly_lt(&one) {
            return Decision::Yes;
        }
        if v.certainly_ge(&one) {
            return Decision::No;
        }
        if bits >= policy.max_bits {
            return Decision::Undecided;
        }
        bits *= 2;
    }
}

/// Record for an accepted `q`, tightening the tolerance until the stored
/// quality interval lies strictly below one.
fn accepted_record(alpha: &Irrational, beta: &Irrational, q: u64, policy: &PrecisionPolicy) -> Result<ApproximationRecord> {
    let one = Interval::one(START_BITS);
    let mut tol = policy.tol;
    for _ in 0..40 {
        let rec = ApproximationRecord::new(alpha, beta, q, tol)?;
        if rec.quality.certainly_lt(&one) {
            return Ok(rec);
        }
        tol *= 1e-6;
    }
    Err(Error::PrecisionExhausted {
        bits: policy.max_bits,
        context: format!("separating the quality of q = {q} from 1"),
    })
}

/// All `q <= Q` with `max(||q alpha||, ||q beta||) < q^{-1/2}`, certified.
pub fn dirichlet_pair_search(alpha: &Irrational, beta: &Irrational, big_q: u64, policy: &PrecisionPolicy) -> Result<DirichletSearch> {
    if big_q == 0 {
        return Err(Error::InvalidParameter("Q must be at least 1".into()));
    }
    let candidates: Vec<u64> = (1..=big_q)
        .into_par_iter()
        .filter(|&q| {
            let k = q as i64;
            let m = alpha.dist_mul_f64(k).max(beta.dist_mul_f64(k));
            let err = alpha.fast_error_bound(k).max(beta.fast_error_bound(k));
            let low = m - err;
            !(low > 0.0 && low * low * (q as f64) > 1.0 + 1e-9)
        })
        .collect();
    let decided: Vec<(u64, Decision)> = candidates
        .par_iter()
        .map(|&q| (q, certify_dirichlet(alpha, beta, q, policy)))
        .collect();
    let mut records = Vec::new();
    let mut unresolved = Vec::new();
    for (q, d) in decided {
        match d {
            Decision::Yes => records.push(accepted_record(alpha, beta, q, policy)?),
            Decision::No => {}
            Decision::Undecided => unresolved.push(q),
        }
    }
    Ok(DirichletSearch { records, unresolved })
}

/// A greedy lacunary subsequence with certified summability.
#[derive(Clone, Debug, Serialize)]
pub struct LacunarySelection {
    pub records: Vec<ApproximationRecord>,
    pub ratio: f64,
    pub budget: f64,
    /// Certified enclosure of `sum_k q_k^{-1/2}`.
    pub sum: Interval,
}

impl LacunarySelection {
    pub fn qs(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.q).collect()
    }
}

/// Exact test `b >= ratio * a` with `ratio` read as the dyadic rational it is.
pub(crate) fn ratio_holds(a: u64, b: u64, ratio: f64) -> bool {
    let bits = START_BITS;
    let lhs = Interval::from_int(b, bits);
    let rhs = Interval::from_f64(ratio, bits).mul_int(a);
    lhs.certainly_ge(&rhs)
}

/// Certified `sum q^{-1/2}` over the given values.
pub(crate) fn inverse_root_sum(qs: &[u64], bits: u32) -> Interval {
    qs.iter().fold(Interval::zero(bits), |acc, &q| {
        let r = Interval::one(bits)
            .div(&Interval::from_int(q, bits).sqrt().expect("q > 0"))
            .expect("q > 0");
        acc.add(&r)
    })
}

/// Greedy smallest-first selection with `q_{k+1} >= ratio q_k` and
/// `sum q_k^{-1/2} <= budget`.
///
/// A candidate is admitted only if the remaining budget also covers the
/// geometric tail `q^{-1/2} / (1 - ratio^{-1/2})` of any continuation, so
/// the selection can be extended indefinitely without breaking the budget.
pub fn select_summable_lacunary(records: &[ApproximationRecord], ratio: f64, budget: f64) -> Result<LacunarySelection> {
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(Error::InvalidParameter(format!("ratio must exceed 1, got {ratio}")));
    }
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InvalidParameter(format!("budget must be positive, got {budget}")));
    }
    let damping = 1.0 - ratio.powf(-0.5);
    let mut chosen: Vec<ApproximationRecord> = Vec::new();
    let mut spent = 0.0f64;
    for r in records {
        if let Some(last) = chosen.last() {
            if r.q <= last.q || !ratio_holds(last.q, r.q, ratio) {
                continue;
            }
        }
        let term = (r.q as f64).powf(-0.5);
        if term * (1.0 + 1e-12) <= (budget - spent) * damping * (1.0 - 1e-12) {
            spent += term;
            chosen.push(r.clone());
        }
    }
    if chosen.len() < 2 {
        return Err(Error::InsufficientCandidates {
            found: chosen.len(),
            needed: 2,
        });
    }
    let qs: Vec<u64> = chosen.iter().map(|r| r.q).collect();
    let sum = inverse_root_sum(&qs, START_BITS);
    if !sum.certainly_le(&Interval::from_f64(budget, START_BITS)) {
        return Err(Error::CertificationFailure(format!("selected sum {sum} exceeds budget {budget}")));
    }
    Ok(LacunarySelection {
        records: chosen,
        ratio,
        budget,
        sum,
    })
}

/// Finite-depth estimate of the bad-pair constant.
#[derive(Clone, Debug, Serialize)]
pub struct BadPairEstimate {
    /// Encloses `min_{q <= Q} sqrt(q) max(||q alpha||, ||q beta||)`.
    pub value: Interval,
    pub argmin: u64,
    pub depth: u64,
}

/// `min_{q <= Q} sqrt(q) max(||q alpha||, ||q beta||)`, an upper estimate of
/// the liminf that defines a badly approximable pair.
pub fn bad_pair_constant(alpha: &Irrational, beta: &Irrational, big_q: u64, policy: &PrecisionPolicy) -> Result<BadPairEstimate> {
    if big_q == 0 {
        return Err(Error::InvalidParameter("Q must be at least 1".into()));
    }
    let fast: Vec<(u64, f64, f64)> = (1..=big_q)
        .into_par_iter()
        .map(|q| {
            let k = q as i64;
            let m = alpha.dist_mul_f64(k).max(beta.dist_mul_f64(k));
            let err = alpha.fast_error_bound(k).max(beta.fast_error_bound(k));
            let s = (q as f64).sqrt();
            // sqrt is correctly rounded; the product adds one more rounding
            (q, m * s, (err * s + 4.0 * f64::EPSILON * m * s) * 1.01)
        })
        .collect();
    let upper = fast.iter().map(|&(_, v, e)| v + e).fold(f64::INFINITY, f64::min);
    let mut best: Option<(u64, Interval)> = None;
    for &(q, v, e) in &fast {
        if v - e > upper {
            continue;
        }
        let rec = ApproximationRecord::new(alpha, beta, q, policy.tol)?;
        best = Some(match best {
            None => (q, rec.quality),
            Some((bq, bv)) => {
                let q_arg = if rec.quality.mid_f64() < bv.mid_f64() { q } else { bq };
                (q_arg, bv.min(&rec.quality))
            }
        });
    }
    let (argmin, value) = best.expect("the fast minimum is always a candidate");
    Ok(BadPairEstimate {
        value,
        argmin,
        depth: big_q,
    })
}

/// A certified hit of `||n^2 beta|| < n^{-delta}`.
#[derive(Clone, Debug, Serialize)]
pub struct SquareApproximation {
    pub n: u64,
    pub dist: Interval,
}

/// The rational `u/v` with `v <= 1000` whose double is exactly `delta`.
fn small_rational(delta: f64) -> Option<(u32, u32)> {
    (1u32..=1000).find_map(|v| {
        let u = (delta * v as f64).round();
        (u >= 0.0 && u / v as f64 == delta).then_some((u as u32, v))
    })
}

fn certify_square(beta: &Irrational, n: u64, u: u32, v: u32, policy: &PrecisionPolicy) -> Decision {
    let sq = BigInt::from(n) * BigInt::from(n);
    let nu = num_traits::pow(BigInt::from(n), u as usize);
    let mut bits = (policy.start_bits + u * (64 - n.leading_zeros())).next_power_of_two();
    loop {
        let lhs = beta.dist_multiple(&sq, bits).powu(v).mul_int(nu.clone());
        let one = Interval::one(bits);
        if lhs.certainly_lt(&one) {
            return Decision::Yes;
        }
        if lhs.certainly_ge(&one) {
            return Decision::No;
        }
        if bits >= policy.max_bits {
            return Decision::Undecided;
        }
        bits *= 2;
    }
}

/// All `n <= N` with `||n^2 beta|| < n^{-delta}`, for `delta` in `(1/2, 2/3)`.
///
/// `delta` must be a ratio of integers with denominator at most 1000 (every
/// decimal with three digits qualifies); the comparison is decided exactly
/// as `||n^2 beta||^v n^u < 1` for `delta = u/v`.
pub fn square_approximation_search(beta: &Irrational, delta: f64, big_n: u64, policy: &PrecisionPolicy) -> Result<Vec<SquareApproximation>> {
    let (u, v) = small_rational(delta)
        .ok_or_else(|| Error::InvalidParameter(format!("delta {delta} is not a ratio with denominator <= 1000")))?;
    if !(2 * u > v && 3 * u < 2 * v) {
        return Err(Error::InvalidParameter(format!("delta {delta} must lie strictly between 1/2 and 2/3")));
    }
    if big_n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    const FAST_LIMIT: u64 = 1 << 26;
    let candidates: Vec<u64> = (1..=big_n)
        .into_par_iter()
        .filter(|&n| {
            if n >= FAST_LIMIT {
                return true;
            }
            let k = (n * n) as i64;
            let d = beta.dist_mul_f64(k) - beta.fast_error_bound(k);
            !(d > (n as f64).powf(-delta) * (1.0 + 1e-9))
        })
        .collect();
    let hits: Vec<Result<Option<SquareApproximation>>> = candidates
        .par_iter()
        .map(|&n| match certify_square(beta, n, u, v, policy) {
            Decision::Yes => {
                let sq = BigInt::from(n) * BigInt::from(n);
                let dist = nearest_integer_distance(beta, &sq, policy.tol)?;
                Ok(Some(SquareApproximation { n, dist }))
            }
            Decision::No => Ok(None),
            Decision::Undecided => Err(Error::PrecisionExhausted {
                bits: policy.max_bits,
                context: format!("comparing ||n^2 beta|| with n^-{delta} at n = {n}"),
            }),
        })
        .collect();
    let mut out = Vec::new();
    for h in hits {
        if let Some(s) = h? {
            out.push(s);
        }
    }
    Ok(out)
}
