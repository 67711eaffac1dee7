//! The shifts `(U f)_{j,k} = f_{j+1,k}` and `(V f)_{j,k} = f_{j,k+1}` on
//! `l_p(N^2)`.
//!
//! `h_{j,k} = (j+k)^{-(p+1)/p}` (or `(j+k)^{-2} log(j+k)^{-2}` when
//! `p = 1`) lies in `l_p`, and `f = (I - U) h` is a joint coboundary since
//! `U h = V h`. The only candidate solution of `f = (I - U)(I - V) q` is
//! `q_{j,k} = sum_{n >= j+k} h(n)`, whose rows are not `p`-summable. All
//! the functions here depend on `(j, k)` through `s = j + k` only, so a
//! `J x K` box is handled through the diagonal counts
//! `#{(j, k) in box : j + k = s} = min(s - 1, J, K, J + K + 1 - s)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateKind, Comparison};
use crate::error::{Error, Result};
use crate::interval::{Interval, START_BITS};

const BITS: u32 = 2 * START_BITS;

/// Slack in the row-sum lower bound.
pub const EPSILON: f64 = 1e-3;

/// Default number of summed terms past the grid in [`build_q`].
pub const DEFAULT_TAIL_TERMS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LatticeKind {
    /// `(j+k)^{-a/p}`.
    Power { a: f64 },
    /// `(j+k)^{-2} (log(j+k))^{-2}`.
    LogPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeFunction {
    pub kind: LatticeKind,
    pub p: f64,
}

pub fn build_h(p: f64) -> Result<LatticeFunction> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be a finite number >= 1, got {p}")));
    }
    let kind = if p == 1.0 { LatticeKind::LogPower } else { LatticeKind::Power { a: p + 1.0 } };
    Ok(LatticeFunction { kind, p })
}

/// `s^{-x}`, exactly through square roots when `2x` is a small integer.
fn inv_power(s: u64, x: &Interval, x_f64: Option<f64>) -> Interval {
    let base = Interval::from_int(s, BITS);
    if let Some(x) = x_f64 {
        let twice = 2.0 * x;
        if twice.fract() == 0.0 && twice > 0.0 && twice <= 64.0 {
            let n = twice as u32;
            let mut v = base.powu(n / 2);
            if n % 2 == 1 {
                v = v.mul(&base.sqrt().expect("s > 0"));
            }
            return Interval::one(BITS).div(&v).expect("s > 0");
        }
    }
    base.powf(&x.neg()).expect("s > 0")
}

impl LatticeFunction {
    /// Exponent `a/p` of the power kind as an enclosure.
    fn decay(&self) -> Option<Interval> {
        match self.kind {
            LatticeKind::Power { a } => Some(Interval::from_f64(a, BITS).div(&Interval::from_f64(self.p, BITS)).expect("p > 0")),
            LatticeKind::LogPower => None,
        }
    }

    fn decay_f64(&self) -> Option<f64> {
        match self.kind {
            // exact when p + 1 and p are both small dyadics, e.g. p = 2
            LatticeKind::Power { a } => {
                let x = a / self.p;
                (x * self.p == a).then_some(x)
            }
            LatticeKind::LogPower => None,
        }
    }

    /// `h(s)^t` at `s = j + k >= 2`.
    pub fn power_at(&self, s: u64, t: f64) -> Interval {
        match self.kind {
            LatticeKind::Power { .. } => {
                let x = self.decay().expect("power kind").mul(&Interval::from_f64(t, BITS));
                let exact = self.decay_f64().map(|d| d * t).filter(|v| (v / t) == self.decay_f64().unwrap());
                inv_power(s, &x, exact)
            }
            LatticeKind::LogPower => {
                let si = Interval::from_int(s, BITS);
                let base = si.sqr().mul(&si.ln().expect("s >= 2").sqr());
                let v = Interval::one(BITS).div(&base).expect("s >= 2");
                if t == 1.0 {
                    v
                } else {
                    v.powf(&Interval::from_f64(t, BITS)).expect("positive")
                }
            }
        }
    }

    /// `h(s)` at `s = j + k >= 2`.
    pub fn at(&self, s: u64) -> Interval {
        self.power_at(s, 1.0)
    }

    /// `h_{j,k}` in double precision.
    pub fn eval(&self, j: u64, k: u64) -> f64 {
        let s = (j + k) as f64;
        match self.kind {
            LatticeKind::Power { a } => s.powf(-a / self.p),
            LatticeKind::LogPower => 1.0 / (s * s * s.ln().powi(2)),
        }
    }
}

fn diagonal_count(s: u64, j: u64, k: u64) -> u64 {
    (s - 1).min(j).min(k).min((j + k + 1).saturating_sub(s))
}

/// `sum_{j<=J, k<=K} f_{j,k}^p` and an enclosure of everything outside the
/// box.
#[derive(Clone, Debug, Serialize)]
pub struct PartialNorm {
    pub p: f64,
    pub j: u64,
    pub k: u64,
    pub box_sum: Interval,
    /// Enclosure of the discarded part; for the log-power kind only the
    /// upper end is informative.
    pub outside: Interval,
}

impl PartialNorm {
    pub fn total(&self) -> Interval {
        self.box_sum.add(&self.outside)
    }
}

/// `int_X^inf (x - 1) x^{-a} dx` for `a > 2`.
fn weighted_tail_integral(x: &Interval, a: &Interval) -> Interval {
    let one = Interval::one(BITS);
    let two = Interval::from_int(2, BITS);
    let first = x.powf(&two.sub(a)).expect("X > 0").div(&a.sub(&two)).expect("a > 2");
    let second = x.powf(&one.sub(a)).expect("X > 0").div(&a.sub(&one)).expect("a > 1");
    first.sub(&second)
}

pub fn lp_partial_norm(f: &LatticeFunction, p: f64, j: u64, k: u64) -> Result<PartialNorm> {
    if j == 0 || k == 0 {
        return Err(Error::InvalidParameter("J and K must be positive".into()));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    let big_s = j + k;
    let (s_exact, tail) = match f.kind {
        LatticeKind::Power { .. } => {
            let a = f.decay().expect("power kind").mul(&Interval::from_f64(p, BITS));
            let two = Interval::from_int(2, BITS);
            if !a.certainly_gt(&two) {
                return Err(Error::InvalidParameter(format!(
                    "sum of f^{p} diverges: the diagonal exponent {a} does not exceed 2"
                )));
            }
            // (x - 1) x^{-a} is convex for x >= (a + 1)/(a - 1)
            let convex_from = a.add(&Interval::one(BITS)).div(&a.sub(&Interval::one(BITS))).expect("a > 1").hi_f64();
            let start = big_s.max(convex_from.ceil() as u64);
            if start > 10_000_000 {
                return Err(Error::InvalidParameter(format!("diagonal exponent {a} too close to 2")));
            }
            let lower_x = Interval::from_int(start + 1, BITS);
            let upper_x = Interval::from_int(2 * start + 1, BITS).div_int(2);
            let first = f.power_at(start + 1, p).mul_int(start);
            let lower = weighted_tail_integral(&lower_x, &a).add(&first.div_int(2));
            let upper = weighted_tail_integral(&upper_x, &a);
            (start, lower.hull(&upper))
        }
        LatticeKind::LogPower => {
            if p < 1.0 {
                return Err(Error::InvalidParameter(format!("the log-power kind needs p >= 1, got {p}")));
            }
            // (s-1) h(s)^p <= 1/(s log^2 s), whose tail integral is 1/log S
            let start = big_s.max(2);
            let up = Interval::one(BITS)
                .div(&Interval::from_int(start, BITS).ln().expect("S >= 2"))
                .expect("S >= 2");
            (start, Interval::zero(BITS).hull(&up))
        }
    };
    let terms: Vec<(Interval, Interval)> = (2..=s_exact)
        .into_par_iter()
        .map(|s| {
            let g = f.power_at(s, p);
            let inside = diagonal_count(s, j, k);
            (g.mul_int(inside), g.mul_int(s - 1 - inside))
        })
        .collect();
    let mut box_sum = Interval::zero(BITS);
    let mut outside = Interval::zero(BITS);
    for (i, o) in &terms {
        box_sum = box_sum.add(i);
        outside = outside.add(o);
    }
    Ok(PartialNorm {
        p,
        j,
        k,
        box_sum,
        outside: outside.add(&tail),
    })
}

/// `sum_{j=1}^{J} 1/(j log^2(j+1))` with the remaining tail bounded by
/// `1/log J`; the upper end majorises the log-power `l_1` norm.
pub fn log_power_majorant(j: u64) -> Result<Interval> {
    if j < 2 {
        return Err(Error::InvalidParameter(format!("J must be at least 2, got {j}")));
    }
    let partial = (1..=j)
        .into_par_iter()
        .map(|i| {
            let l = Interval::from_int(i + 1, BITS).ln().expect("positive");
            Interval::one(BITS).div(&l.sqr().mul_int(i)).expect("positive")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Interval::zero(BITS), |acc, t| acc.add(&t));
    let tail = Interval::one(BITS).div(&Interval::from_int(j, BITS).ln().expect("J >= 2")).expect("J >= 2");
    Ok(partial.hull(&partial.add(&tail)))
}

/// Enclosures of `q_{j,k} = sum_{n >= j+k} h(n)` on a `J x K` grid.
#[derive(Clone, Debug, Serialize)]
pub struct QTable {
    pub f: LatticeFunction,
    pub j: u64,
    pub k: u64,
    pub tail_terms: u64,
    /// `sum_{s <= n <= N} h(n)` for `s = 2 ..= J + K + 1`.
    partial: Vec<Interval>,
    /// Enclosure of `sum_{n > N} h(n)`, shared by every entry.
    pub tail: Interval,
    /// `T(s) = sum_{n >= s} h(n)`.
    values: Vec<Interval>,
}

impl QTable {
    /// `T(s)` for `2 <= s <= J + K + 1`.
    pub fn suffix(&self, s: u64) -> &Interval {
        &self.values[(s - 2) as usize]
    }

    /// `sum_{s <= n <= N} h(n)`, i.e. `T(s)` without the shared tail.
    pub fn head(&self, s: u64) -> &Interval {
        &self.partial[(s - 2) as usize]
    }

    /// `sum_{a <= s <= b} T(s)`, adding the shared tail once per term so
    /// its width does not compound with the heads'.
    pub fn range_sum(&self, a: u64, b: u64) -> Interval {
        let heads = (a..=b).fold(Interval::zero(BITS), |acc, s| acc.add(self.head(s)));
        heads.add(&self.tail.mul_int(b + 1 - a))
    }

    pub fn get(&self, j: u64, k: u64) -> &Interval {
        assert!(j >= 1 && k >= 1 && j <= self.j && k <= self.k, "({j}, {k}) outside the grid");
        self.suffix(j + k)
    }

    /// CSV with columns `j,k,q_lo,q_hi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,k,q_lo,q_hi\n");
        for j in 1..=self.j {
            for k in 1..=self.k {
                let v = self.get(j, k);
                out.push_str(&format!("{j},{k},{:e},{:e}\n", v.lo_f64(), v.hi_f64()));
            }
        }
        out
    }

    /// Largest `s` covered.
    pub fn max_s(&self) -> u64 {
        self.j + self.k + 1
    }

    /// Checks `(I - V) q = h` on the grid, which with `(I - U)` applied on
    /// both sides reproduces `f = (I - U) h`: each `T(s) - T(s+1)` must
    /// overlap `h(s)`.
    pub fn roundtrip_check(&self) -> Certificate {
        let mut cert = Certificate::new(CertificateKind::Membership, "(I - V) q reproduces h on the grid");
        let mut worst = Interval::zero(BITS);
        for s in 2..self.max_s() {
            let diff = self.suffix(s).sub(self.suffix(s + 1));
            let h = self.f.at(s);
            if diff.certainly_lt(&h) || diff.certainly_gt(&h) {
                cert.block(format!("T({s}) - T({}) = {diff} misses h({s}) = {h}", s + 1));
            }
            worst = worst.max(&diff.sub(&h).abs());
        }
        cert.report("max |T(s) - T(s+1) - h(s)|", worst);
        cert
    }

    /// For the power kind, `p s^{-1/p} <= q <= p (s-1)^{-1/p}` on the grid.
    pub fn bounds_check(&self) -> Result<Certificate> {
        let LatticeKind::Power { .. } = self.f.kind else {
            return Err(Error::Precondition("bounds apply to the power kind".into()));
        };
        let p = self.f.p;
        let pi = Interval::from_f64(p, BITS);
        let x = Interval::one(BITS).div(&pi).expect("p > 0");
        let exact = Some(1.0 / p).filter(|v| v * p == 1.0);
        let mut cert = Certificate::new(CertificateKind::Membership, "p s^{-1/p} <= q_s <= p (s-1)^{-1/p}");
        let gaps: Vec<(Interval, Interval)> = (2..=self.max_s())
            .into_par_iter()
            .map(|s| {
                let t = self.suffix(s);
                let lower = pi.mul(&inv_power(s, &x, exact));
                let upper = pi.mul(&inv_power(s - 1, &x, exact));
                (t.sub(&lower), t.sub(&upper))
            })
            .collect();
        let (lo_gap, hi_gap) = gaps
            .into_iter()
            .reduce(|(a, b), (c, d)| (a.min(&c), b.max(&d)))
            .expect("nonempty grid");
        cert.check("min_s (q_s - p s^{-1/p}) >= 0", lo_gap, Comparison::Ge, Interval::zero(BITS));
        cert.check("max_s (q_s - p (s-1)^{-1/p}) <= 0", hi_gap, Comparison::Le, Interval::zero(BITS));
        Ok(cert)
    }
}

/// Enclosure of `sum_{n > N} h(n)`.
fn q_tail(f: &LatticeFunction, n: u64) -> Interval {
    match f.kind {
        LatticeKind::Power { .. } => {
            let e = f.decay().expect("power kind");
            let one = Interval::one(BITS);
            let integral = |x: Interval| x.powf(&one.sub(&e)).expect("x > 0").div(&e.sub(&one)).expect("e > 1");
            let lower = integral(Interval::from_int(n + 1, BITS)).add(&f.at(n + 1).div_int(2));
            let upper = integral(Interval::from_int(2 * n + 1, BITS).div_int(2));
            lower.hull(&upper)
        }
        LatticeKind::LogPower => {
            // I_k(X) = int_X^inf x^{-2} log^{-k} x dx = 1/(X L^k) - k I_{k+1}(X)
            // with 0 <= I_5 <= 1/(X L^5), so I_2 lies in [S - 24/(X L^5), S]
            let integral = |x: Interval| {
                let l = x.ln().expect("x > 1");
                let term = |k: u32, c: u64| Interval::from_int(c, BITS).div(&x.mul(&l.powu(k))).expect("positive");
                let s3 = term(2, 1).sub(&term(3, 2)).add(&term(4, 6));
                (s3.sub(&term(5, 24)), s3)
            };
            let (lower, _) = integral(Interval::from_int(n + 1, BITS));
            let (_, upper) = integral(Interval::from_int(2 * n + 1, BITS).div_int(2));
            lower.add(&f.at(n + 1).div_int(2)).hull(&upper)
        }
    }
}

pub fn build_q(f: &LatticeFunction, j: u64, k: u64, tail_terms: u64) -> Result<QTable> {
    if j == 0 || k == 0 {
        return Err(Error::InvalidParameter("J and K must be positive".into()));
    }
    let top = j + k + 1;
    let n = top + tail_terms;
    let h: Vec<Interval> = (2..=n).into_par_iter().map(|s| f.at(s)).collect();
    let tail = q_tail(f, n);
    let mut acc = Interval::zero(BITS);
    let mut partial = vec![Interval::zero(BITS); (top - 1) as usize];
    for s in (2..=n).rev() {
        acc = acc.add(&h[(s - 2) as usize]);
        if s <= top {
            partial[(s - 2) as usize] = acc.clone();
        }
    }
    let values = partial.iter().map(|v| v.add(&tail)).collect();
    Ok(QTable {
        f: *f,
        j,
        k,
        tail_terms,
        partial,
        tail,
        values,
    })
}

/// Least `N` with `sqrt(n) >= log^2 n` for every `n >= N`, together with
/// the point from which `sqrt(x) - log^2 x` is increasing.
pub fn log_power_threshold() -> (u64, u64) {
    let increasing = (8u64..).find(|&n| (n as f64).sqrt() > 4.0 * (n as f64).ln()).expect("eventually true");
    let start = (increasing..)
        .find(|&n| (n as f64).sqrt() >= (n as f64).ln().powi(2))
        .expect("eventually true");
    (start, increasing)
}

fn pow_interval(x: &Interval, t: f64) -> Interval {
    if t.fract() == 0.0 && t > 0.0 && t <= 64.0 {
        x.powu(t as u32)
    } else {
        x.powf(&Interval::from_f64(t, BITS)).expect("positive")
    }
}

/// `sum_{j,k <= K} q_{j,k}^r` from the diagonal counts.
fn box_power_sum(q: &QTable, kk: u64, r: f64) -> Interval {
    (2..=2 * kk)
        .into_par_iter()
        .map(|s| pow_interval(q.suffix(s), r).mul_int(diagonal_count(s, kk, kk)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Interval::zero(BITS), |acc, t| acc.add(&t))
}

/// Certifies that the rows of `q` are not `p`-summable in a quantitative
/// form, and that the `r`-th power sums (`r > 2p`, default `2p + 1`) over a
/// `K x K` box stay below `p^r (1 + 1/(r/p - 2))`.
pub fn divergence_certificate(p: f64, k: u64, r: Option<f64>) -> Result<Certificate> {
    let f = build_h(p)?;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("K must be at least 2, got {k}")));
    }
    let r = r.unwrap_or(2.0 * p + 1.0);
    if !(r > 2.0 * p) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("r = {r} must exceed 2p = {}", 2.0 * p)));
    }
    let pi = Interval::from_f64(p, BITS);
    let one = Interval::one(BITS);
    let mut cert = Certificate::new(CertificateKind::DivergenceWitness, format!("q is not in l_{p} but its box sums in l_{r} are bounded"));
    let q = match f.kind {
        LatticeKind::Power { .. } => {
            let q = build_q(&f, k, k, DEFAULT_TAIL_TERMS)?;
            let bounds = q.bounds_check()?;
            for e in bounds.entries {
                cert.check(e.description, e.value, e.comparison, e.threshold);
            }
            let row = (1..=k).fold(Interval::zero(BITS), |acc, kk| acc.add(&pow_interval(q.get(1, kk), p)));
            let ln_k = Interval::from_int(k + 2, BITS).ln().expect("positive");
            let bound = pow_interval(&pi, p)
                .mul(&pow_interval(&Interval::from_f64(1.0 - EPSILON, BITS), p))
                .mul(&ln_k.sub(&one));
            cert.check(
                format!("sum_{{k<={k}}} q_{{1,k}}^p >= p^p (1 - eps)^p (log(K + 2) - 1)"),
                row.clone(),
                Comparison::Ge,
                bound.clone(),
            );
            cert.report("row sum", row);
            cert.report("row-sum lower bound", bound);
            q
        }
        LatticeKind::LogPower => {
            let (start, increasing) = log_power_threshold();
            let si = Interval::from_int(start, BITS);
            let ii = Interval::from_int(increasing, BITS);
            cert.check(
                format!("sqrt({increasing}) > 4 log {increasing}, so sqrt(x) - log^2 x increases beyond"),
                ii.sqrt().expect("positive"),
                Comparison::Gt,
                ii.ln().expect("positive").mul_int(4),
            );
            cert.check(
                format!("sqrt({start}) >= log^2 {start}"),
                si.sqrt().expect("positive"),
                Comparison::Ge,
                si.ln().expect("positive").sqr(),
            );
            let j0 = start - 2;
            cert.report("J0", Interval::from_int(j0, BITS));
            let q = build_q(&f, j0 + k, k, DEFAULT_TAIL_TERMS)?;
            let c = Interval::from_int(2, BITS).div_int(3);
            let three_halves = Interval::from_int(3, BITS).div_int(2);
            let half = Interval::one(BITS).div_int(2);
            let lower_gap = (start..=j0 + 1 + k)
                .into_par_iter()
                .map(|s| q.suffix(s).sub(&c.mul(&inv_power(s, &three_halves, Some(1.5)))))
                .reduce_with(|a, b| a.min(&b))
                .expect("nonempty");
            cert.check(
                format!("min over {start} <= s of q_s - (2/3) s^(-3/2) >= 0"),
                lower_gap,
                Comparison::Ge,
                Interval::zero(BITS),
            );
            // rows j = J0 + 1 ..= J0 + K against (4/3)((j+1)^{-1/2} - (j+K+1)^{-1/2})
            let mut prefix = vec![Interval::zero(BITS)];
            for s in 2..=q.max_s() {
                let next = prefix.last().expect("nonempty").add(q.head(s));
                prefix.push(next);
            }
            let shared = q.tail.mul_int(k);
            let row_sum = |j: u64| prefix[(j + k - 1) as usize].sub(&prefix[(j - 1) as usize]).add(&shared);
            let c4 = Interval::from_int(4, BITS).div_int(3);
            let row_bound = |j: u64| c4.mul(&inv_power(j + 1, &half, Some(0.5)).sub(&inv_power(j + k + 1, &half, Some(0.5))));
            let rows: Vec<(Interval, Interval)> = (j0 + 1..=j0 + k).into_par_iter().map(|j| (row_sum(j), row_bound(j))).collect();
            let min_gap = rows.iter().map(|(a, b)| a.sub(b)).reduce(|a, b| a.min(&b)).expect("K rows");
            cert.check(
                "min over rows of sum_k q_{j,k} - (4/3)((j+1)^(-1/2) - (j+K+1)^(-1/2)) >= 0",
                min_gap,
                Comparison::Ge,
                Interval::zero(BITS),
            );
            let total = rows.iter().fold(Interval::zero(BITS), |acc, (a, _)| acc.add(a));
            let bound = rows.iter().fold(Interval::zero(BITS), |acc, (_, b)| acc.add(b));
            cert.check(format!("sum over {k} rows past J0 >= sum of row bounds"), total.clone(), Comparison::Ge, bound.clone());
            cert.report("rows past J0", total);
            cert.report("row lower bound", bound);
            q
        }
    };
    // q_s <= p (s-1)^{-1/p} makes the box sums of q^r at most
    // p^r sum_t t^{1 - r/p} <= p^r (1 + 1/(r/p - 2))
    if f.kind == LatticeKind::LogPower {
        let worst = (2..=2 * k)
            .into_par_iter()
            .map(|s| q.suffix(s).mul_int(s - 1))
            .reduce_with(|a, b| a.max(&b))
            .expect("nonempty");
        cert.check("max_s (s - 1) q_s <= 1", worst, Comparison::Le, one.clone());
    }
    let ri = Interval::from_f64(r, BITS);
    let ratio = ri.div(&pi).expect("p > 0");
    let majorant = pow_interval(&pi, r).mul(&one.add(&one.div(&ratio.sub(&Interval::from_int(2, BITS))).expect("r > 2p")));
    let sum_r = box_power_sum(&q, k, r);
    cert.check(
        format!("sum_{{j,k<={k}}} q^r <= p^r (1 + 1/(r/p - 2))"),
        sum_r.clone(),
        Comparison::Le,
        majorant.clone(),
    );
    cert.report(format!("l_{r} box sum"), sum_r);
    cert.report(format!("l_{r} majorant"), majorant);
    cert.note(format!("the boundary exponent r = 2p = {} is not certified either way", 2.0 * p));
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Euler-Maclaurin for `sum_{n >= 1} n^{-x}`.
    fn zeta(x: f64) -> f64 {
        let n = 1000u64;
        let nf = n as f64;
        let head: f64 = (1..n).map(|k| (k as f64).powf(-x)).sum();
        let fx = nf.powf(-x);
        head + nf.powf(1.0 - x) / (x - 1.0) + fx / 2.0 + x * fx / nf / 12.0
            - x * (x + 1.0) * (x + 2.0) * fx / nf.powi(3) / 720.0
    }

    #[test]
    fn kinds() {
        let h = build_h(2.0).unwrap();
        assert_eq!(h.kind, LatticeKind::Power { a: 3.0 });
        assert!((h.eval(1, 1) - 0.35355).abs() < 1e-5);
        assert!(h.at(2).contains_interval(&Interval::from_f64(2f64.powf(-1.5), 64)) || (h.at(2).mid_f64() - 2f64.powf(-1.5)).abs() < 1e-16);
        assert_eq!(build_h(1.0).unwrap().kind, LatticeKind::LogPower);
        assert!(build_h(0.5).is_err());
    }

    #[test]
    fn squared_norm_oracle() {
        let h = build_h(2.0).unwrap();
        let n = lp_partial_norm(&h, 2.0, 300, 300).unwrap();
        let total = n.total();
        let oracle = std::f64::consts::PI.powi(2) / 6.0 - zeta(3.0);
        assert!((oracle - 0.4428771636).abs() < 1e-9);
        assert!(total.lo_f64() <= oracle + 1e-12 && oracle - 1e-12 <= total.hi_f64(), "{total}");
        assert!(total.width_le(1e-6));
    }

    #[test]
    fn unit_box() {
        let h = build_h(2.0).unwrap();
        let n = lp_partial_norm(&h, 2.0, 1, 1).unwrap();
        assert!((n.box_sum.mid_f64() - 0.125).abs() < 1e-16);
    }

    #[test]
    fn log_power_under_majorant() {
        let h = build_h(1.0).unwrap();
        for j in [2u64, 10, 100, 1000] {
            let n = lp_partial_norm(&h, 1.0, j, j).unwrap();
            let m = log_power_majorant(j).unwrap();
            assert!(n.box_sum.certainly_le(&Interval::from_scaled(m.lo_scaled().clone(), m.lo_scaled().clone(), m.bits())));
            assert!(n.total().lo_f64() <= m.hi_f64());
        }
    }

    #[test]
    fn q_oracle_and_bounds() {
        let h = build_h(2.0).unwrap();
        let q = build_q(&h, 20, 20, DEFAULT_TAIL_TERMS).unwrap();
        let oracle = zeta(1.5) - 1.0;
        assert!((oracle - 1.61238).abs() < 1e-5);
        let v = q.get(1, 1);
        assert!(v.lo_f64() <= oracle + 1e-12 && oracle - 1e-12 <= v.hi_f64(), "{v}");
        assert!(q.bounds_check().unwrap().verdict());
        assert!(q.roundtrip_check().verdict());
        for s in 2..q.max_s() {
            assert!(q.suffix(s + 1).certainly_lt(q.suffix(s)));
        }
        let csv = q.to_csv();
        assert!(csv.starts_with("j,k,q_lo,q_hi\n"));
        assert_eq!(csv.lines().count(), 401);
    }

    #[test]
    fn q_against_slow_oracle() {
        // direct summation with ten times more terms, plus its own tail bound
        for p in [1.0, 2.0, 3.0] {
            let h = build_h(p).unwrap();
            let q = build_q(&h, 5, 5, 200).unwrap();
            let n = 11 + 10 * 200;
            for s in 2..=11u64 {
                let direct: f64 = (s..=n).rev().map(|m| h.eval(m, 0)).sum();
                let tail_hi = match h.kind {
                    LatticeKind::Power { a } => {
                        let e = a / p;
                        (n as f64).powf(1.0 - e) / (e - 1.0)
                    }
                    LatticeKind::LogPower => 1.0 / (n as f64 * (n as f64).ln().powi(2)),
                };
                let v = q.suffix(s);
                assert!(v.lo_f64() <= direct + tail_hi + 1e-12, "p={p} s={s}");
                assert!(direct - 1e-12 <= v.hi_f64(), "p={p} s={s}");
            }
        }
    }

    #[test]
    fn divergence_power_case() {
        let c = divergence_certificate(2.0, 200, None).unwrap();
        assert!(c.verdict(), "{c}");
        let c = divergence_certificate(2.0, 200, Some(5.0)).unwrap();
        assert!(c.verdict(), "{c}");
        assert!((c.reported_value("l_5 majorant").unwrap().mid_f64() - 96.0).abs() < 1e-12);
        assert!(matches!(divergence_certificate(2.0, 200, Some(4.0)), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn divergence_log_case() {
        assert_eq!(log_power_threshold(), (5504, 681));
        let c = divergence_certificate(1.0, 50, None).unwrap();
        assert!(c.verdict(), "{c}");
        assert_eq!(c.reported_value("J0").unwrap().mid_f64(), 5502.0);
    }

    #[test]
    fn row_bounds_increase() {
        let bounds: Vec<f64> = [10u64, 100, 1000]
            .iter()
            .map(|&k| divergence_certificate(2.0, k, None).unwrap().reported_value("row-sum lower bound").unwrap().mid_f64())
            .collect();
        assert!(bounds.windows(2).all(|w| w[1] > w[0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn grids_roundtrip(p in 1.0f64..4.0, j in 1u64..12, k in 1u64..12) {
            let h = build_h(p).unwrap();
            let q = build_q(&h, j, k, 300).unwrap();
            prop_assert!(q.roundtrip_check().verdict());
            if let LatticeKind::Power { .. } = h.kind {
                prop_assert!(q.bounds_check().unwrap().verdict());
            }
        }

        #[test]
        fn box_sums_grow(p in 1.5f64..3.0, j in 1u64..20, k in 1u64..20) {
            let h = build_h(p).unwrap();
            let a = lp_partial_norm(&h, p, j, k).unwrap();
            let b = lp_partial_norm(&h, p, j + 1, k).unwrap();
            prop_assert!(b.box_sum.certainly_gt(&a.box_sum));
            prop_assert!(a.total().lo_f64() <= b.total().hi_f64());
            prop_assert!(b.total().lo_f64() <= a.total().hi_f64());
        }
    }
}
