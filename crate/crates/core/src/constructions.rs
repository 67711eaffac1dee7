//! Explicit joint coboundaries of two rotations that are not double
//! coboundaries, together with the sufficient-condition checkers around
//! them.
//!
//! The main construction puts `f_{q_k} = ||q_k beta||` on a lacunary
//! sequence of simultaneous Dirichlet approximations `q_k` and defines `g`
//! by `(1 - e(n alpha)) f_n = (1 - e(n beta)) g_n`. Then
//! `(I - T_alpha) f = (I - T_beta) g` with both series absolutely
//! convergent, while the would-be double solution `h` has
//! `|h_{q_k}| >= 1/(2 pi)` for every `k`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateKind, Comparison};
use crate::diophantine::{
    bad_pair_constant, continued_fraction, convergents, dirichlet_pair_search, inverse_root_sum, ratio_holds,
    select_summable_lacunary, ApproximationRecord, Irrational, PrecisionPolicy,
};
use crate::error::{Error, Result};
use crate::fourier::{
    abs_enclosure, apply_difference, apply_power_difference, apply_rotation_power, double_solve,
    modulus_sq_enclosure, transfer_coefficients, SparseFourierSeries,
};
use crate::interval::{Interval, MAX_BITS, START_BITS};

/// Starting precision of certificate evaluation.
const CERT_BITS: u32 = 2 * START_BITS;

/// Relative tolerance for series identities checked in doubles.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionOptions {
    /// Lacunarity ratio `q_{k+1} / q_k`.
    pub ratio: f64,
    /// Budget for `sum_k q_k^{-1/2}`, tail included.
    pub budget: f64,
    pub policy: PrecisionPolicy,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions {
            ratio: 2.0,
            budget: 2.0,
            policy: PrecisionPolicy::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionKind {
    JointNotDouble,
    BadPairFamily,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionResult {
    pub kind: ConstructionKind,
    pub alpha: Irrational,
    pub beta: Irrational,
    pub f: SparseFourierSeries,
    pub g: SparseFourierSeries,
    /// Coefficients of `h` with `(I - T_alpha)(I - T_beta) h = (I - T_alpha) f`.
    pub h: SparseFourierSeries,
    pub q_sequence: Vec<ApproximationRecord>,
    pub certificates: Vec<Certificate>,
    /// Bound on `sum_{k > K} |g_{q_k}|` for any continuation of the
    /// selection, when one is available.
    pub tail_bound: Option<Interval>,
    /// Largest relative coefficient gap between `(I - T_alpha) f` and
    /// `(I - T_beta) g`.
    pub identity_residual: f64,
    pub options: ConstructionOptions,
    pub assumptions: Vec<String>,
}

impl ConstructionResult {
    pub fn qs(&self) -> Vec<u64> {
        self.q_sequence.iter().map(|r| r.q).collect()
    }

    pub fn verdict(&self) -> bool {
        self.certificates.iter().all(|c| c.verdict())
    }

    pub fn certificate(&self, kind: CertificateKind) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.kind == kind)
    }

    /// `(I - T_alpha) f`.
    pub fn phi(&self) -> SparseFourierSeries {
        apply_difference(&self.f, &self.alpha)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "alpha = {}\nbeta = {}\nq = {:?}\nidentity residual = {:e}\n",
            self.alpha,
            self.beta,
            self.qs(),
            self.identity_residual
        );
        if let Some(t) = &self.tail_bound {
            out.push_str(&format!("tail bound = {t}\n"));
        }
        for a in &self.assumptions {
            out.push_str(&format!("assumption: {a}\n"));
        }
        for c in &self.certificates {
            out.push_str(&c.render_text());
        }
        out
    }
}

fn half_pi(bits: u32) -> Interval {
    Interval::pi(bits).div_int(2)
}

fn inv_two_pi(bits: u32) -> Interval {
    Interval::one(bits).div(&Interval::pi(bits).mul_int(2)).expect("pi > 0")
}

/// Re-evaluates certificates at doubling precision until all verdicts hold.
fn certify<F: Fn(u32) -> Vec<Certificate>>(what: &str, build: F) -> Result<Vec<Certificate>> {
    let mut bits = CERT_BITS;
    loop {
        let certs = build(bits);
        if certs.iter().all(|c| c.verdict()) {
            return Ok(certs);
        }
        if bits >= MAX_BITS {
            let failing: Vec<String> = certs
                .iter()
                .flat_map(|c| c.failures().map(|e| e.description.clone()))
                .collect();
            return Err(Error::CertificationFailure(format!("{what}: {}", failing.join("; "))));
        }
        bits *= 2;
    }
}

/// Joint-not-double construction: `K` terms of a greedy lacunary selection of
/// Dirichlet approximations up to `Q`, with the upper-bound chain for `g`
/// and the lower bound for `h` certified.
pub fn build_joint_not_double(
    alpha: &Irrational,
    beta: &Irrational,
    k: usize,
    big_q: u64,
    opts: &ConstructionOptions,
) -> Result<ConstructionResult> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("K must be at least 2, got {k}")));
    }
    let search = dirichlet_pair_search(alpha, beta, big_q, &opts.policy)?;
    let selection = match select_summable_lacunary(&search.records, opts.ratio, opts.budget) {
        Ok(s) => s,
        Err(Error::InsufficientCandidates { found, .. }) => {
            return Err(Error::Shortfall(format!(
                "{found} admissible Dirichlet approximations up to Q = {big_q}, {k} requested"
            )))
        }
        Err(e) => return Err(e),
    };
    if selection.records.len() < k {
        return Err(Error::Shortfall(format!(
            "{} admissible Dirichlet approximations up to Q = {big_q}, {k} requested",
            selection.records.len()
        )));
    }
    let records = selection.records[..k].to_vec();
    assemble_joint(alpha, beta, records, opts)
}

fn assemble_joint(
    alpha: &Irrational,
    beta: &Irrational,
    records: Vec<ApproximationRecord>,
    opts: &ConstructionOptions,
) -> Result<ConstructionResult> {
    // f_q is the lower double endpoint of ||q beta||, so f_q <= ||q beta||
    let coeffs: Vec<(i64, f64)> = records
        .iter()
        .map(|r| (r.q as i64, beta.dist_multiple(&BigInt::from(r.q), CERT_BITS).lo_f64()))
        .collect();
    let f = SparseFourierSeries::from_real(coeffs.iter().copied());
    let g = transfer_coefficients(&f, alpha, beta)?;
    let phi = apply_difference(&f, alpha);
    let h = double_solve(&phi, alpha, beta)?;
    let identity_residual = phi.max_relative_difference(&apply_difference(&g, beta));

    let certificates = certify("joint-not-double construction", |bits| {
        joint_certificates(alpha, beta, &records, &coeffs, &g, opts, bits)
    })?;

    let last = records.last().expect("at least two records").q;
    let tail_bound = tail_estimate(last, opts.ratio, CERT_BITS).mul(&half_pi(CERT_BITS));
    Ok(ConstructionResult {
        kind: ConstructionKind::JointNotDouble,
        alpha: alpha.clone(),
        beta: beta.clone(),
        f,
        g,
        h,
        q_sequence: records,
        certificates,
        tail_bound: Some(tail_bound),
        identity_residual,
        options: *opts,
        assumptions: vec![format!(
            "the infinite construction continues the selection with ratio >= {}; \
             the tail bound covers every such continuation",
            opts.ratio
        )],
    })
}

/// `q^{-1/2} / (sqrt(ratio) - 1)`, the geometric bound on
/// `sum_{k > K} q_k^{-1/2}` when `q_{k+1} >= ratio q_k`.
fn tail_estimate(last: u64, ratio: f64, bits: u32) -> Interval {
    let root_ratio = Interval::from_f64(ratio, bits).sqrt().expect("ratio > 1");
    let term = Interval::one(bits)
        .div(&Interval::from_int(last, bits).sqrt().expect("q > 0"))
        .expect("q > 0");
    term.div(&root_ratio.sub(&Interval::one(bits))).expect("ratio > 1")
}

fn joint_certificates(
    alpha: &Irrational,
    beta: &Irrational,
    records: &[ApproximationRecord],
    coeffs: &[(i64, f64)],
    g: &SparseFourierSeries,
    opts: &ConstructionOptions,
    bits: u32,
) -> Vec<Certificate> {
    let hp = half_pi(bits);
    let zero = Interval::zero(bits);
    let qs: Vec<u64> = records.iter().map(|r| r.q).collect();
    let sum_q = inverse_root_sum(&qs, bits);

    let mut sum_g = zero.clone();
    let mut sum_ratio = zero.clone();
    let mut sum_a = zero.clone();
    let mut sum_f = zero.clone();
    let mut sum_h2 = zero.clone();
    let mut double = Certificate::new(CertificateKind::DoubleLowerBound, "|h_q| in [1/(2 pi), 1/4] on every q_k");
    let lower = inv_two_pi(bits);
    let quarter = Interval::from_ratio(&1.into(), &4.into(), bits);
    let width_cap = Interval::from_f64(1e-10, bits);
    for (&(q, fq), _) in coeffs.iter().zip(records) {
        let qb = BigInt::from(q);
        let a = alpha.dist_multiple(&qb, bits);
        let b = beta.dist_multiple(&qb, bits);
        let fi = Interval::from_f64(fq, bits);
        let sa = a.sin_pi();
        let sb = b.sin_pi();
        sum_g = sum_g.add(&fi.mul(&sa).div(&sb).expect("||q beta|| > 0"));
        sum_ratio = sum_ratio.add(&fi.mul(&a).div(&b).expect("||q beta|| > 0"));
        sum_a = sum_a.add(&a);
        sum_f = sum_f.add(&fi);

        let hq = fi.div(&sb.mul_int(2)).expect("||q beta|| > 0");
        sum_h2 = sum_h2.add(&hq.sqr());
        double.check(format!("|h_{q}| >= 1/(2 pi)"), hq.clone(), Comparison::Ge, lower.clone());
        double.check(format!("|h_{q}| <= 1/4"), hq.clone(), Comparison::Le, quarter.clone());
        double.check(format!("width of |h_{q}|"), hq.width_interval(), Comparison::Le, width_cap.clone());
    }
    double.check(
        format!("sum of |h_q|^2 over {} terms >= K/(4 pi^2)", qs.len()),
        sum_h2,
        Comparison::Ge,
        Interval::from_int(qs.len() as u64, bits).mul(&lower.sqr()),
    );
    double.note("every |h_q| stays above 1/(2 pi), so h is not the coefficient sequence of an integrable function");

    let mut joint = Certificate::new(CertificateKind::JointUpperBound, "sum |g_q| <= (pi/2) sum q^{-1/2}");
    joint.check(
        "sum |g_q| <= (pi/2) sum f_q ||q alpha|| / ||q beta||",
        sum_g.clone(),
        Comparison::Le,
        hp.mul(&sum_ratio),
    );
    joint.check(
        "(pi/2) sum f_q ||q alpha|| / ||q beta|| <= (pi/2) sum ||q alpha||",
        hp.mul(&sum_ratio),
        Comparison::Le,
        hp.mul(&sum_a),
    );
    joint.check(
        "(pi/2) sum ||q alpha|| < (pi/2) sum q^{-1/2}",
        hp.mul(&sum_a),
        Comparison::Lt,
        hp.mul(&sum_q),
    );
    joint.check("sum |g_q| < (pi/2) sum q^{-1/2}", sum_g.clone(), Comparison::Lt, hp.mul(&sum_q));
    joint.check(
        "stored sum |g_q| with tracked error < (pi/2) sum q^{-1/2}",
        g.certified_l1(bits),
        Comparison::Lt,
        hp.mul(&sum_q),
    );
    joint.report("sum |g_q|", sum_g);
    joint.report("sum q^{-1/2}", sum_q.clone());

    let mut member = Certificate::new(CertificateKind::Membership, "lacunary summable Dirichlet sequence");
    for r in records {
        member.check(
            format!("sqrt({}) max(||q alpha||, ||q beta||) < 1", r.q),
            r.quality.clone(),
            Comparison::Lt,
            Interval::one(bits),
        );
    }
    let ratio = Interval::from_f64(opts.ratio, bits);
    for w in qs.windows(2) {
        member.check(
            format!("{} >= ratio * {}", w[1], w[0]),
            Interval::from_int(w[1], bits),
            Comparison::Ge,
            ratio.mul_int(w[0]),
        );
    }
    member.check("sum f_q <= sum q^{-1/2}", sum_f, Comparison::Le, sum_q.clone());
    let last = *qs.last().expect("nonempty");
    member.check(
        "sum q^{-1/2} plus geometric tail <= budget",
        sum_q.add(&tail_estimate(last, opts.ratio, bits)),
        Comparison::Le,
        Interval::from_f64(opts.budget, bits),
    );
    member.note(format!(
        "lacunary with ratio {}: by Herman's theorem on lacunary series the would-be solution is not even measurable (cited, not computed)",
        opts.ratio
    ));
    vec![joint, double, member]
}

/// Thins the q-sequence greedily so that `q_{k+1} >= ratio q_k` and
/// rebuilds the construction on the surviving terms.
pub fn refine_lacunary(result: &ConstructionResult, ratio: f64) -> Result<ConstructionResult> {
    if result.kind != ConstructionKind::JointNotDouble {
        return Err(Error::Precondition("only the joint-not-double construction can be refined".into()));
    }
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(Error::InvalidParameter(format!("ratio must exceed 1, got {ratio}")));
    }
    let mut kept: Vec<ApproximationRecord> = Vec::new();
    for r in &result.q_sequence {
        match kept.last() {
            Some(last) if !ratio_holds(last.q, r.q, ratio) => {}
            _ => kept.push(r.clone()),
        }
    }
    if kept.len() < 2 {
        return Err(Error::InsufficientCandidates {
            found: kept.len(),
            needed: 2,
        });
    }
    let mut opts = result.options;
    opts.ratio = opts.ratio.max(ratio);
    assemble_joint(&result.alpha, &result.beta, kept, &opts)
}

/// Bad-pair family with caller-supplied coefficients `a_k`.
pub fn build_bad_pair_family(
    alpha: &Irrational,
    beta: &Irrational,
    a: &[f64],
    big_q: u64,
    opts: &ConstructionOptions,
) -> Result<ConstructionResult> {
    build_bad_pair_family_with(alpha, beta, a.len(), big_q, |k, _| a[k], opts)
}

/// Bad-pair family whose coefficients may depend on the selected `q_k`:
/// `coefficient(k, q_k)` gives `a_k`.
pub fn build_bad_pair_family_with<F: Fn(usize, u64) -> f64>(
    alpha: &Irrational,
    beta: &Irrational,
    count: usize,
    big_q: u64,
    coefficient: F,
    opts: &ConstructionOptions,
) -> Result<ConstructionResult> {
    if count == 0 {
        return Err(Error::InvalidParameter("at least one coefficient is required".into()));
    }
    if !(opts.ratio > 1.0) || !opts.ratio.is_finite() {
        return Err(Error::InvalidParameter(format!("ratio must exceed 1, got {}", opts.ratio)));
    }
    let estimate = bad_pair_constant(alpha, beta, big_q, &opts.policy)?;
    if !estimate.value.is_positive() {
        return Err(Error::Precondition(format!(
            "bad-pair constant {} is not bounded away from zero",
            estimate.value
        )));
    }
    let c_hi = estimate.value.hi_scaled().clone();
    let c = Interval::from_scaled(c_hi.clone(), c_hi, estimate.value.bits());

    let half = c.div_int(2);
    let double = c.mul_int(2);
    let (lo_f, hi_f) = (half.lo_f64(), double.hi_f64());
    // fast screen over every q <= Q, then exact confirmation in order
    let candidates: Vec<u64> = (1..=big_q)
        .into_par_iter()
        .filter(|&q| {
            let k = q as i64;
            let (a, b) = (alpha.dist_mul_f64(k), beta.dist_mul_f64(k));
            let err = alpha.fast_error_bound(k).max(beta.fast_error_bound(k)) * 2.0;
            let s = (q as f64).sqrt();
            b + err >= a && s * (b + err) >= lo_f && s * (b - err) <= hi_f
        })
        .collect();
    let mut any_dominated = false;
    let mut records: Vec<ApproximationRecord> = Vec::new();
    for q in candidates {
        let r = ApproximationRecord::new(alpha, beta, q, opts.policy.tol)?;
        if r.beta_dominates() != Some(true) {
            continue;
        }
        any_dominated = true;
        let scaled = Interval::from_int(r.q, r.dist_beta.bits())
            .sqrt()
            .expect("q > 0")
            .mul(&r.dist_beta);
        if !(half.certainly_le(&scaled) && scaled.certainly_le(&double)) {
            continue;
        }
        if let Some(last) = records.last() {
            if !ratio_holds(last.q, r.q, opts.ratio) {
                continue;
            }
        }
        records.push(r);
        if records.len() == count {
            break;
        }
    }
    if !any_dominated {
        return Err(Error::Shortfall(format!("no q <= {big_q} with ||q beta|| >= ||q alpha|| in the window")));
    }
    if records.len() < count {
        return Err(Error::Shortfall(format!(
            "{} admissible q up to Q = {big_q}, {count} requested",
            records.len()
        )));
    }
    let coeffs: Vec<(i64, f64)> = records
        .iter()
        .enumerate()
        .map(|(k, r)| (r.q as i64, coefficient(k, r.q)))
        .collect();
    if let Some((_, v)) = coeffs.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("coefficient {v} is not finite")));
    }
    let f = SparseFourierSeries::from_real(coeffs.iter().copied());
    let g = transfer_coefficients(&f, alpha, beta)?;
    let phi = apply_difference(&f, alpha);
    let h = double_solve(&phi, alpha, beta)?;
    let identity_residual = phi.max_relative_difference(&apply_difference(&g, beta));

    let certificates = certify("bad-pair family", |bits| {
        bad_pair_certificates(alpha, beta, &records, &coeffs, &c, opts.ratio, bits)
    })?;
    Ok(ConstructionResult {
        kind: ConstructionKind::BadPairFamily,
        alpha: alpha.clone(),
        beta: beta.clone(),
        f,
        g,
        h,
        q_sequence: records,
        certificates,
        tail_bound: None,
        identity_residual,
        options: *opts,
        assumptions: vec![format!(
            "(alpha, beta) is a bad pair with constant C = {}, estimated from q <= {big_q} (attained at q = {}); \
             the liminf itself is not computable",
            estimate.value, estimate.argmin
        )],
    })
}

fn bad_pair_certificates(
    alpha: &Irrational,
    beta: &Irrational,
    records: &[ApproximationRecord],
    coeffs: &[(i64, f64)],
    c: &Interval,
    ratio: f64,
    bits: u32,
) -> Vec<Certificate> {
    let hp = half_pi(bits);
    let c = c.with_bits(bits.max(c.bits()));
    let mut member = Certificate::new(CertificateKind::Membership, "bad-pair window and lacunarity");
    let mut joint = Certificate::new(CertificateKind::JointUpperBound, "|g_q| <= (pi/2) |a_k|");
    let mut witness = Certificate::new(CertificateKind::DivergenceWitness, "|h_q| >= |a_k| sqrt(q) / (4 pi C)");
    let four_pi_c = Interval::pi(bits).mul_int(4).mul(&c);
    let mut sum_a = Interval::zero(bits);
    let mut sum_g = Interval::zero(bits);
    for (r, &(q, ak)) in records.iter().zip(coeffs) {
        let qb = BigInt::from(q);
        let a = alpha.dist_multiple(&qb, bits);
        let b = beta.dist_multiple(&qb, bits);
        let root = Interval::from_int(q, bits).sqrt().expect("q > 0");
        member.check(format!("||{q} beta|| >= ||{q} alpha||"), b.clone(), Comparison::Ge, a.clone());
        let scaled = root.mul(&b);
        member.check(format!("sqrt({q}) ||q beta|| >= C/2"), scaled.clone(), Comparison::Ge, c.div_int(2));
        member.check(format!("sqrt({q}) ||q beta|| <= 2C"), scaled, Comparison::Le, c.mul_int(2));

        let mag = Interval::from_f64(ak.abs(), bits);
        sum_a = sum_a.add(&mag);
        let gq = mag.mul(&a.sin_pi()).div(&b.sin_pi()).expect("||q beta|| > 0");
        sum_g = sum_g.add(&gq);
        joint.check(format!("|g_{q}| <= (pi/2) |a_k|"), gq, Comparison::Le, hp.mul(&mag));

        let hq = mag.div(&b.sin_pi().mul_int(2)).expect("||q beta|| > 0");
        let bound = mag.mul(&root).div(&four_pi_c).expect("C > 0");
        witness.check(format!("|h_{q}| >= |a_k| sqrt(q) / (4 pi C)"), hq, Comparison::Ge, bound);
        witness.report(format!("sqrt({q}) |a_k|"), mag.mul(&root));
        let _ = r;
    }
    for w in records.windows(2) {
        member.check(
            format!("{} >= ratio * {}", w[1].q, w[0].q),
            Interval::from_int(w[1].q, bits),
            Comparison::Ge,
            Interval::from_f64(ratio, bits).mul_int(w[0].q),
        );
    }
    member.report("sum |a_k|", sum_a.clone());
    joint.check("sum |g_q| <= (pi/2) sum |a_k|", sum_g, Comparison::Le, hp.mul(&sum_a));
    vec![joint, witness, member]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// `sum |k| |f_k|`, giving a continuous solution.
    C,
    /// `sum k^2 |f_k|^2`, giving a square-integrable solution.
    L2,
}

/// Sufficient conditions for `f` to be a coboundary of every badly
/// approximable rotation. With `bad = Some((alpha, c))`, also certifies
/// `||k alpha|| > c/|k|` on the support and the resulting bound on the
/// solution's coefficients.
pub fn check_bad_joint(f: &SparseFourierSeries, mode: NormMode, bad: Option<(&Irrational, f64)>) -> Result<Certificate> {
    f.require_centered()?;
    let bits = CERT_BITS;
    let title = match mode {
        NormMode::C => "sum |k| |f_k| for a continuous solution",
        NormMode::L2 => "sum k^2 |f_k|^2 for a square-integrable solution",
    };
    let mut cert = Certificate::new(CertificateKind::Membership, title);
    let mut moment = Interval::zero(bits);
    let mut l1 = Interval::zero(bits);
    for (k, c) in f.iter() {
        let mag = abs_enclosure(c, bits);
        l1 = l1.add(&mag);
        let term = match mode {
            NormMode::C => mag.mul_int(k.unsigned_abs()),
            NormMode::L2 => modulus_sq_enclosure(c, bits).mul_int(k.unsigned_abs()).mul_int(k.unsigned_abs()),
        };
        moment = moment.add(&term);
    }
    let name = match mode {
        NormMode::C => "sum |k| |f_k|",
        NormMode::L2 => "sum k^2 |f_k|^2",
    };
    cert.report(name, moment.clone());
    if mode == NormMode::L2 {
        cert.report("sum |f_k|", l1);
    }
    if let Some((alpha, c)) = bad {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("badness constant must be positive, got {c}")));
        }
        let ci = Interval::from_f64(c, bits);
        let mut sum_g = Interval::zero(bits);
        for (k, coef) in f.iter() {
            let kb = BigInt::from(k.unsigned_abs());
            let d = alpha.dist_multiple(&kb, bits);
            cert.check(
                format!("||{k} alpha|| > c/|k|"),
                d.clone(),
                Comparison::Gt,
                ci.div_int(k.unsigned_abs()),
            );
            let modulus = alpha.divisor_modulus(k, bits)?;
            let gk = match mode {
                NormMode::C => abs_enclosure(coef, bits).div(&modulus),
                NormMode::L2 => modulus_sq_enclosure(coef, bits).div(&modulus.sqr()),
            }
            .expect("divisor is positive");
            sum_g = sum_g.add(&gk);
        }
        match mode {
            NormMode::C => {
                cert.check(
                    "sum |g_k| <= sum |k| |f_k| / (4c)",
                    sum_g,
                    Comparison::Le,
                    moment.div(&ci.mul_int(4)).expect("c > 0"),
                );
            }
            NormMode::L2 => {
                cert.check(
                    "sum |g_k|^2 <= sum k^2 |f_k|^2 / (16 c^2)",
                    sum_g,
                    Comparison::Le,
                    moment.div(&ci.sqr().mul_int(16)).expect("c > 0"),
                );
            }
        }
    }
    Ok(cert)
}

/// What the caller knows about `sum_{k > last} k a_k^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailInfo {
    /// An analytic upper bound on the discarded tail.
    Bound(f64),
    Divergent,
    Unknown,
}

/// Checks that `a` (indexed from `first_index`) is positive and
/// non-increasing and reports `sum k a_k^2` together with the caller's tail
/// information.
pub fn check_mur_envelope(a: &[f64], first_index: u64, tail: TailInfo) -> Result<Certificate> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("envelope is empty".into()));
    }
    if first_index == 0 {
        return Err(Error::InvalidParameter("envelope indices start at 1".into()));
    }
    if let Some(i) = a.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("envelope entry {i} is not a positive number")));
    }
    if let Some(i) = (1..a.len()).find(|&i| a[i] > a[i - 1]) {
        return Err(Error::NotMonotone(i));
    }
    let bits = CERT_BITS;
    let mut cert = Certificate::new(CertificateKind::Membership, "monotone envelope with sum k a_k^2 finite");
    if a.len() > 1 {
        let steps = a.windows(2).map(|w| Interval::from_f64(w[1], bits).sub(&Interval::from_f64(w[0], bits)));
        let max_step = steps.reduce(|x, y| x.max(&y)).expect("two entries");
        cert.check("max (a_{k+1} - a_k) <= 0", max_step, Comparison::Le, Interval::zero(bits));
    } else {
        cert.note("single entry: monotone by default");
    }
    let partial = a.iter().enumerate().fold(Interval::zero(bits), |acc, (i, v)| {
        acc.add(&Interval::from_f64(*v, bits).sqr().mul_int(first_index + i as u64))
    });
    cert.report("sum k a_k^2", partial.clone());
    match tail {
        TailInfo::Bound(t) => {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("tail bound must be finite and non-negative, got {t}")));
            }
            let tail = Interval::from_f64(t, bits);
            cert.report("tail bound", tail.clone());
            cert.report("sum k a_k^2 with tail", partial.hull(&partial.add(&tail)));
        }
        TailInfo::Divergent => cert.block("the caller reports that sum k a_k^2 diverges"),
        TailInfo::Unknown => cert.block("no tail information: convergence of sum k a_k^2 is not established"),
    }
    Ok(cert)
}

/// Envelope check for `|f_k| = O(1/(k^2 (log k)^gamma))`.
///
/// Computes the least `M` with `|f_k| <= M / (k^2 (log |k|)^gamma)` on the
/// support (frequencies `|k| >= 2`) and checks the induced envelope
/// `a_k = M / (k (log k)^gamma)`.
pub fn check_double_bad(f: &SparseFourierSeries, gamma: f64) -> Result<Certificate> {
    f.require_centered()?;
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
    }
    let bits = CERT_BITS;
    let gi = Interval::from_f64(gamma, bits);
    let log_pow = |k: u64| -> Interval {
        let l = Interval::from_int(k, bits).ln().expect("k >= 2");
        l.powf(&gi).expect("log k > 0")
    };
    let mut cert = Certificate::new(CertificateKind::Membership, "|f_k| <= M / (k^2 (log k)^gamma)");
    let mut m = Interval::zero(bits);
    let mut k_max = 0u64;
    for (k, c) in f.iter() {
        let ka = k.unsigned_abs();
        if ka < 2 {
            cert.note(format!("frequency {k} carries no envelope constraint and is ignored"));
            continue;
        }
        let v = abs_enclosure(c, bits).mul_int(ka).mul_int(ka).mul(&log_pow(ka));
        m = m.max(&v);
        k_max = k_max.max(ka);
    }
    cert.report("M", m.clone());
    if k_max == 0 || !m.hi_scaled().is_positive_big() {
        cert.note("no coefficients at |k| >= 2: M = 0");
        return Ok(cert);
    }
    let m_hi = Interval::from_scaled(m.hi_scaled().clone(), m.hi_scaled().clone(), m.bits());
    let envelope: Vec<f64> = (2..=k_max)
        .map(|k| m_hi.div(&log_pow(k).mul_int(k)).expect("positive").hi_f64())
        .collect();
    // sum_{k > K} k a_k^2 <= M^2 / ((2 gamma - 1) (log K)^{2 gamma - 1})
    let expo = gi.mul_int(2).sub(&Interval::one(bits));
    let tail = m_hi
        .sqr()
        .div(
            &expo.mul(
                &Interval::from_int(k_max, bits)
                    .ln()
                    .expect("K >= 2")
                    .powf(&expo)
                    .expect("log K > 0"),
            ),
        )
        .expect("positive");
    let env = check_mur_envelope(&envelope, 2, TailInfo::Bound(tail.hi_f64()))?;
    for e in env.entries {
        cert.check(e.description, e.value, e.comparison, e.threshold);
    }
    cert.reported.extend(env.reported);
    cert.notes.extend(env.notes);
    for b in env.blockers {
        cert.block(b);
    }
    Ok(cert)
}

trait PositiveBig {
    fn is_positive_big(&self) -> bool;
}

impl PositiveBig for BigInt {
    fn is_positive_big(&self) -> bool {
        self.sign() == num_bigint::Sign::Plus
    }
}

/// Lower bounds `|f_n| / (2 pi ||n beta||)` on the solution of
/// `(I - T_beta) h = f` along the convergent denominators of `beta`.
pub fn large_coeff_witness(f: &SparseFourierSeries, beta: &Irrational, depth: usize, threshold: f64) -> Result<Certificate> {
    let mut dens: Vec<u64> = convergents(&continued_fraction(beta, depth))
        .into_iter()
        .filter_map(|(_, q)| q.to_u64())
        .filter(|&q| q >= 1 && q <= i64::MAX as u64)
        .collect();
    dens.dedup();
    let dens: Vec<u64> = dens.into_iter().filter(|&q| f.coeff(q as i64) != Complex64::new(0.0, 0.0)).collect();
    if dens.is_empty() {
        return Err(Error::Precondition(
            "the series has no nonzero coefficient at a convergent denominator".into(),
        ));
    }
    let mut cert = Certificate::new(CertificateKind::DivergenceWitness, "|h_n| >= |f_n| / (2 pi ||n beta||) at convergents");
    for q in dens {
        let bits = CERT_BITS + 2 * (64 - q.leading_zeros());
        let qb = BigInt::from(q);
        let d = beta.dist_multiple(&qb, bits);
        let mag = abs_enclosure(f.coeff(q as i64), bits);
        let two_pi = Interval::pi(bits).mul_int(2);
        let w = mag.div(&two_pi.mul(&d)).expect("||n beta|| > 0");
        cert.check(format!("{q} ||{q} beta|| < 1"), d.mul_int(q), Comparison::Lt, Interval::one(bits));
        let h = mag.div(&d.sin_pi().mul_int(2)).expect("||n beta|| > 0");
        cert.check(format!("|h_{q}| >= witness"), h, Comparison::Ge, w.clone());
        cert.check(
            format!("witness at {q} >= |n f_n| / (2 pi)"),
            w.clone(),
            Comparison::Ge,
            mag.mul_int(q).div(&two_pi).expect("pi > 0"),
        );
        cert.check(format!("witness at {q} > threshold"), w.clone(), Comparison::Gt, Interval::from_f64(threshold, bits));
        cert.report(format!("witness at {q}"), w);
    }
    Ok(cert)
}

/// Per-frequency terms of a finite sum and their total.
#[derive(Clone, Debug, Serialize)]
pub struct PartialSum {
    pub terms: Vec<(i64, Interval)>,
    pub total: Interval,
}

impl PartialSum {
    fn from_terms(terms: Vec<(i64, Interval)>, bits: u32) -> Self {
        let total = terms.iter().fold(Interval::zero(bits), |acc, (_, t)| acc.add(t));
        PartialSum { terms, total }
    }

    /// Running totals in term order.
    pub fn cumulative(&self) -> Vec<Interval> {
        let mut acc: Option<Interval> = None;
        self.terms
            .iter()
            .map(|(_, t)| {
                let next = match &acc {
                    Some(a) => a.add(t),
                    None => t.clone(),
                };
                acc = Some(next.clone());
                next
            })
            .collect()
    }
}

/// Partial sum of `|f_n|^2 sin^2(pi n beta) / sin^2(pi n alpha)` over the
/// support; diagnostic only.
pub fn petersen_series(f: &SparseFourierSeries, alpha: &Irrational, beta: &Irrational) -> Result<PartialSum> {
    f.require_centered()?;
    let bits = CERT_BITS;
    let mut terms = Vec::with_capacity(f.len());
    for (n, c) in f.iter() {
        let ma = alpha.divisor_modulus(n, bits)?;
        let mb = beta.divisor_modulus(n, bits)?;
        let t = modulus_sq_enclosure(c, bits).mul(&mb.sqr()).div(&ma.sqr()).expect("divisor is positive");
        terms.push((n, t));
    }
    Ok(PartialSum::from_terms(terms, bits))
}

#[derive(Clone, Debug, Serialize)]
pub struct KacSalem {
    /// Terms `|phi_k| / |sin(pi k x)|`.
    pub series: PartialSum,
    /// `sum |phi_k| log(1 / |phi_k|)` over the nonzero magnitudes.
    pub entropy: Interval,
}

/// Partial sum of `sum |phi_k| / |sin(pi k x)|` with the entropy sum of the
/// magnitudes.
pub fn kac_salem_series(magnitudes: &[(i64, f64)], x: &Irrational) -> Result<KacSalem> {
    let bits = CERT_BITS;
    let mut terms = Vec::with_capacity(magnitudes.len());
    let mut entropy = Interval::zero(bits);
    for &(k, m) in magnitudes {
        if k == 0 {
            return Err(Error::InvalidParameter("frequency 0 is excluded".into()));
        }
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("magnitude at {k} must be finite and non-negative, got {m}")));
        }
        let mi = Interval::from_f64(m, bits);
        // |sin(pi k x)| = |1 - e(k x)| / 2
        let modulus = x.divisor_modulus(k, bits)?;
        terms.push((k, mi.mul_int(2).div(&modulus).expect("divisor is positive")));
        if m > 0.0 {
            entropy = entropy.sub(&mi.mul(&mi.ln().expect("m > 0")));
        }
    }
    Ok(KacSalem {
        series: PartialSum::from_terms(terms, bits),
        entropy,
    })
}

/// A joint coboundary of `R^k` and `R^j` lifted from one of `R` and `R^j`.
#[derive(Clone, Debug, Serialize)]
pub struct PowerLift {
    pub k: i64,
    pub j: i64,
    /// `u = (I - R) x = (I - R^j) y0`.
    pub u: SparseFourierSeries,
    /// `v = sum_{n<k} R^n u`.
    pub v: SparseFourierSeries,
    /// `v = (I - R^k) x`.
    pub x: SparseFourierSeries,
    /// `v = (I - R^j) y` with `y = sum_{n<k} R^n y0`.
    pub y: SparseFourierSeries,
    /// Relative gap between `v` and `(I - R^k) x`.
    pub t_residual: f64,
    /// Relative gap between `v` and `(I - R^j) y`.
    pub s_residual: f64,
}

/// `y0` with `(I - R) x = (I - R^j) y0` for `R = T_gamma`.
pub fn lift_seed(x: &SparseFourierSeries, gamma: &Irrational, j: i64) -> Result<SparseFourierSeries> {
    transfer_coefficients(x, gamma, &gamma.mul_int(j)?)
}

/// Lifts a joint coboundary `u = (I - R) x = (I - R^j) y0` of `R = T_gamma`
/// and `S = R^j` to the joint coboundary `v = sum_{n<k} R^n u` of `R^k`
/// and `S`.
pub fn power_lift_joint(x: &SparseFourierSeries, y0: &SparseFourierSeries, gamma: &Irrational, k: i64, j: i64) -> Result<PowerLift> {
    if k < 1 {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if j == 0 {
        return Err(Error::InvalidParameter("j must be nonzero".into()));
    }
    let u = apply_difference(x, gamma);
    let u_s = apply_power_difference(y0, gamma, j);
    let gap = u.max_relative_difference(&u_s);
    if gap > IDENTITY_TOL {
        return Err(Error::Precondition(format!(
            "(I - R) x and (I - R^j) y differ by {gap:e} relative"
        )));
    }
    let orbit_sum = |s: &SparseFourierSeries| -> SparseFourierSeries {
        (1..k).fold(s.clone(), |acc, n| acc.add(&apply_rotation_power(s, gamma, n)))
    };
    let v = orbit_sum(&u);
    let y = orbit_sum(y0);
    let t_residual = v.max_relative_difference(&apply_power_difference(x, gamma, k));
    let s_residual = v.max_relative_difference(&apply_power_difference(&y, gamma, j));
    Ok(PowerLift {
        k,
        j,
        u,
        v,
        x: x.clone(),
        y,
        t_residual,
        s_residual,
    })
}
