//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coblab::certificate::CertificateKind;
use coblab::constructions::{build_joint_not_double, lift_seed, power_lift_joint, ConstructionOptions};
use coblab::diophantine::{
    dirichlet_pair_search, integer_dependence_search, nearest_integer_distance, rotation_root, square_approximation_search,
    Irrational, PrecisionPolicy,
};
use coblab::fourier::{apply_difference, apply_power_difference, browder_sum_norm, double_ergodic_sum_norm, SparseFourierSeries};
use coblab::shift::{build_h, divergence_certificate, lp_partial_norm};
use coblab::spectral::{double_criterion_sum, double_term_certificate, joint_criterion_sum, joint_increment_certificate, spectral_measure};
use coblab::Interval;

type Outcome = Result<String, String>;

fn surd(s: &str) -> Irrational {
    s.parse().expect("valid surd")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn construction_pipeline() -> Outcome {
    let (alpha, beta) = (surd("sqrt(2)-1"), surd("sqrt(3)-1"));
    let r = build_joint_not_double(&alpha, &beta, 10, 1_000_000, &ConstructionOptions::default()).map_err(|e| e.to_string())?;
    let joint = r.certificate(CertificateKind::JointUpperBound).ok_or("missing joint certificate")?;
    ensure(joint.verdict(), format!("joint bound failed:\n{joint}"))?;
    let double = r.certificate(CertificateKind::DoubleLowerBound).ok_or("missing double certificate")?;
    ensure(double.verdict(), format!("double bound failed:\n{double}"))?;
    ensure(r.identity_residual <= 1e-12, format!("identity residual {:e}", r.identity_residual))?;
    // independent recomputation of |h_q| in doubles
    for rec in &r.q_sequence {
        let fq = r.f.coeff(rec.q as i64).re;
        let h = fq / (2.0 * (PI * rec.dist_beta.mid_f64()).sin());
        ensure((1.0 / (2.0 * PI)..=0.25).contains(&h), format!("|h_{}| = {h}", rec.q))?;
    }
    Ok(format!("q = {:?}, residual {:.1e}", r.qs(), r.identity_residual))
}

fn spectral_dichotomy() -> Outcome {
    let (alpha, beta) = (surd("sqrt(2)-1"), surd("sqrt(3)-1"));
    let r = build_joint_not_double(&alpha, &beta, 10, 1_000_000, &ConstructionOptions::default()).map_err(|e| e.to_string())?;
    let m = spectral_measure(&r.phi(), &alpha, &beta).map_err(|e| e.to_string())?;
    let joint = joint_criterion_sum(&m).map_err(|e| e.to_string())?;
    let joint_total = joint.total().ok_or("joint criterion divergent")?.clone();
    let inc = joint_increment_certificate(&m, &alpha).map_err(|e| e.to_string())?;
    ensure(inc.verdict(), format!("increments:\n{inc}"))?;
    let dbl = double_term_certificate(&m, None);
    ensure(dbl.verdict(), format!("double terms:\n{dbl}"))?;
    let total = double_criterion_sum(&m).total().ok_or("double criterion divergent")?.clone();
    ensure(total.certainly_ge(&Interval::from_f64(0.2533, 256)), format!("double sum {total}"))?;
    Ok(format!("joint sum {:.6}, double sum {:.6}", joint_total.mid_f64(), total.mid_f64()))
}

fn double_boundedness() -> Outcome {
    let (alpha, beta) = (surd("sqrt(2)-1"), surd("sqrt(3)-1"));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let h = SparseFourierSeries::random_centered(&mut rng, 10, false);
        let phi = apply_difference(&apply_difference(&h, &alpha), &beta);
        let bound = 4.0 * h.l2_norm() + 1e-9;
        for n in 1..=1000u64 {
            let v = double_ergodic_sum_norm(&phi, &alpha, &beta, n, n);
            worst = worst.max(v / bound);
            ensure(v <= bound, format!("n = {n}: {v} > {bound}"))?;
        }
    }
    Ok(format!("max ratio to 4|h| = {worst:.4}"))
}

fn browder_bound() -> Outcome {
    let alpha = surd("sqrt(2)-1");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let g = SparseFourierSeries::random_centered(&mut rng, 10, false);
        let f = apply_difference(&g, &alpha);
        let bound = 2.0 * g.l2_norm() + 1e-9;
        for n in 1..=1000u64 {
            let v = browder_sum_norm(&f, &alpha, n);
            worst = worst.max(v / bound);
            ensure(v <= bound, format!("n = {n}: {v} > {bound}"))?;
        }
    }
    Ok(format!("max ratio to 2|g| = {worst:.4}"))
}

/// Independent exact check: the products `2^k 3^j` are distinct iff their
/// exponent pairs are, by unique factorisation; here compared as sorted
/// integers.
fn doubling_tripling() -> Outcome {
    for n in 1..=64u32 {
        let v = coblab::spectral::doubling_tripling_variance(n).map_err(|e| e.to_string())?;
        ensure(v.is_one(), format!("n = {n}: {v}"))?;
        let mut all: Vec<BigInt> = (0..n)
            .flat_map(|k| (0..n).map(move |j| BigInt::from(2).pow(k) * BigInt::from(3).pow(j)))
            .collect();
        all.sort();
        all.dedup();
        ensure(all.len() == (n * n) as usize, format!("n = {n}: repeated product"))?;
    }
    Ok("n = 1..=64 all exactly 1".into())
}

fn oracle_equivalence() -> Outcome {
    let (alpha, beta) = (surd("sqrt(2)-1"), surd("sqrt(3)-1"));
    let (a, b) = (alpha.to_f64(), beta.to_f64());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = SparseFourierSeries::random_centered(&mut rng, 6, false);
        let n = rng.gen_range(1..=32u64);
        let m = rng.gen_range(1..=32u64);
        // brute force: sum the rotated series coefficient by coefficient
        let mut sq = 0.0;
        for (nu, c) in f.iter() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n {
                for j in 0..m {
                    let t = nu as f64 * (k as f64 * a + j as f64 * b);
                    s += Complex64::from_polar(1.0, 2.0 * PI * t.rem_euclid(1.0));
                }
            }
            sq += (c * s).norm_sqr();
        }
        let brute = sq.sqrt();
        let fast = double_ergodic_sum_norm(&f, &alpha, &beta, n, m);
        worst = worst.max((brute - fast).abs());
        ensure((brute - fast).abs() <= 1e-9, format!("n={n} m={m}: {brute} vs {fast}"))?;
    }
    Ok(format!("max deviation {worst:.1e}"))
}

/// `floor(10^200 q x)` bracketed as `[lo, lo + 1]` (over `c`) by exact
/// integer square roots.
fn decimal_oracle(x: &Irrational, q: u64) -> (BigInt, BigInt, BigInt) {
    let (a, b, d, c) = x.parts();
    let scale = BigInt::from(10).pow(200);
    let qb = BigInt::from(q) * BigInt::from(b.unsigned_abs());
    let root = (&qb * &qb * BigInt::from(d) * &scale * &scale).sqrt();
    let base = BigInt::from(q) * BigInt::from(a) * &scale;
    let lo = if b > 0 { &base + &root } else { &base - &root - 1 };
    let hi = &lo + 1;
    let den = BigInt::from(c) * &scale;
    (lo, hi, den)
}

/// Distance to the nearest integer of every point in `[lo, hi] / den`,
/// as a bracket `[dlo, dhi] / den` (valid when no integer or half-integer
/// lies inside).
fn distance_bracket(lo: &BigInt, hi: &BigInt, den: &BigInt) -> Option<(BigInt, BigInt)> {
    let fl = lo.div_floor_(den);
    if hi.div_floor_(den) != fl {
        return None;
    }
    let (rl, rh) = (lo - &fl * den, hi - &fl * den);
    let twice_l = &rl * 2;
    let twice_h = &rh * 2;
    if twice_h <= *den {
        Some((rl, rh))
    } else if twice_l >= *den {
        Some((den - &rh, den - &rl))
    } else {
        None
    }
}

trait DivFloor {
    fn div_floor_(&self, d: &BigInt) -> BigInt;
}

impl DivFloor for BigInt {
    fn div_floor_(&self, d: &BigInt) -> BigInt {
        use num_integer::Integer;
        self.div_floor(d)
    }
}

fn diophantine_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool = ["sqrt(2)-1", "sqrt(3)-1", "(-1+sqrt(5))/2", "(1+2*sqrt(7))/3", "(-3-sqrt(13))/4", "sqrt(1001)"];
    for _ in 0..20 {
        let x = surd(pool[rng.gen_range(0..pool.len())]);
        let q: u64 = rng.gen_range(1..1_000_000_000_000);
        let enc = nearest_integer_distance(&x, &BigInt::from(q), 1e-30).map_err(|e| e.to_string())?;
        let (lo, hi, den) = decimal_oracle(&x, q);
        let (dlo, dhi) = distance_bracket(&lo, &hi, &den).ok_or("oracle bracket straddles a boundary")?;
        // enc = [L, H] / 2^bits must meet [dlo, dhi] / den
        let two_bits = BigInt::from(1) << enc.bits() as usize;
        let (el, eh) = (enc.lo_scaled().clone(), enc.hi_scaled().clone());
        ensure(
            &el * &den <= &dhi * &two_bits && &dlo * &two_bits <= &eh * &den,
            format!("||{q} x|| for x = {x}: {enc} misses the oracle"),
        )?;
        ensure(el.sign() != Sign::Minus && !eh.is_zero(), "distance enclosure not positive")?;
    }
    let s = dirichlet_pair_search(&surd("sqrt(2)-1"), &surd("sqrt(3)-1"), 10_000, &PrecisionPolicy::default())
        .map_err(|e| e.to_string())?;
    let qs: Vec<u64> = s.records.iter().map(|r| r.q).collect();
    ensure(qs.contains(&2) && qs.contains(&5), format!("Dirichlet list {qs:?}"))?;
    ensure(s.unresolved.is_empty(), format!("unresolved {:?}", s.unresolved))?;
    Ok(format!("20 oracle pairs; {} Dirichlet hits up to 10^4", qs.len()))
}

/// Euler-Maclaurin for `sum_{n >= 1} n^{-x}`.
fn zeta(x: f64) -> f64 {
    let n = 1000u64;
    let nf = n as f64;
    let head: f64 = (1..n).map(|k| (k as f64).powf(-x)).sum();
    let fx = nf.powf(-x);
    head + nf.powf(1.0 - x) / (x - 1.0) + fx / 2.0 + x * fx / nf / 12.0 - x * (x + 1.0) * (x + 2.0) * fx / nf.powi(3) / 720.0
}

fn shift_example() -> Outcome {
    let h = build_h(2.0).map_err(|e| e.to_string())?;
    let n = lp_partial_norm(&h, 2.0, 1000, 1000).map_err(|e| e.to_string())?;
    let total = n.total();
    let oracle = PI * PI / 6.0 - zeta(3.0);
    ensure(total.width_le(1e-6), format!("total {total} too wide"))?;
    ensure(
        total.lo_f64() - 1e-12 <= oracle && oracle <= total.hi_f64() + 1e-12,
        format!("total {total} misses {oracle}"),
    )?;
    let mut bounds = Vec::new();
    for k in [10u64, 100, 1000, 10_000] {
        let c = divergence_certificate(2.0, k, Some(5.0)).map_err(|e| e.to_string())?;
        ensure(c.verdict(), format!("K = {k}:\n{c}"))?;
        bounds.push(c.reported_value("row-sum lower bound").ok_or("missing bound")?.mid_f64());
    }
    ensure(bounds.windows(2).all(|w| w[1] > w[0]), format!("bounds {bounds:?} not increasing"))?;
    let last = *bounds.last().expect("four values");
    ensure(last >= 30.0, format!("row-sum bound {last} < 30"))?;
    Ok(format!("total {:.9}, row bound at 10^4 = {last:.3}", total.mid_f64()))
}

fn dependence_lift() -> Outcome {
    let alpha = surd("sqrt(2)-1");
    let beta = alpha
        .mul_int(2)
        .and_then(|x| x.add_int(1))
        .and_then(|x| x.div_int(3))
        .map_err(|e| e.to_string())?;
    let dep = integer_dependence_search(&alpha, &beta, 5).map_err(|e| e.to_string())?;
    let d = dep.found().ok_or(format!("no relation: {dep:?}"))?;
    ensure((d.m, d.n, d.p) == (2, -3, 1), format!("relation {d:?}"))?;
    let root = rotation_root(&alpha, &beta, &d).map_err(|e| e.to_string())?;
    let gamma = &root.gamma;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = SparseFourierSeries::random_centered(&mut rng, 8, true);
    let (k, j) = (root.alpha_power, root.beta_power);
    let y0 = lift_seed(&x, gamma, j).map_err(|e| e.to_string())?;
    let lift = power_lift_joint(&x, &y0, gamma, k, j).map_err(|e| e.to_string())?;
    ensure(lift.t_residual <= 1e-12 && lift.s_residual <= 1e-12, format!("residuals {:e}, {:e}", lift.t_residual, lift.s_residual))?;
    // the same identities through the original rotations
    let via_alpha = apply_difference(&x, &alpha);
    let via_beta = apply_difference(&lift.y, &beta);
    let gap_a = lift.v.max_relative_difference(&via_alpha);
    let gap_b = lift.v.max_relative_difference(&via_beta);
    ensure(gap_a <= 1e-12 && gap_b <= 1e-12, format!("rotation gaps {gap_a:e}, {gap_b:e}"))?;
    let gap_p = lift.v.max_relative_difference(&apply_power_difference(&x, gamma, k));
    ensure(gap_p <= 1e-12, format!("power gap {gap_p:e}"))?;
    Ok(format!("relation (2, -3, 1), gamma = {gamma}, powers ({k}, {j})"))
}

fn square_approximation() -> Outcome {
    let beta = surd("sqrt(2)-1");
    let policy = PrecisionPolicy::default();
    let wide = square_approximation_search(&beta, 0.6, 10_000, &policy).map_err(|e| e.to_string())?;
    let narrow = square_approximation_search(&beta, 0.65, 10_000, &policy).map_err(|e| e.to_string())?;
    ensure(!wide.is_empty(), "empty delta = 0.6 list")?;
    let ns: Vec<u64> = wide.iter().map(|s| s.n).collect();
    ensure(narrow.iter().all(|s| ns.contains(&s.n)), "0.65 list not a subset")?;
    for s in &wide {
        let d = s.n as f64 * s.n as f64 * beta.to_f64();
        let dist = (d - d.round()).abs();
        ensure(dist < (s.n as f64).powf(-0.6) * (1.0 + 1e-6), format!("n = {}", s.n))?;
    }
    Ok(format!("{} hits at 0.6, {} at 0.65", wide.len(), narrow.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome, Option<Duration>, bool)> = vec![
        ("joint-not-double construction", construction_pipeline, Some(Duration::from_secs(60)), true),
        ("spectral dichotomy", spectral_dichotomy, None, false),
        ("double-coboundary boundedness", double_boundedness, Some(Duration::from_secs(120)), false),
        ("Browder bound", browder_bound, None, false),
        ("doubling/tripling exactness", doubling_tripling, Some(Duration::from_secs(5)), false),
        ("ergodic-sum oracle equivalence", oracle_equivalence, None, false),
        ("Diophantine soundness", diophantine_soundness, None, false),
        ("shift example", shift_example, Some(Duration::from_secs(30)), false),
        ("dependence and power lift", dependence_lift, None, false),
        ("square approximations", square_approximation, None, false),
    ];
    let mut failed = 0;
    for (i, (name, run, limit, one_thread)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = if one_thread { single_threaded(run) } else { run() };
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {:.1} s, limit {} s", elapsed.as_secs_f64(), l.as_secs())),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} ({:.2} s)", i + 1, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} ({:.2} s)", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
