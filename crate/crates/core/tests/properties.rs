use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use coblab::diophantine::{continued_fraction, convergents, periodicity, Irrational};
use coblab::Interval;

fn surd() -> impl Strategy<Value = Irrational> {
    (-20i64..=20, (-6i64..=6).prop_filter("nonzero", |b| *b != 0), 2i64..=60, 1i64..=12)
        .prop_filter_map("not a surd", |(a, b, d, c)| Irrational::new(a, b, d, c).ok())
}

/// `floor(10^digits * ||q x||)` up to an error of 2, by integer square roots.
fn decimal_distance(x: &Irrational, q: i64, digits: u32) -> BigInt {
    let (a, b, d, c) = x.parts();
    let scale = BigInt::from(10).pow(digits);
    let qb = BigInt::from(q) * b;
    let root = (&qb * &qb * d * &scale * &scale).sqrt();
    let signed = if qb.is_negative() { -root } else { root };
    let num = BigInt::from(q) * a * &scale + signed;
    let c = BigInt::from(c);
    let frac = num.mod_floor_ref(&(&c * &scale)) / &c;
    let other = &scale - &frac;
    frac.min(other)
}

trait ModFloor {
    fn mod_floor_ref(&self, m: &BigInt) -> BigInt;
}

impl ModFloor for BigInt {
    fn mod_floor_ref(&self, m: &BigInt) -> BigInt {
        let r = self % m;
        if r.is_negative() {
            r + m
        } else {
            r
        }
    }
}

fn encloses_decimal(iv: &Interval, value: &BigInt, digits: u32, slack: i64) -> bool {
    let scale = BigInt::from(10).pow(digits);
    let unit = BigInt::one() << iv.bits();
    iv.lo_scaled() * &scale <= (value + slack) * &unit && iv.hi_scaled() * &scale >= (value - slack) * &unit
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_matches_decimal_oracle(x in surd(), q in 1i64..1_000_000) {
        let iv = x.dist_multiple(&BigInt::from(q), 256);
        let oracle = decimal_distance(&x, q, 60);
        prop_assert!(encloses_decimal(&iv, &oracle, 60, 3));
        prop_assert!(iv.width_f64() < 1e-60);
    }

    #[test]
    fn fast_distance_within_its_error_bound(x in surd(), k in 1i64..10_000_000) {
        let exact = x.dist_multiple(&BigInt::from(k), 256).mid_f64();
        prop_assert!((x.dist_mul_f64(k) - exact).abs() <= x.fast_error_bound(k));
    }

    #[test]
    fn divisor_modulus_is_twice_sine(x in surd(), n in 1i64..100_000) {
        let m = x.divisor_modulus(n, 256).unwrap();
        let direct = 2.0 * (std::f64::consts::PI * x.dist_mul_f64(n)).sin();
        prop_assert!((m.mid_f64() - direct).abs() <= 1e-9 * direct.max(1e-3));
    }

    #[test]
    fn convergents_alternate_and_approximate(x in surd()) {
        let conv = convergents(&continued_fraction(&x, 18));
        for w in conv.windows(2) {
            let (p0, q0) = &w[0];
            let (p1, q1) = &w[1];
            let det = p1 * q0 - p0 * q1;
            prop_assert_eq!(det.abs(), BigInt::one());
            prop_assert!(q1 > q0 || (q0.is_one() && q1.is_one()));
        }
        for (_, q) in conv.iter().skip(1).filter(|(_, q)| !q.is_zero()) {
            let dist = x.dist_multiple(q, 512);
            let bound = Interval::from_ratio(&BigInt::one(), q, 512);
            prop_assert!(dist.certainly_lt(&bound));
        }
    }

    #[test]
    fn expansion_is_eventually_periodic(x in surd()) {
        let per = periodicity(&x);
        prop_assert!(per.len >= 1);
        let n = per.start + 3 * per.len;
        let quotients = continued_fraction(&x, n);
        for i in per.start..=n {
            let j = per.start + (i - per.start) % per.len;
            prop_assert_eq!(&quotients[i], &BigInt::from(per.quotients[j]));
        }
    }

    #[test]
    fn interval_identities(x in -30.0f64..30.0, y in 0.001f64..1e6) {
        let bits = 192;
        let xi = Interval::from_f64(x, bits);
        let yi = Interval::from_f64(y, bits);
        prop_assert!(xi.exp().ln().unwrap().contains_interval(&xi));
        prop_assert!(yi.sqrt().unwrap().sqr().contains_interval(&yi));
        let (s, c) = xi.div_int(15).sin_cos();
        let one = s.sqr().add(&c.sqr());
        prop_assert!(one.contains_interval(&Interval::one(bits)));
        prop_assert!(one.width_f64() < 1e-40);
        let q = yi.mul(&xi).div(&yi).unwrap();
        prop_assert!(q.contains_interval(&xi));
    }
}

#[test]
fn sqrt_d_expansions_are_palindromic() {
    for d in [2i64, 3, 7, 13, 19, 31, 43, 46, 94] {
        let x = Irrational::new(0, 1, d, 1).unwrap();
        let per = periodicity(&x);
        assert_eq!(per.start, 1, "sqrt({d})");
        let body = &per.quotients[1..per.quotients.len() - 1];
        let rev: Vec<i64> = body.iter().rev().copied().collect();
        assert_eq!(body, rev.as_slice(), "sqrt({d})");
        assert_eq!(*per.quotients.last().unwrap(), 2 * per.quotients[0], "sqrt({d})");
    }
}
