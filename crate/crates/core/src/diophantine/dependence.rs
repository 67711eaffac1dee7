//! Integer relations `m alpha + n beta + p = 0` between two surds.

use num_integer::Integer;
use serde::Serialize;

use super::surd::Irrational;
use crate::error::{Error, Result};

/// An exact relation `m alpha + n beta + p = 0` with `m > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Dependence {
    pub m: i64,
    pub n: i64,
    pub p: i64,
    /// `gcd(|m|, |n|)`.
    pub gcd: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum DependenceOutcome {
    Found(Dependence),
    /// No relation with coefficients bounded by `B`.
    NoneFound { bound: i64 },
    /// The surds live in different quadratic fields, so `1, alpha, beta` are
    /// linearly independent over the rationals.
    Independent { radicands: (i64, i64) },
}

impl DependenceOutcome {
    pub fn found(&self) -> Option<Dependence> {
        match self {
            DependenceOutcome::Found(d) => Some(*d),
            _ => None,
        }
    }
}

/// Exhaustive search over `|m|, |n|, |p| <= B`, returning the relation with
/// the smallest `|m| + |n| + |p|` (ties broken on `(|m|, |n|, |p|)`).
pub fn integer_dependence_search(alpha: &Irrational, beta: &Irrational, bound: i64) -> Result<DependenceOutcome> {
    if bound < 1 {
        return Err(Error::InvalidParameter(format!("bound must be at least 1, got {bound}")));
    }
    let (a1, b1, d1, c1) = alpha.parts();
    let (a2, b2, d2, c2) = beta.parts();
    if d1 != d2 {
        return Ok(DependenceOutcome::Independent { radicands: (d1, d2) });
    }
    let (a1, b1, c1, a2, b2, c2) = (a1 as i128, b1 as i128, c1 as i128, a2 as i128, b2 as i128, c2 as i128);
    let mut best: Option<((i64, i64, i64, i64), Dependence)> = None;
    for m in 1..=bound {
        for n in -bound..=bound {
            // the root parts must cancel: m b1 / c1 + n b2 / c2 = 0
            if m as i128 * b1 * c2 + n as i128 * b2 * c1 != 0 {
                continue;
            }
            // then p = -(m a1 / c1 + n a2 / c2) must be an integer in range
            let num = -(m as i128 * a1 * c2 + n as i128 * a2 * c1);
            let den = c1 * c2;
            if num % den != 0 {
                continue;
            }
            let p = num / den;
            if p.abs() > bound as i128 {
                continue;
            }
            let p = p as i64;
            let key = (m + n.abs() + p.abs(), m, n.abs(), p.abs());
            if best.as_ref().map_or(true, |(k, _)| key < *k) {
                let gcd = m.gcd(&n);
                best = Some((key, Dependence { m, n, p, gcd }));
            }
        }
    }
    Ok(match best {
        Some((_, d)) => DependenceOutcome::Found(d),
        None => DependenceOutcome::NoneFound { bound },
    })
}

/// A common root `gamma` with `T_alpha = T_gamma^alpha_power` and
/// `T_beta = T_gamma^beta_power`.
#[derive(Clone, Debug, Serialize)]
pub struct RotationRoot {
    pub gamma: Irrational,
    pub alpha_power: i64,
    pub beta_power: i64,
    /// Bezout coefficients with `1 = j m + k n` after normalising `n > 0`.
    pub bezout: (i64, i64),
}

/// Writes both rotations as powers of a single rotation.
///
/// With `n > 0` and `1 = j m + k n`, `gamma = (alpha + j p) / n` satisfies
/// `n gamma = alpha + j p` and `m gamma = -(beta + k p)`, so
/// `T_alpha = T_gamma^n` and `T_beta = T_gamma^{-m}`.
pub fn rotation_root(alpha: &Irrational, beta: &Irrational, dep: &Dependence) -> Result<RotationRoot> {
    let (mut m, mut n, mut p) = (dep.m, dep.n, dep.p);
    if n == 0 {
        return Err(Error::Precondition("an irrational beta forces n != 0".into()));
    }
    if n < 0 {
        (m, n, p) = (-m, -n, -p);
    }
    let e = m.extended_gcd(&n);
    if e.gcd.abs() != 1 {
        return Err(Error::Precondition(format!("gcd(|m|, |n|) = {} must be 1", e.gcd.abs())));
    }
    let (j, k) = if e.gcd == 1 { (e.x, e.y) } else { (-e.x, -e.y) };
    let jp = j.checked_mul(p).ok_or(Error::Overflow)?;
    let gamma = alpha.add_int(jp)?.div_int(n)?;
    // cross-check the second representation exactly
    let kp = k.checked_mul(p).ok_or(Error::Overflow)?;
    let other = beta.add_int(kp)?.div_int(-m)?;
    if other != gamma {
        return Err(Error::Precondition(format!("{m} alpha + {n} beta + {p} is not zero")));
    }
    Ok(RotationRoot {
        gamma,
        alpha_power: n,
        beta_power: -m,
        bezout: (j, k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surd(s: &str) -> Irrational {
        s.parse().unwrap()
    }

    #[test]
    fn constructed_relation() {
        let a = surd("sqrt(2)-1");
        let b = a.mul_int(2).unwrap().add_int(1).unwrap().div_int(3).unwrap();
        let d = integer_dependence_search(&a, &b, 5).unwrap().found().unwrap();
        assert_eq!((d.m, d.n, d.p), (2, -3, 1));
        assert_eq!(d.gcd, 1);
    }

    #[test]
    fn shifted_root() {
        let d = integer_dependence_search(&surd("sqrt(2)"), &surd("sqrt(2)+1"), 3).unwrap();
        let d = d.found().unwrap();
        assert_eq!((d.m, d.n, d.p), (1, -1, 1));
    }

    #[test]
    fn different_fields() {
        let out = integer_dependence_search(&surd("sqrt(2)-1"), &surd("sqrt(3)-1"), 50).unwrap();
        assert_eq!(out, DependenceOutcome::Independent { radicands: (2, 3) });
    }

    #[test]
    fn bound_too_small() {
        let a = surd("sqrt(5)");
        let b = surd("(1+sqrt(5))/7");
        // 7 b - a - 1 = 0 needs |m| = 7 on beta; with m on alpha: a - 7 b + 1 = 0
        assert_eq!(integer_dependence_search(&a, &b, 6).unwrap(), DependenceOutcome::NoneFound { bound: 6 });
        let d = integer_dependence_search(&a, &b, 7).unwrap().found().unwrap();
        assert_eq!((d.m, d.n, d.p), (1, -7, 1));
    }

    #[test]
    fn root_of_constructed_relation() {
        let a = surd("sqrt(2)-1");
        let b = surd("(2*sqrt(2)-1)/3");
        let d = integer_dependence_search(&a, &b, 5).unwrap().found().unwrap();
        let r = rotation_root(&a, &b, &d).unwrap();
        assert_eq!(r.gamma, surd("(-2+sqrt(2))/3"));
        assert_eq!((r.alpha_power, r.beta_power), (3, 2));
        // n gamma - alpha and beta_power gamma - beta are integers
        let x = r.gamma.mul_int(3).unwrap().sub(&a);
        assert!(x.is_err(), "difference is rational, not a surd");
        let g = r.gamma.to_f64();
        assert!(((3.0 * g - a.to_f64()).round() - (3.0 * g - a.to_f64())).abs() < 1e-12);
        assert!(((2.0 * g - b.to_f64()).round() - (2.0 * g - b.to_f64())).abs() < 1e-12);
    }

    #[test]
    fn non_coprime_relation_rejected() {
        let a = surd("sqrt(2)");
        let b = surd("sqrt(2)+1");
        let bad = Dependence { m: 2, n: -2, p: 2, gcd: 2 };
        assert!(matches!(rotation_root(&a, &b, &bad), Err(Error::Precondition(_))));
    }
}
