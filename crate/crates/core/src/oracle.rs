//! Known degree-4 L-functions built as products of two elliptic-curve L-functions.
//!
//! Curve coefficients come from naive point counting; conductors and root numbers
//! are supplied with the curve and trusted.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, is_prime, prime_divisors, primes_up_to};
use crate::assignment::PartialAssignment;
use crate::error::{Error, Result};
use crate::local::{BadLocalFactor, GoodLocalFactor, LocalFactor};
use crate::relation::LinearRelation;
use crate::scalar::Real;
use crate::types::{FunctionalEquationParams, Sign};

/// Largest prime accepted by the brute-force point count.
pub const MAX_COUNT_PRIME: u64 = 10_000;

/// Allowed distance between `b_n sqrt(n)` and the nearest integer.
pub const ROUNDING_TOLERANCE: f64 = 1e-20;

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EllipticCurveData {
    pub label: String,
    /// `[a1, a2, a3, a4, a6]`.
    pub a: [i64; 5],
    pub conductor: u64,
    pub root_number: Sign,
}

/// Standard data for the curves used in validation (minimal models, Cremona labels).
const BUILTIN: &[(&str, [i64; 5], u64, i64)] = &[
    ("11a1", [0, -1, 1, -10, -20], 11, 1),
    ("14a1", [1, 0, 1, 4, -6], 14, 1),
    ("15a1", [1, 1, 1, -10, -10], 15, 1),
    ("17a1", [1, -1, 1, -1, -14], 17, 1),
    ("19a1", [0, 1, 1, -9, -15], 19, 1),
    ("21a1", [1, 0, 0, -4, -1], 21, 1),
    ("37a1", [0, 0, 1, -1, 0], 37, -1),
];

pub fn builtin_curves() -> Vec<EllipticCurveData> {
    BUILTIN
        .iter()
        .map(|&(label, a, conductor, w)| EllipticCurveData {
            label: label.to_string(),
            a,
            conductor,
            root_number: Sign::from_int(w).expect("builtin root number"),
        })
        .collect()
}

pub fn curve_by_label(label: &str) -> Result<EllipticCurveData> {
    builtin_curves().into_iter().find(|c| c.label == label).ok_or_else(|| Error::UnknownCurve(label.to_string()))
}

impl EllipticCurveData {
    pub fn new(label: &str, a: [i64; 5], conductor: u64, root_number: Sign) -> Result<Self> {
        let c = EllipticCurveData { label: label.to_string(), a, conductor, root_number };
        if c.discriminant() == 0 {
            return Err(Error::InvalidArgument(format!("curve {label} is singular")));
        }
        if conductor == 0 {
            return Err(Error::InvalidArgument("conductor must be positive".into()));
        }
        Ok(c)
    }

    fn b_invariants(&self) -> (i128, i128, i128, i128) {
        let [a1, a2, a3, a4, a6] = self.a.map(|x| x as i128);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        (b2, b4, b6, b8)
    }

    pub fn discriminant(&self) -> i128 {
        let (b2, b4, b6, b8) = self.b_invariants();
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    pub fn is_bad(&self, p: u64) -> bool {
        self.conductor % p == 0
    }
}

/// `a_p = p + 1 - #E(F_p)`, counting affine solutions column by column.
pub fn ec_point_count_ap(curve: &EllipticCurveData, p: u64) -> Result<i64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p > MAX_COUNT_PRIME {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds the point-count limit {MAX_COUNT_PRIME}")));
    }
    let m = p as i64;
    let [a1, a2, a3, a4, a6] = curve.a.map(|x| x.rem_euclid(m));
    let affine: u64 = (0..m)
        .into_par_iter()
        .map(|x| {
            let rhs = (((x + a2) * x % m + a4) * x % m + a6) % m;
            let lin = (a1 * x + a3) % m;
            (0..m).filter(|&y| (y * y + lin * y - rhs).rem_euclid(m) == 0).count() as u64
        })
        .sum();
    Ok(p as i64 - affine as i64)
}

/// Legendre symbol by Euler's criterion.
fn legendre(a: i64, p: i64) -> i64 {
    let (mut base, mut e, m) = (a.rem_euclid(p) as u128, (p - 1) / 2, p as u128);
    if base == 0 {
        return 0;
    }
    let mut acc = 1u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

/// `a_p = -sum_x chi(4x^3 + b2 x^2 + 2 b4 x + b6)` for `p > 2`.
pub fn character_sum_ap(curve: &EllipticCurveData, p: u64) -> i64 {
    assert!(p > 2 && is_prime(p), "character sums need an odd prime");
    let (b2, b4, b6, _) = curve.b_invariants();
    let m = p as i128;
    let (b2, b4, b6) = (b2.rem_euclid(m), b4.rem_euclid(m), b6.rem_euclid(m));
    -(0..m).map(|x| legendre((((4 * x + b2) * x + 2 * b4) * x + b6).rem_euclid(m) as i64, p as i64)).sum::<i64>()
}

/// `A_1, ..., A_M` of `L(s, E)` in the arithmetic normalization.
pub fn ec_coefficients(curve: &EllipticCurveData, m: usize) -> Result<Vec<i128>> {
    if m as u64 > MAX_COUNT_PRIME {
        return Err(Error::InvalidArgument(format!("M = {m} exceeds {MAX_COUNT_PRIME}")));
    }
    let mut a = vec![0i128; m + 1];
    if m >= 1 {
        a[1] = 1;
    }
    let mut at_powers: BTreeMap<u64, Vec<i128>> = BTreeMap::new();
    for p in primes_up_to(m as u64) {
        let ap = ec_point_count_ap(curve, p)? as i128;
        let mut seq = vec![1i128, ap];
        let mut pk = p * p;
        while pk as usize <= m {
            let k = seq.len();
            let next = if curve.is_bad(p) { ap * seq[k - 1] } else { ap * seq[k - 1] - p as i128 * seq[k - 2] };
            seq.push(next);
            pk *= p;
        }
        at_powers.insert(p, seq);
    }
    for (n, slot) in a.iter_mut().enumerate().skip(2) {
        *slot = factorize(n as u64).iter().map(|(p, e)| at_powers[p][*e as usize]).product();
    }
    a.remove(0);
    Ok(a)
}

/// `L(s, E1) L(s, E2)` with its coefficients and local factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleLFunction {
    pub curves: (String, String),
    pub level: u64,
    pub sign: Sign,
    /// `A_1, ..., A_M`.
    pub coefficients: Vec<i128>,
    /// Local factor at every prime up to `M`.
    pub factors: BTreeMap<u64, LocalFactor>,
}

impl OracleLFunction {
    pub fn horizon(&self) -> usize {
        self.coefficients.len()
    }

    pub fn fe<T: Real>(&self) -> Result<FunctionalEquationParams<T>> {
        FunctionalEquationParams::new(self.level, self.sign)
    }

    /// `b_n = A_n / sqrt(n)`.
    pub fn analytic<T: Real>(&self) -> Vec<T> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, &a)| T::from_i128(a).expect("coefficient fits") / T::int(k as i64 + 1).sqrt())
            .collect()
    }

    /// The assignment fixing the true local factor at each listed prime.
    pub fn assignment(&self, primes: &[u64]) -> Result<PartialAssignment> {
        let mut pa = PartialAssignment::new(self.level);
        for p in primes {
            let f = self.factors.get(p).ok_or_else(|| Error::InvalidArgument(format!("no factor at {p}")))?;
            pa = pa.with_factor(f.clone())?;
        }
        Ok(pa)
    }

    pub fn a_p(&self, p: u64) -> i64 {
        self.coefficients[p as usize - 1] as i64
    }

    pub fn a_p2(&self, p: u64) -> i64 {
        self.coefficients[(p * p) as usize - 1] as i64
    }
}

fn trim(mut g: Vec<i64>) -> Vec<i64> {
    while g.last() == Some(&0) {
        g.pop();
    }
    g
}

/// Local polynomial `1 - a w (+ p w^2)` of one curve at `p`, as `[1, g_1, g_2]`.
fn curve_local(curve: &EllipticCurveData, p: u64, ap: i64) -> Vec<i64> {
    if curve.is_bad(p) {
        vec![1, -ap, 0]
    } else {
        vec![1, -ap, p as i64]
    }
}

/// Product of two elliptic-curve L-functions up to `M` coefficients.
pub fn product_l<T: Real>(c1: &EllipticCurveData, c2: &EllipticCurveData, m: usize) -> Result<OracleLFunction> {
    if m < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let e1 = ec_coefficients(c1, m)?;
    let e2 = ec_coefficients(c2, m)?;
    let to_b = |a: &[i128]| -> Vec<T> {
        a.iter().enumerate().map(|(k, &x)| T::from_i128(x).expect("fits") / T::int(k as i64 + 1).sqrt()).collect()
    };
    let (b1, b2) = (to_b(&e1), to_b(&e2));
    let mut coefficients = vec![0i128; m];
    let mut worst = 0.0f64;
    for n in 1..=m {
        let mut acc = T::zero();
        for d in (1..=n).filter(|d| n % d == 0) {
            acc += b1[d - 1].clone() * &b2[n / d - 1];
        }
        let scaled = acc * T::int(n as i64).sqrt();
        let nearest = scaled.to_f64_lossy().round() as i128;
        worst = worst.max((scaled - T::from_i128(nearest).expect("fits")).abs().to_f64_lossy());
        coefficients[n - 1] = nearest;
    }
    if worst > ROUNDING_TOLERANCE {
        return Err(Error::RoundingResidual(worst));
    }
    let level = c1.conductor * c2.conductor;
    let bad = prime_divisors(level);
    let mut factors = BTreeMap::new();
    for p in primes_up_to(m as u64) {
        let (a, a2) = (e1[p as usize - 1] as i64, e2[p as usize - 1] as i64);
        let f: LocalFactor = if bad.contains(&p) {
            let (u, v) = (curve_local(c1, p, a), curve_local(c2, p, a2));
            let mut g = vec![0i64; 5];
            for (i, x) in u.iter().enumerate() {
                for (j, y) in v.iter().enumerate() {
                    g[i + j] += x * y;
                }
            }
            BadLocalFactor { p, g: trim(g[1..].to_vec()) }.into()
        } else {
            GoodLocalFactor::new(p, a + a2, a * a + a * a2 + a2 * a2 - 2 * p as i64)?.into()
        };
        factors.insert(p, f);
    }
    Ok(OracleLFunction {
        curves: (c1.label.clone(), c2.label.clone()),
        level,
        sign: c1.root_number * c2.root_number,
        coefficients,
        factors,
    })
}

/// `max_k |sum_n u_n b_n + constant| / tail_k` over the relations, for the given `b`.
pub fn residual_report<T: Real>(b: &[T], rels: &[LinearRelation<T>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in rels {
        if b.len() < r.horizon() {
            return Err(Error::HorizonMismatch { relation: r.horizon(), assignment: b.len() });
        }
        let res = r.residual(&b[..r.horizon()]).to_f64_lossy().abs();
        worst = worst.max(if r.tail > 0.0 {
            res / r.tail
        } else if res == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(worst)
}

/// Largest normalized residual of the oracle's coefficients over `rels`.
pub fn consistency_report<T: Real>(l: &OracleLFunction, rels: &[LinearRelation<T>]) -> Result<f64> {
    residual_report(&l.analytic::<T>(), rels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::expand_local;
    use crate::scalar::MpFloat;

    #[test]
    fn known_traces() {
        let e11 = curve_by_label("11a1").unwrap();
        assert_eq!(ec_point_count_ap(&e11, 2).unwrap(), -2);
        assert_eq!(ec_point_count_ap(&e11, 11).unwrap(), 1);
        assert!(ec_point_count_ap(&e11, 10_007).is_err());
        assert!(ec_point_count_ap(&e11, 9).is_err());
        let a = ec_coefficients(&e11, 10).unwrap();
        assert_eq!(a[..5], [1, -2, -1, 2, 1]);
    }

    #[test]
    fn discriminant_primes_match_conductor() {
        for c in builtin_curves() {
            let mut d = c.discriminant().unsigned_abs();
            let mut ps = Vec::new();
            for p in primes_up_to(100) {
                if d % p as u128 == 0 {
                    ps.push(p);
                    while d % p as u128 == 0 {
                        d /= p as u128;
                    }
                }
            }
            assert_eq!(d, 1, "{}", c.label);
            assert_eq!(ps, prime_divisors(c.conductor), "{}", c.label);
        }
    }

    #[test]
    fn point_count_matches_character_sum() {
        for c in builtin_curves() {
            for p in primes_up_to(200).into_iter().filter(|&p| p > 3) {
                let ap = ec_point_count_ap(&c, p).unwrap();
                assert_eq!(ap, character_sum_ap(&c, p), "{} at {p}", c.label);
                if !c.is_bad(p) {
                    assert!((ap * ap) as u64 <= 4 * p);
                }
            }
        }
    }

    #[test]
    fn product_factors_reproduce_coefficients() {
        let l = product_l::<MpFloat>(&curve_by_label("11a1").unwrap(), &curve_by_label("19a1").unwrap(), 200).unwrap();
        assert_eq!((l.level, l.sign), (209, Sign::Plus));
        assert_eq!(l.coefficients[0], 1);
        for (&p, f) in &l.factors {
            let mut k = 0;
            let mut pk = 1u64;
            while pk * p <= 200 {
                pk *= p;
                k += 1;
            }
            let s = expand_local(f, k).unwrap();
            let mut pk = 1u64;
            for e in 0..=k {
                assert_eq!(s.numerators[e], l.coefficients[pk as usize - 1], "p = {p}, e = {e}");
                pk *= p;
            }
        }
        assert!(matches!(l.factors[&11], LocalFactor::Bad(_)));
    }
}
