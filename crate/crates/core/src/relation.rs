//! Homogeneous linear relations on the coefficients `b_n`.

use std::collections::BTreeSet;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::afe::{tail_bound, WeightVector};
use crate::arith::d4_table;
use crate::assignment::{CoefficientTable, PartialAssignment};
use crate::error::{Error, Result};
use crate::linalg::{constrained_min, qr_r_factor};
use crate::scalar::{ComplexExt, Real};
use crate::types::Sign;

/// `sum_{n <= M} u_n b_n + constant`, known to be at most `tail` in absolute value
/// for every admissible coefficient sequence. `tail` covers both the indices
/// beyond `M` and the certified error of the computed `u_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRelation<T> {
    /// `weights[n - 1] = u_n`.
    pub weights: Vec<T>,
    pub constant: T,
    pub tail: f64,
    pub provenance: String,
}

/// Center and radius of a real interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub center: f64,
    pub radius: f64,
}

impl Interval {
    pub fn new(center: f64, radius: f64) -> Self {
        assert!(radius >= 0.0, "interval radius must be nonnegative");
        Interval { center, radius }
    }

    pub fn contains_zero(&self) -> bool {
        self.center.abs() <= self.radius
    }
}

impl<T: Real> LinearRelation<T> {
    pub fn horizon(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, n: usize) -> &T {
        &self.weights[n - 1]
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().map(|u| u.to_f64_lossy().abs()).fold(0.0, f64::max)
    }

    /// `a R1 + b R2` with tail `|a| tail1 + |b| tail2`.
    pub fn combine(&self, a: &T, other: &LinearRelation<T>, b: &T) -> LinearRelation<T> {
        assert_eq!(self.horizon(), other.horizon(), "relations must share a horizon");
        let weights = self.weights.iter().zip(&other.weights).map(|(x, y)| x.clone() * a + y.clone() * b).collect();
        LinearRelation {
            weights,
            constant: self.constant.clone() * a + other.constant.clone() * b,
            tail: a.to_f64_lossy().abs() * self.tail + b.to_f64_lossy().abs() * other.tail,
            provenance: format!("({}) * [{}] + ({}) * [{}]", a, self.provenance, b, other.provenance),
        }
    }

    pub fn scaled(&self, k: &T) -> LinearRelation<T> {
        LinearRelation {
            weights: self.weights.iter().map(|u| u.clone() * k).collect(),
            constant: self.constant.clone() * k,
            tail: self.tail * k.to_f64_lossy().abs(),
            provenance: self.provenance.clone(),
        }
    }

    /// `sum_{n <= M} u_n b_n + constant` for fully known coefficients `b[n - 1]`.
    pub fn residual(&self, b: &[T]) -> T {
        let mut acc = self.constant.clone();
        for (u, bn) in self.weights.iter().zip(b) {
            acc += u.clone() * bn;
        }
        acc
    }
}

/// JSON form with full-precision decimal strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationRecord {
    pub weights: Vec<String>,
    pub constant: String,
    pub tail: f64,
    pub provenance: String,
}

impl<T: Real> From<&LinearRelation<T>> for RelationRecord {
    fn from(r: &LinearRelation<T>) -> Self {
        RelationRecord {
            weights: r.weights.iter().map(|u| u.to_decimal_string()).collect(),
            constant: r.constant.to_decimal_string(),
            tail: r.tail,
            provenance: r.provenance.clone(),
        }
    }
}

impl RelationRecord {
    pub fn into_relation<T: Real>(self) -> Result<LinearRelation<T>> {
        let parse = |s: &str| T::parse_decimal(s).ok_or_else(|| Error::InvalidArgument(format!("bad decimal {s:?}")));
        Ok(LinearRelation {
            weights: self.weights.iter().map(|s| parse(s)).collect::<Result<_>>()?,
            constant: parse(&self.constant)?,
            tail: self.tail,
            provenance: self.provenance,
        })
    }
}

/// `w_n / g(s)` together with the matching error terms.
struct Normalized<T: Real> {
    v: Vec<Complex<T>>,
    /// Bound on `sum_{n > M} d4(n) |v_n| + sum_{n <= M} d4(n) err(v_n)`.
    tail: f64,
    err: Vec<f64>,
}

fn normalized<T: Real>(wv: &WeightVector<T>) -> Result<Normalized<T>> {
    let largest = wv.weights.iter().map(|w| w.to_c64().norm()).fold(0.0, f64::max);
    if wv.accuracy > 1e-3 * largest {
        return Err(Error::InaccurateWeights { accuracy: wv.accuracy, largest });
    }
    let gs = wv.g_at_s();
    let inv = Complex::new(T::one(), T::zero()).div_ref(&gs);
    let inv_abs = inv.to_c64().norm();
    let m = wv.horizon();
    let d4 = d4_table(m);
    let err: Vec<f64> = wv.errors.iter().map(|e| e * inv_abs).collect();
    let acc: f64 = (1..=m).map(|n| d4[n] as f64 * err[n - 1]).sum();
    Ok(Normalized {
        v: wv.weights.iter().map(|w| w.mul_ref(&inv)).collect(),
        tail: tail_bound(m, wv)? * inv_abs + acc,
        err,
    })
}

fn describe<T: Real>(wv: &WeightVector<T>) -> String {
    format!("s={}{:+}i g=({})", wv.s_point.re, wv.s_point.im, wv.test)
}

/// Builds a relation from one real part when it is distinguishable from noise.
fn part_relation<T: Real>(values: Vec<T>, err: &[f64], tail: f64, provenance: String) -> Option<LinearRelation<T>> {
    let noise = err.iter().cloned().fold(0.0, f64::max);
    let largest = values.iter().map(|u| u.to_f64_lossy().abs()).fold(0.0, f64::max);
    if !(largest > 10.0 * noise) || largest == 0.0 {
        return None;
    }
    Some(LinearRelation { weights: values, constant: T::zero(), tail, provenance })
}

/// Real and imaginary parts of `w_n(s, g1)/g1(s) - w_n(s', g2)/g2(s')`.
///
/// Both quotients equal `Lambda(s)` times `b_n`-sums, so their difference
/// annihilates every admissible coefficient sequence.
pub fn build_difference_relation<T: Real>(
    w1: &WeightVector<T>,
    w2: &WeightVector<T>,
) -> Result<Vec<LinearRelation<T>>> {
    if w1.horizon() != w2.horizon() {
        return Err(Error::HorizonMismatch { relation: w1.horizon(), assignment: w2.horizon() });
    }
    if w1.s_point != w2.s_point {
        return Err(Error::InvalidArgument("difference relations need a common point s".into()));
    }
    let a = normalized(w1)?;
    let b = normalized(w2)?;
    let err: Vec<f64> = a.err.iter().zip(&b.err).map(|(x, y)| x + y).collect();
    let tail = a.tail + b.tail;
    let (re, im): (Vec<T>, Vec<T>) =
        a.v.into_iter()
            .zip(b.v)
            .map(|(x, y)| {
                let d = x - y;
                (d.re, d.im)
            })
            .unzip();
    let tag = format!("{} - {}", describe(w1), describe(w2));
    Ok([(re, "Re"), (im, "Im")]
        .into_iter()
        .filter_map(|(vals, part)| part_relation(vals, &err, tail, format!("{part}[{tag}]")))
        .collect())
}

/// `Im` (for sign +1) or `Re` (for sign -1) of `sum_n w_n b_n / g(s)` on the
/// critical line, where `Lambda` is real, respectively purely imaginary.
pub fn build_phase_relation<T: Real>(wv: &WeightVector<T>) -> Result<Option<LinearRelation<T>>> {
    if wv.s_point.re != 0.5 {
        return Err(Error::InvalidArgument("phase relations need Re s = 1/2".into()));
    }
    let a = normalized(wv)?;
    let (vals, part): (Vec<T>, &str) = match wv.fe.sign {
        Sign::Plus => (a.v.into_iter().map(|x| x.im).collect(), "Im"),
        Sign::Minus => (a.v.into_iter().map(|x| x.re).collect(), "Re"),
    };
    Ok(part_relation(vals, &a.err, a.tail, format!("{part}[{}]", describe(wv))))
}

/// Result of [`optimize_relation`], with the objective actually attained.
#[derive(Clone, Debug)]
pub struct Optimized<T> {
    pub relation: LinearRelation<T>,
    pub lambda: Vec<T>,
    /// `sum_{n in suppress} (d4(n) u_n)^2 + sum_k (lambda_k tail_k)^2`.
    pub objective: f64,
}

/// Linear combination of `basis` minimizing the `d4`-weighted size of the
/// weights on `suppress` plus the tails, normalized so that the largest keep
/// weight has absolute value one.
pub fn optimize_relation<T: Real>(
    basis: &[LinearRelation<T>],
    keep: &BTreeSet<usize>,
    suppress: &BTreeSet<usize>,
) -> Result<Optimized<T>> {
    optimize_relation_with(basis, keep, suppress, |n| crate::arith::d4(n as u64) as f64)
}

/// As [`optimize_relation`], with a custom penalty scale for suppressed indices.
pub fn optimize_relation_with<T: Real>(
    basis: &[LinearRelation<T>],
    keep: &BTreeSet<usize>,
    suppress: &BTreeSet<usize>,
    scale: impl Fn(usize) -> f64,
) -> Result<Optimized<T>> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("empty relation basis".into()));
    }
    if keep.intersection(suppress).next().is_some() {
        return Err(Error::InvalidArgument("keep and suppress overlap".into()));
    }
    let m = basis[0].horizon();
    if basis.iter().any(|r| r.horizon() != m) || keep.iter().chain(suppress).any(|&n| n == 0 || n > m) {
        return Err(Error::InvalidArgument("indices outside the relation horizon".into()));
    }
    // Normalize every basis element to unit max-weight first.
    let unit: Vec<LinearRelation<T>> = basis
        .iter()
        .map(|r| {
            let mx = r.weights.iter().map(|u| u.abs()).fold(T::zero(), |a, b| a.max_of(b));
            if mx.is_zero() {
                r.clone()
            } else {
                r.scaled(&(T::one() / mx))
            }
        })
        .collect();
    let k = unit.len();

    let finish = |lambda: Vec<T>| -> Option<Optimized<T>> {
        let mut weights = vec![T::zero(); m];
        let mut constant = T::zero();
        let mut tail = 0.0;
        for (l, r) in lambda.iter().zip(&unit) {
            for (w, u) in weights.iter_mut().zip(&r.weights) {
                *w += l.clone() * u;
            }
            constant += l.clone() * &r.constant;
            tail += l.to_f64_lossy().abs() * r.tail;
        }
        let top = keep.iter().map(|&n| weights[n - 1].abs()).fold(T::zero(), |a, b| a.max_of(b));
        if top.is_zero() || top.to_f64_lossy() == 0.0 {
            return None;
        }
        let inv = T::one() / &top;
        let lambda: Vec<T> = lambda.into_iter().map(|l| l * &inv).collect();
        let weights: Vec<T> = weights.into_iter().map(|w| w * &inv).collect();
        let tail = tail / top.to_f64_lossy();
        // Roundoff of the combination itself.
        let lsum: f64 = lambda.iter().map(|l| l.to_f64_lossy().abs()).sum();
        let tail = tail + lsum * T::epsilon().to_f64_lossy() * 4.0 * m as f64;
        let objective = suppress.iter().map(|&n| (scale(n) * weights[n - 1].to_f64_lossy()).powi(2)).sum::<f64>()
            + lambda.iter().zip(&unit).map(|(l, r)| (l.to_f64_lossy() * r.tail).powi(2)).sum::<f64>();
        let provenance = format!(
            "optimized combination of {} relations: {}",
            k,
            unit.iter().map(|r| r.provenance.as_str()).collect::<Vec<_>>().join("; ")
        );
        Some(Optimized {
            relation: LinearRelation { weights, constant: constant * &inv, tail, provenance },
            lambda,
            objective,
        })
    };

    if suppress.is_empty() {
        let best = unit
            .iter()
            .enumerate()
            .filter(|(_, r)| keep.iter().any(|&n| !r.weights[n - 1].is_zero()))
            .min_by(|a, b| a.1.tail.total_cmp(&b.1.tail))
            .map(|(i, _)| i)
            .ok_or(Error::InfeasibleNormalization)?;
        let mut lambda = vec![T::zero(); k];
        lambda[best] = T::one();
        return finish(lambda).ok_or(Error::InfeasibleNormalization);
    }

    let mut rows: Vec<Vec<T>> = suppress
        .iter()
        .map(|&n| {
            let s = T::from_f64(scale(n)).expect("finite scale");
            unit.iter().map(|r| r.weights[n - 1].clone() * &s).collect()
        })
        .collect();
    for (j, r) in unit.iter().enumerate() {
        let mut row = vec![T::zero(); k];
        row[j] = T::from_f64(r.tail.max(1e-300)).expect("finite tail");
        rows.push(row);
    }
    let rf = qr_r_factor(rows);

    let mut best: Option<Optimized<T>> = None;
    for &n in keep.iter().take(8) {
        let c: Vec<T> = unit.iter().map(|r| r.weights[n - 1].clone()).collect();
        let Some((lambda, _)) = constrained_min(&rf, &c) else { continue };
        if let Some(cand) = finish(lambda) {
            if best.as_ref().map_or(true, |b| cand.objective < b.objective) {
                best = Some(cand);
            }
        }
    }
    best.ok_or(Error::InfeasibleNormalization)
}

/// Interval containing `sum_n u_n b_n + constant` for every completion of `pa`.
pub fn evaluate_relation<T: Real>(rel: &LinearRelation<T>, pa: &PartialAssignment) -> Result<Interval> {
    let table = CoefficientTable::<T>::new(pa, rel.horizon())?;
    evaluate_with_table(rel, &table)
}

/// As [`evaluate_relation`], reusing a precomputed coefficient table.
pub fn evaluate_with_table<T: Real>(rel: &LinearRelation<T>, table: &CoefficientTable<T>) -> Result<Interval> {
    if table.horizon() != rel.horizon() {
        return Err(Error::HorizonMismatch { relation: rel.horizon(), assignment: table.horizon() });
    }
    let mut center = rel.constant.clone();
    let mut radius = rel.tail;
    let mut mass = 0.0;
    for ((u, b), bound) in rel.weights.iter().zip(&table.values).zip(&table.bounds) {
        let au = u.to_f64_lossy().abs();
        match b {
            Some(b) => {
                center += u.clone() * b;
                mass += au * bound;
            }
            None => radius += au * bound,
        }
    }
    // Roundoff of the summation and of the final conversion.
    let c = center.to_f64_lossy();
    radius += (mass * T::epsilon().to_f64_lossy() * 4.0 * rel.horizon() as f64 + c.abs() * f64::EPSILON) * 1.01;
    Ok(Interval::new(c, radius * (1.0 + 1e-12)))
}
