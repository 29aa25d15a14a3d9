//! Partial assignments of local data and the coefficient tables they induce.
//!
//! A coefficient `b_n` is known when every prime power `p^e || n` is determined by
//! the assignment; otherwise only an upper bound for `|b_n|` is available.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{binomial, d4, prime_divisors, primes_up_to};
use crate::error::{Error, Result};
use crate::local::{ap_range, expand_local, good_completions, LocalFactor, LocalSeries};
use crate::scalar::Real;

/// What is known at one prime.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeData {
    /// The whole local factor.
    Factor(LocalFactor),
    /// Only `A_p` at a good prime.
    Coefficient(i64),
}

/// Local data for an initial segment of primes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartialAssignment {
    pub level: u64,
    pub bad_primes: Vec<u64>,
    pub entries: BTreeMap<u64, PrimeData>,
}

impl PartialAssignment {
    pub fn new(level: u64) -> Self {
        PartialAssignment { level, bad_primes: prime_divisors(level), entries: BTreeMap::new() }
    }

    pub fn is_bad(&self, p: u64) -> bool {
        self.bad_primes.contains(&p)
    }

    pub fn get(&self, p: u64) -> Option<&PrimeData> {
        self.entries.get(&p)
    }

    /// Assigns a full local factor, checking it matches the reduction type at `p`.
    pub fn with_factor(&self, factor: LocalFactor) -> Result<Self> {
        let p = factor.prime();
        let ok = match &factor {
            LocalFactor::Good(_) => !self.is_bad(p),
            LocalFactor::Bad(_) => self.is_bad(p),
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("{factor} does not match the level {}", self.level)));
        }
        if let (Some(PrimeData::Coefficient(a)), LocalFactor::Good(g)) = (self.get(p), &factor) {
            if *a != g.a_p {
                return Err(Error::InvalidArgument(format!("{factor} contradicts committed A_p = {a}")));
            }
        }
        let mut next = self.clone();
        next.entries.insert(p, PrimeData::Factor(factor));
        Ok(next)
    }

    /// Commits `A_p` at a good prime.
    pub fn with_coefficient(&self, p: u64, a_p: i64) -> Result<Self> {
        if self.is_bad(p) {
            return Err(Error::InvalidArgument(format!("{p} divides the level")));
        }
        if !ap_range(p)?.contains(&a_p) {
            return Err(Error::InvalidArgument(format!("A_{p} = {a_p} is not admissible")));
        }
        let mut next = self.clone();
        next.entries.insert(p, PrimeData::Coefficient(a_p));
        Ok(next)
    }

    /// True when the assigned primes are exactly the primes up to the largest one.
    pub fn is_initial_segment(&self) -> bool {
        match self.entries.keys().next_back() {
            None => true,
            Some(&top) => primes_up_to(top).iter().all(|p| self.entries.contains_key(p)),
        }
    }
}

/// `b_n`, and `A_n = b_n sqrt(n)` exactly when known.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientValue<T> {
    pub index: u64,
    pub analytic_value: T,
    pub arithmetic_value: Option<i128>,
}

/// What is known about `b_{p^e}` for one prime power.
#[derive(Clone, Debug)]
enum PowerInfo<T> {
    Known { value: T, numerator: i128, abs: f64 },
    Bounded(f64),
}

/// Upward rounding for bounds computed in double precision.
const INFLATE: f64 = 1.0 + 1e-12;

fn series_abs(s: &LocalSeries, k: usize) -> f64 {
    (s.numerators[k] as f64).abs() / (s.p as f64).powf(k as f64 / 2.0) * INFLATE
}

/// Data for the powers `p^1, ..., p^E` with `p^E <= m`.
fn power_info<T: Real>(pa: &PartialAssignment, p: u64, m: u64) -> Result<Vec<PowerInfo<T>>> {
    let mut e_max = 0usize;
    let mut pk = p;
    while pk <= m {
        e_max += 1;
        pk = match pk.checked_mul(p) {
            Some(v) => v,
            None => break,
        };
    }
    let unknown = |e: usize| PowerInfo::Bounded(binomial(e as u64 + 3, 3) as f64);
    Ok(match pa.get(p) {
        None => (1..=e_max).map(unknown).collect(),
        Some(PrimeData::Factor(f)) => {
            let s = expand_local(f, e_max)?;
            (1..=e_max)
                .map(|e| PowerInfo::Known { value: s.value(e), numerator: s.numerators[e], abs: series_abs(&s, e) })
                .collect()
        }
        Some(PrimeData::Coefficient(a)) => {
            let completions = good_completions(p, *a)?;
            let series =
                completions.iter().map(|g| expand_local(&LocalFactor::Good(*g), e_max)).collect::<Result<Vec<_>>>()?;
            (1..=e_max)
                .map(|e| {
                    if e == 1 {
                        let s = &series[0];
                        PowerInfo::Known { value: s.value(1), numerator: s.numerators[1], abs: series_abs(s, 1) }
                    } else {
                        PowerInfo::Bounded(series.iter().map(|s| series_abs(s, e)).fold(0.0, f64::max))
                    }
                })
                .collect()
        }
    })
}

/// Values and bounds of `b_1, ..., b_M` under a partial assignment.
#[derive(Clone, Debug)]
pub struct CoefficientTable<T> {
    /// `values[n - 1] = Some(b_n)` when known.
    pub values: Vec<Option<T>>,
    pub numerators: Vec<Option<i128>>,
    /// Upper bound for `|b_n|`, exact (rounded up) when known.
    pub bounds: Vec<f64>,
}

impl<T: Real> CoefficientTable<T> {
    pub fn new(pa: &PartialAssignment, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let mut values: Vec<Option<T>> = vec![None; m];
        let mut numerators: Vec<Option<i128>> = vec![None; m];
        let mut bounds = vec![0.0; m];
        values[0] = Some(T::one());
        numerators[0] = Some(1);
        bounds[0] = 1.0;
        // Smallest prime factor sieve.
        let mut spf = vec![0u32; m + 1];
        for p in primes_up_to(m as u64) {
            let p = p as usize;
            let mut j = p;
            while j <= m {
                if spf[j] == 0 {
                    spf[j] = p as u32;
                }
                j += p;
            }
        }
        let mut info: BTreeMap<u64, Vec<PowerInfo<T>>> = BTreeMap::new();
        for p in primes_up_to(m as u64) {
            info.insert(p, power_info(pa, p, m as u64)?);
        }
        for n in 2..=m {
            let p = spf[n] as usize;
            let mut rest = n;
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            let pe = &info[&(p as u64)][e - 1];
            match pe {
                PowerInfo::Known { value, numerator, abs } => {
                    bounds[n - 1] = abs * bounds[rest - 1] * INFLATE;
                    if let Some(v) = &values[rest - 1] {
                        values[n - 1] = Some(value.clone() * v);
                        numerators[n - 1] = numerators[rest - 1].and_then(|r| r.checked_mul(*numerator));
                    }
                }
                PowerInfo::Bounded(b) => bounds[n - 1] = b * bounds[rest - 1] * INFLATE,
            }
        }
        Ok(CoefficientTable { values, numerators, bounds })
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn is_known(&self, n: usize) -> bool {
        self.values[n - 1].is_some()
    }
}

/// Upper bound for `|b_n|` over every completion of `pa`: the product over
/// `p^e || n` of `|b_{p^e}|` when determined, `d4(p^e)` when `p` is unassigned,
/// and the largest value compatible with `A_p` when only `A_p` is committed.
/// Computed in double precision and rounded upward.
pub fn coefficient_bound(n: u64, pa: &PartialAssignment) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut acc = 1.0;
    for (p, e) in crate::arith::factorize(n) {
        let info = power_info::<f64>(pa, p, p.pow(e))?;
        acc *= match &info[e as usize - 1] {
            PowerInfo::Known { abs, .. } => *abs,
            PowerInfo::Bounded(b) => *b,
        } * INFLATE;
    }
    Ok(acc)
}

/// `b_1, ..., b_M`, with `None` for indices not determined by `pa`.
pub fn expand_multiplicative<T: Real>(pa: &PartialAssignment, m: usize) -> Result<Vec<Option<CoefficientValue<T>>>> {
    let t = CoefficientTable::<T>::new(pa, m)?;
    Ok(t.values
        .into_iter()
        .zip(t.numerators)
        .enumerate()
        .map(|(k, (v, a))| {
            v.map(|value| CoefficientValue { index: k as u64 + 1, analytic_value: value, arithmetic_value: a })
        })
        .collect())
}

/// `d4(n)` as the bound for an empty assignment.
pub fn trivial_bound(n: u64) -> f64 {
    d4(n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::GoodLocalFactor;

    fn pa_with(level: u64, fs: &[(u64, i64, i64)]) -> PartialAssignment {
        let mut pa = PartialAssignment::new(level);
        for &(p, a, a2) in fs {
            pa = pa.with_factor(GoodLocalFactor::new(p, a, a2).unwrap().into()).unwrap();
        }
        pa
    }

    #[test]
    fn bound_examples() {
        let pa = PartialAssignment::new(211);
        assert!((coefficient_bound(7, &pa).unwrap() - 4.0).abs() < 1e-9);
        assert!((coefficient_bound(1, &pa).unwrap() - 1.0).abs() < 1e-12);
        let pa = pa_with(211, &[(2, 2, 2)]);
        assert!((coefficient_bound(12, &pa).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn expansion_examples() {
        let pa = PartialAssignment::new(211);
        let v = expand_multiplicative::<f64>(&pa, 10).unwrap();
        assert_eq!(v[0].as_ref().unwrap().analytic_value, 1.0);
        assert!(v[1..].iter().all(|x| x.is_none()));

        let pa = pa_with(211, &[(2, 2, 2), (3, 1, -2)]);
        let v = expand_multiplicative::<f64>(&pa, 12).unwrap();
        let b = |n: usize| v[n - 1].as_ref().unwrap().analytic_value;
        assert!((b(2) - 2f64.sqrt()).abs() < 1e-12);
        assert!((b(4) - 1.0).abs() < 1e-12);
        assert!((b(6) - b(2) * b(3)).abs() < 1e-12);
        assert_eq!(v[11].as_ref().unwrap().arithmetic_value, Some(2 * 1));
        assert!(v[4].is_none());
    }

    #[test]
    fn committed_coefficient_bounds_square() {
        let pa = PartialAssignment::new(211).with_coefficient(5, 8).unwrap();
        let t = CoefficientTable::<f64>::new(&pa, 30).unwrap();
        assert!(t.is_known(5) && !t.is_known(25));
        let best = good_completions(5, 8).unwrap().iter().map(|g| (g.a_p2 as f64 / 5.0).abs()).fold(0.0, f64::max);
        assert!(t.bounds[24] >= best && t.bounds[24] < best * 1.001);
    }

    #[test]
    fn assignment_validation() {
        let pa = PartialAssignment::new(22);
        assert!(pa.with_factor(GoodLocalFactor::new(2, 0, 0).unwrap().into()).is_err());
        assert!(pa.with_coefficient(3, 7).is_err());
        let pa = pa.with_coefficient(3, 2).unwrap();
        assert!(pa.with_factor(GoodLocalFactor::new(3, 1, 0).unwrap().into()).is_err());
        assert!(!pa.is_initial_segment());
    }
}
