//! Local Euler factors.
//!
//! At a prime `p` the local factor is `F_p(z) = G_p(z / sqrt(p))` with
//! `G_p(w) in Z[w]`, `G_p(0) = 1`, and `L_p(s) = 1 / F_p(p^{-s})`. The power series
//! `1 / G_p(w) = sum_k A_{p^k} w^k` has integer coefficients, and
//! `b_{p^k} = A_{p^k} / p^{k/2}`.
//!
//! A good factor has degree 4 and all roots of `F_p` on the unit circle:
//! `G_p(w) = 1 - A_p w + (A_p^2 - A_{p^2}) w^2 - p A_p w^3 + p^2 w^4`.
//! A bad factor has degree at most 3.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::arith::{binomial, is_prime, isqrt};
use crate::error::{Error, Result};
use crate::roots::poly_roots;
use crate::scalar::{ComplexExt, MpFloat, Real};

/// Root-modulus tolerance for bad factors.
pub const ROOT_TOLERANCE: f64 = 1e-20;

/// Degree-4 tempered factor at a prime not dividing the level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoodLocalFactor {
    pub p: u64,
    #[serde(rename = "A_p")]
    pub a_p: i64,
    #[serde(rename = "A_p2")]
    pub a_p2: i64,
}

impl GoodLocalFactor {
    pub fn new(p: u64, a_p: i64, a_p2: i64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if !is_tempered_good(p, a_p, a_p2) {
            return Err(Error::InvalidArgument(format!("({a_p}, {a_p2}) is not tempered at p = {p}")));
        }
        Ok(GoodLocalFactor { p, a_p, a_p2 })
    }

    /// Coefficients of `G_p(w)`, constant term first.
    pub fn g_coeffs(&self) -> Vec<i128> {
        let (p, a, a2) = (self.p as i128, self.a_p as i128, self.a_p2 as i128);
        vec![1, -a, a * a - a2, -p * a, p * p]
    }

    /// Coefficients of `F_p(z)`, constant term first.
    pub fn f_coeffs<T: Real>(&self) -> Vec<T> {
        g_to_f(self.p, &self.g_coeffs())
    }
}

/// Factor of degree at most 3 at a prime dividing the level.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "BadRecord", into = "BadRecord")]
pub struct BadLocalFactor {
    pub p: u64,
    /// `(g_1, ..., g_d)` with `G_p(w) = 1 + g_1 w + ... + g_d w^d`.
    pub g: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct BadRecord {
    p: u64,
    deg: usize,
    g: Vec<i64>,
}

impl From<BadLocalFactor> for BadRecord {
    fn from(b: BadLocalFactor) -> Self {
        BadRecord { p: b.p, deg: b.g.len(), g: b.g }
    }
}

impl TryFrom<BadRecord> for BadLocalFactor {
    type Error = Error;
    fn try_from(r: BadRecord) -> Result<Self> {
        if r.deg != r.g.len() || r.deg > 3 || r.g.last() == Some(&0) {
            return Err(Error::InvalidArgument(format!("malformed bad factor {:?}", r.g)));
        }
        Ok(BadLocalFactor { p: r.p, g: r.g })
    }
}

impl BadLocalFactor {
    pub fn degree(&self) -> usize {
        self.g.len()
    }

    pub fn g_coeffs(&self) -> Vec<i128> {
        std::iter::once(1).chain(self.g.iter().map(|&x| x as i128)).collect()
    }

    pub fn f_coeffs<T: Real>(&self) -> Vec<T> {
        g_to_f(self.p, &self.g_coeffs())
    }
}

/// `F_p(z) = G_p(z / sqrt(p))`.
fn g_to_f<T: Real>(p: u64, g: &[i128]) -> Vec<T> {
    let inv_sqrt = T::one() / T::int(p as i64).sqrt();
    let mut scale = T::one();
    g.iter()
        .map(|&c| {
            let v = T::from_i128(c).expect("coefficient fits") * &scale;
            scale *= &inv_sqrt;
            v
        })
        .collect()
}

/// A local factor of either kind.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LocalFactor {
    Good(GoodLocalFactor),
    Bad(BadLocalFactor),
}

impl LocalFactor {
    pub fn prime(&self) -> u64 {
        match self {
            LocalFactor::Good(f) => f.p,
            LocalFactor::Bad(f) => f.p,
        }
    }

    pub fn g_coeffs(&self) -> Vec<i128> {
        match self {
            LocalFactor::Good(f) => f.g_coeffs(),
            LocalFactor::Bad(f) => f.g_coeffs(),
        }
    }
}

impl fmt::Display for LocalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalFactor::Good(g) => write!(f, "p={} good (A_p={}, A_p2={})", g.p, g.a_p, g.a_p2),
            LocalFactor::Bad(b) => write!(f, "p={} bad g={:?}", b.p, b.g),
        }
    }
}

impl From<GoodLocalFactor> for LocalFactor {
    fn from(f: GoodLocalFactor) -> Self {
        LocalFactor::Good(f)
    }
}

impl From<BadLocalFactor> for LocalFactor {
    fn from(f: BadLocalFactor) -> Self {
        LocalFactor::Bad(f)
    }
}

/// Exact temperedness test for a good factor.
///
/// With `w = z + 1/z`, the roots of `F_p` lie on `|z| = 1` exactly when both roots
/// of `w^2 - b w + (c - 2)` are real and in `[-2, 2]`, where `b = A_p / sqrt(p)` and
/// `c = (A_p^2 - A_{p^2}) / p`. After clearing denominators:
/// discriminant `4 A_{p^2} + 8p - 3 A_p^2 >= 0`, vertex `A_p^2 <= 16p`, and the
/// value at `w = +-2`: `L = 2p + A_p^2 - A_{p^2} >= 0` with `L^2 >= 4 A_p^2 p`.
pub fn is_tempered_good(p: u64, a_p: i64, a_p2: i64) -> bool {
    let (p, a, a2) = (p as i128, a_p as i128, a_p2 as i128);
    let disc = 4 * a2 + 8 * p - 3 * a * a;
    let l = 2 * p + a * a - a2;
    disc >= 0 && a * a <= 16 * p && l >= 0 && l * l >= 4 * a * a * p
}

type Cache<V> = OnceLock<Mutex<HashMap<u64, Arc<Vec<V>>>>>;

fn cached<V: Clone>(cache: &'static Cache<V>, p: u64, make: impl FnOnce() -> Vec<V>) -> Arc<Vec<V>> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = map.lock().expect("cache poisoned").get(&p) {
        return v.clone();
    }
    let v = Arc::new(make());
    map.lock().expect("cache poisoned").insert(p, v.clone());
    v
}

/// Every tempered `(A_p, A_{p^2})`, in lexicographic order.
pub fn enumerate_good(p: u64) -> Result<Arc<Vec<GoodLocalFactor>>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    static CACHE: Cache<GoodLocalFactor> = OnceLock::new();
    Ok(cached(&CACHE, p, || {
        let amax = isqrt(16 * p) as i64;
        let mut out = Vec::new();
        for a in -amax..=amax {
            let r = a * a + 4 * p as i64;
            for a2 in -r..=r {
                if is_tempered_good(p, a, a2) {
                    out.push(GoodLocalFactor { p, a_p: a, a_p2: a2 });
                }
            }
        }
        out
    }))
}

/// Admissible values of `A_p`: the projection of [`enumerate_good`].
pub fn ap_range(p: u64) -> Result<Vec<i64>> {
    let mut v: Vec<i64> = enumerate_good(p)?.iter().map(|f| f.a_p).collect();
    v.dedup();
    Ok(v)
}

/// Good factors at `p` with the given `A_p`.
pub fn good_completions(p: u64, a_p: i64) -> Result<Vec<GoodLocalFactor>> {
    Ok(enumerate_good(p)?.iter().filter(|f| f.a_p == a_p).copied().collect())
}

/// Numerical root test for a bad factor at the given precision.
///
/// Every root of `G_p(w)` must have modulus `p^{-1/2}` or `1` (that is, `F_p` has
/// roots on `|z| = 1` or `|z| = sqrt(p)`), a root of modulus one must be `+-1`, and
/// the cube of a linear factor is excluded. Factors `1 -+ w` are divided out
/// exactly first, so the remaining roots are simple and converge to full precision.
pub fn bad_roots_admissible<T: Real>(p: u64, g: &[i64], tol: f64) -> bool {
    let d = g.len();
    if d > 3 || g.last() == Some(&0) {
        return false;
    }
    let mut poly: Vec<i128> = std::iter::once(1).chain(g.iter().map(|&x| x as i128)).collect();
    let mut unit = [0usize; 2];
    for (slot, root) in [1i128, -1].into_iter().enumerate() {
        while poly.len() > 1 {
            match divide_linear(&poly, root) {
                Some(q) => {
                    poly = q;
                    unit[slot] += 1;
                }
                None => break,
            }
        }
    }
    if unit.contains(&3) {
        return false;
    }
    if poly.len() == 1 {
        return poly[0] == 1;
    }
    let coeffs: Vec<T> = poly.iter().map(|&c| T::from_i128(c).expect("small coefficient")).collect();
    let inv_sqrt_p = T::one() / T::int(p as i64).sqrt();
    poly_roots(&coeffs).iter().all(|z| (z.abs_val() - &inv_sqrt_p).abs().to_f64_lossy() < tol)
}

/// Exact quotient of `poly` by `1 - w / root` for `root = +-1`, if it divides.
fn divide_linear(poly: &[i128], root: i128) -> Option<Vec<i128>> {
    // Dividing by (1 - root w): q_0 = c_0, q_k = c_k + root q_{k-1}.
    let n = poly.len() - 1;
    let mut q = Vec::with_capacity(n);
    let mut prev = 0i128;
    for &c in &poly[..n] {
        prev = c + root * prev;
        q.push(prev);
    }
    if poly[n] + root * prev == 0 {
        Some(q)
    } else {
        None
    }
}

/// Every admissible bad factor at `p`, ordered by `(d, g_1, ..., g_d)`.
///
/// Candidates satisfy `|g_k| <= C(d, k) p^{k/2}` and `|g_d|` in `{1, p}` (the
/// product of the root moduli is `1 / |g_d|`); a double-precision root check
/// prefilters them and a check at 300 bits with tolerance `1e-20` confirms.
pub fn enumerate_bad(p: u64) -> Result<Arc<Vec<BadLocalFactor>>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    static CACHE: Cache<BadLocalFactor> = OnceLock::new();
    Ok(cached(&CACHE, p, || {
        let mut out = vec![BadLocalFactor { p, g: Vec::new() }];
        for d in 1..=3usize {
            let bound = |k: usize| {
                let b = binomial(d as u64, k as u64) as f64 * (p as f64).powf(k as f64 / 2.0);
                (b + 1e-9).floor() as i64
            };
            let mut leads: Vec<i64> = vec![-1, 1];
            if d >= 2 {
                leads.extend([-(p as i64), p as i64]);
            }
            leads.sort();
            let mut mids: Vec<Vec<i64>> = vec![Vec::new()];
            for k in 1..d {
                let b = bound(k);
                mids = mids
                    .into_iter()
                    .flat_map(|m| {
                        (-b..=b).map(move |x| {
                            let mut v = m.clone();
                            v.push(x);
                            v
                        })
                    })
                    .collect();
            }
            let mut found = Vec::new();
            for m in &mids {
                for &l in &leads {
                    let mut g = m.clone();
                    g.push(l);
                    if bad_roots_admissible::<f64>(p, &g, 1e-6)
                        && bad_roots_admissible::<MpFloat>(p, &g, ROOT_TOLERANCE)
                    {
                        found.push(g);
                    }
                }
            }
            found.sort();
            out.extend(found.into_iter().map(|g| BadLocalFactor { p, g }));
        }
        out
    }))
}

/// The same set built from its factorization: `(1 - w)^i (1 + w)^j` times one of
/// `1`, `1 - a w + p w^2` with `a^2 < 4p`, or `1 - p w^2`.
pub fn enumerate_bad_constructive(p: u64) -> Vec<BadLocalFactor> {
    let pi = p as i128;
    let mut quads: Vec<Vec<i128>> = vec![vec![1]];
    let amax = isqrt(4 * p - 1) as i128;
    for a in -amax..=amax {
        quads.push(vec![1, -a, pi]);
    }
    quads.push(vec![1, 0, -pi]);
    let mul = |x: &[i128], y: &[i128]| {
        let mut r = vec![0i128; x.len() + y.len() - 1];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in y.iter().enumerate() {
                r[i + j] += a * b;
            }
        }
        r
    };
    let mut out = Vec::new();
    for q in &quads {
        for i in 0..=3usize {
            for j in 0..=3 - i {
                if q.len() - 1 + i + j > 3 || (q.len() == 1 && (i == 3 || j == 3)) {
                    continue;
                }
                let mut poly = q.clone();
                for _ in 0..i {
                    poly = mul(&poly, &[1, -1]);
                }
                for _ in 0..j {
                    poly = mul(&poly, &[1, 1]);
                }
                out.push(BadLocalFactor { p, g: poly[1..].iter().map(|&c| c as i64).collect() });
            }
        }
    }
    out.sort_by(|a, b| (a.g.len(), &a.g).cmp(&(b.g.len(), &b.g)));
    out.dedup();
    out
}

/// Exact expansion `1 / G_p(w) = sum_k A_{p^k} w^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalSeries {
    pub p: u64,
    /// `A_{p^k}` for `k = 0..=K`.
    pub numerators: Vec<i128>,
}

impl LocalSeries {
    /// `b_{p^k} = A_{p^k} / p^{k/2}`.
    pub fn value<T: Real>(&self, k: usize) -> T {
        let a = T::from_i128(self.numerators[k]).expect("numerator fits");
        if k == 0 {
            return a;
        }
        a / T::int(self.p as i64).sqrt().powi(k as i32)
    }

    pub fn values<T: Real>(&self) -> Vec<T> {
        (0..self.numerators.len()).map(|k| self.value(k)).collect()
    }
}

/// Series inversion of a local factor to order `K`.
pub fn expand_local(factor: &LocalFactor, k_max: usize) -> Result<LocalSeries> {
    let g = factor.g_coeffs();
    let mut a: Vec<i128> = Vec::with_capacity(k_max + 1);
    a.push(1);
    for k in 1..=k_max {
        let mut acc: i128 = 0;
        for j in 1..g.len().min(k + 1) {
            let term =
                g[j].checked_mul(a[k - j]).ok_or_else(|| Error::InvalidArgument("local expansion overflow".into()))?;
            acc = acc.checked_sub(term).ok_or_else(|| Error::InvalidArgument("local expansion overflow".into()))?;
        }
        a.push(acc);
    }
    Ok(LocalSeries { p: factor.prime(), numerators: a })
}
