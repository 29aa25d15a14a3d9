//! Complex Gamma function at arbitrary working precision.
//!
//! Stirling's series with exact Bernoulli coefficients, after an upward shift
//! that makes the asymptotic expansion accurate to the unit roundoff of `T`.

use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::{ComplexExt, Real};

/// Exact Bernoulli numbers `B_0, B_1, ..., B_n` (with `B_1 = -1/2`).
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    static CACHE: OnceLock<Mutex<Vec<BigRational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![BigRational::one()]));
    let mut b = cache.lock().expect("bernoulli cache poisoned");
    while b.len() <= n {
        let m = b.len();
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += bj * BigRational::from_integer(binom.clone());
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        let next = -acc / BigRational::from_integer(BigInt::from(m + 1));
        b.push(next);
    }
    b[..=n].to_vec()
}

/// Gamma function evaluator for a fixed scalar type and precision.
#[derive(Clone, Debug)]
pub struct GammaFn<T: Real> {
    /// `B_{2k} / (2k (2k-1))` for `k = 1..`.
    coeffs: Vec<T>,
    coeff_mag: Vec<f64>,
    half_ln_two_pi: T,
    radius: f64,
    eps: f64,
}

impl<T: Real> Default for GammaFn<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> GammaFn<T> {
    pub fn new() -> Self {
        let bits = T::mantissa_bits() as f64 + 16.0;
        // Stirling terms bottom out near exp(-2 pi |w|).
        let radius = (bits * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI)).ceil() + 2.0;
        let terms = (std::f64::consts::PI * radius).ceil() as usize + 4;
        let bern = bernoulli_numbers(2 * terms);
        let mut coeffs = Vec::with_capacity(terms);
        let mut coeff_mag = Vec::with_capacity(terms);
        for k in 1..=terms {
            let denom = BigInt::from((2 * k) * (2 * k - 1));
            let c = &bern[2 * k] / BigRational::from_integer(denom);
            coeffs.push(T::from_ratio(c.numer(), c.denom()));
            coeff_mag.push(<f64 as Real>::from_ratio(c.numer(), c.denom()).abs());
        }
        let two_pi = T::pi() * T::int(2);
        GammaFn { coeffs, coeff_mag, half_ln_two_pi: two_pi.ln() / T::int(2), radius, eps: 2f64.powi(-(bits as i32)) }
    }

    /// Number of unit shifts needed before Stirling's series is accurate.
    fn shift_for(&self, z: &Complex<T>) -> usize {
        let re = z.re.to_f64_lossy();
        let im = z.im.to_f64_lossy();
        let mut m = 0usize;
        loop {
            let x = re + m as f64;
            let r = x.hypot(im);
            // |w| cos(arg(w)/2) controls the sector factor in the remainder.
            let eff = if r == 0.0 { 0.0 } else { r * ((1.0 + x / r) / 2.0).sqrt() };
            if x > 0.5 && eff >= self.radius {
                return m;
            }
            m += 1;
        }
    }

    /// Stirling's series for `ln Gamma(w)`, valid once `w` has been shifted.
    fn stirling(&self, w: &Complex<T>) -> Complex<T> {
        let inv = Complex::from_real(T::one()).div_ref(w);
        let inv_sq = inv.mul_ref(&inv);
        let inv_abs = 1.0 / w.to_c64().norm();
        let mut count = 0;
        let mut mag = inv_abs;
        for c in &self.coeff_mag {
            if c * mag < self.eps {
                break;
            }
            count += 1;
            mag *= inv_abs * inv_abs;
        }
        let count = count.min(self.coeffs.len());
        let mut series = Complex::from_real(T::zero());
        for c in self.coeffs[..count].iter().rev() {
            series = series.mul_ref(&inv_sq);
            series.re += c;
        }
        series = series.mul_ref(&inv);
        let half = T::one() / T::int(2);
        let lead = Complex::new(w.re.clone() - &half, w.im.clone()).mul_ref(&w.ln_c());
        let mut out = lead - w.clone() + series;
        out.re += &self.half_ln_two_pi;
        out
    }

    /// `ln Gamma(z)` on the principal (continuous) branch, for `Re z > 0`.
    pub fn ln_gamma(&self, z: &Complex<T>) -> Complex<T> {
        assert!(z.re.is_positive(), "ln_gamma requires Re z > 0");
        let m = self.shift_for(z);
        let mut w = z.clone();
        let mut logs = Complex::from_real(T::zero());
        for _ in 0..m {
            logs = logs + w.ln_c();
            w.re += T::one();
        }
        self.stirling(&w) - logs
    }

    /// `Gamma(z)` for any `z` off the non-positive integers.
    pub fn gamma(&self, z: &Complex<T>) -> Complex<T> {
        if z.re.to_f64_lossy() < 0.5 {
            // Reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z).
            let one_minus = Complex::new(T::one() - &z.re, -z.im.clone());
            let pi = T::pi();
            let sin = z.rscale(&pi).sin_c();
            let denom = sin.mul_ref(&self.gamma(&one_minus));
            return Complex::from_real(pi).div_ref(&denom);
        }
        let m = self.shift_for(z);
        let mut w = z.clone();
        let mut prod = Complex::from_real(T::one());
        for _ in 0..m {
            prod = prod.mul_ref(&w);
            w.re += T::one();
        }
        self.stirling(&w).exp_c().div_ref(&prod)
    }

    /// `ln |Gamma(z)|`, cheap to obtain from the same machinery.
    pub fn ln_abs_gamma(&self, z: &Complex<T>) -> T {
        self.ln_gamma(z).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::MpFloat;
    use num_traits::Signed;

    fn mp(x: f64) -> MpFloat {
        MpFloat::from_f64_exact(x)
    }

    #[test]
    fn bernoulli_first_values() {
        let b = bernoulli_numbers(12);
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(b[1], r(-1, 2));
        assert_eq!(b[2], r(1, 6));
        assert_eq!(b[4], r(-1, 30));
        assert_eq!(b[6], r(1, 42));
        assert_eq!(b[12], r(-691, 2730));
        assert!(b[3].is_zero() && b[11].is_zero());
    }

    #[test]
    fn gamma_at_integers_and_half() {
        let g = GammaFn::<MpFloat>::new();
        let five = g.gamma(&Complex::new(mp(5.0), mp(0.0)));
        assert!((five.re - mp(24.0)).abs() < MpFloat::epsilon() * mp(1e3));
        assert!(five.im.abs() < MpFloat::epsilon() * mp(1e3));
        let half = g.gamma(&Complex::new(mp(0.5), mp(0.0)));
        let sqrt_pi = MpFloat::pi().sqrt();
        assert!((half.re - sqrt_pi).abs() < MpFloat::epsilon() * mp(1e3));
    }

    #[test]
    fn gamma_recurrence_off_axis() {
        let g = GammaFn::<MpFloat>::new();
        for &(x, y) in &[(0.25, 3.0), (1.5, -17.25), (2.0, 60.0), (-2.5, 1.0)] {
            let z = Complex::new(mp(x), mp(y));
            let zp1 = Complex::new(mp(x + 1.0), mp(y));
            let lhs = g.gamma(&zp1);
            let rhs = z.mul_ref(&g.gamma(&z));
            let rel = (lhs.clone() - rhs).norm2().sqrt() / lhs.norm2().sqrt();
            assert!(rel < mp(1e-85), "z = {x}+{y}i, rel = {rel}");
        }
    }

    #[test]
    fn abs_gamma_on_imaginary_direction() {
        // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
        let g = GammaFn::<MpFloat>::new();
        let y = mp(7.5);
        let v = g.gamma(&Complex::new(mp(0.5), y.clone()));
        let (_, ch) = (MpFloat::pi() * &y).sinh_cosh();
        let expect = MpFloat::pi() / ch;
        let rel = (v.norm2() - &expect).abs() / expect;
        assert!(rel < mp(1e-85));
    }

    #[test]
    fn f64_evaluator_is_accurate() {
        let g = GammaFn::<f64>::new();
        let v = g.gamma(&Complex::new(4.5, 0.0));
        assert!((v.re - 11.631728396567448).abs() < 1e-12);
        let l = g.ln_gamma(&Complex::new(2.0, 40.0));
        let hp = GammaFn::<MpFloat>::new().ln_gamma(&Complex::new(mp(2.0), mp(40.0)));
        assert!((l.re - hp.re.to_f64_lossy()).abs() < 1e-10);
        assert!((l.im - hp.im.to_f64_lossy()).abs() < 1e-10);
    }
}
