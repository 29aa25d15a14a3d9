//! Simultaneous polynomial root finding (Durand-Kerner iteration).

use num_complex::Complex;

use crate::scalar::{ComplexExt, Real};

/// All complex roots of `c[0] + c[1] x + ... + c[d] x^d` with `c[d] != 0`.
pub fn poly_roots<T: Real>(coeffs: &[T]) -> Vec<Complex<T>> {
    let d = coeffs.len() - 1;
    assert!(d >= 1 && !coeffs[d].is_zero(), "need a nonconstant polynomial");
    let lead = coeffs[d].clone();
    let monic: Vec<Complex<T>> = coeffs.iter().map(|c| Complex::from_real(c.clone() / &lead)).collect();
    let eval = |x: &Complex<T>| {
        let mut acc = monic[d].clone();
        for c in monic[..d].iter().rev() {
            acc = acc.mul_ref(x) + c.clone();
        }
        acc
    };
    // Cauchy radius for the starting circle.
    let radius = 1.0 + monic[..d].iter().map(|c| c.to_c64().norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex<T>> = (0..d)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4;
            Complex::new(T::from_f64(radius * ang.cos()).unwrap(), T::from_f64(radius * ang.sin()).unwrap())
        })
        .collect();
    let eps = T::epsilon().to_f64_lossy();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let mut den = Complex::from_real(T::one());
            for j in 0..d {
                if i != j {
                    den = den.mul_ref(&(z[i].clone() - z[j].clone()));
                }
            }
            if den.norm2().is_zero() {
                continue;
            }
            let step = eval(&z[i]).div_ref(&den);
            let size = step.to_c64().norm() / (1.0 + z[i].to_c64().norm());
            moved = moved.max(size);
            z[i] = z[i].clone() - step;
        }
        if moved <= eps * 16.0 {
            break;
        }
    }
    z
}
