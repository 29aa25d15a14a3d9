//! Dense least-squares kernels over a generic scalar.

use crate::scalar::Real;

/// Triangular factor `R` of a Householder QR decomposition of the `m x n`
/// row-major matrix `a` (`m >= n`). `Q` is not formed.
pub fn qr_r_factor<T: Real>(mut a: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    assert!(m >= n, "qr_r_factor needs at least as many rows as columns");
    for k in 0..n {
        let mut norm2 = T::zero();
        for row in a.iter().skip(k) {
            norm2 += row[k].clone() * &row[k];
        }
        if norm2.is_zero() {
            continue;
        }
        let norm = norm2.sqrt();
        let alpha = if a[k][k].is_negative() { norm } else { -norm };
        // v = x - alpha e_k, stored in place of column k.
        let vk = a[k][k].clone() - &alpha;
        let vnorm2 = norm2 - a[k][k].clone() * &a[k][k] + vk.clone() * &vk;
        a[k][k] = vk;
        if !vnorm2.is_zero() {
            for j in k + 1..n {
                let mut dot = T::zero();
                for row in a.iter().skip(k) {
                    dot += row[k].clone() * &row[j];
                }
                let f = (dot.clone() + &dot) / &vnorm2;
                for row in a.iter_mut().skip(k) {
                    let d = row[k].clone() * &f;
                    row[j] -= d;
                }
            }
        }
        a[k][k] = alpha;
        for row in a.iter_mut().skip(k + 1) {
            row[k] = T::zero();
        }
    }
    a.truncate(n);
    a
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn solve_upper<T: Real>(r: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc -= r[i][j].clone() * &x[j];
        }
        x[i] = acc / &r[i][i];
    }
    x
}

/// Solves `R^T x = b` for upper-triangular `R`.
pub fn solve_upper_transpose<T: Real>(r: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    for i in 0..n {
        let mut acc = b[i].clone();
        for j in 0..i {
            acc -= r[j][i].clone() * &x[j];
        }
        x[i] = acc / &r[i][i];
    }
    x
}

/// Minimizes `|B lambda|` subject to `c . lambda = 1`, given the `R` factor of `B`.
/// Returns `lambda` and the minimal value `|B lambda|^2`, or `None` when
/// the constraint cannot be met.
pub fn constrained_min<T: Real>(r: &[Vec<T>], c: &[T]) -> Option<(Vec<T>, T)> {
    if r.iter().enumerate().any(|(i, row)| row[i].is_zero()) {
        return None;
    }
    let d = solve_upper_transpose(r, c);
    let dd: T = d.iter().map(|x| x.clone() * x).sum();
    if dd.is_zero() {
        return None;
    }
    let mu: Vec<T> = d.iter().map(|x| x.clone() / &dd).collect();
    Some((solve_upper(r, &mu), T::one() / dd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_factor_reproduces_gram_matrix() {
        let a = vec![vec![2.0, -1.0, 0.5], vec![1.0, 3.0, -2.0], vec![0.0, 1.0, 1.0], vec![4.0, 0.0, 1.5]];
        let r = qr_r_factor(a.clone());
        for i in 0..3 {
            for j in 0..3 {
                let ata: f64 = a.iter().map(|row| row[i] * row[j]).sum();
                let rtr: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                assert!((ata - rtr).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constrained_minimum_matches_lagrange() {
        // min x^2 + 4 y^2 subject to x + y = 1: x = 4/5, y = 1/5, value 4/5.
        let r = qr_r_factor(vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        let (lam, v) = constrained_min(&r, &[1.0, 1.0]).unwrap();
        assert!((lam[0] - 0.8).abs() < 1e-14 && (lam[1] - 0.2).abs() < 1e-14);
        assert!((v - 0.8).abs() < 1e-14);
    }
}
