//! Trapezoidal quadrature on a vertical line for inverse Mellin integrals.
//!
//! An integral `(1/2 pi i) \int_{(nu)} F(z) X^z dz` becomes
//! `(h / 2 pi) sum_k F(nu + i k h) X^{nu + i k h}`. The node values `F(nu + i k h)`
//! do not depend on `X`, so a rule is built once and then evaluated at many
//! `X` by Horner's scheme in `r = X^{i h}`.

use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::gamma::GammaFn;
use crate::scalar::{ComplexExt, Real};

/// Parameters of the vertical-line trapezoidal rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    /// Abscissa of the integration line.
    pub nu: f64,
    /// Step along the line.
    pub step: f64,
    /// Largest truncation height accepted before giving up.
    pub max_height: f64,
    /// Fraction of the distance to the nearest singularity used as strip half-width.
    pub strip: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { nu: 1.0, step: 1.0 / 16.0, max_height: 400.0, strip: 0.95 }
    }
}

/// An integrand given through its logarithm, evaluable at any precision.
pub trait LogIntegrand: Sync {
    /// A branch of `ln F(z)`.
    fn ln_value<T: Real>(&self, z: &Complex<T>, gamma: &GammaFn<T>) -> Complex<T>;
    /// Real part of the rightmost singularity of `F`.
    fn rightmost_singularity(&self) -> f64;
}

/// Truncation and error data of a rule, computed in double precision.
#[derive(Clone, Debug)]
pub struct RulePlan {
    pub nu: f64,
    pub step: f64,
    /// Nodes run over `k = -k_neg ..= k_pos`.
    pub k_neg: usize,
    pub k_pos: usize,
    /// Strip half-width used by the discretization bound.
    pub strip: f64,
    /// `\int |F|` along `Re z = nu - strip` and `Re z = nu + strip`.
    pub m_lo: f64,
    pub m_hi: f64,
    /// `(h / 2 pi) sum |F|` over the discarded nodes.
    pub trunc: f64,
}

impl RulePlan {
    /// Plans a rule for `f` so that discarded nodes contribute less than `trunc_tol`
    /// (relative to `X^nu`).
    pub fn new<F: LogIntegrand>(f: &F, cfg: &QuadratureConfig, gamma: &GammaFn<f64>, trunc_tol: f64) -> Result<Self> {
        let sing = f.rightmost_singularity();
        if cfg.nu <= sing {
            return Err(Error::InvalidArgument(format!(
                "line Re z = {} must lie right of the singularity at {}",
                cfg.nu, sing
            )));
        }
        let h = cfg.step;
        let log_mod = |x: f64, y: f64| f.ln_value(&Complex64::new(x, y), gamma).re;
        let scale = h / (2.0 * std::f64::consts::PI);
        let threshold = (trunc_tol / scale).ln();
        let (k_pos, tail_pos) = scan(&log_mod, cfg, 1.0, threshold)?;
        let (k_neg, tail_neg) = scan(&log_mod, cfg, -1.0, threshold)?;
        let a = cfg.strip * (cfg.nu - sing);
        let m_lo = line_mass(&log_mod, cfg.nu - a, cfg.nu - a - sing, cfg.max_height);
        let m_hi = line_mass(&log_mod, cfg.nu + a, cfg.nu + a - sing, cfg.max_height);
        Ok(RulePlan { nu: cfg.nu, step: h, k_neg, k_pos, strip: a, m_lo, m_hi, trunc: scale * (tail_pos + tail_neg) })
    }

    /// Union of two plans on the same line: the wider node range, the larger masses.
    pub fn merge(&self, other: &RulePlan) -> RulePlan {
        RulePlan {
            nu: self.nu,
            step: self.step,
            k_neg: self.k_neg.max(other.k_neg),
            k_pos: self.k_pos.max(other.k_pos),
            strip: self.strip.min(other.strip),
            m_lo: self.m_lo.max(other.m_lo),
            m_hi: self.m_hi.max(other.m_hi),
            trunc: self.trunc.max(other.trunc),
        }
    }

    pub fn node_count(&self) -> usize {
        self.k_neg + self.k_pos + 1
    }

    /// Node abscissa `nu + i k h` for the `j`-th node.
    pub fn node<T: Real>(&self, j: usize) -> Complex<T> {
        let k = j as i64 - self.k_neg as i64;
        let y = T::from_f64_exact(self.step) * T::int(k);
        Complex::new(T::from_f64_exact(self.nu), y)
    }

    /// Discretization plus truncation error at `ln X = log_x`, excluding roundoff.
    pub fn error_bound(&self, log_x: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let alias = 1.0 / ((two_pi * self.strip / self.step).exp() - 1.0);
        let disc = (self.m_lo * ((self.nu - self.strip) * log_x).exp()
            + self.m_hi * ((self.nu + self.strip) * log_x).exp())
            * alias
            / std::f64::consts::PI;
        disc + self.trunc * (self.nu * log_x).exp()
    }
}

/// Walks outward along the line until the integrand is negligible for good.
fn scan(log_mod: &impl Fn(f64, f64) -> f64, cfg: &QuadratureConfig, dir: f64, threshold: f64) -> Result<(usize, f64)> {
    let h = cfg.step;
    let mut k = 0usize;
    let mut prev = log_mod(cfg.nu, 0.0);
    let mut decreasing = 0;
    loop {
        k += 1;
        let y = dir * k as f64 * h;
        if y.abs() > cfg.max_height {
            return Err(Error::TruncationTooHigh { needed: y.abs(), max: cfg.max_height });
        }
        let cur = log_mod(cfg.nu, y);
        decreasing = if cur < prev { decreasing + 1 } else { 0 };
        prev = cur;
        if cur < threshold && decreasing >= 8 {
            // Make sure nothing larger hides further out.
            let mut far = y;
            let mut ok = true;
            while far.abs() < cfg.max_height {
                far += dir;
                if log_mod(cfg.nu, far) > cur {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let next = log_mod(cfg.nu, y + dir * h);
            let ratio = (next - cur).exp();
            if ratio >= 1.0 {
                continue;
            }
            // Geometric majorant of the discarded nodes.
            let tail = next.exp() / (1.0 - ratio);
            return Ok((k, tail));
        }
    }
}

/// `\int |F(x + iy)| dy` by a fine Riemann sum, inflated by 10% for safety.
fn line_mass(log_mod: &impl Fn(f64, f64) -> f64, x: f64, dist: f64, max_height: f64) -> f64 {
    let fine = (dist / 4.0).min(1.0 / 32.0);
    let mut total = 0.0;
    for dir in [1.0, -1.0] {
        let mut y = if dir > 0.0 { 0.0 } else { -fine };
        let mut peak = f64::NEG_INFINITY;
        loop {
            let step = if y.abs() < 2.0 { fine } else { 1.0 / 32.0 };
            let v = log_mod(x, y);
            peak = peak.max(v);
            total += v.exp() * step;
            y += dir * step;
            if y.abs() > max_height || (y.abs() > 4.0 && v < peak - 120.0) {
                break;
            }
        }
    }
    1.1 * total
}

/// A planned rule together with its high-precision node values.
#[derive(Clone, Debug)]
pub struct LineRule<T: Real> {
    pub plan: RulePlan,
    /// `F(nu + i k h)` for `k = -k_neg ..= k_pos`.
    nodes: Vec<Complex<T>>,
    abs_sum: f64,
}

impl<T: Real> LineRule<T> {
    pub fn build<F: LogIntegrand>(f: &F, plan: RulePlan, gamma: &GammaFn<T>) -> Self {
        let nodes = (0..plan.node_count()).map(|j| f.ln_value(&plan.node::<T>(j), gamma).exp_c()).collect();
        Self::from_nodes(plan, nodes)
    }

    pub fn from_nodes(plan: RulePlan, nodes: Vec<Complex<T>>) -> Self {
        assert_eq!(nodes.len(), plan.node_count());
        let abs_sum = nodes.iter().map(|v| v.to_c64().norm()).sum();
        LineRule { plan, nodes, abs_sum }
    }

    /// `(h / 2 pi) sum_k F(nu + i k h) X^{w + nu + i k h}` with `ln X = log_x`.
    pub fn eval(&self, log_x: &T, shift: &Complex<T>) -> Complex<T> {
        let h = T::from_f64_exact(self.plan.step);
        let (sin, cos) = (h.clone() * log_x).sin_cos();
        let r = Complex::new(cos, sin);
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in self.nodes.iter().rev() {
            let re = acc.re.clone() * &r.re - acc.im.clone() * &r.im + &p.re;
            let im = acc.re * &r.im + acc.im * &r.re + &p.im;
            acc = Complex::new(re, im);
        }
        let nu = T::from_f64_exact(self.plan.nu);
        let k_neg = T::int(self.plan.k_neg as i64);
        let expo = Complex::new((nu + &shift.re) * log_x, (shift.im.clone() - k_neg * &h) * log_x);
        let scale = h / (T::pi() * T::int(2));
        acc.mul_ref(&expo.exp_c()).rscale(&scale)
    }

    /// Error bound for [`eval`](Self::eval) with zero shift, including roundoff.
    pub fn error_bound(&self, log_x: f64) -> f64 {
        let eps = T::epsilon().to_f64_lossy();
        let n = self.nodes.len() as f64;
        let scale = self.plan.step / (2.0 * std::f64::consts::PI);
        let round = 8.0 * (n + 8.0) * eps * self.abs_sum * scale * (self.plan.nu * log_x).exp();
        self.plan.error_bound(log_x) + round
    }
}

/// `Gamma(z)`, the kernel of the Cahen-Mellin identity
/// `(1/2 pi i) \int Gamma(z) y^{-z} dz = e^{-y}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CahenMellin;

impl LogIntegrand for CahenMellin {
    fn ln_value<T: Real>(&self, z: &Complex<T>, gamma: &GammaFn<T>) -> Complex<T> {
        gamma.ln_gamma(z)
    }
    fn rightmost_singularity(&self) -> f64 {
        0.0
    }
}

/// Evaluates the Cahen-Mellin integral at `y`, returning the value and its error bound.
pub fn cahen_mellin<T: Real>(y: &T, cfg: &QuadratureConfig, tol: f64, gamma: &GammaFn<T>) -> Result<(T, f64)> {
    let plan = RulePlan::new(&CahenMellin, cfg, &GammaFn::<f64>::new(), tol * 1e-2)?;
    let rule = LineRule::build(&CahenMellin, plan, gamma);
    let log_x = -y.ln();
    let lx = log_x.to_f64_lossy();
    let err = rule.error_bound(lx);
    if err > tol {
        return Err(Error::StepTooCoarse { bound: err, tol });
    }
    let zero = Complex::new(T::zero(), T::zero());
    Ok((rule.eval(&log_x, &zero).re, err))
}
