//! Smoothed approximate functional equation.
//!
//! For `Lambda(s) = Q^s Gamma(s + 1/2)^2 L(s)` (up to a constant) and a test
//! function `g`, the identity
//!
//! ```text
//! Lambda(s) g(s) = sum_n b_n [ (Q/n)^s f1(s, n) + eps (Q/n)^{1-s} f2(1-s, n) ]
//! ```
//!
//! holds with
//! `f1(s, n) = (1/2 pi i) \int_{(nu)} Gamma(z + s + 1/2)^2 g(s + z) (Q/n)^z dz / z` and
//! `f2(1-s, n) = (1/2 pi i) \int_{(nu)} Gamma(z + 3/2 - s)^2 g(s - z) (Q/n)^z dz / z`.
//! The bracket is the weight `w_n`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::d4_table;
use crate::error::{Error, Result};
use crate::gamma::GammaFn;
use crate::quadrature::{LineRule, LogIntegrand, QuadratureConfig, RulePlan};
use crate::scalar::{ComplexExt, Real};
use crate::types::FunctionalEquationParams;

/// `g(z) = exp(alpha z + c z^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub alpha: Complex64,
    pub c: f64,
}

impl TestFunction {
    pub const fn new(alpha: Complex64, c: f64) -> Self {
        TestFunction { alpha, c }
    }

    /// `g = 1`.
    pub const fn one() -> Self {
        TestFunction::new(Complex64::new(0.0, 0.0), 0.0)
    }

    /// `g = e^{alpha z}` for real `alpha`.
    pub const fn exp_real(alpha: f64) -> Self {
        TestFunction::new(Complex64::new(alpha, 0.0), 0.0)
    }

    /// Growth condition for a degree-4 L-function: a Gaussian factor, or `|alpha| < pi`.
    pub fn is_admissible(&self) -> bool {
        self.c.is_finite()
            && self.alpha.is_finite()
            && (self.c > 0.0 || (self.c == 0.0 && self.alpha.norm() < std::f64::consts::PI))
    }

    /// The default grid: `alpha` in `{0, 1, -1, i/2, 3i/4}`, `c` in `{0, 1/8}`.
    pub fn default_grid() -> Vec<TestFunction> {
        let alphas = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(0.0, 0.75),
        ];
        let mut out = Vec::new();
        for c in [0.0, 0.125] {
            for a in alphas {
                let g = TestFunction::new(a, c);
                if g.is_admissible() {
                    out.push(g);
                }
            }
        }
        out
    }

    pub fn ln_eval<T: Real>(&self, w: &Complex<T>) -> Complex<T> {
        let alpha = Complex::new(T::from_f64_exact(self.alpha.re), T::from_f64_exact(self.alpha.im));
        let c = T::from_f64_exact(self.c);
        alpha.mul_ref(w) + w.mul_ref(w).rscale(&c)
    }

    pub fn eval<T: Real>(&self, w: &Complex<T>) -> Complex<T> {
        self.ln_eval(w).exp_c()
    }

    /// True when `g` is real on the real axis.
    pub fn is_real(&self) -> bool {
        self.alpha.im == 0.0
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.alpha;
        match (a.re != 0.0, a.im != 0.0) {
            (_, false) => write!(f, "{}", a.re)?,
            (false, true) => write!(f, "{}i", a.im)?,
            (true, true) => write!(f, "{}{:+}i", a.re, a.im)?,
        }
        write!(f, ",{}", self.c)
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// Parses `"alpha,c"` with `alpha` written as `x`, `yi`, or `x+yi`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse test function {s:?}"));
        let (a, c) = match s.split_once(',') {
            Some((a, c)) => (a.trim(), c.trim().parse::<f64>().map_err(|_| bad())?),
            None => (s.trim(), 0.0),
        };
        let alpha = parse_complex(a).ok_or_else(bad)?;
        let g = TestFunction::new(alpha, c);
        if !g.is_admissible() {
            return Err(Error::InvalidArgument(format!("test function {g} violates the growth condition")));
        }
        Ok(g)
    }
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.replace(' ', "");
    if let Some(body) = s.strip_suffix('i') {
        // Split at the last sign that is not the leading one or part of an exponent.
        let bytes = body.as_bytes();
        let mut cut = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                cut = Some(k);
                break;
            }
        }
        let im_of = |t: &str| match t {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => t.parse::<f64>().ok(),
        };
        match cut {
            Some(k) => Some(Complex64::new(body[..k].parse().ok()?, im_of(&body[k..])?)),
            None => Some(Complex64::new(0.0, im_of(body)?)),
        }
    } else {
        Some(Complex64::new(s.parse().ok()?, 0.0))
    }
}

/// Which of the two Mellin integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MellinKind {
    /// `f1(s, n)`, kernel `Gamma(z + s + 1/2)^2 g(s + z)`.
    First,
    /// `f2(1 - s, n)`, kernel `Gamma(z + 3/2 - s)^2 g(s - z)`.
    Second,
}

/// Integrand of `f1` or `f2` without the `(Q/n)^z` factor.
#[derive(Clone, Copy, Debug)]
pub struct MellinIntegrand {
    pub kind: MellinKind,
    pub s: Complex64,
    pub g: TestFunction,
}

impl MellinIntegrand {
    fn sigma(&self) -> Complex64 {
        match self.kind {
            MellinKind::First => self.s + 0.5,
            MellinKind::Second => Complex64::new(1.5, 0.0) - self.s,
        }
    }

    fn c<T: Real>(z: Complex64) -> Complex<T> {
        Complex::new(T::from_f64_exact(z.re), T::from_f64_exact(z.im))
    }

    /// `2 ln Gamma(z + sigma) - ln z`, the part shared by every test function.
    fn ln_core<T: Real>(&self, z: &Complex<T>, gamma: &GammaFn<T>) -> Complex<T> {
        let w = z.clone() + Self::c::<T>(self.sigma());
        let lg = gamma.ln_gamma(&w);
        lg.clone() + lg - z.ln_c()
    }

    fn ln_g<T: Real>(&self, z: &Complex<T>) -> Complex<T> {
        let s = Self::c::<T>(self.s);
        let arg = match self.kind {
            MellinKind::First => s + z.clone(),
            MellinKind::Second => s - z.clone(),
        };
        self.g.ln_eval(&arg)
    }
}

impl LogIntegrand for MellinIntegrand {
    fn ln_value<T: Real>(&self, z: &Complex<T>, gamma: &GammaFn<T>) -> Complex<T> {
        self.ln_core(z, gamma) + self.ln_g(z)
    }
    fn rightmost_singularity(&self) -> f64 {
        (-self.sigma().re).max(0.0)
    }
}

/// Configuration of the weight computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfeConfig {
    pub quad: QuadratureConfig,
    /// Target for the truncation error of each Mellin integral, relative to `(Q/n)^nu`.
    pub trunc_tol: f64,
    /// Multiplier applied to every error and tail estimate.
    pub safety: f64,
}

impl Default for AfeConfig {
    fn default() -> Self {
        AfeConfig { quad: QuadratureConfig::default(), trunc_tol: 1e-48, safety: 10.0 }
    }
}

/// Weight decay model `|w_n| <= K exp(C sqrt(n / sqrt(N)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub c: f64,
    pub k: f64,
}

impl TailModel {
    pub fn bound(&self, n: u64, sqrt_level: f64) -> f64 {
        self.k * (self.c * (n as f64 / sqrt_level).sqrt()).exp()
    }

    /// Least-squares fit of `ln|w_n|` against `sqrt(n / sqrt(N))` over the top quartile
    /// of the weights that stand out from their error bounds, with `K` raised until
    /// the model dominates `|w_n| - err_n` on that quartile and on the top quartile of
    /// all `n <= M`.
    pub fn fit(abs: &[f64], errs: &[f64], sqrt_level: f64) -> Result<Self> {
        let m = abs.len();
        let significant = |n: usize| abs[n - 1] > 100.0 * errs[n - 1] && abs[n - 1] > 0.0;
        let top = (1..=m).rev().find(|&n| significant(n)).ok_or(Error::NonDecayingTail(f64::NAN))?;
        let start = (3 * top) / 4 + 1;
        let pts: Vec<(f64, f64)> = (start..=top)
            .filter(|&n| significant(n))
            .map(|n| ((n as f64 / sqrt_level).sqrt(), abs[n - 1].ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::NonDecayingTail(f64::NAN));
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let c = sxy / sxx;
        if !(c < 0.0) {
            return Err(Error::NonDecayingTail(c));
        }
        let excess = ((3 * m) / 4 + 1..=m)
            .filter(|&n| abs[n - 1] > errs[n - 1])
            .map(|n| ((n as f64 / sqrt_level).sqrt(), (abs[n - 1] - errs[n - 1]).ln()));
        let ln_k = pts.iter().copied().chain(excess).map(|p| p.1 - c * p.0).fold(f64::NEG_INFINITY, f64::max);
        Ok(TailModel { c, k: ln_k.exp() })
    }
}

/// `sum_{n > m} d4(n) K exp(C sqrt(n / sqrt(N)))`, without safety factor.
pub fn model_tail_sum(model: &TailModel, m: usize, sqrt_level: f64) -> Result<f64> {
    if !(model.c < 0.0) {
        return Err(Error::NonDecayingTail(model.c));
    }
    let beta = -model.c;
    // Beyond 16 sqrt(N) / C^2 the majorant n^2 K exp(C sqrt(n/r)) decreases (d4(n) <= n^2).
    let monotone = (16.0 * sqrt_level / (beta * beta)).ceil() as usize + 1;
    let end = (4 * m).max(monotone).max(m + 16);
    let d4 = d4_table(end);
    let mut sum = 0.0;
    for n in m + 1..=end {
        sum += d4[n] as f64 * model.bound(n as u64, sqrt_level);
    }
    // \int_{end}^\infty x^2 K e^{-beta sqrt(x/r)} dx = 2 r^3 K \int_{u0}^\infty u^5 e^{-beta u} du.
    let u0 = (end as f64 / sqrt_level).sqrt();
    let mut poly = 0.0;
    let mut fact = 1.0;
    for j in (0..=5).rev() {
        // 5!/j! u0^j / beta^{6-j}
        poly += fact * u0.powi(j) / beta.powi(6 - j);
        fact *= j as f64;
    }
    let rem = 2.0 * sqrt_level.powi(3) * model.k * (-beta * u0).exp() * poly;
    Ok(sum + rem)
}

/// Weights `w_n`, `n = 1..=M`, for one evaluation point and test function.
#[derive(Clone, Debug)]
pub struct WeightVector<T: Real> {
    pub s_point: Complex64,
    pub test: TestFunction,
    pub fe: FunctionalEquationParams<T>,
    /// `weights[n - 1] = w_n`.
    pub weights: Vec<Complex<T>>,
    /// Certified absolute error of each weight (safety factor included).
    pub errors: Vec<f64>,
    /// Largest per-weight error.
    pub accuracy: f64,
    pub tail_model: TailModel,
    pub safety: f64,
}

impl<T: Real> WeightVector<T> {
    pub fn horizon(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, n: usize) -> &Complex<T> {
        &self.weights[n - 1]
    }

    /// `g(s)` at the evaluation point.
    pub fn g_at_s(&self) -> Complex<T> {
        let s = Complex::new(T::from_f64_exact(self.s_point.re), T::from_f64_exact(self.s_point.im));
        self.test.eval(&s)
    }

    /// `sum_n w_n b_n` for coefficients `b[n - 1]`, `n <= M`.
    pub fn apply(&self, b: &[T]) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (w, bn) in self.weights.iter().zip(b) {
            acc = acc + w.rscale(bn);
        }
        acc
    }

    /// Writes `n, Re w_n, Im w_n, |w_n|, error_bound` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "re_w", "im_w", "abs_w", "error_bound"]).map_err(|e| Error::Io(e.into()))?;
        for (k, (w, e)) in self.weights.iter().zip(&self.errors).enumerate() {
            wtr.write_record([
                (k + 1).to_string(),
                w.re.to_decimal_string(),
                w.im.to_decimal_string(),
                w.abs_val().to_decimal_string(),
                format!("{e:.6e}"),
            ])
            .map_err(|e| Error::Io(e.into()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Bound on `sum_{n > M} d4(n) |w_n|` from the tail model, times the safety factor.
pub fn tail_bound<T: Real>(m: usize, wv: &WeightVector<T>) -> Result<f64> {
    Ok(wv.safety * model_tail_sum(&wv.tail_model, m, wv.fe.sqrt_level())?)
}

/// Evaluator for the Mellin integrals and the weights built from them.
#[derive(Clone, Debug)]
pub struct AfeEngine<T: Real> {
    pub cfg: AfeConfig,
    gamma: GammaFn<T>,
    gamma64: GammaFn<f64>,
}

impl<T: Real> AfeEngine<T> {
    pub fn new(cfg: AfeConfig) -> Self {
        AfeEngine { cfg, gamma: GammaFn::new(), gamma64: GammaFn::new() }
    }

    pub fn gamma(&self) -> &GammaFn<T> {
        &self.gamma
    }

    fn check_s(&self, s: Complex64) -> Result<()> {
        let bound = (-(0.5 + s.re)).max(0.0);
        if self.cfg.quad.nu <= bound {
            return Err(Error::InvalidArgument(format!("nu must exceed {bound} at s = {s}")));
        }
        Ok(())
    }

    /// Integration rule for one integrand, planned for ratios `Q/n <= x_max`.
    fn rule(&self, f: &MellinIntegrand, x_max: f64, tol: f64) -> Result<LineRule<T>> {
        let scale = x_max.powf(self.cfg.quad.nu).max(1.0);
        let plan = RulePlan::new(f, &self.cfg.quad, &self.gamma64, tol / scale)?;
        Ok(LineRule::build(f, plan, &self.gamma))
    }

    /// `f1(s, n)` or `f2(1 - s, n)` with absolute error at most `tol`; returns the
    /// value and its error bound.
    pub fn mellin_f(
        &self,
        kind: MellinKind,
        s: Complex64,
        n: u64,
        g: &TestFunction,
        fe: &FunctionalEquationParams<T>,
        tol: f64,
    ) -> Result<(Complex<T>, f64)> {
        self.check_s(s)?;
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let f = MellinIntegrand { kind, s, g: *g };
        let log_x = fe.q.ln() - T::int(n as i64).ln();
        let lx = log_x.to_f64_lossy();
        let rule = self.rule(&f, lx.exp(), tol * 1e-2)?;
        let err = rule.error_bound(lx);
        if err > tol {
            let plan_err = rule.plan.error_bound(lx);
            return Err(if plan_err > tol {
                Error::StepTooCoarse { bound: plan_err, tol }
            } else {
                Error::InsufficientPrecision { roundoff: err - plan_err, tol }
            });
        }
        let zero = Complex::new(T::zero(), T::zero());
        Ok((rule.eval(&log_x, &zero), err))
    }

    /// `w_n = (Q/n)^s f1(s, n) + eps (Q/n)^{1-s} f2(1-s, n)`.
    pub fn coefficient_weight(
        &self,
        s: Complex64,
        n: u64,
        g: &TestFunction,
        fe: &FunctionalEquationParams<T>,
    ) -> Result<Complex<T>> {
        let tol = 1e-40;
        let (f1, _) = self.mellin_f(MellinKind::First, s, n, g, fe, tol)?;
        let (f2, _) = self.mellin_f(MellinKind::Second, s, n, g, fe, tol)?;
        let log_x = fe.q.ln() - T::int(n as i64).ln();
        let sc = Complex::new(T::from_f64_exact(s.re), T::from_f64_exact(s.im));
        let one_minus = Complex::new(T::one() - &sc.re, -sc.im.clone());
        let a = sc.rscale(&log_x).exp_c().mul_ref(&f1);
        let b = one_minus.rscale(&log_x).exp_c().mul_ref(&f2);
        Ok(a + b.rscale(&T::int(fe.epsilon())))
    }

    /// Weight vectors for several test functions at one point `s`, sharing the
    /// Gamma-function node values between them.
    pub fn weight_vectors(
        &self,
        s: Complex64,
        tests: &[TestFunction],
        fe: &FunctionalEquationParams<T>,
        m: usize,
    ) -> Result<Vec<WeightVector<T>>> {
        self.check_s(s)?;
        if m == 0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        for g in tests {
            if !g.is_admissible() {
                return Err(Error::InvalidArgument(format!("test function {g} is not admissible")));
            }
        }
        let x_max = fe.q.to_f64_lossy();
        let mut rules: Vec<[Option<LineRule<T>>; 2]> = tests.iter().map(|_| [None, None]).collect();
        for (slot, kind) in [MellinKind::First, MellinKind::Second].into_iter().enumerate() {
            let scale = x_max.powf(self.cfg.quad.nu).max(1.0);
            let integrands: Vec<MellinIntegrand> = tests.iter().map(|g| MellinIntegrand { kind, s, g: *g }).collect();
            let plans = integrands
                .iter()
                .map(|f| RulePlan::new(f, &self.cfg.quad, &self.gamma64, self.cfg.trunc_tol / scale))
                .collect::<Result<Vec<_>>>()?;
            let union = plans.iter().skip(1).fold(plans[0].clone(), |a, b| a.merge(b));
            let core: Vec<Complex<T>> = (0..union.node_count())
                .into_par_iter()
                .map(|j| integrands[0].ln_core(&union.node::<T>(j), &self.gamma))
                .collect();
            for (i, (f, plan)) in integrands.iter().zip(plans).enumerate() {
                let offset = union.k_neg - plan.k_neg;
                let nodes = (0..plan.node_count())
                    .into_par_iter()
                    .map(|j| {
                        let z = plan.node::<T>(j);
                        (core[offset + j].clone() + f.ln_g(&z)).exp_c()
                    })
                    .collect();
                rules[i][slot] = Some(LineRule::from_nodes(plan, nodes));
            }
        }

        let q_ln = fe.q.ln();
        let sc = Complex::new(T::from_f64_exact(s.re), T::from_f64_exact(s.im));
        let one_minus = Complex::new(T::one() - &sc.re, -sc.im.clone());
        let eps = T::int(fe.epsilon());
        let logs: Vec<T> = (1..=m).into_par_iter().map(|n| q_ln.clone() - T::int(n as i64).ln()).collect();

        let mut out = Vec::with_capacity(tests.len());
        for (g, pair) in tests.iter().zip(rules) {
            let [Some(r1), Some(r2)] = pair else { unreachable!() };
            let (weights, errors): (Vec<Complex<T>>, Vec<f64>) = logs
                .par_iter()
                .map(|lx| {
                    let a = r1.eval(lx, &sc);
                    let b = r2.eval(lx, &one_minus);
                    let l = lx.to_f64_lossy();
                    let err = r1.error_bound(l) * (s.re * l).exp() + r2.error_bound(l) * ((1.0 - s.re) * l).exp();
                    (a + b.rscale(&eps), self.cfg.safety * err)
                })
                .unzip();
            let abs: Vec<f64> = weights.iter().map(|w| w.to_c64().norm()).collect();
            let tail_model = TailModel::fit(&abs, &errors, fe.sqrt_level())?;
            let accuracy = errors.iter().cloned().fold(0.0, f64::max);
            out.push(WeightVector {
                s_point: s,
                test: *g,
                fe: fe.clone(),
                weights,
                errors,
                accuracy,
                tail_model,
                safety: self.cfg.safety,
            });
        }
        Ok(out)
    }

    pub fn weight_vector(
        &self,
        s: Complex64,
        g: &TestFunction,
        fe: &FunctionalEquationParams<T>,
        m: usize,
    ) -> Result<WeightVector<T>> {
        Ok(self.weight_vectors(s, std::slice::from_ref(g), fe, m)?.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::MpFloat;
    use crate::types::Sign;

    #[test]
    fn parse_and_display_test_functions() {
        let g: TestFunction = "0.75i,0".parse().unwrap();
        assert_eq!(g.alpha, Complex64::new(0.0, 0.75));
        let h: TestFunction = "1-0.5i,0.125".parse().unwrap();
        assert_eq!(h.alpha, Complex64::new(1.0, -0.5));
        assert_eq!(h.c, 0.125);
        assert_eq!(h.to_string().parse::<TestFunction>().unwrap(), h);
        assert!("4,0".parse::<TestFunction>().is_err());
        assert!("4i,0.125".parse::<TestFunction>().is_ok());
        assert_eq!(TestFunction::default_grid().len(), 10);
    }

    #[test]
    fn tail_model_fit_recovers_slope() {
        let r = 14.0f64;
        let abs: Vec<f64> = (1..=400).map(|n| 3.0 * (-(n as f64 / r).sqrt() * 11.0).exp()).collect();
        let m = TailModel::fit(&abs, &vec![0.0; 400], r).unwrap();
        assert!((m.c + 11.0).abs() < 1e-9);
        assert!(m.k >= 3.0 * (1.0 - 1e-9));
    }

    #[test]
    fn f64_weight_matches_mp_weight() {
        let fe = FunctionalEquationParams::<f64>::new(211, Sign::Plus).unwrap();
        let fe_mp = FunctionalEquationParams::<MpFloat>::new(211, Sign::Plus).unwrap();
        let cfg = AfeConfig { trunc_tol: 1e-14, ..Default::default() };
        let e64 = AfeEngine::<f64>::new(cfg);
        let emp = AfeEngine::<MpFloat>::new(AfeConfig::default());
        let s = Complex64::new(0.5, 2.0);
        let g = TestFunction::exp_real(1.0);
        let a = e64.weight_vector(s, &g, &fe, 40).unwrap();
        let b = emp.weight_vector(s, &g, &fe_mp, 40).unwrap();
        for n in [1, 5, 20, 40] {
            let d = (a.weight(n) - b.weight(n).to_c64()).norm();
            assert!(d < 1e-12, "n = {n}: {d:e}");
        }
        let single = emp.coefficient_weight(s, 5, &g, &fe_mp).unwrap();
        assert!((single - b.weight(5).clone()).to_c64().norm() < 1e-38);
    }
}
