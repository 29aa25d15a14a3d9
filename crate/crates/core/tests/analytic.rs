//! Weights, relations and interval evaluation against the elliptic-curve oracles.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use lsearch::afe::{tail_bound, AfeConfig, AfeEngine, MellinKind, TestFunction, WeightVector};
use lsearch::arith::{d4, primes_up_to};
use lsearch::assignment::PartialAssignment;
use lsearch::basis::{build_basis, RelationGrid};
use lsearch::local::{GoodLocalFactor, LocalFactor};
use lsearch::oracle::{curve_by_label, product_l, residual_report, OracleLFunction};
use lsearch::quadrature::QuadratureConfig;
use lsearch::relation::{
    build_difference_relation, build_phase_relation, evaluate_relation, optimize_relation, LinearRelation,
};
use lsearch::scalar::{ComplexExt, Real};
use lsearch::types::{FunctionalEquationParams, Sign};
use lsearch::Mp;
use num_complex::Complex64;
use proptest::prelude::*;

const M: usize = 600;

fn fe(level: u64) -> FunctionalEquationParams<Mp> {
    FunctionalEquationParams::new(level, Sign::Plus).unwrap()
}

fn engine() -> AfeEngine<Mp> {
    AfeEngine::new(AfeConfig::default())
}

fn oracle_209() -> &'static OracleLFunction {
    static CELL: OnceLock<OracleLFunction> = OnceLock::new();
    CELL.get_or_init(|| product_l::<Mp>(&curve_by_label("11a1").unwrap(), &curve_by_label("19a1").unwrap(), M).unwrap())
}

fn gaussian(alpha: Complex64) -> TestFunction {
    TestFunction::new(alpha, 0.125)
}

/// `g = 1`, `g = e^z` and `g = e^{z^2/8}` at `s = 1/2 + 2i`, `N = 209`.
fn weights_209() -> &'static [WeightVector<Mp>] {
    static CELL: OnceLock<Vec<WeightVector<Mp>>> = OnceLock::new();
    CELL.get_or_init(|| {
        let tests = [TestFunction::one(), TestFunction::exp_real(1.0), gaussian(Complex64::new(0.0, 0.0))];
        engine().weight_vectors(Complex64::new(0.5, 2.0), &tests, &fe(209), M).unwrap()
    })
}

fn basis(level: u64) -> &'static [LinearRelation<Mp>] {
    static B209: OnceLock<Vec<LinearRelation<Mp>>> = OnceLock::new();
    static B211: OnceLock<Vec<LinearRelation<Mp>>> = OnceLock::new();
    let cell = match level {
        209 => &B209,
        211 => &B211,
        _ => unreachable!(),
    };
    cell.get_or_init(|| build_basis(&engine(), &fe(level), &RelationGrid::default(), M).unwrap())
}

fn lambda_estimate(wv: &WeightVector<Mp>, b: &[Mp]) -> (Complex64, f64) {
    let g = wv.g_at_s();
    let value = wv.apply(b).div_ref(&g).to_c64();
    let err: f64 = wv.errors.iter().zip(b).map(|(e, bn)| e * bn.to_f64_lossy().abs()).sum::<f64>()
        + tail_bound(wv.horizon(), wv).unwrap();
    (value, err / g.to_c64().norm())
}

#[test]
fn lambda_agrees_across_test_functions() {
    let b = oracle_209().analytic::<Mp>();
    let wvs = weights_209();
    let (v1, e1) = lambda_estimate(&wvs[0], &b);
    let (v2, e2) = lambda_estimate(&wvs[1], &b);
    assert!((v1 - v2).norm() <= e1 + e2, "{v1} vs {v2}, errors {e1:e} + {e2:e}");
    // Lambda is real on the critical line for sign +1.
    assert!(v1.im.abs() <= e1 && v2.im.abs() <= e2);
    assert!(v1.norm() > 1e3 * (e1 + e2));
}

#[test]
fn difference_relation_annihilates_oracle() {
    let b = oracle_209().analytic::<Mp>();
    let wvs = weights_209();
    let rels = build_difference_relation(&wvs[0], &wvs[1]).unwrap();
    assert_eq!(rels.len(), 2);
    for r in &rels {
        assert!(r.residual(&b).to_f64_lossy().abs() <= r.tail, "{}", r.provenance);
        assert!(r.constant.to_f64_lossy() == 0.0);
    }
    assert!(build_difference_relation(&wvs[0], &wvs[0]).unwrap().is_empty());
}

#[test]
fn phase_relation_annihilates_oracle() {
    let b = oracle_209().analytic::<Mp>();
    for wv in &weights_209()[1..] {
        let r = build_phase_relation(wv).unwrap().expect("nontrivial");
        assert!(r.residual(&b).to_f64_lossy().abs() <= r.tail);
    }
}

#[test]
fn phase_relation_at_real_point_is_trivial() {
    let wv = engine().weight_vector(Complex64::new(0.5, 0.0), &TestFunction::exp_real(1.0), &fe(211), 200).unwrap();
    assert!(wv.weights.iter().zip(&wv.errors).all(|(w, e)| w.im.to_f64_lossy().abs() <= *e));
    assert!(build_phase_relation(&wv).unwrap().is_none());
}

#[test]
fn phase_relation_for_unimodular_exponential_is_trivial() {
    // For g = e^{i beta z} with real beta, w_n / g(s) is real on the critical line
    // when the sign is +1.
    assert!(build_phase_relation(&weights_209()[0]).unwrap().is_none());
    let g = TestFunction::new(Complex64::new(0.0, 0.5), 0.0);
    let wv = engine().weight_vector(Complex64::new(0.5, 1.0), &g, &fe(211), 200).unwrap();
    assert!(wv.weights.iter().all(|w| w.im.to_f64_lossy() != 0.0));
    assert!(build_phase_relation(&wv).unwrap().is_none());
}

#[test]
fn phase_relation_with_imaginary_alpha_is_nontrivial() {
    let g = gaussian(Complex64::new(0.0, 0.5));
    let wv = engine().weight_vector(Complex64::new(0.5, 1.0), &g, &fe(211), 200).unwrap();
    let r = build_phase_relation(&wv).unwrap().expect("nontrivial");
    assert!(r.max_abs_weight() > 1e3 * r.tail);
}

#[test]
fn mellin_integral_is_stable_under_rule_changes() {
    let s = Complex64::new(0.5, 2.0);
    let tol = 1e-30;
    let fine = AfeEngine::<Mp>::new(AfeConfig {
        quad: QuadratureConfig { nu: 1.5, step: 1.0 / 20.0, ..QuadratureConfig::default() },
        ..AfeConfig::default()
    });
    for kind in [MellinKind::First, MellinKind::Second] {
        let (a, _) = engine().mellin_f(kind, s, 1, &TestFunction::one(), &fe(211), tol).unwrap();
        let (b, _) = fine.mellin_f(kind, s, 1, &TestFunction::one(), &fe(211), tol).unwrap();
        assert!((a - b).to_c64().norm() <= 2.0 * tol);
    }
}

#[test]
fn mellin_integrals_survive_refinement() {
    let coarse = engine();
    let fine = AfeEngine::<Mp>::new(AfeConfig {
        quad: QuadratureConfig { step: QuadratureConfig::default().step / 2.0, ..QuadratureConfig::default() },
        ..AfeConfig::default()
    });
    let cases = [
        (0.0, 1, TestFunction::one()),
        (2.0, 7, TestFunction::exp_real(-1.0)),
        (2.0, 40, TestFunction::one()),
        (4.5, 40, gaussian(Complex64::new(0.0, 0.5))),
    ];
    for (t, n, g) in cases {
        let s = Complex64::new(0.5, t);
        for kind in [MellinKind::First, MellinKind::Second] {
            let (a, ea) = coarse.mellin_f(kind, s, n, &g, &fe(211), 1e-30).unwrap();
            let (b, _) = fine.mellin_f(kind, s, n, &g, &fe(211), 1e-36).unwrap();
            assert!((a - b).to_c64().norm() <= ea, "s = {s}, n = {n}, g = {g}");
        }
    }
}

#[test]
fn weights_decay_like_the_model() {
    let wv = engine().weight_vector(Complex64::new(0.5, 2.0), &TestFunction::one(), &fe(211), 1200).unwrap();
    let abs: Vec<f64> = wv.weights.iter().map(|w| w.to_c64().norm()).collect();
    for n in 20..1000 {
        assert!(abs[n] < abs[n - 1], "|w_n| increases at n = {}", n + 1);
    }
    for n in 50..=250 {
        assert!(abs[4 * n - 1] < abs[n - 1]);
    }
    // Least-squares fit of ln|w_n| against sqrt(n / sqrt(N)) over 100 <= n <= 1000.
    let sq = 211f64.sqrt();
    let pts: Vec<(f64, f64)> = (100..=1000).map(|n| ((n as f64 / sq).sqrt(), abs[n - 1].ln())).collect();
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let c = sxy / sxx;
    assert!(c < 0.0);
    let range = pts[0].1 - pts[pts.len() - 1].1;
    let worst = pts.iter().map(|(x, y)| (y - (my + c * (x - mx))).abs()).fold(0.0, f64::max);
    assert!(worst < 0.2 * range, "fit residual {worst} over a range of {range}");

    // The tail bound fitted on n <= 600 dominates the directly computed weights up to 1200.
    let short = engine().weight_vector(Complex64::new(0.5, 2.0), &TestFunction::one(), &fe(211), 600).unwrap();
    let direct: f64 = (601..=1200).map(|n| d4(n as u64) as f64 * abs[n - 1]).sum();
    let bound = tail_bound(600, &short).unwrap();
    assert!(bound >= direct, "{bound:e} < {direct:e}");
    let mut doubled = short.clone();
    doubled.safety *= 2.0;
    assert!((tail_bound(600, &doubled).unwrap() / bound - 2.0).abs() < 1e-12);
    assert!(tail_bound(1_000_000, &short).unwrap() < 1e-30);
}

#[test]
fn difference_weights_decay_for_211() {
    let tests = [TestFunction::one(), TestFunction::exp_real(1.0)];
    let wvs = engine().weight_vectors(Complex64::new(0.5, 2.0), &tests, &fe(211), M).unwrap();
    for r in build_difference_relation(&wvs[0], &wvs[1]).unwrap() {
        let (u10, u100) = (r.weight(10).to_f64_lossy().abs(), r.weight(100).to_f64_lossy().abs());
        assert!(u100 * 1e3 < u10, "{}: |u_10| = {u10:e}, |u_100| = {u100:e}", r.provenance);
    }
}

#[test]
fn default_basis_annihilates_oracle_and_detects_perturbation() {
    let rels = basis(209);
    let mut b = oracle_209().analytic::<Mp>();
    assert!(residual_report(&b, rels).unwrap() < 1.0);
    b[1] += Mp::from_f64_exact(0.5);
    assert!(residual_report(&b, rels).unwrap() > 1.0);
}

fn weighted_norm(r: &LinearRelation<Mp>, keep: usize, suppress: &BTreeSet<usize>) -> f64 {
    let s: f64 = suppress.iter().map(|&n| (d4(n as u64) as f64 * r.weight(n).to_f64_lossy()).powi(2)).sum();
    s.sqrt() / r.weight(keep).to_f64_lossy().abs()
}

#[test]
fn optimized_combination_beats_every_basis_element() {
    let keep: BTreeSet<usize> = [19].into();
    let suppress: BTreeSet<usize> =
        primes_up_to(M as u64).into_iter().filter(|&p| p >= 23).map(|p| p as usize).collect();
    let eleven: Vec<LinearRelation<Mp>> =
        basis(211).iter().filter(|r| r.weight(19).to_f64_lossy() != 0.0).take(11).cloned().collect();
    assert_eq!(eleven.len(), 11);
    let best_single = eleven.iter().map(|r| weighted_norm(r, 19, &suppress)).fold(f64::INFINITY, f64::min);
    let opt = optimize_relation(&eleven, &keep, &suppress).unwrap();
    let achieved = weighted_norm(&opt.relation, 19, &suppress);
    assert!(achieved * 10.0 <= best_single, "optimized {achieved:e}, best single {best_single:e}");
    assert!((opt.relation.weight(19).to_f64_lossy().abs() - 1.0).abs() < 1e-12);
}

#[test]
fn optimized_relation_annihilates_oracle() {
    let keep: BTreeSet<usize> = [2, 3].into();
    let suppress: BTreeSet<usize> = (5..=M).filter(|n| n % 2 != 0 && n % 3 != 0).collect();
    let opt = optimize_relation(basis(209), &keep, &suppress).unwrap();
    let b = oracle_209().analytic::<Mp>();
    assert!(opt.relation.residual(&b).to_f64_lossy().abs() <= opt.relation.tail);
}

#[test]
fn empty_assignment_interval() {
    let r = &basis(211)[0];
    let iv = evaluate_relation(r, &PartialAssignment::new(211)).unwrap();
    assert!((iv.center - r.weight(1).to_f64_lossy()).abs() <= 1e-12 * iv.center.abs().max(1e-300));
    assert!(iv.contains_zero());
    assert!(iv.radius >= r.tail);
}

#[test]
fn excluded_factor_at_two_is_refuted_for_211() {
    let pa =
        PartialAssignment::new(211).with_factor(LocalFactor::Good(GoodLocalFactor::new(2, 2, 2).unwrap())).unwrap();
    let refuted = basis(211).iter().filter(|r| !evaluate_relation(r, &pa).unwrap().contains_zero()).count();
    assert!(refuted > 0);
}

#[test]
fn oracle_factors_at_two_and_three_are_consistent() {
    let pa = oracle_209().assignment(&[2, 3]).unwrap();
    for r in basis(209) {
        assert!(evaluate_relation(r, &pa).unwrap().contains_zero(), "{}", r.provenance);
    }
}

#[test]
fn evaluation_is_linear_on_known_coefficients() {
    let rels = basis(209);
    let primes: Vec<u64> = primes_up_to(M as u64);
    let pa = oracle_209().assignment(&primes).unwrap();
    let (a, b) = (Mp::from_f64_exact(0.75), Mp::from_f64_exact(-2.5));
    let combined = rels[0].combine(&a, &rels[1], &b);
    let c0 = evaluate_relation(&rels[0], &pa).unwrap().center;
    let c1 = evaluate_relation(&rels[1], &pa).unwrap().center;
    let c = evaluate_relation(&combined, &pa).unwrap().center;
    let scale = (0.75 * c0).abs() + (2.5 * c1).abs();
    assert!((c - (0.75 * c0 - 2.5 * c1)).abs() <= 1e-12 * scale.max(1e-300));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Committing further oracle-true primes keeps zero inside and never widens an interval.
    #[test]
    fn refining_oracle_assignment_is_sound_and_monotone(
        mask in proptest::collection::vec(any::<bool>(), 12),
        extra in 0usize..12,
        rel in 0usize..64,
    ) {
        let primes = primes_up_to(40);
        let chosen: Vec<u64> = primes.iter().zip(&mask).filter(|(_, m)| **m).map(|(p, _)| *p).collect();
        let r = &basis(209)[rel % basis(209).len()];
        let o = oracle_209();
        let coarse = evaluate_relation(r, &o.assignment(&chosen).unwrap()).unwrap();
        prop_assert!(coarse.contains_zero());
        let p = primes[extra];
        if !chosen.contains(&p) {
            let mut finer_primes = chosen.clone();
            finer_primes.push(p);
            let fine = evaluate_relation(r, &o.assignment(&finer_primes).unwrap()).unwrap();
            prop_assert!(fine.contains_zero());
            prop_assert!(fine.radius <= coarse.radius * (1.0 + 1e-9));
        }
    }
}
