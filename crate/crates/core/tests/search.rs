//! Search behavior on a reduced relation grid.

use lsearch::basis::RelationGrid;
use lsearch::local::{ap_range, enumerate_bad, enumerate_good, good_completions, GoodLocalFactor, LocalFactor};
use lsearch::oracle::{curve_by_label, product_l};
use lsearch::search::{children, prune_test, Level, PreparedSearch, SearchConfig, SearchStatus};
use lsearch::types::{FunctionalEquationParams, Sign};
use lsearch::{assignment::PartialAssignment, Mp};

fn small_config() -> SearchConfig {
    SearchConfig {
        horizon: 300,
        grid: RelationGrid { heights: vec![2.0], ..RelationGrid::default() },
        node_budget: 2_000,
        ..SearchConfig::default()
    }
}

fn prepared(level: u64) -> PreparedSearch<Mp> {
    let fe = FunctionalEquationParams::<Mp>::new(level, Sign::Plus).unwrap();
    PreparedSearch::new(fe, small_config()).unwrap()
}

/// Largest number of children any node can have at `level`.
fn max_children(n: u64, level: Level) -> usize {
    let p = level.prime();
    match level {
        Level::FullFactor(_) if n % p == 0 => enumerate_bad(p).unwrap().len(),
        Level::FullFactor(_) => enumerate_good(p).unwrap().len(),
        Level::PrimeCoefficient(_) => ap_range(p).unwrap().len(),
        Level::PrimeSquareCoefficient(_) => {
            ap_range(p).unwrap().into_iter().map(|a| good_completions(p, a).unwrap().len()).max().unwrap()
        }
    }
}

#[test]
fn search_is_deterministic_and_refines_monotonically() {
    let a = prepared(154);
    let b = prepared(154);
    assert_eq!(a.basis, b.basis);
    let r1 = a.run().unwrap();
    let r2 = b.run().unwrap();
    assert_eq!(r1, r2);
    assert_eq!(r1.levels.len(), a.plan.levels.len());
    let mut prev = 1;
    for (i, &count) in r1.counts.iter().enumerate() {
        assert!(count <= max_children(154, a.plan.levels[i]) * prev, "level {}", r1.levels[i]);
        prev = count;
    }
    if r1.status != SearchStatus::Inconclusive {
        assert!(r1.counts.iter().all(|&c| c <= a.cfg.node_budget));
    }
}

#[test]
fn oracle_path_survives_a_weak_grid() {
    let s = prepared(154);
    let o = product_l::<Mp>(&curve_by_label("11a1").unwrap(), &curve_by_label("14a1").unwrap(), 300).unwrap();
    let kept = s.track(&o).unwrap();
    assert_eq!(kept.len(), s.plan.levels.len());
    assert!(kept.iter().all(|&k| k));
}

#[test]
fn children_follow_the_plan() {
    let root = PartialAssignment::new(211);
    assert_eq!(children(&root, Level::FullFactor(2)).unwrap().len(), 35);
    assert_eq!(children(&root, Level::PrimeCoefficient(5)).unwrap().len(), 17);
    let committed = root.with_coefficient(5, 8).unwrap();
    let squares = children(&committed, Level::PrimeSquareCoefficient(5)).unwrap();
    let expected: Vec<i64> = enumerate_good(5).unwrap().iter().filter(|f| f.a_p == 8).map(|f| f.a_p2).collect();
    assert!(!expected.is_empty());
    let got: Vec<i64> = squares
        .iter()
        .map(|c| match c.get(5) {
            Some(lsearch::assignment::PrimeData::Factor(LocalFactor::Good(f))) => f.a_p2,
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    assert_eq!(got, expected);
    assert!(children(&root, Level::PrimeSquareCoefficient(5)).is_err());
    assert_eq!(children(&PartialAssignment::new(464), Level::FullFactor(2)).unwrap().len(), 26);
}

#[test]
fn prune_test_with_no_relations_keeps() {
    let node =
        PartialAssignment::new(211).with_factor(LocalFactor::Good(GoodLocalFactor::new(2, 2, 2).unwrap())).unwrap();
    assert!(prune_test::<Mp>(&node, &[]).unwrap());
}
