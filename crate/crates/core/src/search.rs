//! Breadth-first search over local data with relation-based pruning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afe::{AfeConfig, AfeEngine};
use crate::arith::{factorize, prime_divisors, primes_up_to};
use crate::assignment::{CoefficientTable, PartialAssignment, PrimeData};
use crate::basis::{build_basis, relations_at, RelationGrid};
use crate::error::{Error, Result};
use crate::local::{ap_range, enumerate_bad, enumerate_good, good_completions, LocalFactor};
use crate::oracle::OracleLFunction;
use crate::relation::{evaluate_with_table, optimize_relation, LinearRelation};
use crate::scalar::Real;
use crate::types::{FunctionalEquationParams, Sign};

/// One step of the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p")]
pub enum Level {
    FullFactor(u64),
    PrimeCoefficient(u64),
    PrimeSquareCoefficient(u64),
}

impl Level {
    pub fn prime(self) -> u64 {
        match self {
            Level::FullFactor(p) | Level::PrimeCoefficient(p) | Level::PrimeSquareCoefficient(p) => p,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::FullFactor(p) => write!(f, "F_{p}"),
            Level::PrimeCoefficient(p) => write!(f, "A_{p}"),
            Level::PrimeSquareCoefficient(p) => write!(f, "A_{}", p * p),
        }
    }
}

/// What is known at a prime after some levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Knowledge {
    Nothing,
    Coefficient,
    Full,
}

/// Ordered list of levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelPlan {
    pub levels: Vec<Level>,
}

impl LevelPlan {
    /// Full factors at 2, 3 and the primes dividing `level`, `A_p` at the other
    /// primes up to `commit_bound`, and `A_{p^2}` right after `A_p` for `square_primes`.
    pub fn new(level: u64, commit_bound: u64, square_primes: &[u64]) -> Result<Self> {
        let bad = prime_divisors(level);
        let mut levels = Vec::new();
        for p in primes_up_to(commit_bound) {
            if p <= 3 || bad.contains(&p) {
                levels.push(Level::FullFactor(p));
            } else {
                levels.push(Level::PrimeCoefficient(p));
                if square_primes.contains(&p) {
                    levels.push(Level::PrimeSquareCoefficient(p));
                }
            }
        }
        let plan = LevelPlan { levels };
        plan.validate(level)?;
        Ok(plan)
    }

    pub fn validate(&self, level: u64) -> Result<()> {
        let bad = prime_divisors(level);
        let mut seen: Vec<u64> = Vec::new();
        let mut committed: Vec<u64> = Vec::new();
        let mut squared: Vec<u64> = Vec::new();
        let mut last = 0;
        for lv in &self.levels {
            let p = lv.prime();
            match lv {
                Level::PrimeSquareCoefficient(_) => {
                    if !committed.contains(&p) || squared.contains(&p) {
                        return Err(Error::Config(format!("{lv} must follow A_{p}")));
                    }
                    squared.push(p);
                    continue;
                }
                Level::PrimeCoefficient(_) if bad.contains(&p) => {
                    return Err(Error::Config(format!("{p} divides the level and needs a full factor")));
                }
                Level::PrimeCoefficient(_) => committed.push(p),
                Level::FullFactor(_) => {}
            }
            if p <= last || !crate::arith::is_prime(p) {
                return Err(Error::Config(format!("primes must increase; got {p} after {last}")));
            }
            last = p;
            seen.push(p);
        }
        if seen != primes_up_to(last) {
            return Err(Error::Config("level plan skips a prime".into()));
        }
        Ok(())
    }

    fn knowledge_after(&self, count: usize) -> BTreeMap<u64, Knowledge> {
        let mut k = BTreeMap::new();
        for lv in &self.levels[..count] {
            let state = match lv {
                Level::PrimeCoefficient(_) => Knowledge::Coefficient,
                _ => Knowledge::Full,
            };
            k.insert(lv.prime(), state);
        }
        k
    }

    /// Indices `n <= m` whose coefficient is determined after the first `count` levels.
    pub fn known_indices(&self, count: usize, m: usize) -> BTreeSet<usize> {
        let k = self.knowledge_after(count);
        (1..=m)
            .filter(|&n| {
                factorize(n as u64).iter().all(|(p, e)| match k.get(p).copied().unwrap_or(Knowledge::Nothing) {
                    Knowledge::Full => true,
                    Knowledge::Coefficient => *e == 1,
                    Knowledge::Nothing => false,
                })
            })
            .collect()
    }
}

/// Search parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Coefficient horizon `M` of the relations.
    pub horizon: usize,
    pub commit_bound: u64,
    pub square_primes: Vec<u64>,
    pub grid: RelationGrid,
    pub afe: AfeConfig,
    pub node_budget: usize,
    /// Number of broad relations applied at every level.
    pub global_relations: usize,
    /// Height of the point used for the final recheck.
    pub recheck_height: f64,
    /// Number of coefficients reported per survivor.
    pub report_prefix: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            horizon: 1000,
            commit_bound: 97,
            square_primes: vec![5, 7],
            grid: RelationGrid::default(),
            afe: AfeConfig::default(),
            node_budget: 1_000_000,
            global_relations: 3,
            recheck_height: 2.5,
            report_prefix: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Eliminated,
    SurvivorsFound,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Survivor {
    pub factors: BTreeMap<u64, PrimeData>,
    #[serde(rename = "A")]
    pub a: Vec<i128>,
    /// Number of surviving assignments sharing this prefix; `factors` is the first.
    pub assignments: usize,
    /// Whether some such assignment also satisfies relations built at a fresh point.
    pub rechecked: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub level: u64,
    pub sign: Sign,
    pub levels: Vec<String>,
    pub counts: Vec<usize>,
    pub status: SearchStatus,
    pub survivors: Vec<Survivor>,
    pub relations_used: Vec<String>,
}

/// One child per admissible datum at the given level.
pub fn children(node: &PartialAssignment, level: Level) -> Result<Vec<PartialAssignment>> {
    let p = level.prime();
    match level {
        Level::FullFactor(p) if node.is_bad(p) => {
            enumerate_bad(p)?.iter().map(|f| node.with_factor(f.clone().into())).collect()
        }
        Level::FullFactor(p) => enumerate_good(p)?.iter().map(|f| node.with_factor((*f).into())).collect(),
        Level::PrimeCoefficient(p) => ap_range(p)?.into_iter().map(|a| node.with_coefficient(p, a)).collect(),
        Level::PrimeSquareCoefficient(_) => match node.get(p) {
            Some(PrimeData::Coefficient(a)) => {
                good_completions(p, *a)?.into_iter().map(|f| node.with_factor(f.into())).collect()
            }
            _ => Err(Error::InvalidArgument(format!("{level} needs a committed A_{p}"))),
        },
    }
}

/// Keep `node` iff every relation's interval contains zero.
pub fn prune_test<T: Real>(node: &PartialAssignment, rels: &[LinearRelation<T>]) -> Result<bool> {
    let Some(m) = rels.first().map(|r| r.horizon()) else { return Ok(true) };
    let table = CoefficientTable::<T>::new(node, m)?;
    for r in rels {
        if !evaluate_with_table(r, &table)?.contains_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Relations and plan for one `(N, epsilon)`, built once and shared by the search.
pub struct PreparedSearch<T: Real> {
    pub fe: FunctionalEquationParams<T>,
    pub cfg: SearchConfig,
    pub plan: LevelPlan,
    pub basis: Vec<LinearRelation<T>>,
    /// Optimized relation for each level.
    pub level_relations: Vec<LinearRelation<T>>,
    pub global: Vec<LinearRelation<T>>,
    engine: AfeEngine<T>,
}

impl<T: Real> PreparedSearch<T> {
    pub fn new(fe: FunctionalEquationParams<T>, cfg: SearchConfig) -> Result<Self> {
        if cfg.horizon < 100 {
            return Err(Error::Config("horizon must be at least 100".into()));
        }
        let engine = AfeEngine::new(cfg.afe);
        let basis = build_basis(&engine, &fe, &cfg.grid, cfg.horizon)?;
        Self::with_basis(fe, cfg, basis)
    }

    /// Prepares a search from an existing relation basis with horizon `cfg.horizon`.
    pub fn with_basis(
        fe: FunctionalEquationParams<T>,
        cfg: SearchConfig,
        basis: Vec<LinearRelation<T>>,
    ) -> Result<Self> {
        let m = cfg.horizon;
        if basis.is_empty() || basis.iter().any(|r| r.horizon() != m) {
            return Err(Error::Config("basis does not match the configured horizon".into()));
        }
        let plan = LevelPlan::new(fe.level, cfg.commit_bound, &cfg.square_primes)?;
        let engine = AfeEngine::new(cfg.afe);
        let level_relations = (0..plan.levels.len())
            .into_par_iter()
            .map(|i| {
                let before = plan.known_indices(i, m);
                let after = plan.known_indices(i + 1, m);
                let keep: BTreeSet<usize> = after.difference(&before).copied().collect();
                let suppress: BTreeSet<usize> = (1..=m).filter(|n| !after.contains(n)).collect();
                optimize_relation(&basis, &keep, &suppress).map(|o| o.relation)
            })
            .collect::<Result<Vec<_>>>()?;
        // Broad relations: each keeps one small prime and suppresses everything past
        // the committed range.
        let top = plan.known_indices(plan.levels.len(), m);
        let suppress: BTreeSet<usize> = (1..=m).filter(|n| !top.contains(n)).collect();
        let global = primes_up_to(cfg.commit_bound)
            .into_iter()
            .take(cfg.global_relations)
            .map(|p| optimize_relation(&basis, &[p as usize].into(), &suppress).map(|o| o.relation))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedSearch { fe, cfg, plan, basis, level_relations, global, engine })
    }

    /// Relations applied to the children created at level `i`.
    pub fn relations_for(&self, i: usize) -> Vec<LinearRelation<T>> {
        std::iter::once(self.level_relations[i].clone()).chain(self.global.iter().cloned()).collect()
    }

    pub fn run(&self) -> Result<SearchReport> {
        self.run_with(|_, _, _| {})
    }

    /// As [`run`](Self::run), reporting `(level index, level, survivors)` after each level.
    pub fn run_with(&self, progress: impl Fn(usize, Level, usize)) -> Result<SearchReport> {
        let mut nodes = vec![PartialAssignment::new(self.fe.level)];
        let mut counts = Vec::new();
        let mut status = SearchStatus::SurvivorsFound;
        for (i, &level) in self.plan.levels.iter().enumerate() {
            let rels = self.relations_for(i);
            let kids: Vec<PartialAssignment> =
                nodes.iter().map(|n| children(n, level)).collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
            let keep = kids.par_iter().map(|k| prune_test(k, &rels)).collect::<Result<Vec<bool>>>()?;
            let mut next: Vec<PartialAssignment> =
                kids.into_iter().zip(keep).filter(|(_, k)| *k).map(|(n, _)| n).collect();
            next.sort();
            counts.push(next.len());
            progress(i, level, next.len());
            nodes = next;
            if nodes.is_empty() {
                status = SearchStatus::Eliminated;
                break;
            }
            if nodes.len() > self.cfg.node_budget {
                status = SearchStatus::Inconclusive;
                break;
            }
        }
        let survivors = if status == SearchStatus::SurvivorsFound { self.survivors(&nodes)? } else { Vec::new() };
        let mut relations_used: Vec<String> =
            self.level_relations.iter().chain(&self.global).map(|r| r.provenance.clone()).collect();
        relations_used.dedup();
        Ok(SearchReport {
            level: self.fe.level,
            sign: self.fe.sign,
            levels: self.plan.levels.iter().map(|l| l.to_string()).collect(),
            counts,
            status,
            survivors,
            relations_used,
        })
    }

    /// Groups surviving nodes by their coefficient prefix, in order of first appearance.
    fn survivors(&self, nodes: &[PartialAssignment]) -> Result<Vec<Survivor>> {
        let s = Complex64::new(0.5, self.cfg.recheck_height);
        let tests = self.cfg.grid.tests_at(s.im, self.fe.sign);
        let wvs = self.engine.weight_vectors(s, &tests, &self.fe, self.cfg.horizon)?;
        let fresh = relations_at(&wvs)?;
        let checked = nodes
            .par_iter()
            .map(|n| {
                let table = CoefficientTable::<T>::new(n, self.cfg.report_prefix.max(1))?;
                let a = table
                    .numerators
                    .iter()
                    .map(|x| x.ok_or_else(|| Error::InvalidArgument("survivor prefix is not determined".into())))
                    .collect::<Result<Vec<i128>>>()?;
                Ok((a, prune_test(n, &fresh)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out: Vec<Survivor> = Vec::new();
        for (n, (a, ok)) in nodes.iter().zip(checked) {
            match out.iter_mut().find(|s| s.a == a) {
                Some(s) => {
                    s.assignments += 1;
                    s.rechecked |= ok;
                }
                None => out.push(Survivor { factors: n.entries.clone(), a, assignments: 1, rechecked: ok }),
            }
        }
        Ok(out)
    }

    /// The node following `oracle` after each level, and whether it is kept there.
    pub fn track(&self, oracle: &OracleLFunction) -> Result<Vec<bool>> {
        if (oracle.level, oracle.sign) != (self.fe.level, self.fe.sign) {
            return Err(Error::InvalidArgument("oracle does not match the functional equation".into()));
        }
        let mut node = PartialAssignment::new(self.fe.level);
        let mut out = Vec::new();
        for (i, &level) in self.plan.levels.iter().enumerate() {
            let p = level.prime();
            node = match level {
                Level::PrimeCoefficient(p) => node.with_coefficient(p, oracle.a_p(p))?,
                _ => node.with_factor(oracle.factors[&p].clone())?,
            };
            out.push(prune_test(&node, &self.relations_for(i))?);
        }
        Ok(out)
    }
}

/// Builds the relations for `(N, epsilon)` and runs the search.
pub fn search<T: Real>(fe: FunctionalEquationParams<T>, cfg: SearchConfig) -> Result<SearchReport> {
    PreparedSearch::new(fe, cfg)?.run()
}

/// The local factor a survivor assigns at `p`, when complete.
pub fn survivor_factor(s: &Survivor, p: u64) -> Option<&LocalFactor> {
    match s.factors.get(&p) {
        Some(PrimeData::Factor(f)) => Some(f),
        _ => None,
    }
}
