//! The default family of relations: differences between test functions at a
//! common point, plus phase relations on the critical line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::afe::{AfeEngine, TestFunction, WeightVector};
use crate::error::{Error, Result};
use crate::relation::{build_difference_relation, build_phase_relation, LinearRelation};
use crate::scalar::Real;
use crate::types::{FunctionalEquationParams, Sign};

/// Points `s = 1/2 + it` and test functions combined into a relation basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationGrid {
    pub heights: Vec<f64>,
    pub tests: Vec<TestFunction>,
}

impl Default for RelationGrid {
    fn default() -> Self {
        RelationGrid { heights: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], tests: TestFunction::default_grid() }
    }
}

impl RelationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.heights.is_empty() || self.tests.len() < 2 {
            return Err(Error::Config("relation grid needs a height and two test functions".into()));
        }
        if let Some(g) = self.tests.iter().find(|g| !g.is_admissible()) {
            return Err(Error::Config(format!("test function {g} is not admissible")));
        }
        if self.heights.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("heights must be finite".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.heights.iter().map(|&t| Complex64::new(0.5, t)).collect()
    }

    /// Test functions used at height `t`. At `s = 1/2` with sign `-1`, the weights
    /// of a real test function vanish identically, so those are left out.
    pub fn tests_at(&self, t: f64, sign: Sign) -> Vec<TestFunction> {
        self.tests.iter().copied().filter(|g| !(t == 0.0 && sign == Sign::Minus && g.is_real())).collect()
    }
}

/// Relations obtained from the weight vectors at a single point.
pub fn relations_at<T: Real>(wvs: &[WeightVector<T>]) -> Result<Vec<LinearRelation<T>>> {
    let mut out = Vec::new();
    for w in &wvs[1..] {
        out.extend(build_difference_relation(&wvs[0], w)?);
    }
    for w in wvs {
        out.extend(build_phase_relation(w)?);
    }
    Ok(out)
}

/// Every relation of the grid for the given functional equation.
pub fn build_basis<T: Real>(
    engine: &AfeEngine<T>,
    fe: &FunctionalEquationParams<T>,
    grid: &RelationGrid,
    m: usize,
) -> Result<Vec<LinearRelation<T>>> {
    grid.validate()?;
    let mut out = Vec::new();
    for s in grid.points() {
        let tests = grid.tests_at(s.im, fe.sign);
        if tests.len() < 2 {
            continue;
        }
        let wvs = engine.weight_vectors(s, &tests, fe, m)?;
        out.extend(relations_at(&wvs)?);
    }
    Ok(out)
}
