//! Run configuration, read from a TOML file.
//!
//! The file is located by `--config`, then by the `LSEARCH_CONFIG` environment
//! variable; without either, built-in defaults apply. Every key is optional.
//!
//! ```toml
//! precision_bits = 300
//! horizon = 1000
//! commit_bound = 97
//! square_primes = [5, 7]
//! heights = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
//! tests = ["0,0", "1,0", "-1,0", "0.5i,0", "0.75i,0", "0,0.125", "1,0.125", "-1,0.125", "0.5i,0.125", "0.75i,0.125"]
//! safety = 10.0
//! node_budget = 1000000
//! output_dir = "out"
//!
//! [[curves]]
//! label = "11a1"
//! a = [0, -1, 1, -10, -20]
//! conductor = 11
//! root_number = 1
//! ```

use std::path::{Path, PathBuf};

use lsearch::afe::{AfeConfig, TestFunction};
use lsearch::basis::RelationGrid;
use lsearch::oracle::{builtin_curves, EllipticCurveData};
use lsearch::search::SearchConfig;
use lsearch::types::Sign;
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_ENV: &str = "LSEARCH_CONFIG";

#[derive(Clone, Debug, Deserialize)]
pub struct CurveEntry {
    pub label: String,
    pub a: [i64; 5],
    pub conductor: u64,
    pub root_number: i64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub horizon: usize,
    pub commit_bound: u64,
    pub square_primes: Vec<u64>,
    pub heights: Vec<f64>,
    pub tests: Vec<String>,
    pub safety: f64,
    pub node_budget: usize,
    pub output_dir: PathBuf,
    pub curves: Vec<CurveEntry>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let search = SearchConfig::default();
        RunConfig {
            precision_bits: lsearch::scalar::DEFAULT_PRECISION_BITS,
            horizon: search.horizon,
            commit_bound: search.commit_bound,
            square_primes: search.square_primes,
            heights: search.grid.heights,
            tests: search.grid.tests.iter().map(|g| g.to_string()).collect(),
            safety: search.afe.safety,
            node_budget: search.node_budget,
            output_dir: PathBuf::from("out"),
            curves: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Loads `path`, else the file named by `LSEARCH_CONFIG`, else the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let cfg = match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.precision_bits < 128 {
            return Err(CliError::Config("precision_bits must be at least 128".into()));
        }
        if self.horizon < 100 {
            return Err(CliError::Config("horizon must be at least 100".into()));
        }
        if !(self.safety >= 1.0) {
            return Err(CliError::Config("safety must be at least 1".into()));
        }
        self.grid()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.curve_list()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<RelationGrid, CliError> {
        let tests = self
            .tests
            .iter()
            .map(|s| s.parse::<TestFunction>().map_err(|e| CliError::Config(format!("test function {s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RelationGrid { heights: self.heights.clone(), tests })
    }

    pub fn search_config(&self) -> Result<SearchConfig, CliError> {
        Ok(SearchConfig {
            horizon: self.horizon,
            commit_bound: self.commit_bound,
            square_primes: self.square_primes.clone(),
            grid: self.grid()?,
            afe: AfeConfig { safety: self.safety, ..AfeConfig::default() },
            node_budget: self.node_budget,
            ..SearchConfig::default()
        })
    }

    /// Built-in curves followed by the configured ones; later entries win.
    pub fn curve_list(&self) -> Result<Vec<EllipticCurveData>, CliError> {
        let mut out = builtin_curves();
        for c in &self.curves {
            let sign = Sign::from_int(c.root_number).map_err(|e| CliError::Config(e.to_string()))?;
            let curve = EllipticCurveData::new(&c.label, c.a, c.conductor, sign)
                .map_err(|e| CliError::Config(e.to_string()))?;
            out.retain(|x| x.label != c.label);
            out.push(curve);
        }
        Ok(out)
    }

    pub fn curve(&self, label: &str) -> Result<EllipticCurveData, CliError> {
        self.curve_list()?
            .into_iter()
            .find(|c| c.label == label)
            .ok_or_else(|| CliError::Config(format!("unknown curve label {label:?}")))
    }
}
