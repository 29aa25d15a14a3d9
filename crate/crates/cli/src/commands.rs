//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use log::info;
use lsearch::afe::{AfeConfig, AfeEngine, TestFunction};
use lsearch::arith::is_prime;
use lsearch::basis::build_basis;
use lsearch::local::{enumerate_bad, enumerate_good, LocalFactor};
use lsearch::oracle::{consistency_report, product_l};
use lsearch::search::{PreparedSearch, SearchReport, SearchStatus};
use lsearch::types::{FunctionalEquationParams, Sign};
use lsearch::Mp;
use num_complex::Complex64;
use serde_json::json;

use crate::{CliError, RunConfig};

pub const EXIT_SURVIVORS: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_CHECK_FAILED: u8 = 4;

fn print_json(v: &serde_json::Value) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn params(level: u64, sign: i64) -> Result<FunctionalEquationParams<Mp>, CliError> {
    Ok(FunctionalEquationParams::new(level, Sign::from_int(sign)?)?)
}

pub fn factors(prime: u64, level: u64) -> Result<ExitCode, CliError> {
    if level == 0 {
        return Err(CliError::Config("level must be positive".into()));
    }
    if !is_prime(prime) {
        return Err(lsearch::Error::NotPrime(prime).into());
    }
    let (kind, list): (&str, Vec<LocalFactor>) = if level % prime == 0 {
        ("bad", enumerate_bad(prime)?.iter().cloned().map(Into::into).collect())
    } else {
        ("good", enumerate_good(prime)?.iter().copied().map(Into::into).collect())
    };
    print_json(&json!({
        "prime": prime,
        "level": level,
        "kind": kind,
        "count": list.len(),
        "factors": list,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn parse_point(s: &str) -> Result<Complex64, CliError> {
    if let Ok(t) = s.trim().parse::<f64>() {
        return Ok(Complex64::new(0.5, t));
    }
    s.trim().parse::<Complex64>().map_err(|_| CliError::Config(format!("cannot parse point {s:?}")))
}

pub fn weights(
    cfg: &RunConfig,
    level: u64,
    sign: i64,
    s: &str,
    g: &str,
    out: &Path,
    horizon: Option<usize>,
) -> Result<ExitCode, CliError> {
    let fe = params(level, sign)?;
    let s = parse_point(s)?;
    let g: TestFunction = g.parse()?;
    let m = horizon.unwrap_or(cfg.horizon);
    let engine = AfeEngine::<Mp>::new(AfeConfig { safety: cfg.safety, ..AfeConfig::default() });
    let wv = engine.weight_vector(s, &g, &fe, m)?;
    let file = File::create(out)?;
    wv.write_csv(BufWriter::new(file))?;
    info!("wrote {m} weights to {} (accuracy {:.3e})", out.display(), wv.accuracy);
    Ok(ExitCode::SUCCESS)
}

fn run_search(cfg: &RunConfig, level: u64, sign: i64) -> Result<SearchReport, CliError> {
    let fe = params(level, sign)?;
    let t0 = Instant::now();
    let prepared = PreparedSearch::new(fe, cfg.search_config()?)?;
    info!("N = {level}, sign {sign}: {} basis relations in {:.1}s", prepared.basis.len(), t0.elapsed().as_secs_f64());
    let report =
        prepared.run_with(|_, lv, count| info!("  {lv}: {count} nodes ({:.1}s)", t0.elapsed().as_secs_f64()))?;
    Ok(report)
}

fn status_code(status: SearchStatus) -> ExitCode {
    match status {
        SearchStatus::Eliminated => ExitCode::SUCCESS,
        SearchStatus::SurvivorsFound => ExitCode::from(EXIT_SURVIVORS),
        SearchStatus::Inconclusive => ExitCode::from(EXIT_INCONCLUSIVE),
    }
}

pub fn search(cfg: &RunConfig, level: u64, sign: i64, out: Option<&Path>) -> Result<ExitCode, CliError> {
    let report = run_search(cfg, level, sign)?;
    let value = serde_json::to_value(&report)?;
    if let Some(path) = out {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &value)?;
    }
    print_json(&value)?;
    Ok(status_code(report.status))
}

pub fn oracle(
    cfg: &RunConfig,
    curve1: &str,
    curve2: &str,
    check: bool,
    horizon: Option<usize>,
) -> Result<ExitCode, CliError> {
    let (c1, c2) = (cfg.curve(curve1)?, cfg.curve(curve2)?);
    let m = horizon.unwrap_or(cfg.horizon);
    let l = product_l::<Mp>(&c1, &c2, m)?;
    let mut value = serde_json::to_value(&l)?;
    let mut code = ExitCode::SUCCESS;
    if check {
        let fe = l.fe::<Mp>()?;
        let search = cfg.search_config()?;
        let basis = build_basis(&AfeEngine::<Mp>::new(search.afe), &fe, &search.grid, m)?;
        let residual = consistency_report(&l, &basis)?;
        info!("max normalized residual over {} relations: {residual:.3e}", basis.len());
        value["check"] = json!({ "relations": basis.len(), "max_residual": residual, "passed": residual < 1.0 });
        if !(residual < 1.0) {
            code = ExitCode::from(EXIT_CHECK_FAILED);
        }
    }
    print_json(&value)?;
    Ok(code)
}

pub fn sweep(cfg: &RunConfig, from: u64, to: u64, sign: Option<i64>) -> Result<ExitCode, CliError> {
    if from == 0 || from > to {
        return Err(CliError::Config("sweep needs 1 <= from <= to".into()));
    }
    let signs: Vec<i64> = match sign {
        Some(e) => vec![e],
        None => vec![1, -1],
    };
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut rows = Vec::new();
    for level in from..=to {
        for &e in &signs {
            let report = run_search(cfg, level, e)?;
            let path = cfg.output_dir.join(format!("search_{level}_{}.json", if e > 0 { "plus" } else { "minus" }));
            serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &report)?;
            rows.push((level, e, report.status, report.survivors.len()));
        }
    }
    println!("{:>6} {:>5} {:>16} {:>9}", "N", "sign", "status", "survivors");
    for (level, e, status, n) in &rows {
        let status = serde_json::to_value(status)?.as_str().unwrap_or_default().to_string();
        println!("{level:>6} {e:>+5} {status:>16} {n:>9}");
    }
    let found: Vec<String> = rows
        .iter()
        .filter(|r| r.2 != SearchStatus::Eliminated)
        .map(|(level, e, _, _)| format!("{level}{}", if *e > 0 { "+" } else { "-" }))
        .collect();
    println!("not eliminated: {}", if found.is_empty() { "none".to_string() } else { found.join(", ") });
    Ok(ExitCode::SUCCESS)
}
