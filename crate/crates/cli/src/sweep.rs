//! Grid sweeps.
//!
//! A grid document lists cell groups:
//!
//! ```json
//! {"cells": [{"h": 2, "m": "2..4", "n": "2m..2m+6:2", "lambda": 1, "r": "ones", "seeds": 20}]}
//! ```
//!
//! `h`, `m`, `n` and `lambda` take an integer, a list, or a range string
//! `a..b[:step]` (inclusive) whose ends are sums of integers and multiples
//! of `m` and `h`, e.g. `2m-1` or `2*m-1`. `seeds` is a count (seeds `0..count`) or a list.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use hyperfactor_core::combinatorics::bound_holds;
use hyperfactor_core::generate::{random_instance, RPattern};
use hyperfactor_core::model::{is_admissible, Parameters};
use hyperfactor_core::pipeline::{extend, ExtendError, ExtendOptions};
use hyperfactor_core::verify::verify_certificate;

use crate::{fail, read, write_output, EXIT_FAILURE, EXIT_INVALID_INPUT, EXIT_OK};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub cells: Vec<CellGroup>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellGroup {
    pub h: IntSpec,
    pub m: IntSpec,
    pub n: IntSpec,
    #[serde(default = "one")]
    pub lambda: IntSpec,
    #[serde(default = "ones")]
    pub r: String,
    pub seeds: SeedSpec,
}

fn one() -> IntSpec {
    IntSpec::One(1)
}

fn ones() -> String {
    "ones".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum IntSpec {
    One(i64),
    Many(Vec<i64>),
    Range(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

/// Evaluates `3`, `2m`, `m`, `2m+6`, `h-1+m` and the like.
fn eval_expr(expr: &str, m: Option<i64>, h: Option<i64>) -> Result<i64, String> {
    let expr: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if expr.is_empty() {
        return Err("empty expression".into());
    }
    let mut total = 0i64;
    let mut rest = expr.as_str();
    let mut sign = 1i64;
    if let Some(stripped) = rest.strip_prefix('-') {
        sign = -1;
        rest = stripped;
    }
    loop {
        let end = rest.find(['+', '-']).unwrap_or(rest.len());
        let term = &rest[..end];
        let digits = term.trim_end_matches(['m', 'h']).trim_end_matches('*');
        let coeff = if digits.is_empty() {
            1
        } else {
            digits.parse::<i64>().map_err(|_| format!("bad term {term:?} in {expr:?}"))?
        };
        let value = match term[digits.len()..].trim_start_matches('*') {
            "" => coeff,
            "m" => coeff * m.ok_or_else(|| format!("{expr:?} refers to m here"))?,
            "h" => coeff * h.ok_or_else(|| format!("{expr:?} refers to h here"))?,
            _ => return Err(format!("bad term {term:?} in {expr:?}")),
        };
        total += sign * value;
        if end == rest.len() {
            return Ok(total);
        }
        sign = if rest.as_bytes()[end] == b'+' { 1 } else { -1 };
        rest = &rest[end + 1..];
    }
}

impl IntSpec {
    pub fn expand(&self, m: Option<i64>, h: Option<i64>) -> Result<Vec<i64>, String> {
        match self {
            IntSpec::One(v) => Ok(vec![*v]),
            IntSpec::Many(v) => Ok(v.clone()),
            IntSpec::Range(s) => {
                let (range, step) = match s.split_once(':') {
                    Some((r, st)) => (r, st.trim().parse::<i64>().map_err(|_| format!("bad step in {s:?}"))?),
                    None => (s.as_str(), 1),
                };
                if step <= 0 {
                    return Err(format!("step must be positive in {s:?}"));
                }
                match range.split_once("..") {
                    Some((lo, hi)) => {
                        let (lo, hi) = (eval_expr(lo, m, h)?, eval_expr(hi, m, h)?);
                        Ok((lo..=hi).step_by(step as usize).collect())
                    }
                    None => Ok(vec![eval_expr(range, m, h)?]),
                }
            }
        }
    }
}

impl SeedSpec {
    fn expand(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(c) => (0..*c).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub h: i64,
    pub m: i64,
    pub n: i64,
    pub lambda: i64,
    pub r: String,
    pub seed: u64,
}

pub fn expand_grid(grid: &Grid) -> Result<Vec<Cell>, String> {
    let mut cells = Vec::new();
    for group in &grid.cells {
        for h in group.h.expand(None, None)? {
            for m in group.m.expand(None, Some(h))? {
                for n in group.n.expand(Some(m), Some(h))? {
                    for lambda in group.lambda.expand(Some(m), Some(h))? {
                        for seed in group.seeds.expand() {
                            cells.push(Cell { h, m, n, lambda, r: group.r.clone(), seed });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub cell: Cell,
    pub admissible: bool,
    pub bound: bool,
    pub outcome: &'static str,
    pub verified: Option<bool>,
    pub millis: u128,
}

pub const COLUMNS: [&str; 11] =
    ["h", "m", "n", "lambda", "r_pattern", "seed", "admissible", "bound", "outcome", "verified", "millis"];

fn outcome_of(err: &ExtendError) -> &'static str {
    match err {
        ExtendError::Inadmissible(_) => "inadmissible",
        ExtendError::BoundViolated { .. } => "bound_violation",
        ExtendError::InvalidInstance(_) => "invalid_instance",
        ExtendError::GreedyStuck { .. } => "greedy_stuck",
        ExtendError::NegativeAlphaHCount { .. } => "negative_alpha_h",
        ExtendError::NonIntegerQuota { .. } => "non_integer_quota",
        ExtendError::Infeasible(_) => "infeasible",
        ExtendError::Internal(_) => "internal_error",
    }
}

pub fn run_cell(cell: &Cell, force: bool) -> Row {
    let start = Instant::now();
    let mut row = Row { cell: cell.clone(), admissible: false, bound: false, outcome: "", verified: None, millis: 0 };
    let small = |v: i64| u32::try_from(v).ok();
    let (Some(n), Some(m), Some(h), Ok(lambda)) = (small(cell.n), small(cell.m), small(cell.h), u64::try_from(cell.lambda))
    else {
        row.outcome = "invalid_parameters";
        return row;
    };
    if h < 2 || m < h || n <= m || lambda == 0 {
        row.outcome = "invalid_parameters";
        return row;
    }
    row.bound = bound_holds(n as u64, m as u64, h as u64);
    let params = match cell.r.parse::<RPattern>() {
        Err(_) => {
            row.outcome = "invalid_parameters";
            return row;
        }
        Ok(pattern) => match pattern.resolve(n, h, lambda) {
            Err(_) => {
                row.outcome = "inadmissible";
                return row;
            }
            Ok(r) => match Parameters::new(n, m, h, lambda, r) {
                Ok(p) => p,
                Err(_) => {
                    row.outcome = "invalid_parameters";
                    return row;
                }
            },
        },
    };
    row.admissible = is_admissible(&params);
    if !row.admissible {
        row.outcome = "inadmissible";
        return row;
    }
    if !row.bound && !force {
        row.outcome = "bound_violation";
        return row;
    }
    let inst = match random_instance(&params, cell.seed) {
        Ok(inst) => inst,
        Err(_) => {
            row.outcome = "generation_failed";
            return row;
        }
    };
    match extend(&inst, &ExtendOptions { force, ..Default::default() }) {
        Ok(ext) => {
            row.outcome = "ok";
            row.verified = Some(verify_certificate(&ext.certificate, &inst).pass);
        }
        Err(e) => row.outcome = outcome_of(&e),
    }
    row.millis = start.elapsed().as_millis();
    row
}

/// Runs every cell on `jobs` workers; rows come back in grid order.
pub fn run_grid(cells: &[Cell], jobs: usize, force: bool) -> Result<Vec<Row>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(|| cells.par_iter().map(|c| run_cell(c, force)).collect()))
}

pub fn to_csv(rows: &[Row], timing: bool) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(|e| e.to_string())?;
    for row in rows {
        let c = &row.cell;
        let verified = row.verified.map(|v| v.to_string()).unwrap_or_default();
        let millis = if timing { row.millis } else { 0 };
        w.write_record([
            c.h.to_string(),
            c.m.to_string(),
            c.n.to_string(),
            c.lambda.to_string(),
            c.r.clone(),
            c.seed.to_string(),
            row.admissible.to_string(),
            row.bound.to_string(),
            row.outcome.to_string(),
            verified,
            millis.to_string(),
        ])
        .map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

pub fn cmd_sweep(path: &Path, jobs: usize, force: bool, no_timing: bool, output: Option<&Path>) -> Result<i32, i32> {
    let grid: Grid = serde_json::from_str(&read(path)?).map_err(|e| fail(EXIT_INVALID_INPUT, format!("grid: {e}")))?;
    let cells = expand_grid(&grid).map_err(|e| fail(EXIT_INVALID_INPUT, format!("grid: {e}")))?;
    let rows = run_grid(&cells, jobs, force).map_err(|e| fail(EXIT_FAILURE, e))?;
    let text = to_csv(&rows, !no_timing).map_err(|e| fail(EXIT_FAILURE, e))?;
    write_output(output, &text)?;
    Ok(EXIT_OK)
}
