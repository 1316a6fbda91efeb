//! End-to-end extension: amalgamate, color, detach, verify.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::amalgam::{
    assign_level_h, build_amalgam, finish_levels, greedy_color_level, AmalgamError, AmalgamState, CountTable,
};
use crate::combinatorics::bound_holds;
use crate::detach::{detach_all, DetachError, StepSummary};
use crate::model::{admissibility_violation, validate_instance, Certificate, Inadmissible, Instance, ValidationError, Vertex};
use crate::verify::verify_certificate;

#[derive(Debug, Clone, Default)]
pub struct ExtendOptions {
    /// Run even when `n` is at or below the threshold; nothing is guaranteed.
    pub force: bool,
    /// Shuffle greedy class order and color preference.
    pub seed: Option<u64>,
    /// Collect per-level and per-step trace records.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "stage", rename_all = "lowercase")]
pub enum TraceRecord {
    /// Degrees of the old vertices after greedy level `i`, by vertex.
    Level { i: u32, deg: BTreeMap<Vertex, Vec<u64>> },
    Detach { s: u32, q: u32, flow_value: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtendError {
    #[error("inadmissible parameters: {0}")]
    Inadmissible(Inadmissible),
    #[error("n = {n} does not exceed the extension threshold for m = {m}, h = {h}")]
    BoundViolated { n: u32, m: u32, h: u32 },
    #[error("invalid input coloring: {0}")]
    InvalidInstance(ValidationError),
    #[error("greedy coloring stuck at {support:?} + alpha^{level}")]
    GreedyStuck { support: Vec<Vertex>, level: u32 },
    #[error("negative alpha^h quota {value} for color {color}")]
    NegativeAlphaHCount { color: usize, value: i128 },
    #[error("non-integral alpha^h quota for color {color}")]
    NonIntegerQuota { color: usize },
    #[error("{0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<AmalgamError> for ExtendError {
    fn from(e: AmalgamError) -> Self {
        match e {
            AmalgamError::Invalid(v) => ExtendError::InvalidInstance(v),
            AmalgamError::Inadmissible(i) => ExtendError::Inadmissible(i),
            AmalgamError::GreedyStuck { support, level } => ExtendError::GreedyStuck { support, level },
            AmalgamError::NegativeAlphaHCount { color, value } => ExtendError::NegativeAlphaHCount { color, value },
            AmalgamError::NonIntegerQuota { color } => ExtendError::NonIntegerQuota { color },
            other => ExtendError::Internal(other.to_string()),
        }
    }
}

impl From<DetachError> for ExtendError {
    fn from(e: DetachError) -> Self {
        match e {
            DetachError::Infeasible { .. } => ExtendError::Infeasible(e.to_string()),
            other => ExtendError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Extension {
    /// Verified certificate; `report` is always set.
    pub certificate: Certificate,
    pub counts: CountTable,
    pub steps: Vec<StepSummary>,
    pub trace: Vec<TraceRecord>,
}

/// Admissibility, threshold and input checks in command-line order.
pub fn preflight(inst: &Instance, force: bool) -> Result<(), ExtendError> {
    let p = inst.params();
    if let Some(why) = admissibility_violation(p) {
        return Err(ExtendError::Inadmissible(why));
    }
    if !force && !bound_holds(p.n() as u64, p.m() as u64, p.h() as u64) {
        return Err(ExtendError::BoundViolated { n: p.n(), m: p.m(), h: p.h() });
    }
    validate_instance(inst).map_err(ExtendError::InvalidInstance)
}

fn level_snapshot(state: &AmalgamState, i: u32) -> TraceRecord {
    let deg = (1..=state.params().m())
        .map(|v| (v, state.degrees().vertex_row(v).to_vec()))
        .collect();
    TraceRecord::Level { i, deg }
}

/// Extends `inst` to a certificate for `lambda K_n^h` and verifies it.
pub fn extend(inst: &Instance, options: &ExtendOptions) -> Result<Extension, ExtendError> {
    preflight(inst, options.force)?;
    let mut state = build_amalgam(inst)?;
    let mut rng = options.seed.map(ChaCha8Rng::seed_from_u64);
    let mut trace = Vec::new();

    for level in 1..inst.params().h() {
        greedy_color_level(&mut state, level, rng.as_mut())?;
        if options.trace {
            trace.push(level_snapshot(&state, level));
        }
    }
    let mut counts = finish_levels(&state)?;
    assign_level_h(&mut state, &mut counts)?;

    let (mut certificate, steps) = detach_all(state)?;
    if options.trace {
        trace.extend(steps.iter().map(|s| TraceRecord::Detach { s: s.s, q: s.q, flow_value: s.flow_value }));
    }
    let report = verify_certificate(&certificate, inst);
    if !report.pass {
        return Err(ExtendError::Internal(format!(
            "certificate failed verification: {}",
            serde_json::to_string(&report.failures).unwrap_or_default()
        )));
    }
    certificate.report = Some(report);
    Ok(Extension { certificate, counts, steps, trace })
}
