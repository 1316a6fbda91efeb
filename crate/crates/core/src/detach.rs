//! Splitting alpha back into `n - m` distinct vertices.
//!
//! Each step detaches one vertex. A class `(S, i)` with multiplicity
//! `lambda C(q, i)` hands exactly `lambda C(q-1, i-1)` of its copies to the
//! new vertex (Pascal's rule), so only the color mix of the donated copies
//! is free. Choosing it is a bounded transportation problem: rows are
//! classes, columns are colors, the new vertex must receive `r_j` copies of
//! color `j`, and a class cannot donate more copies of a color than it has.
//! The fractional plan `m_cj * i_c / q` is always feasible, so an integral
//! one exists and max-flow finds it.

use std::collections::VecDeque;

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::amalgam::{AmalgamState, ClassKey};
use crate::combinatorics::{binom, binom_u64};
use crate::model::{Certificate, EdgeClass, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetachError {
    #[error("state not ready for detachment: {0}")]
    NotReady(String),
    #[error("transportation problem infeasible at q = {q}: {problem}")]
    Infeasible { q: u32, problem: String },
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("a count does not fit in 64 bits")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransportationProblem {
    /// Weight of alpha before the step.
    pub q: u32,
    pub rows: Vec<ClassKey>,
    /// Alpha power of each row's class.
    pub alpha: Vec<u32>,
    /// Copies each row must donate.
    pub supply: Vec<u64>,
    /// Copies of each color the new vertex must receive.
    pub demand: Vec<u64>,
    /// `cap[c][j]`: copies of row `c` currently colored `j`.
    pub cap: Vec<Vec<u64>>,
}

/// Integral donation matrix: `x[c][j]` copies of row `c`, color `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetachPlan {
    pub x: Vec<Vec<u64>>,
}

impl DetachPlan {
    pub fn total(&self) -> u64 {
        self.x.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSummary {
    /// Vertices detached after this step.
    pub s: u32,
    /// Weight of alpha before this step.
    pub q: u32,
    /// Id given to the new vertex.
    pub vertex: Vertex,
    pub flow_value: u64,
}

fn overflow<T>(v: Option<T>) -> Result<T, DetachError> {
    v.ok_or(DetachError::Overflow)
}

/// Checks `deg_j(alpha) = r_j q` and that every class `(S, i)` carries
/// `lambda C(q, i)` fully colored copies.
pub fn check_state(state: &AmalgamState) -> Result<(), DetachError> {
    let p = state.params();
    let q = state.q() as u128;
    for (j, &rj) in p.r().iter().enumerate() {
        let d = state.degrees().alpha(j);
        if d as u128 != rj as u128 * q {
            return Err(DetachError::InternalInvariantViolation(format!(
                "alpha has degree {d} in color {}, expected {} * {q}",
                j + 1,
                rj
            )));
        }
    }
    for class in state.classes() {
        if class.uncolored != 0 {
            return Err(DetachError::NotReady(format!("class {:?} has uncolored copies", class.support)));
        }
        let want = binom(q as u64, class.alpha as i64) * state.params().lambda();
        if want.to_u64() != Some(class.total()) {
            return Err(DetachError::InternalInvariantViolation(format!(
                "class {:?} + alpha^{} has {} copies, expected {want}",
                class.support,
                class.alpha,
                class.total()
            )));
        }
    }
    Ok(())
}

pub fn build_transportation(state: &AmalgamState) -> Result<TransportationProblem, DetachError> {
    if !state.is_fully_colored() {
        return Err(DetachError::NotReady("amalgam is not fully colored".into()));
    }
    let q = state.q();
    if q == 0 {
        return Err(DetachError::NotReady("alpha is already fully detached".into()));
    }
    check_state(state)?;
    let p = state.params();

    let mut tp = TransportationProblem {
        q,
        rows: Vec::new(),
        alpha: Vec::new(),
        supply: Vec::new(),
        demand: p.r().to_vec(),
        cap: Vec::new(),
    };
    for class in state.classes().filter(|c| c.alpha >= 1) {
        let share = overflow(binom_u64(q as u64 - 1, class.alpha as i64 - 1))?;
        tp.rows.push((class.support.clone(), class.alpha));
        tp.alpha.push(class.alpha);
        tp.supply.push(overflow(share.checked_mul(p.lambda()))?);
        tp.cap.push(class.color_counts.clone());
    }

    let supply: u128 = tp.supply.iter().map(|&x| x as u128).sum();
    let demand: u128 = tp.demand.iter().map(|&x| x as u128).sum();
    let degree = binom(p.n() as u64 - 1, p.h() as i64 - 1) * p.lambda();
    if supply != demand || degree.to_u128() != Some(supply) {
        return Err(DetachError::InternalInvariantViolation(format!(
            "supplies {supply}, demands {demand}, lambda C(n-1, h-1) = {degree}"
        )));
    }
    Ok(tp)
}

/// Whether `x[c][j] = cap[c][j] * i_c / q` meets every row sum, column sum
/// and capacity exactly. Compared after clearing the common denominator.
pub fn fractional_witness_holds(tp: &TransportationProblem) -> bool {
    let q = tp.q as u128;
    let rows_ok = tp.cap.iter().zip(&tp.alpha).zip(&tp.supply).all(|((caps, &i), &d)| {
        let total: u128 = caps.iter().map(|&c| c as u128).sum();
        (i as u128) <= q && total * i as u128 == d as u128 * q
    });
    let cols_ok = tp.demand.iter().enumerate().all(|(j, &rj)| {
        let weighted: u128 = tp.cap.iter().zip(&tp.alpha).map(|(caps, &i)| caps[j] as u128 * i as u128).sum();
        weighted == rj as u128 * q
    });
    rows_ok && cols_ok
}

/// Exact row sums, column sums and capacities.
pub fn check_plan(tp: &TransportationProblem, plan: &DetachPlan) -> Result<(), String> {
    if plan.x.len() != tp.rows.len() {
        return Err(format!("plan has {} rows, problem {}", plan.x.len(), tp.rows.len()));
    }
    let k = tp.demand.len();
    let mut cols = vec![0u128; k];
    for (c, row) in plan.x.iter().enumerate() {
        if row.len() != k {
            return Err(format!("row {c} has {} entries for {k} colors", row.len()));
        }
        let mut sum = 0u128;
        for (j, &x) in row.iter().enumerate() {
            if x > tp.cap[c][j] {
                return Err(format!("cell ({c}, {j}) = {x} exceeds capacity {}", tp.cap[c][j]));
            }
            sum += x as u128;
            cols[j] += x as u128;
        }
        if sum != tp.supply[c] as u128 {
            return Err(format!("row {c} sums to {sum}, supply {}", tp.supply[c]));
        }
    }
    for (j, (&got, &want)) in cols.iter().zip(&tp.demand).enumerate() {
        if got != want as u128 {
            return Err(format!("color {} receives {got}, demand {want}", j + 1));
        }
    }
    Ok(())
}

/// Residual network for Dinic's algorithm.
struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<u64>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork { adj: vec![Vec::new(); nodes], to: Vec::new(), residual: Vec::new() }
    }

    /// Returns the index of the forward arc; its reverse is `index ^ 1`.
    fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let id = self.to.len();
        self.adj[from].push(id);
        self.to.push(to);
        self.residual.push(cap);
        self.adj[to].push(id + 1);
        self.to.push(from);
        self.residual.push(0);
        id
    }

    fn levels(&self, source: usize, sink: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.residual[e] > 0 && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        (level[sink] != u32::MAX).then_some(level)
    }

    fn augment(&mut self, u: usize, sink: usize, limit: u64, level: &[u32], next: &mut [usize]) -> u64 {
        if u == sink {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let v = self.to[e];
            if self.residual[e] > 0 && level[v] == level[u] + 1 {
                let pushed = self.augment(v, sink, limit.min(self.residual[e]), level, next);
                if pushed > 0 {
                    self.residual[e] -= pushed;
                    self.residual[e ^ 1] += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, source: usize, sink: usize) -> u64 {
        let mut flow = 0;
        while let Some(level) = self.levels(source, sink) {
            let mut next = vec![0; self.adj.len()];
            loop {
                let pushed = self.augment(source, sink, u64::MAX, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
            }
        }
        flow
    }
}

/// Integral solution by max-flow on source -> rows -> colors -> sink.
/// Arcs are added in row-then-color order, which fixes the tie-breaking.
pub fn solve_transportation(tp: &TransportationProblem) -> Result<DetachPlan, DetachError> {
    let rows = tp.rows.len();
    let k = tp.demand.len();
    let source = 0;
    let sink = rows + k + 1;
    let mut net = FlowNetwork::new(rows + k + 2);
    for (c, &d) in tp.supply.iter().enumerate() {
        net.add_edge(source, 1 + c, d);
    }
    let mut cells = Vec::new();
    for (c, caps) in tp.cap.iter().enumerate() {
        for (j, &cap) in caps.iter().enumerate() {
            if cap > 0 {
                cells.push((c, j, net.add_edge(1 + c, 1 + rows + j, cap), cap));
            }
        }
    }
    for (j, &r) in tp.demand.iter().enumerate() {
        net.add_edge(1 + rows + j, sink, r);
    }

    let flow = net.max_flow(source, sink);
    let demand: u64 = tp.demand.iter().sum();
    if flow != demand {
        return Err(DetachError::Infeasible {
            q: tp.q,
            problem: serde_json::to_string(tp).unwrap_or_default(),
        });
    }
    let mut x = vec![vec![0u64; k]; rows];
    for (c, j, arc, cap) in cells {
        x[c][j] = cap - net.residual[arc];
    }
    Ok(DetachPlan { x })
}

/// Moves the donated copies onto a fresh vertex `m + s + 1`.
pub fn apply_plan(state: &mut AmalgamState, tp: &TransportationProblem, plan: &DetachPlan) -> Vertex {
    let vertex = state.max_vertex() + 1;
    let k = state.params().k();
    let (classes, degrees, s) = state.parts_mut();
    for ((support, i), row) in tp.rows.iter().zip(&plan.x) {
        if row.iter().all(|&x| x == 0) {
            continue;
        }
        let mut grown = support.clone();
        grown.push(vertex);
        let source = classes.get_mut(&(support.clone(), *i)).expect("row came from this state");
        for (count, &x) in source.color_counts.iter_mut().zip(row) {
            *count -= x;
        }
        if source.total() == 0 {
            classes.remove(&(support.clone(), *i));
        }
        let target = classes.entry((grown.clone(), i - 1)).or_insert_with(|| EdgeClass {
            support: grown,
            alpha: i - 1,
            color_counts: vec![0; k],
            uncolored: 0,
        });
        for (j, (count, &x)) in target.color_counts.iter_mut().zip(row).enumerate() {
            *count += x;
            if x > 0 {
                degrees.move_alpha_to(vertex, j, x);
            }
        }
    }
    *s += 1;
    vertex
}

/// Detaches one vertex from alpha.
pub fn detach_step(state: &mut AmalgamState) -> Result<StepSummary, DetachError> {
    let tp = build_transportation(state)?;
    if !fractional_witness_holds(&tp) {
        return Err(DetachError::InternalInvariantViolation(format!(
            "fractional witness fails at q = {}",
            tp.q
        )));
    }
    let plan = solve_transportation(&tp)?;
    check_plan(&tp, &plan).map_err(DetachError::InternalInvariantViolation)?;
    let vertex = apply_plan(state, &tp, &plan);

    for (j, &rj) in state.params().r().iter().enumerate() {
        let d = state.degrees().vertex(vertex, j);
        if d != rj {
            return Err(DetachError::InternalInvariantViolation(format!(
                "new vertex {vertex} has degree {d} in color {}, expected {rj}",
                j + 1
            )));
        }
    }
    check_state(state)?;
    Ok(StepSummary { s: state.detached(), q: tp.q, vertex, flow_value: plan.total() })
}

/// Runs every detachment step and returns the colored `lambda K_n^h`.
pub fn detach_all(mut state: AmalgamState) -> Result<(Certificate, Vec<StepSummary>), DetachError> {
    let mut steps = Vec::with_capacity(state.q() as usize);
    while state.q() > 0 {
        steps.push(detach_step(&mut state)?);
    }
    let (params, classes) = state.into_classes();
    if let Some(c) = classes.iter().find(|c| c.alpha != 0) {
        return Err(DetachError::InternalInvariantViolation(format!(
            "class {:?} still holds alpha^{}",
            c.support, c.alpha
        )));
    }
    Ok((Certificate::new(params, classes), steps))
}
