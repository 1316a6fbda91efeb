//! The amalgamated hypergraph: all new vertices merged into one vertex
//! `alpha`, with edges that may contain `alpha` several times.
//!
//! Coloring proceeds level by level. Level `i` holds the classes with `i`
//! copies of `alpha`; levels `1..h` are colored greedily under the degree
//! caps `r_j`, and the single level-`h` class gets its counts from the
//! regularity quota of each color.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::combinatorics::{binom, binom_u64};
use crate::model::{
    admissibility_violation, validate_instance, EdgeClass, Inadmissible, Instance, Parameters,
    ValidationError, Vertex,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmalgamError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("inadmissible parameters: {0}")]
    Inadmissible(#[from] Inadmissible),
    #[error("no color fits a copy of {support:?} + alpha^{level}")]
    GreedyStuck { support: Vec<Vertex>, level: u32 },
    #[error("alpha^h quota of color {color} is negative ({value})")]
    NegativeAlphaHCount { color: usize, value: i128 },
    #[error("r_{color} * n is not divisible by h")]
    NonIntegerQuota { color: usize },
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("a count does not fit in 64 bits")]
    Overflow,
}

/// `(support, alpha power)`; ordered lexicographically by support first.
pub type ClassKey = (Vec<Vertex>, u32);

/// Per-color degrees of the ordinary vertices and of `alpha`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    /// Indexed by vertex id (row 0 unused), then color - 1.
    vertex: Vec<Vec<u64>>,
    /// Occurrences of `alpha` per color, counted with multiplicity.
    alpha: Vec<u64>,
}

impl DegreeTable {
    fn new(vertices: u32, k: usize) -> Self {
        DegreeTable { vertex: vec![vec![0; k]; vertices as usize + 1], alpha: vec![0; k] }
    }

    /// Degree of `v` in color `j` (0-based color).
    pub fn vertex(&self, v: Vertex, j: usize) -> u64 {
        self.vertex[v as usize][j]
    }

    pub fn vertex_row(&self, v: Vertex) -> &[u64] {
        &self.vertex[v as usize]
    }

    pub fn alpha(&self, j: usize) -> u64 {
        self.alpha[j]
    }

    pub fn alpha_row(&self) -> &[u64] {
        &self.alpha
    }

    pub(crate) fn add(&mut self, support: &[Vertex], alpha: u32, j: usize, copies: u64) {
        for &v in support {
            self.vertex[v as usize][j] += copies;
        }
        self.alpha[j] += alpha as u64 * copies;
    }

    pub(crate) fn move_alpha_to(&mut self, v: Vertex, j: usize, copies: u64) {
        self.alpha[j] -= copies;
        self.vertex[v as usize][j] += copies;
    }
}

/// `t[i][j]`: copies with `i` occurrences of alpha colored `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub t: Vec<Vec<u64>>,
}

impl CountTable {
    pub fn level(&self, i: usize) -> &[u64] {
        &self.t[i]
    }
}

/// The colored amalgamated hypergraph after `s` of the `n - m` new vertices
/// have been split off; `alpha` stands for the remaining `q = n - m - s`.
#[derive(Debug, Clone)]
pub struct AmalgamState {
    params: Parameters,
    s: u32,
    classes: BTreeMap<ClassKey, EdgeClass>,
    degrees: DegreeTable,
    /// Greedy levels finished so far; level `i` may start only at `i - 1`.
    levels_done: u32,
    level_h_done: bool,
}

impl AmalgamState {
    pub fn params(&self) -> &Parameters {
        &self.params
    }

    /// Vertices detached so far.
    pub fn detached(&self) -> u32 {
        self.s
    }

    /// Weight of alpha: how many vertices it still stands for.
    pub fn q(&self) -> u32 {
        self.params.n() - self.params.m() - self.s
    }

    /// Highest ordinary vertex id present.
    pub fn max_vertex(&self) -> Vertex {
        self.params.m() + self.s
    }

    pub fn classes(&self) -> impl Iterator<Item = &EdgeClass> {
        self.classes.values()
    }

    pub fn class(&self, key: &ClassKey) -> Option<&EdgeClass> {
        self.classes.get(key)
    }

    pub fn degrees(&self) -> &DegreeTable {
        &self.degrees
    }

    pub fn levels_done(&self) -> u32 {
        self.levels_done
    }

    pub fn is_fully_colored(&self) -> bool {
        self.level_h_done && self.classes.values().all(|c| c.uncolored == 0)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut BTreeMap<ClassKey, EdgeClass>, &mut DegreeTable, &mut u32) {
        (&mut self.classes, &mut self.degrees, &mut self.s)
    }

    pub(crate) fn into_classes(self) -> (Parameters, Vec<EdgeClass>) {
        (self.params, self.classes.into_values().collect())
    }

    /// `lambda * C(q, i)`, the multiplicity every level-`i` class carries.
    pub fn class_multiplicity(&self, i: u32) -> Result<u64, AmalgamError> {
        let c = binom_u64(self.q() as u64, i as i64).ok_or(AmalgamError::Overflow)?;
        c.checked_mul(self.params.lambda()).ok_or(AmalgamError::Overflow)
    }
}

/// Adds `alpha` and every uncolored class `(X, i)` with `|X| = h - i`,
/// `X` a subset of `[1, m]`, and multiplicity `lambda * C(n - m, i)`.
pub fn build_amalgam(inst: &Instance) -> Result<AmalgamState, AmalgamError> {
    validate_instance(inst)?;
    let params = inst.params().clone();
    if let Some(why) = admissibility_violation(&params) {
        return Err(why.into());
    }
    let (m, h, k) = (params.m(), params.h(), params.k());

    let mut degrees = DegreeTable::new(params.n(), k);
    let mut classes = BTreeMap::new();
    for class in inst.classes() {
        for (j, &count) in class.color_counts.iter().enumerate() {
            degrees.add(&class.support, 0, j, count);
        }
        classes.insert((class.support.clone(), 0), class.clone());
    }

    let mut state = AmalgamState { params, s: 0, classes: BTreeMap::new(), degrees, levels_done: 0, level_h_done: false };
    for i in 1..=h {
        let copies = state.class_multiplicity(i)?;
        if copies == 0 {
            continue;
        }
        for support in (1..=m).combinations((h - i) as usize) {
            let class = EdgeClass { support: support.clone(), alpha: i, color_counts: vec![0; k], uncolored: copies };
            classes.insert((support, i), class);
        }
    }
    state.classes = classes;
    Ok(state)
}

/// Colors every copy at `level` greedily, keeping `deg_j(x) <= r_j`.
///
/// Classes are taken in support order and each class is poured into the
/// lowest colors with spare capacity on all of its vertices. A seeded
/// generator shuffles both the class order and the color preference.
pub fn greedy_color_level(
    state: &mut AmalgamState,
    level: u32,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(), AmalgamError> {
    let h = state.params.h();
    if !(1..h).contains(&level) || state.levels_done + 1 != level {
        return Err(AmalgamError::InternalInvariantViolation(format!(
            "greedy level {level} requested after {} levels",
            state.levels_done
        )));
    }
    let k = state.params.k();
    let r = state.params.r().to_vec();

    let mut keys: Vec<ClassKey> = state.classes.keys().filter(|key| key.1 == level).cloned().collect();
    if let Some(rng) = rng.as_deref_mut() {
        keys.shuffle(rng);
    }
    let mut colors: Vec<usize> = (0..k).collect();

    for key in keys {
        if let Some(rng) = rng.as_deref_mut() {
            colors.shuffle(rng);
        }
        let class = state.classes.get_mut(&key).expect("key listed above");
        for &j in &colors {
            if class.uncolored == 0 {
                break;
            }
            let residual = class
                .support
                .iter()
                .map(|&x| r[j] - state.degrees.vertex(x, j))
                .min()
                .expect("levels below h have nonempty support");
            let take = residual.min(class.uncolored);
            if take > 0 {
                class.uncolored -= take;
                class.color_counts[j] += take;
                state.degrees.add(&class.support, level, j, take);
            }
        }
        if class.uncolored > 0 {
            return Err(AmalgamError::GreedyStuck { support: key.0, level });
        }
    }
    state.levels_done = level;
    Ok(())
}

/// Confirms every old vertex reached `deg_j(x) = r_j` and tallies
/// `t[i][j]` for `i < h`.
pub fn finish_levels(state: &AmalgamState) -> Result<CountTable, AmalgamError> {
    let p = &state.params;
    let (m, h, k) = (p.m(), p.h(), p.k());
    if state.levels_done + 1 != h {
        return Err(AmalgamError::InternalInvariantViolation(format!(
            "only {} of {} greedy levels done",
            state.levels_done,
            h - 1
        )));
    }
    for x in 1..=m {
        for (j, &rj) in p.r().iter().enumerate() {
            let d = state.degrees.vertex(x, j);
            if d != rj {
                return Err(AmalgamError::InternalInvariantViolation(format!(
                    "vertex {x} has degree {d} in color {}, expected {rj}",
                    j + 1
                )));
            }
        }
    }

    let mut t = vec![vec![0u64; k]; h as usize + 1];
    for class in state.classes.values() {
        if class.alpha < h {
            for (slot, &c) in t[class.alpha as usize].iter_mut().zip(&class.color_counts) {
                *slot += c;
            }
        }
    }
    // Each level-i copy covers h - i old vertices.
    for (j, &rj) in p.r().iter().enumerate() {
        let covered: u128 = (0..h).map(|i| (h - i) as u128 * t[i as usize][j] as u128).sum();
        if covered != rj as u128 * m as u128 {
            return Err(AmalgamError::InternalInvariantViolation(format!(
                "color {} covers old vertices {covered} times, expected r_j * m",
                j + 1
            )));
        }
    }
    Ok(CountTable { t })
}

/// Colors the pure-alpha class: `t[h][j] = r_j n / h - sum_{i<h} t[i][j]`.
pub fn assign_level_h(state: &mut AmalgamState, table: &mut CountTable) -> Result<(), AmalgamError> {
    let p = state.params.clone();
    let (n, m, h) = (p.n() as u128, p.m() as u128, p.h());
    if state.levels_done + 1 != h || state.level_h_done {
        return Err(AmalgamError::InternalInvariantViolation("alpha^h assigned out of order".into()));
    }

    let mut quota = Vec::with_capacity(p.k());
    for (j, &rj) in p.r().iter().enumerate() {
        let edges_in_color = rj as u128 * n;
        if edges_in_color % h as u128 != 0 {
            return Err(AmalgamError::NonIntegerQuota { color: j + 1 });
        }
        let placed: u128 = (0..h as usize).map(|i| table.t[i][j] as u128).sum();
        let value = (edges_in_color / h as u128) as i128 - placed as i128;
        if value < 0 {
            return Err(AmalgamError::NegativeAlphaHCount { color: j + 1, value });
        }
        quota.push(u64::try_from(value).map_err(|_| AmalgamError::Overflow)?);
    }

    let expected = binom((n - m) as u64, h as i64) * p.lambda();
    let total: u128 = quota.iter().map(|&x| x as u128).sum();
    if Some(total) != num_traits::ToPrimitive::to_u128(&expected) {
        return Err(AmalgamError::InternalInvariantViolation(format!(
            "alpha^h quotas sum to {total}, expected {expected}"
        )));
    }

    if total > 0 {
        let class = state
            .classes
            .get_mut(&(Vec::new(), h))
            .ok_or_else(|| AmalgamError::InternalInvariantViolation("missing alpha^h class".into()))?;
        class.color_counts.clone_from(&quota);
        class.uncolored = 0;
        for (j, &c) in quota.iter().enumerate() {
            state.degrees.add(&[], h, j, c);
        }
    }
    table.t[h as usize] = quota;
    state.level_h_done = true;

    for (j, &rj) in p.r().iter().enumerate() {
        if state.degrees.alpha(j) as u128 != rj as u128 * (n - m) {
            return Err(AmalgamError::InternalInvariantViolation(format!(
                "alpha has degree {} in color {}, expected r_j (n - m)",
                state.degrees.alpha(j),
                j + 1
            )));
        }
    }
    Ok(())
}

/// Runs all greedy levels, the tally and the alpha^h assignment.
pub fn color_amalgam(state: &mut AmalgamState, mut rng: Option<&mut ChaCha8Rng>) -> Result<CountTable, AmalgamError> {
    for level in 1..state.params.h() {
        greedy_color_level(state, level, rng.as_deref_mut())?;
    }
    let mut table = finish_levels(state)?;
    assign_level_h(state, &mut table)?;
    Ok(table)
}
