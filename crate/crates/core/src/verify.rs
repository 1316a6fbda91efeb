//! Independent checking of certificates, plus an exhaustive search oracle
//! for tiny instances.
//!
//! Nothing in this module looks at amalgamation or detachment state: every
//! degree and multiplicity is recounted from the certificate classes.

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binom;
use crate::model::{Certificate, EdgeClass, Instance, Vertex};

const MAX_FAILURES: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub pass: bool,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "lowercase")]
pub enum Failure {
    /// The certificate does not agree with the instance on `[1, m]`.
    Extension {
        support: Vec<Vertex>,
        expected: BTreeMap<u32, u64>,
        found: BTreeMap<u32, u64>,
        message: String,
    },
    /// Some support does not occur exactly `lambda` times.
    Completeness {
        support: Vec<Vertex>,
        expected: u64,
        found: u64,
        message: String,
    },
    /// Some vertex has the wrong degree in some color.
    Regularity {
        vertex: Vertex,
        color: u32,
        expected: u64,
        found: u64,
    },
}

impl Failure {
    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Extension { .. } => "extension",
            Failure::Completeness { .. } => "completeness",
            Failure::Regularity { .. } => "regularity",
        }
    }
}

fn sparse(counts: &[u64]) -> BTreeMap<u32, u64> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| (j as u32 + 1, c))
        .collect()
}

/// Checks that `cert` is an r-factorization of `lambda K_n^h` whose
/// restriction to `[1, m]` is exactly the coloring in `inst`.
pub fn verify_certificate(cert: &Certificate, inst: &Instance) -> VerificationReport {
    let mut failures = Vec::new();
    let mut push = |f: Failure| {
        if failures.len() < MAX_FAILURES {
            failures.push(f);
        }
    };

    let p = cert.params();
    if p != inst.params() {
        push(Failure::Extension {
            support: Vec::new(),
            expected: BTreeMap::new(),
            found: BTreeMap::new(),
            message: format!("certificate parameters ({p}) differ from the instance ({})", inst.params()),
        });
    }
    let (n, h, k) = (p.n(), p.h() as usize, p.k());

    // Per-support color tallies, recounted from scratch.
    let mut by_support: HashMap<Vec<Vertex>, Vec<u64>> = HashMap::new();
    for class in cert.classes() {
        let mut message = None;
        if class.alpha != 0 || class.uncolored != 0 {
            message = Some("class still contains the amalgamated vertex or uncolored copies");
        } else if class.color_counts.len() != k {
            message = Some("color vector length differs from k");
        }
        if let Some(message) = message {
            push(Failure::Completeness {
                support: class.support.clone(),
                expected: 0,
                found: class.total(),
                message: message.into(),
            });
            continue;
        }
        let slot = by_support.entry(class.support.clone()).or_insert_with(|| vec![0; k]);
        for (a, b) in slot.iter_mut().zip(&class.color_counts) {
            *a += b;
        }
    }

    // Completeness over every h-subset of [1, n].
    let mut degree = vec![vec![0u64; k]; n as usize + 1];
    for support in (1..=n).combinations(h) {
        let counts = by_support.remove(&support);
        let found = counts.as_ref().map_or(0, |c| c.iter().sum());
        if found != p.lambda() {
            push(Failure::Completeness {
                message: format!("support {support:?} occurs {found} times"),
                support: support.clone(),
                expected: p.lambda(),
                found,
            });
        }
        if let Some(counts) = counts {
            for &v in &support {
                for (d, c) in degree[v as usize].iter_mut().zip(&counts) {
                    *d += c;
                }
            }
        }
    }
    let mut leftovers: Vec<_> = by_support.into_iter().collect();
    leftovers.sort();
    for (support, counts) in leftovers {
        push(Failure::Completeness {
            message: format!("{support:?} is not an {h}-subset of [1, {n}]"),
            found: counts.iter().sum(),
            support,
            expected: 0,
        });
    }

    // Regularity of every color class.
    for v in 1..=n {
        for (j, &rj) in p.r().iter().enumerate() {
            let found = degree[v as usize][j];
            if found != rj {
                push(Failure::Regularity { vertex: v, color: j as u32 + 1, expected: rj, found });
            }
        }
    }

    // Extension: agree with the input class by class on [1, m].
    let m = inst.params().m();
    let mut expected: BTreeMap<&[Vertex], &EdgeClass> = BTreeMap::new();
    for class in inst.classes() {
        expected.insert(&class.support, class);
    }
    let mut restricted: BTreeMap<Vec<Vertex>, Vec<u64>> = BTreeMap::new();
    for class in cert.classes() {
        if class.alpha == 0 && class.support.iter().all(|&v| v >= 1 && v <= m) {
            let slot = restricted.entry(class.support.clone()).or_insert_with(|| vec![0; k]);
            for (a, b) in slot.iter_mut().zip(&class.color_counts) {
                *a += b;
            }
        }
    }
    let supports: std::collections::BTreeSet<Vec<Vertex>> = expected
        .keys()
        .map(|s| s.to_vec())
        .chain(restricted.keys().cloned())
        .collect();
    for support in supports {
        let want = expected.get(support.as_slice()).map(|c| sparse(&c.color_counts)).unwrap_or_default();
        let got = restricted.get(&support).map(|c| sparse(c)).unwrap_or_default();
        if want != got {
            push(Failure::Extension {
                message: format!("coloring of {support:?} differs from the input"),
                support,
                expected: want,
                found: got,
            });
        }
    }

    VerificationReport { pass: failures.is_empty(), failures }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceLimits {
    /// Largest number of new edge copies the search will attempt.
    pub copy_budget: u64,
    /// Optional cap on search nodes; exceeding it reports `TooLarge`.
    pub node_budget: Option<u64>,
}

impl Default for BruteForceLimits {
    fn default() -> Self {
        BruteForceLimits { copy_budget: 60, node_budget: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForceOutcome {
    Found(Certificate),
    /// The search space was exhausted: no extension exists.
    Exhausted,
    TooLarge { copies: u128 },
}

struct Search<'a> {
    r: &'a [u64],
    edges: Vec<Vec<Vertex>>,
    incident: Vec<Vec<usize>>,
    remaining: Vec<u64>,
    /// Lowest color still allowed for the next copy of each edge; copies of
    /// one edge are interchangeable so colors are taken nondecreasing.
    min_color: Vec<usize>,
    assigned: Vec<Vec<u64>>,
    degree: Vec<Vec<u64>>,
    nodes: u64,
    node_budget: Option<u64>,
}

impl Search<'_> {
    fn slack(&self, edge: usize, color: usize) -> u64 {
        self.edges[edge]
            .iter()
            .map(|&v| self.r[color] - self.degree[v as usize][color])
            .min()
            .unwrap_or(0)
    }

    fn feasible_colors(&self, edge: usize) -> usize {
        (self.min_color[edge]..self.r.len()).filter(|&j| self.slack(edge, j) > 0).count()
    }

    /// Every open (vertex, color) deficit must still be coverable.
    fn coverable(&self) -> bool {
        for (v, inc) in self.incident.iter().enumerate().skip(1) {
            let open: u64 = inc.iter().map(|&e| self.remaining[e]).sum();
            let deficit: u64 = (0..self.r.len()).map(|j| self.r[j] - self.degree[v][j]).sum();
            if open != deficit {
                return false;
            }
            for j in 0..self.r.len() {
                let need = self.r[j] - self.degree[v][j];
                if need == 0 {
                    continue;
                }
                let avail: u64 = inc
                    .iter()
                    .filter(|&&e| self.remaining[e] > 0 && self.min_color[e] <= j)
                    .map(|&e| self.remaining[e].min(self.slack(e, j)))
                    .sum();
                if avail < need {
                    return false;
                }
            }
        }
        true
    }

    fn pick(&self) -> Option<usize> {
        // Most constrained vertex first, then its tightest open edge.
        let vertex = (1..self.incident.len())
            .filter_map(|v| {
                let open: u64 = self.incident[v].iter().map(|&e| self.remaining[e]).sum();
                (open > 0).then_some((open, v))
            })
            .min()?
            .1;
        self.incident[vertex]
            .iter()
            .copied()
            .filter(|&e| self.remaining[e] > 0)
            .min_by_key(|&e| (self.feasible_colors(e), e))
    }

    fn run(&mut self) -> Option<bool> {
        self.nodes += 1;
        if matches!(self.node_budget, Some(b) if self.nodes > b) {
            return None;
        }
        let Some(edge) = self.pick() else {
            return Some(true);
        };
        let saved_min = self.min_color[edge];
        for j in saved_min..self.r.len() {
            if self.slack(edge, j) == 0 {
                continue;
            }
            self.remaining[edge] -= 1;
            self.assigned[edge][j] += 1;
            self.min_color[edge] = j;
            for &v in &self.edges[edge] {
                self.degree[v as usize][j] += 1;
            }
            if self.coverable() {
                match self.run() {
                    Some(true) => return Some(true),
                    None => return None,
                    Some(false) => {}
                }
            }
            for &v in &self.edges[edge] {
                self.degree[v as usize][j] -= 1;
            }
            self.assigned[edge][j] -= 1;
            self.remaining[edge] += 1;
        }
        self.min_color[edge] = saved_min;
        Some(false)
    }
}

/// Backtracking search for any extension of `inst`, feasible only for a
/// handful of new edge copies.
pub fn brute_force_extend(inst: &Instance, limits: &BruteForceLimits) -> BruteForceOutcome {
    let p = inst.params();
    let (n, m, h, lambda) = (p.n() as u64, p.m() as u64, p.h() as i64, p.lambda());
    let copies = (binom(n, h) - binom(m, h)) * lambda;
    let copies = copies.to_u128().unwrap_or(u128::MAX);
    if copies > limits.copy_budget as u128 {
        return BruteForceOutcome::TooLarge { copies };
    }

    let k = p.k();
    let mut degree = vec![vec![0u64; k]; n as usize + 1];
    for class in inst.classes() {
        for &v in &class.support {
            for (d, c) in degree[v as usize].iter_mut().zip(&class.color_counts) {
                *d += c;
            }
        }
    }
    if degree.iter().any(|row| row.iter().zip(p.r()).any(|(d, r)| d > r)) {
        return BruteForceOutcome::Exhausted;
    }

    let edges: Vec<Vec<Vertex>> = (1..=p.n())
        .combinations(h as usize)
        .filter(|e| e.iter().any(|&v| v as u64 > m))
        .collect();
    let mut incident = vec![Vec::new(); n as usize + 1];
    for (i, e) in edges.iter().enumerate() {
        for &v in e {
            incident[v as usize].push(i);
        }
    }
    let count = edges.len();
    let mut search = Search {
        r: p.r(),
        edges,
        incident,
        remaining: vec![lambda; count],
        min_color: vec![0; count],
        assigned: vec![vec![0; k]; count],
        degree,
        nodes: 0,
        node_budget: limits.node_budget,
    };
    let found = if search.coverable() { search.run() } else { Some(false) };
    match found {
        None => BruteForceOutcome::TooLarge { copies },
        Some(false) => BruteForceOutcome::Exhausted,
        Some(true) => {
            let mut classes = inst.classes().to_vec();
            for (support, counts) in search.edges.into_iter().zip(search.assigned) {
                classes.push(EdgeClass::colored(support, counts));
            }
            BruteForceOutcome::Found(Certificate::new(p.clone(), classes))
        }
    }
}
