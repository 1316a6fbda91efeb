//! Instances, certificates and the admissibility test.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::combinatorics::binom;
use crate::verify::VerificationReport;

/// 1-based vertex id.
pub type Vertex = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("uniformity h = {0} must be at least 2")]
    UniformityTooSmall(u32),
    #[error("need h <= m < n, got h = {h}, m = {m}, n = {n}")]
    VertexCounts { n: u32, m: u32, h: u32 },
    #[error("lambda must be at least 1")]
    ZeroLambda,
    #[error("r must name at least one color")]
    NoColors,
    #[error("r_{0} is zero; drop empty color classes instead")]
    ZeroDegree(usize),
}

/// `(n, m, h, lambda, r)`: extend a coloring of `lambda K_m^h` to `lambda K_n^h`
/// where color `j` must become an `r_j`-factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Parameters {
    n: u32,
    m: u32,
    h: u32,
    lambda: u64,
    r: Vec<u64>,
}

impl Parameters {
    pub fn new(n: u32, m: u32, h: u32, lambda: u64, r: Vec<u64>) -> Result<Self, ParamError> {
        if h < 2 {
            return Err(ParamError::UniformityTooSmall(h));
        }
        if !(h <= m && m < n) {
            return Err(ParamError::VertexCounts { n, m, h });
        }
        if lambda == 0 {
            return Err(ParamError::ZeroLambda);
        }
        if r.is_empty() {
            return Err(ParamError::NoColors);
        }
        if let Some(j) = r.iter().position(|&rj| rj == 0) {
            return Err(ParamError::ZeroDegree(j + 1));
        }
        Ok(Parameters { n, m, h, lambda, r })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    /// Target degrees, indexed by color - 1.
    pub fn r(&self) -> &[u64] {
        &self.r
    }

    /// Number of colors.
    pub fn k(&self) -> usize {
        self.r.len()
    }
}

/// Why a parameter tuple fails the necessary conditions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Inadmissible {
    #[error("h = {h} does not divide r_{color} * n = {product}")]
    NotDivisible { color: usize, h: u32, product: u128 },
    #[error("sum of r is {found}, but lambda * C(n-1, h-1) = {expected}")]
    DegreeSum { expected: String, found: u128 },
}

/// First violated necessary condition, if any.
pub fn admissibility_violation(params: &Parameters) -> Option<Inadmissible> {
    let n = params.n as u128;
    for (j, &rj) in params.r.iter().enumerate() {
        let product = rj as u128 * n;
        if product % params.h as u128 != 0 {
            return Some(Inadmissible::NotDivisible { color: j + 1, h: params.h, product });
        }
    }
    let expected = binom(params.n as u64 - 1, params.h as i64 - 1) * params.lambda;
    let found: u128 = params.r.iter().map(|&x| x as u128).sum();
    if expected.to_u128() != Some(found) {
        return Some(Inadmissible::DegreeSum { expected: expected.to_string(), found });
    }
    None
}

/// `h | r_j n` for every color and `sum r_j = lambda C(n-1, h-1)`.
pub fn is_admissible(params: &Parameters) -> bool {
    admissibility_violation(params).is_none()
}

/// Orbit of edge copies sharing one support and one power of the
/// amalgamated vertex. Copies are only ever stored as counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeClass {
    pub support: Vec<Vertex>,
    pub alpha: u32,
    /// Copies per color, indexed by color - 1.
    pub color_counts: Vec<u64>,
    pub uncolored: u64,
}

impl EdgeClass {
    pub fn colored(support: Vec<Vertex>, color_counts: Vec<u64>) -> Self {
        EdgeClass { support, alpha: 0, color_counts, uncolored: 0 }
    }

    pub fn total(&self) -> u64 {
        self.color_counts.iter().sum::<u64>() + self.uncolored
    }

    pub fn colored_total(&self) -> u64 {
        self.color_counts.iter().sum()
    }
}

/// Sorts supports, merges classes with equal `(support, alpha)` and drops
/// empty ones. Ordering is lexicographic by support, then alpha.
pub(crate) fn canonicalize(classes: Vec<EdgeClass>, k: usize) -> Vec<EdgeClass> {
    let mut merged: BTreeMap<(Vec<Vertex>, u32), EdgeClass> = BTreeMap::new();
    for mut class in classes {
        class.support.sort_unstable();
        if class.color_counts.len() < k {
            class.color_counts.resize(k, 0);
        }
        let key = (class.support.clone(), class.alpha);
        match merged.get_mut(&key) {
            Some(existing) => {
                if existing.color_counts.len() < class.color_counts.len() {
                    existing.color_counts.resize(class.color_counts.len(), 0);
                }
                for (a, b) in existing.color_counts.iter_mut().zip(&class.color_counts) {
                    *a += b;
                }
                existing.uncolored += class.uncolored;
            }
            None => {
                merged.insert(key, class);
            }
        }
    }
    merged.into_values().filter(|c| c.total() > 0).collect()
}

/// A partial r-factorization of `lambda K_m^h` together with the target
/// parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    params: Parameters,
    classes: Vec<EdgeClass>,
}

impl Instance {
    /// Builds the canonical form; call [`validate_instance`] to check it.
    pub fn new(params: Parameters, classes: Vec<EdgeClass>) -> Self {
        let classes = canonicalize(classes, params.k());
        Instance { params, classes }
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn classes(&self) -> &[EdgeClass] {
        &self.classes
    }
}

/// A coloring of `lambda K_n^h` claimed to extend an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    params: Parameters,
    classes: Vec<EdgeClass>,
    pub report: Option<VerificationReport>,
}

impl Certificate {
    pub fn new(params: Parameters, classes: Vec<EdgeClass>) -> Self {
        let classes = canonicalize(classes, params.k());
        Certificate { params, classes, report: None }
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn classes(&self) -> &[EdgeClass] {
        &self.classes
    }

    /// Mutable access for tests and tools that perturb certificates.
    pub fn classes_mut(&mut self) -> &mut Vec<EdgeClass> {
        &mut self.classes
    }

    /// The color classes as explicit edge lists, one entry per copy.
    pub fn color_classes(&self) -> Vec<Vec<Vec<Vertex>>> {
        let mut out = vec![Vec::new(); self.params.k()];
        for class in &self.classes {
            for (j, &count) in class.color_counts.iter().enumerate() {
                for _ in 0..count {
                    out[j].push(class.support.clone());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("malformed class {support:?}: {reason}")]
    MalformedClass { support: Vec<Vertex>, reason: String },
    #[error("support {support:?} has {found} copies, expected {expected}")]
    MissingEdges { support: Vec<Vertex>, found: u64, expected: u64 },
    #[error("support {support:?} has {found} copies, expected {expected}")]
    ExtraEdges { support: Vec<Vertex>, found: u64, expected: u64 },
    #[error("vertex {vertex} has degree {degree} in color {color}, above r_{color} = {cap}")]
    DegreeCapExceeded { vertex: Vertex, color: usize, degree: u64, cap: u64 },
}

/// Checks that `inst` colors exactly `lambda K_m^h` and respects every
/// degree cap `r_j`. Reports the first violation found.
pub fn validate_instance(inst: &Instance) -> Result<(), ValidationError> {
    let p = &inst.params;
    let (m, h, k) = (p.m, p.h as usize, p.k());
    let malformed = |c: &EdgeClass, reason: String| ValidationError::MalformedClass {
        support: c.support.clone(),
        reason,
    };

    let mut seen: BTreeMap<&[Vertex], u64> = BTreeMap::new();
    let mut degree = vec![vec![0u64; k]; m as usize + 1];
    for c in &inst.classes {
        if c.alpha != 0 {
            return Err(malformed(c, format!("alpha is {}, instances carry alpha 0", c.alpha)));
        }
        if c.support.len() != h {
            return Err(malformed(c, format!("support has {} vertices, h = {h}", c.support.len())));
        }
        if c.support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(malformed(c, "support is not strictly increasing".into()));
        }
        if let Some(&v) = c.support.iter().find(|&&v| v == 0 || v > m) {
            return Err(malformed(c, format!("vertex {v} outside [1, {m}]")));
        }
        if c.color_counts.len() != k {
            return Err(malformed(c, format!("{} color counts for k = {k}", c.color_counts.len())));
        }
        if c.uncolored != 0 {
            return Err(malformed(c, format!("{} uncolored copies", c.uncolored)));
        }
        *seen.entry(&c.support).or_default() += c.total();
        for (j, &count) in c.color_counts.iter().enumerate() {
            for &v in &c.support {
                degree[v as usize][j] += count;
            }
        }
    }

    for support in (1..=m).combinations(h) {
        let found = seen.remove(support.as_slice()).unwrap_or(0);
        if found < p.lambda {
            return Err(ValidationError::MissingEdges { support, found, expected: p.lambda });
        }
        if found > p.lambda {
            return Err(ValidationError::ExtraEdges { support, found, expected: p.lambda });
        }
    }

    for v in 1..=m {
        for (j, &cap) in p.r.iter().enumerate() {
            let d = degree[v as usize][j];
            if d > cap {
                return Err(ValidationError::DegreeCapExceeded {
                    vertex: v,
                    color: j + 1,
                    degree: d,
                    cap,
                });
            }
        }
    }
    Ok(())
}

impl fmt::Display for Parameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} m={} h={} lambda={} k={}",
            self.n,
            self.m,
            self.h,
            self.lambda,
            self.k()
        )
    }
}
