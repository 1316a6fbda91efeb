//! Random partial r-factorizations and degree-pattern helpers.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::combinatorics::binom;
use crate::model::{EdgeClass, Instance, Parameters, Vertex};

const RESTARTS: u64 = 32;
const BACKTRACK_NODES: u64 = 1_000_000;

/// A family of degree vectors `r`, resolved once `n`, `h` and `lambda` are known.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RPattern {
    /// `r_j = 1` for `k = lambda C(n-1, h-1)` colors.
    Ones,
    /// `r_j = c` for `k = lambda C(n-1, h-1) / c` colors.
    Const(u64),
    Explicit(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct PatternError(String);

impl RPattern {
    pub fn resolve(&self, n: u32, h: u32, lambda: u64) -> Result<Vec<u64>, PatternError> {
        let degree = (binom(n as u64 - 1, h as i64 - 1) * lambda)
            .to_u64()
            .ok_or_else(|| PatternError("lambda C(n-1, h-1) overflows".into()))?;
        match self {
            RPattern::Ones => Ok(vec![1; degree as usize]),
            RPattern::Const(0) => Err(PatternError("const:0 is not a degree pattern".into())),
            RPattern::Const(c) if degree % c != 0 => {
                Err(PatternError(format!("{c} does not divide lambda C(n-1, h-1) = {degree}")))
            }
            RPattern::Const(c) => Ok(vec![*c; (degree / c) as usize]),
            RPattern::Explicit(r) => Ok(r.clone()),
        }
    }
}

impl FromStr for RPattern {
    type Err = PatternError;

    /// `ones`, `const:<c>` or a comma-separated list such as `2,2,1,1,1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ones" {
            return Ok(RPattern::Ones);
        }
        if let Some(c) = s.strip_prefix("const:") {
            return c
                .trim()
                .parse()
                .map(RPattern::Const)
                .map_err(|_| PatternError(format!("bad constant in {s:?}")));
        }
        s.split(',')
            .map(|x| x.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map(RPattern::Explicit)
            .map_err(|_| PatternError(format!("unrecognized r pattern {s:?}")))
    }
}

impl fmt::Display for RPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RPattern::Ones => f.write_str("ones"),
            RPattern::Const(c) => write!(f, "const:{c}"),
            RPattern::Explicit(r) => f.write_str(&r.iter().join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no partial r-factorization found after {restarts} restarts and {nodes} backtracking nodes")]
pub struct GenerationFailed {
    pub restarts: u64,
    pub nodes: u64,
}

fn derived_seed(seed: u64, attempt: u64) -> u64 {
    seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn build(params: &Parameters, supports: &[Vec<Vertex>], colors: &[usize]) -> Instance {
    let classes = supports
        .iter()
        .zip(colors)
        .map(|(s, &j)| {
            let mut counts = vec![0; params.k()];
            counts[j] = 1;
            EdgeClass::colored(s.clone(), counts)
        })
        .collect();
    Instance::new(params.clone(), classes)
}

fn feasible(params: &Parameters, degree: &[Vec<u64>], support: &[Vertex]) -> Vec<usize> {
    (0..params.k())
        .filter(|&j| support.iter().all(|&x| degree[x as usize][j] < params.r()[j]))
        .collect()
}

/// Colors the copies of `lambda K_m^h` in seeded random order, each with a
/// uniformly random color that keeps every degree within `r`.
///
/// On a dead end it restarts with a derived seed; after the restart budget
/// it falls back to a bounded randomized backtracking search.
pub fn random_instance(params: &Parameters, seed: u64) -> Result<Instance, GenerationFailed> {
    let mut copies: Vec<Vec<Vertex>> = Vec::new();
    for support in (1..=params.m()).combinations(params.h() as usize) {
        for _ in 0..params.lambda() {
            copies.push(support.clone());
        }
    }
    let vertices = params.m() as usize + 1;

    for attempt in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, attempt));
        let mut order = copies.clone();
        order.shuffle(&mut rng);
        let mut degree = vec![vec![0u64; params.k()]; vertices];
        let mut colors = Vec::with_capacity(order.len());
        for support in &order {
            let options = feasible(params, &degree, support);
            if options.is_empty() {
                break;
            }
            let j = options[rng.gen_range(0..options.len())];
            for &x in support {
                degree[x as usize][j] += 1;
            }
            colors.push(j);
        }
        if colors.len() == order.len() {
            return Ok(build(params, &order, &colors));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, RESTARTS));
    let mut order = copies;
    order.shuffle(&mut rng);
    let mut degree = vec![vec![0u64; params.k()]; vertices];
    let mut colors = Vec::with_capacity(order.len());
    let mut nodes = 0;
    if backtrack(params, &order, &mut degree, &mut colors, &mut rng, &mut nodes) {
        return Ok(build(params, &order, &colors));
    }
    Err(GenerationFailed { restarts: RESTARTS, nodes })
}

fn backtrack(
    params: &Parameters,
    order: &[Vec<Vertex>],
    degree: &mut [Vec<u64>],
    colors: &mut Vec<usize>,
    rng: &mut ChaCha8Rng,
    nodes: &mut u64,
) -> bool {
    let Some(support) = order.get(colors.len()) else {
        return true;
    };
    *nodes += 1;
    if *nodes > BACKTRACK_NODES {
        return false;
    }
    let mut options = feasible(params, degree, support);
    options.shuffle(rng);
    for j in options {
        for &x in support {
            degree[x as usize][j] += 1;
        }
        colors.push(j);
        if backtrack(params, order, degree, colors, rng, nodes) {
            return true;
        }
        colors.pop();
        for &x in support {
            degree[x as usize][j] -= 1;
        }
        if *nodes > BACKTRACK_NODES {
            return false;
        }
    }
    false
}

/// The `lambda` copies of the edge `[1, h]`, poured into the lowest colors.
/// Used as the starting point for a factorization built from scratch.
pub fn single_edge_instance(n: u32, h: u32, lambda: u64, r: Vec<u64>) -> Result<Instance, String> {
    let params = Parameters::new(n, h, h, lambda, r).map_err(|e| e.to_string())?;
    let mut counts = vec![0; params.k()];
    let mut left = lambda;
    for (slot, &rj) in counts.iter_mut().zip(params.r()) {
        let take = rj.min(left);
        *slot = take;
        left -= take;
    }
    if left > 0 {
        return Err(format!("r cannot hold {lambda} copies of one edge"));
    }
    Ok(Instance::new(params, vec![EdgeClass::colored((1..=h).collect(), counts)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn patterns_parse_and_resolve() {
        assert_eq!("ones".parse::<RPattern>().unwrap(), RPattern::Ones);
        assert_eq!("const:2".parse::<RPattern>().unwrap(), RPattern::Const(2));
        assert_eq!("2,2,1,1,1".parse::<RPattern>().unwrap(), RPattern::Explicit(vec![2, 2, 1, 1, 1]));
        assert!("two".parse::<RPattern>().is_err());
        assert_eq!(RPattern::Ones.resolve(9, 3, 1).unwrap().len(), 28);
        assert_eq!(RPattern::Const(2).resolve(6, 2, 2).unwrap(), vec![2; 5]);
        assert!(RPattern::Const(3).resolve(6, 2, 1).is_err());
        assert_eq!(RPattern::Explicit(vec![2, 1]).to_string(), "2,1");
    }

    #[test]
    fn generated_instances_validate() {
        let p = Parameters::new(15, 4, 3, 1, vec![1; 91]).unwrap();
        for seed in 0..5 {
            let inst = random_instance(&p, seed).unwrap();
            assert_eq!(inst.classes().len(), 4);
            assert_eq!(validate_instance(&inst), Ok(()));
        }
        let p = Parameters::new(6, 3, 2, 2, vec![2; 5]).unwrap();
        for seed in 0..20 {
            assert_eq!(validate_instance(&random_instance(&p, seed).unwrap()), Ok(()));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p = Parameters::new(10, 5, 2, 1, vec![1; 9]).unwrap();
        assert_eq!(random_instance(&p, 7).unwrap(), random_instance(&p, 7).unwrap());
    }

    #[test]
    fn tight_caps_fall_back_to_search() {
        // Proper 5-edge-colorings of K_4: a random order can strand the last edge.
        let p = Parameters::new(6, 4, 2, 1, vec![1, 1, 1, 1, 1]).unwrap();
        for seed in 0..10 {
            assert_eq!(validate_instance(&random_instance(&p, seed).unwrap()), Ok(()));
        }
    }

    #[test]
    fn single_edge_seed() {
        let inst = single_edge_instance(6, 2, 2, vec![1; 10]).unwrap();
        assert_eq!(inst.classes()[0].color_counts[..3], [1, 1, 0]);
        assert_eq!(validate_instance(&inst), Ok(()));
    }
}
