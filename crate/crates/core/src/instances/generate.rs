use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    EcInstance, ElemInstance, Graph, HyperInstance, Hypergraph, Instance, PairRequirements,
};
use crate::connectivity::{edge_connectivity, element_connectivity, hyperedge_connectivity};
use crate::rational::{int, Rational};
use crate::vertex_set::{VertexSet, MAX_VERTICES};

const MAX_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Ec,
    Elem,
    Hyper,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Ec => "ec",
            Kind::Elem => "elem",
            Kind::Hyper => "hyper",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ec" => Ok(Kind::Ec),
            "elem" => Ok(Kind::Elem),
            "hyper" => Ok(Kind::Hyper),
            other => Err(format!(
                "unknown kind {other:?} (expected ec, elem or hyper)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub kind: Kind,
    pub n: usize,
    /// Edge count (ec, elem) or hyperedge count (hyper).
    pub m: usize,
    /// Maximum hyperedge size (hyper only).
    pub max_degree: usize,
    pub rmax: u32,
    pub cost_min: i64,
    pub cost_max: i64,
    /// Number of requirement pairs; `None` draws it from `1..=n`.
    pub pairs: Option<usize>,
    /// Terminal count (elem only); `None` means `max(2, n / 2)`.
    pub terminals: Option<usize>,
    /// Put random weights on non-terminals of degree at least two (elem only).
    pub node_weights: bool,
    pub seed: u64,
}

impl GenParams {
    pub fn new(kind: Kind, n: usize, m: usize, rmax: u32, seed: u64) -> Self {
        GenParams {
            kind,
            n,
            m,
            max_degree: 3,
            rmax,
            cost_min: 1,
            cost_max: 10,
            pairs: None,
            terminals: None,
            node_weights: false,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("no feasible instance found after {0} attempts")]
    Exhausted(usize),
}

fn check(params: &GenParams) -> Result<(), GenError> {
    let bad = |m: &str| Err(GenError::InvalidParams(m.to_string()));
    if params.n < 2 || params.n > MAX_VERTICES {
        return bad("n must be between 2 and 128");
    }
    if params.rmax == 0 {
        return bad("rmax must be positive");
    }
    if params.m == 0 {
        return bad("need at least one edge");
    }
    if params.cost_min < 0 || params.cost_min > params.cost_max {
        return bad("cost range must satisfy 0 <= min <= max");
    }
    if params.kind == Kind::Hyper && (params.max_degree < 2 || params.max_degree > params.n) {
        return bad("max hyperedge size must be in 2..=n");
    }
    if params.kind == Kind::Elem {
        let t = terminal_count(params);
        if t < 2 || t > params.n {
            return bad("elem instances need between 2 and n terminals");
        }
    }
    Ok(())
}

fn terminal_count(params: &GenParams) -> usize {
    params.terminals.unwrap_or((params.n / 2).max(2))
}

fn cost(rng: &mut ChaCha8Rng, params: &GenParams) -> Rational {
    int(rng.gen_range(params.cost_min..=params.cost_max))
}

/// Random spanning tree (when the edge budget allows) plus uniform extra edges.
fn random_graph(rng: &mut ChaCha8Rng, params: &GenParams) -> Graph {
    let n = params.n;
    let mut g = Graph::new(n);
    if params.m + 1 >= n {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for i in 1..n {
            let parent = order[rng.gen_range(0..i)];
            let c = cost(rng, params);
            g.add_edge(order[i], parent, c);
        }
    }
    while g.edges.len() < params.m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            let c = cost(rng, params);
            g.add_edge(u, v, c);
        }
    }
    g
}

fn random_hypergraph(rng: &mut ChaCha8Rng, params: &GenParams) -> Hypergraph {
    let mut h = Hypergraph::new(params.n);
    let all: Vec<usize> = (0..params.n).collect();
    for _ in 0..params.m {
        let size = rng.gen_range(2..=params.max_degree);
        let vertices: VertexSet = all.choose_multiple(rng, size).copied().collect();
        let c = cost(rng, params);
        h.add_hyperedge(vertices, c);
    }
    h
}

/// Draws requirement pairs among `candidates`, each with a value in
/// `1..=min(rmax, λ(u, v))` where `λ` is the full structure's connectivity.
fn plant_requirements(
    rng: &mut ChaCha8Rng,
    params: &GenParams,
    candidates: &[usize],
    lambda: impl Fn(usize, usize) -> usize,
) -> PairRequirements {
    let mut pairs = Vec::new();
    for (i, &u) in candidates.iter().enumerate() {
        for &v in &candidates[i + 1..] {
            pairs.push((u, v));
        }
    }
    pairs.shuffle(rng);
    let want = params
        .pairs
        .unwrap_or_else(|| rng.gen_range(1..=params.n))
        .min(pairs.len());
    let mut reqs = PairRequirements::new();
    for &(u, v) in pairs.iter().take(want) {
        let cap = (lambda(u, v) as u32).min(params.rmax);
        if cap > 0 {
            reqs.set(u, v, rng.gen_range(1..=cap));
        }
    }
    reqs
}

/// Deterministic, feasible random instance for the given parameters.
///
/// Structures are drawn first; requirements are then planted below the
/// structure's own connectivity (checked by max-flow), and draws that end up
/// with no positive requirement are rejected and resampled.
pub fn generate(params: &GenParams) -> Result<Instance, GenError> {
    check(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..MAX_ATTEMPTS {
        let inst = match params.kind {
            Kind::Ec => {
                let graph = random_graph(&mut rng, params);
                let all: Vec<usize> = (0..params.n).collect();
                let ids: Vec<usize> = (0..graph.edges.len()).collect();
                let requirements = plant_requirements(&mut rng, params, &all, |u, v| {
                    edge_connectivity(&graph, &ids, u, v)
                });
                Instance::Ec(EcInstance {
                    graph,
                    requirements,
                })
            }
            Kind::Elem => {
                let graph = random_graph(&mut rng, params);
                let mut all: Vec<usize> = (0..params.n).collect();
                all.shuffle(&mut rng);
                let mut terms: Vec<usize> = all[..terminal_count(params)].to_vec();
                terms.sort_unstable();
                let terminals: VertexSet = terms.iter().copied().collect();
                let mut node_weights = BTreeMap::new();
                if params.node_weights {
                    for v in terminals.complement(params.n).iter() {
                        if graph.degree(v) >= 2 {
                            node_weights.insert(v, cost(&mut rng, params));
                        }
                    }
                }
                let mut inst = ElemInstance {
                    graph,
                    terminals,
                    requirements: PairRequirements::new(),
                    node_weights,
                };
                let ids: Vec<usize> = (0..inst.graph.edges.len()).collect();
                inst.requirements = plant_requirements(&mut rng, params, &terms, |u, v| {
                    element_connectivity(&inst, &ids, u, v).expect("terminals")
                });
                Instance::Elem(inst)
            }
            Kind::Hyper => {
                let hypergraph = random_hypergraph(&mut rng, params);
                let all: Vec<usize> = (0..params.n).collect();
                let ids: Vec<usize> = (0..hypergraph.hyperedges.len()).collect();
                let requirements = plant_requirements(&mut rng, params, &all, |u, v| {
                    hyperedge_connectivity(&hypergraph, &ids, u, v)
                });
                Instance::Hyper(HyperInstance {
                    hypergraph,
                    requirements,
                })
            }
        };
        if !inst.requirements().is_empty() {
            return Ok(inst);
        }
    }
    Err(GenError::Exhausted(MAX_ATTEMPTS))
}
