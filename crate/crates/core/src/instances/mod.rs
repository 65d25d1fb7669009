//! Problem instances: graphs, hypergraphs, pairwise requirements, and the
//! three SNDP variants built from them.

mod generate;
mod io;

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::rational::Rational;
use crate::vertex_set::VertexSet;

pub use generate::{generate, GenError, GenParams, Kind};
pub use io::{instance_to_json, parse_instance, serialize_instance, ParseError};

/// Index into a graph's edge list or a hypergraph's hyperedge list.
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: Rational,
}

impl Edge {
    pub fn endpoints(&self) -> VertexSet {
        [self.u, self.v].into_iter().collect()
    }
}

/// Undirected multigraph with nonnegative edge costs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cost: Rational) -> EdgeId {
        assert!(u < self.n && v < self.n && u != v, "bad edge ({u}, {v})");
        assert!(!cost.is_negative());
        self.edges.push(Edge { u, v, cost });
        self.edges.len() - 1
    }

    pub fn costs(&self) -> Vec<Rational> {
        self.edges.iter().map(|e| e.cost.clone()).collect()
    }

    pub fn ground(&self) -> Ground {
        Ground {
            n: self.n,
            edges: self.edges.iter().map(Edge::endpoints).collect(),
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    /// Edge ids incident to `v`, ascending.
    pub fn incident(&self, v: usize) -> Vec<EdgeId> {
        (0..self.edges.len())
            .filter(|&i| self.edges[i].u == v || self.edges[i].v == v)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperedge {
    pub vertices: VertexSet,
    pub cost: Rational,
}

/// Hypergraph; every hyperedge has at least two vertices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Hypergraph {
    pub n: usize,
    pub hyperedges: Vec<Hyperedge>,
}

impl Hypergraph {
    pub fn new(n: usize) -> Self {
        Hypergraph {
            n,
            hyperedges: Vec::new(),
        }
    }

    pub fn add_hyperedge(&mut self, vertices: VertexSet, cost: Rational) -> EdgeId {
        assert!(
            vertices.len() >= 2,
            "hyperedge {vertices} has fewer than two vertices"
        );
        assert!(vertices.iter().all(|v| v < self.n));
        assert!(!cost.is_negative());
        self.hyperedges.push(Hyperedge { vertices, cost });
        self.hyperedges.len() - 1
    }

    /// Maximum hyperedge size.
    pub fn degree(&self) -> usize {
        self.hyperedges
            .iter()
            .map(|h| h.vertices.len())
            .max()
            .unwrap_or(0)
    }

    pub fn costs(&self) -> Vec<Rational> {
        self.hyperedges.iter().map(|h| h.cost.clone()).collect()
    }

    pub fn ground(&self) -> Ground {
        Ground {
            n: self.n,
            edges: self.hyperedges.iter().map(|h| h.vertices).collect(),
        }
    }

    pub fn from_graph(g: &Graph) -> Self {
        Hypergraph {
            n: g.n,
            hyperedges: g
                .edges
                .iter()
                .map(|e| Hyperedge {
                    vertices: e.endpoints(),
                    cost: e.cost.clone(),
                })
                .collect(),
        }
    }
}

/// Maximum size of a hyperedge with non-zero cost; 0 if every hyperedge is free.
pub fn dplus(h: &Hypergraph) -> usize {
    h.hyperedges
        .iter()
        .filter(|e| !e.cost.is_zero())
        .map(|e| e.vertices.len())
        .max()
        .unwrap_or(0)
}

/// Cost-free view of a graph or hypergraph: each edge is its endpoint set.
///
/// Cut arithmetic treats an edge as crossing `S` when it has an endpoint on
/// both sides, which is the usual graph cut for size-2 edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ground {
    pub n: usize,
    pub edges: Vec<VertexSet>,
}

impl Ground {
    pub fn new(n: usize, edges: Vec<VertexSet>) -> Self {
        Ground { n, edges }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Ids of the edges crossing `s`.
    pub fn delta(&self, s: VertexSet) -> Vec<EdgeId> {
        (0..self.edges.len())
            .filter(|&e| s.cuts(self.edges[e]))
            .collect()
    }

    /// `|delta_F(S)|` for the edge ids in `subset`.
    pub fn cut_size<'a>(
        &self,
        s: VertexSet,
        subset: impl IntoIterator<Item = &'a EdgeId>,
    ) -> usize {
        subset
            .into_iter()
            .filter(|&&e| s.cuts(self.edges[e]))
            .count()
    }

    /// Sum of `x_e` over edges crossing `s`.
    pub fn cut_value(&self, s: VertexSet, x: &[Rational]) -> Rational {
        let mut total = Rational::zero();
        for (e, &mask) in self.edges.iter().enumerate() {
            if s.cuts(mask) {
                total += &x[e];
            }
        }
        total
    }

    /// Restriction to the given edge ids, in the given order.
    pub fn restrict(&self, ids: &[EdgeId]) -> Ground {
        Ground {
            n: self.n,
            edges: ids.iter().map(|&e| self.edges[e]).collect(),
        }
    }
}

/// Symmetric pairwise requirements `r(uv)`; absent pairs are zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairRequirements {
    map: BTreeMap<(usize, usize), u32>,
}

impl PairRequirements {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(u: usize, v: usize) -> (usize, usize) {
        if u < v {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// Sets `r(uv)`; a zero value removes the pair.
    pub fn set(&mut self, u: usize, v: usize, r: u32) {
        assert_ne!(u, v, "requirement on a single vertex");
        if r == 0 {
            self.map.remove(&Self::key(u, v));
        } else {
            self.map.insert(Self::key(u, v), r);
        }
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.map.get(&Self::key(u, v)).copied().unwrap_or(0)
    }

    pub fn rmax(&self) -> u32 {
        self.map.values().copied().max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// Nonzero pairs `(u, v, r)` with `u < v`, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.map.iter().map(|(&(u, v), &r)| (u, v, r))
    }

    /// Every vertex mentioned by a nonzero requirement.
    pub fn support(&self) -> VertexSet {
        self.iter().flat_map(|(u, v, _)| [u, v]).collect()
    }

    /// Relabels vertices through `map`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> PairRequirements {
        let mut out = PairRequirements::new();
        for (u, v, r) in self.iter() {
            out.set(map(u), map(v), r);
        }
        out
    }

    /// `r ≡ value` on every pair of `vertices`.
    pub fn uniform(vertices: impl IntoIterator<Item = usize>, value: u32) -> Self {
        let vs: Vec<usize> = vertices.into_iter().collect();
        let mut out = PairRequirements::new();
        for (i, &u) in vs.iter().enumerate() {
            for &v in &vs[i + 1..] {
                out.set(u, v, value);
            }
        }
        out
    }
}

impl FromIterator<(usize, usize, u32)> for PairRequirements {
    fn from_iter<I: IntoIterator<Item = (usize, usize, u32)>>(iter: I) -> Self {
        let mut out = PairRequirements::new();
        for (u, v, r) in iter {
            out.set(u, v, r);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcInstance {
    pub graph: Graph,
    pub requirements: PairRequirements,
}

/// Element-connectivity instance. Vertices outside `terminals` are the
/// non-terminals; node weights may only sit on non-terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElemInstance {
    pub graph: Graph,
    pub terminals: VertexSet,
    pub requirements: PairRequirements,
    pub node_weights: BTreeMap<usize, Rational>,
}

impl ElemInstance {
    pub fn non_terminals(&self) -> VertexSet {
        self.terminals.complement(self.graph.n)
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.terminals.contains(v)
    }

    pub fn node_weight(&self, v: usize) -> Rational {
        self.node_weights
            .get(&v)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Maximum degree of a non-terminal carrying positive weight.
    pub fn weighted_max_degree(&self) -> usize {
        self.node_weights
            .iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(&v, _)| self.graph.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn has_node_weights(&self) -> bool {
        self.node_weights.values().any(|w| !w.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperInstance {
    pub hypergraph: Hypergraph,
    pub requirements: PairRequirements,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Ec(EcInstance),
    Elem(ElemInstance),
    Hyper(HyperInstance),
}

impl Instance {
    pub fn kind(&self) -> Kind {
        match self {
            Instance::Ec(_) => Kind::Ec,
            Instance::Elem(_) => Kind::Elem,
            Instance::Hyper(_) => Kind::Hyper,
        }
    }

    pub fn requirements(&self) -> &PairRequirements {
        match self {
            Instance::Ec(i) => &i.requirements,
            Instance::Elem(i) => &i.requirements,
            Instance::Hyper(i) => &i.requirements,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Instance::Ec(i) => i.graph.n,
            Instance::Elem(i) => i.graph.n,
            Instance::Hyper(i) => i.hypergraph.n,
        }
    }

    /// Number of costed objects a solution chooses from.
    pub fn num_edges(&self) -> usize {
        match self {
            Instance::Ec(i) => i.graph.edges.len(),
            Instance::Elem(i) => i.graph.edges.len(),
            Instance::Hyper(i) => i.hypergraph.hyperedges.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn dplus_examples() {
        let mut h = Hypergraph::new(4);
        h.add_hyperedge([0, 1, 2].into_iter().collect(), int(0));
        h.add_hyperedge([0, 1].into_iter().collect(), int(5));
        assert_eq!(dplus(&h), 2);
        assert_eq!(h.degree(), 3);

        let mut free = Hypergraph::new(3);
        free.add_hyperedge([0, 1, 2].into_iter().collect(), int(0));
        assert_eq!(dplus(&free), 0);

        let mut one = Hypergraph::new(4);
        one.add_hyperedge(VertexSet::full(4), int(1));
        assert_eq!(dplus(&one), 4);
    }

    #[test]
    fn requirements_are_symmetric() {
        let mut r = PairRequirements::new();
        r.set(3, 1, 2);
        assert_eq!(r.get(1, 3), 2);
        assert_eq!(r.get(3, 1), 2);
        assert_eq!(r.get(0, 1), 0);
        r.set(1, 3, 0);
        assert!(r.is_empty());
        assert_eq!(PairRequirements::uniform(0..4, 1).len(), 6);
    }

    #[test]
    fn ground_cuts() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, int(1));
        g.add_edge(1, 2, int(1));
        g.add_edge(0, 1, int(3));
        let ground = g.ground();
        assert_eq!(ground.delta(VertexSet::singleton(0)), vec![0, 2]);
        assert_eq!(ground.cut_size(VertexSet::singleton(1), &[0, 1]), 2);
    }
}
