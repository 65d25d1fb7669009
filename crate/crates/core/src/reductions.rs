//! Instance transformations between element connectivity, hypergraph
//! connectivity and covering by graphs, each with a map for pulling
//! solutions back to the source instance.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::instances::{EdgeId, ElemInstance, Graph, Hypergraph, PairRequirements};
use crate::rational::{self, Rational};
use crate::requirements::RequirementFn;
use crate::vertex_set::{VertexSet, MAX_VERTICES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("node weight on terminal {0}")]
    WeightOnTerminal(usize),
    #[error("hyperedge {0} has size > 2 and non-zero cost; route through the halving reduction")]
    CostedLargeHyperedge(EdgeId),
    #[error("reduced instance needs {0} vertices (limit {MAX_VERTICES})")]
    TooLarge(usize),
}

/// A dummy vertex placed on edge `edge` next to non-terminal `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dummy {
    pub node: usize,
    pub edge: EdgeId,
    pub vertex: usize,
}

/// Element connectivity -> hypergraph. Edge `e` keeps id `e`; each
/// non-terminal of degree at least two becomes one extra hyperedge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElemToHyperMap {
    /// Original vertex -> new vertex (terminals only).
    pub vertex_map: Vec<Option<usize>>,
    /// Original edge -> hyperedge id (the identity on `0..m`).
    pub edge_map: Vec<EdgeId>,
    /// Non-terminal -> the hyperedge replacing it.
    pub node_hyperedges: BTreeMap<usize, EdgeId>,
    pub dummies: Vec<Dummy>,
}

impl ElemToHyperMap {
    /// Original edges and non-terminals selected by a hyperedge solution.
    pub fn pullback(&self, hyperedges: &[EdgeId]) -> (Vec<EdgeId>, Vec<usize>) {
        let m = self.edge_map.len();
        let edges = hyperedges.iter().copied().filter(|&h| h < m).collect();
        let nodes = self
            .node_hyperedges
            .iter()
            .filter(|(_, h)| hyperedges.contains(h))
            .map(|(&v, _)| v)
            .collect();
        (edges, nodes)
    }

    pub fn pushforward(&self, edges: &[EdgeId]) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = edges.iter().map(|&e| self.edge_map[e]).collect();
        out.extend(self.node_hyperedges.values().copied());
        out.sort_unstable();
        out
    }
}

/// Replaces every non-terminal `v` by a hyperedge over dummy vertices, one
/// dummy per incident edge. Edges keep their cost and join their (terminal
/// or dummy) endpoints; the new hyperedge costs `v`'s node weight (zero when
/// unweighted). Terminals are renumbered `0..t` in increasing order, and
/// dummies follow in (non-terminal, edge id) order.
pub fn elem_to_hyper(
    inst: &ElemInstance,
) -> Result<(Hypergraph, PairRequirements, ElemToHyperMap), ReductionError> {
    if let Some((&v, _)) = inst.node_weights.iter().find(|(&v, _)| inst.is_terminal(v)) {
        return Err(ReductionError::WeightOnTerminal(v));
    }
    let g = &inst.graph;
    let mut vertex_map = vec![None; g.n];
    let mut next = 0;
    for t in inst.terminals.iter() {
        vertex_map[t] = Some(next);
        next += 1;
    }
    let mut dummies = Vec::new();
    let mut dummy_of = BTreeMap::new();
    for v in inst.non_terminals().iter() {
        for e in g.incident(v) {
            dummy_of.insert((v, e), next);
            dummies.push(Dummy {
                node: v,
                edge: e,
                vertex: next,
            });
            next += 1;
        }
    }
    if next > MAX_VERTICES {
        return Err(ReductionError::TooLarge(next));
    }
    let end = |w: usize, e: EdgeId| vertex_map[w].unwrap_or_else(|| dummy_of[&(w, e)]);
    let mut h = Hypergraph::new(next);
    for (e, edge) in g.edges.iter().enumerate() {
        let vs: VertexSet = [end(edge.u, e), end(edge.v, e)].into_iter().collect();
        h.add_hyperedge(vs, edge.cost.clone());
    }
    let mut node_hyperedges = BTreeMap::new();
    for v in inst.non_terminals().iter() {
        let vs: VertexSet = g
            .incident(v)
            .into_iter()
            .map(|e| dummy_of[&(v, e)])
            .collect();
        if vs.len() >= 2 {
            node_hyperedges.insert(v, h.add_hyperedge(vs, inst.node_weight(v)));
        }
    }
    let reqs = inst
        .requirements
        .relabel(|v| vertex_map[v].expect("requirements sit on terminals"));
    let map = ElemToHyperMap {
        vertex_map,
        edge_map: (0..g.edges.len()).collect(),
        node_hyperedges,
        dummies,
    };
    Ok((h, reqs, map))
}

/// Hypergraph with free large hyperedges -> graph plus residual requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphCoverMap {
    /// Graph edge -> hyperedge id.
    pub edge_map: Vec<EdgeId>,
    /// Zero-cost hyperedges of size > 2, included up front.
    pub included: Vec<EdgeId>,
}

impl GraphCoverMap {
    pub fn pullback(&self, graph_edges: &[EdgeId]) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = graph_edges.iter().map(|&e| self.edge_map[e]).collect();
        out.extend_from_slice(&self.included);
        out.sort_unstable();
        out
    }
}

/// Splits `h` into its size-2 hyperedges (returned as a graph) and its
/// larger hyperedges, which must be free and are all taken; the requirement
/// becomes the pairwise-max function minus their cut.
pub fn hyper_to_graph_cover(
    h: &Hypergraph,
    reqs: &PairRequirements,
) -> Result<(Graph, RequirementFn, GraphCoverMap), ReductionError> {
    let mut g = Graph::new(h.n);
    let mut edge_map = Vec::new();
    let mut included = Vec::new();
    for (id, e) in h.hyperedges.iter().enumerate() {
        if e.vertices.len() == 2 {
            let vs = e.vertices.to_vec();
            g.add_edge(vs[0], vs[1], e.cost.clone());
            edge_map.push(id);
        } else if e.cost.is_zero() {
            included.push(id);
        } else {
            return Err(ReductionError::CostedLargeHyperedge(id));
        }
    }
    let masks: Vec<VertexSet> = included
        .iter()
        .map(|&id| h.hyperedges[id].vertices)
        .collect();
    let f = RequirementFn::pairwise_max(h.n, reqs.clone()).residual_masks(&masks);
    Ok((g, f, GraphCoverMap { edge_map, included }))
}

/// Hypergraph -> bipartite node-weighted element instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BipartiteMap {
    /// Hyperedge -> its node `z_e`.
    pub hyperedge_nodes: Vec<usize>,
    /// Hyperedge -> ids of the edges joining `z_e` to its members.
    pub hyperedge_edges: Vec<Vec<EdgeId>>,
}

impl BipartiteMap {
    /// Hyperedges whose node is entered by at least two selected edges; a
    /// node used through one edge carries no path.
    pub fn pullback(&self, edges: &[EdgeId]) -> Vec<EdgeId> {
        (0..self.hyperedge_edges.len())
            .filter(|&h| {
                self.hyperedge_edges[h]
                    .iter()
                    .filter(|e| edges.contains(e))
                    .count()
                    >= 2
            })
            .collect()
    }

    /// All edges of the nodes of the given hyperedges.
    pub fn pushforward(&self, hyperedges: &[EdgeId]) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = hyperedges
            .iter()
            .flat_map(|&h| self.hyperedge_edges[h].iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Standard bipartite representation: vertices stay (as terminals), each
/// hyperedge `e` becomes a non-terminal `z_e = n + e` of weight `c_e` joined
/// by zero-cost edges to the members of `e`.
pub fn hyper_to_nw_elem(
    h: &Hypergraph,
    reqs: &PairRequirements,
) -> Result<(ElemInstance, BipartiteMap), ReductionError> {
    let n = h.n + h.hyperedges.len();
    if n > MAX_VERTICES {
        return Err(ReductionError::TooLarge(n));
    }
    let mut g = Graph::new(n);
    let mut node_weights = BTreeMap::new();
    let mut hyperedge_nodes = Vec::new();
    let mut hyperedge_edges = Vec::new();
    for (id, e) in h.hyperedges.iter().enumerate() {
        let z = h.n + id;
        hyperedge_nodes.push(z);
        hyperedge_edges.push(
            e.vertices
                .iter()
                .map(|a| g.add_edge(z, a, Rational::zero()))
                .collect(),
        );
        node_weights.insert(z, e.cost.clone());
    }
    let inst = ElemInstance {
        graph: g,
        terminals: VertexSet::full(h.n),
        requirements: reqs.clone(),
        node_weights,
    };
    Ok((
        inst,
        BipartiteMap {
            hyperedge_nodes,
            hyperedge_edges,
        },
    ))
}

/// Node weights moved onto edges.
///
/// Cost accounting is per solution: after [`HalvingMap::pullback`] prunes
/// weighted nodes entered by a single edge, every remaining weighted node has
/// at least two selected edges, so its transformed cost (half its weight per
/// edge) is at least its weight and at most `degree / 2` times it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HalvingMap {
    /// Weight moved from each node (`w / 2` per incident edge).
    #[serde(serialize_with = "ser_weights")]
    pub moved: BTreeMap<usize, Rational>,
    /// Weighted nodes of degree <= 1, whose weight was discarded.
    pub dropped_nodes: Vec<usize>,
    #[serde(with = "rational::serde_rational")]
    pub loss_factor: Rational,
}

fn ser_weights<S: serde::Serializer>(
    m: &BTreeMap<usize, Rational>,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), rational::to_json(v))))
}

/// A solution of the edge-weighted instance read back in the node-weighted one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalvingPullback {
    pub edges: Vec<EdgeId>,
    /// Weighted non-terminals the pruned solution passes through.
    pub nodes: Vec<usize>,
    /// Edge costs plus weights of used nodes, in the original instance.
    pub original_cost: Rational,
    /// Edge costs in the transformed instance.
    pub transformed_cost: Rational,
}

impl HalvingMap {
    /// Drops edges that enter a weighted node no other selected edge
    /// touches (repeatedly, since removals cascade), then prices the result
    /// in both instances.
    pub fn pullback(
        &self,
        original: &ElemInstance,
        transformed: &ElemInstance,
        edges: &[EdgeId],
    ) -> HalvingPullback {
        let g = &original.graph;
        let mut keep: Vec<bool> = vec![false; g.edges.len()];
        for &e in edges {
            keep[e] = true;
        }
        loop {
            let mut changed = false;
            for &z in self.moved.keys().chain(&self.dropped_nodes) {
                let used: Vec<EdgeId> = g.incident(z).into_iter().filter(|&e| keep[e]).collect();
                if used.len() == 1 {
                    keep[used[0]] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let edges: Vec<EdgeId> = (0..keep.len()).filter(|&e| keep[e]).collect();
        let nodes: Vec<usize> = self
            .moved
            .keys()
            .copied()
            .filter(|&z| g.incident(z).iter().any(|&e| keep[e]))
            .collect();
        let original_cost = rational::sum(edges.iter().map(|&e| &g.edges[e].cost))
            + rational::sum(
                nodes
                    .iter()
                    .map(|z| original.node_weights.get(z).expect("weighted")),
            );
        let transformed_cost =
            rational::sum(edges.iter().map(|&e| &transformed.graph.edges[e].cost));
        HalvingPullback {
            edges,
            nodes,
            original_cost,
            transformed_cost,
        }
    }
}

/// Moves each non-terminal's weight `w` onto its incident edges, `w / 2`
/// apiece. The loss factor is half the largest degree of a weighted
/// non-terminal (1 when nothing is weighted). Weighted nodes of degree at
/// most one cannot carry a path; their weight is discarded with a warning.
pub fn nw_elem_to_ew_elem(
    inst: &ElemInstance,
) -> Result<(ElemInstance, HalvingMap, Rational), ReductionError> {
    if let Some((&v, _)) = inst.node_weights.iter().find(|(&v, _)| inst.is_terminal(v)) {
        return Err(ReductionError::WeightOnTerminal(v));
    }
    let mut out = inst.clone();
    out.node_weights.clear();
    let mut moved = BTreeMap::new();
    let mut dropped_nodes = Vec::new();
    let mut max_degree = 0;
    let two = rational::int(2);
    for (&z, w) in &inst.node_weights {
        if w.is_zero() {
            continue;
        }
        let incident = inst.graph.incident(z);
        if incident.len() <= 1 {
            log::warn!(
                "dropping weighted non-terminal {z} of degree {}",
                incident.len()
            );
            dropped_nodes.push(z);
            continue;
        }
        let share = w / &two;
        for e in incident.iter() {
            out.graph.edges[*e].cost += &share;
        }
        moved.insert(z, share);
        max_degree = max_degree.max(incident.len());
    }
    let loss_factor = if moved.is_empty() {
        Rational::one()
    } else {
        rational::ratio(max_degree as i64, 2)
    };
    let map = HalvingMap {
        moved,
        dropped_nodes,
        loss_factor: loss_factor.clone(),
    };
    Ok((out, map, loss_factor))
}

/// `d⁺ · H_rmax`, with `H_k = 1 + 1/2 + … + 1/k`.
pub fn zhao_bound(dplus: u32, rmax: u32) -> Rational {
    assert!(
        dplus >= 1 && rmax >= 1,
        "zhao_bound needs dplus >= 1 and rmax >= 1"
    );
    let harmonic = (1..=rmax as i64).fold(Rational::zero(), |acc, k| acc + rational::ratio(1, k));
    harmonic * rational::int(dplus as i64)
}

/// Any of the maps above, for writing a sidecar file.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "direction", rename_all = "snake_case")]
pub enum ReductionMap {
    ElemToHyper(ElemToHyperMap),
    HyperToGraphCover(GraphCoverMap),
    HyperToNwElem(BipartiteMap),
    NwElemToEwElem(HalvingMap),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::{element_connectivity, hyperedge_connectivity};
    use crate::instances::dplus;
    use crate::rational::{int, ratio};

    fn set(vs: &[usize]) -> VertexSet {
        vs.iter().copied().collect()
    }

    /// Non-terminal 0 joined to terminals 1, 2, 3.
    fn star() -> ElemInstance {
        let mut g = Graph::new(4);
        for t in 1..4 {
            g.add_edge(0, t, int(1));
        }
        ElemInstance {
            graph: g,
            terminals: set(&[1, 2, 3]),
            requirements: PairRequirements::uniform(1..4, 1),
            node_weights: BTreeMap::new(),
        }
    }

    #[test]
    fn star_to_hyper() {
        let (h, reqs, map) = elem_to_hyper(&star()).unwrap();
        // terminals 1,2,3 -> 0,1,2; dummies 3,4,5 on edges 0,1,2
        assert_eq!(h.n, 6);
        assert_eq!(h.hyperedges.len(), 4);
        assert_eq!(h.hyperedges[3].vertices, set(&[3, 4, 5]));
        assert_eq!(h.hyperedges[3].cost, int(0));
        for t in 0..3 {
            assert_eq!(h.hyperedges[t].vertices, set(&[t, t + 3]));
            assert_eq!(h.hyperedges[t].cost, int(1));
        }
        assert_eq!(dplus(&h), 2);
        assert_eq!(reqs, PairRequirements::uniform(0..3, 1));
        assert_eq!(map.dummies.len(), 3);
        assert_eq!(map.pullback(&[0, 2, 3]), (vec![0, 2], vec![0]));
    }

    #[test]
    fn weighted_star_has_dplus_delta() {
        let mut inst = star();
        inst.node_weights.insert(0, int(7));
        let (h, _, _) = elem_to_hyper(&inst).unwrap();
        assert_eq!(h.hyperedges[3].cost, int(7));
        assert_eq!(dplus(&h), 3);
        assert_eq!(inst.weighted_max_degree(), 3);
    }

    #[test]
    fn all_terminals_is_unchanged() {
        let mut inst = star();
        inst.terminals = VertexSet::full(4);
        inst.requirements = PairRequirements::uniform(0..4, 1);
        let (h, reqs, map) = elem_to_hyper(&inst).unwrap();
        assert_eq!(h, Hypergraph::from_graph(&inst.graph));
        assert_eq!(reqs, inst.requirements);
        assert!(map.dummies.is_empty());
    }

    #[test]
    fn weight_on_terminal_is_rejected() {
        let mut inst = star();
        inst.node_weights.insert(1, int(1));
        assert_eq!(
            elem_to_hyper(&inst).unwrap_err(),
            ReductionError::WeightOnTerminal(1)
        );
        assert_eq!(
            nw_elem_to_ew_elem(&inst).unwrap_err(),
            ReductionError::WeightOnTerminal(1)
        );
    }

    #[test]
    fn star_graph_cover() {
        let (h, reqs, _) = elem_to_hyper(&star()).unwrap();
        let (g, f, map) = hyper_to_graph_cover(&h, &reqs).unwrap();
        assert_eq!(g.edges.len(), 3);
        assert_eq!(map.included, vec![3]);
        assert_eq!(f.eval(set(&[0])), 1);
        // {d1} is cut by the free hyperedge: 1 - 1... but no pair is split, so 0 - 1
        assert_eq!(f.eval(set(&[3])), -1);
        // terminal 0 with its dummy: pair requirement 1, hyperedge crosses
        assert_eq!(f.eval(set(&[0, 3])), 0);
        assert!(crate::requirements::check_skew_supermodular(&f)
            .unwrap()
            .passed());
        assert_eq!(map.pullback(&[0, 1]), vec![0, 1, 3]);
    }

    #[test]
    fn graph_cover_without_large_hyperedges() {
        let mut h = Hypergraph::new(3);
        h.add_hyperedge(set(&[0, 1]), int(2));
        h.add_hyperedge(set(&[1, 2]), int(3));
        let reqs = PairRequirements::uniform(0..3, 1);
        let (g, f, map) = hyper_to_graph_cover(&h, &reqs).unwrap();
        assert_eq!(Hypergraph::from_graph(&g), h);
        assert_eq!(f, RequirementFn::pairwise_max(3, reqs));
        assert!(map.included.is_empty());
    }

    #[test]
    fn costed_large_hyperedge_is_rejected() {
        let mut h = Hypergraph::new(3);
        h.add_hyperedge(set(&[0, 1, 2]), int(1));
        let err = hyper_to_graph_cover(&h, &PairRequirements::new()).unwrap_err();
        assert_eq!(err, ReductionError::CostedLargeHyperedge(0));
    }

    #[test]
    fn bipartite_representation() {
        let mut h = Hypergraph::new(3);
        h.add_hyperedge(set(&[0, 1, 2]), int(7));
        let (inst, map) = hyper_to_nw_elem(&h, &PairRequirements::new()).unwrap();
        assert_eq!(inst.graph.n, 4);
        assert_eq!(inst.node_weight(3), int(7));
        assert_eq!(inst.graph.edges.len(), 3);
        assert!(inst
            .graph
            .edges
            .iter()
            .all(|e| e.cost.is_zero() && e.u == 3));
        assert!(!inst.is_terminal(3));
        assert_eq!(map.pullback(&[0]), Vec::<EdgeId>::new());
        assert_eq!(map.pullback(&[0, 2]), vec![0]);

        let (empty, _) = hyper_to_nw_elem(&Hypergraph::new(2), &PairRequirements::new()).unwrap();
        assert!(empty.graph.edges.is_empty());
    }

    #[test]
    fn bipartite_connectivity_matches() {
        let mut h = Hypergraph::new(4);
        h.add_hyperedge(set(&[0, 1, 2]), int(1));
        h.add_hyperedge(set(&[2, 3]), int(1));
        h.add_hyperedge(set(&[0, 3]), int(1));
        h.add_hyperedge(set(&[1, 2, 3]), int(1));
        let (inst, map) = hyper_to_nw_elem(&h, &PairRequirements::new()).unwrap();
        for mask in 0u32..16 {
            let f: Vec<EdgeId> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
            let edges = map.pushforward(&f);
            for u in 0..4 {
                for v in u + 1..4 {
                    assert_eq!(
                        hyperedge_connectivity(&h, &f, u, v),
                        element_connectivity(&inst, &edges, u, v).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn halving_examples() {
        let mut inst = star();
        inst.node_weights.insert(0, int(6));
        let (out, map, loss) = nw_elem_to_ew_elem(&inst).unwrap();
        assert!(out.graph.edges.iter().all(|e| e.cost == int(4)));
        assert_eq!(loss, ratio(3, 2));
        assert!(out.node_weights.is_empty());

        let pb = map.pullback(&inst, &out, &[0, 1, 2]);
        assert_eq!(pb.original_cost, int(9));
        assert_eq!(pb.transformed_cost, int(12));
        assert!(pb.transformed_cost <= &loss * &pb.original_cost);

        // a single edge into the weighted node is pruned
        let pb = map.pullback(&inst, &out, &[1]);
        assert!(pb.edges.is_empty() && pb.nodes.is_empty());
        assert_eq!(pb.original_cost, int(0));
    }

    #[test]
    fn halving_degree_two_is_lossless() {
        let mut g = Graph::new(3);
        g.add_edge(0, 2, int(0));
        g.add_edge(2, 1, int(0));
        let inst = ElemInstance {
            graph: g,
            terminals: set(&[0, 1]),
            requirements: PairRequirements::uniform([0, 1], 1),
            node_weights: [(2, int(4))].into_iter().collect(),
        };
        let (out, map, loss) = nw_elem_to_ew_elem(&inst).unwrap();
        assert_eq!(loss, int(1));
        assert!(out.graph.edges.iter().all(|e| e.cost == int(2)));
        let pb = map.pullback(&inst, &out, &[0, 1]);
        assert_eq!(pb.original_cost, int(4));
        assert_eq!(pb.transformed_cost, int(4));
    }

    #[test]
    fn halving_identity_and_dropping() {
        let (out, map, loss) = nw_elem_to_ew_elem(&star()).unwrap();
        assert_eq!(out, star());
        assert_eq!(loss, int(1));
        assert!(map.moved.is_empty());

        let mut g = Graph::new(3);
        g.add_edge(0, 2, int(1));
        g.add_edge(0, 1, int(1));
        let inst = ElemInstance {
            graph: g,
            terminals: set(&[0, 1]),
            requirements: PairRequirements::new(),
            node_weights: [(2, int(5))].into_iter().collect(),
        };
        let (out, map, _) = nw_elem_to_ew_elem(&inst).unwrap();
        assert_eq!(map.dropped_nodes, vec![2]);
        assert_eq!(out.graph.edges[0].cost, int(1));
    }

    #[test]
    fn zhao_bound_values() {
        assert_eq!(zhao_bound(2, 1), int(2));
        assert_eq!(zhao_bound(2, 3), ratio(11, 3));
        assert_eq!(zhao_bound(3, 2), ratio(9, 2));
    }

    #[test]
    fn map_sidecar_json() {
        let (_, _, map) = elem_to_hyper(&star()).unwrap();
        let v = serde_json::to_value(ReductionMap::ElemToHyper(map)).unwrap();
        assert_eq!(v["direction"], "elem_to_hyper");
        assert_eq!(v["node_hyperedges"]["0"], 3);
    }
}
