//! Exact max-flow / min-cut and the connectivity notions built on it.
//!
//! The engine is a shortest-augmenting-path (Edmonds–Karp) max-flow that is
//! generic over the capacity type: exact [`Rational`]s for LP separation and
//! `i64` for unit-capacity path counting. "Infinite" capacity is one plus the
//! sum of all finite capacities.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use num_traits::{One, Zero};

use crate::instances::{EdgeId, ElemInstance, Graph, Ground, Hypergraph, PairRequirements};
use crate::rational::Rational;
use crate::vertex_set::VertexSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConnectivityError {
    #[error("source and sink are both node {0}")]
    SourceIsSink(usize),
    #[error("vertex {0} is not a terminal")]
    NotTerminal(usize),
    #[error("negative capacity on arc {0}")]
    NegativeCapacity(usize),
}

/// Capacity arithmetic needed by the flow engine.
pub trait Capacity: Clone + Ord + Zero + Add<Output = Self> + Sub<Output = Self> {}

impl<T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T>> Capacity for T {}

/// Residual graph used by the augmenting-path engine.
struct FlowGraph<C> {
    heads: Vec<usize>,
    residual: Vec<C>,
    adj: Vec<Vec<usize>>,
}

impl<C: Capacity> FlowGraph<C> {
    fn new(nodes: usize) -> Self {
        FlowGraph {
            heads: Vec::new(),
            residual: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    /// Adds `tail -> head` with capacity `forward` and its reverse arc with
    /// capacity `backward`; returns the forward arc index.
    fn add_pair(&mut self, tail: usize, head: usize, forward: C, backward: C) -> usize {
        let id = self.heads.len();
        self.heads.push(head);
        self.residual.push(forward);
        self.adj[tail].push(id);
        self.heads.push(tail);
        self.residual.push(backward);
        self.adj[head].push(id + 1);
        id
    }

    fn add_arc(&mut self, tail: usize, head: usize, cap: C) -> usize {
        self.add_pair(tail, head, cap, C::zero())
    }

    fn add_undirected(&mut self, a: usize, b: usize, cap: C) {
        self.add_pair(a, b, cap.clone(), cap);
    }

    /// Augments until no path remains, or until the value reaches `limit`.
    fn max_flow(&mut self, s: usize, t: usize, limit: Option<&C>) -> C {
        let mut value = C::zero();
        let mut pred = vec![usize::MAX; self.adj.len()];
        loop {
            if let Some(l) = limit {
                if &value >= l {
                    return value;
                }
            }
            pred.iter_mut().for_each(|p| *p = usize::MAX);
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &a in &self.adj[u] {
                    let h = self.heads[a];
                    if !seen[h] && !self.residual[a].is_zero() {
                        seen[h] = true;
                        pred[h] = a;
                        queue.push_back(h);
                    }
                }
            }
            if !seen[t] {
                return value;
            }
            let mut bottleneck: Option<C> = None;
            let mut v = t;
            while v != s {
                let a = pred[v];
                let r = &self.residual[a];
                if bottleneck.as_ref().is_none_or(|b| r < b) {
                    bottleneck = Some(r.clone());
                }
                v = self.heads[a ^ 1];
            }
            let b = bottleneck.expect("path has at least one arc");
            let mut v = t;
            while v != s {
                let a = pred[v];
                self.residual[a] = self.residual[a].clone() - b.clone();
                self.residual[a ^ 1] = self.residual[a ^ 1].clone() + b.clone();
                v = self.heads[a ^ 1];
            }
            value = value + b;
        }
    }

    /// Nodes reachable from `s` in the residual graph.
    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let h = self.heads[a];
                if !seen[h] && !self.residual[a].is_zero() {
                    seen[h] = true;
                    stack.push(h);
                }
            }
        }
        seen
    }
}

/// Directed network with optional node capacities.
///
/// A capacitated node `v` is split into `v_in -> v_out`; arcs leave from
/// `tail_out` and enter `head_in`. Flow starts at the source's out-copy and
/// ends at the sink's in-copy, so endpoint capacities never bind.
#[derive(Debug, Clone)]
pub struct CapacitatedNetwork<C = Rational> {
    pub nodes: usize,
    pub arcs: Vec<(usize, usize, C)>,
    pub source: usize,
    pub sink: usize,
    pub node_capacities: Vec<Option<C>>,
}

impl<C: Capacity> CapacitatedNetwork<C> {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        CapacitatedNetwork {
            nodes,
            arcs: Vec::new(),
            source,
            sink,
            node_capacities: vec![None; nodes],
        }
    }

    pub fn arc(mut self, tail: usize, head: usize, cap: C) -> Self {
        self.arcs.push((tail, head, cap));
        self
    }
}

/// Source side of a minimum cut together with its capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutCertificate<C = Rational> {
    /// Original node ids on the source side (a split node counts when its
    /// in-copy is reachable).
    pub side: Vec<usize>,
    pub value: C,
}

/// Exact max-flow with a min-cut certificate whose value equals the flow.
pub fn max_flow_min_cut<C: Capacity>(
    net: &CapacitatedNetwork<C>,
) -> Result<(C, CutCertificate<C>), ConnectivityError> {
    if net.source == net.sink {
        return Err(ConnectivityError::SourceIsSink(net.source));
    }
    for (i, (_, _, c)) in net.arcs.iter().enumerate() {
        if c < &C::zero() {
            return Err(ConnectivityError::NegativeCapacity(i));
        }
    }
    let n = net.nodes;
    // out-copy of v is n + v when v is split, else v itself
    let out = |v: usize| {
        if net.node_capacities[v].is_some() {
            n + v
        } else {
            v
        }
    };
    let mut fg = FlowGraph::new(2 * n);
    let mut tracked = Vec::new();
    for v in 0..n {
        if let Some(c) = &net.node_capacities[v] {
            tracked.push((v, n + v, fg.add_arc(v, n + v, c.clone()), c.clone()));
        }
    }
    for &(tail, head, ref cap) in &net.arcs {
        tracked.push((
            out(tail),
            head,
            fg.add_arc(out(tail), head, cap.clone()),
            cap.clone(),
        ));
    }
    let value = fg.max_flow(out(net.source), net.sink, None);
    let reach = fg.reachable(out(net.source));
    let mut cut_value = C::zero();
    for (tail, head, _, cap) in &tracked {
        if reach[*tail] && !reach[*head] {
            cut_value = cut_value + cap.clone();
        }
    }
    assert!(cut_value == value, "max-flow/min-cut duality violated");
    let side = (0..n).filter(|&v| reach[v] || reach[out(v)]).collect();
    Ok((value.clone(), CutCertificate { side, value }))
}

/// Flow network realizing weighted cuts of a graph or hypergraph.
///
/// Size-2 edges become undirected arcs; larger hyperedges use a two-node
/// gadget `members -> in -> out -> members` whose middle arc carries the
/// hyperedge capacity, so every s–t cut value is the weighted hyperedge cut.
struct CutNetwork<C> {
    fg: FlowGraph<C>,
    n: usize,
}

impl<C: Capacity + One> CutNetwork<C> {
    fn build(n: usize, edges: impl Iterator<Item = (VertexSet, C)> + Clone) -> Self {
        let total = edges.clone().fold(C::zero(), |acc, (_, c)| acc + c);
        let inf = total + C::one();
        let big = edges
            .clone()
            .filter(|(m, c)| m.len() > 2 && !c.is_zero())
            .count();
        let mut fg = FlowGraph::new(n + 2 * big);
        let mut next = n;
        for (mask, cap) in edges {
            if cap.is_zero() {
                continue;
            }
            if mask.len() == 2 {
                let mut it = mask.iter();
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                fg.add_undirected(a, b, cap);
            } else {
                let (gin, gout) = (next, next + 1);
                next += 2;
                fg.add_arc(gin, gout, cap);
                for m in mask.iter() {
                    fg.add_arc(m, gin, inf.clone());
                    fg.add_arc(gout, m, inf.clone());
                }
            }
        }
        CutNetwork { fg, n }
    }

    fn min_cut(mut self, s: usize, t: usize, limit: Option<&C>) -> (C, Option<VertexSet>) {
        let value = self.fg.max_flow(s, t, limit);
        if let Some(l) = limit {
            if &value >= l {
                return (value, None);
            }
        }
        let reach = self.fg.reachable(s);
        let side = (0..self.n).filter(|&v| reach[v]).collect();
        (value, Some(side))
    }
}

/// Minimum over sets `S` with `u ∈ S`, `v ∉ S` of `|delta_F(S)|`, where `F`
/// is the sub-collection `subset` of `ground`'s edges (graph or hypergraph).
pub fn cut_connectivity(ground: &Ground, subset: &[EdgeId], u: usize, v: usize) -> usize {
    assert_ne!(u, v);
    let edges = subset.iter().map(|&e| (ground.edges[e], 1i64));
    let (value, _) = CutNetwork::build(ground.n, edges).min_cut(u, v, None);
    value as usize
}

/// Number of edge-disjoint `u`–`v` paths using only edges in `subset`.
pub fn edge_connectivity(g: &Graph, subset: &[EdgeId], u: usize, v: usize) -> usize {
    cut_connectivity(&g.ground(), subset, u, v)
}

/// Hyperedge connectivity between `u` and `v` in the sub-hypergraph `subset`.
pub fn hyperedge_connectivity(h: &Hypergraph, subset: &[EdgeId], u: usize, v: usize) -> usize {
    cut_connectivity(&h.ground(), subset, u, v)
}

/// Maximum number of `u`–`v` paths in `(V, subset)` that share no edge and no
/// non-terminal (terminals may be shared).
///
/// Each non-terminal and each edge is a capacity-1 element node; terminals
/// are uncapacitated.
pub fn element_connectivity(
    inst: &ElemInstance,
    subset: &[EdgeId],
    u: usize,
    v: usize,
) -> Result<usize, ConnectivityError> {
    for w in [u, v] {
        if !inst.is_terminal(w) {
            return Err(ConnectivityError::NotTerminal(w));
        }
    }
    if u == v {
        return Err(ConnectivityError::SourceIsSink(u));
    }
    let n = inst.graph.n;
    let m = subset.len();
    let inf = (n + m + 1) as i64;
    // vertices 0..n, element nodes for edges n..n+m
    let mut net = CapacitatedNetwork::<i64>::new(n + m, u, v);
    for w in 0..n {
        if !inst.is_terminal(w) {
            net.node_capacities[w] = Some(1);
        }
    }
    for (k, &e) in subset.iter().enumerate() {
        let node = n + k;
        net.node_capacities[node] = Some(1);
        let edge = &inst.graph.edges[e];
        for (a, b) in [(edge.u, edge.v), (edge.v, edge.u)] {
            net.arcs.push((a, node, inf));
            net.arcs.push((node, b, inf));
        }
    }
    let (value, _) = max_flow_min_cut(&net)?;
    Ok(value as usize)
}

/// A set whose requirement exceeds its (fractional) cut capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolatedCut {
    pub set: VertexSet,
    pub deficit: Rational,
}

/// Minimum `u`–`v` cut under capacities `x` on `ground`'s edges plus
/// capacity 1 on each `fixed` edge. Returns the cut only if its value is
/// below `limit`.
pub fn min_cut_below(
    ground: &Ground,
    x: &[Rational],
    fixed: &[VertexSet],
    u: usize,
    v: usize,
    limit: &Rational,
) -> Option<(Rational, VertexSet)> {
    let edges = ground
        .edges
        .iter()
        .copied()
        .zip(x.iter().cloned())
        .chain(fixed.iter().map(|&m| (m, Rational::one())));
    let (value, side) = CutNetwork::build(ground.n, edges).min_cut(u, v, Some(limit));
    side.map(|s| (value, s))
}

/// Capacity of `set` under fractional `x` plus unit `fixed` edges.
pub fn cut_capacity(
    ground: &Ground,
    x: &[Rational],
    fixed: &[VertexSet],
    set: VertexSet,
) -> Rational {
    ground.cut_value(set, x)
        + Rational::from_integer(fixed.iter().filter(|&&m| set.cuts(m)).count().into())
}

/// Pairwise-max requirement of `set`.
pub fn pairwise_max(reqs: &PairRequirements, set: VertexSet) -> u32 {
    reqs.iter()
        .filter(|&(u, v, _)| set.contains(u) != set.contains(v))
        .map(|(_, _, r)| r)
        .max()
        .unwrap_or(0)
}

/// Separation oracle for the pairwise-max covering LP.
///
/// Pairs are scanned in lexicographic order; the first pair whose minimum
/// cut (under `x` plus unit capacity on `fixed`) falls short of `r(uv)`
/// yields the returned set, which contains `u`.
pub fn find_violated_cut(
    ground: &Ground,
    x: &[Rational],
    fixed: &[VertexSet],
    reqs: &PairRequirements,
) -> Option<ViolatedCut> {
    for (u, v, r) in reqs.iter() {
        let limit = Rational::from_integer(r.into());
        if let Some((value, set)) = min_cut_below(ground, x, fixed, u, v, &limit) {
            debug_assert_eq!(value, cut_capacity(ground, x, fixed, set));
            let f = Rational::from_integer(pairwise_max(reqs, set).into());
            let deficit = f - value;
            return Some(ViolatedCut { set, deficit });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Graph;
    use crate::rational::{int, ratio};
    use std::collections::BTreeMap;

    fn set(vs: &[usize]) -> VertexSet {
        vs.iter().copied().collect()
    }

    #[test]
    fn single_arc() {
        let net = CapacitatedNetwork::new(2, 0, 1).arc(0, 1, ratio(7, 2));
        let (value, cut) = max_flow_min_cut(&net).unwrap();
        assert_eq!(value, ratio(7, 2));
        assert_eq!(cut.side, vec![0]);
        assert_eq!(cut.value, value);
    }

    #[test]
    fn parallel_paths() {
        let net = CapacitatedNetwork::new(4, 0, 3)
            .arc(0, 1, int(1))
            .arc(1, 3, int(1))
            .arc(0, 2, int(1))
            .arc(2, 3, int(1));
        assert_eq!(max_flow_min_cut(&net).unwrap().0, int(2));
    }

    #[test]
    fn half_cycle() {
        // undirected 4-cycle 0-1-2-3-0, capacity 1/2 each way
        let mut net = CapacitatedNetwork::new(4, 0, 2);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            net.arcs.push((a, b, ratio(1, 2)));
            net.arcs.push((b, a, ratio(1, 2)));
        }
        let (value, cut) = max_flow_min_cut(&net).unwrap();
        assert_eq!(value, int(1));
        assert!(cut.side.contains(&0) && !cut.side.contains(&2));
        // path decomposition: 0-1-2 and 0-3-2 carry 1/2 each
        assert_eq!(cut.value, ratio(1, 2) + ratio(1, 2));
    }

    #[test]
    fn source_is_sink() {
        let net = CapacitatedNetwork::<Rational>::new(2, 1, 1);
        assert_eq!(
            max_flow_min_cut(&net).unwrap_err(),
            ConnectivityError::SourceIsSink(1)
        );
    }

    #[test]
    fn node_capacity_limits_flow() {
        // two paths that share node 1 with capacity 1
        let mut net = CapacitatedNetwork::new(3, 0, 2)
            .arc(0, 1, int(5))
            .arc(1, 2, int(5));
        net.node_capacities[1] = Some(int(1));
        let (value, cut) = max_flow_min_cut(&net).unwrap();
        assert_eq!(value, int(1));
        assert_eq!(cut.value, int(1));
    }

    fn elem(n: usize, edges: &[(usize, usize)], terminals: &[usize]) -> ElemInstance {
        let mut g = Graph::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b, int(1));
        }
        ElemInstance {
            graph: g,
            terminals: set(terminals),
            requirements: PairRequirements::new(),
            node_weights: BTreeMap::new(),
        }
    }

    #[test]
    fn element_connectivity_examples() {
        let path = elem(3, &[(0, 2), (2, 1)], &[0, 1]);
        assert_eq!(element_connectivity(&path, &[0, 1], 0, 1).unwrap(), 1);

        let two = elem(4, &[(0, 2), (2, 1), (0, 3), (3, 1)], &[0, 1]);
        assert_eq!(element_connectivity(&two, &[0, 1, 2, 3], 0, 1).unwrap(), 2);

        // t1 - t3 - t2 through a terminal, plus the direct edge
        let through = elem(3, &[(0, 2), (2, 1), (0, 1)], &[0, 1, 2]);
        assert_eq!(element_connectivity(&through, &[0, 1, 2], 0, 1).unwrap(), 2);

        // two routes through the same non-terminal count once
        let shared = elem(
            5,
            &[(0, 2), (2, 1), (0, 3), (3, 2), (2, 4), (4, 1)],
            &[0, 1],
        );
        assert_eq!(
            element_connectivity(&shared, &[0, 1, 2, 3, 4, 5], 0, 1).unwrap(),
            1
        );

        assert_eq!(
            element_connectivity(&path, &[0, 1], 0, 2).unwrap_err(),
            ConnectivityError::NotTerminal(2)
        );
    }

    #[test]
    fn terminals_may_be_shared() {
        // 0 and 1 joined through terminal 2 by two parallel pairs of edges
        let inst = elem(3, &[(0, 2), (0, 2), (2, 1), (2, 1)], &[0, 1, 2]);
        assert_eq!(element_connectivity(&inst, &[0, 1, 2, 3], 0, 1).unwrap(), 2);
    }

    #[test]
    fn hyperedge_connectivity_examples() {
        let mut h = Hypergraph::new(3);
        h.add_hyperedge(set(&[0, 1, 2]), int(1));
        assert_eq!(hyperedge_connectivity(&h, &[0], 0, 1), 1);

        let mut p = Hypergraph::new(2);
        p.add_hyperedge(set(&[0, 1]), int(1));
        p.add_hyperedge(set(&[0, 1]), int(1));
        assert_eq!(hyperedge_connectivity(&p, &[0, 1], 0, 1), 2);
        assert_eq!(hyperedge_connectivity(&p, &[1], 0, 1), 1);
        assert_eq!(hyperedge_connectivity(&p, &[], 0, 1), 0);
    }

    fn cycle() -> Ground {
        Ground::new(
            4,
            vec![set(&[0, 1]), set(&[1, 2]), set(&[2, 3]), set(&[3, 0])],
        )
    }

    #[test]
    fn violated_cut_on_cycle() {
        let x = vec![ratio(1, 2), ratio(1, 2), int(0), ratio(1, 2)];
        let reqs = PairRequirements::uniform(0..4, 1);
        let cut = find_violated_cut(&cycle(), &x, &[], &reqs).unwrap();
        assert_eq!(cycle().cut_value(cut.set, &x) + &cut.deficit, int(1));
        assert!(cut.deficit > int(0));
        // pair (0, 1) comes first; its unique min cut is {0, 3} with value 1/2
        assert_eq!(cut.set, set(&[0, 3]));
        assert_eq!(cut.deficit, ratio(1, 2));
    }

    #[test]
    fn spanning_tree_covers_unit_cuts() {
        let x = vec![int(1), int(1), int(1), int(0)];
        let reqs = PairRequirements::uniform(0..4, 1);
        assert!(find_violated_cut(&cycle(), &x, &[], &reqs).is_none());
    }

    #[test]
    fn empty_capacity_cut() {
        let mut reqs = PairRequirements::new();
        reqs.set(1, 3, 1);
        let x = vec![int(0); 4];
        let cut = find_violated_cut(&cycle(), &x, &[], &reqs).unwrap();
        assert!(cut.set.contains(1) && !cut.set.contains(3));
        assert_eq!(cut.deficit, int(1));
    }

    #[test]
    fn fixed_edges_count_once() {
        let reqs: PairRequirements = [(0, 2, 1)].into_iter().collect();
        let x = vec![int(0); 4];
        let fixed = [set(&[0, 1, 2])];
        assert!(find_violated_cut(&cycle(), &x, &fixed, &reqs).is_none());
        let reqs: PairRequirements = [(0, 2, 2)].into_iter().collect();
        let cut = find_violated_cut(&cycle(), &x, &fixed, &reqs).unwrap();
        assert_eq!(cut.deficit, int(1));
    }
}
