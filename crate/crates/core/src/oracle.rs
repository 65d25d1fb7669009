//! Exhaustive ground truth: optimal solutions of small instances, all
//! vertices of small covering LPs, and a random search for hypergraph LP
//! vertices whose largest coordinate falls below `1/d`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::certify::fractional_restriction;
use crate::connectivity::{edge_connectivity, element_connectivity, hyperedge_connectivity};
use crate::exactlp::{
    certify_vertex, cutting_plane_solve, CoveringLP, LpError, Tight, VertexSolution,
};
use crate::instances::{
    generate, instance_to_json, EdgeId, GenError, GenParams, HyperInstance, Instance, Kind,
};
use crate::linalg::{self, EchelonBasis};
use crate::rational::{self, ratio, Rational};
use crate::requirements::{RequirementError, RequirementFn};
use crate::rounding::IterationRecord;

pub const MAX_BRUTE_FORCE_EDGES: usize = 20;
pub const MAX_BRUTE_FORCE_VERTICES: usize = 10;
pub const MAX_ENUMERATION_VARS: usize = 12;
/// Search-tree nodes visited by [`enumerate_vertices`] before giving up.
pub const MAX_ENUMERATION_NODES: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{what} = {got} exceeds the limit {limit}")]
    Limit {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("instance is infeasible even with every edge")]
    Infeasible,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("fractional vertex with max coordinate {max} < 1/2 on a graph (trial {trial})")]
    BelowHalf { trial: usize, max: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Requirement(#[from] RequirementError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error("certification failed: {0}")]
    Certify(String),
}

fn limit(what: &'static str, got: usize, max: usize) -> Result<(), OracleError> {
    if got > max {
        return Err(OracleError::Limit {
            what,
            got,
            limit: max,
        });
    }
    Ok(())
}

/// Scales rational costs to a common denominator.
fn scaled_costs(costs: &[Rational]) -> Vec<i128> {
    let den = costs.iter().fold(BigInt::one(), |acc, c| {
        num_integer::Integer::lcm(&acc, c.denom())
    });
    costs
        .iter()
        .map(|c| {
            (c.numer() * (&den / c.denom()))
                .to_i128()
                .expect("cost fits in i128")
        })
        .collect()
}

/// Minimum-cost feasible subset of edges (hyperedges) by exhaustive search,
/// with ties broken towards the lexicographically smallest id list.
///
/// For node-weighted element instances a subset pays for every weighted
/// non-terminal it touches.
pub fn brute_force_opt(inst: &Instance) -> Result<(Rational, Vec<EdgeId>), OracleError> {
    limit("edge count", inst.num_edges(), MAX_BRUTE_FORCE_EDGES)?;
    limit("vertex count", inst.n(), MAX_BRUTE_FORCE_VERTICES)?;
    let m = inst.num_edges();
    let reqs: Vec<(usize, usize, u32)> = inst.requirements().iter().collect();
    let feasible = |ids: &[EdgeId]| -> bool {
        reqs.iter().all(|&(u, v, r)| {
            let got = match inst {
                Instance::Ec(e) => edge_connectivity(&e.graph, ids, u, v),
                Instance::Elem(e) => {
                    element_connectivity(e, ids, u, v).expect("requirements on terminals")
                }
                Instance::Hyper(h) => hyperedge_connectivity(&h.hypergraph, ids, u, v),
            };
            got >= r as usize
        })
    };
    let ids_of = |mask: u32| -> Vec<EdgeId> { (0..m).filter(|&e| mask >> e & 1 == 1).collect() };
    let all: Vec<EdgeId> = (0..m).collect();
    if !feasible(&all) {
        return Err(OracleError::Infeasible);
    }
    // edge costs, then node weights charged per touched node
    let (mut costs, nodes): (Vec<Rational>, Vec<(u32, Rational)>) = match inst {
        Instance::Ec(e) => (e.graph.costs(), Vec::new()),
        Instance::Hyper(h) => (h.hypergraph.costs(), Vec::new()),
        Instance::Elem(e) => {
            let nodes = e
                .node_weights
                .iter()
                .filter(|(_, w)| !w.is_zero())
                .map(|(&z, w)| {
                    (
                        e.graph
                            .incident(z)
                            .iter()
                            .fold(0u32, |acc, &id| acc | 1 << id),
                        w.clone(),
                    )
                })
                .collect();
            (e.graph.costs(), nodes)
        }
    };
    costs.extend(nodes.iter().map(|(_, w)| w.clone()));
    let scaled = scaled_costs(&costs);
    let (edge_costs, node_costs) = scaled.split_at(m);
    let mut by_cost: Vec<(i128, u32)> = (0..1u32 << m)
        .map(|mask| {
            let mut c: i128 = (0..m)
                .filter(|&e| mask >> e & 1 == 1)
                .map(|e| edge_costs[e])
                .sum();
            for ((incident, _), w) in nodes.iter().zip(node_costs) {
                if mask & incident != 0 {
                    c += w;
                }
            }
            (c, mask)
        })
        .collect();
    by_cost.sort_unstable();
    let mut start = 0;
    while start < by_cost.len() {
        let cost = by_cost[start].0;
        let end = start
            + by_cost[start..]
                .iter()
                .take_while(|(c, _)| *c == cost)
                .count();
        let mut group: Vec<Vec<EdgeId>> = by_cost[start..end]
            .iter()
            .map(|&(_, mask)| ids_of(mask))
            .collect();
        group.sort();
        if let Some(best) = group.into_iter().find(|ids| feasible(ids)) {
            let mut total = rational::sum(best.iter().map(|&e| &costs[e]));
            for (k, (incident, _)) in nodes.iter().enumerate() {
                if best.iter().any(|&e| incident >> e & 1 == 1) {
                    total += &costs[m + k];
                }
            }
            return Ok((total, best));
        }
        start = end;
    }
    unreachable!("the full edge set is feasible")
}

fn constraint(lp: &CoveringLP, c: Tight) -> (Vec<Rational>, Rational) {
    let m = lp.num_vars();
    let mut v = vec![Rational::zero(); m];
    let rhs = match c {
        Tight::Row(i) => {
            for &j in &lp.rows[i].vars {
                v[j] = Rational::one();
            }
            Rational::from_integer(lp.rows[i].rhs.into())
        }
        Tight::Lower(j) => {
            v[j] = Rational::one();
            Rational::zero()
        }
        Tight::Upper(j) => {
            v[j] = Rational::one();
            Rational::one()
        }
    };
    (v, rhs)
}

/// Every vertex of `{x in [0,1]^m : rows}`, by trying each independent choice
/// of `m` constraints, solving it, and keeping feasible points. Vertices
/// are deduplicated by value and returned in increasing order of `x`.
pub fn enumerate_vertices(lp: &CoveringLP) -> Result<Vec<VertexSolution>, OracleError> {
    let m = lp.num_vars();
    limit("variable count", m, MAX_ENUMERATION_VARS)?;
    let mut candidates: Vec<Tight> = (0..lp.rows.len()).map(Tight::Row).collect();
    candidates.extend((0..m).map(Tight::Lower));
    candidates.extend((0..m).map(Tight::Upper));
    let vectors: Vec<(Vec<Rational>, Rational)> =
        candidates.iter().map(|&c| constraint(lp, c)).collect();

    struct Search<'a> {
        m: usize,
        vectors: &'a [(Vec<Rational>, Rational)],
        chosen: Vec<usize>,
        nodes: usize,
        found: BTreeMap<Vec<Rational>, Vec<usize>>,
    }

    impl Search<'_> {
        fn dfs(&mut self, from: usize, basis: &EchelonBasis) -> Result<(), OracleError> {
            self.nodes += 1;
            limit("search nodes", self.nodes, MAX_ENUMERATION_NODES)?;
            if self.chosen.len() == self.m {
                let a: Vec<Vec<Rational>> = self
                    .chosen
                    .iter()
                    .map(|&i| self.vectors[i].0.clone())
                    .collect();
                let b: Vec<Rational> = self
                    .chosen
                    .iter()
                    .map(|&i| self.vectors[i].1.clone())
                    .collect();
                if let Some(x) = linalg::solve(&a, &b) {
                    self.found.entry(x).or_insert_with(|| self.chosen.clone());
                }
                return Ok(());
            }
            let need = self.m - self.chosen.len();
            for i in from..self.vectors.len() {
                if self.vectors.len() - i < need {
                    break;
                }
                if basis.is_independent(&self.vectors[i].0) {
                    let mut next = basis.clone();
                    next.insert(&self.vectors[i].0);
                    self.chosen.push(i);
                    self.dfs(i + 1, &next)?;
                    self.chosen.pop();
                }
            }
            Ok(())
        }
    }

    let mut search = Search {
        m,
        vectors: &vectors,
        chosen: Vec::new(),
        nodes: 0,
        found: BTreeMap::new(),
    };
    search.dfs(0, &EchelonBasis::new(m))?;
    let mut out = Vec::new();
    for (x, chosen) in search.found {
        let feasible = x.iter().all(|v| !v.is_negative() && v <= &Rational::one())
            && lp
                .rows
                .iter()
                .all(|r| lp.row_value(r, &x) >= Rational::from_integer(r.rhs.into()));
        if !feasible {
            continue;
        }
        let tight_rows = lp
            .tight_constraints(&x)
            .into_iter()
            .filter_map(|c| if let Tight::Row(i) = c { Some(i) } else { None })
            .collect();
        let sol = VertexSolution {
            objective: lp.objective(&x),
            x,
            tight_rows,
            basis: chosen.into_iter().map(|i| candidates[i]).collect(),
        };
        debug_assert!(certify_vertex(&sol, lp).is_ok());
        out.push(sol);
    }
    Ok(out)
}

/// One fractional vertex met by the explorer.
#[derive(Debug, Clone)]
pub struct ExplorationRecord {
    pub trial: usize,
    pub seed: u64,
    pub d: usize,
    pub instance: HyperInstance,
    /// Hyperedges already bought when this vertex was computed.
    pub fixed: Vec<EdgeId>,
    /// Hyperedge id of each coordinate of `vertex`.
    pub edge_ids: Vec<EdgeId>,
    /// Fully fractional vertex of the residual LP, certified.
    pub vertex: VertexSolution,
    pub max_coordinate: Rational,
    pub below_1_over_d: bool,
}

impl ExplorationRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "trial": self.trial,
            "seed": self.seed,
            "d": self.d,
            "instance": instance_to_json(&Instance::Hyper(self.instance.clone())),
            "fixed": self.fixed,
            "edge_ids": self.edge_ids,
            "x": self.vertex.x.iter().map(rational::to_json).collect::<Vec<_>>(),
            "objective": rational::to_json(&self.vertex.objective),
            "basis": self.vertex.basis.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>(),
            "max_coordinate": rational::format(&self.max_coordinate),
            "below_1_over_d": self.below_1_over_d,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExplorationSummary {
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    pub vertices: usize,
    pub min_max_coordinate: Option<Rational>,
    /// Count of vertices per exact max coordinate.
    pub histogram: BTreeMap<Rational, usize>,
    pub candidates: Vec<ExplorationRecord>,
}

impl ExplorationSummary {
    pub fn to_json(&self) -> Value {
        json!({
            "d": self.d,
            "trials": self.trials,
            "seed": self.seed,
            "vertices": self.vertices,
            "min_max_coordinate": self.min_max_coordinate.as_ref().map(rational::format),
            "threshold": rational::format(&ratio(1, self.d as i64)),
            "histogram": self.histogram.iter().map(|(k, v)| json!({
                "max_coordinate": rational::format(k),
                "count": v,
            })).collect::<Vec<_>>(),
            "candidates": self.candidates.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Random covering instance for one trial: a hypergraph with hyperedges of
/// size at most `d` and pairwise requirements it can support.
fn trial_instance(d: usize, rng: &mut ChaCha8Rng) -> Result<(HyperInstance, u64), OracleError> {
    let lo = (d + 1).max(4);
    let n = rng.gen_range(lo..=lo + 3);
    let m = rng.gen_range(n..=n + 4);
    let seed = rng.gen();
    let mut params = GenParams::new(Kind::Hyper, n, m, rng.gen_range(1..=3), seed);
    params.max_degree = d;
    match generate(&params)? {
        Instance::Hyper(h) => Ok((h, seed)),
        _ => unreachable!("hyper parameters give a hypergraph"),
    }
}

/// Rounds like the graph algorithm but on hyperedges: each LP vertex's
/// fractional part is recorded, then coordinates at 1 and at least `1/d`
/// (and always the largest) are bought and zeros dropped.
fn run_trial(d: usize, seed: u64, trial: usize) -> Result<Vec<ExplorationRecord>, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let (inst, inst_seed) = trial_instance(d, &mut rng)?;
    let h = &inst.hypergraph;
    let ground = h.ground();
    let costs = h.costs();
    let f = RequirementFn::pairwise_max(h.n, inst.requirements.clone());
    let threshold = ratio(1, d as i64);
    let mut records = Vec::new();
    let mut bought: Vec<EdgeId> = Vec::new();
    let mut remaining: Vec<EdgeId> = (0..ground.num_edges()).collect();
    let mut warm = Vec::new();
    let mut residual = f.clone();
    while !residual.is_trivial()? {
        let sub = ground.restrict(&remaining);
        let sub_costs: Vec<Rational> = remaining.iter().map(|&e| costs[e].clone()).collect();
        let res = cutting_plane_solve(&sub, &residual, &sub_costs, &remaining, &warm)?;
        for row in &res.lp.rows {
            if !warm.contains(&row.tag) {
                warm.push(row.tag);
            }
        }
        let x = &res.solution.x;
        let max = res.solution.max_coordinate();
        let record = IterationRecord {
            lp_value: res.solution.objective.clone(),
            edge_ids: remaining.clone(),
            lp: res.lp,
            vertex: res.solution.clone(),
            requirement: residual.clone(),
            rounded: Vec::new(),
            dropped: Vec::new(),
            rows_generated: res.rows_generated,
        };
        if let Some(fv) = fractional_restriction(&record, &ground)
            .map_err(|e| OracleError::Certify(e.to_string()))?
        {
            let max_coordinate = fv.vertex.max_coordinate();
            records.push(ExplorationRecord {
                trial,
                seed: inst_seed,
                d,
                instance: inst.clone(),
                fixed: bought.clone(),
                edge_ids: fv.edge_ids,
                below_1_over_d: max_coordinate < threshold,
                vertex: fv.vertex,
                max_coordinate,
            });
        }
        let mut next = Vec::new();
        for (j, &e) in remaining.iter().enumerate() {
            if x[j] >= threshold || x[j] == max {
                bought.push(e);
            } else if !x[j].is_zero() {
                next.push(e);
            }
        }
        remaining = next;
        residual = f.residual(&ground, &bought);
    }
    Ok(records)
}

/// Searches random hypergraph covering LPs of degree at most `d` for a
/// fully fractional vertex with every coordinate below `1/d`.
///
/// Trials run in parallel on independent streams of one seed, so the
/// summary depends only on `(d, trials, seed)`. On graphs (`d = 2`) a hit
/// is an error.
pub fn explore_problem1(
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<ExplorationSummary, OracleError> {
    if d < 2 {
        return Err(OracleError::Invalid("d must be at least 2".into()));
    }
    if trials == 0 {
        return Err(OracleError::Invalid("trials must be at least 1".into()));
    }
    let per_trial: Vec<Vec<ExplorationRecord>> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(d, seed, t))
        .collect::<Result<_, _>>()?;
    let mut summary = ExplorationSummary {
        d,
        trials,
        seed,
        vertices: 0,
        min_max_coordinate: None,
        histogram: BTreeMap::new(),
        candidates: Vec::new(),
    };
    let mut seen = BTreeSet::new();
    for rec in per_trial.into_iter().flatten() {
        summary.vertices += 1;
        *summary
            .histogram
            .entry(rec.max_coordinate.clone())
            .or_insert(0) += 1;
        if summary
            .min_max_coordinate
            .as_ref()
            .is_none_or(|m| &rec.max_coordinate < m)
        {
            summary.min_max_coordinate = Some(rec.max_coordinate.clone());
        }
        if rec.below_1_over_d {
            if d == 2 {
                return Err(OracleError::BelowHalf {
                    trial: rec.trial,
                    max: rational::format(&rec.max_coordinate),
                });
            }
            if seen.insert((rec.trial, rec.fixed.clone())) {
                summary.candidates.push(rec);
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::solve_to_vertex;
    use crate::instances::{EcInstance, ElemInstance, Graph, Ground, PairRequirements};
    use crate::rational::int;
    use crate::vertex_set::VertexSet;

    fn cycle(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n, int(1));
        }
        g
    }

    #[test]
    fn triangle_and_four_cycle() {
        for (n, opt) in [(3, 2), (4, 3)] {
            let inst = Instance::Ec(EcInstance {
                graph: cycle(n),
                requirements: PairRequirements::uniform(0..n, 1),
            });
            let (cost, ids) = brute_force_opt(&inst).unwrap();
            assert_eq!(cost, int(opt));
            assert_eq!(ids, (0..n - 1).collect::<Vec<_>>());
        }
    }

    #[test]
    fn elem_star_needs_all_edges() {
        let mut g = Graph::new(4);
        for t in 1..4 {
            g.add_edge(0, t, int(1));
        }
        let inst = Instance::Elem(ElemInstance {
            graph: g,
            terminals: (1..4).collect(),
            requirements: PairRequirements::uniform(1..4, 1),
            node_weights: [(0, int(4))].into_iter().collect(),
        });
        assert_eq!(brute_force_opt(&inst).unwrap(), (int(7), vec![0, 1, 2]));
    }

    #[test]
    fn infeasible_and_limits() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, int(1));
        let inst = Instance::Ec(EcInstance {
            graph: g,
            requirements: [(0, 2, 1)].into_iter().collect(),
        });
        assert_eq!(brute_force_opt(&inst), Err(OracleError::Infeasible));
        let big = Instance::Ec(EcInstance {
            graph: cycle(21),
            requirements: [(0, 1, 1)].into_iter().collect(),
        });
        assert!(matches!(
            brute_force_opt(&big),
            Err(OracleError::Limit { .. })
        ));
    }

    fn triangle_lp() -> CoveringLP {
        let g = cycle(3).ground();
        let f = RequirementFn::pairwise_max(3, PairRequirements::uniform(0..3, 1));
        let mut lp = CoveringLP::new(vec![0, 1, 2], vec![int(1); 3]);
        for v in 0..3 {
            lp.add_cut(&g, &f, VertexSet::singleton(v));
        }
        lp
    }

    #[test]
    fn triangle_vertices() {
        let lp = triangle_lp();
        let vs = enumerate_vertices(&lp).unwrap();
        let xs: Vec<Vec<Rational>> = vs.iter().map(|v| v.x.clone()).collect();
        assert!(xs.contains(&vec![ratio(1, 2); 3]));
        for k in 0..3 {
            let mut x = vec![int(1); 3];
            x[k] = int(0);
            assert!(xs.contains(&x));
        }
        assert!(xs.contains(&vec![int(1); 3]));
        let best = vs.iter().map(|v| v.objective.clone()).min().unwrap();
        assert_eq!(best, solve_to_vertex(&lp).unwrap().objective);
        for v in &vs {
            certify_vertex(v, &lp).unwrap();
        }
    }

    #[test]
    fn one_dimensional() {
        let g = Ground::new(2, vec![[0, 1].into_iter().collect()]);
        let f = RequirementFn::pairwise_max(2, PairRequirements::uniform(0..2, 1));
        let mut lp = CoveringLP::new(vec![0], vec![int(1)]);
        lp.add_cut(&g, &f, VertexSet::singleton(0));
        let vs = enumerate_vertices(&lp).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].x, vec![int(1)]);
    }

    #[test]
    fn infeasible_system_has_no_vertices() {
        let mut lp = CoveringLP::new(vec![0], vec![int(1)]);
        lp.add_row(vec![0], 2, VertexSet::singleton(0));
        assert!(enumerate_vertices(&lp).unwrap().is_empty());
    }

    #[test]
    fn explorer_on_graphs() {
        let s = explore_problem1(2, 20, 1).unwrap();
        assert!(s.candidates.is_empty());
        assert!(s.min_max_coordinate.iter().all(|m| m >= &ratio(1, 2)));
        assert_eq!(s.histogram.values().sum::<usize>(), s.vertices);
    }

    #[test]
    fn explorer_is_deterministic() {
        let a = explore_problem1(3, 10, 5).unwrap().to_json();
        let b = explore_problem1(3, 10, 5).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn explorer_rejects_bad_arguments() {
        assert!(matches!(
            explore_problem1(2, 0, 1),
            Err(OracleError::Invalid(_))
        ));
        assert!(matches!(
            explore_problem1(1, 5, 1),
            Err(OracleError::Invalid(_))
        ));
    }
}
