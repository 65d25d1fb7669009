//! Iterated rounding and the end-to-end solvers.
//!
//! Each iteration solves the covering LP of the current residual requirement
//! over the remaining edges to a vertex, deletes the edges at zero, and buys
//! every edge at one half or more. The loop stops once the residual is
//! trivial.

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::connectivity::{
    edge_connectivity, element_connectivity, hyperedge_connectivity, ConnectivityError,
};
use crate::exactlp::{cutting_plane_solve, CoveringLP, LpError, VertexSolution};
use crate::instances::{dplus, EdgeId, ElemInstance, Graph, Ground, Hypergraph, PairRequirements};
use crate::rational::{self, half, int, Rational};
use crate::reductions::{
    elem_to_hyper, hyper_to_graph_cover, hyper_to_nw_elem, nw_elem_to_ew_elem, ReductionError,
};
use crate::requirements::{RequirementError, RequirementFn};
use crate::vertex_set::VertexSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoundingError {
    #[error("infeasible: pair ({u}, {v}) requires {required} but the full instance supports only {available}")]
    Infeasible {
        u: usize,
        v: usize,
        required: u32,
        available: usize,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("half-edge property violated in iteration {iteration}: fractional vertex has max coordinate {max} < 1/2\n{dump}")]
    BelowHalf {
        iteration: usize,
        max: String,
        dump: String,
    },
    #[error("cost {cost} exceeds {factor} x lower bound {bound}")]
    BoundViolated {
        cost: String,
        factor: String,
        bound: String,
    },
    #[error("output leaves set {set} short by {deficit}")]
    Uncovered { set: VertexSet, deficit: String },
    #[error("output gives pair ({u}, {v}) connectivity {got} < {required}")]
    PairUnverified {
        u: usize,
        v: usize,
        required: u32,
        got: usize,
    },
    #[error("edges exhausted with the residual requirement still positive")]
    Exhausted,
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Requirement(#[from] RequirementError),
    #[error(transparent)]
    Connectivity(#[from] ConnectivityError),
}

/// One LP solve and the rounding decision taken from it.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub lp_value: Rational,
    /// Edges still available, in variable order.
    pub edge_ids: Vec<EdgeId>,
    pub lp: CoveringLP,
    pub vertex: VertexSolution,
    /// Residual requirement in force for this iteration.
    pub requirement: RequirementFn,
    /// Edges bought (`x >= 1/2`).
    pub rounded: Vec<EdgeId>,
    /// Edges deleted (`x = 0`).
    pub dropped: Vec<EdgeId>,
    pub rows_generated: usize,
}

impl IterationRecord {
    pub fn max_coordinate(&self) -> Rational {
        self.vertex.max_coordinate()
    }

    /// Largest coordinate strictly between 0 and 1, if any.
    pub fn fractional_max(&self) -> Option<Rational> {
        let one = Rational::one();
        self.vertex
            .x
            .iter()
            .filter(|v| !v.is_zero() && **v != one)
            .max()
            .cloned()
    }

    pub fn dump(&self) -> Value {
        json!({
            "edge_ids": self.edge_ids,
            "x": self.vertex.x.iter().map(rational::to_json).collect::<Vec<_>>(),
            "objective": rational::to_json(&self.lp_value),
            "rows": self.lp.rows.iter().map(|r| json!({
                "set": r.tag,
                "vars": r.vars,
                "rhs": r.rhs,
            })).collect::<Vec<_>>(),
            "basis": self.vertex.basis.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>(),
            "fixed": self.requirement.fixed(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RoundingTrace {
    pub iterations: Vec<IterationRecord>,
    /// LP value of the first iteration (zero when nothing is required).
    pub initial_lp_value: Rational,
    /// Bought edges, sorted.
    pub solution: Vec<EdgeId>,
    pub total_cost: Rational,
    /// Full ground set the run started from.
    pub ground: Ground,
}

/// Covers `f` by edges of `ground` with iterated rounding.
///
/// Every fractional part of a vertex must reach one half; a vertex that
/// does not aborts with a dump. On return the solution is re-checked with
/// the separation oracle and its cost against twice the first LP value.
pub fn jain_round(
    ground: &Ground,
    f: &RequirementFn,
    costs: &[Rational],
) -> Result<RoundingTrace, RoundingError> {
    assert_eq!(ground.num_edges(), costs.len());
    let mut trace = RoundingTrace {
        iterations: Vec::new(),
        initial_lp_value: Rational::zero(),
        solution: Vec::new(),
        total_cost: Rational::zero(),
        ground: ground.clone(),
    };
    let mut remaining: Vec<EdgeId> = (0..ground.num_edges()).collect();
    let mut warm: Vec<VertexSet> = Vec::new();
    let mut residual = f.clone();
    while !residual.is_trivial()? {
        if remaining.is_empty() {
            return Err(RoundingError::Exhausted);
        }
        let sub = ground.restrict(&remaining);
        let sub_costs: Vec<Rational> = remaining.iter().map(|&e| costs[e].clone()).collect();
        let result = cutting_plane_solve(&sub, &residual, &sub_costs, &remaining, &warm)?;
        for row in &result.lp.rows {
            if !warm.contains(&row.tag) {
                warm.push(row.tag);
            }
        }
        let x = &result.solution.x;
        let mut rounded = Vec::new();
        let mut dropped = Vec::new();
        for (j, &e) in remaining.iter().enumerate() {
            if x[j] >= half() {
                rounded.push(e);
            } else if x[j].is_zero() {
                dropped.push(e);
            }
        }
        let record = IterationRecord {
            lp_value: result.solution.objective.clone(),
            edge_ids: remaining.clone(),
            lp: result.lp,
            vertex: result.solution,
            requirement: residual.clone(),
            rounded,
            dropped,
            rows_generated: result.rows_generated,
        };
        if let Some(max) = record.fractional_max() {
            if max < half() {
                return Err(RoundingError::BelowHalf {
                    iteration: trace.iterations.len(),
                    max: rational::format(&max),
                    dump: record.dump().to_string(),
                });
            }
        }
        if trace.iterations.is_empty() {
            trace.initial_lp_value = record.lp_value.clone();
        }
        trace.solution.extend_from_slice(&record.rounded);
        remaining.retain(|e| !record.rounded.contains(e) && !record.dropped.contains(e));
        residual = f.residual(ground, &trace.solution);
        trace.iterations.push(record);
    }
    trace.solution.sort_unstable();
    trace.total_cost = rational::sum(trace.solution.iter().map(|&e| &costs[e]));
    let mut indicator = vec![Rational::zero(); ground.num_edges()];
    for &e in &trace.solution {
        indicator[e] = Rational::one();
    }
    if let Some(cut) = f.separate(ground, &indicator)? {
        return Err(RoundingError::Uncovered {
            set: cut.set,
            deficit: rational::format(&cut.deficit),
        });
    }
    check_bound(&trace.total_cost, &int(2), &trace.initial_lp_value)?;
    Ok(trace)
}

fn check_bound(cost: &Rational, factor: &Rational, bound: &Rational) -> Result<(), RoundingError> {
    if cost > &(factor * bound) {
        return Err(RoundingError::BoundViolated {
            cost: rational::format(cost),
            factor: rational::format(factor),
            bound: rational::format(bound),
        });
    }
    Ok(())
}

/// Which analysis backs a solution's ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GuaranteePath {
    /// Covering by a graph; factor 2 against the LP.
    #[serde(rename = "exact-2")]
    Exact2,
    /// Node weights moved onto edges first; factor `d⁺`.
    #[serde(rename = "halving-dplus")]
    HalvingDplus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guarantee {
    pub path: GuaranteePath,
    /// `cost <= factor * lower_bound` holds and was checked.
    pub factor: Rational,
}

#[derive(Debug, Clone)]
pub struct SndpSolution {
    /// Edge ids (hyperedge ids for hypergraph instances), sorted.
    pub edges: Vec<EdgeId>,
    /// Weighted non-terminals paid for (node-weighted instances only).
    pub nodes: Vec<usize>,
    pub cost: Rational,
    /// A lower bound on the optimum derived from the LP.
    pub lower_bound: Rational,
    /// Rounding run on the graph the instance was reduced to.
    pub trace: RoundingTrace,
    pub guarantee: Guarantee,
}

fn exact2() -> Guarantee {
    Guarantee {
        path: GuaranteePath::Exact2,
        factor: int(2),
    }
}

pub fn solve_ecsndp(g: &Graph, reqs: &PairRequirements) -> Result<SndpSolution, RoundingError> {
    let all: Vec<EdgeId> = (0..g.edges.len()).collect();
    for (u, v, r) in reqs.iter() {
        let available = edge_connectivity(g, &all, u, v);
        if available < r as usize {
            return Err(RoundingError::Infeasible {
                u,
                v,
                required: r,
                available,
            });
        }
    }
    let f = RequirementFn::pairwise_max(g.n, reqs.clone());
    let trace = jain_round(&g.ground(), &f, &g.costs())?;
    for (u, v, r) in reqs.iter() {
        let got = edge_connectivity(g, &trace.solution, u, v);
        if got < r as usize {
            return Err(RoundingError::PairUnverified {
                u,
                v,
                required: r,
                got,
            });
        }
    }
    Ok(SndpSolution {
        edges: trace.solution.clone(),
        nodes: Vec::new(),
        cost: trace.total_cost.clone(),
        lower_bound: trace.initial_lp_value.clone(),
        trace,
        guarantee: exact2(),
    })
}

/// Element-connectivity SNDP.
///
/// Unweighted instances go through the hypergraph reduction to covering by
/// a graph. Node-weighted ones first move each weight onto the incident
/// edges, halved; the lower bound is then the LP value divided by the loss
/// factor, and the guarantee is twice that factor.
pub fn solve_elemsndp(inst: &ElemInstance) -> Result<SndpSolution, RoundingError> {
    let all: Vec<EdgeId> = (0..inst.graph.edges.len()).collect();
    for (u, v, r) in inst.requirements.iter() {
        let available = element_connectivity(inst, &all, u, v)?;
        if available < r as usize {
            return Err(RoundingError::Infeasible {
                u,
                v,
                required: r,
                available,
            });
        }
    }
    let sol = if inst.has_node_weights() {
        let (ew, map, loss) = nw_elem_to_ew_elem(inst)?;
        let inner = solve_unweighted_elem(&ew)?;
        let back = map.pullback(inst, &ew, &inner.edges);
        let lower_bound = &inner.lower_bound / &loss;
        let guarantee = Guarantee {
            path: GuaranteePath::HalvingDplus,
            factor: int(2) * &loss,
        };
        check_bound(&back.original_cost, &guarantee.factor, &lower_bound)?;
        SndpSolution {
            edges: back.edges,
            nodes: back.nodes,
            cost: back.original_cost,
            lower_bound,
            trace: inner.trace,
            guarantee,
        }
    } else {
        solve_unweighted_elem(inst)?
    };
    for (u, v, r) in inst.requirements.iter() {
        let got = element_connectivity(inst, &sol.edges, u, v)?;
        if got < r as usize {
            return Err(RoundingError::PairUnverified {
                u,
                v,
                required: r,
                got,
            });
        }
    }
    Ok(sol)
}

fn solve_unweighted_elem(inst: &ElemInstance) -> Result<SndpSolution, RoundingError> {
    let (h, reqs, map) = elem_to_hyper(inst)?;
    let inner = solve_hypersndp(&h, &reqs)?;
    let (edges, _) = map.pullback(&inner.edges);
    let cost = rational::sum(edges.iter().map(|&e| &inst.graph.edges[e].cost));
    Ok(SndpSolution {
        edges,
        nodes: Vec::new(),
        cost,
        ..inner
    })
}

/// Hypergraph SNDP.
///
/// With no costed hyperedge of size above two, the large hyperedges are
/// free and taken up front, leaving a covering problem on a graph (factor
/// 2). Otherwise the instance goes to its bipartite node-weighted element
/// form and through [`solve_elemsndp`] (factor `d⁺`).
pub fn solve_hypersndp(
    h: &Hypergraph,
    reqs: &PairRequirements,
) -> Result<SndpSolution, RoundingError> {
    let all: Vec<EdgeId> = (0..h.hyperedges.len()).collect();
    for (u, v, r) in reqs.iter() {
        let available = hyperedge_connectivity(h, &all, u, v);
        if available < r as usize {
            return Err(RoundingError::Infeasible {
                u,
                v,
                required: r,
                available,
            });
        }
    }
    let sol = if h.hyperedges.iter().all(|e| e.cost.is_zero()) {
        SndpSolution {
            edges: all,
            nodes: Vec::new(),
            cost: Rational::zero(),
            lower_bound: Rational::zero(),
            trace: RoundingTrace {
                iterations: Vec::new(),
                initial_lp_value: Rational::zero(),
                solution: Vec::new(),
                total_cost: Rational::zero(),
                ground: h.ground(),
            },
            guarantee: exact2(),
        }
    } else if dplus(h) <= 2 {
        let (g, f, map) = hyper_to_graph_cover(h, reqs)?;
        let trace = jain_round(&g.ground(), &f, &g.costs())?;
        let edges = map.pullback(&trace.solution);
        let cost = rational::sum(edges.iter().map(|&e| &h.hyperedges[e].cost));
        SndpSolution {
            edges,
            nodes: Vec::new(),
            cost,
            lower_bound: trace.initial_lp_value.clone(),
            trace,
            guarantee: exact2(),
        }
    } else {
        let (nw, map) = hyper_to_nw_elem(h, reqs)?;
        let inner = solve_elemsndp(&nw)?;
        let edges = map.pullback(&inner.edges);
        let cost = rational::sum(edges.iter().map(|&e| &h.hyperedges[e].cost));
        check_bound(&cost, &inner.guarantee.factor, &inner.lower_bound)?;
        SndpSolution {
            edges,
            nodes: Vec::new(),
            cost,
            ..inner
        }
    };
    for (u, v, r) in reqs.iter() {
        let got = hyperedge_connectivity(h, &sol.edges, u, v);
        if got < r as usize {
            return Err(RoundingError::PairUnverified {
                u,
                v,
                required: r,
                got,
            });
        }
    }
    Ok(sol)
}

/// Solution report: cost, bound, chosen ids, per-iteration summary and the
/// guarantee. Iteration edge ids refer to the graph the rounding ran on.
pub fn solution_report(sol: &SndpSolution) -> Value {
    let iterations: Vec<Value> = sol
        .trace
        .iterations
        .iter()
        .map(|it| {
            json!({
                "lp_value": rational::to_json(&it.lp_value),
                "rounded": it.rounded,
                "dropped": it.dropped,
                "max_coord": rational::format(&it.max_coordinate()),
            })
        })
        .collect();
    let mut report = json!({
        "cost": rational::to_json(&sol.cost),
        "lp_lower_bound": rational::to_json(&sol.lower_bound),
        "edges": sol.edges,
        "iterations": iterations,
        "guarantee": {
            "factor": rational::to_json(&sol.guarantee.factor),
            "path": sol.guarantee.path,
        },
        "feasibility_checked": true,
    });
    if !sol.nodes.is_empty() {
        report["nodes"] = json!(sol.nodes);
    }
    report
}
