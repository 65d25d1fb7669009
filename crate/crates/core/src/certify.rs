//! Structural checks on the vertices produced by rounding: half-integral
//! maximum, a laminar family of tight sets spanning the vertex, and the
//! counting identities over that family.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::exactlp::{certify_vertex, CertifyFailure, CoveringLP, Tight, VertexSolution};
use crate::instances::{EdgeId, Ground};
use crate::linalg::EchelonBasis;
use crate::rational::{self, half, Rational};
use crate::requirements::RequirementFn;
use crate::rounding::{IterationRecord, RoundingTrace};
use crate::vertex_set::VertexSet;

/// Largest ground set whose tight sets are enumerated exhaustively.
pub const MAX_ENUMERATION_VERTICES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertifyError {
    #[error("not fully fractional: x_{index} = {value}")]
    NotFullyFractional { index: usize, value: String },
    #[error("not a vertex: {0}")]
    NotAVertex(String),
    #[error("edge {0} is not a graph edge")]
    NotAGraph(EdgeId),
}

impl From<CertifyFailure> for CertifyError {
    fn from(e: CertifyFailure) -> Self {
        CertifyError::NotAVertex(e.to_string())
    }
}

/// The fractional part of a rounding vertex as a vertex of its own LP:
/// edges at 0 are deleted, edges at 1 are moved into the requirement.
#[derive(Debug, Clone)]
pub struct FractionalVertex {
    /// Edges of the fractional support, indexed like `vertex.x`.
    pub ground: Ground,
    /// Global id of each local edge.
    pub edge_ids: Vec<EdgeId>,
    pub requirement: RequirementFn,
    pub lp: CoveringLP,
    pub vertex: VertexSolution,
}

/// Restricts an iteration's vertex to its fractional coordinates and
/// re-certifies it. `None` when the vertex is integral.
pub fn fractional_restriction(
    record: &IterationRecord,
    ground: &Ground,
) -> Result<Option<FractionalVertex>, CertifyError> {
    let x = &record.vertex.x;
    let one = Rational::one();
    let frac: Vec<usize> = (0..x.len())
        .filter(|&j| !x[j].is_zero() && x[j] != one)
        .collect();
    if frac.is_empty() {
        return Ok(None);
    }
    let ones: Vec<VertexSet> = (0..x.len())
        .filter(|&j| x[j] == one)
        .map(|j| ground.edges[record.edge_ids[j]])
        .collect();
    let requirement = record.requirement.residual_masks(&ones);
    let edge_ids: Vec<EdgeId> = frac.iter().map(|&j| record.edge_ids[j]).collect();
    let sub = ground.restrict(&edge_ids);
    let mut lp = CoveringLP::new(
        edge_ids.clone(),
        frac.iter().map(|&j| record.lp.costs[j].clone()).collect(),
    );
    for row in &record.lp.rows {
        lp.add_cut(&sub, &requirement, row.tag);
    }
    let xf: Vec<Rational> = frac.iter().map(|&j| x[j].clone()).collect();
    let mut basis = EchelonBasis::new(frac.len());
    let mut chosen = Vec::new();
    let mut tight_rows = Vec::new();
    for c in lp.tight_constraints(&xf) {
        if let Tight::Row(i) = c {
            tight_rows.push(i);
            if basis.insert(&indicator(frac.len(), &lp.rows[i].vars)) {
                chosen.push(c);
            }
        }
    }
    let vertex = VertexSolution {
        objective: lp.objective(&xf),
        x: xf,
        tight_rows,
        basis: chosen,
    };
    certify_vertex(&vertex, &lp)?;
    Ok(Some(FractionalVertex {
        ground: sub,
        edge_ids,
        requirement,
        lp,
        vertex,
    }))
}

fn indicator(len: usize, ones: &[usize]) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); len];
    for &j in ones {
        v[j] = Rational::one();
    }
    v
}

/// Fractional vertices of every iteration of a run.
pub fn fractional_vertices(trace: &RoundingTrace) -> Result<Vec<FractionalVertex>, CertifyError> {
    let mut out = Vec::new();
    for it in &trace.iterations {
        if let Some(fv) = fractional_restriction(it, &trace.ground)? {
            out.push(fv);
        }
    }
    Ok(out)
}

/// A maximum below one half, with the vertex that has it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfEdgeViolation {
    pub max: Rational,
    pub dump: Value,
}

pub fn check_half_edge(sol: &VertexSolution) -> Result<(), HalfEdgeViolation> {
    let max = sol.max_coordinate();
    if max >= half() {
        return Ok(());
    }
    let dump = json!({
        "x": sol.x.iter().map(rational::to_json).collect::<Vec<_>>(),
        "objective": rational::to_json(&sol.objective),
        "tight_rows": sol.tight_rows,
        "basis": sol.basis.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>(),
    });
    Err(HalfEdgeViolation { max, dump })
}

/// Tight sets forming a rooted forest under inclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaminarFamily {
    /// Sorted by (size, bitmask), so parents come after children.
    pub sets: Vec<VertexSet>,
    pub values: Vec<i64>,
    pub parents: Vec<Option<usize>>,
    /// Candidates came from LP rows only, not from full enumeration.
    pub partial: bool,
}

impl LaminarFamily {
    /// Builds the forest; panics if two sets cross.
    pub fn new(mut sets: Vec<VertexSet>, f: &RequirementFn, partial: bool) -> Self {
        sets.sort_by_key(|s| (s.len(), s.bits()));
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                assert!(!a.crosses(*b) && a != b, "sets {a} and {b} are not laminar");
            }
        }
        let parents = (0..sets.len())
            .map(|i| (i + 1..sets.len()).find(|&j| sets[i].is_subset(sets[j])))
            .collect();
        let values = sets.iter().map(|&s| f.eval(s)).collect();
        LaminarFamily {
            sets,
            values,
            parents,
            partial,
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.parents[j] == Some(i))
            .collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.parents[j].is_none())
            .collect()
    }

    /// Number of family sets inside `sets[i]`, itself included.
    pub fn alpha(&self, i: usize) -> usize {
        self.sets
            .iter()
            .filter(|s| s.is_subset(self.sets[i]))
            .count()
    }
}

/// Cut vectors of tight sets with positive requirement, either enumerated
/// (small ground sets) or read off the LP rows.
fn tight_candidates(fv: &FractionalVertex) -> (Vec<VertexSet>, bool) {
    let n = fv.ground.n;
    let x = &fv.vertex.x;
    let tight = |s: VertexSet| {
        let need = fv.requirement.eval(s);
        need > 0 && fv.ground.cut_value(s, x) == Rational::from_integer(need.into())
    };
    if n <= MAX_ENUMERATION_VERTICES {
        let full = VertexSet::full(n);
        let sets = VertexSet::all_subsets(n)
            .filter(|&s| !s.is_empty() && s != full && tight(s))
            .collect();
        (sets, false)
    } else {
        let sets = fv
            .lp
            .rows
            .iter()
            .map(|r| r.tag)
            .filter(|&s| tight(s))
            .collect();
        (sets, true)
    }
}

/// A laminar family of tight sets whose cut vectors are independent and
/// determine the vertex.
///
/// A maximal laminar subfamily of the tight sets spans all of them, so the
/// sets are scanned by increasing size, keeping those that cross nothing
/// kept so far, and then thinned to an independent subfamily in the same
/// order.
pub fn extract_laminar_basis(fv: &FractionalVertex) -> Result<LaminarFamily, CertifyError> {
    let x = &fv.vertex.x;
    let one = Rational::one();
    if let Some(j) = (0..x.len()).find(|&j| x[j].is_zero() || x[j] == one) {
        return Err(CertifyError::NotFullyFractional {
            index: j,
            value: rational::format(&x[j]),
        });
    }
    let (mut candidates, partial) = tight_candidates(fv);
    candidates.sort_by_key(|s| (s.len(), s.bits()));
    let mut laminar: Vec<VertexSet> = Vec::new();
    for s in candidates {
        if laminar.iter().all(|t| !t.crosses(s)) {
            laminar.push(s);
        }
    }
    let m = x.len();
    let mut basis = EchelonBasis::new(m);
    let chosen: Vec<VertexSet> = laminar
        .into_iter()
        .filter(|&s| basis.insert(&indicator(m, &fv.ground.delta(s))))
        .collect();
    if chosen.len() < m {
        return Err(CertifyError::NotAVertex(format!(
            "laminar tight family has rank {} < {m} fractional edges",
            chosen.len()
        )));
    }
    Ok(LaminarFamily::new(chosen, &fv.requirement, partial))
}

/// Rank of the family's cut vectors over the ground's edges.
pub fn family_rank(family: &LaminarFamily, ground: &Ground) -> usize {
    let m = ground.num_edges();
    let mut basis = EchelonBasis::new(m);
    for &s in &family.sets {
        basis.insert(&indicator(m, &ground.delta(s)));
    }
    basis.rank()
}

/// Edges around a set `S` with children `C_1..C_k`, classified by where
/// their endpoints lie. `inner` holds edges with both ends in `S` but in
/// no child.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgePartition {
    /// Endpoints in two different children.
    pub child_child: Vec<EdgeId>,
    /// One endpoint in a child, the other in `S` outside all children.
    pub child_parent: Vec<EdgeId>,
    /// Leaves `S` from a vertex outside all children.
    pub parent_out: Vec<EdgeId>,
    /// Leaves `S` from inside a child.
    pub child_out: Vec<EdgeId>,
    pub inner: Vec<EdgeId>,
}

impl EdgePartition {
    pub fn gamma(&self) -> usize {
        self.child_child.len() + self.child_parent.len()
    }
}

fn endpoints(ground: &Ground, e: EdgeId) -> Result<(usize, usize), CertifyError> {
    let vs = ground.edges[e].to_vec();
    match vs[..] {
        [a, b] => Ok((a, b)),
        _ => Err(CertifyError::NotAGraph(e)),
    }
}

pub fn classify_edges(
    family: &LaminarFamily,
    i: usize,
    ground: &Ground,
) -> Result<EdgePartition, CertifyError> {
    let s = family.sets[i];
    let children: Vec<VertexSet> = family
        .children(i)
        .into_iter()
        .map(|c| family.sets[c])
        .collect();
    let child_of = |v: usize| children.iter().position(|c| c.contains(v));
    let mut p = EdgePartition::default();
    for e in 0..ground.num_edges() {
        let (a, b) = endpoints(ground, e)?;
        match (s.contains(a), s.contains(b)) {
            (true, true) => match (child_of(a), child_of(b)) {
                (Some(x), Some(y)) if x != y => p.child_child.push(e),
                (Some(_), Some(_)) => {}
                (Some(_), None) | (None, Some(_)) => p.child_parent.push(e),
                (None, None) => p.inner.push(e),
            },
            (true, false) | (false, true) => {
                let inside = if s.contains(a) { a } else { b };
                if child_of(inside).is_some() {
                    p.child_out.push(e);
                } else {
                    p.parent_out.push(e);
                }
            }
            (false, false) => {}
        }
    }
    Ok(p)
}

/// Edges with both endpoints in `s`.
pub fn beta(s: VertexSet, ground: &Ground) -> usize {
    ground.edges.iter().filter(|e| e.is_subset(s)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    /// `Σ f(C_i) - f(S) = 2x(E_cc) + x(E_cp) - x(E_po)`.
    TightRow,
    /// `β(S) = γ(S) + Σ β(C_i)`.
    Beta,
    /// `Σ α(R) = |family|` over roots `R`.
    AlphaRoot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityFailure {
    pub identity: Identity,
    /// Failing set (`None` for the root sum).
    pub set: Option<VertexSet>,
    pub lhs: String,
    pub rhs: String,
}

/// Checks the tightness identity for set `i` under a given partition.
pub fn check_tight_row(
    family: &LaminarFamily,
    i: usize,
    partition: &EdgePartition,
    x: &[Rational],
) -> Result<(), IdentityFailure> {
    let children = family.children(i);
    let lhs = Rational::from_integer(
        (children.iter().map(|&c| family.values[c]).sum::<i64>() - family.values[i]).into(),
    );
    let total = |ids: &[EdgeId]| rational::sum(ids.iter().map(|&e| &x[e]));
    let rhs = rational::int(2) * total(&partition.child_child) + total(&partition.child_parent)
        - total(&partition.parent_out);
    if lhs == rhs {
        Ok(())
    } else {
        Err(IdentityFailure {
            identity: Identity::TightRow,
            set: Some(family.sets[i]),
            lhs: rational::format(&lhs),
            rhs: rational::format(&rhs),
        })
    }
}

pub fn check_tight_rows(
    family: &LaminarFamily,
    x: &[Rational],
    ground: &Ground,
) -> Result<(), IdentityFailure> {
    for i in 0..family.len() {
        if family.children(i).is_empty() {
            continue;
        }
        let p = classify_edges(family, i, ground).map_err(|e| IdentityFailure {
            identity: Identity::TightRow,
            set: Some(family.sets[i]),
            lhs: e.to_string(),
            rhs: String::new(),
        })?;
        check_tight_row(family, i, &p, x)?;
    }
    Ok(())
}

pub fn check_beta(family: &LaminarFamily, ground: &Ground) -> Result<(), IdentityFailure> {
    for i in 0..family.len() {
        let p = classify_edges(family, i, ground).map_err(|e| IdentityFailure {
            identity: Identity::Beta,
            set: Some(family.sets[i]),
            lhs: e.to_string(),
            rhs: String::new(),
        })?;
        let lhs = beta(family.sets[i], ground);
        let rhs = p.gamma()
            + family
                .children(i)
                .iter()
                .map(|&c| beta(family.sets[c], ground))
                .sum::<usize>();
        if lhs != rhs {
            return Err(IdentityFailure {
                identity: Identity::Beta,
                set: Some(family.sets[i]),
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
            });
        }
    }
    Ok(())
}

pub fn check_alpha_root(family: &LaminarFamily) -> Result<(), IdentityFailure> {
    let lhs: usize = family.roots().iter().map(|&r| family.alpha(r)).sum();
    if lhs == family.len() {
        Ok(())
    } else {
        Err(IdentityFailure {
            identity: Identity::AlphaRoot,
            set: None,
            lhs: lhs.to_string(),
            rhs: family.len().to_string(),
        })
    }
}

/// All three counting identities; the first failure is returned.
pub fn check_counting_identity(
    family: &LaminarFamily,
    x: &[Rational],
    ground: &Ground,
) -> Result<(), IdentityFailure> {
    check_tight_rows(family, x, ground)?;
    check_beta(family, ground)?;
    check_alpha_root(family)
}

/// Every set with exactly one child has at least two edge endpoints at
/// vertices it owns (vertices in the set but not in the child).
pub fn check_unique_child(family: &LaminarFamily, ground: &Ground) -> Result<(), VertexSet> {
    for i in 0..family.len() {
        let children = family.children(i);
        if let [c] = children[..] {
            let own = family.sets[i].difference(family.sets[c]);
            let count: usize = ground.edges.iter().map(|e| e.intersection(own).len()).sum();
            if count < 2 {
                return Err(family.sets[i]);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimRow {
    pub set: VertexSet,
    pub f: i64,
    pub alpha: usize,
    pub beta: usize,
    /// `f >= alpha - beta`.
    pub satisfied: bool,
}

/// Per-set table of the inequality `f(S) >= α(S) - β(S)`. Diagnostic only.
pub fn claim_report(family: &LaminarFamily, ground: &Ground) -> Vec<ClaimRow> {
    (0..family.len())
        .map(|i| {
            let alpha = family.alpha(i);
            let beta = beta(family.sets[i], ground);
            let f = family.values[i];
            ClaimRow {
                set: family.sets[i],
                f,
                alpha,
                beta,
                satisfied: f >= alpha as i64 - beta as i64,
            }
        })
        .collect()
}

/// Outcome of every check on one fractional vertex.
#[derive(Debug, Clone)]
pub struct Certification {
    pub vertex_ok: bool,
    /// Ground set too large to enumerate; only LP rows were candidates.
    pub partial: bool,
    pub max: Rational,
    pub half_edge_ok: bool,
    pub family: Option<LaminarFamily>,
    pub rank: usize,
    pub failure: Option<String>,
    pub tight_rows: bool,
    pub beta: bool,
    pub alpha_root: bool,
    pub unique_child: bool,
    pub claim_table: Vec<ClaimRow>,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.vertex_ok
            && self.half_edge_ok
            && self.family.is_some()
            && self.tight_rows
            && self.beta
            && self.alpha_root
            && self.unique_child
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "vertex_ok": self.vertex_ok,
            "half_edge": { "max": rational::format(&self.max), "ok": self.half_edge_ok },
            "laminar": {
                "size": self.family.as_ref().map_or(0, |f| f.len()),
                "rank": self.rank,
            },
            "identities": { "eq3": self.tight_rows, "beta": self.beta, "alpha_root": self.alpha_root },
            "unique_child": self.unique_child,
            "claim_table": self.claim_table.iter().map(|r| json!({
                "set": r.set,
                "f": r.f,
                "alpha": r.alpha,
                "beta": r.beta,
                "satisfied": r.satisfied,
            })).collect::<Vec<_>>(),
        });
        if self.partial {
            v["partial"] = json!(true);
        }
        if let Some(msg) = &self.failure {
            v["failure"] = json!(msg);
        }
        v
    }
}

pub fn certify_fractional(fv: &FractionalVertex) -> Certification {
    let vertex_ok = certify_vertex(&fv.vertex, &fv.lp).is_ok();
    let max = fv.vertex.max_coordinate();
    let half_edge_ok = check_half_edge(&fv.vertex).is_ok();
    let mut c = Certification {
        vertex_ok,
        partial: fv.ground.n > MAX_ENUMERATION_VERTICES,
        max,
        half_edge_ok,
        family: None,
        rank: 0,
        failure: None,
        tight_rows: false,
        beta: false,
        alpha_root: false,
        unique_child: false,
        claim_table: Vec::new(),
    };
    match extract_laminar_basis(fv) {
        Ok(family) => {
            let x = &fv.vertex.x;
            c.rank = family_rank(&family, &fv.ground);
            c.tight_rows = check_tight_rows(&family, x, &fv.ground).is_ok();
            c.beta = check_beta(&family, &fv.ground).is_ok();
            c.alpha_root = check_alpha_root(&family).is_ok();
            c.unique_child = check_unique_child(&family, &fv.ground).is_ok();
            c.claim_table = claim_report(&family, &fv.ground);
            c.family = Some(family);
        }
        Err(e) => c.failure = Some(e.to_string()),
    }
    c
}

/// Certifies every fractional vertex of a rounding run.
pub fn certify_trace(trace: &RoundingTrace) -> Result<Vec<Certification>, CertifyError> {
    Ok(fractional_vertices(trace)?
        .iter()
        .map(certify_fractional)
        .collect())
}
