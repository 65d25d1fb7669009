//! Exact covering LPs `min c·x  s.t.  x(δ(S)) >= f(S),  0 <= x <= 1`.
//!
//! The simplex works on `y = 1 - x`, which turns every cut row into a
//! packing row `y(δ(S)) <= |δ(S)| - f(S)` with a nonnegative right-hand side
//! whenever `x ≡ 1` is feasible. The all-slack basis is then primal feasible
//! and no phase one is needed. Pivoting follows Bland's rule, so the method
//! terminates on degenerate problems and ends on a genuine basis, which is
//! turned into the vertex certificate.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::instances::{EdgeId, Ground};
use crate::linalg;
use crate::rational::{self, Rational};
use crate::requirements::{RequirementError, RequirementFn};
use crate::vertex_set::VertexSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("infeasible: x ≡ 1 violates the row for {tag} (|δ| = {available}, rhs = {rhs})")]
    Infeasible {
        tag: VertexSet,
        available: usize,
        rhs: i64,
    },
    #[error("requirement function is trivial")]
    Trivial,
    #[error("separation oracle unavailable: {0}")]
    Oracle(#[from] RequirementError),
    #[error("objective decreased from {before} to {after} after adding a cut")]
    NotMonotone { before: String, after: String },
    #[error("oracle returned a cut already satisfied by the current rows: {0}")]
    StaleCut(VertexSet),
}

/// `x(δ(S)) >= rhs`; `vars` are variable indices (sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutRow {
    pub vars: Vec<usize>,
    pub rhs: i64,
    pub tag: VertexSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringLP {
    /// Global edge id of each variable.
    pub edge_ids: Vec<EdgeId>,
    pub costs: Vec<Rational>,
    pub rows: Vec<CutRow>,
    index: HashMap<Vec<usize>, usize>,
}

impl CoveringLP {
    pub fn new(edge_ids: Vec<EdgeId>, costs: Vec<Rational>) -> Self {
        assert_eq!(edge_ids.len(), costs.len());
        CoveringLP {
            edge_ids,
            costs,
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    /// Adds a row unless it is vacuous (`rhs <= 0`) or dominated by an
    /// existing row on the same edge set. Rows are deduplicated by edge set,
    /// keeping the larger right-hand side. Returns whether the LP changed.
    pub fn add_row(&mut self, mut vars: Vec<usize>, rhs: i64, tag: VertexSet) -> bool {
        if rhs <= 0 {
            return false;
        }
        vars.sort_unstable();
        vars.dedup();
        match self.index.get(&vars) {
            Some(&i) if self.rows[i].rhs >= rhs => false,
            Some(&i) => {
                self.rows[i].rhs = rhs;
                self.rows[i].tag = tag;
                true
            }
            None => {
                self.index.insert(vars.clone(), self.rows.len());
                self.rows.push(CutRow { vars, rhs, tag });
                true
            }
        }
    }

    /// Adds the cut row of `set` for the ground edges (one variable per edge).
    pub fn add_cut(&mut self, ground: &Ground, f: &RequirementFn, set: VertexSet) -> bool {
        self.add_row(ground.delta(set), f.eval(set), set)
    }

    pub fn row_value(&self, row: &CutRow, x: &[Rational]) -> Rational {
        rational::sum(row.vars.iter().map(|&j| &x[j]))
    }

    pub fn objective(&self, x: &[Rational]) -> Rational {
        self.costs
            .iter()
            .zip(x)
            .fold(Rational::zero(), |acc, (c, v)| acc + c * v)
    }

    fn constraint_vector(&self, c: Tight) -> (Vec<Rational>, Rational) {
        let m = self.num_vars();
        let mut v = vec![Rational::zero(); m];
        match c {
            Tight::Row(i) => {
                for &j in &self.rows[i].vars {
                    v[j] = Rational::one();
                }
                (v, Rational::from_integer(self.rows[i].rhs.into()))
            }
            Tight::Lower(j) => {
                v[j] = Rational::one();
                (v, Rational::zero())
            }
            Tight::Upper(j) => {
                v[j] = Rational::one();
                (v, Rational::one())
            }
        }
    }

    /// Every row and bound holding with equality at `x`.
    pub fn tight_constraints(&self, x: &[Rational]) -> Vec<Tight> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if self.row_value(row, x) == Rational::from_integer(row.rhs.into()) {
                out.push(Tight::Row(i));
            }
        }
        for (j, xj) in x.iter().enumerate() {
            if xj.is_zero() {
                out.push(Tight::Lower(j));
            } else if xj.is_one() {
                out.push(Tight::Upper(j));
            }
        }
        out
    }
}

/// A constraint taken with equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tight {
    /// Cut row `i` of the LP.
    Row(usize),
    /// `x_j = 0`.
    Lower(usize),
    /// `x_j = 1`.
    Upper(usize),
}

/// Basic feasible solution with a certificate of uniqueness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSolution {
    pub x: Vec<Rational>,
    pub objective: Rational,
    /// Indices of the cut rows satisfied with equality.
    pub tight_rows: Vec<usize>,
    /// Exactly `num_vars` linearly independent tight constraints.
    pub basis: Vec<Tight>,
}

impl VertexSolution {
    pub fn max_coordinate(&self) -> Rational {
        self.x.iter().max().cloned().unwrap_or_else(Rational::zero)
    }
}

struct Tableau {
    // rows of [coefficients | rhs]
    rows: Vec<Vec<Rational>>,
    obj: Vec<Rational>,
    basic: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, p: usize, q: usize) {
        let inv = Rational::one() / self.rows[p][q].clone();
        for c in self.rows[p].iter_mut() {
            if !c.is_zero() {
                *c *= &inv;
            }
        }
        let prow = self.rows[p].clone();
        let nz: Vec<usize> = (0..=self.cols).filter(|&j| !prow[j].is_zero()).collect();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == p || row[q].is_zero() {
                continue;
            }
            let factor = row[q].clone();
            for &j in &nz {
                row[j] -= &factor * &prow[j];
            }
        }
        if !self.obj[q].is_zero() {
            let factor = self.obj[q].clone();
            for &j in &nz {
                self.obj[j] -= &factor * &prow[j];
            }
        }
        self.basic[p] = q;
    }
}

/// Solves the LP to an optimal vertex with exact arithmetic.
pub fn solve_to_vertex(lp: &CoveringLP) -> Result<VertexSolution, LpError> {
    let m = lp.num_vars();
    let r = lp.rows.len();
    for row in &lp.rows {
        if (row.vars.len() as i64) < row.rhs {
            return Err(LpError::Infeasible {
                tag: row.tag,
                available: row.vars.len(),
                rhs: row.rhs,
            });
        }
    }
    // columns: y_0..y_{m-1}, row slacks m..m+r, bound slacks m+r..m+r+m
    let cols = m + r + m;
    let mut rows = Vec::with_capacity(r + m);
    for (i, row) in lp.rows.iter().enumerate() {
        let mut t = vec![Rational::zero(); cols + 1];
        for &j in &row.vars {
            t[j] = Rational::one();
        }
        t[m + i] = Rational::one();
        t[cols] = Rational::from_integer((row.vars.len() as i64 - row.rhs).into());
        rows.push(t);
    }
    for j in 0..m {
        let mut t = vec![Rational::zero(); cols + 1];
        t[j] = Rational::one();
        t[m + r + j] = Rational::one();
        t[cols] = Rational::one();
        rows.push(t);
    }
    // maximize c·y: reduced costs start at -c
    let mut obj = vec![Rational::zero(); cols + 1];
    for j in 0..m {
        obj[j] = -lp.costs[j].clone();
    }
    let mut tab = Tableau {
        rows,
        obj,
        basic: (m..cols).collect(),
        cols,
    };

    loop {
        // Bland: lowest-index improving column
        let Some(q) = (0..cols).find(|&j| tab.obj[j].is_negative()) else {
            break;
        };
        let mut best: Option<(usize, Rational)> = None;
        for (i, row) in tab.rows.iter().enumerate() {
            if !row[q].is_positive() {
                continue;
            }
            let ratio = &row[cols] / &row[q];
            let better = match &best {
                None => true,
                Some((b, br)) => ratio < *br || (ratio == *br && tab.basic[i] < tab.basic[*b]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        let (p, _) = best.expect("covering LP is bounded");
        tab.pivot(p, q);
    }

    let mut y = vec![Rational::zero(); m];
    let mut is_basic = vec![false; cols];
    for (i, &b) in tab.basic.iter().enumerate() {
        is_basic[b] = true;
        if b < m {
            y[b] = tab.rows[i][cols].clone();
        }
    }
    let x: Vec<Rational> = y.iter().map(|v| Rational::one() - v).collect();
    let basis: Vec<Tight> = (0..cols)
        .filter(|&j| !is_basic[j])
        .map(|j| {
            if j < m {
                Tight::Upper(j)
            } else if j < m + r {
                Tight::Row(j - m)
            } else {
                Tight::Lower(j - m - r)
            }
        })
        .collect();
    debug_assert_eq!(basis.len(), m);
    let tight_rows = lp
        .rows
        .iter()
        .enumerate()
        .filter(|(_, row)| lp.row_value(row, &x) == Rational::from_integer(row.rhs.into()))
        .map(|(i, _)| i)
        .collect();
    let objective = lp.objective(&x);
    Ok(VertexSolution {
        x,
        objective,
        tight_rows,
        basis,
    })
}

/// Why a claimed vertex failed certification.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertifyFailure {
    #[error("solution has {got} coordinates, LP has {expected} variables")]
    Dimension { got: usize, expected: usize },
    #[error("x_{0} is outside [0, 1]")]
    OutOfBounds(usize),
    #[error("row {row} ({tag}) violated: {value} < {rhs}")]
    RowViolated {
        row: usize,
        tag: VertexSet,
        value: String,
        rhs: i64,
    },
    #[error("certificate has {got} constraints for {expected} variables")]
    CertificateSize { got: usize, expected: usize },
    #[error("certificate constraint {0:?} is not tight")]
    NotTight(Tight),
    #[error("rank {rank} < {expected}: not uniquely determined")]
    RankDeficient { rank: usize, expected: usize },
    #[error("certificate system solves to a different point")]
    Mismatch,
}

/// Re-verifies feasibility, the certificate's rank, and that the certificate
/// system reproduces `x` exactly.
pub fn certify_vertex(sol: &VertexSolution, lp: &CoveringLP) -> Result<(), CertifyFailure> {
    let m = lp.num_vars();
    if sol.x.len() != m {
        return Err(CertifyFailure::Dimension {
            got: sol.x.len(),
            expected: m,
        });
    }
    for (j, xj) in sol.x.iter().enumerate() {
        if xj.is_negative() || xj > &Rational::one() {
            return Err(CertifyFailure::OutOfBounds(j));
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let value = lp.row_value(row, &sol.x);
        if value < Rational::from_integer(row.rhs.into()) {
            return Err(CertifyFailure::RowViolated {
                row: i,
                tag: row.tag,
                value: rational::format(&value),
                rhs: row.rhs,
            });
        }
    }
    let mut a = Vec::with_capacity(sol.basis.len());
    let mut b = Vec::with_capacity(sol.basis.len());
    for &c in &sol.basis {
        let (v, rhs) = lp.constraint_vector(c);
        let lhs = v
            .iter()
            .zip(&sol.x)
            .fold(Rational::zero(), |acc, (vi, xi)| acc + vi * xi);
        if lhs != rhs {
            return Err(CertifyFailure::NotTight(c));
        }
        a.push(v);
        b.push(rhs);
    }
    let rank = linalg::rank(&a);
    if rank < m {
        return Err(CertifyFailure::RankDeficient { rank, expected: m });
    }
    if sol.basis.len() != m {
        return Err(CertifyFailure::CertificateSize {
            got: sol.basis.len(),
            expected: m,
        });
    }
    match linalg::solve(&a, &b) {
        Some(x) if x == sol.x => Ok(()),
        _ => Err(CertifyFailure::Mismatch),
    }
}

/// Outcome of [`cutting_plane_solve`].
#[derive(Debug, Clone)]
pub struct CuttingPlaneResult {
    pub lp: CoveringLP,
    pub solution: VertexSolution,
    pub rows_generated: usize,
    /// Objective after each LP solve, in order.
    pub objective_history: Vec<Rational>,
}

/// Solves the covering LP of `f` over all edges of `ground` by cutting
/// planes: solve the current relaxation to a vertex, ask the separation
/// oracle for a violated set, add its row, repeat.
///
/// `warm` seeds the relaxation with previously discovered sets; their rows
/// are rebuilt against `f` and `ground`.
pub fn cutting_plane_solve(
    ground: &Ground,
    f: &RequirementFn,
    costs: &[Rational],
    edge_ids: &[EdgeId],
    warm: &[VertexSet],
) -> Result<CuttingPlaneResult, LpError> {
    assert_eq!(ground.num_edges(), costs.len());
    if f.is_trivial()? {
        return Err(LpError::Trivial);
    }
    let ones = vec![Rational::one(); ground.num_edges()];
    if let Some(cut) = f.separate(ground, &ones)? {
        let available = ground.delta(cut.set).len();
        return Err(LpError::Infeasible {
            tag: cut.set,
            available,
            rhs: f.eval(cut.set),
        });
    }
    let mut lp = CoveringLP::new(edge_ids.to_vec(), costs.to_vec());
    for &s in warm {
        lp.add_cut(ground, f, s);
    }
    let mut rows_generated = 0;
    let mut history: Vec<Rational> = Vec::new();
    loop {
        let solution = solve_to_vertex(&lp)?;
        if let Some(prev) = history.last() {
            if solution.objective < *prev {
                return Err(LpError::NotMonotone {
                    before: rational::format(prev),
                    after: rational::format(&solution.objective),
                });
            }
        }
        history.push(solution.objective.clone());
        match f.separate(ground, &solution.x)? {
            None => {
                return Ok(CuttingPlaneResult {
                    lp,
                    solution,
                    rows_generated,
                    objective_history: history,
                })
            }
            Some(cut) => {
                if !lp.add_cut(ground, f, cut.set) {
                    return Err(LpError::StaleCut(cut.set));
                }
                rows_generated += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::PairRequirements;
    use crate::rational::{int, ratio};

    fn set(vs: &[usize]) -> VertexSet {
        vs.iter().copied().collect()
    }

    fn cycle(n: usize) -> Ground {
        Ground::new(n, (0..n).map(|i| set(&[i, (i + 1) % n])).collect())
    }

    fn unit_lp(ground: &Ground, f: &RequirementFn, sets: &[VertexSet]) -> CoveringLP {
        let m = ground.num_edges();
        let mut lp = CoveringLP::new((0..m).collect(), vec![int(1); m]);
        for &s in sets {
            lp.add_cut(ground, f, s);
        }
        lp
    }

    #[test]
    fn four_cycle_explicit_rows() {
        let g = cycle(4);
        let f = RequirementFn::pairwise_max(4, PairRequirements::uniform(0..4, 1));
        let sets: Vec<VertexSet> = VertexSet::all_subsets(4)
            .filter(|s| (1..=2).contains(&s.len()))
            .collect();
        let lp = unit_lp(&g, &f, &sets);
        let sol = solve_to_vertex(&lp).unwrap();
        assert_eq!(sol.x, vec![ratio(1, 2); 4]);
        assert_eq!(sol.objective, int(2));
        certify_vertex(&sol, &lp).unwrap();
    }

    #[test]
    fn forced_single_edge() {
        let g = Ground::new(2, vec![set(&[0, 1])]);
        let f = RequirementFn::pairwise_max(2, [(0, 1, 1)].into_iter().collect());
        let mut lp = CoveringLP::new(vec![0], vec![int(5)]);
        lp.add_cut(&g, &f, set(&[0]));
        let sol = solve_to_vertex(&lp).unwrap();
        assert_eq!(sol.x, vec![int(1)]);
        assert_eq!(sol.objective, int(5));
    }

    #[test]
    fn triangle_singletons() {
        let g = cycle(3);
        let f = RequirementFn::pairwise_max(3, PairRequirements::uniform(0..3, 1));
        let lp = unit_lp(&g, &f, &[set(&[0]), set(&[1]), set(&[2])]);
        let sol = solve_to_vertex(&lp).unwrap();
        assert_eq!(sol.x, vec![ratio(1, 2); 3]);
        assert_eq!(sol.objective, ratio(3, 2));
        certify_vertex(&sol, &lp).unwrap();
    }

    #[test]
    fn singleton_certificate_on_even_cycle_is_rank_deficient() {
        let g = cycle(4);
        let f = RequirementFn::pairwise_max(4, PairRequirements::uniform(0..4, 1));
        let lp = unit_lp(&g, &f, &[set(&[0]), set(&[1]), set(&[2]), set(&[3])]);
        let sol = VertexSolution {
            x: vec![ratio(1, 2); 4],
            objective: int(2),
            tight_rows: vec![0, 1, 2, 3],
            basis: (0..4).map(Tight::Row).collect(),
        };
        let err = certify_vertex(&sol, &lp).unwrap_err();
        assert!(err.to_string().starts_with("rank 3 < 4"), "{err}");
    }

    #[test]
    fn midpoint_is_not_a_vertex() {
        let g = cycle(3);
        let f = RequirementFn::pairwise_max(3, PairRequirements::uniform(0..3, 1));
        let lp = unit_lp(&g, &f, &[set(&[0]), set(&[1]), set(&[2])]);
        // (1,1,0) and (1/2,1/2,1/2) are both vertices; take their midpoint
        let x = vec![ratio(3, 4), ratio(3, 4), ratio(1, 4)];
        let tight = lp.tight_constraints(&x);
        let mid = VertexSolution {
            x: x.clone(),
            objective: lp.objective(&x),
            tight_rows: vec![],
            basis: tight,
        };
        let err = certify_vertex(&mid, &lp).unwrap_err();
        assert!(matches!(err, CertifyFailure::RankDeficient { .. }), "{err}");

        // borrowing a neighbouring vertex's certificate fails too
        let sol = solve_to_vertex(&lp).unwrap();
        let borrowed = VertexSolution {
            basis: sol.basis.clone(),
            ..mid
        };
        assert!(certify_vertex(&borrowed, &lp).is_err());
    }

    #[test]
    fn infeasible_row() {
        let mut lp = CoveringLP::new(vec![0], vec![int(1)]);
        lp.add_row(vec![0], 2, set(&[0]));
        assert!(matches!(
            solve_to_vertex(&lp),
            Err(LpError::Infeasible { .. })
        ));
    }

    #[test]
    fn rows_dedup_by_edge_set() {
        let mut lp = CoveringLP::new(vec![0, 1], vec![int(1), int(1)]);
        assert!(lp.add_row(vec![1, 0], 1, set(&[0])));
        assert!(!lp.add_row(vec![0, 1], 1, set(&[2])));
        assert!(lp.add_row(vec![0, 1], 2, set(&[2])));
        assert!(!lp.add_row(vec![0], 0, set(&[3])));
        assert_eq!(lp.rows.len(), 1);
        assert_eq!(lp.rows[0].rhs, 2);
    }

    #[test]
    fn cutting_planes_on_four_cycle() {
        let g = cycle(4);
        let f = RequirementFn::pairwise_max(4, PairRequirements::uniform(0..4, 1));
        let res = cutting_plane_solve(&g, &f, &vec![int(1); 4], &[0, 1, 2, 3], &[]).unwrap();
        assert_eq!(res.solution.x, vec![ratio(1, 2); 4]);
        assert_eq!(res.solution.objective, int(2));
        assert!(res.rows_generated > 0);
        assert!(res.objective_history.windows(2).all(|w| w[0] <= w[1]));
        certify_vertex(&res.solution, &res.lp).unwrap();
    }

    #[test]
    fn trivial_function_is_rejected() {
        let g = cycle(3);
        let f = RequirementFn::pairwise_max(3, PairRequirements::new());
        let err = cutting_plane_solve(&g, &f, &vec![int(1); 3], &[0, 1, 2], &[]).unwrap_err();
        assert_eq!(err, LpError::Trivial);
    }

    #[test]
    fn explicit_table_needs_small_ground() {
        let mut values = vec![0i64; 1 << 11];
        values[1] = 1;
        let f = RequirementFn::explicit(11, values).unwrap();
        let g = Ground::new(11, vec![set(&[0, 1])]);
        let err = cutting_plane_solve(&g, &f, &[int(1)], &[0], &[]).unwrap_err();
        assert!(matches!(err, LpError::Oracle(_)));
    }
}
