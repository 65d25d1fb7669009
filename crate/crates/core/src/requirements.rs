//! Requirement functions `f: 2^V -> Z` and exhaustive checks of the set
//! function classes the rounding analysis relies on.

use num_traits::{Signed, Zero};

use crate::connectivity::{self, ViolatedCut};
use crate::instances::{EdgeId, Ground, PairRequirements};
use crate::rational::Rational;
use crate::vertex_set::VertexSet;

/// Largest ground set for an explicit table.
pub const MAX_TABLE_VERTICES: usize = 16;
/// Largest ground set for the 4^n pair checks.
pub const MAX_PAIR_CHECK_VERTICES: usize = 8;
/// Largest ground set for exhaustive separation.
pub const MAX_EXHAUSTIVE_SEPARATION: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequirementError {
    #[error("ground set of {n} vertices exceeds the limit of {limit} for {what}")]
    TooLarge {
        n: usize,
        limit: usize,
        what: &'static str,
    },
    #[error("explicit table has {got} entries, expected {expected}")]
    TableSize { got: usize, expected: usize },
}

/// A requirement function on the vertex set `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequirementFn {
    /// `f(S) = max r(uv)` over pairs split by `S`.
    PairwiseMax { n: usize, reqs: PairRequirements },
    /// Values indexed by the bitmask of `S`.
    ExplicitTable { n: usize, values: Vec<i64> },
    /// `f(S) - |delta_fixed(S)|`, where `fixed` is a multiset of edges given
    /// by their endpoint sets. `base` is never itself a residual.
    Residual {
        base: Box<RequirementFn>,
        fixed: Vec<VertexSet>,
    },
}

impl RequirementFn {
    pub fn pairwise_max(n: usize, reqs: PairRequirements) -> Self {
        RequirementFn::PairwiseMax { n, reqs }
    }

    pub fn explicit(n: usize, values: Vec<i64>) -> Result<Self, RequirementError> {
        if n > MAX_TABLE_VERTICES {
            return Err(RequirementError::TooLarge {
                n,
                limit: MAX_TABLE_VERTICES,
                what: "explicit tables",
            });
        }
        if values.len() != 1 << n {
            return Err(RequirementError::TableSize {
                got: values.len(),
                expected: 1 << n,
            });
        }
        Ok(RequirementFn::ExplicitTable { n, values })
    }

    pub fn n(&self) -> usize {
        match self {
            RequirementFn::PairwiseMax { n, .. } | RequirementFn::ExplicitTable { n, .. } => *n,
            RequirementFn::Residual { base, .. } => base.n(),
        }
    }

    /// The innermost non-residual function.
    pub fn base(&self) -> &RequirementFn {
        match self {
            RequirementFn::Residual { base, .. } => base,
            other => other,
        }
    }

    /// Edges already paid for; empty unless this is a residual.
    pub fn fixed(&self) -> &[VertexSet] {
        match self {
            RequirementFn::Residual { fixed, .. } => fixed,
            _ => &[],
        }
    }

    pub fn eval(&self, s: VertexSet) -> i64 {
        match self {
            RequirementFn::PairwiseMax { reqs, .. } => connectivity::pairwise_max(reqs, s) as i64,
            RequirementFn::ExplicitTable { values, .. } => values[s.index()],
            RequirementFn::Residual { base, fixed } => {
                base.eval(s) - fixed.iter().filter(|&&m| s.cuts(m)).count() as i64
            }
        }
    }

    /// Values on every subset, indexed by bitmask.
    pub fn table(&self) -> Result<Vec<i64>, RequirementError> {
        let n = self.n();
        if n > MAX_TABLE_VERTICES {
            return Err(RequirementError::TooLarge {
                n,
                limit: MAX_TABLE_VERTICES,
                what: "enumeration",
            });
        }
        Ok(VertexSet::all_subsets(n).map(|s| self.eval(s)).collect())
    }

    /// `g(S) = f(S) - |delta_fixed(S)|` with `fixed` a set of edge ids of `ground`.
    pub fn residual(&self, ground: &Ground, fixed: &[EdgeId]) -> RequirementFn {
        let masks: Vec<VertexSet> = fixed.iter().map(|&e| ground.edges[e]).collect();
        self.residual_masks(&masks)
    }

    /// Residual by edges given as endpoint sets. Nested residuals collapse
    /// into one fixed multiset.
    pub fn residual_masks(&self, fixed: &[VertexSet]) -> RequirementFn {
        if fixed.is_empty() {
            return self.clone();
        }
        match self {
            RequirementFn::Residual { base, fixed: prior } => {
                let mut all = prior.clone();
                all.extend_from_slice(fixed);
                RequirementFn::Residual {
                    base: base.clone(),
                    fixed: all,
                }
            }
            other => RequirementFn::Residual {
                base: Box::new(other.clone()),
                fixed: fixed.to_vec(),
            },
        }
    }

    /// True iff `f(S) <= 0` for every proper nonempty `S`.
    pub fn is_trivial(&self) -> Result<bool, RequirementError> {
        match (self.base(), self) {
            (RequirementFn::PairwiseMax { reqs, .. }, RequirementFn::PairwiseMax { .. }) => {
                Ok(reqs.rmax() == 0)
            }
            (RequirementFn::PairwiseMax { n, reqs }, _) => {
                let empty = Ground::new(*n, Vec::new());
                Ok(connectivity::find_violated_cut(&empty, &[], self.fixed(), reqs).is_none())
            }
            _ => {
                let n = self.n();
                let full = VertexSet::full(n);
                Ok(self
                    .table()?
                    .iter()
                    .enumerate()
                    .all(|(i, &v)| v <= 0 || i == 0 || VertexSet::from_bits(i as u128) == full))
            }
        }
    }

    /// Finds a set whose requirement exceeds its capacity under `x` on
    /// `ground`'s edges, or proves none exists.
    ///
    /// Pairwise-max functions (and their residuals) use per-pair max-flow;
    /// explicit tables fall back to scanning all `2^n - 2` proper sets.
    pub fn separate(
        &self,
        ground: &Ground,
        x: &[Rational],
    ) -> Result<Option<ViolatedCut>, RequirementError> {
        match self.base() {
            RequirementFn::PairwiseMax { reqs, .. } => Ok(connectivity::find_violated_cut(
                ground,
                x,
                self.fixed(),
                reqs,
            )),
            _ => {
                let n = self.n();
                if n > MAX_EXHAUSTIVE_SEPARATION {
                    return Err(RequirementError::TooLarge {
                        n,
                        limit: MAX_EXHAUSTIVE_SEPARATION,
                        what: "exhaustive separation",
                    });
                }
                let full = VertexSet::full(n);
                for s in VertexSet::all_subsets(n) {
                    if s.is_empty() || s == full {
                        continue;
                    }
                    let need = Rational::from_integer(self.eval(s).into());
                    let deficit = need - ground.cut_value(s, x);
                    if deficit.is_positive() {
                        return Ok(Some(ViolatedCut { set: s, deficit }));
                    }
                }
                Ok(None)
            }
        }
    }
}

/// Result of an exhaustive set-function check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Counterexample),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Counterexample {
    /// Neither skew-supermodular inequality holds for `(a, b)`.
    Skew {
        a: VertexSet,
        b: VertexSet,
    },
    Symmetry {
        set: VertexSet,
    },
    Submodular {
        a: VertexSet,
        b: VertexSet,
    },
    Posimodular {
        a: VertexSet,
        b: VertexSet,
    },
}

fn pair_check_size(n: usize) -> Result<(), RequirementError> {
    if n > MAX_PAIR_CHECK_VERTICES {
        return Err(RequirementError::TooLarge {
            n,
            limit: MAX_PAIR_CHECK_VERTICES,
            what: "pair checks",
        });
    }
    Ok(())
}

/// For all `A, B`: `f(A)+f(B) <= f(A∩B)+f(A∪B)` or `f(A)+f(B) <= f(A-B)+f(B-A)`.
pub fn check_skew_supermodular(f: &RequirementFn) -> Result<Verdict, RequirementError> {
    pair_check_size(f.n())?;
    let t = f.table()?;
    Ok(skew_supermodular_table(f.n(), &t))
}

pub fn skew_supermodular_table(n: usize, t: &[i64]) -> Verdict {
    for a in VertexSet::all_subsets(n) {
        for b in VertexSet::all_subsets(n) {
            let lhs = t[a.index()] + t[b.index()];
            let meet_join = t[a.intersection(b).index()] + t[a.union(b).index()];
            let cross = t[a.difference(b).index()] + t[b.difference(a).index()];
            if lhs > meet_join && lhs > cross {
                return Verdict::Fail(Counterexample::Skew { a, b });
            }
        }
    }
    Verdict::Pass
}

/// Symmetry, submodularity and posi-modularity of a table.
pub fn symmetric_submodular_table(n: usize, t: &[i64]) -> Verdict {
    for s in VertexSet::all_subsets(n) {
        if t[s.index()] != t[s.complement(n).index()] {
            return Verdict::Fail(Counterexample::Symmetry { set: s });
        }
    }
    for a in VertexSet::all_subsets(n) {
        for b in VertexSet::all_subsets(n) {
            let lhs = t[a.index()] + t[b.index()];
            if lhs < t[a.intersection(b).index()] + t[a.union(b).index()] {
                return Verdict::Fail(Counterexample::Submodular { a, b });
            }
            if lhs < t[a.difference(b).index()] + t[b.difference(a).index()] {
                return Verdict::Fail(Counterexample::Posimodular { a, b });
            }
        }
    }
    Verdict::Pass
}

/// Checks that `|delta_F|` is symmetric, submodular and posi-modular, for
/// the edges `subset` of a graph or hypergraph.
pub fn check_symmetric_submodular(
    ground: &Ground,
    subset: &[EdgeId],
) -> Result<Verdict, RequirementError> {
    pair_check_size(ground.n)?;
    let t: Vec<i64> = VertexSet::all_subsets(ground.n)
        .map(|s| ground.cut_size(s, subset) as i64)
        .collect();
    Ok(symmetric_submodular_table(ground.n, &t))
}

/// Same check applied to an arbitrary function given as a table.
pub fn check_symmetric_submodular_fn(f: &RequirementFn) -> Result<Verdict, RequirementError> {
    pair_check_size(f.n())?;
    Ok(symmetric_submodular_table(f.n(), &f.table()?))
}

/// Convenience for exact comparisons against LP values.
pub fn eval_rational(f: &RequirementFn, s: VertexSet) -> Rational {
    let v = f.eval(s);
    if v == 0 {
        Rational::zero()
    } else {
        Rational::from_integer(v.into())
    }
}
