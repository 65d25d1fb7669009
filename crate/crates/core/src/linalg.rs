//! Dense Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::rational::Rational;

/// Row-echelon basis maintained incrementally; used to pick linearly
/// independent rows greedily.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    dim: usize,
    // reduced rows paired with their pivot column
    rows: Vec<(usize, Vec<Rational>)>,
}

impl EchelonBasis {
    pub fn new(dim: usize) -> Self {
        EchelonBasis {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn reduce(&self, v: &[Rational]) -> Vec<Rational> {
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            if !v[*p].is_zero() {
                let factor = v[*p].clone();
                for (vi, ri) in v.iter_mut().zip(row) {
                    if !ri.is_zero() {
                        *vi -= &factor * ri;
                    }
                }
            }
        }
        v
    }

    pub fn is_independent(&self, v: &[Rational]) -> bool {
        self.reduce(v).iter().any(|c| !c.is_zero())
    }

    /// Adds `v` if it is independent of the rows so far; returns whether it was added.
    pub fn insert(&mut self, v: &[Rational]) -> bool {
        assert_eq!(v.len(), self.dim);
        let mut r = self.reduce(v);
        let Some(p) = r.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let inv = Rational::one() / r[p].clone();
        for c in r.iter_mut() {
            *c *= &inv;
        }
        // keep earlier rows reduced in the new pivot column
        for (_, row) in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let factor = row[p].clone();
                for (ri, vi) in row.iter_mut().zip(&r) {
                    if !vi.is_zero() {
                        *ri -= &factor * vi;
                    }
                }
            }
        }
        self.rows.push((p, r));
        true
    }
}

/// Rank of a list of equally long rows.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut basis = EchelonBasis::new(first.len());
    for r in rows {
        basis.insert(r);
    }
    basis.rank()
}

/// Solves the square system `a x = b`; `None` when `a` is singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = Rational::one() / m[col][col].clone();
        for c in m[col].iter_mut() {
            *c *= &inv;
        }
        let prow = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (ri, pi) in row.iter_mut().zip(&prow) {
                    if !pi.is_zero() {
                        *ri -= &factor * pi;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn even_cycle_incidence_is_singular() {
        let rows = vec![
            v(&[1, 0, 0, 1]),
            v(&[1, 1, 0, 0]),
            v(&[0, 1, 1, 0]),
            v(&[0, 0, 1, 1]),
        ];
        assert_eq!(rank(&rows), 3);
        let odd = vec![v(&[1, 1, 0]), v(&[1, 0, 1]), v(&[0, 1, 1])];
        assert_eq!(rank(&odd), 3);
        let x = solve(&odd, &v(&[1, 1, 1])).unwrap();
        assert_eq!(x, vec![ratio(1, 2); 3]);
        assert!(solve(&rows, &v(&[1, 1, 1, 1])).is_none());
    }

    #[test]
    fn incremental_independence() {
        let mut b = EchelonBasis::new(3);
        assert!(b.insert(&v(&[1, 1, 0])));
        assert!(!b.insert(&v(&[2, 2, 0])));
        assert!(b.insert(&v(&[0, 1, 1])));
        assert!(!b.is_independent(&v(&[1, 2, 1])));
        assert!(b.is_independent(&v(&[0, 0, 1])));
    }
}
