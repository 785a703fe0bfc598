//! LU factorization with partial pivoting for matrices whose nonzeros hug
//! the diagonal with a variable profile.
//!
//! Storage is column oriented. Column `c` keeps rows `top[c]..=bot[c]`,
//! where the bounds are the worst-case reach of both the original pattern
//! and any fill that row interchanges can create. Each elimination step only
//! touches the rows that can be nonzero below the pivot and the columns that
//! the pivot row actually reaches, so locally narrow regions stay cheap even
//! when a few columns are wide.

use alloc::vec::Vec;

use thiserror::Error;

use super::sparse::CsrMatrix;
use super::Scalar;

/// Relative pivot threshold below which the matrix is declared near-singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("near-singular: pivot {pivot:e} at column {column} (matrix scale {scale:e})")]
    NearSingular { column: usize, pivot: f64, scale: f64 },
    #[error("non-finite entry encountered at column {column}")]
    NonFinite { column: usize },
}

/// Factors `P A = L U` held in variable-band storage.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    top: Vec<usize>,
    bot: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<T>,
    piv: Vec<usize>,
    min_pivot: f64,
}

impl<T: Scalar> BandLu<T> {
    pub fn factorize(a: &CsrMatrix<T>) -> Result<Self, FactorError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(FactorError::NotSquare {
                rows: n,
                cols: a.ncols(),
            });
        }
        if n == 0 {
            return Ok(Self {
                n,
                top: Vec::new(),
                bot: Vec::new(),
                offset: alloc::vec![0],
                data: Vec::new(),
                piv: Vec::new(),
                min_pivot: f64::INFINITY,
            });
        }

        // first and last nonzero column of each row (diagonal always included)
        let mut first = alloc::vec![0usize; n];
        let mut last = alloc::vec![0usize; n];
        for i in 0..n {
            let (cols, _) = a.row(i);
            first[i] = cols.first().map_or(i, |&c| c.min(i));
            last[i] = cols.last().map_or(i, |&c| c.max(i));
        }

        // bot[j]: deepest row that can hold a nonzero in column j
        let mut bot = alloc::vec![0usize; n];
        for (i, &f) in first.iter().enumerate() {
            bot[f] = bot[f].max(i);
        }
        let mut run = 0;
        for j in 0..n {
            run = run.max(bot[j]).max(j);
            bot[j] = run;
        }

        // reach[j]: furthest column any pivot row at step j can extend to
        let mut prefix_last = alloc::vec![0usize; n];
        let mut run = 0;
        for i in 0..n {
            run = run.max(last[i]);
            prefix_last[i] = run;
        }
        let reach: Vec<usize> = (0..n).map(|j| prefix_last[bot[j]].max(j)).collect();

        // top[c]: first step whose pivot row can reach column c
        let mut top = alloc::vec![0usize; n];
        let mut j = 0;
        for c in 0..n {
            while reach[j] < c {
                j += 1;
            }
            top[c] = j;
        }

        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for c in 0..n {
            offset.push(total);
            total += bot[c] - top[c] + 1;
        }
        offset.push(total);

        let mut data = alloc::vec![T::zero(); total];
        let mut scale: f64 = 0.0;
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                data[offset[c] + i - top[c]] = v;
                scale = scale.max(v.modulus());
            }
        }

        let mut lu = Self {
            n,
            top,
            bot,
            offset,
            data,
            piv: alloc::vec![0; n],
            min_pivot: f64::INFINITY,
        };
        lu.eliminate(last, scale)?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, c: usize) -> usize {
        debug_assert!(i >= self.top[c] && i <= self.bot[c]);
        self.offset[c] + i - self.top[c]
    }

    fn eliminate(&mut self, mut reach_row: Vec<usize>, scale: f64) -> Result<(), FactorError> {
        let n = self.n;
        let threshold = SINGULAR_PIVOT_RATIO * scale;
        let mut multipliers: Vec<T> = Vec::new();
        for j in 0..n {
            let lo = self.bot[j];
            // pivot search
            let base = self.idx(j, j);
            let col = &self.data[base..=base + (lo - j)];
            let mut p = 0;
            let mut best = -1.0;
            for (k, v) in col.iter().enumerate() {
                let m = v.modulus();
                if m > best {
                    best = m;
                    p = k;
                }
            }
            if !best.is_finite() {
                return Err(FactorError::NonFinite { column: j });
            }
            if best <= threshold {
                return Err(FactorError::NearSingular {
                    column: j,
                    pivot: best,
                    scale,
                });
            }
            self.min_pivot = self.min_pivot.min(best);
            let prow = j + p;
            self.piv[j] = prow;
            if prow != j {
                let span = reach_row[j].max(reach_row[prow]);
                for c in j..=span {
                    let a = self.idx(j, c);
                    let b = self.idx(prow, c);
                    self.data.swap(a, b);
                }
                reach_row.swap(j, prow);
            }
            let uc = reach_row[j];
            if lo == j {
                continue;
            }

            let pivot = self.data[base];
            multipliers.clear();
            for v in &mut self.data[base + 1..=base + (lo - j)] {
                *v = *v / pivot;
                multipliers.push(*v);
            }

            for c in j + 1..=uc {
                let uidx = self.idx(j, c);
                let u = self.data[uidx];
                if u == T::zero() {
                    continue;
                }
                let start = uidx + 1;
                let target = &mut self.data[start..start + (lo - j)];
                for (t, &l) in target.iter_mut().zip(&multipliers) {
                    *t -= l * u;
                }
            }
            for (k, &l) in multipliers.iter().enumerate() {
                if l != T::zero() {
                    let r = j + 1 + k;
                    reach_row[r] = reach_row[r].max(uc);
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot modulus met during elimination.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Number of stored entries (memory footprint of the factors).
    pub fn storage_len(&self) -> usize {
        self.data.len()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        for j in 0..self.n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj == T::zero() {
                continue;
            }
            let lo = self.bot[j];
            let base = self.idx(j, j);
            for (k, &l) in self.data[base + 1..=base + (lo - j)].iter().enumerate() {
                b[j + 1 + k] -= l * bj;
            }
        }
        for j in (0..self.n).rev() {
            let base = self.offset[j];
            let top = self.top[j];
            let xj = b[j] / self.data[base + j - top];
            b[j] = xj;
            if xj == T::zero() {
                continue;
            }
            for (k, &u) in self.data[base..base + (j - top)].iter().enumerate() {
                b[top + k] -= u * xj;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{norm2, C64};
    use alloc::vec;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn residual<T: Scalar>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> f64 {
        let ax = a.mul_vec(x);
        let r: Vec<T> = ax.iter().zip(b).map(|(&p, &q)| p - q).collect();
        norm2(&r) / norm2(b)
    }

    #[test]
    fn solves_matrix_that_needs_pivoting() {
        // zero leading diagonal forces a row interchange
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 3.0)],
        );
        let lu = BandLu::factorize(&a).unwrap();
        let b = vec![1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-15);
    }

    #[test]
    fn variable_profile_complex_system() {
        let n: usize = 120;
        let mut seed = 7u64;
        let mut trip = Vec::new();
        for i in 0..n {
            // narrow band except a wide block in the middle
            let w = if (50..60).contains(&i) { 25 } else { 3 };
            for j in i.saturating_sub(w)..(i + w + 1).min(n) {
                trip.push((i, j, C64::new(lcg(&mut seed), lcg(&mut seed))));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, trip);
        let lu = BandLu::factorize(&a).unwrap();
        let b: Vec<C64> = (0..n).map(|_| C64::new(lcg(&mut seed), lcg(&mut seed))).collect();
        let x = lu.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-11);
        assert!(lu.storage_len() < n * n);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)]);
        match BandLu::factorize(&a) {
            Err(FactorError::NearSingular { column, pivot, .. }) => {
                assert_eq!(column, 1);
                assert!(pivot < 1e-12);
            }
            other => panic!("expected near-singular, got {other:?}"),
        }
    }
}
