//! Dense bit-packed linear algebra over GF(2).
//!
//! Everything the solver and its oracles need reduces to three primitives on
//! binary matrices: rank, row-space membership (express a target row as an
//! XOR of matrix rows), and row summation. Rows are packed into 64-bit words
//! so elimination works word-parallel; pivots are always the first set bit in
//! scan order, which keeps every result reproducible.

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD_BITS)
}

/// Dense binary matrix with row and column labels.
///
/// Labels travel with the matrix so sub-matrices can be extracted by node
/// identity instead of positional bookkeeping at call sites. Plain numeric
/// matrices just use the default `usize` labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Matrix<L = usize> {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    row_labels: Vec<L>,
    col_labels: Vec<L>,
}

impl Gf2Matrix<usize> {
    /// Zero matrix with positional labels.
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self::with_labels((0..rows).collect(), (0..cols).collect())
    }

    /// Identity matrix with positional labels.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from explicit rows; any nonzero entry counts as 1.
    ///
    /// Panics on jagged input. Intended for small literal matrices in tests
    /// and examples.
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zero(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "jagged row {i}");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v != 0);
            }
        }
        m
    }

    /// Build from boolean rows (all rows must share one length).
    pub fn from_bool_rows(rows: &[Vec<bool>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zero(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "jagged row {i}");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }
}

impl<L: Clone + PartialEq> Gf2Matrix<L> {
    /// Zero matrix whose shape is given by the label vectors.
    ///
    /// Labels within one axis must be distinct; that invariant is what makes
    /// extraction by label well defined.
    pub fn with_labels(row_labels: Vec<L>, col_labels: Vec<L>) -> Self {
        debug_assert!(distinct(&row_labels), "row labels must be distinct");
        debug_assert!(distinct(&col_labels), "column labels must be distinct");
        let rows = row_labels.len();
        let cols = col_labels.len();
        let words_per_row = words_for(cols);
        Gf2Matrix {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
            row_labels,
            col_labels,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_labels(&self) -> &[L] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[L] {
        &self.col_labels
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        let w = r * self.words_per_row + c / WORD_BITS;
        self.bits[w] >> (c % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        let w = r * self.words_per_row + c / WORD_BITS;
        if v {
            self.bits[w] |= 1 << (c % WORD_BITS);
        } else {
            self.bits[w] &= !(1 << (c % WORD_BITS));
        }
    }

    pub fn row_bits(&self, r: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// GF(2) rank, computed by elimination on a scratch copy.
    pub fn rank(&self) -> usize {
        let w = self.words_per_row;
        let mut work = self.bits.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let word = col / WORD_BITS;
            let mask = 1u64 << (col % WORD_BITS);
            let Some(pivot) = (rank..self.rows).find(|&r| work[r * w + word] & mask != 0) else {
                continue;
            };
            if pivot != rank {
                for i in 0..w {
                    work.swap(rank * w + i, pivot * w + i);
                }
            }
            for r in rank + 1..self.rows {
                if work[r * w + word] & mask != 0 {
                    for i in 0..w {
                        work[r * w + i] ^= work[rank * w + i];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Find a subset `R` of rows with `XOR(R) == target`, if one exists.
    ///
    /// The returned indices are ascending. When the matrix has full row rank
    /// the subset is unique; otherwise free rows are left out, so the answer
    /// is still deterministic.
    pub fn solve_row_membership(&self, target: &[bool]) -> Result<Option<Vec<usize>>> {
        if target.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: target.len(),
            });
        }
        // One equation per column: sum over chosen rows of entry (row, col)
        // must equal target[col]. Unknowns are the row indicators, plus one
        // trailing RHS bit per equation.
        let unknowns = self.rows;
        let width = unknowns + 1;
        let w = words_for(width);
        let mut eqs = vec![0u64; self.cols * w];
        for c in 0..self.cols {
            for r in 0..unknowns {
                if self.get(r, c) {
                    eqs[c * w + r / WORD_BITS] |= 1 << (r % WORD_BITS);
                }
            }
            if target[c] {
                eqs[c * w + unknowns / WORD_BITS] |= 1 << (unknowns % WORD_BITS);
            }
        }
        let bit = |eqs: &[u64], e: usize, j: usize| eqs[e * w + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1;
        let mut pivots: Vec<usize> = Vec::new();
        let mut next = 0;
        for j in 0..unknowns {
            let Some(p) = (next..self.cols).find(|&e| bit(&eqs, e, j)) else {
                continue;
            };
            for i in 0..w {
                eqs.swap(next * w + i, p * w + i);
            }
            for e in 0..self.cols {
                if e != next && bit(&eqs, e, j) {
                    for i in 0..w {
                        eqs[e * w + i] ^= eqs[next * w + i];
                    }
                }
            }
            pivots.push(j);
            next += 1;
        }
        // Inconsistent leftover equations mean the target is outside the row space.
        for e in next..self.cols {
            if bit(&eqs, e, unknowns) {
                return Ok(None);
            }
        }
        let mut chosen = Vec::new();
        for (e, &j) in pivots.iter().enumerate() {
            if bit(&eqs, e, unknowns) {
                chosen.push(j);
            }
        }
        Ok(Some(chosen))
    }

    /// XOR of the selected rows; the empty selection yields the zero vector.
    pub fn row_sum(&self, rows: &[usize]) -> Result<Vec<bool>> {
        let mut acc = vec![0u64; self.words_per_row];
        for &r in rows {
            if r >= self.rows {
                return Err(Error::RowOutOfRange {
                    index: r,
                    rows: self.rows,
                });
            }
            for (a, b) in acc.iter_mut().zip(self.row_words(r)) {
                *a ^= b;
            }
        }
        Ok((0..self.cols)
            .map(|c| acc[c / WORD_BITS] >> (c % WORD_BITS) & 1 == 1)
            .collect())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Gf2Matrix::with_labels(self.col_labels.clone(), self.row_labels.clone());
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Matrix product over GF(2); labels come from the outer axes.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: rhs.rows,
            });
        }
        let mut out = Gf2Matrix::with_labels(self.row_labels.clone(), rhs.col_labels.clone());
        for r in 0..self.rows {
            let mut acc = vec![0u64; out.words_per_row];
            for j in 0..self.cols {
                if self.get(r, j) {
                    for (a, b) in acc.iter_mut().zip(rhs.row_words(j)) {
                        *a ^= b;
                    }
                }
            }
            let base = r * out.words_per_row;
            out.bits[base..base + out.words_per_row].copy_from_slice(&acc);
        }
        Ok(out)
    }
}

impl<L: Clone + PartialEq + std::fmt::Debug> Gf2Matrix<L> {
    /// Extract the sub-matrix selected by label, preserving the given order.
    pub fn submatrix(&self, row_labels: &[L], col_labels: &[L]) -> Result<Self> {
        let find = |labels: &[L], l: &L| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::LabelNotFound(format!("{l:?}")))
        };
        let row_pos: Vec<usize> = row_labels
            .iter()
            .map(|l| find(&self.row_labels, l))
            .collect::<Result<_>>()?;
        let col_pos: Vec<usize> = col_labels
            .iter()
            .map(|l| find(&self.col_labels, l))
            .collect::<Result<_>>()?;
        let mut out = Gf2Matrix::with_labels(row_labels.to_vec(), col_labels.to_vec());
        for (i, &r) in row_pos.iter().enumerate() {
            for (j, &c) in col_pos.iter().enumerate() {
                if self.get(r, c) {
                    out.set(i, j, true);
                }
            }
        }
        Ok(out)
    }
}

fn distinct<L: PartialEq>(labels: &[L]) -> bool {
    labels
        .iter()
        .enumerate()
        .all(|(i, l)| !labels[..i].contains(l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_identity() {
        assert_eq!(Gf2Matrix::identity(3).rank(), 3);
    }

    #[test]
    fn rank_equal_rows() {
        let m = Gf2Matrix::from_rows(&[&[1, 1], &[1, 1]]);
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn rank_dependent_third_row() {
        // row0 ^ row1 == row2
        let m = Gf2Matrix::from_rows(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]]);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn rank_empty() {
        assert_eq!(Gf2Matrix::zero(0, 0).rank(), 0);
        assert_eq!(Gf2Matrix::zero(0, 4).rank(), 0);
        assert_eq!(Gf2Matrix::zero(4, 0).rank(), 0);
    }

    #[test]
    fn solve_identity_basis() {
        let m = Gf2Matrix::identity(3);
        let r = m.solve_row_membership(&[true, false, true]).unwrap();
        assert_eq!(r, Some(vec![0, 2]));
    }

    #[test]
    fn solve_zero_target_is_empty() {
        let m = Gf2Matrix::from_rows(&[&[1, 1, 0], &[0, 1, 1]]);
        let r = m.solve_row_membership(&[false, false, false]).unwrap();
        assert_eq!(r, Some(vec![]));
    }

    /// Exhaustive subset oracle for a fixed 2x2 instance.
    #[test]
    fn solve_matches_subset_enumeration() {
        let m = Gf2Matrix::from_rows(&[&[1, 1], &[0, 1]]);
        let target = [true, false];
        let mut matches = Vec::new();
        for mask in 0u8..4 {
            let rows: Vec<usize> = (0..2).filter(|i| mask >> i & 1 == 1).collect();
            if m.row_sum(&rows).unwrap() == target {
                matches.push(rows);
            }
        }
        assert_eq!(matches, vec![vec![0, 1]]);
        let r = m.solve_row_membership(&target).unwrap();
        assert_eq!(r, Some(vec![0, 1]));
    }

    #[test]
    fn solve_absent_when_outside_row_space() {
        let m = Gf2Matrix::from_rows(&[&[1, 0, 0]]);
        let r = m.solve_row_membership(&[false, true, false]).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn solve_rejects_bad_dimension() {
        let m = Gf2Matrix::identity(2);
        assert!(matches!(
            m.solve_row_membership(&[true]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn row_sum_examples() {
        let id = Gf2Matrix::identity(2);
        assert_eq!(id.row_sum(&[0, 1]).unwrap(), vec![true, true]);
        assert_eq!(id.row_sum(&[]).unwrap(), vec![false, false]);
        let m = Gf2Matrix::from_rows(&[&[1, 1, 0], &[0, 1, 1]]);
        assert_eq!(m.row_sum(&[0, 1]).unwrap(), vec![true, false, true]);
        assert!(matches!(
            m.row_sum(&[5]),
            Err(Error::RowOutOfRange { .. })
        ));
    }

    #[test]
    fn submatrix_by_labels() {
        let mut m = Gf2Matrix::with_labels(vec!["a", "b", "c"], vec!["x", "y"]);
        m.set(0, 0, true);
        m.set(2, 1, true);
        let s = m.submatrix(&["c", "a"], &["y"]).unwrap();
        assert_eq!(s.row_labels(), &["c", "a"]);
        assert!(s.get(0, 0));
        assert!(!s.get(1, 0));
        assert!(m.submatrix(&["nope"], &["y"]).is_err());
    }

    #[test]
    fn mul_by_identity() {
        let m = Gf2Matrix::from_rows(&[&[1, 0, 1], &[0, 1, 1]]);
        let p = m.mul(&Gf2Matrix::identity(3)).unwrap();
        assert_eq!(p.row_bits(0), m.row_bits(0));
        assert_eq!(p.row_bits(1), m.row_bits(1));
    }

    fn arb_matrix(max: usize) -> impl Strategy<Value = Gf2Matrix> {
        (1..=max, 1..=max).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), c), r)
                .prop_map(|rows| Gf2Matrix::from_bool_rows(&rows))
        })
    }

    proptest! {
        #[test]
        fn rank_invariant_under_permutation(m in arb_matrix(7), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rows: Vec<usize> = (0..m.rows()).collect();
            let mut cols: Vec<usize> = (0..m.cols()).collect();
            rows.shuffle(&mut rng);
            cols.shuffle(&mut rng);
            let mut p = Gf2Matrix::zero(m.rows(), m.cols());
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    p.set(i, j, m.get(r, c));
                }
            }
            prop_assert_eq!(p.rank(), m.rank());
        }

        #[test]
        fn rank_of_transpose(m in arb_matrix(7)) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        /// r guaranteed-independent rows plus random combinations of them.
        #[test]
        fn rank_of_known_construction(
            r in 1usize..5,
            extra in 0usize..4,
            tail in proptest::collection::vec(any::<u8>(), 5),
            combos in proptest::collection::vec(any::<u8>(), 4),
        ) {
            let cols = r + tail.len();
            let mut rows: Vec<Vec<bool>> = Vec::new();
            for i in 0..r {
                // identity block in front keeps the first r rows independent
                let mut row = vec![false; cols];
                row[i] = true;
                for (j, &t) in tail.iter().enumerate() {
                    row[r + j] = t >> (i % 8) & 1 == 1;
                }
                rows.push(row);
            }
            for e in 0..extra {
                let mask = combos[e % combos.len()];
                let mut row = vec![false; cols];
                for (i, base) in rows[..r].iter().enumerate() {
                    if mask >> (i % 8) & 1 == 1 {
                        for (acc, &b) in row.iter_mut().zip(base) {
                            *acc ^= b;
                        }
                    }
                }
                rows.push(row);
            }
            prop_assert_eq!(Gf2Matrix::from_bool_rows(&rows).rank(), r);
        }

        #[test]
        fn solve_result_sums_to_target(m in arb_matrix(7), target_bits in proptest::collection::vec(any::<bool>(), 1..=7)) {
            let target: Vec<bool> = (0..m.cols()).map(|c| *target_bits.get(c).unwrap_or(&false)).collect();
            if let Some(rows) = m.solve_row_membership(&target).unwrap() {
                prop_assert_eq!(m.row_sum(&rows).unwrap(), target);
            }
        }

        /// Solvable exactly when appending the target does not raise the rank.
        #[test]
        fn solvable_iff_rank_unchanged(m in arb_matrix(7), target_bits in proptest::collection::vec(any::<bool>(), 1..=7)) {
            let target: Vec<bool> = (0..m.cols()).map(|c| *target_bits.get(c).unwrap_or(&false)).collect();
            let mut rows: Vec<Vec<bool>> = (0..m.rows()).map(|r| m.row_bits(r)).collect();
            rows.push(target.clone());
            let appended = Gf2Matrix::from_bool_rows(&rows);
            let solvable = m.solve_row_membership(&target).unwrap().is_some();
            prop_assert_eq!(solvable, appended.rank() == m.rank());
        }
    }
}
