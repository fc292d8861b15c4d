//! Dense `m × n` grid of scalars with 1-based cell indexing.
//!
//! Cells are addressed `(i, j)` with `1 ≤ i ≤ m`, `1 ≤ j ≤ n`, matching the
//! usual double-subscript notation for cellular networks (and the `x11 …
//! xmn` column naming of exported trajectories). Storage is row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SicnnError};

/// Row-major matrix of `f64` with 1-based accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Grid {
    /// Grid filled with a constant value.
    pub fn constant(m: usize, n: usize, value: f64) -> Self {
        assert!(m > 0 && n > 0, "grid dimensions must be positive");
        Grid {
            m,
            n,
            data: vec![value; m * n],
        }
    }

    /// Grid from row-major rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(SicnnError::InvalidSpec(
                "grid needs at least one row".into(),
            ));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(SicnnError::InvalidSpec(
                "grid needs at least one column".into(),
            ));
        }
        let mut data = Vec::with_capacity(m * n);
        for (idx, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(SicnnError::InvalidSpec(format!(
                    "row {} has {} entries, expected {}",
                    idx + 1,
                    row.len(),
                    n
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Grid { m, n, data })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.m
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.n
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True when the grid has no cells (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Value at 1-based cell `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.flat(i, j)]
    }

    /// Overwrite the value at 1-based cell `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.flat(i, j);
        self.data[k] = value;
    }

    /// Row-major flat offset of 1-based `(i, j)`.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            (1..=self.m).contains(&i) && (1..=self.n).contains(&j),
            "cell ({i}, {j}) outside {}×{} grid",
            self.m,
            self.n
        );
        (i - 1) * self.n + (j - 1)
    }

    /// Underlying row-major slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Iterate cells in row-major order as `(i, j, value)` with 1-based
    /// indices.
    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k / n + 1, k % n + 1, v))
    }

    /// Largest value (grids are non-empty).
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest value.
    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_round_trips_values() {
        let g = Grid::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(g.rows(), 2);
        assert_eq!(g.cols(), 2);
        assert_eq!(g.get(1, 1), 1.0);
        assert_eq!(g.get(1, 2), 2.0);
        assert_eq!(g.get(2, 1), 3.0);
        assert_eq!(g.get(2, 2), 4.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = Grid::from_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, SicnnError::InvalidSpec(_)));
    }

    #[test]
    fn iter_cells_is_row_major_one_based() {
        let g = Grid::from_rows(&[vec![10.0, 20.0], vec![30.0, 40.0]]).unwrap();
        let cells: Vec<_> = g.iter_cells().collect();
        assert_eq!(
            cells,
            vec![(1, 1, 10.0), (1, 2, 20.0), (2, 1, 30.0), (2, 2, 40.0)]
        );
    }

    #[test]
    fn extrema() {
        let g = Grid::from_rows(&[
            vec![9.0, 3.0, 5.0],
            vec![6.0, 5.0, 4.0],
            vec![3.0, 12.0, 9.0],
        ])
        .unwrap();
        assert_eq!(g.min(), 3.0);
        assert_eq!(g.max(), 12.0);
    }
}
