//! Growable, sparse-by-row reachability distance matrix.
//!
//! Conceptually an n-by-n matrix of reach-distances where unstored cells are
//! zero. Row `i` holds entries only for the indices the owning engine
//! currently treats as the k nearest neighbors of point `i`, so each row has
//! at most k entries. Rows are kept sorted by column index, which makes the
//! whole structure deterministic to traverse.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl ReachabilityMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current point count (the matrix is conceptually n-by-n).
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Grows the matrix by one row and one column; returns the new index.
    pub fn push_row(&mut self) -> usize {
        self.rows.push(Vec::new());
        self.rows.len() - 1
    }

    /// Writes `rdm[row][col] = value`, inserting or overwriting.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(value.is_finite() && value >= 0.0);
        let entries = &mut self.rows[row];
        match entries.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(pos) => entries[pos].1 = value,
            Err(pos) => entries.insert(pos, (col, value)),
        }
    }

    /// Deletes a stored entry, returning its previous value.
    pub fn remove(&mut self, row: usize, col: usize) -> Option<f64> {
        let entries = &mut self.rows[row];
        match entries.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(pos) => Some(entries.remove(pos).1),
            Err(_) => None,
        }
    }

    /// Stored value at `(row, col)`, if any. Unstored cells are conceptually
    /// zero.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let entries = &self.rows[row];
        entries
            .binary_search_by_key(&col, |&(c, _)| c)
            .ok()
            .map(|pos| entries[pos].1)
    }

    /// Stored entries of one row, sorted by column index.
    pub fn row(&self, row: usize) -> &[(usize, f64)] {
        &self.rows[row]
    }

    pub fn row_len(&self, row: usize) -> usize {
        self.rows[row].len()
    }

    /// Total stored entries.
    pub fn stored_entries(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_remove_roundtrip() {
        let mut m = ReachabilityMatrix::new();
        let r0 = m.push_row();
        let r1 = m.push_row();
        m.set(r0, 1, 2.5);
        m.set(r1, 0, 1.5);
        m.set(r0, 1, 3.5); // overwrite
        assert_eq!(m.get(r0, 1), Some(3.5));
        assert_eq!(m.get(r0, 0), None);
        assert_eq!(m.remove(r0, 1), Some(3.5));
        assert_eq!(m.get(r0, 1), None);
        assert_eq!(m.n(), 2);
    }

    #[test]
    fn rows_stay_sorted_by_column() {
        let mut m = ReachabilityMatrix::new();
        let r = m.push_row();
        for col in [5, 1, 3, 2, 4] {
            m.set(r, col, col as f64);
        }
        let cols: Vec<usize> = m.row(r).iter().map(|&(c, _)| c).collect();
        assert_eq!(cols, vec![1, 2, 3, 4, 5]);
        assert_eq!(m.stored_entries(), 5);
    }
}
