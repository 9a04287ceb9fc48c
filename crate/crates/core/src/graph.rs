//! Mutual k-nearest-neighbour similarity graph.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// Neighbour count for `n` points and `k` clusters:
/// 2 if `n/k < 3.5`, 3 if `3.5 ≤ n/k < 4.5`, else `max(4, min(8, ⌊n/2k⌋))`.
pub fn choose_p(n: usize, k: usize) -> Result<usize> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    // compare n/k against 7/2 and 9/2 in integers
    Ok(if 2 * n < 7 * k {
        2
    } else if 2 * n < 9 * k {
        3
    } else {
        (n / (2 * k)).clamp(4, 8)
    })
}

/// The `p` nearest neighbours of every point (Euclidean, self excluded),
/// nearest first; equal distances go to the lower index.
pub fn knn_sets(points: &Matrix, p: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.rows();
    if p == 0 || p >= n {
        return Err(Error::InvalidNeighbourCount { p, n });
    }
    let mut out = Vec::with_capacity(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        let xi = points.row(i);
        cand.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(xi, points.row(j)), j)),
        );
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if p < cand.len() {
            cand.select_nth_unstable_by(p - 1, order);
            cand.truncate(p);
        }
        cand.sort_unstable_by(order);
        out.push(cand.iter().map(|c| c.1).collect());
    }
    Ok(out)
}

/// Symmetric, non-negative similarity matrix with zero diagonal, stored as
/// sorted sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    rows: Vec<Vec<(usize, f64)>>,
    p: Option<usize>,
}

impl SimilarityGraph {
    /// Validates a dense similarity matrix.
    pub fn from_dense(s: &Matrix) -> Result<Self> {
        let n = s.rows();
        if s.cols() != n {
            return Err(Error::InvalidSimilarity("matrix is not square"));
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            if s[(i, i)] != 0.0 {
                return Err(Error::InvalidSimilarity("diagonal must be zero"));
            }
            let mut row = Vec::new();
            for j in 0..n {
                let v = s[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidSimilarity("entries must be finite and non-negative"));
                }
                if v != s[(j, i)] {
                    return Err(Error::InvalidSimilarity("matrix is not symmetric"));
                }
                if v != 0.0 {
                    row.push((j, v));
                }
            }
            rows.push(row);
        }
        Ok(Self { rows, p: None })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Neighbour count the graph was built with, if it came from [`build_similarity`].
    pub fn p(&self) -> Option<usize> {
        self.p
    }

    /// Nonzero entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |k| self.rows[i][k].1)
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|e| e.1).sum())
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// All nonzero `(i, j, value)` triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }
}

/// `S_ij = 1` when i and j are each among the other's `p` nearest neighbours,
/// `½` when only one of them is, `0` otherwise.
pub fn build_similarity(points: &Matrix, p: usize) -> Result<SimilarityGraph> {
    let sets = knn_sets(points, p)?;
    let n = points.rows();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, set) in sets.iter().enumerate() {
        for &j in set {
            // each directed edge adds ½ to both endpoints; a mutual pair reaches 1
            rows[i].push((j, 0.5));
            rows[j].push((i, 0.5));
        }
    }
    for row in &mut rows {
        row.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for &(j, v) in row.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        *row = merged;
    }
    Ok(SimilarityGraph { rows, p: Some(p) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Matrix {
        Matrix::from_row_major(xs.len(), 1, xs.to_vec())
    }

    #[test]
    fn p_rule_examples() {
        assert_eq!(choose_p(20, 3), Ok(4));
        assert_eq!(choose_p(20, 6), Ok(2));
        assert_eq!(choose_p(100, 10), Ok(5));
        assert_eq!(choose_p(20, 5), Ok(3));
        assert_eq!(choose_p(1000, 2), Ok(8));
        assert!(matches!(choose_p(5, 5), Err(Error::InvalidK { .. })));
        assert!(matches!(choose_p(5, 0), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn knn_on_a_line() {
        let pts = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(knn_sets(&pts, 1).unwrap(), [vec![1], vec![0], vec![1], vec![2]]);
        let all = knn_sets(&pts, 3).unwrap();
        for (i, set) in all.iter().enumerate() {
            let mut s = set.clone();
            s.sort();
            assert_eq!(s, (0..4).filter(|&j| j != i).collect::<Vec<_>>());
        }
        assert!(knn_sets(&pts, 4).is_err());
    }

    #[test]
    fn duplicate_points_are_first_neighbours() {
        let pts = line(&[5.0, 0.0, 5.0, 1.0]);
        let sets = knn_sets(&pts, 1).unwrap();
        assert_eq!(sets[0], [2]);
        assert_eq!(sets[2], [0]);
    }

    #[test]
    fn similarity_examples() {
        let two = build_similarity(&line(&[0.0, 3.0]), 1).unwrap();
        assert_eq!(two.get(0, 1), 1.0);
        assert_eq!(two.get(1, 0), 1.0);

        let g = build_similarity(&line(&[0.0, 1.0, 2.0, 10.0]), 1).unwrap();
        let expected = [
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.5, 0.0],
            [0.0, 0.5, 0.0, 0.5],
            [0.0, 0.0, 0.5, 0.0],
        ];
        assert_eq!(g.to_dense(), Matrix::from_rows(&expected));
        assert_eq!(SimilarityGraph::from_dense(&g.to_dense()).unwrap().to_dense(), g.to_dense());
    }

    #[test]
    fn from_dense_rejects_bad_input() {
        let asym = Matrix::from_rows(&[[0.0, 1.0], [0.5, 0.0]]);
        assert!(SimilarityGraph::from_dense(&asym).is_err());
        let diag = Matrix::from_rows(&[[1.0, 1.0], [1.0, 0.0]]);
        assert!(SimilarityGraph::from_dense(&diag).is_err());
        let neg = Matrix::from_rows(&[[0.0, -1.0], [-1.0, 0.0]]);
        assert!(SimilarityGraph::from_dense(&neg).is_err());
    }
}
