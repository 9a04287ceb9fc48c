//! Random-walk spectral embedding of a similarity graph and the composed
//! clustering pipeline.
//!
//! `P = D⁻¹S` is similar to the symmetric `M = D^{-1/2} S D^{-1/2}`; an
//! eigenvector `v` of `M` maps to the eigenvector `u = D^{-1/2} v` of `P`
//! with the same eigenvalue. `M` always has the eigenpair
//! `(1, D^{1/2}1 / ‖D^{1/2}1‖)`, which is known in closed form and removed
//! before solving by shifting it to `-2`, below the rest of the spectrum.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::eigen::{dense_all, dot, krylov_top, EigenConfig, EigenPairs, EigenSolver};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{build_similarity, choose_p, SimilarityGraph};
use crate::matrix::Matrix;
use crate::partition::{fuzzy_kmeans, kmeans, ClusterResult, FuzzyConfig, KMeansConfig};

/// Embedding rows shorter than this are left at zero and reported.
pub const DEGENERATE_ROW_NORM: f64 = 1e-12;
/// Eigenvalues closer than this are ordered by their eigenvectors.
pub const EIGENVALUE_TIE: f64 = 1e-10;

/// Row-stochastic `P = D⁻¹S` in sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, p)| p * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, p) in r {
                m[(i, j)] = p;
            }
        }
        m
    }
}

fn check_degrees(s: &SimilarityGraph) -> Result<Vec<f64>> {
    let d = s.degrees();
    match d.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(Error::IsolatedPoint { index }),
        None => Ok(d),
    }
}

pub fn row_normalize(s: &SimilarityGraph) -> Result<TransitionMatrix> {
    let d = check_degrees(s)?;
    let rows = (0..s.n())
        .map(|i| s.row(i).iter().map(|&(j, v)| (j, v / d[i])).collect())
        .collect();
    Ok(TransitionMatrix { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// `1 = λ₁ ≥ λ₂ ≥ … ≥ λ_K`.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors `u₁..u_K` of `P` as columns, scaled so `uᵀDu = 1`.
    pub eigenvectors: Matrix,
    /// Rows of `(u₂..u_K)` scaled to unit length.
    pub embedding: Matrix,
    pub degree: Vec<f64>,
    pub degenerate_rows: Vec<usize>,
    pub solver: EigenSolver,
    pub iterations: usize,
}

impl SpectralEmbedding {
    /// Largest `‖P u − λ u‖∞ / ‖u‖∞` over the returned eigenpairs.
    pub fn max_relative_residual(&self, p: &TransitionMatrix) -> f64 {
        let mut worst = 0.0f64;
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let u = self.eigenvectors.column(k);
            let pu = p.apply(&u);
            let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let r = pu
                .iter()
                .zip(&u)
                .fold(0.0f64, |m, (a, b)| m.max((a - lambda * b).abs()));
            worst = worst.max(r / scale);
        }
        worst
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Flips `u` (and `v`) so the first entry of largest magnitude in `u` is positive.
fn fix_sign(u: &mut [f64], v: &mut [f64]) {
    let peak = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lead = u.iter().find(|x| x.abs() >= peak * (1.0 - 1e-9)).copied();
    if lead.is_some_and(|x| x < 0.0) {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Sign-fixed `P` eigenpairs ordered by decreasing eigenvalue, with runs of
/// eigenvalues within [`EIGENVALUE_TIE`] ordered lexicographically by `u`.
fn order_pairs(pairs: EigenPairs, sqrt_d: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut items: Vec<(f64, Vec<f64>)> = pairs
        .values
        .into_iter()
        .zip(pairs.vectors)
        .map(|(lambda, mut v)| {
            let mut u: Vec<f64> = v.iter().zip(sqrt_d).map(|(x, s)| x / s).collect();
            fix_sign(&mut u, &mut v);
            (lambda, u)
        })
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut start = 0;
    while start < items.len() {
        let mut end = start + 1;
        while end < items.len() && items[end - 1].0 - items[end].0 <= EIGENVALUE_TIE {
            end += 1;
        }
        items[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        start = end;
    }
    items.into_iter().unzip()
}

/// Leading `k` eigenpairs of `P` and the row-normalised embedding built from
/// `u₂..u_K`.
pub fn spectral_embedding(s: &SimilarityGraph, k: usize, config: &EigenConfig) -> Result<SpectralEmbedding> {
    let n = s.n();
    if k < 2 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let degree = check_degrees(s)?;
    let sqrt_d: Vec<f64> = degree.iter().map(|&d| libm::sqrt(d)).collect();
    let norm = libm::sqrt(dot(&sqrt_d, &sqrt_d));
    let lead: Vec<f64> = sqrt_d.iter().map(|v| v / norm).collect();
    let want = k - 1;

    let pairs = if n <= config.dense_limit {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for &(j, v) in s.row(i) {
                m[i * n + j] = v / (sqrt_d[i] * sqrt_d[j]);
            }
            for j in 0..n {
                m[i * n + j] -= 3.0 * lead[i] * lead[j];
            }
        }
        let mut all = dense_all(&m, n, config)?;
        all.values.truncate(n - 1);
        all.vectors.truncate(n - 1);
        all
    } else {
        let apply = |x: &[f64], y: &mut [f64]| {
            let c = 3.0 * dot(&lead, x);
            for i in 0..n {
                let mx: f64 = s
                    .row(i)
                    .iter()
                    .map(|&(j, v)| v / (sqrt_d[i] * sqrt_d[j]) * x[j])
                    .sum();
                y[i] = mx - c * lead[i];
            }
        };
        krylov_top(apply, n, want, config)?
    };
    let solver = pairs.solver;
    let iterations = pairs.iterations;
    let (mut values, mut vectors) = order_pairs(pairs, &sqrt_d);
    values.truncate(want);
    vectors.truncate(want);

    let mut eigenvalues = vec![1.0];
    eigenvalues.extend(values);
    let mut eigenvectors = Matrix::zeros(n, k);
    let mut embedding = Matrix::zeros(n, want);
    let mut degenerate_rows = Vec::new();
    for i in 0..n {
        eigenvectors[(i, 0)] = 1.0 / norm;
        for (c, u) in vectors.iter().enumerate() {
            eigenvectors[(i, c + 1)] = u[i];
            embedding[(i, c)] = u[i];
        }
        let row = embedding.row_mut(i);
        let len = libm::sqrt(dot(row, row));
        if len < DEGENERATE_ROW_NORM {
            row.iter_mut().for_each(|x| *x = 0.0);
            degenerate_rows.push(i);
        } else {
            row.iter_mut().for_each(|x| *x /= len);
        }
    }
    Ok(SpectralEmbedding {
        eigenvalues,
        eigenvectors,
        embedding,
        degree,
        degenerate_rows,
        solver,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Partitioner {
    #[default]
    Hard,
    Fuzzy,
}

impl Partitioner {
    pub fn as_str(self) -> &'static str {
        match self {
            Partitioner::Hard => "hard",
            Partitioner::Fuzzy => "fuzzy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    pub partitioner: Partitioner,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    /// Convergence threshold on centroid movement for the fuzzy partitioner.
    pub fuzzy_tol: f64,
    /// Neighbour count; `None` applies [`choose_p`].
    pub p: Option<usize>,
    pub eigen: EigenConfig,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            partitioner: Partitioner::Hard,
            seed: 0,
            restarts: 50,
            max_iter: 300,
            fuzzy_tol: 1e-8,
            p: None,
            eigen: EigenConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralClustering {
    pub clusters: ClusterResult,
    pub embedding: SpectralEmbedding,
    /// Neighbour count of the similarity graph, if one was built here.
    pub p: Option<usize>,
    /// `(label, size)` of found clusters smaller than `p`.
    pub small_clusters: Vec<(usize, usize)>,
}

fn partition(points: &Matrix, k: usize, config: &SpectralConfig) -> Result<ClusterResult> {
    match config.partitioner {
        Partitioner::Hard => kmeans(
            points,
            k,
            &KMeansConfig {
                seed: config.seed,
                restarts: config.restarts,
                max_iter: config.max_iter,
            },
        ),
        Partitioner::Fuzzy => fuzzy_kmeans(
            points,
            k,
            &FuzzyConfig {
                seed: config.seed,
                restarts: config.restarts,
                tol: config.fuzzy_tol,
                max_iter: config.max_iter,
            },
        ),
    }
}

/// Embeds the graph and partitions the embedding into `k` clusters.
pub fn cluster_graph(s: &SimilarityGraph, k: usize, config: &SpectralConfig) -> Result<SpectralClustering> {
    let embedding = spectral_embedding(s, k, &config.eigen).map_err(|e| e.in_stage("embedding"))?;
    let clusters = partition(&embedding.embedding, k, config).map_err(|e| e.in_stage("partition"))?;
    let small_clusters = match s.p() {
        Some(p) => clusters
            .cluster_sizes()
            .into_iter()
            .enumerate()
            .filter(|&(_, size)| size < p)
            .map(|(c, size)| (c + 1, size))
            .collect(),
        None => Vec::new(),
    };
    Ok(SpectralClustering {
        clusters,
        embedding,
        p: s.p(),
        small_clusters,
    })
}

/// Mutual-kNN graph on the rows of `points`, then [`cluster_graph`].
pub fn cluster_points(points: &Matrix, k: usize, config: &SpectralConfig) -> Result<SpectralClustering> {
    let n = points.rows();
    if k < 2 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let p = match config.p {
        Some(p) => p,
        None => choose_p(n, k).map_err(|e| e.in_stage("similarity"))?,
    };
    let s = build_similarity(points, p).map_err(|e| e.in_stage("similarity"))?;
    cluster_graph(&s, k, config)
}

/// Spectral clustering of standardised features.
pub fn spectral_cluster(features: &FeatureMatrix, k: usize, config: &SpectralConfig) -> Result<SpectralClustering> {
    cluster_points(features.values(), k, config)
}
