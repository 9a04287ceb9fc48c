//! Hard and fuzzy K-means with multi-restart selection.
//!
//! Every restart draws from its own ChaCha8 stream: the generator is seeded
//! with `seed` and the stream number is the restart index, so restarts are
//! independent of evaluation order.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::stream_rng;

/// Fuzzy labels whose top two weights differ by less than this are low-confidence.
pub const LOW_CONFIDENCE_MARGIN: f64 = 0.1;

/// Points closer than this to a centroid are treated as sitting on it.
const COINCIDENT_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 50,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 50,
            tol: 1e-8,
            max_iter: 300,
        }
    }
}

/// Outcome of a hard or fuzzy partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster of each point, in `1..=K`. For fuzzy runs, the argmax of the weights.
    pub labels: Vec<usize>,
    /// `n × K` degrees of belonging, fuzzy runs only.
    pub weights: Option<Matrix>,
    pub centers: Matrix,
    /// WCSS for hard runs, fuzzy WCSS for fuzzy runs.
    pub wcss: f64,
    pub restarts_run: usize,
    /// Iterations used by the selected restart.
    pub iterations: usize,
    /// Whether the selected restart met its stopping rule before `max_iter`.
    pub converged: bool,
    pub seed: u64,
    /// Fuzzy points whose top two weights are within [`LOW_CONFIDENCE_MARGIN`].
    pub low_confidence: Vec<usize>,
    /// Objective after each iteration of the selected restart.
    pub trace: Vec<f64>,
}

impl ClusterResult {
    pub fn k(&self) -> usize {
        self.centers.rows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(())
}

/// Within-cluster sum of squares of a labelling (labels in `1..=K`).
pub fn wcss(points: &Matrix, labels: &[usize], k: usize) -> f64 {
    let centers = means(points, labels, k);
    points
        .iter_rows()
        .zip(labels)
        .map(|(x, &l)| squared_distance(x, centers.row(l - 1)))
        .sum()
}

fn means(points: &Matrix, labels: &[usize], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (x, &l) in points.iter_rows().zip(labels) {
        counts[l - 1] += 1;
        for (s, v) in sums.row_mut(l - 1).iter_mut().zip(x) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            for s in sums.row_mut(c) {
                *s /= count as f64;
            }
        }
    }
    sums
}

/// Distance-weighted (k-means++) seeding.
fn seed_centers(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = points
        .iter_rows()
        .map(|x| squared_distance(x, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| nearest.iter().rposition(|d| *d > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..n)
        };
        chosen.push(pick);
        for (i, x) in points.iter_rows().enumerate() {
            nearest[i] = nearest[i].min(squared_distance(x, points.row(pick)));
        }
    }
    points.select_rows(&chosen)
}

fn nearest_center(x: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter_rows().enumerate() {
        let d = squared_distance(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

struct Run {
    labels: Vec<usize>,
    centers: Matrix,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn lloyd(points: &Matrix, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> Run {
    let n = points.rows();
    let mut centers = seed_centers(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    // roundoff allowance for the non-increase check
    let slack = 1e-12 * points.iter_rows().map(|x| x.iter().map(|v| v * v).sum::<f64>()).sum::<f64>();

    for iter in 0..max_iter {
        iterations = iter + 1;
        let mut changed = iter == 0;
        let mut counts = vec![0usize; k];
        for (i, x) in points.iter_rows().enumerate() {
            let (c, d) = nearest_center(x, &centers);
            changed |= labels[i] != c + 1;
            labels[i] = c + 1;
            dist[i] = d;
            counts[c] += 1;
        }
        // an empty cluster takes the point farthest from its own center
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut far: Option<usize> = None;
            for i in 0..n {
                if counts[labels[i] - 1] > 1 && far.is_none_or(|f| dist[i] > dist[f]) {
                    far = Some(i);
                }
            }
            let Some(i) = far else { break };
            counts[labels[i] - 1] -= 1;
            counts[empty] += 1;
            labels[i] = empty + 1;
            dist[i] = 0.0;
            centers.row_mut(empty).copy_from_slice(points.row(i));
            changed = true;
        }
        let objective: f64 = dist.iter().sum();
        if let Some(&prev) = trace.last() {
            debug_assert!(
                objective <= prev + slack,
                "WCSS increased from {prev} to {objective}"
            );
        }
        trace.push(objective);
        if !changed {
            converged = true;
            break;
        }
        centers = means(points, &labels, k);
    }
    let centers = means(points, &labels, k);
    let objective = points
        .iter_rows()
        .zip(&labels)
        .map(|(x, &l)| squared_distance(x, centers.row(l - 1)))
        .sum();
    Run {
        labels,
        centers,
        objective,
        iterations,
        converged,
        trace,
    }
}

/// Multi-restart Lloyd K-means; keeps the restart with the smallest WCSS
/// (the earliest one on exact ties).
pub fn kmeans(points: &Matrix, k: usize, config: &KMeansConfig) -> Result<ClusterResult> {
    check_k(points.rows(), k)?;
    if config.restarts == 0 || config.max_iter == 0 {
        return Err(Error::InvalidParameter("restarts and max_iter must be positive"));
    }
    let mut best: Option<Run> = None;
    for restart in 0..config.restarts {
        let mut rng = stream_rng(config.seed, restart as u64);
        let run = lloyd(points, k, config.max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok(ClusterResult {
        labels: best.labels,
        weights: None,
        centers: best.centers,
        wcss: best.objective,
        restarts_run: config.restarts,
        iterations: best.iterations,
        converged: best.converged,
        seed: config.seed,
        low_confidence: Vec::new(),
        trace: best.trace,
    })
}

/// Degrees of belonging of one point: normalised inverse squared distances.
///
/// A point within `1e-12` of one or more centroids is split evenly among them.
pub fn fuzzy_weights(x: &[f64], centers: &Matrix) -> Vec<f64> {
    let d2: Vec<f64> = centers.iter_rows().map(|c| squared_distance(x, c)).collect();
    let on = COINCIDENT_DISTANCE * COINCIDENT_DISTANCE;
    let hits = d2.iter().filter(|&&d| d < on).count();
    if hits > 0 {
        let share = 1.0 / hits as f64;
        return d2.iter().map(|&d| if d < on { share } else { 0.0 }).collect();
    }
    let closest = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let inv: Vec<f64> = d2.iter().map(|d| closest / d).collect();
    let total: f64 = inv.iter().sum();
    inv.iter().map(|w| w / total).collect()
}

/// Argmax cluster (1-based, earliest on ties) and whether the top two weights
/// are within [`LOW_CONFIDENCE_MARGIN`].
pub fn argmax_label(weights: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (k, w) in weights.iter().enumerate() {
        if *w > weights[best] {
            best = k;
        }
    }
    let runner_up = weights
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != best)
        .map(|(_, w)| *w)
        .fold(f64::NEG_INFINITY, f64::max);
    (best + 1, weights[best] - runner_up < LOW_CONFIDENCE_MARGIN)
}

fn weight_matrix(points: &Matrix, centers: &Matrix) -> Matrix {
    let mut w = Matrix::zeros(points.rows(), centers.rows());
    for (i, x) in points.iter_rows().enumerate() {
        let row = fuzzy_weights(x, centers);
        debug_assert!(
            (row.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && row.iter().all(|v| *v >= 0.0),
            "fuzzy weights must be a distribution"
        );
        w.row_mut(i).copy_from_slice(&row);
    }
    w
}

fn fuzzy_objective(points: &Matrix, centers: &Matrix, weights: &Matrix) -> f64 {
    let mut total = 0.0;
    for (i, x) in points.iter_rows().enumerate() {
        for (k, c) in centers.iter_rows().enumerate() {
            let w = weights[(i, k)];
            total += w * w * squared_distance(x, c);
        }
    }
    total
}

struct FuzzyRun {
    centers: Matrix,
    weights: Matrix,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn fuzzy_run(points: &Matrix, k: usize, config: &FuzzyConfig, rng: &mut ChaCha8Rng) -> FuzzyRun {
    let dim = points.cols();
    let mut centers = seed_centers(points, k, rng);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..config.max_iter {
        iterations = iter + 1;
        let weights = weight_matrix(points, &centers);
        trace.push(fuzzy_objective(points, &centers, &weights));
        let mut next = centers.clone();
        for c in 0..k {
            let mut num = vec![0.0; dim];
            let mut den = 0.0;
            for (i, x) in points.iter_rows().enumerate() {
                let w2 = weights[(i, c)] * weights[(i, c)];
                den += w2;
                for (s, v) in num.iter_mut().zip(x) {
                    *s += w2 * v;
                }
            }
            if den > 0.0 {
                for (dst, s) in next.row_mut(c).iter_mut().zip(&num) {
                    *dst = s / den;
                }
            }
        }
        let shift = (0..k)
            .map(|c| libm::sqrt(squared_distance(next.row(c), centers.row(c))))
            .fold(0.0, f64::max);
        centers = next;
        if shift < config.tol {
            converged = true;
            break;
        }
    }
    let weights = weight_matrix(points, &centers);
    let objective = fuzzy_objective(points, &centers, &weights);
    FuzzyRun {
        centers,
        weights,
        objective,
        iterations,
        converged,
        trace,
    }
}

/// Fuzzy K-means with fuzzifier 2; keeps the restart with the smallest fuzzy WCSS.
///
/// Centroids are `c_k = Σ_x w(x,k)² x / Σ_x w(x,k)²`. A restart that hits
/// `max_iter` is still returned, with `converged = false`.
pub fn fuzzy_kmeans(points: &Matrix, k: usize, config: &FuzzyConfig) -> Result<ClusterResult> {
    check_k(points.rows(), k)?;
    if config.restarts == 0 || config.max_iter == 0 || !(config.tol > 0.0) {
        return Err(Error::InvalidParameter(
            "restarts, max_iter and tol must be positive",
        ));
    }
    let mut best: Option<FuzzyRun> = None;
    for restart in 0..config.restarts {
        let mut rng = stream_rng(config.seed, restart as u64);
        let run = fuzzy_run(points, k, config, &mut rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut labels = Vec::with_capacity(points.rows());
    let mut low_confidence = Vec::new();
    for i in 0..points.rows() {
        let (label, unsure) = argmax_label(best.weights.row(i));
        labels.push(label);
        if unsure {
            low_confidence.push(i);
        }
    }
    Ok(ClusterResult {
        labels,
        weights: Some(best.weights),
        centers: best.centers,
        wcss: best.objective,
        restarts_run: config.restarts,
        iterations: best.iterations,
        converged: best.converged,
        seed: config.seed,
        low_confidence,
        trace: best.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Matrix {
        Matrix::from_row_major(xs.len(), 1, xs.to_vec())
    }

    #[test]
    fn kmeans_four_points() {
        let pts = line(&[0.0, 0.1, 10.0, 10.1]);
        let r = kmeans(&pts, 2, &KMeansConfig::default()).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
        assert!((r.wcss - 0.01).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn kmeans_duplicated_doubles_wcss() {
        let pts = line(&[0.0, 0.1, 10.0, 10.1, 0.0, 0.1, 10.0, 10.1]);
        let r = kmeans(&pts, 2, &KMeansConfig::default()).unwrap();
        assert!((r.wcss - 0.02).abs() < 1e-12);
        assert_eq!(r.labels[0], r.labels[5]);
        assert_ne!(r.labels[0], r.labels[6]);
    }

    #[test]
    fn kmeans_k_equals_n() {
        let pts = line(&[3.0, -1.0, 7.5, 2.0]);
        let r = kmeans(&pts, 4, &KMeansConfig::default()).unwrap();
        assert_eq!(r.wcss, 0.0);
        let mut sizes = r.cluster_sizes();
        sizes.sort();
        assert_eq!(sizes, [1, 1, 1, 1]);
    }

    #[test]
    fn kmeans_never_leaves_empty_clusters() {
        let pts = line(&[1.0; 6]);
        let r = kmeans(&pts, 3, &KMeansConfig::default()).unwrap();
        assert!(r.cluster_sizes().iter().all(|&s| s > 0));
        assert_eq!(r.wcss, 0.0);
    }

    #[test]
    fn kmeans_rejects_bad_k() {
        let pts = line(&[1.0, 2.0]);
        assert_eq!(
            kmeans(&pts, 3, &KMeansConfig::default()).unwrap_err(),
            Error::InvalidK { k: 3, n: 2 }
        );
        assert!(kmeans(&pts, 0, &KMeansConfig::default()).is_err());
        assert!(fuzzy_kmeans(&pts, 3, &FuzzyConfig::default()).is_err());
    }

    #[test]
    fn kmeans_is_deterministic() {
        let pts = Matrix::from_rows(&[
            [0.0, 1.0],
            [0.3, 0.9],
            [4.0, 4.2],
            [4.1, 3.9],
            [9.0, 0.0],
            [8.7, 0.4],
            [2.0, 2.0],
        ]);
        let cfg = KMeansConfig {
            seed: 11,
            ..KMeansConfig::default()
        };
        assert_eq!(kmeans(&pts, 3, &cfg).unwrap(), kmeans(&pts, 3, &cfg).unwrap());
    }

    #[test]
    fn weights_examples() {
        let centers = line(&[-1.0, 1.0]);
        assert_eq!(fuzzy_weights(&[0.0], &centers), [0.5, 0.5]);
        assert_eq!(fuzzy_weights(&[1.0], &centers), [0.0, 1.0]);
        let w = fuzzy_weights(&[0.5], &centers);
        // inverse squared distances 1/2.25 and 1/0.25
        assert!((w[1] - 4.0 / (4.0 + 1.0 / 2.25)).abs() < 1e-15);

        let same = line(&[2.0, 2.0, 5.0]);
        assert_eq!(fuzzy_weights(&[2.0], &same), [0.5, 0.5, 0.0]);
    }

    #[test]
    fn argmax_with_low_confidence() {
        assert_eq!(argmax_label(&[0.47, 0.52, 0.01]), (2, true));
        assert_eq!(argmax_label(&[0.1, 0.2, 0.7]), (3, false));
    }

    #[test]
    fn fuzzy_separates_blobs() {
        let pts = line(&[0.0, 0.2, 0.1, 10.0, 10.2, 10.1]);
        let r = fuzzy_kmeans(&pts, 2, &FuzzyConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.labels[0], r.labels[1]);
        assert_ne!(r.labels[0], r.labels[3]);
        let w = r.weights.as_ref().unwrap();
        for i in 0..w.rows() {
            let s: f64 = w.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(w.row(i).iter().all(|v| *v >= 0.0));
        }
        assert!(r.low_confidence.is_empty());
    }
}
