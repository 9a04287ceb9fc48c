//! Leading eigenpairs of a real symmetric operator.
//!
//! Small problems use nalgebra's dense symmetric decomposition. Larger ones
//! use thick-restart block Lanczos, which only needs matrix-vector products.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

const KRYLOV_SEED: u64 = 0x6b72_796c_6f76;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenConfig {
    /// Largest accepted residual `‖A v − λ v‖∞` for a unit eigenvector.
    pub tol: f64,
    /// Restart cap of the Krylov iteration.
    pub max_iter: usize,
    /// Largest `n` handled by the dense decomposition.
    pub dense_limit: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            dense_limit: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSolver {
    Dense,
    Krylov,
}

impl EigenSolver {
    pub fn as_str(self) -> &'static str {
        match self {
            EigenSolver::Dense => "dense",
            EigenSolver::Krylov => "krylov",
        }
    }
}

/// Eigenpairs sorted by decreasing eigenvalue; vectors have unit length.
#[derive(Debug, Clone)]
pub(crate) struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
    pub solver: EigenSolver,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual(av: &[f64], v: &[f64], lambda: f64) -> f64 {
    av.iter()
        .zip(v)
        .fold(0.0f64, |m, (a, x)| m.max((a - lambda * x).abs()))
}

fn sorted_decreasing(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// All eigenpairs of the dense symmetric row-major matrix `a` (n×n).
pub(crate) fn dense_all(a: &[f64], n: usize, config: &EigenConfig) -> Result<EigenPairs> {
    let m = DMatrix::from_row_slice(n, n, a);
    let cap = 100 * n + 1000;
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, cap)
        .ok_or(Error::EigenFailure { iterations: cap })?;
    let order = sorted_decreasing(eig.eigenvalues.as_slice());
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut av = vec![0.0; n];
    for &k in &order {
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let lambda = eig.eigenvalues[k];
        for (i, out) in av.iter_mut().enumerate() {
            *out = dot(&a[i * n..(i + 1) * n], &v);
        }
        if !lambda.is_finite() || residual(&av, &v, lambda) > config.tol {
            return Err(Error::EigenFailure { iterations: cap });
        }
        values.push(lambda);
        vectors.push(v);
    }
    Ok(EigenPairs {
        values,
        vectors,
        iterations: 1,
        solver: EigenSolver::Dense,
    })
}

/// Orthogonalises `v` against the orthonormal `basis` (two Gram–Schmidt
/// passes) and normalises it. Returns false if `v` lies in the span.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = libm::sqrt(dot(v, v));
    if before == 0.0 || !before.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let after = libm::sqrt(dot(v, v));
    if after <= 1e-8 * before {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= after);
    true
}

fn random_block<R: Rng>(rng: &mut R, count: usize, n: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// `sum_i y_i cols_i`.
fn combine(cols: &[Vec<f64>], y: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (c, col) in y.zip(cols) {
        for (o, v) in out.iter_mut().zip(col) {
            *o += c * v;
        }
    }
    out
}

/// The `want` largest eigenpairs of the symmetric operator `apply` on R^n,
/// by thick-restart block Lanczos with full reorthogonalisation.
///
/// Each cycle grows an orthonormal basis block by block up to `cap` vectors
/// and extracts Ritz pairs. A restart keeps the leading half of the Ritz
/// vectors and continues from the residuals of the leading block.
pub(crate) fn krylov_top<F>(apply: F, n: usize, want: usize, config: &EigenConfig) -> Result<EigenPairs>
where
    F: Fn(&[f64], &mut [f64]),
{
    let want = want.min(n);
    let block = (want + 3).min(n);
    let cap = n.min((8 * block).max(block + 64));
    let keep = (cap / 2).max(block).min(cap.saturating_sub(block)).max(want);
    let mut rng = stream_rng(KRYLOV_SEED, 0);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut frontier = random_block(&mut rng, block, n);

    for restart in 1..=config.max_iter.max(1) {
        while basis.len() < cap {
            let mut added = Vec::new();
            for mut v in frontier {
                if basis.len() == cap {
                    break;
                }
                if orthonormalize(&mut v, &basis) {
                    let mut av = vec![0.0; n];
                    apply(&v, &mut av);
                    added.push(av.clone());
                    basis.push(v);
                    images.push(av);
                }
            }
            if added.is_empty() {
                // invariant subspace; widen with fresh directions if room remains
                if basis.len() >= want.max(1) {
                    break;
                }
                frontier = random_block(&mut rng, block, n);
                continue;
            }
            frontier = added;
        }
        let m = basis.len();
        let h = DMatrix::from_fn(m, m, |i, j| {
            0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]))
        });
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100 * m + 1000)
            .ok_or(Error::EigenFailure { iterations: restart })?;
        let order = sorted_decreasing(eig.eigenvalues.as_slice());

        let kept = keep.min(m);
        let mut values = Vec::with_capacity(kept);
        let mut vectors = Vec::with_capacity(kept);
        let mut vector_images = Vec::with_capacity(kept);
        let mut worst = 0.0f64;
        for (rank, &k) in order.iter().take(kept).enumerate() {
            let y = eig.eigenvectors.column(k);
            let mut x = combine(&basis, y.iter().copied(), n);
            let mut ax = combine(&images, y.iter().copied(), n);
            let norm = libm::sqrt(dot(&x, &x));
            x.iter_mut().for_each(|v| *v /= norm);
            ax.iter_mut().for_each(|v| *v /= norm);
            let lambda = eig.eigenvalues[k];
            if rank < want {
                worst = worst.max(residual(&ax, &x, lambda));
            }
            values.push(lambda);
            vectors.push(x);
            vector_images.push(ax);
        }
        if worst <= config.tol && worst.is_finite() {
            values.truncate(want);
            vectors.truncate(want);
            return Ok(EigenPairs {
                values,
                vectors,
                iterations: restart,
                solver: EigenSolver::Krylov,
            });
        }

        // continue from the residuals of the leading Ritz pairs
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(block);
        for ((x, ax), lambda) in vectors.iter().zip(&vector_images).zip(&values).take(block) {
            let mut r: Vec<f64> = ax.iter().zip(x).map(|(a, v)| a - lambda * v).collect();
            if orthonormalize(&mut r, &vectors) && orthonormalize(&mut r, &next) {
                next.push(r);
            }
        }
        if next.is_empty() {
            next = random_block(&mut rng, block, n);
        }
        basis = vectors;
        images = vector_images;
        frontier = next;
    }
    Err(Error::EigenFailure {
        iterations: config.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        a
    }

    #[test]
    fn dense_matches_closed_form_spectrum() {
        let n = 12;
        let a = tridiagonal(n);
        let pairs = dense_all(&a, n, &EigenConfig::default()).unwrap();
        for (k, lambda) in pairs.values.iter().enumerate() {
            let j = (k + 1) as f64;
            let expected = 2.0 + 2.0 * libm::cos(j * core::f64::consts::PI / (n as f64 + 1.0));
            assert!((lambda - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_agrees_with_dense() {
        let n = 150;
        let a = tridiagonal(n);
        let dense = dense_all(&a, n, &EigenConfig::default()).unwrap();
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = dot(&a[i * n..(i + 1) * n], x);
            }
        };
        let config = EigenConfig {
            max_iter: 5000,
            ..EigenConfig::default()
        };
        let kry = krylov_top(apply, n, 4, &config).unwrap();
        for k in 0..4 {
            assert!((kry.values[k] - dense.values[k]).abs() < 1e-9);
            let overlap = dot(&kry.vectors[k], &dense.vectors[k]).abs();
            assert!((overlap - 1.0).abs() < 1e-6);
        }
    }
}
