//! Standardised feature matrix assembled from per-trajectory measures.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::measures::MeasureId;
use crate::partition::{kmeans, KMeansConfig};

/// A column whose standard deviation is at most this fraction of its largest
/// absolute entry is treated as constant and dropped.
pub const CONSTANT_COLUMN_RELATIVE_SD: f64 = 1e-12;

/// z-scored measures; one row per trajectory, one column per retained measure.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Matrix,
    pub column_ids: Vec<MeasureId>,
    pub column_means: Vec<f64>,
    pub column_sds: Vec<f64>,
    pub dropped_columns: Vec<MeasureId>,
}

impl FeatureMatrix {
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// Keeps only the listed rows without re-estimating column statistics.
    pub fn select_rows(&self, keep: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select_rows(keep),
            ..self.clone()
        }
    }
}

/// Column mean and population (denominator `n`) standard deviation, summed in
/// row order.
pub fn column_stats(column: &[f64]) -> (f64, f64) {
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let var = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

fn check_raw(raw: &Matrix) -> Result<()> {
    if raw.rows() < 2 {
        return Err(Error::TooFewRows {
            n: raw.rows(),
            min: 2,
        });
    }
    if let Some(index) = raw.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    Ok(())
}

/// Per-column z-scores with the population standard deviation. Constant
/// columns are dropped and listed in `dropped_columns`.
pub fn standardize(raw: &Matrix, column_ids: &[MeasureId]) -> Result<FeatureMatrix> {
    check_raw(raw)?;
    if column_ids.len() != raw.cols() {
        return Err(Error::InvalidParameter("one column id per column required"));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (j, id) in column_ids.iter().enumerate() {
        let col = raw.column(j);
        let (mean, sd) = column_stats(&col);
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sd <= CONSTANT_COLUMN_RELATIVE_SD * scale {
            dropped.push(*id);
        } else {
            kept.push((j, *id, mean, sd));
        }
    }
    if kept.is_empty() {
        return Err(Error::AllColumnsConstant);
    }
    let mut values = Matrix::zeros(raw.rows(), kept.len());
    for i in 0..raw.rows() {
        for (c, &(j, _, mean, sd)) in kept.iter().enumerate() {
            values[(i, c)] = (raw[(i, j)] - mean) / sd;
        }
    }
    Ok(FeatureMatrix {
        values,
        column_ids: kept.iter().map(|k| k.1).collect(),
        column_means: kept.iter().map(|k| k.2).collect(),
        column_sds: kept.iter().map(|k| k.3).collect(),
        dropped_columns: dropped,
    })
}

/// Capped copy of a raw matrix together with the per-column bounds applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Winsorized {
    pub values: Matrix,
    pub bounds: Vec<(f64, f64)>,
}

/// Clamps every entry to `mean ± limit_sds · sd` of its raw column.
///
/// A constant column keeps its values. Re-applying the recorded `bounds`
/// with [`apply_bounds`] is idempotent.
pub fn winsorize(raw: &Matrix, limit_sds: f64) -> Result<Winsorized> {
    check_raw(raw)?;
    if !(limit_sds > 0.0) {
        return Err(Error::InvalidParameter("winsorizing limit must be positive"));
    }
    let bounds: Vec<(f64, f64)> = (0..raw.cols())
        .map(|j| {
            let col = raw.column(j);
            let (mean, sd) = column_stats(&col);
            if sd == 0.0 {
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            } else {
                (mean - limit_sds * sd, mean + limit_sds * sd)
            }
        })
        .collect();
    Ok(Winsorized {
        values: apply_bounds(raw, &bounds),
        bounds,
    })
}

pub fn apply_bounds(raw: &Matrix, bounds: &[(f64, f64)]) -> Matrix {
    let mut out = raw.clone();
    for i in 0..out.rows() {
        for (v, &(lo, hi)) in out.row_mut(i).iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    }
    out
}

/// Default probe size for [`flag_outliers`]: `min(n / 3, 20)`.
pub fn default_outlier_probe(n: usize) -> usize {
    (n / 3).min(20)
}

/// Rows that end up alone in a K-means partition with many clusters.
///
/// The probe size is capped at `n - 2` and at the number of distinct rows;
/// below 2 nothing is flagged. Rows are only reported, never removed.
pub fn flag_outliers(features: &FeatureMatrix, k_probe: Option<usize>, seed: u64) -> Result<Vec<usize>> {
    let points = features.values();
    let n = points.rows();
    let mut distinct: Vec<&[f64]> = points.iter_rows().collect();
    distinct.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    distinct.dedup();
    let k = k_probe
        .unwrap_or_else(|| default_outlier_probe(n))
        .min(n.saturating_sub(2))
        .min(distinct.len());
    if k < 2 {
        return Ok(Vec::new());
    }
    let config = KMeansConfig {
        seed,
        ..KMeansConfig::default()
    };
    let result = kmeans(points, k, &config)?;
    let sizes = result.cluster_sizes();
    Ok((0..n).filter(|&i| sizes[result.labels[i] - 1] == 1).collect())
}
