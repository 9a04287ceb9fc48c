//! Trajectories to measures to features to clusters.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{flag_outliers, standardize, winsorize, FeatureMatrix};
use crate::matrix::Matrix;
use crate::measures::{compute_measure_vector, MeasureConfig, MeasureId, MeasureSet, MeasureVector};
use crate::spectral::{spectral_cluster, SpectralClustering, SpectralConfig};
use crate::trajectory::{center_vertically, shift_horizontally, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub selection: MeasureSet,
    pub measure: MeasureConfig,
    pub center_vertically: bool,
    pub shift_horizontally: bool,
    /// Cap raw measures at `mean ± limit · sd` before standardising.
    pub winsorize: Option<f64>,
    /// Report rows isolated by a many-cluster K-means probe.
    pub flag_outliers: bool,
    /// Probe cluster count; `None` uses `min(n / 3, 20)`.
    pub outlier_probe: Option<usize>,
    pub spectral: SpectralConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            selection: MeasureSet::all(),
            measure: MeasureConfig::default(),
            center_vertically: false,
            shift_horizontally: false,
            winsorize: None,
            flag_outliers: true,
            outlier_probe: None,
            spectral: SpectralConfig::default(),
        }
    }
}

pub fn preprocess(traj: &Trajectory, config: &PipelineConfig) -> Trajectory {
    let mut t = traj.clone();
    if config.shift_horizontally {
        t = shift_horizontally(&t);
    }
    if config.center_vertically {
        t = center_vertically(&t);
    }
    t
}

/// Selected measures of one preprocessed trajectory.
pub fn measure_row(traj: &Trajectory, config: &PipelineConfig) -> Result<MeasureVector> {
    compute_measure_vector(&preprocess(traj, config), config.selection, &config.measure)
}

/// Stacks measure vectors (all computed over the same selection) into an
/// `n × |selection|` matrix.
pub fn stack_measures(rows: &[MeasureVector], selection: MeasureSet) -> Matrix {
    let flat: Vec<f64> = rows.iter().flat_map(MeasureVector::to_vec).collect();
    Matrix::from_row_major(rows.len(), selection.len(), flat)
}

pub fn measure_matrix(trajectories: &[Trajectory], config: &PipelineConfig) -> Result<Matrix> {
    let rows = trajectories
        .iter()
        .map(|t| measure_row(t, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(stack_measures(&rows, config.selection))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Unstandardised measures, one column per selected measure.
    pub raw: Matrix,
    pub columns: Vec<MeasureId>,
    pub winsor_bounds: Option<Vec<(f64, f64)>>,
    pub features: FeatureMatrix,
    pub outliers: Vec<usize>,
    pub clustering: SpectralClustering,
}

/// Checks `2 ≤ k ≤ n` before any work is done.
pub fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        Err(Error::InvalidK { k, n })
    } else {
        Ok(())
    }
}

/// Feature construction and spectral clustering of a raw measure matrix.
pub fn cluster_measures(raw: Matrix, k: usize, config: &PipelineConfig) -> Result<PipelineOutput> {
    check_k(raw.rows(), k)?;
    let columns: Vec<MeasureId> = config.selection.iter().collect();
    let (capped, winsor_bounds) = match config.winsorize {
        Some(limit) => {
            let w = winsorize(&raw, limit).map_err(|e| e.in_stage("features"))?;
            (w.values, Some(w.bounds))
        }
        None => (raw.clone(), None),
    };
    let features = standardize(&capped, &columns).map_err(|e| e.in_stage("features"))?;
    let outliers = if config.flag_outliers {
        flag_outliers(&features, config.outlier_probe, config.spectral.seed)
            .map_err(|e| e.in_stage("outliers"))?
    } else {
        Vec::new()
    };
    let clustering = spectral_cluster(&features, k, &config.spectral)?;
    Ok(PipelineOutput {
        raw,
        columns,
        winsor_bounds,
        features,
        outliers,
        clustering,
    })
}

pub fn run_pipeline(trajectories: &[Trajectory], k: usize, config: &PipelineConfig) -> Result<PipelineOutput> {
    check_k(trajectories.len(), k)?;
    let raw = measure_matrix(trajectories, config).map_err(|e| e.in_stage("measures"))?;
    cluster_measures(raw, k, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{evaluate, generate_three_group, GeneratorConfig};

    #[test]
    fn three_groups_end_to_end() {
        let data = generate_three_group(&GeneratorConfig::default()).unwrap();
        let out = run_pipeline(&data.trajectories, 3, &PipelineConfig::default()).unwrap();
        let eval = evaluate(&out.clustering.clusters.labels, &data.labels).unwrap();
        assert!(eval.matched >= 43, "{eval:?}");
    }

    #[test]
    fn bad_k_fails_before_measures() {
        let data = generate_three_group(&GeneratorConfig::default()).unwrap();
        let err = run_pipeline(&data.trajectories, 1, &PipelineConfig::default()).unwrap_err();
        assert_eq!(err, Error::InvalidK { k: 1, n: 45 });
    }
}
