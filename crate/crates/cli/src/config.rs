//! Run configuration: defaults, optional TOML file, command-line overrides.

use std::path::{Path, PathBuf};

use fbtc_core::measures::{MeasureConfig, MeasureId, MeasureSet};
use fbtc_core::pipeline::PipelineConfig;
use fbtc_core::spectral::{Partitioner, SpectralConfig};
use fbtc_core::trajectory::DerivativeWeighting;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::InputFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// The closer neighbour's one-sided difference gets the larger weight.
    #[default]
    Proximity,
    /// The farther neighbour's one-sided difference gets the larger weight.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PartitionerKind {
    #[default]
    Hard,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub out: PathBuf,
    pub k: Option<usize>,
    /// `all`, `shape-only`, or a comma-separated list such as `m3,m5,m8`.
    pub measures: String,
    pub center_vertical: bool,
    pub shift_horizontal: bool,
    pub midpoint: Option<f64>,
    pub weighting: Weighting,
    pub mean_tolerance: f64,
    pub winsorize: Option<f64>,
    pub p: Option<usize>,
    pub partitioner: PartitionerKind,
    pub restarts: usize,
    pub max_iter: usize,
    pub fuzzy_tol: f64,
    pub seed: u64,
    pub outliers: bool,
    pub outlier_probe: Option<usize>,
    pub embedding: bool,
    pub dump_similarity: bool,
    pub timings: bool,
    /// Worker cap; results do not depend on it, so it is left out of the report.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: InputFormat::Auto,
            out: PathBuf::from("."),
            k: None,
            measures: "all".into(),
            center_vertical: false,
            shift_horizontal: false,
            midpoint: None,
            weighting: Weighting::Proximity,
            mean_tolerance: 0.0,
            winsorize: None,
            p: None,
            partitioner: PartitionerKind::Hard,
            restarts: 50,
            max_iter: 300,
            fuzzy_tol: 1e-8,
            seed: 0,
            outliers: true,
            outlier_probe: None,
            embedding: false,
            dump_similarity: false,
            timings: false,
            threads: None,
        }
    }
}

pub fn parse_measures(selection: &str) -> Result<MeasureSet> {
    let set = match selection.trim() {
        "all" => MeasureSet::all(),
        "shape-only" => MeasureSet::shape_only(),
        list => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<MeasureId>()
                    .map_err(|_| CliError::Config(format!("unknown measure {:?}", s.trim())))
            })
            .collect::<Result<MeasureSet>>()?,
    };
    if set.is_empty() {
        return Err(CliError::Core(fbtc_core::Error::EmptySelection));
    }
    Ok(set)
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        if self.restarts == 0 {
            return Err(CliError::Config("restarts must be at least 1".into()));
        }
        Ok(PipelineConfig {
            selection: parse_measures(&self.measures)?,
            measure: MeasureConfig {
                weighting: match self.weighting {
                    Weighting::Proximity => DerivativeWeighting::Proximity,
                    Weighting::Literal => DerivativeWeighting::Literal,
                },
                midpoint: self.midpoint,
                mean_tolerance: self.mean_tolerance,
            },
            center_vertically: self.center_vertical,
            shift_horizontally: self.shift_horizontal,
            winsorize: self.winsorize,
            flag_outliers: self.outliers,
            outlier_probe: self.outlier_probe,
            spectral: SpectralConfig {
                partitioner: match self.partitioner {
                    PartitionerKind::Hard => Partitioner::Hard,
                    PartitionerKind::Fuzzy => Partitioner::Fuzzy,
                },
                seed: self.seed,
                restarts: self.restarts,
                max_iter: self.max_iter,
                fuzzy_tol: self.fuzzy_tol,
                p: self.p,
                ..SpectralConfig::default()
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_lists() {
        assert_eq!(parse_measures("all").unwrap().len(), 20);
        assert_eq!(parse_measures("shape-only").unwrap().len(), 16);
        assert_eq!(parse_measures("m3, m5,m8").unwrap().len(), 3);
        assert!(parse_measures("m3,x").is_err());
    }

    #[test]
    fn toml_overrides_defaults() {
        let c: RunConfig = toml::from_str("k = 4\nmeasures = \"shape-only\"\npartitioner = \"fuzzy\"").unwrap();
        assert_eq!(c.k, Some(4));
        assert_eq!(c.partitioner, PartitionerKind::Fuzzy);
        assert_eq!(c.restarts, 50);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn threads_not_echoed() {
        let c = RunConfig {
            threads: Some(8),
            ..RunConfig::default()
        };
        let v = serde_json::to_value(&c).unwrap();
        assert!(v.get("threads").is_none());
    }
}
