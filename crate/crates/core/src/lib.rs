//! Feature-based trajectory clustering.
//!
//! Each trajectory is summarised by up to twenty scalar measures, the
//! standardised measures feed a mutual k-nearest-neighbour graph, and the
//! graph's leading random-walk eigenvectors are partitioned with K-means.
//!
//! The crate is `no_std` with `alloc`; enable the `std` feature for
//! `std::error::Error` impls.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod eigen;
pub mod error;
pub mod features;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod measures;
pub mod partition;
pub mod pipeline;
pub mod rng;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
pub use features::{flag_outliers, standardize, winsorize, FeatureMatrix};
pub use graph::{build_similarity, choose_p, SimilarityGraph};
pub use matrix::Matrix;
pub use measures::{compute_measure_vector, MeasureConfig, MeasureId, MeasureSet, MeasureVector};
pub use partition::{fuzzy_kmeans, kmeans, ClusterResult, FuzzyConfig, KMeansConfig};
pub use trajectory::{DerivativeWeighting, Trajectory};
pub use spectral::{cluster_graph, cluster_points, spectral_cluster, spectral_embedding, Partitioner, SpectralConfig};
pub use harness::{evaluate, generate_three_group, Evaluation, GeneratorConfig, LabeledDataset};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
