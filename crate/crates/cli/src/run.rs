//! The `measures`, `cluster`, `synth` and `eval` commands.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fbtc_core::graph::{build_similarity, choose_p};
use fbtc_core::harness::{evaluate, generate_three_group, Evaluation, GeneratorConfig};
use fbtc_core::matrix::Matrix;
use fbtc_core::measures::MeasureVector;
use fbtc_core::pipeline::{check_k, cluster_measures, measure_row, stack_measures, PipelineConfig, PipelineOutput};
use fbtc_core::Trajectory;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{fmt_num, load_data, load_id_column, long_csv, write_file_atomic, ArtifactSet, LoadedData};

pub const MEASURES_FILE: &str = "measures.csv";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const REPORT_FILE: &str = "report.json";
pub const EMBEDDING_FILE: &str = "embedding.csv";
pub const SIMILARITY_FILE: &str = "similarity.csv";

const ALL_ARTIFACTS: [&str; 5] = [MEASURES_FILE, ASSIGNMENTS_FILE, REPORT_FILE, EMBEDDING_FILE, SIMILARITY_FILE];

/// Wall-clock stage durations, reported only on request.
#[derive(Default)]
struct Timings(BTreeMap<&'static str, f64>);

impl Timings {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(stage, start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

fn input_path(config: &RunConfig) -> Result<&Path> {
    config
        .input
        .as_deref()
        .ok_or_else(|| CliError::Config("no input file given".into()))
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Measure vectors for every trajectory, computed in parallel and returned in
/// input order. All per-trajectory failures are collected.
pub fn compute_measures(
    trajectories: &[Trajectory],
    pipeline: &PipelineConfig,
    threads: Option<usize>,
) -> Result<Matrix> {
    let pool = thread_pool(threads)?;
    let rows: Vec<fbtc_core::Result<MeasureVector>> =
        pool.install(|| trajectories.par_iter().map(|t| measure_row(t, pipeline)).collect());
    let mut ok = Vec::with_capacity(rows.len());
    let mut errors = Vec::new();
    for r in rows {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::InvalidTrajectories(errors));
    }
    Ok(stack_measures(&ok, pipeline.selection))
}

fn write_csv(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Config(e.to_string()))
}

fn measures_csv(trajectories: &[Trajectory], raw: &Matrix, pipeline: &PipelineConfig) -> Result<Vec<u8>> {
    let mut header = vec!["id".to_string()];
    header.extend(pipeline.selection.iter().map(|m| m.to_string()));
    write_csv(
        &header,
        trajectories.iter().enumerate().map(|(i, t)| {
            let mut row = vec![t.id().to_string()];
            row.extend(raw.row(i).iter().map(|&v| fmt_num(v)));
            row
        }),
    )
}

/// `fbtc measures`: writes `measures.csv`.
pub fn run_measures(config: &RunConfig) -> Result<PathBuf> {
    let pipeline = config.pipeline()?;
    let data = load_data(input_path(config)?, config.format)?;
    let raw = compute_measures(&data.trajectories, &pipeline, config.threads)?;
    let mut out = ArtifactSet::new(&config.out)?;
    out.write(MEASURES_FILE, &measures_csv(&data.trajectories, &raw, &pipeline)?)?;
    Ok(out.commit(&[])?.remove(0))
}

#[derive(Serialize)]
struct ClusterReport<'a> {
    config: &'a RunConfig,
    n: usize,
    k: usize,
    measures: Vec<String>,
    dropped_columns: Vec<String>,
    winsor_bounds: Option<Vec<(f64, f64)>>,
    outliers: Vec<&'a str>,
    p: Option<usize>,
    eigenvalues: &'a [f64],
    eigen_solver: &'static str,
    eigen_iterations: usize,
    degenerate_rows: Vec<&'a str>,
    partitioner: &'static str,
    wcss: f64,
    restarts_run: usize,
    iterations: usize,
    converged: bool,
    cluster_sizes: Vec<usize>,
    low_confidence: Vec<&'a str>,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<&'a BTreeMap<&'static str, f64>>,
}

pub fn evaluation_json(eval: &Evaluation, reference_names: &[String]) -> Value {
    json!({
        "n": eval.contingency.iter().flatten().sum::<usize>(),
        "matched": eval.matched,
        "accuracy": eval.accuracy,
        "ari": eval.ari,
        "reference_labels": eval.reference_labels.iter().map(|&r| &reference_names[r - 1]).collect::<Vec<_>>(),
        "found_labels": eval.found_labels,
        "contingency": eval.contingency,
        "matching": eval.matching.iter().map(|&(r, f)| json!([&reference_names[r - 1], f])).collect::<Vec<_>>(),
    })
}

/// Maps string labels to `1..` in order of first appearance.
pub fn index_labels(labels: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            *index.entry(l.as_str()).or_insert_with(|| {
                names.push(l.clone());
                names.len()
            })
        })
        .collect();
    (ids, names)
}

fn assignments_csv(data: &LoadedData, output: &PipelineOutput) -> Result<Vec<u8>> {
    let clusters = &output.clustering.clusters;
    let mut header = vec!["id".to_string(), "cluster".to_string()];
    if clusters.weights.is_some() {
        header.extend((1..=clusters.k()).map(|c| format!("weight_{c}")));
    }
    write_csv(
        &header,
        data.trajectories.iter().enumerate().map(|(i, t)| {
            let mut row = vec![t.id().to_string(), clusters.labels[i].to_string()];
            if let Some(w) = &clusters.weights {
                row.extend(w.row(i).iter().map(|&v| fmt_num(v)));
            }
            row
        }),
    )
}

fn embedding_csv(data: &LoadedData, output: &PipelineOutput) -> Result<Vec<u8>> {
    let phi = &output.clustering.embedding.embedding;
    let mut header = vec!["id".to_string()];
    header.extend((1..=phi.cols()).map(|c| format!("phi_{c}")));
    write_csv(
        &header,
        data.trajectories.iter().enumerate().map(|(i, t)| {
            let mut row = vec![t.id().to_string()];
            row.extend(phi.row(i).iter().map(|&v| fmt_num(v)));
            row
        }),
    )
}

fn similarity_csv(graph: &fbtc_core::SimilarityGraph) -> Result<Vec<u8>> {
    let header = ["i", "j", "value"].map(String::from);
    write_csv(
        &header,
        graph.entries().map(|(i, j, v)| {
            let value = if v == 1.0 { "1".to_string() } else if v == 0.5 { "0.5".to_string() } else { fmt_num(v) };
            vec![i.to_string(), j.to_string(), value]
        }),
    )
}

/// Result of a `cluster` run: where the files went and the in-memory output.
pub struct ClusterRun {
    pub files: Vec<PathBuf>,
    pub output: PipelineOutput,
}

/// `fbtc cluster`: the full pipeline. Nothing is written unless every stage
/// succeeds.
pub fn run_cluster(config: &RunConfig) -> Result<ClusterRun> {
    let mut timings = Timings::default();
    let pipeline = config.pipeline()?;
    let k = config.k.ok_or_else(|| CliError::Config("cluster count k is required".into()))?;
    let data = timings.time("load", || load_data(input_path(config)?, config.format))?;
    let n = data.trajectories.len();
    check_k(n, k)?;

    let raw = timings.time("measures", || compute_measures(&data.trajectories, &pipeline, config.threads))?;
    let output = timings.time("cluster", || cluster_measures(raw, k, &pipeline))?;
    let graph = if config.dump_similarity {
        let p = match pipeline.spectral.p {
            Some(p) => p,
            None => choose_p(n, k)?,
        };
        Some(build_similarity(output.features.values(), p)?)
    } else {
        None
    };
    let ids: Vec<&str> = data.trajectories.iter().map(|t| t.id()).collect();
    let clusters = &output.clustering.clusters;
    let mut warnings: Vec<String> = output
        .clustering
        .small_clusters
        .iter()
        .map(|&(label, size)| {
            format!(
                "cluster {label} has {size} members, fewer than the {} neighbours used for the similarity graph",
                output.clustering.p.unwrap_or(0)
            )
        })
        .collect();
    if !clusters.converged {
        warnings.push(format!("partitioner stopped at the iteration cap ({})", config.max_iter));
    }
    for id in &output.features.dropped_columns {
        warnings.push(format!("measure {id} is constant across trajectories and was dropped"));
    }
    let evaluation = data.labels.as_ref().map(|labels| {
        let (reference, names) = index_labels(labels);
        evaluate(&clusters.labels, &reference).map(|e| evaluation_json(&e, &names))
    });
    let evaluation = evaluation.transpose()?;

    let report = ClusterReport {
        config,
        n,
        k,
        measures: output.columns.iter().map(|m| m.to_string()).collect(),
        dropped_columns: output.features.dropped_columns.iter().map(|m| m.to_string()).collect(),
        winsor_bounds: output.winsor_bounds.clone(),
        outliers: output.outliers.iter().map(|&i| ids[i]).collect(),
        p: output.clustering.p,
        eigenvalues: &output.clustering.embedding.eigenvalues,
        eigen_solver: output.clustering.embedding.solver.as_str(),
        eigen_iterations: output.clustering.embedding.iterations,
        degenerate_rows: output.clustering.embedding.degenerate_rows.iter().map(|&i| ids[i]).collect(),
        partitioner: pipeline.spectral.partitioner.as_str(),
        wcss: clusters.wcss,
        restarts_run: clusters.restarts_run,
        iterations: clusters.iterations,
        converged: clusters.converged,
        cluster_sizes: clusters.cluster_sizes(),
        low_confidence: clusters.low_confidence.iter().map(|&i| ids[i]).collect(),
        warnings,
        evaluation,
        timings_ms: None,
    };

    let mut out = ArtifactSet::new(&config.out)?;
    out.write(MEASURES_FILE, &measures_csv(&data.trajectories, &output.raw, &pipeline)?)?;
    out.write(ASSIGNMENTS_FILE, &assignments_csv(&data, &output)?)?;
    if config.embedding {
        out.write(EMBEDDING_FILE, &embedding_csv(&data, &output)?)?;
    }
    if let Some(g) = &graph {
        out.write(SIMILARITY_FILE, &similarity_csv(g)?)?;
    }
    let report = if config.timings {
        ClusterReport {
            timings_ms: Some(&timings.0),
            ..report
        }
    } else {
        report
    };
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    json.push(b'\n');
    out.write(REPORT_FILE, &json)?;
    let files = out.commit(&ALL_ARTIFACTS)?;
    Ok(ClusterRun { files, output })
}

/// `fbtc synth`: writes a labelled long-format dataset.
pub fn run_synth(config: &GeneratorConfig, path: &Path) -> Result<()> {
    let data = generate_three_group(config)?;
    let loaded = LoadedData {
        trajectories: data.trajectories,
        labels: Some(data.labels.iter().map(|l| l.to_string()).collect()),
    };
    write_file_atomic(path, &long_csv(&loaded)?)
}

/// `fbtc eval`: compares `cluster` assignments with reference labels.
///
/// `reference` is any CSV with `id` and `label` columns, such as a labelled
/// long-format dataset.
pub fn run_eval(found: &Path, reference: &Path) -> Result<Value> {
    let found_rows = load_id_column(found, "cluster")?;
    let reference_rows = load_id_column(reference, "label")?;
    let lookup: HashMap<&str, &str> = reference_rows.iter().map(|(i, l)| (i.as_str(), l.as_str())).collect();
    if found_rows.len() != reference_rows.len() {
        return Err(CliError::Mismatch(format!(
            "{} assigned ids but {} reference ids",
            found_rows.len(),
            reference_rows.len()
        )));
    }
    let mut found_labels = Vec::with_capacity(found_rows.len());
    let mut reference_labels = Vec::with_capacity(found_rows.len());
    for (id, cluster) in &found_rows {
        let label = lookup
            .get(id.as_str())
            .ok_or_else(|| CliError::Mismatch(format!("id {id:?} has no reference label")))?;
        found_labels.push(
            cluster
                .parse::<usize>()
                .map_err(|_| CliError::Mismatch(format!("id {id:?} has non-integer cluster {cluster:?}")))?,
        );
        reference_labels.push(label.to_string());
    }
    let (reference, names) = index_labels(&reference_labels);
    let eval = evaluate(&found_labels, &reference)?;
    Ok(evaluation_json(&eval, &names))
}
