use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbtc::config::{PartitionerKind, Weighting};
use fbtc::io::{write_file_atomic, InputFormat};
use fbtc::run::{run_cluster, run_eval, run_measures, run_synth};
use fbtc::{CliError, Result, RunConfig};
use fbtc_core::harness::GeneratorConfig;

/// Feature-based trajectory clustering.
#[derive(Parser)]
#[command(name = "fbtc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute trajectory measures and write measures.csv.
    Measures(RunArgs),
    /// Run the full pipeline and write measures, assignments and a report.
    Cluster(RunArgs),
    /// Write a synthetic three-group dataset in long format.
    Synth(SynthArgs),
    /// Compare cluster assignments with reference labels.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with run settings; flags given here take precedence.
    #[arg(long, env = "FBTC_CONFIG")]
    config: Option<PathBuf>,
    /// Input CSV file.
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Number of clusters.
    #[arg(short)]
    k: Option<usize>,
    /// `all`, `shape-only`, or a list such as `m3,m5,m8`.
    #[arg(long)]
    measures: Option<String>,
    /// Subtract each trajectory's mean before computing measures.
    #[arg(long)]
    center_vertical: bool,
    /// Start each trajectory at time 0.
    #[arg(long)]
    shift_horizontal: bool,
    /// Split time for the variation contrast (m11).
    #[arg(long, allow_negative_numbers = true)]
    midpoint: Option<f64>,
    #[arg(long, value_enum)]
    weighting: Option<Weighting>,
    /// Band around the mean treated as equal by spikiness (m13).
    #[arg(long)]
    mean_tolerance: Option<f64>,
    /// Cap raw measures at this many standard deviations from the column mean.
    #[arg(long)]
    winsorize: Option<f64>,
    /// Neighbour count of the similarity graph (default: chosen from n and k).
    #[arg(short)]
    p: Option<usize>,
    #[arg(long, value_enum)]
    partitioner: Option<PartitionerKind>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    fuzzy_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the outlier probe.
    #[arg(long)]
    no_outliers: bool,
    /// Cluster count of the outlier probe.
    #[arg(long)]
    outlier_probe: Option<usize>,
    /// Also write embedding.csv.
    #[arg(long)]
    embedding: bool,
    /// Also write similarity.csv (nonzero entries, 0-based row indices).
    #[arg(long)]
    dump_similarity: bool,
    /// Add stage timings to report.json.
    #[arg(long)]
    timings: bool,
    /// Worker threads for measure computation; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        macro_rules! take_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    c.$field = self.$field;
                }
            )*};
        }
        take!(format, out, measures, weighting, mean_tolerance, partitioner, restarts, max_iter, fuzzy_tol, seed);
        take_opt!(input, k, midpoint, winsorize, p, outlier_probe, threads);
        c.center_vertical |= self.center_vertical;
        c.shift_horizontal |= self.shift_horizontal;
        c.embedding |= self.embedding;
        c.dump_similarity |= self.dump_similarity;
        c.timings |= self.timings;
        if self.no_outliers {
            c.outliers = false;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV file.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 15)]
    n_per_group: usize,
    #[arg(long, default_value_t = 10)]
    n_obs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
    /// Multiplier on the group amplitudes.
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// assignments.csv from `fbtc cluster`.
    #[arg(long)]
    found: PathBuf,
    /// CSV with `id` and `label` columns.
    #[arg(long)]
    reference: PathBuf,
    /// Write the JSON report here instead of standard output.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Measures(args) => {
            run_measures(&args.resolve()?)?;
        }
        Command::Cluster(args) => {
            run_cluster(&args.resolve()?)?;
        }
        Command::Synth(args) => {
            let config = GeneratorConfig {
                n_per_group: args.n_per_group,
                n_obs: args.n_obs,
                seed: args.seed,
                noise_sd: args.noise_sd,
                separation: args.separation,
                ..GeneratorConfig::default()
            };
            run_synth(&config, &args.out)?;
        }
        Command::Eval(args) => {
            let report = run_eval(&args.found, &args.reference)?;
            let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
            text.push('\n');
            match &args.out {
                Some(path) => write_file_atomic(path, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
