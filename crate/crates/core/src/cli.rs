//! The `pccdr` command line.
//!
//! Exit codes: 0 success, 2 usage errors, 3 data errors, 4 numerical
//! failures. Diagnostics go to stderr; stdout only carries data.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{self, DataMatrix, Embedding, InputFormat, RunSeed};
use crate::datasets;
use crate::error::Error;
use crate::metrics::{self, EvalOptions, MetricReport};
use crate::par;
use crate::pca::pca_fit_transform;
use crate::plot;
use crate::trainer::{self, FitReport, PccConfig, RefineConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pccdr", version, about = "Dimensionality reduction preserving clusters and correlations")]
pub struct Cli {
    /// Worker threads for data-parallel loops; 1 gives bit-reproducible runs.
    #[arg(long, global = true, env = "PCCDR_THREADS")]
    pub threads: Option<usize>,

    /// Write 0 for every wall-clock field so reruns produce identical files.
    #[arg(long, global = true)]
    pub no_timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an embedding from a random normal start.
    Fit(FitArgs),
    /// Refine an existing embedding towards higher distance correlation.
    Refine(RefineArgs),
    /// Score an embedding against its input data.
    Evaluate(EvaluateArgs),
    /// Run several methods over seeds and tabulate their metrics.
    Benchmark(BenchmarkArgs),
    /// Generate a synthetic dataset.
    Dataset(DatasetArgs),
    /// Draw a 2-D embedding as SVG or export a 3-D one as RGB.
    Plot(PlotArgs),
}

#[derive(Debug, Args, Clone)]
pub struct InputArgs {
    /// Input matrix (CSV or raw-f32).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: InputFormat,
    /// The CSV input starts with a header line.
    #[arg(long)]
    pub header: bool,
    /// 0-based CSV column holding integer labels; removed from the features.
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Standardize every input column before fitting.
    #[arg(long)]
    pub standardize: bool,
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args, Clone)]
pub struct CorrArgs {
    /// Number of reference points (capped at the number of rows).
    #[arg(long, default_value_t = 100)]
    pub k_refs: usize,
    /// Soft-rank regularization strength.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
}

#[derive(Debug, Args, Clone)]
pub struct PccArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Weight of the correlation loss.
    #[arg(long, default_value_t = 10.0)]
    pub beta: f64,
    /// Comma-separated k-means cluster counts, or `none`.
    #[arg(long, default_value = "4,8,16,32,64", value_parser = parse_clusters)]
    pub clusters: ClusterCounts,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[command(flatten)]
    pub corr: CorrArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCounts(pub Vec<usize>);

fn parse_clusters(s: &str) -> Result<ClusterCounts, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(ClusterCounts(Vec::new()));
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad cluster count {p:?}")))
        .collect::<Result<Vec<_>, _>>()
        .map(ClusterCounts)
}

impl PccArgs {
    fn config(&self, seed: u64) -> PccConfig {
        PccConfig {
            out_dim: self.dim,
            k_refs: self.corr.k_refs,
            beta: self.beta,
            cluster_counts: self.clusters.0.clone(),
            epsilon: self.corr.epsilon,
            iters: self.iters,
            learning_rate: self.corr.lr,
            seed: RunSeed(seed),
            ..PccConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Embedding CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pcc: PccArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional JSON fit report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Initial embedding CSV, e.g. produced by another method.
    #[arg(long)]
    pub init: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Weight of the squared deviation from the initial embedding.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Epochs.
    #[arg(long, default_value_t = 3)]
    pub iters: usize,
    /// Adam steps per epoch.
    #[arg(long, default_value_t = 100)]
    pub inner_steps: usize,
    #[command(flatten)]
    pub corr: CorrArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub embedding: PathBuf,
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Seed for pair sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct EvalArgs {
    /// Neighbourhood size of the local metrics.
    #[arg(long, default_value_t = metrics::DEFAULT_METRIC_K)]
    pub metric_k: usize,
    /// Pair budget of the global metrics; above it pairs are sampled.
    #[arg(long, default_value_t = metrics::DEFAULT_MAX_PAIRS)]
    pub max_pairs: usize,
}

impl EvalArgs {
    fn options(&self, seed: u64) -> EvalOptions {
        EvalOptions { k: self.metric_k, max_pairs: self.max_pairs, seed: RunSeed(seed) }
    }
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// `swissroll`, `blobs` or `file:<path>`.
    #[arg(long)]
    pub dataset: String,
    /// Comma-separated: `pcc`, `pca`, `external:<name>=<embedding.csv>`.
    #[arg(long, default_value = "pcc,pca")]
    pub methods: String,
    /// Per-run rows as CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summary with per-method means; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    pub seeds: String,
    /// Points for generated datasets (default 2000 swiss roll, 1500 blobs).
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the generated dataset, shared by all runs.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// CSV input has a header line (file datasets only).
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub label_column: Option<usize>,
    #[arg(long)]
    pub standardize: bool,
    #[command(flatten)]
    pub pcc: PccArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Swissroll,
    Blobs,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    pub kind: DatasetKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV with one integer label per row.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    /// Swiss roll noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Blob count.
    #[arg(long, default_value_t = 8)]
    pub centers: usize,
    /// Blob dimension.
    #[arg(long, default_value_t = 30)]
    pub dim: usize,
    /// Blob standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    /// SVG output (2-D embeddings only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV with one integer label per row.
    #[arg(long, conflicts_with = "color_by_distance_from")]
    pub labels: Option<PathBuf>,
    /// Color by input-space distance from this row; needs `--input`.
    #[arg(long, requires = "input")]
    pub color_by_distance_from: Option<usize>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Per-point RGB CSV for 3-D embeddings.
    #[arg(long)]
    pub rgb_out: Option<PathBuf>,
}

/// A failure already mapped to its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Numerical { .. } => EXIT_NUMERICAL,
            Error::InvalidInput(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load_input(a: &InputArgs) -> CliResult<DataMatrix> {
    let m = data::load_matrix(&a.input, a.format, a.header, a.label_column)
        .map_err(|e| with_path(e, &a.input))?;
    Ok(if a.standardize { data::standardize(&m)? } else { m })
}

fn load_embedding(path: &Path) -> CliResult<Embedding> {
    data::load_matrix(path, InputFormat::Csv, false, None).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> CliError {
    let mut err = CliError::from(e);
    if err.code == EXIT_USAGE {
        err.code = EXIT_DATA;
    }
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

fn timing(no_timing: bool, ms: u64) -> u64 {
    if no_timing {
        0
    } else {
        ms
    }
}

fn write_report(path: Option<&Path>, mut report: FitReport, no_timing: bool) -> CliResult<()> {
    if let Some(p) = path {
        report.wall_ms = timing(no_timing, report.wall_ms);
        let json = report.to_json()?;
        write_file(p, format!("{json}\n").as_bytes())?;
    }
    Ok(())
}

fn save(emb: &Embedding, path: &Path) -> CliResult<()> {
    let mut buf = Vec::new();
    data::write_embedding(emb, &mut buf)?;
    write_file(path, &buf)
}

fn cmd_fit(a: &FitArgs, no_timing: bool) -> CliResult<()> {
    let x = load_input(&a.input)?;
    let (emb, report) = trainer::fit_pcc(&x, &a.pcc.config(a.seed))?;
    save(&emb, &a.out)?;
    write_report(a.report.as_deref(), report, no_timing)
}

fn cmd_refine(a: &RefineArgs, no_timing: bool) -> CliResult<()> {
    let x = load_input(&a.input)?;
    let init = load_embedding(&a.init)?;
    if init.rows() != x.rows() {
        return Err(CliError::data(format!(
            "initial embedding has {} rows, input has {}",
            init.rows(),
            x.rows()
        )));
    }
    let config = RefineConfig {
        lambda: a.lambda,
        iters: a.iters,
        inner_steps: a.inner_steps,
        k_refs: a.corr.k_refs,
        epsilon: a.corr.epsilon,
        learning_rate: a.corr.lr,
        seed: RunSeed(a.seed),
        ..RefineConfig::default()
    };
    let (emb, report) = trainer::refine_from_init(&x, &init, &config)?;
    save(&emb, &a.out)?;
    write_report(a.report.as_deref(), report, no_timing)
}

fn evaluate_pair(x: &DataMatrix, y: &Embedding, opts: &EvalOptions) -> CliResult<MetricReport> {
    if x.rows() != y.rows() {
        return Err(CliError::data(format!("input has {} rows, embedding has {}", x.rows(), y.rows())));
    }
    Ok(metrics::evaluate_with(x, y, opts)?)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let x = load_input(&a.input)?;
    let y = load_embedding(&a.embedding)?;
    let report = evaluate_pair(&x, &y, &a.eval.options(a.seed))?;
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    emit(a.out.as_deref(), &format!("{json}\n"))
}

/// One method run in a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub trustworthiness: f64,
    pub continuity: f64,
    pub mrre_false: f64,
    pub mrre_missing: f64,
    pub pearson_global: f64,
    pub spearman_global: f64,
    pub ls_avg: f64,
    pub gs_avg: f64,
    pub wall_ms: u64,
}

impl BenchmarkRow {
    pub fn new(dataset: &str, method: &str, seed: u64, r: &MetricReport, wall_ms: u64) -> Self {
        Self {
            dataset: dataset.to_string(),
            method: method.to_string(),
            seed,
            trustworthiness: r.trustworthiness,
            continuity: r.continuity,
            mrre_false: r.mrre_false,
            mrre_missing: r.mrre_missing,
            pearson_global: r.pearson_global,
            spearman_global: r.spearman_global,
            ls_avg: r.ls_avg,
            gs_avg: r.gs_avg,
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub trustworthiness: f64,
    pub continuity: f64,
    pub mrre_false: f64,
    pub mrre_missing: f64,
    pub pearson_global: f64,
    pub spearman_global: f64,
    pub ls_avg: f64,
    pub gs_avg: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub dataset: String,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub metric_k: usize,
    pub methods: Vec<MethodSummary>,
}

pub fn summarize(dataset: &str, n: usize, seeds: &[u64], metric_k: usize, rows: &[BenchmarkRow]) -> BenchmarkSummary {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.method.as_str()) {
            names.push(&r.method);
        }
    }
    let methods = names
        .into_iter()
        .map(|name| {
            let sel: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.method == name).collect();
            let mean = |f: fn(&BenchmarkRow) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / sel.len() as f64;
            MethodSummary {
                method: name.to_string(),
                runs: sel.len(),
                trustworthiness: mean(|r| r.trustworthiness),
                continuity: mean(|r| r.continuity),
                mrre_false: mean(|r| r.mrre_false),
                mrre_missing: mean(|r| r.mrre_missing),
                pearson_global: mean(|r| r.pearson_global),
                spearman_global: mean(|r| r.spearman_global),
                ls_avg: mean(|r| r.ls_avg),
                gs_avg: mean(|r| r.gs_avg),
                wall_ms: mean(|r| r.wall_ms as f64),
            }
        })
        .collect();
    BenchmarkSummary { dataset: dataset.to_string(), n, seeds: seeds.to_vec(), metric_k, methods }
}

#[derive(Debug, Clone, PartialEq)]
enum Method {
    Pcc,
    Pca,
    External { name: String, path: PathBuf },
}

impl Method {
    fn name(&self) -> &str {
        match self {
            Method::Pcc => "pcc",
            Method::Pca => "pca",
            Method::External { name, .. } => name,
        }
    }
}

fn parse_methods(s: &str) -> CliResult<Vec<Method>> {
    s.split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(|m| match m {
            "pcc" => Ok(Method::Pcc),
            "pca" => Ok(Method::Pca),
            other => {
                let spec = other
                    .strip_prefix("external:")
                    .ok_or_else(|| CliError::usage(format!("unknown method {other:?}")))?;
                let (name, path) = spec
                    .split_once('=')
                    .ok_or_else(|| CliError::usage(format!("expected external:<name>=<path>, got {other:?}")))?;
                Ok(Method::External { name: name.to_string(), path: PathBuf::from(path) })
            }
        })
        .collect()
}

fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| CliError::usage(format!("bad seed {p:?}"))))
        .collect()
}

/// The fixed benchmark blob layout: 8 centers in 30 dimensions.
pub fn benchmark_blobs(n: usize, seed: RunSeed) -> Result<DataMatrix, Error> {
    let centers = datasets::random_centers(8, 30, 10.0, seed);
    datasets::make_blobs(n, &centers, 1.0, seed)
}

fn benchmark_dataset(a: &BenchmarkArgs) -> CliResult<(String, DataMatrix)> {
    let seed = RunSeed(a.data_seed);
    let (name, x) = match a.dataset.as_str() {
        "swissroll" => ("swissroll".to_string(), datasets::make_swiss_roll(a.n.unwrap_or(2000), a.noise, seed)?),
        "blobs" => ("blobs".to_string(), benchmark_blobs(a.n.unwrap_or(1500), seed)?),
        other => {
            let path = other
                .strip_prefix("file:")
                .ok_or_else(|| CliError::usage(format!("unknown dataset {other:?}")))?;
            let m = data::load_matrix(path, InputFormat::Csv, a.header, a.label_column)
                .map_err(|e| with_path(e, Path::new(path)))?;
            let name = Path::new(path).file_stem().map_or(path.to_string(), |s| s.to_string_lossy().into_owned());
            (name, m)
        }
    };
    Ok((name, if a.standardize { data::standardize(&x)? } else { x }))
}

fn cmd_benchmark(a: &BenchmarkArgs, no_timing: bool) -> CliResult<()> {
    let methods = parse_methods(&a.methods)?;
    if methods.is_empty() {
        return Err(CliError::usage("no methods given"));
    }
    let seeds = parse_seeds(&a.seeds)?;
    let (name, x) = benchmark_dataset(a)?;
    let externals: Vec<(String, Embedding)> = methods
        .iter()
        .filter_map(|m| match m {
            Method::External { name, path } => Some((name.clone(), path.clone())),
            _ => None,
        })
        .map(|(name, path)| {
            let e = load_embedding(&path)?;
            if e.rows() != x.rows() {
                return Err(CliError::data(format!(
                    "external embedding {name} has {} rows, dataset has {}",
                    e.rows(),
                    x.rows()
                )));
            }
            Ok((name, e))
        })
        .collect::<CliResult<_>>()?;

    let mut rows = Vec::new();
    for &seed in &seeds {
        for method in &methods {
            let start = Instant::now();
            let emb = match method {
                Method::Pcc => trainer::fit_pcc(&x, &a.pcc.config(seed))?.0,
                Method::Pca => pca_fit_transform(&x, a.pcc.dim)?.1,
                Method::External { name, .. } => {
                    externals.iter().find(|(n, _)| n == name).expect("loaded above").1.clone()
                }
            };
            let ms = timing(no_timing, start.elapsed().as_millis() as u64);
            let opts = a.eval.options(seed);
            let report = evaluate_pair(&x, &emb, &opts)?;
            eprintln!("{name} {} seed={seed}: ls_avg={:.4} gs_avg={:.4}", method.name(), report.ls_avg, report.gs_avg);
            rows.push(BenchmarkRow::new(&name, method.name(), seed, &report, ms));
        }
    }

    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        wtr.serialize(r).map_err(|e| CliError::data(e.to_string()))?;
    }
    let csv_bytes = wtr.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    write_file(&a.out, &csv_bytes)?;

    let summary = summarize(&name, x.rows(), &seeds, a.eval.metric_k, &rows);
    let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    emit(a.summary.as_deref(), &format!("{json}\n"))
}

fn cmd_dataset(a: &DatasetArgs) -> CliResult<()> {
    let seed = RunSeed(a.seed);
    let x = match a.kind {
        DatasetKind::Swissroll => datasets::make_swiss_roll(a.n, a.noise, seed)?,
        DatasetKind::Blobs => {
            if a.centers == 0 {
                return Err(CliError::usage("--centers must be positive"));
            }
            let centers = datasets::random_centers(a.centers, a.dim, 10.0, seed);
            datasets::make_blobs(a.n, &centers, a.std, seed)?
        }
    };
    save(&x, &a.out)?;
    if let (Some(p), Some(labels)) = (&a.labels_out, x.labels()) {
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        write_file(p, text.as_bytes())?;
    }
    Ok(())
}

fn read_labels(path: &Path, n: usize) -> CliResult<Vec<i64>> {
    let m = load_embedding(path)?;
    if m.cols() != 1 || m.rows() != n {
        return Err(CliError::data(format!(
            "labels file must have one column and {n} rows, found {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    m.values()
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 {
                Ok(v as i64)
            } else {
                Err(CliError::data(format!("label {v} is not an integer")))
            }
        })
        .collect()
}

fn cmd_plot(a: &PlotArgs) -> CliResult<()> {
    let y = load_embedding(&a.embedding)?;
    if a.out.is_none() && a.rgb_out.is_none() {
        return Err(CliError::usage("nothing to do: pass --out and/or --rgb-out"));
    }
    if let Some(p) = &a.rgb_out {
        let px = plot::rgb_normalize(&y)?;
        write_file(p, plot::rgb_csv(&px).as_bytes())?;
    }
    if let Some(out) = &a.out {
        if y.cols() != 2 {
            return Err(CliError::usage(format!(
                "SVG plots need a 2-D embedding, this one has {} columns; use --rgb-out for 3-D embeddings",
                y.cols()
            )));
        }
        let mut highlight = None;
        let colors = if let Some(path) = &a.labels {
            plot::categorical_colors(&read_labels(path, y.rows())?)
        } else if let Some(r) = a.color_by_distance_from {
            let input = a.input.as_ref().expect("clap enforces --input");
            let x = data::load_matrix(input, InputFormat::Csv, false, None).map_err(|e| with_path(e, input))?;
            if x.rows() != y.rows() {
                return Err(CliError::data(format!("input has {} rows, embedding has {}", x.rows(), y.rows())));
            }
            highlight = Some(r);
            plot::distance_colors(&x, r)?
        } else {
            vec![plot::Rgb(0x1f, 0x77, 0xb4); y.rows()]
        };
        write_file(out, plot::scatter_svg(&y, &colors, highlight)?.as_bytes())?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        par::init_threads(t);
    }
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, cli.no_timing),
        Command::Refine(a) => cmd_refine(a, cli.no_timing),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Benchmark(a) => cmd_benchmark(a, cli.no_timing),
        Command::Dataset(a) => cmd_dataset(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
