//! Command line for the out-of-core projection toolkit.
//!
//! Subcommands: `generate` (synthetic blobs, CSV import), `project`
//! (fit + batched OOS transform), `evaluate` (quality metrics), `bench`
//! (runtime sweep CSV), `plot` (scatter, density heatmap).
//!
//! Exit codes: 0 success, 2 validation error, 3 capacity error, 4 I/O
//! error. Every subcommand is deterministic given its full flag set,
//! including `--threads`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oocdr::bench::{self, BenchConfig};
use oocdr::io::{self, SyntheticSpec};
use oocdr::method::{MdsParams, Method, PcaParams, TsneParams};
use oocdr::metrics::{self, MetricKind, MetricParams, MetricReport, Scope};
use oocdr::plot::{self, ColorScale, HeatmapSpec, ScatterSpec};
use oocdr::project::{self, write_projection};
use oocdr::Error;

#[derive(Parser)]
#[command(name = "oocdr", version, about = "Out-of-core dimensionality reduction")]
struct Cli {
    /// Worker threads for parallel sections (0 or omitted: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Memory cap in bytes for methods that build pairwise state on the
    /// reference set.
    #[arg(long = "memory-cap", global = true)]
    memory_cap: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create datasets in the binary matrix format.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Fit on a random reference sample, then project the remaining rows
    /// in fixed-size batches with the frozen model.
    Project(ProjectArgs),
    /// Compute projection quality metrics against the original data.
    Evaluate(EvaluateArgs),
    /// Measure fit time and per-point OOS time across reference sizes.
    Bench(BenchArgs),
    /// Render a 2-D projection as an image.
    #[command(subcommand)]
    Plot(PlotCmd),
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Sample an isotropic Gaussian blob mixture with cluster labels.
    Blobs(BlobsArgs),
    /// Convert a numeric CSV file into the binary matrix format.
    FromCsv {
        /// Source CSV path.
        src: PathBuf,
        /// Output dataset path.
        out: PathBuf,
    },
}

#[derive(Args)]
struct BlobsArgs {
    /// Output dataset path.
    out: PathBuf,
    /// Number of rows.
    #[arg(long)]
    n: u64,
    /// Dimensionality.
    #[arg(long)]
    dim: u32,
    /// Number of mixture components.
    #[arg(long, default_value_t = 4)]
    clusters: u32,
    /// Standard deviation within each component.
    #[arg(long = "std", default_value_t = 1.0)]
    cluster_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct HyperArgs {
    /// t-SNE perplexity.
    #[arg(long)]
    perplexity: Option<f64>,

    /// Fit iterations (MDS and t-SNE).
    #[arg(long)]
    iterations: Option<usize>,

    /// MDS gradient step size.
    #[arg(long = "step-size")]
    step_size: Option<f64>,

    /// Descent iterations per out-of-sample point; 0 keeps the
    /// initialization untouched.
    #[arg(long = "oos-iters")]
    oos_iters: Option<usize>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Input dataset path.
    dataset: PathBuf,
    /// pca, mds, or tsne.
    #[arg(long)]
    method: String,
    /// Reference sample size.
    #[arg(long = "ref-size")]
    ref_size: usize,
    /// Rows per OOS batch.
    #[arg(long = "batch-size")]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dimensionality.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Projection output path (sidecar metadata lands next to it).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Projection file written by `project`.
    projection: PathBuf,
    /// The dataset the projection was computed from.
    dataset: PathBuf,
    /// Comma-separated subset of stress, pearson, knn, trust.
    #[arg(long, value_delimiter = ',', default_value = "stress,pearson,knn,trust")]
    metrics: Vec<String>,
    /// Neighborhood size for knn and trust.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Rows per distance block.
    #[arg(long, default_value_t = 1024)]
    block: usize,
    /// all, reference, or oos.
    #[arg(long, default_value = "all")]
    scope: String,
    /// Emit CSV rows instead of metric=value lines.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Input dataset path.
    dataset: PathBuf,
    /// pca, mds, or tsne.
    #[arg(long)]
    method: String,
    /// Comma-separated reference sizes (at least 2).
    #[arg(long = "ref-size", value_delimiter = ',')]
    ref_size: Vec<usize>,
    /// Rows per OOS batch (default 100000, or 1000 for mds).
    #[arg(long = "batch-size")]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dimensionality.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Cap on OOS points measured per size (whole file when omitted).
    #[arg(long = "oos-sample")]
    oos_sample: Option<u64>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the timing model report (needs at least 3 sizes).
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Subcommand)]
enum PlotCmd {
    /// Scatter plot colored by labels.
    Scatter(ScatterArgs),
    /// Density heat map; prints the maximum tile count.
    Heatmap(HeatmapArgs),
}

#[derive(Args)]
struct ScatterArgs {
    /// 2-D projection or dataset file.
    projection: PathBuf,
    /// Image path, .ppm or .png.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 800)]
    width: usize,
    #[arg(long, default_value_t = 800)]
    height: usize,
    /// Points are squares of side 2r+1.
    #[arg(long = "point-radius", default_value_t = 1)]
    point_radius: usize,
    /// Take label colors from this row-aligned dataset instead of the
    /// projection's own label column.
    #[arg(long = "labels-from")]
    labels_from: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    /// 2-D projection or dataset file.
    projection: PathBuf,
    /// Image path, .ppm or .png.
    #[arg(long)]
    out: PathBuf,
    /// Tile grid as WxH.
    #[arg(long, default_value = "64x64")]
    grid: String,
    /// Log-scale the color mapping (log1p of tile counts).
    #[arg(long)]
    log: bool,
    #[arg(long, default_value_t = 640)]
    width: usize,
    #[arg(long, default_value_t = 640)]
    height: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // 0 lets rayon pick the logical core count.
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Validation(_) => 2,
                Error::Capacity(_) => 3,
                Error::Io { .. } | Error::Format { .. } => 4,
            })
        }
    }
}

fn run(cli: Cli) -> oocdr::Result<()> {
    match cli.command {
        Command::Generate(cmd) => cmd_generate(cmd),
        Command::Project(args) => cmd_project(args, cli.memory_cap),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Bench(args) => cmd_bench(args, cli.memory_cap),
        Command::Plot(cmd) => cmd_plot(cmd),
    }
}

fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

/// Resolve the method id and the hyperparameter flags, rejecting flags
/// that do not apply to the chosen method.
fn build_method(id: &str, hyper: &HyperArgs, memory_cap: Option<u64>) -> oocdr::Result<Method> {
    let id = id.to_ascii_lowercase();
    let reject = |flag: &str| -> oocdr::Result<()> {
        Err(validation(format!("--{flag} does not apply to {id}")))
    };
    match id.as_str() {
        "pca" => {
            if hyper.perplexity.is_some() {
                reject("perplexity")?;
            }
            if hyper.iterations.is_some() {
                reject("iterations")?;
            }
            if hyper.step_size.is_some() {
                reject("step-size")?;
            }
            if hyper.oos_iters.is_some() {
                reject("oos-iters")?;
            }
            Ok(Method::Pca(PcaParams::default()))
        }
        "mds" => {
            if hyper.perplexity.is_some() {
                reject("perplexity")?;
            }
            let mut p = MdsParams::default();
            if let Some(v) = hyper.iterations {
                p.iterations = v;
            }
            if let Some(v) = hyper.step_size {
                p.step_size = v;
            }
            if let Some(v) = hyper.oos_iters {
                p.oos_iterations = v;
            }
            if let Some(cap) = memory_cap {
                p.memory_cap_bytes = cap;
            }
            Ok(Method::Mds(p))
        }
        "tsne" => {
            if hyper.step_size.is_some() {
                reject("step-size")?;
            }
            let mut p = TsneParams::default();
            if let Some(v) = hyper.perplexity {
                p.perplexity = v;
            }
            if let Some(v) = hyper.iterations {
                p.iterations = v;
            }
            if let Some(v) = hyper.oos_iters {
                p.oos_iterations = v;
            }
            if let Some(cap) = memory_cap {
                p.memory_cap_bytes = cap;
            }
            Ok(Method::Tsne(p))
        }
        other => Err(validation(format!(
            "unknown method {other:?} (expected pca, mds, tsne)"
        ))),
    }
}

fn cmd_generate(cmd: GenerateCmd) -> oocdr::Result<()> {
    let (out, header) = match cmd {
        GenerateCmd::Blobs(args) => {
            let spec = SyntheticSpec {
                n: args.n,
                d: args.dim,
                k_clusters: args.clusters,
                cluster_std: args.cluster_std,
                seed: args.seed,
            };
            (args.out.clone(), io::generate_blobs_to_file(&spec, &args.out)?)
        }
        GenerateCmd::FromCsv { src, out } => (out.clone(), io::import_csv(&src, &out)?),
    };
    println!(
        "wrote {} ({} rows, {} dims)",
        out.display(),
        header.rows,
        header.dims
    );
    Ok(())
}

fn cmd_project(args: ProjectArgs, memory_cap: Option<u64>) -> oocdr::Result<()> {
    let method = build_method(&args.method, &args.hyper, memory_cap)?;
    let result = project::project(
        &args.dataset,
        &method,
        args.ref_size,
        args.batch_size,
        args.seed,
        args.dims,
    )?;
    write_projection(&result, &args.out)?;
    println!("fit_seconds={}", result.fit_seconds);
    println!("mean_batch_seconds={}", result.mean_batch_seconds());
    println!("total_seconds={}", result.total_seconds);
    if result.degenerate_points > 0 {
        println!("degenerate_points={}", result.degenerate_points);
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> oocdr::Result<()> {
    let metrics: Vec<MetricKind> = args
        .metrics
        .iter()
        .map(|s| MetricKind::parse(s))
        .collect::<oocdr::Result<_>>()?;
    let scope = Scope::parse(&args.scope)?;
    let (y, _meta) = project::read_projection(&args.projection)?;
    let x = io::read_matrix(&args.dataset)?;
    let params = MetricParams {
        k: args.k,
        block: args.block,
        metrics,
    };
    let report = metrics::evaluate(&x, &y, y.labels(), &params, scope)?;
    if args.csv {
        println!("{}", MetricReport::CSV_HEADER);
        print!("{}", report.to_csv_rows());
    } else {
        print!("{}", report.to_lines());
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs, memory_cap: Option<u64>) -> oocdr::Result<()> {
    let method = build_method(&args.method, &args.hyper, memory_cap)?;
    let config = BenchConfig {
        sizes: args.ref_size.clone(),
        n_batch: args
            .batch_size
            .unwrap_or_else(|| bench::default_batch_size(&method)),
        seed: args.seed,
        m: args.dims,
        oos_sample: args.oos_sample,
    };
    let rows = bench::run_bench(&args.dataset, &method, &config)?;
    let csv = bench::rows_to_csv(&rows);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
        }
        None => print!("{csv}"),
    }
    if args.check {
        let report = bench::timing_model_check(&rows)?;
        for line in report.to_lines() {
            println!("{line}");
        }
    }
    Ok(())
}

fn parse_grid(s: &str) -> oocdr::Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let bad = || validation(format!("--grid expects WxH, e.g. 64x64, got {s:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let w = parts[0].trim().parse().map_err(|_| bad())?;
    let h = parts[1].trim().parse().map_err(|_| bad())?;
    Ok((w, h))
}

fn cmd_plot(cmd: PlotCmd) -> oocdr::Result<()> {
    match cmd {
        PlotCmd::Scatter(args) => {
            let y = io::read_matrix(&args.projection)?;
            let labels_owned;
            let labels: Option<&[i32]> = match &args.labels_from {
                Some(path) => {
                    let source = io::read_matrix(path)?;
                    let l = source.labels().ok_or_else(|| {
                        validation(format!("{} has no label column", path.display()))
                    })?;
                    labels_owned = l.to_vec();
                    Some(&labels_owned)
                }
                None => y.labels(),
            };
            let spec = ScatterSpec {
                width: args.width,
                height: args.height,
                point_radius: args.point_radius,
                ..ScatterSpec::default()
            };
            let img = plot::render_scatter(&y, labels, &spec)?;
            img.write(&args.out)
        }
        PlotCmd::Heatmap(args) => {
            let y = io::read_matrix(&args.projection)?;
            let (grid_w, grid_h) = parse_grid(&args.grid)?;
            let spec = HeatmapSpec {
                grid_w,
                grid_h,
                scale: if args.log {
                    ColorScale::Log
                } else {
                    ColorScale::Linear
                },
                width: args.width,
                height: args.height,
                ..HeatmapSpec::default()
            };
            let (img, max) = plot::render_heatmap(&y, &spec)?;
            img.write(&args.out)?;
            println!("max_tile_count={max}");
            Ok(())
        }
    }
}
