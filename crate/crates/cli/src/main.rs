mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptive_denoise::bench::{run_bench, write_csv, BenchConfig};
use adaptive_denoise::edges::{detect_edges, EdgeDetectParams};
use adaptive_denoise::io::{read_image, write_image};
use adaptive_denoise::kernel::KernelShape;
use adaptive_denoise::neighborhood::AxisConvention;
use adaptive_denoise::pipeline::trace_csv;
use adaptive_denoise::{
    add_noise, default_params, denoise_traced, synth, DenoiseParams, Error, Mode, NoiseSpec,
    SceneKind, SceneSpec,
};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::{parse_list, ConfigFile};

/// Edge-preserving denoising of grayscale images.
///
/// Flags fall back to the `--config` file, then to the listed defaults.
#[derive(Debug, Parser)]
#[command(name = "adenoise", version)]
struct Cli {
    /// File of `key = value` lines supplying flag values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads; 0 uses every core [default: 0].
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a noiseless synthetic scene.
    Synth(SynthArgs),
    /// Add Gaussian noise to an image.
    Addnoise(NoiseArgs),
    /// Detect edge pixels.
    Edges(EdgeArgs),
    /// Denoise an image.
    Denoise(DenoiseArgs),
    /// Monte-Carlo RMSE study on synthetic scenes, written as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// `square-circle`, `constant:<level>` or `step:<column>:<low>:<high>` [default: square-circle].
    #[arg(long)]
    scene: Option<String>,
    /// Side length in pixels [default: 64].
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Noise standard deviation [default: 10].
    #[arg(long)]
    sd: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EdgeFlags {
    /// Half-width of the plane-fit window [default: 2].
    #[arg(long)]
    k: Option<usize>,
    /// Significance level of the edge test [default: 0.05].
    #[arg(long)]
    alpha: Option<f64>,
    /// Noise SD to use instead of the robust estimate.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct EdgeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    detect: EdgeFlags,
    /// Edge mask output: 255 on edge pixels.
    #[arg(long)]
    out_mask: PathBuf,
    /// Edge statistic output, scaled to the full gray range.
    #[arg(long)]
    out_delta: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// integrated, cluster-only, kernel-only or box3 [default: integrated].
    #[arg(long)]
    mode: Option<String>,
    /// Dispatch distance and ellipse clearance in pixels [default: 3 below 100 px, else 5].
    #[arg(long)]
    gamma: Option<f64>,
    /// Cap on the ellipse semi-axes [default: 6 below 100 px, else 10].
    #[arg(long)]
    max_axis: Option<f64>,
    #[command(flatten)]
    detect: EdgeFlags,
    /// Local polynomial order, 0 to 2 [default: 2].
    #[arg(long)]
    order: Option<u8>,
    /// epanechnikov or gaussian [default: epanechnikov].
    #[arg(long)]
    kernel: Option<String>,
    /// Whether clearances give semi-axes or full axes: semi or full [default: semi].
    #[arg(long)]
    axes: Option<String>,
    /// Bandwidth multiplier of the patch weights [default: 1].
    #[arg(long)]
    bn: Option<f64>,
    /// Patch half-width for the similarity weights [default: 1].
    #[arg(long)]
    patch_radius: Option<usize>,
    /// Radius of the clustering disk [default: gamma].
    #[arg(long)]
    h_n: Option<f64>,
    /// Write the per-pixel branch trace as CSV.
    #[arg(long, value_name = "PATH")]
    debug_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated scene list [default: square-circle].
    #[arg(long)]
    scenes: Option<String>,
    /// [default: 64,128]
    #[arg(long)]
    sizes: Option<String>,
    /// [default: 5,10,20]
    #[arg(long)]
    sds: Option<String>,
    /// Replicates per cell [default: 10].
    #[arg(long = "L", value_name = "L")]
    replicates: Option<usize>,
    /// [default: integrated]
    #[arg(long)]
    methods: Option<String>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Exit 1 for bad invocations, exit 2 for failures reading or processing data.
enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Usage(msg)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::InvalidScene(_) => Failure::Usage(e.to_string()),
            // the library's messages already include their cause
            other => Failure::Data(anyhow::anyhow!(other.to_string())),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    let threads = cfg.resolve(cli.threads, "threads", 0)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("starting worker threads")?;
    pool.install(|| match cli.command {
        Command::Synth(args) => cmd_synth(args, &cfg),
        Command::Addnoise(args) => cmd_addnoise(args, &cfg),
        Command::Edges(args) => cmd_edges(args, &cfg),
        Command::Denoise(args) => cmd_denoise(args, &cfg),
        Command::Bench(args) => cmd_bench(args, &cfg),
    })
}

fn parse_with<T>(text: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T, String> {
    parse(text).ok_or_else(|| format!("unknown {what} `{text}`"))
}

fn cmd_synth(args: SynthArgs, cfg: &ConfigFile) -> Outcome {
    let scene: SceneKind = cfg
        .resolve(args.scene, "scene", "square-circle".into())?
        .parse()?;
    let n = cfg.resolve(args.n, "n", 64)?;
    let img = synth(&SceneSpec { kind: scene, n })?;
    write_image(&img, &args.out)?;
    Ok(())
}

fn cmd_addnoise(args: NoiseArgs, cfg: &ConfigFile) -> Outcome {
    let sd = cfg.resolve(args.sd, "sd", 10.0)?;
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Failure::Usage(format!(
            "noise sd {sd} must be finite and >= 0"
        )));
    }
    let seed = cfg.resolve(args.seed, "seed", 1)?;
    let img = read_image(&args.input)?;
    write_image(&add_noise(&img, NoiseSpec { sd, seed }), &args.out)?;
    Ok(())
}

fn edge_params(flags: &EdgeFlags, cfg: &ConfigFile) -> Result<EdgeDetectParams, Failure> {
    let defaults = EdgeDetectParams::default();
    Ok(EdgeDetectParams {
        half_width: cfg.resolve(flags.k, "k", defaults.half_width)?,
        alpha: cfg.resolve(flags.alpha, "alpha", defaults.alpha)?,
        sigma_override: flags.sigma.or(cfg.get("sigma")?),
    })
}

fn cmd_edges(args: EdgeArgs, cfg: &ConfigFile) -> Outcome {
    let params = edge_params(&args.detect, cfg)?;
    let img = read_image(&args.input)?;
    let edges = detect_edges(&img, &params)?;
    write_image(&edges.mask_image(), &args.out_mask)?;
    if let Some(path) = &args.out_delta {
        write_image(&edges.delta_image(), path)?;
    }
    println!(
        "{} edge pixels; sigma {:.4}, threshold {:.4}",
        edges.count(),
        edges.sigma_hat,
        edges.threshold
    );
    Ok(())
}

fn denoise_params(
    args: &DenoiseArgs,
    cfg: &ConfigFile,
    n: usize,
) -> Result<DenoiseParams, Failure> {
    let mut p = default_params(n);
    let mode = cfg.resolve(args.mode.clone(), "mode", p.mode.name().into())?;
    p.mode = mode.parse()?;
    p.gamma = cfg.resolve(args.gamma, "gamma", p.gamma)?;
    p.max_axis = cfg.resolve(args.max_axis, "max-axis", p.max_axis)?;
    p.edge = edge_params(&args.detect, cfg)?;
    p.kernel.order = cfg.resolve(args.order, "order", p.kernel.order)?;
    let kernel = cfg.resolve(args.kernel.clone(), "kernel", "epanechnikov".into())?;
    p.kernel.shape = parse_with(&kernel, "kernel", |s| match s {
        "epanechnikov" => Some(KernelShape::Epanechnikov),
        "gaussian" => Some(KernelShape::TruncatedGaussian),
        _ => None,
    })?;
    let axes = cfg.resolve(args.axes.clone(), "axes", "semi".into())?;
    p.axes = parse_with(&axes, "axis convention", |s| match s {
        "semi" => Some(AxisConvention::Semi),
        "full" => Some(AxisConvention::Full),
        _ => None,
    })?;
    p.cluster.bn = cfg.resolve(args.bn, "bn", p.cluster.bn)?;
    p.cluster.patch_radius =
        cfg.resolve(args.patch_radius, "patch-radius", p.cluster.patch_radius)?;
    p.cluster.h_n = cfg.resolve(args.h_n, "h-n", p.gamma)?;
    Ok(p)
}

fn cmd_denoise(args: DenoiseArgs, cfg: &ConfigFile) -> Outcome {
    let img = read_image(&args.input)?;
    let params = denoise_params(&args, cfg, img.side())?;
    let out = denoise_traced(&img, &params)?;
    write_image(&out.image, &args.out)?;
    if let Some(path) = &args.debug_dump {
        write_text(path, &trace_csv(img.width(), &out.trace))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_bench(args: BenchArgs, cfg: &ConfigFile) -> Outcome {
    let defaults = BenchConfig::default();
    let list = |flag: Option<String>, key: &str, default: &str| -> Result<String, Failure> {
        Ok(cfg.resolve(flag, key, default.to_owned())?)
    };
    let scenes = list(args.scenes, "scenes", "square-circle")?
        .split(',')
        .map(|s| s.trim().parse::<SceneKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let methods = list(args.methods, "methods", "integrated")?
        .split(',')
        .map(|s| s.trim().parse::<Mode>())
        .collect::<Result<Vec<_>, _>>()?;
    let config = BenchConfig {
        scenes,
        sizes: parse_list(&list(args.sizes, "sizes", "64,128")?)?,
        sds: parse_list(&list(args.sds, "sds", "5,10,20")?)?,
        replicates: cfg.resolve(args.replicates, "L", defaults.replicates)?,
        methods,
        base_seed: cfg.resolve(args.seed, "seed", defaults.base_seed)?,
        fixed_seed: false,
    };
    let rows = run_bench(&config)?;
    write_csv(&rows, &args.out)?;
    Ok(())
}
