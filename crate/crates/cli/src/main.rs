//! Command-line front end: segment an image with m-RPI, run the Canny
//! baseline, or compare the two, writing edge maps, per-stage debug
//! images, a run manifest and a metrics report.

mod config;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mrpi_core::eval::{StageTiming, TimingReport};
use mrpi_core::{
    boundary_f1, canny_edges, compare_report, postprocess_pipeline, run_multi_rpi,
    Error as CoreError, ThresholdBand,
};

use config::{CannyOpts, ResolvedConfig, SegmentOpts};
use output::OutputWriter;

#[derive(Parser)]
#[command(name = "mrpi", version, about = "Level-set edge detection by random point initialization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full m-RPI segmentation pipeline.
    Segment(SegmentArgs),
    /// Run the Canny baseline only.
    Canny(CannyArgs),
    /// Run both methods and write a comparison report.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SegmentArgs {
    /// Input image (PNG or PGM).
    input: PathBuf,
    #[command(flatten)]
    opts: SegmentOpts,
    /// Ground-truth edge map; enables metrics.json.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write each post-processing stage as an image.
    #[arg(long)]
    debug_stages: bool,
    /// Output directory.
    #[arg(short = 'o', long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CannyArgs {
    input: PathBuf,
    #[command(flatten)]
    opts: CannyOpts,
    #[arg(short = 'o', long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    input: PathBuf,
    #[command(flatten)]
    opts: SegmentOpts,
    #[command(flatten)]
    canny_opts: CannyOpts,
    /// Ground-truth edge map; enables per-method metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    debug_stages: bool,
    #[arg(short = 'o', long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => cmd_segment(args),
        Command::Canny(args) => cmd_canny(args),
        Command::Compare(args) => cmd_compare(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        let code = match err.downcast_ref::<CoreError>() {
            Some(CoreError::Divergence { .. }) => 2,
            _ => 1,
        };
        std::process::exit(code);
    }
}

fn build_pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("failed to build thread pool")
}

fn cmd_segment(args: SegmentArgs) -> anyhow::Result<()> {
    let cfg = ResolvedConfig::resolve(&args.opts)?;
    let img = mrpi_core::load_image(&args.input)?;
    let writer = OutputWriter::new(&args.out_dir)?;

    let pool = build_pool(cfg.threads)?;
    let rpi_cfg = cfg.rpi_config()?;
    let band = ThresholdBand::new(cfg.p_low, cfg.p_high)?;

    let mut stages_t = Vec::new();
    let total_start = Instant::now();
    let t = Instant::now();
    let phi_bar = pool.install(|| run_multi_rpi(&img, &rpi_cfg))?;
    stages_t.push(StageTiming {
        name: "rpi_runs".into(),
        seconds: t.elapsed().as_secs_f64(),
    });
    let t = Instant::now();
    let stages = postprocess_pipeline(&phi_bar, band, cfg.thin_iters)?;
    stages_t.push(StageTiming {
        name: "postprocess".into(),
        seconds: t.elapsed().as_secs_f64(),
    });
    let timings = TimingReport::new(stages_t, total_start.elapsed().as_secs_f64(), cfg.threads);

    let mut artifacts = writer.write_edges("edges.png", stages.edges())?;
    if args.debug_stages {
        artifacts.extend(writer.write_debug_stages(&phi_bar, &stages)?);
    }
    if let Some(truth_path) = &args.truth {
        let truth = output::load_truth(truth_path)?;
        let metrics = boundary_f1(stages.edges(), &truth, 2)?;
        artifacts.extend(writer.write_json("metrics.json", &metrics)?);
    }
    artifacts.extend(writer.write_json("timings.json", &timings)?);
    writer.write_manifest("segment", &args.input, cfg, artifacts)?;
    Ok(())
}

fn cmd_canny(args: CannyArgs) -> anyhow::Result<()> {
    let params = args.opts.params()?;
    let img = mrpi_core::load_image(&args.input)?;
    let writer = OutputWriter::new(&args.out_dir)?;
    let edges = canny_edges(&img, &params)?;
    let artifacts = writer.write_edges("canny.png", &edges)?;
    writer.write_canny_manifest(&args.input, params, artifacts)?;
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let cfg = ResolvedConfig::resolve(&args.opts)?;
    let canny_params = args.canny_opts.params()?;
    let img = mrpi_core::load_image(&args.input)?;
    let writer = OutputWriter::new(&args.out_dir)?;
    let truth = args
        .truth
        .as_ref()
        .map(|p| output::load_truth(p))
        .transpose()?;

    let pool = build_pool(cfg.threads)?;
    let rpi_cfg = cfg.rpi_config()?;
    let band = ThresholdBand::new(cfg.p_low, cfg.p_high)?;

    let mut stages_t = Vec::new();
    let total_start = Instant::now();

    let t = Instant::now();
    let phi_bar = pool.install(|| run_multi_rpi(&img, &rpi_cfg))?;
    let stages = postprocess_pipeline(&phi_bar, band, cfg.thin_iters)?;
    stages_t.push(StageTiming {
        name: "rpi".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let canny = canny_edges(&img, &canny_params)?;
    stages_t.push(StageTiming {
        name: "canny".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let timings = TimingReport::new(stages_t, total_start.elapsed().as_secs_f64(), cfg.threads);
    let report = compare_report(stages.edges(), &canny, truth.as_ref(), 2, timings)?;

    let mut artifacts = writer.write_edges("edges.png", stages.edges())?;
    artifacts.extend(writer.write_edges("canny.png", &canny)?);
    if args.debug_stages {
        artifacts.extend(writer.write_debug_stages(&phi_bar, &stages)?);
    }
    artifacts.extend(writer.write_montage("montage.png", &img, stages.edges(), &canny)?);
    artifacts.extend(writer.write_json("metrics.json", &report)?);
    writer.write_manifest("compare", &args.input, cfg, artifacts)?;
    Ok(())
}
