use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use wayfind_core::detector::DetectionSource;
use wayfind_core::error::EvalError;
use wayfind_core::eval::bench::benchmark;
use wayfind_core::eval::config::Config;
use wayfind_core::eval::dataset::Dataset;
use wayfind_core::eval::evaluate_ground;
use wayfind_core::eval::pipeline::{run_pipeline, Detections};
use wayfind_core::eval::synth::{generate_synthetic_scene, SceneSpec};

#[derive(Parser)]
#[command(name = "wayfind", version, about = "Ground, walkable direction and object feedback from RGB-D + IMU sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a dataset and write one event record per line.
    Run(RunArgs),
    /// Time every stage over repeated passes of a dataset.
    Bench(BenchArgs),
    /// Score temporal ground detection and the memoryless baseline against truth masks.
    EvalGround(EvalArgs),
    /// Render a synthetic dataset from a scene description.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Dataset directory.
    dataset: PathBuf,
    /// TOML config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DetectorArgs {
    /// Frames on which object detection and speech run (comma separated).
    #[arg(long = "trigger", value_delimiter = ',')]
    triggers: Vec<u64>,
    /// Replay detections from this file instead of the dataset's own.
    #[arg(long, conflicts_with = "detector_endpoint")]
    detections: Option<PathBuf>,
    /// Query a detection service over HTTP instead of replaying.
    #[arg(long)]
    detector_endpoint: Option<String>,
    #[arg(long, default_value_t = 2000, requires = "detector_endpoint")]
    timeout_ms: u64,
    #[arg(long, default_value_t = 1, requires = "detector_endpoint")]
    retries: u32,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Event output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write zero for every elapsed-time field.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    detector: DetectorArgs,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long)]
    no_timing: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description (TOML).
    scene: PathBuf,
    /// Output dataset directory.
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load(common: &Common) -> Result<(Dataset, Config), EvalError> {
    let config = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let dataset = Dataset::open(&common.dataset)?;
    info!("{} frames from {}", dataset.len(), common.dataset.display());
    Ok((dataset, config))
}

fn detections(args: &DetectorArgs, dataset: &Dataset) -> Result<Detections, EvalError> {
    if let Some(endpoint) = &args.detector_endpoint {
        let source = DetectionSource::Remote {
            endpoint: endpoint.clone(),
            timeout_ms: args.timeout_ms,
            retries: args.retries,
        };
        return Detections::from_source(&source, dataset);
    }
    match &args.detections {
        Some(path) => Detections::from_source(&DetectionSource::Replay(path.clone()), dataset),
        None => Detections::dataset_default(dataset),
    }
}

fn run(args: &RunArgs) -> Result<(), EvalError> {
    let (dataset, config) = load(&args.common)?;
    let det = detections(&args.detector, &dataset)?;
    let triggers: BTreeSet<u64> = args.detector.triggers.iter().copied().collect();
    let timing = !args.no_timing;
    let summary = match &args.output {
        Some(path) => {
            wayfind_core::eval::pipeline::run_pipeline_to_file(&dataset, &config, &det, &triggers, timing, path)?
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run_pipeline(&dataset, &config, &det, &triggers, timing, &mut lock)?
        }
    };
    eprintln!(
        "{} frames, {} without ground, {} events",
        summary.frames, summary.non_ground_frames, summary.events
    );
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), EvalError> {
    let (dataset, config) = load(&args.common)?;
    let det = detections(&args.detector, &dataset)?;
    let triggers: BTreeSet<u64> = args.detector.triggers.iter().copied().collect();
    let report = benchmark(&dataset, &config, &det, &triggers, args.repetitions, !args.no_timing)?;
    if args.json {
        print_json(&report)
    } else {
        print!("{report}");
        Ok(())
    }
}

fn eval_ground(args: &EvalArgs) -> Result<(), EvalError> {
    let (dataset, config) = load(&args.common)?;
    let report = evaluate_ground(&dataset, &config)?;
    if args.json {
        return print_json(&report);
    }
    let n = report.frames.len() as f64;
    let mean = |f: fn(&wayfind_core::eval::FrameEval) -> f64| report.frames.iter().map(f).sum::<f64>() / n;
    println!("{} frames", report.frames.len());
    println!("mean overlap  temporal {:.3}  baseline {:.3}", mean(|f| f.temporal_iou), mean(|f| f.baseline_iou));
    match report.temporal_win_rate() {
        Some(w) => println!("temporal height error below baseline on {:.1}% of frames", w * 100.0),
        None => println!("no height truth available"),
    }
    let p = &report.precision;
    println!();
    print!("{:<14} {:>6}", "band (m)", "frames");
    for t in &p.thresholds {
        print!(" {:>13}", format!("@{t}"));
    }
    println!();
    for (b, band) in p.bands.iter().enumerate() {
        print!("{:<14} {:>6}", format!("[{}, {})", band[0], band[1]), p.frames[b]);
        for t in 0..p.thresholds.len() {
            print!(" {:>13}", format!("{:.2} / {:.2}", p.temporal[b][t], p.baseline[b][t]));
        }
        println!();
    }
    println!("precision shown as temporal / baseline");
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), EvalError> {
    let spec = SceneSpec::load(&args.scene)?;
    let n = generate_synthetic_scene(&spec, args.seed, &args.out)?;
    eprintln!("wrote {n} frames to {}", args.out.display());
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), EvalError> {
    let text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| EvalError::io("<stdout>", e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match &cli.command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::EvalGround(a) => eval_ground(a),
        Command::Synth(a) => synth(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
