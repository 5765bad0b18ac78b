use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use railar::ingest::IngestError;
use railar::localization::PoseSource;
use railar::pipeline::{with_workers, Pipeline, PipelineConfig, PipelineError};
use railar::render::OcclusionMode;
use railar::synth::{self, SynthError, SynthScenario};

#[derive(Parser)]
#[command(name = "railar", version, about = "Augment rail camera/LiDAR/GNSS sequences with virtual obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bundle with ground truth and a pipeline.json
    Synth(SynthArgs),
    /// Label, register and extract centerline, planes and poles
    Extract(StageArgs),
    /// Write raw, ICP and centerline-refined pose sequences
    Localize(StageArgs),
    /// Render masks/depth/color and occlude the point clouds
    Render(StageArgs),
    /// Blend rendered obstacles into the camera images
    Composite(StageArgs),
    /// Compute reprojection error and jitter per camera and source
    Evaluate(StageArgs),
    /// extract, localize, render, composite and evaluate in order
    Pipeline(StageArgs),
    /// Summary table and per-frame review images
    Report(StageArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    #[value(name = "raw_gnss")]
    RawGnss,
    Icp,
    Refined,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline config (JSON); paths inside are relative to its directory
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sources to localize/evaluate; a single source is also used for rendering
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    /// Restrict to these cameras (repeatable)
    #[arg(long)]
    camera: Vec<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    occlusion_mode: Option<OcclusionMode>,
    #[arg(long, value_enum)]
    offset_compensation: Option<Toggle>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrackArg {
    Straight,
    Arc,
}

#[derive(Args)]
struct SynthArgs {
    /// Output bundle directory
    #[arg(long)]
    out: PathBuf,
    /// Scenario JSON; defaults to the built-in standard scenario
    #[arg(long, conflicts_with = "track")]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    track: Option<TrackArg>,
    /// Arc radius in meters
    #[arg(long, default_value_t = 100.0)]
    radius: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

impl StageArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(b) = &self.bundle {
            cfg.bundle = b.clone();
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = self.source {
            let single = match s {
                SourceArg::RawGnss => Some(PoseSource::RawGnss),
                SourceArg::Icp => Some(PoseSource::IcpOdometry),
                SourceArg::Refined => Some(PoseSource::SegmentationRefined),
                SourceArg::All => None,
            };
            match single {
                Some(p) => {
                    cfg.sources = vec![p];
                    cfg.render_source = p;
                }
                None => cfg.sources = PoseSource::ALL.to_vec(),
            }
        }
        if !self.camera.is_empty() {
            cfg.cameras = self.camera.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(m) = self.occlusion_mode {
            cfg.render.occlusion_mode = m;
        }
        if let Some(t) = self.offset_compensation {
            cfg.composite.offset_compensation = matches!(t, Toggle::On);
        }
        Ok(cfg)
    }
}

fn run_stages(args: &StageArgs, stages: &[&str]) -> Result<(), PipelineError> {
    let pipeline = Pipeline::open(args.config()?)?;
    for stage in stages {
        let summary = pipeline.run_stage(stage)?;
        println!("{}", summary.to_json_line());
    }
    Ok(())
}

fn synth_exit_code(e: &SynthError) -> u8 {
    match e {
        SynthError::InvalidScenario(_) => 2,
        SynthError::Ingest(IngestError::Io { .. }) => 3,
        SynthError::Ingest(_) => 2,
        _ => 3,
    }
}

fn run_synth(args: &SynthArgs) -> Result<(), SynthError> {
    let mut scenario = match (&args.scenario, args.track) {
        (Some(p), _) => synth::load_scenario(p)?,
        (None, Some(TrackArg::Arc)) => SynthScenario::arc(args.radius),
        (None, _) => SynthScenario::standard(),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
        scenario.gnss_noise.seed = seed;
    }
    let started = std::time::Instant::now();
    let output = with_workers(args.workers, || synth::generate(&scenario, &args.out))?;
    let line = json!({
        "stage": "synth",
        "status": "ok",
        "elapsed_s": started.elapsed().as_secs_f64(),
        "details": {
            "frames": output.bundle.len(),
            "cameras": output.bundle.cameras.keys().collect::<Vec<_>>(),
            "config": args.out.join(synth::PIPELINE_JSON),
        },
    });
    println!("{line}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RAILAR_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => {
            if let Err(e) = run_synth(a) {
                eprintln!("error: synth: {e}");
                return ExitCode::from(synth_exit_code(&e));
            }
            Ok(())
        }
        Command::Extract(a) => run_stages(a, &["extract"]),
        Command::Localize(a) => run_stages(a, &["localize"]),
        Command::Render(a) => run_stages(a, &["render"]),
        Command::Composite(a) => run_stages(a, &["composite"]),
        Command::Evaluate(a) => run_stages(a, &["evaluate"]),
        Command::Pipeline(a) => run_stages(a, &["extract", "localize", "render", "composite", "evaluate"]),
        Command::Report(a) => run_stages(a, &["report"]),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
