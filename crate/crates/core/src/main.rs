use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use denise::config::read_key_values;
use denise::enhance::{EnhanceConfig, Mode, Variant};
use denise::metrics::{evaluate_dataset, BandWidth, MetricsConfig};
use denise::pipeline::{
    cmd_compare, cmd_enhance, cmd_eval, cmd_pipeline, cmd_predict, cmd_synth, cmd_train, parse_ratios,
    PipelineConfig, Predictor, MODEL_LABEL, RUN_ROOT_ENV,
};
use denise::refmodels::TrainConfig;
use denise::synth::{SceneConfig, Split};
use denise::{Error, Result};

#[derive(Parser)]
#[command(name = "denise", version, about = "Two-stage data enhancement for segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with train/val/test splits.
    Synth(SynthArgs),
    /// Train a patch classifier on one split.
    Train(TrainArgs),
    /// Write per-sample prediction maps.
    Predict(PredictArgs),
    /// Fuse predictions into images and write an enhanced dataset.
    Enhance(EnhanceArgs),
    /// Score predictions with IoU and Boundary IoU.
    Eval(EvalArgs),
    /// Full baseline vs enhanced run ending in a comparison table.
    Pipeline(PipelineArgs),
    /// Compare two metrics reports.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 250)]
    images: usize,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scene overrides as key=value (repeatable), e.g. occlusion_prob=0.5.
    #[arg(long = "scene", value_name = "KEY=VALUE")]
    scene: Vec<String>,
}

#[derive(Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    learning_rate: f64,
    #[arg(long, default_value_t = 2)]
    patch_radius: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            patch_radius: self.patch_radius,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "train")]
    split: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// train, val, test, or all.
    #[arg(long, default_value = "all")]
    split: String,
    /// Checkpoint file; omit to use --edges.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Edge source when no model is given: sobel or truth-edges.
    #[arg(long, default_value = "sobel")]
    edges: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnhanceOpts {
    #[arg(long, default_value = "seg")]
    variant: String,
    #[arg(long, default_value = "merge3")]
    mode: String,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    clip_low: f64,
    #[arg(long, default_value_t = 1.0)]
    clip_high: f64,
    #[arg(long, default_value_t = 15)]
    dilation_radius: usize,
    #[arg(long)]
    preprocess_channel4: bool,
}

impl EnhanceOpts {
    fn config(&self) -> Result<EnhanceConfig> {
        let cfg = EnhanceConfig {
            variant: self.variant.parse::<Variant>()?,
            mode: self.mode.parse::<Mode>()?,
            threshold: self.threshold,
            clip_low: self.clip_low,
            clip_high: self.clip_high,
            dilation_radius: self.dilation_radius,
            preprocess_channel4: self.preprocess_channel4,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "all")]
    split: String,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: EnhanceOpts,
}

#[derive(Args)]
struct MetricsOpts {
    /// Boundary band: fraction:<f> of the diagonal or pixels:<n>.
    #[arg(long, default_value = "fraction:0.02")]
    biou_d: String,
    #[arg(long, default_value_t = 0.5)]
    eval_threshold: f64,
}

impl MetricsOpts {
    fn config(&self) -> Result<MetricsConfig> {
        let cfg = MetricsConfig {
            band: self.biou_d.parse::<BandWidth>()?,
            eval_threshold: self.eval_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Dataset manifest; the masks of --split are the ground truth.
    #[arg(long, conflicts_with = "truth")]
    manifest: Option<PathBuf>,
    /// Directory of ground-truth masks matched to predictions by file name.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = MODEL_LABEL)]
    model_label: String,
    #[arg(long, default_value = "Standalone")]
    method_label: String,
    #[command(flatten)]
    opts: MetricsOpts,
}

#[derive(Args)]
struct PipelineArgs {
    /// key=value file with the same keys as the long flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    run_dir: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// classifier, sobel, truth-edges, or external:<dir>.
    #[arg(long)]
    stage1: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    biou_d: Option<String>,
    /// Run only the standalone leg.
    #[arg(long)]
    baseline_only: bool,
    /// Extra settings as key=value (repeatable), e.g. scene.occlusion_prob=0.5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    enhanced: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<Option<Split>> {
    match s {
        "all" => Ok(None),
        other => other.parse().map(Some),
    }
}

fn split_kv(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {s:?}")))
}

fn default_run_dir(run_id: &str) -> PathBuf {
    let root = std::env::var_os(RUN_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(run_id)
}

fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &args.config {
        cfg.apply(&read_key_values(path)?)?;
    }
    let mut flags: BTreeMap<String, String> = BTreeMap::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            flags.insert(k.to_string(), v);
        }
    };
    put("run-id", args.run_id.clone());
    put("seed", args.seed.map(|v| v.to_string()));
    put("images", args.images.map(|v| v.to_string()));
    put("manifest", args.manifest.as_ref().map(|p| p.display().to_string()));
    put("stage1", args.stage1.clone());
    put("variant", args.variant.clone());
    put("mode", args.mode.clone());
    put("epochs", args.epochs.map(|v| v.to_string()));
    put("learning-rate", args.learning_rate.map(|v| v.to_string()));
    put("batch-size", args.batch_size.map(|v| v.to_string()));
    put("biou-d", args.biou_d.clone());
    if args.baseline_only {
        put("baseline-only", Some("true".into()));
    }
    cfg.apply(&flags)?;
    for kv in &args.set {
        let (k, v) = split_kv(kv)?;
        cfg.set(k, v)?;
    }
    cfg.run_dir = match &args.run_dir {
        Some(dir) => dir.clone(),
        None => default_run_dir(&cfg.run_id),
    };
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let mut scene = SceneConfig {
                seed: a.seed,
                ..SceneConfig::default()
            };
            for kv in &a.scene {
                let (k, v) = split_kv(kv)?;
                scene.set(k, v)?;
            }
            let m = cmd_synth(&scene, a.images, parse_ratios(&a.ratios)?, &a.out)?;
            let (tr, va, te) = m.split_counts();
            println!("{} samples (train {tr}, val {va}, test {te}) in {}", m.entries.len(), a.out.display());
        }
        Command::Train(a) => {
            let split = a.split.parse::<Split>()?;
            cmd_train(&a.manifest, split, &a.opts.config(), &a.out)?;
            println!("checkpoint written to {}", a.out.display());
        }
        Command::Predict(a) => {
            let predictor = match (&a.model, a.edges.as_str()) {
                (Some(path), _) => Predictor::Checkpoint(path.clone()),
                (None, "sobel") => Predictor::Sobel,
                (None, "truth-edges") => Predictor::TruthEdges,
                (None, other) => {
                    return Err(Error::Config(format!("unknown edge source {other:?} (sobel|truth-edges)")))
                }
            };
            let n = cmd_predict(&a.manifest, parse_split(&a.split)?, &predictor, &a.out)?;
            println!("{n} prediction maps written to {}", a.out.display());
        }
        Command::Enhance(a) => {
            let cfg = a.opts.config()?;
            let m = cmd_enhance(&a.manifest, parse_split(&a.split)?, &a.predictions, &cfg, &a.out)?;
            println!("{} enhanced samples written to {}", m.entries.len(), a.out.display());
        }
        Command::Eval(a) => {
            let cfg = a.opts.config()?;
            let report = match (&a.manifest, &a.truth) {
                (Some(manifest), None) => {
                    let split = a.split.parse::<Split>()?;
                    cmd_eval(manifest, split, &a.predictions, &cfg, (&a.model_label, &a.method_label), &a.out)?
                }
                (None, Some(truth)) => {
                    let mut report = evaluate_dataset(&a.predictions, truth, &cfg)?;
                    report.model = a.model_label.clone();
                    report.method = a.method_label.clone();
                    report.write(&a.out)?;
                    report
                }
                _ => return Err(Error::Config("eval needs exactly one of --manifest or --truth".into())),
            };
            println!(
                "{} images: mean IoU {:.4}, mean BIoU {:.4}",
                report.per_image.len(),
                report.mean_iou,
                report.mean_biou
            );
        }
        Command::Pipeline(a) => {
            let cfg = pipeline_config(&a)?;
            let outcome = cmd_pipeline(&cfg)?;
            print!("{}", outcome.table());
        }
        Command::Compare(a) => {
            let c = cmd_compare(&a.baseline, &a.enhanced, a.out.as_deref())?;
            print!("{}", c.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error ({category:?}): {e}");
            ExitCode::from(category.exit_code() as u8)
        }
    }
}
