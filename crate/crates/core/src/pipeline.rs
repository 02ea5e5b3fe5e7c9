//! End-to-end commands: synthesize, train, predict, enhance, evaluate,
//! compare, and the full baseline-versus-enhanced pipeline.
//!
//! Every command writes `<command>.log` into its run directory. The log is a
//! valid `key=value` config file (see [`crate::config`]) followed by comment
//! lines with the version and wall time, so a run can be repeated from it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::config::render_key_values;
use crate::enhance::{enhance_sample, EnhanceConfig, Mode, Variant};
use crate::error::{Error, Result};
use crate::metrics::{compare_runs, evaluate_pairs, BandWidth, Comparison, MetricsConfig, MetricsReport};
use crate::raster::{read_prob_map, write_mask, write_prob_map, write_raster, BinaryMask, ProbMap, Raster};
use crate::refmodels::{ingest_predictions, predict, sobel_edges, train, PatchClassifier, TrainConfig};
use crate::synth::{
    generate_dataset, load_manifest, save_manifest, split_dataset, DatasetManifest, ManifestEntry, SceneConfig,
    Split, MANIFEST_FILE,
};

pub const MODEL_LABEL: &str = "PatchClassifier";
pub const STANDALONE_LABEL: &str = "Standalone";
/// Environment variable naming the default run root.
pub const RUN_ROOT_ENV: &str = "DENISE_RUN_ROOT";

/// Source of first-stage predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage1 {
    /// Patch classifier trained on the raw training split.
    Classifier,
    /// Sobel edges of the input image.
    Sobel,
    /// Sobel edges of the ground-truth mask: an upper bound on what an edge
    /// detector could supply.
    TruthEdges,
    /// `<id>.dpf` / `<id>.png` files produced by some other model.
    External(PathBuf),
}

impl fmt::Display for Stage1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage1::Classifier => f.write_str("classifier"),
            Stage1::Sobel => f.write_str("sobel"),
            Stage1::TruthEdges => f.write_str("truth-edges"),
            Stage1::External(dir) => write!(f, "external:{}", dir.display()),
        }
    }
}

impl FromStr for Stage1 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classifier" => Ok(Stage1::Classifier),
            "sobel" => Ok(Stage1::Sobel),
            "truth-edges" => Ok(Stage1::TruthEdges),
            _ => match s.strip_prefix("external:") {
                Some(dir) if !dir.is_empty() => Ok(Stage1::External(PathBuf::from(dir))),
                _ => Err(Error::Config(format!(
                    "unknown stage-1 source {s:?} (classifier|sobel|truth-edges|external:<dir>)"
                ))),
            },
        }
    }
}

/// Everything a pipeline run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub scene: SceneConfig,
    pub images: usize,
    pub ratios: (f64, f64, f64),
    /// Existing dataset to use instead of generating one.
    pub manifest: Option<PathBuf>,
    pub stage1: Stage1,
    pub enhance: EnhanceConfig,
    pub train: TrainConfig,
    pub metrics: MetricsConfig,
    pub baseline_only: bool,
    pub run_dir: PathBuf,
    pub run_id: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scene: SceneConfig::default(),
            images: 250,
            ratios: (0.8, 0.1, 0.1),
            manifest: None,
            stage1: Stage1::Sobel,
            enhance: EnhanceConfig::new(Variant::Edge, Mode::Merge3),
            train: TrainConfig::default(),
            metrics: MetricsConfig::default(),
            baseline_only: false,
            run_dir: PathBuf::from("runs/default"),
            run_id: "default".into(),
        }
    }
}

impl PipelineConfig {
    /// One seed drives scene generation, the split, and both trainings.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scene.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.manifest.is_none() {
            self.scene.validate()?;
        }
        self.enhance.validate()?;
        self.train.validate()?;
        self.metrics.validate()
    }

    /// Configuration echo as ordered `key=value` pairs. Keys match the
    /// command-line flags.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let e = &self.enhance;
        let t = &self.train;
        let mut out: Vec<(String, String)> = vec![
            ("run-id".into(), self.run_id.clone()),
            ("seed".into(), self.train.seed.to_string()),
            ("images".into(), self.images.to_string()),
            (
                "ratios".into(),
                format!("{},{},{}", self.ratios.0, self.ratios.1, self.ratios.2),
            ),
            ("stage1".into(), self.stage1.to_string()),
            ("variant".into(), e.variant.to_string()),
            ("mode".into(), e.mode.to_string()),
            ("threshold".into(), e.threshold.to_string()),
            ("clip-low".into(), e.clip_low.to_string()),
            ("clip-high".into(), e.clip_high.to_string()),
            ("dilation-radius".into(), e.dilation_radius.to_string()),
            ("preprocess-channel4".into(), e.preprocess_channel4.to_string()),
            ("epochs".into(), t.epochs.to_string()),
            ("batch-size".into(), t.batch_size.to_string()),
            ("learning-rate".into(), t.learning_rate.to_string()),
            ("patch-radius".into(), t.patch_radius.to_string()),
            ("biou-d".into(), self.metrics.band.to_string()),
            ("eval-threshold".into(), self.metrics.eval_threshold.to_string()),
            ("baseline-only".into(), self.baseline_only.to_string()),
        ];
        if let Some(m) = &self.manifest {
            out.push(("manifest".into(), m.display().to_string()));
        }
        for (k, v) in self.scene.to_pairs() {
            if k != "seed" {
                out.push((format!("scene.{k}"), v));
            }
        }
        out
    }

    /// Apply one `key=value` setting using the same keys as [`Self::pairs`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "run-id" => self.run_id = value.to_string(),
            "run-dir" => self.run_dir = PathBuf::from(value),
            "seed" => {
                let seed = num(key, value)?;
                self.scene.seed = seed;
                self.train.seed = seed;
            }
            "images" => self.images = num(key, value)?,
            "ratios" => self.ratios = parse_ratios(value)?,
            "manifest" => self.manifest = Some(PathBuf::from(value)),
            "stage1" => self.stage1 = value.parse()?,
            "variant" => self.enhance.variant = value.parse()?,
            "mode" => self.enhance.mode = value.parse()?,
            "threshold" => self.enhance.threshold = num(key, value)?,
            "clip-low" => self.enhance.clip_low = num(key, value)?,
            "clip-high" => self.enhance.clip_high = num(key, value)?,
            "dilation-radius" => self.enhance.dilation_radius = num(key, value)?,
            "preprocess-channel4" => self.enhance.preprocess_channel4 = num(key, value)?,
            "epochs" => self.train.epochs = num(key, value)?,
            "batch-size" => self.train.batch_size = num(key, value)?,
            "learning-rate" => self.train.learning_rate = num(key, value)?,
            "patch-radius" => self.train.patch_radius = num(key, value)?,
            "biou-d" => self.metrics.band = value.parse::<BandWidth>()?,
            "eval-threshold" => self.metrics.eval_threshold = num(key, value)?,
            "baseline-only" => self.baseline_only = num(key, value)?,
            _ => match key.strip_prefix("scene.") {
                Some(k) => self.scene.set(k, value)?,
                None => return Err(Error::Config(format!("unknown key {key:?}"))),
            },
        }
        Ok(())
    }

    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<()> {
        settings.iter().try_for_each(|(k, v)| self.set(k, v))
    }
}

pub fn parse_ratios(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("ratios must look like 0.8,0.1,0.1, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let p = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
    Ok((p(0)?, p(1)?, p(2)?))
}

/// Writes `<run_dir>/<command>.log` when dropped through [`RunLog::finish`].
pub struct RunLog {
    command: &'static str,
    run_dir: PathBuf,
    pairs: Vec<(String, String)>,
    started: Instant,
}

impl RunLog {
    pub fn start(command: &'static str, run_dir: &Path, pairs: Vec<(String, String)>) -> Result<Self> {
        std::fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
        log::info!("{command}: run directory {}", run_dir.display());
        Ok(RunLog {
            command,
            run_dir: run_dir.to_path_buf(),
            pairs,
            started: Instant::now(),
        })
    }

    pub fn finish(self) -> Result<PathBuf> {
        let mut text = format!("# command={}\n", self.command);
        text.push_str(&render_key_values(self.pairs.iter().map(|(k, v)| (k.as_str(), v.clone()))));
        text.push_str(&format!("# version={}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("# wall_time_s={:.3}\n", self.started.elapsed().as_secs_f64()));
        let path = self.run_dir.join(format!("{}.log", self.command));
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn selected<'a>(manifest: &'a DatasetManifest, split: Option<Split>) -> Vec<&'a ManifestEntry> {
    manifest
        .entries
        .iter()
        .filter(|e| split.is_none() || e.split == split)
        .collect()
}

fn load_entries(manifest: &DatasetManifest, entries: &[&ManifestEntry]) -> Result<Vec<(Raster, BinaryMask)>> {
    entries
        .iter()
        .map(|e| {
            Ok((
                crate::raster::read_raster(manifest.image_path(e))?,
                crate::raster::read_mask(manifest.mask_path(e))?,
            ))
        })
        .collect()
}

/// Generate a synthetic dataset and assign splits. The split is seeded with
/// the scene seed.
pub fn cmd_synth(scene: &SceneConfig, images: usize, ratios: (f64, f64, f64), out: &Path) -> Result<DatasetManifest> {
    let mut pairs = scene.to_pairs();
    pairs.push(("images".into(), images.to_string()));
    pairs.push(("ratios".into(), format!("{},{},{}", ratios.0, ratios.1, ratios.2)));
    let run = RunLog::start("synth", out, pairs)?;
    let manifest = generate_dataset(scene, images, out)?;
    let manifest = split_dataset(&manifest, ratios, scene.seed)?;
    save_manifest(&manifest, out.join(MANIFEST_FILE))?;
    run.finish()?;
    Ok(manifest)
}

/// Train a patch classifier on one split of a dataset and save the checkpoint.
pub fn cmd_train(manifest_path: &Path, split: Split, cfg: &TrainConfig, checkpoint: &Path) -> Result<PatchClassifier> {
    let run_dir = checkpoint.parent().unwrap_or(Path::new("."));
    let run = RunLog::start(
        "train",
        run_dir,
        vec![
            ("manifest".into(), manifest_path.display().to_string()),
            ("split".into(), split.to_string()),
            ("seed".into(), cfg.seed.to_string()),
            ("epochs".into(), cfg.epochs.to_string()),
            ("batch-size".into(), cfg.batch_size.to_string()),
            ("learning-rate".into(), cfg.learning_rate.to_string()),
            ("patch-radius".into(), cfg.patch_radius.to_string()),
        ],
    )?;
    let manifest = load_manifest(manifest_path)?;
    let data = load_entries(&manifest, &selected(&manifest, Some(split)))?;
    let trained = train(&data, cfg)?;
    trained.model.save(checkpoint)?;
    run.finish()?;
    Ok(trained.model)
}

/// What produces predictions in [`cmd_predict`].
#[derive(Debug, Clone)]
pub enum Predictor {
    Checkpoint(PathBuf),
    Model(PatchClassifier),
    Sobel,
    TruthEdges,
}

fn predict_entry(manifest: &DatasetManifest, entry: &ManifestEntry, predictor: &Predictor) -> Result<ProbMap> {
    match predictor {
        Predictor::Model(model) => predict(model, &crate::raster::read_raster(manifest.image_path(entry))?),
        Predictor::Sobel => Ok(sobel_edges(&crate::raster::read_raster(manifest.image_path(entry))?)),
        Predictor::TruthEdges => Ok(sobel_edges(
            &crate::raster::read_mask(manifest.mask_path(entry))?.to_raster(),
        )),
        Predictor::Checkpoint(_) => unreachable!("resolved before use"),
    }
}

fn write_predictions(
    manifest: &DatasetManifest,
    entries: &[&ManifestEntry],
    predictor: &Predictor,
    out_dir: &Path,
) -> Result<()> {
    let predictor = match predictor {
        Predictor::Checkpoint(p) => Predictor::Model(PatchClassifier::load(p)?),
        other => other.clone(),
    };
    ensure_dir(out_dir)?;
    for e in entries {
        let map = predict_entry(manifest, e, &predictor)?;
        write_prob_map(&map, out_dir.join(format!("{}.dpf", e.id)))?;
    }
    Ok(())
}

/// Write `<id>.dpf` predictions for a split (or every entry when `split` is
/// `None`).
pub fn cmd_predict(manifest_path: &Path, split: Option<Split>, predictor: &Predictor, out_dir: &Path) -> Result<usize> {
    let source = match predictor {
        Predictor::Checkpoint(p) => format!("checkpoint:{}", p.display()),
        Predictor::Model(_) => "model".into(),
        Predictor::Sobel => "sobel".into(),
        Predictor::TruthEdges => "truth-edges".into(),
    };
    let run = RunLog::start(
        "predict",
        out_dir,
        vec![
            ("manifest".into(), manifest_path.display().to_string()),
            ("split".into(), split.map_or("all".into(), |s| s.to_string())),
            ("predictor".into(), source),
        ],
    )?;
    let manifest = load_manifest(manifest_path)?;
    let entries = selected(&manifest, split);
    write_predictions(&manifest, &entries, predictor, out_dir)?;
    run.finish()?;
    Ok(entries.len())
}

fn enhanced_image_name(id: &str, image: &Raster) -> String {
    if image.channels() == 4 {
        format!("images/{id}.dpf")
    } else {
        format!("images/{id}.png")
    }
}

/// Enhance every selected entry with predictions from `pred_dir` and write a
/// new dataset (images, copied masks, manifest with provenance) to `out_dir`.
pub fn enhance_dataset(
    manifest: &DatasetManifest,
    split: Option<Split>,
    pred_dir: &Path,
    cfg: &EnhanceConfig,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    let mut subset = manifest.clone();
    subset.entries = selected(manifest, split).into_iter().cloned().collect();
    let predictions = ingest_predictions(pred_dir, &subset)?;
    for sub in ["images", "masks"] {
        ensure_dir(&out_dir.join(sub))?;
    }
    let mut out = DatasetManifest {
        root: out_dir.to_path_buf(),
        seed: manifest.seed,
        config: manifest.config.clone(),
        provenance: Vec::new(),
        entries: Vec::new(),
    };
    out.config.extend(
        cfg.echo()
            .split(' ')
            .filter_map(|kv| kv.split_once('='))
            .map(|(k, v)| (format!("enhance.{k}"), v.to_string())),
    );
    for entry in &subset.entries {
        let image = crate::raster::read_raster(manifest.image_path(entry))?;
        let mask = crate::raster::read_mask(manifest.mask_path(entry))?;
        let sample = enhance_sample(&image, &predictions[&entry.id], &mask, cfg, (&entry.id, &entry.id))?;
        let image_rel = enhanced_image_name(&entry.id, &sample.image);
        let mask_rel = format!("masks/{}.png", entry.id);
        let stored = if sample.image.channels() == 4 {
            sample.image.to_unit()
        } else {
            sample.image.clone()
        };
        write_raster(&stored, out_dir.join(&image_rel))?;
        write_mask(&sample.mask, out_dir.join(&mask_rel))?;
        out.provenance.push(sample.provenance.line());
        out.entries.push(ManifestEntry {
            id: entry.id.clone(),
            image: image_rel.into(),
            mask: mask_rel.into(),
            split: entry.split,
        });
    }
    save_manifest(&out, out_dir.join(MANIFEST_FILE))?;
    Ok(out)
}

pub fn cmd_enhance(
    manifest_path: &Path,
    split: Option<Split>,
    pred_dir: &Path,
    cfg: &EnhanceConfig,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let mut pairs = vec![
        ("manifest".into(), manifest_path.display().to_string()),
        ("split".into(), split.map_or("all".into(), |s| s.to_string())),
        ("predictions".into(), pred_dir.display().to_string()),
    ];
    pairs.extend(
        cfg.echo()
            .split(' ')
            .filter_map(|kv| kv.split_once('='))
            .map(|(k, v)| (k.replace('_', "-"), v.to_string())),
    );
    let run = RunLog::start("enhance", out_dir, pairs)?;
    let manifest = load_manifest(manifest_path)?;
    let out = enhance_dataset(&manifest, split, pred_dir, cfg, out_dir)?;
    run.finish()?;
    Ok(out)
}

/// Score predictions in `pred_dir` against the masks of one split.
pub fn evaluate_split(
    manifest: &DatasetManifest,
    split: Split,
    pred_dir: &Path,
    cfg: &MetricsConfig,
    labels: (&str, &str),
) -> Result<MetricsReport> {
    let entries = selected(manifest, Some(split));
    let mut missing = Vec::new();
    let mut loaded = Vec::with_capacity(entries.len());
    for e in &entries {
        let path = pred_dir.join(format!("{}.dpf", e.id));
        if !path.is_file() {
            missing.push(e.id.clone());
            continue;
        }
        loaded.push((e.id.as_str(), read_prob_map(&path)?, crate::raster::read_mask(manifest.mask_path(e))?));
    }
    if !missing.is_empty() {
        return Err(Error::MissingSamples(missing));
    }
    if loaded.is_empty() {
        return Err(Error::MissingInput(format!("split {split} is empty")));
    }
    evaluate_pairs(loaded.iter().map(|(id, p, m)| (*id, p, m)), cfg, labels.0, labels.1)
}

pub fn cmd_eval(
    manifest_path: &Path,
    split: Split,
    pred_dir: &Path,
    cfg: &MetricsConfig,
    labels: (&str, &str),
    report_path: &Path,
) -> Result<MetricsReport> {
    let run_dir = report_path.parent().unwrap_or(Path::new("."));
    let run = RunLog::start(
        "eval",
        run_dir,
        vec![
            ("manifest".into(), manifest_path.display().to_string()),
            ("split".into(), split.to_string()),
            ("predictions".into(), pred_dir.display().to_string()),
            ("biou-d".into(), cfg.band.to_string()),
            ("eval-threshold".into(), cfg.eval_threshold.to_string()),
        ],
    )?;
    let manifest = load_manifest(manifest_path)?;
    let report = evaluate_split(&manifest, split, pred_dir, cfg, labels)?;
    report.write(report_path)?;
    run.finish()?;
    Ok(report)
}

pub fn cmd_compare(baseline: &Path, enhanced: &Path, out: Option<&Path>) -> Result<Comparison> {
    let comparison = compare_runs(&MetricsReport::read(baseline)?, &MetricsReport::read(enhanced)?)?;
    if let Some(path) = out {
        std::fs::write(path, comparison.render()).map_err(|e| Error::io(path, e))?;
    }
    Ok(comparison)
}

/// Outcome of [`cmd_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub baseline: MetricsReport,
    pub enhanced: Option<MetricsReport>,
    pub comparison: Option<Comparison>,
    pub run_dir: PathBuf,
}

impl PipelineOutcome {
    /// Rendered comparison, or the baseline row alone for baseline-only runs.
    pub fn table(&self) -> String {
        match &self.comparison {
            Some(c) => c.render(),
            None => format!(
                "{}  {}  IoU {:.4}  BIoU {:.4}\n",
                self.baseline.model, self.baseline.method, self.baseline.mean_iou, self.baseline.mean_biou
            ),
        }
    }
}

fn train_and_score(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    pred_dir: &Path,
    method: &str,
) -> Result<MetricsReport> {
    let train_set = load_entries(manifest, &selected(manifest, Some(Split::Train)))?;
    if train_set.is_empty() {
        return Err(Error::MissingInput("training split is empty".into()));
    }
    let trained = train(&train_set, &cfg.train)?;
    let test = selected(manifest, Some(Split::Test));
    write_predictions(manifest, &test, &Predictor::Model(trained.model), pred_dir)?;
    evaluate_split(manifest, Split::Test, pred_dir, &cfg.metrics, (MODEL_LABEL, method))
}

/// Baseline leg plus (unless `baseline_only`) the enhanced leg:
/// stage-1 predictions → enhancement → second-stage training → evaluation,
/// finishing with the comparison table.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let dir = &cfg.run_dir;
    let run = RunLog::start("pipeline", dir, cfg.pairs())?;

    let manifest = match &cfg.manifest {
        Some(path) => load_manifest(path)?,
        None => {
            let data = dir.join("data");
            let m = generate_dataset(&cfg.scene, cfg.images, &data)?;
            let m = split_dataset(&m, cfg.ratios, cfg.scene.seed)?;
            save_manifest(&m, data.join(MANIFEST_FILE))?;
            m
        }
    };

    let baseline = train_and_score(&manifest, cfg, &dir.join("baseline_predictions"), STANDALONE_LABEL)?;
    baseline.write(dir.join("baseline_metrics.txt"))?;

    if cfg.baseline_only {
        run.finish()?;
        return Ok(PipelineOutcome {
            baseline,
            enhanced: None,
            comparison: None,
            run_dir: dir.clone(),
        });
    }

    let all: Vec<&ManifestEntry> = manifest.entries.iter().collect();
    let stage1_dir = match &cfg.stage1 {
        Stage1::External(d) => d.clone(),
        source => {
            let out = dir.join("stage1");
            let predictor = match source {
                Stage1::Classifier => {
                    let train_set = load_entries(&manifest, &selected(&manifest, Some(Split::Train)))?;
                    Predictor::Model(train(&train_set, &cfg.train)?.model)
                }
                Stage1::Sobel => Predictor::Sobel,
                Stage1::TruthEdges => Predictor::TruthEdges,
                Stage1::External(_) => unreachable!(),
            };
            write_predictions(&manifest, &all, &predictor, &out)?;
            out
        }
    };

    let enhanced_data = enhance_dataset(&manifest, None, &stage1_dir, &cfg.enhance, &dir.join("enhanced"))?;
    let method = cfg.enhance.method_label();
    let enhanced = train_and_score(&enhanced_data, cfg, &dir.join("enhanced_predictions"), &method)?;
    enhanced.write(dir.join("enhanced_metrics.txt"))?;

    let comparison = compare_runs(&baseline, &enhanced)?;
    let table = dir.join("comparison.txt");
    std::fs::write(&table, comparison.render()).map_err(|e| Error::io(&table, e))?;
    run.finish()?;
    Ok(PipelineOutcome {
        baseline,
        enhanced: Some(enhanced),
        comparison: Some(comparison),
        run_dir: dir.clone(),
    })
}
