//! IoU and Boundary IoU, per image and over a dataset, plus the side-by-side
//! comparison of a baseline run against an enhanced run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::enhance::threshold_probs;
use crate::error::{Error, Result};
use crate::morphology::boundary_band;
use crate::raster::{read_mask, read_raster, BinaryMask, ProbMap};

/// Width of the boundary band used by Boundary IoU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandWidth {
    /// Fraction of the image diagonal, rounded, at least one pixel.
    Fraction(f64),
    Pixels(usize),
}

impl BandWidth {
    pub fn resolve(self, width: usize, height: usize) -> usize {
        match self {
            BandWidth::Pixels(d) => d.max(1),
            BandWidth::Fraction(f) => {
                let diag = ((width * width + height * height) as f64).sqrt();
                ((f * diag).round() as usize).max(1)
            }
        }
    }
}

impl fmt::Display for BandWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandWidth::Fraction(x) => write!(f, "fraction:{x}"),
            BandWidth::Pixels(d) => write!(f, "pixels:{d}"),
        }
    }
}

impl FromStr for BandWidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad band width {s:?} (fraction:<f> | pixels:<n>)"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "fraction" => Ok(BandWidth::Fraction(value.parse().map_err(|_| bad())?)),
            "pixels" => Ok(BandWidth::Pixels(value.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub band: BandWidth,
    /// Probability predictions are binarized at `>= eval_threshold`.
    pub eval_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            band: BandWidth::Fraction(0.02),
            eval_threshold: 0.5,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        match self.band {
            BandWidth::Fraction(f) if !(f > 0.0 && f < 1.0) => {
                return Err(Error::Config(format!("band fraction must lie in (0, 1), got {f}")))
            }
            BandWidth::Pixels(0) => {
                return Err(Error::Config("band width must be at least 1 pixel".into()))
            }
            _ => {}
        }
        if !(self.eval_threshold > 0.0 && self.eval_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "eval threshold must lie in (0, 1], got {}",
                self.eval_threshold
            )));
        }
        Ok(())
    }
}

fn check_dims(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: b.dims(),
            actual: a.dims(),
        });
    }
    Ok(())
}

fn ratio(pred: &BinaryMask, truth: &BinaryMask) -> (f64, bool) {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        inter += (p && t) as usize;
        union += (p || t) as usize;
    }
    if union == 0 {
        (1.0, true)
    } else {
        (inter as f64 / union as f64, false)
    }
}

/// `|pred ∧ truth| / |pred ∨ truth|`, with two empty masks scoring 1.
pub fn iou(pred: &BinaryMask, truth: &BinaryMask) -> Result<f64> {
    check_dims(pred, truth)?;
    Ok(ratio(pred, truth).0)
}

/// IoU of the two boundary bands at the width resolved from `cfg`.
pub fn boundary_iou(pred: &BinaryMask, truth: &BinaryMask, cfg: &MetricsConfig) -> Result<f64> {
    check_dims(pred, truth)?;
    let d = cfg.band.resolve(pred.width(), pred.height());
    Ok(ratio(&boundary_band(pred, d), &boundary_band(truth, d)).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMetrics {
    pub id: String,
    pub iou: f64,
    pub biou: f64,
    /// Either score came from the empty-versus-empty convention.
    pub vacuous: bool,
}

/// Score one prediction against its ground truth.
pub fn score_image(id: &str, pred: &BinaryMask, truth: &BinaryMask, cfg: &MetricsConfig) -> Result<ImageMetrics> {
    check_dims(pred, truth)?;
    let d = cfg.band.resolve(pred.width(), pred.height());
    let (iou, empty) = ratio(pred, truth);
    let (biou, band_empty) = ratio(&boundary_band(pred, d), &boundary_band(truth, d));
    Ok(ImageMetrics {
        id: id.to_string(),
        iou,
        biou,
        vacuous: empty || band_empty,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model: String,
    pub method: String,
    pub config: MetricsConfig,
    /// Sorted by id.
    pub per_image: Vec<ImageMetrics>,
    pub mean_iou: f64,
    pub mean_biou: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl MetricsReport {
    /// Sorts the entries by id and computes the means in that order.
    pub fn new(
        model: impl Into<String>,
        method: impl Into<String>,
        config: MetricsConfig,
        mut per_image: Vec<ImageMetrics>,
    ) -> Self {
        per_image.sort_by(|a, b| a.id.cmp(&b.id));
        let mean_iou = mean(per_image.iter().map(|m| m.iou));
        let mean_biou = mean(per_image.iter().map(|m| m.biou));
        MetricsReport {
            model: model.into(),
            method: method.into(),
            config,
            per_image,
            mean_iou,
            mean_biou,
        }
    }

    /// Header of `# key=value` lines followed by a tab-separated table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# denise metrics report\n");
        let _ = writeln!(s, "# model={}", self.model);
        let _ = writeln!(s, "# method={}", self.method);
        let _ = writeln!(s, "# biou_d={}", self.config.band);
        let _ = writeln!(s, "# eval_threshold={}", self.config.eval_threshold);
        let _ = writeln!(s, "# count={}", self.per_image.len());
        let _ = writeln!(s, "# mean_iou={}", self.mean_iou);
        let _ = writeln!(s, "# mean_biou={}", self.mean_biou);
        s.push_str("id\tiou\tbiou\tvacuous\n");
        for m in &self.per_image {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", m.id, m.iou, m.biou, m.vacuous as u8);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,iou,biou,vacuous\n");
        for m in &self.per_image {
            let _ = writeln!(s, "{},{},{},{}", m.id, m.iou, m.biou, m.vacuous as u8);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |why: String| Error::format("<metrics report>", why);
        let mut header = BTreeMap::new();
        let mut per_image = Vec::new();
        let mut seen_columns = false;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
            } else if line.starts_with("id\t") {
                seen_columns = true;
            } else if !line.trim().is_empty() {
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 4 {
                    return Err(bad(format!("malformed row {line:?}")));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number in {line:?}")));
                per_image.push(ImageMetrics {
                    id: f[0].to_string(),
                    iou: num(f[1])?,
                    biou: num(f[2])?,
                    vacuous: f[3] == "1",
                });
            }
        }
        if !seen_columns {
            return Err(bad("missing column header".into()));
        }
        let get = |k: &str| header.get(k).cloned().ok_or_else(|| bad(format!("missing header {k}")));
        let config = MetricsConfig {
            band: get("biou_d")?.parse()?,
            eval_threshold: get("eval_threshold")?
                .parse()
                .map_err(|_| bad("bad eval_threshold".into()))?,
        };
        Ok(MetricsReport::new(get("model")?, get("method")?, config, per_image))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))?;
        let csv = path.with_extension("csv");
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Format { reason, .. } => Error::format(path, reason),
            other => other,
        })
    }
}

/// Binarize a prediction at the evaluation threshold.
pub fn binarize(pred: &ProbMap, cfg: &MetricsConfig) -> BinaryMask {
    threshold_probs(pred, cfg.eval_threshold)
}

/// Score `(id, prediction, truth)` triples into a report.
pub fn evaluate_pairs<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a ProbMap, &'a BinaryMask)>,
    cfg: &MetricsConfig,
    model: &str,
    method: &str,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let per_image = pairs
        .into_iter()
        .map(|(id, pred, truth)| score_image(id, &binarize(pred, cfg), truth, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::new(model, method, cfg.clone(), per_image))
}

fn raster_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !matches!(ext, "png" | "dpf") {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path.clone());
        }
    }
    Ok(out)
}

/// Score every prediction file in `pred_dir` against the same-named mask in
/// `truth_dir`. Files are matched by stem; any file without a partner is an
/// error.
pub fn evaluate_dataset(pred_dir: &Path, truth_dir: &Path, cfg: &MetricsConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let preds = raster_files(pred_dir)?;
    let truths = raster_files(truth_dir)?;
    let pred_ids: BTreeSet<&String> = preds.keys().collect();
    let truth_ids: BTreeSet<&String> = truths.keys().collect();
    if pred_ids.intersection(&truth_ids).next().is_none() {
        return Err(Error::MissingInput(format!(
            "no matching file names between {} and {}",
            pred_dir.display(),
            truth_dir.display()
        )));
    }
    let unmatched: Vec<String> = pred_ids
        .symmetric_difference(&truth_ids)
        .map(|s| s.to_string())
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::MissingSamples(unmatched));
    }
    let mut per_image = Vec::with_capacity(preds.len());
    for (id, pred_path) in &preds {
        let pred = read_raster(pred_path)?.to_prob_map()?;
        let truth = read_mask(&truths[id])?;
        per_image.push(score_image(id, &binarize(&pred, cfg), &truth, cfg)?);
    }
    Ok(MetricsReport::new("external", "evaluated", cfg.clone(), per_image))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Baseline,
    Enhanced,
    Tie,
}

impl fmt::Display for Better {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Better::Baseline => "baseline",
            Better::Enhanced => "enhanced",
            Better::Tie => "tie",
        })
    }
}

fn better(baseline: f64, enhanced: f64) -> Better {
    if enhanced > baseline {
        Better::Enhanced
    } else if baseline > enhanced {
        Better::Baseline
    } else {
        Better::Tie
    }
}

/// Baseline vs enhanced, laid out like a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: (String, String, f64, f64),
    pub enhanced: (String, String, f64, f64),
    /// `enhanced - baseline`.
    pub delta_iou: f64,
    pub delta_biou: f64,
    pub better_iou: Better,
    pub better_biou: Better,
}

pub fn compare_runs(baseline: &MetricsReport, enhanced: &MetricsReport) -> Result<Comparison> {
    let ids = |r: &MetricsReport| r.per_image.iter().map(|m| m.id.clone()).collect::<BTreeSet<_>>();
    let (a, b) = (ids(baseline), ids(enhanced));
    if a != b {
        let diff: Vec<String> = a.symmetric_difference(&b).cloned().collect();
        return Err(Error::Invariant(format!(
            "compared runs cover different samples: {}",
            diff.join(", ")
        )));
    }
    let row = |r: &MetricsReport| (r.model.clone(), r.method.clone(), r.mean_iou, r.mean_biou);
    Ok(Comparison {
        baseline: row(baseline),
        enhanced: row(enhanced),
        delta_iou: enhanced.mean_iou - baseline.mean_iou,
        delta_biou: enhanced.mean_biou - baseline.mean_biou,
        better_iou: better(baseline.mean_iou, enhanced.mean_iou),
        better_biou: better(baseline.mean_biou, enhanced.mean_biou),
    })
}

impl Comparison {
    /// Plain-text table: Model, Method, IoU, BIoU, then deltas and winners.
    pub fn render(&self) -> String {
        let rows = [&self.baseline, &self.enhanced];
        let mw = rows.iter().map(|r| r.0.len()).max().unwrap().max("Model".len());
        let tw = rows.iter().map(|r| r.1.len()).max().unwrap().max("Method".len());
        let lead = mw + 2 + tw;
        let mut s = String::new();
        let _ = writeln!(s, "{:<mw$}  {:<tw$}  {:>7}  {:>8}", "Model", "Method", "IoU", "BIoU");
        for r in rows {
            let _ = writeln!(s, "{:<mw$}  {:<tw$}  {:>7.4}  {:>8.4}", r.0, r.1, r.2, r.3);
        }
        let _ = writeln!(
            s,
            "{:<lead$}  {:>+7.4}  {:>+8.4}",
            "Delta (enhanced - baseline)", self.delta_iou, self.delta_biou
        );
        let _ = writeln!(
            s,
            "{:<lead$}  {:>7}  {:>8}",
            "Better", self.better_iou.to_string(), self.better_biou.to_string()
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(w: usize, h: usize, x0: usize, y0: usize, bw: usize, bh: usize) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                m.set(x, y, true);
            }
        }
        m
    }

    #[test]
    fn iou_examples() {
        let a = block(4, 4, 0, 0, 2, 2);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &block(4, 4, 2, 2, 2, 2)).unwrap(), 0.0);
        // Overlap 2, union 6.
        assert_eq!(iou(&a, &block(4, 4, 1, 0, 2, 2)).unwrap(), 2.0 / 6.0);
        let e = BinaryMask::new(4, 4);
        assert_eq!(iou(&e, &e).unwrap(), 1.0);
        assert!(iou(&a, &BinaryMask::new(3, 4)).is_err());
    }

    #[test]
    fn band_width_resolution() {
        assert_eq!(BandWidth::Fraction(0.02).resolve(64, 64), 2);
        assert_eq!(BandWidth::Fraction(0.02).resolve(10, 10), 1);
        assert_eq!(BandWidth::Fraction(0.02).resolve(512, 512), 14);
        assert_eq!(BandWidth::Pixels(3).resolve(8, 8), 3);
        assert_eq!("fraction:0.02".parse::<BandWidth>().unwrap(), BandWidth::Fraction(0.02));
        assert_eq!("pixels:5".parse::<BandWidth>().unwrap(), BandWidth::Pixels(5));
        assert!("5".parse::<BandWidth>().is_err());
        let bad = MetricsConfig {
            band: BandWidth::Fraction(1.5),
            eval_threshold: 0.5,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn boundary_iou_identity_and_saturation() {
        let cfg = MetricsConfig::default();
        let a = block(16, 16, 2, 3, 9, 7);
        let b = block(16, 16, 4, 4, 9, 9);
        assert_eq!(boundary_iou(&a, &a, &cfg).unwrap(), 1.0);
        let wide = MetricsConfig {
            band: BandWidth::Pixels(23),
            ..cfg
        };
        assert_eq!(boundary_iou(&a, &b, &wide).unwrap(), iou(&a, &b).unwrap());
    }

    #[test]
    fn table_delta_from_published_rows() {
        let cfg = MetricsConfig::default();
        let one = |v: f64, b: f64, method: &str| {
            MetricsReport::new(
                "U-Net",
                method,
                cfg.clone(),
                vec![ImageMetrics { id: "a".into(), iou: v, biou: b, vacuous: false }],
            )
        };
        let base = one(0.7657, 0.6279, "Standalone");
        let enh = one(0.7742, 0.6445, "Edge-DeNISE (3-channels)");
        let c = compare_runs(&base, &enh).unwrap();
        assert!((c.delta_iou - 0.0085).abs() < 1e-12);
        assert_eq!(c.better_iou, Better::Enhanced);
        let table = c.render();
        assert!(table.contains("+0.0085"), "{table}");
        assert!(table.contains("U-Net  Standalone"));
        let rev = compare_runs(&enh, &base).unwrap();
        assert_eq!(rev.delta_iou, -c.delta_iou);
        assert_eq!(rev.delta_biou, -c.delta_biou);
        let same = compare_runs(&base, &base).unwrap();
        assert_eq!((same.delta_iou, same.delta_biou), (0.0, 0.0));
        assert_eq!(same.better_biou, Better::Tie);
    }

    #[test]
    fn compare_rejects_different_samples() {
        let cfg = MetricsConfig::default();
        let r = |id: &str| {
            MetricsReport::new("m", "x", cfg.clone(), vec![ImageMetrics { id: id.into(), iou: 1.0, biou: 1.0, vacuous: false }])
        };
        assert!(compare_runs(&r("a"), &r("b")).is_err());
    }

    #[test]
    fn report_text_round_trip() {
        let report = MetricsReport::new(
            "PatchClassifier",
            "Standalone",
            MetricsConfig::default(),
            vec![
                ImageMetrics { id: "b".into(), iou: 0.1 + 0.2, biou: 1.0 / 3.0, vacuous: false },
                ImageMetrics { id: "a".into(), iou: 1.0, biou: 1.0, vacuous: true },
            ],
        );
        assert_eq!(report.per_image[0].id, "a");
        assert_eq!(report.mean_iou, (1.0 + (0.1 + 0.2)) / 2.0);
        assert_eq!(MetricsReport::parse(&report.to_text()).unwrap(), report);
        assert!(report.to_csv().starts_with("id,iou,biou,vacuous\na,1,1,1\n"));
    }
}
