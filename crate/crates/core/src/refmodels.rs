//! Small stand-in models: a patch-based logistic classifier for both stages,
//! a Sobel edge detector, and loading of prediction maps made elsewhere.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::{read_raster, BinaryMask, Domain, ProbMap, Raster};
use crate::synth::DatasetManifest;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DNW1";

/// Logistic regression over the `(2r+1)²` neighborhood of every channel.
///
/// Weight layout: channel-major, then patch row, then patch column; the bias
/// is the last element. Features are standardized per channel with the
/// training-set mean and standard deviation. Pixels outside the image read
/// as raw 0 before standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchClassifier {
    pub patch_radius: usize,
    pub channels: usize,
    pub weights: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl PatchClassifier {
    pub fn feature_count(patch_radius: usize, channels: usize) -> usize {
        let side = 2 * patch_radius + 1;
        channels * side * side
    }

    /// Zero weights, identity normalization.
    pub fn zeros(patch_radius: usize, channels: usize) -> Self {
        PatchClassifier {
            patch_radius,
            channels,
            weights: vec![0.0; Self::feature_count(patch_radius, channels) + 1],
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn bias(&self) -> f64 {
        *self.weights.last().unwrap()
    }

    fn check(&self) -> Result<()> {
        let expected = Self::feature_count(self.patch_radius, self.channels) + 1;
        if self.weights.len() != expected {
            return Err(Error::Invariant(format!(
                "classifier has {} weights, geometry needs {expected}",
                self.weights.len()
            )));
        }
        if self.mean.len() != self.channels || self.std.len() != self.channels {
            return Err(Error::Invariant("normalization stats do not match channel count".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Invariant("non-finite classifier weight".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = CHECKPOINT_MAGIC.to_vec();
        for v in [self.patch_radius, self.channels, self.weights.len()] {
            bytes.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for w in &self.weights {
            bytes.extend_from_slice(&(*w as f32).to_le_bytes());
        }
        for (m, s) in self.mean.iter().zip(&self.std) {
            bytes.extend_from_slice(&m.to_le_bytes());
            bytes.extend_from_slice(&s.to_le_bytes());
        }
        File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| Error::io(path, e))
    }

    /// Weights come back rounded to `f32`; statistics are stored as `f64`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let corrupt = |why: &str| Error::format(path, format!("corrupt checkpoint: {why}"));
        if bytes.len() < 16 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(corrupt("missing DNW1 magic"));
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (patch_radius, channels, count) = (u32_at(4), u32_at(8), u32_at(12));
        let needed = 16 + count * 4 + channels * 16;
        if bytes.len() != needed {
            return Err(corrupt("length does not match header"));
        }
        let weights = bytes[16..16 + count * 4]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        let f64_at = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let stats_at = 16 + count * 4;
        let mean = (0..channels).map(|c| f64_at(stats_at + 16 * c)).collect();
        let std = (0..channels).map(|c| f64_at(stats_at + 16 * c + 8)).collect();
        let model = PatchClassifier {
            patch_radius,
            channels,
            weights,
            mean,
            std,
        };
        model.check().map_err(|e| corrupt(&e.to_string()))?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Images per gradient step; every pixel of each image contributes.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub patch_radius: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 8,
            learning_rate: 1e-4,
            seed: 0,
            patch_radius: 2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// An image standardized and padded for patch extraction, with its labels.
struct Prepared {
    width: usize,
    height: usize,
    stride: usize,
    planes: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

fn prepare(model: &PatchClassifier, image: &Raster, mask: Option<&BinaryMask>) -> Result<Prepared> {
    if image.channels() != model.channels {
        return Err(Error::ChannelMismatch {
            expected: model.channels,
            actual: image.channels(),
        });
    }
    let (w, h) = image.dims();
    let r = model.patch_radius;
    let stride = w + 2 * r;
    let planes = (0..model.channels)
        .map(|c| {
            let (m, s) = (model.mean[c], model.std[c]);
            let mut plane = vec![(0.0 - m) / s; stride * (h + 2 * r)];
            let src = image.unit_plane(c);
            for y in 0..h {
                for x in 0..w {
                    plane[(y + r) * stride + x + r] = (src[y * w + x] - m) / s;
                }
            }
            plane
        })
        .collect();
    let labels = match mask {
        Some(m) => {
            if m.dims() != image.dims() {
                return Err(Error::DimensionMismatch {
                    expected: image.dims(),
                    actual: m.dims(),
                });
            }
            m.bits().iter().map(|&b| b as u8 as f64).collect()
        }
        None => Vec::new(),
    };
    Ok(Prepared {
        width: w,
        height: h,
        stride,
        planes,
        labels,
    })
}

fn logit(model: &PatchClassifier, p: &Prepared, x: usize, y: usize) -> f64 {
    let side = 2 * model.patch_radius + 1;
    let mut z = model.bias();
    let mut k = 0;
    for plane in &p.planes {
        for dy in 0..side {
            let row = &plane[(y + dy) * p.stride + x..(y + dy) * p.stride + x + side];
            for &v in row {
                z += model.weights[k] * v;
                k += 1;
            }
        }
    }
    z
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy from a logit, numerically stable.
fn cross_entropy(z: f64, label: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - label * z
}

/// Accumulates summed loss and gradient over `batch`; returns the pixel count.
fn accumulate(model: &PatchClassifier, batch: &[&Prepared], grad: &mut [f64], loss: &mut f64) -> usize {
    let side = 2 * model.patch_radius + 1;
    let bias_at = grad.len() - 1;
    let mut n = 0;
    for p in batch {
        for y in 0..p.height {
            for x in 0..p.width {
                let z = logit(model, p, x, y);
                let label = p.labels[y * p.width + x];
                *loss += cross_entropy(z, label);
                let err = sigmoid(z) - label;
                let mut k = 0;
                for plane in &p.planes {
                    for dy in 0..side {
                        let row = &plane[(y + dy) * p.stride + x..(y + dy) * p.stride + x + side];
                        for &v in row {
                            grad[k] += err * v;
                            k += 1;
                        }
                    }
                }
                grad[bias_at] += err;
                n += 1;
            }
        }
    }
    n
}

fn prepare_batch(model: &PatchClassifier, batch: &[(Raster, BinaryMask)]) -> Result<Vec<Prepared>> {
    model.check()?;
    if batch.is_empty() {
        return Err(Error::Invariant("empty batch".into()));
    }
    batch.iter().map(|(img, mask)| prepare(model, img, Some(mask))).collect()
}

/// Mean cross-entropy over every pixel of the batch and its exact gradient
/// with respect to the weights (bias last).
pub fn loss_and_gradient(model: &PatchClassifier, batch: &[(Raster, BinaryMask)]) -> Result<(f64, Vec<f64>)> {
    let prepared = prepare_batch(model, batch)?;
    let refs: Vec<&Prepared> = prepared.iter().collect();
    let mut grad = vec![0.0; model.weights.len()];
    let mut loss = 0.0;
    let n = accumulate(model, &refs, &mut grad, &mut loss) as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

pub fn loss_gradient(model: &PatchClassifier, batch: &[(Raster, BinaryMask)]) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(model, batch)?.1)
}

/// Mean cross-entropy only.
pub fn loss(model: &PatchClassifier, batch: &[(Raster, BinaryMask)]) -> Result<f64> {
    let prepared = prepare_batch(model, batch)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for p in &prepared {
        for y in 0..p.height {
            for x in 0..p.width {
                total += cross_entropy(logit(model, p, x, y), p.labels[y * p.width + x]);
                n += 1;
            }
        }
    }
    Ok(total / n as f64)
}

/// Per-channel mean and standard deviation of unit-domain samples.
fn channel_stats(dataset: &[(Raster, BinaryMask)], channels: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; channels];
    let mut sq = vec![0.0; channels];
    let mut n = 0.0;
    for (img, _) in dataset {
        for c in 0..channels {
            for v in img.unit_plane(c) {
                sum[c] += v;
                sq[c] += v * v;
            }
        }
        n += img.plane_len() as f64;
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            let var = (q / n - m * m).max(0.0);
            if var > 1e-12 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

/// Result of [`train`]: the model and the mean loss seen during each epoch.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: PatchClassifier,
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch gradient descent on per-pixel cross-entropy.
///
/// Deterministic for a given seed: initialization and the per-epoch shuffle
/// both come from one seeded stream.
pub fn train(dataset: &[(Raster, BinaryMask)], cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    let first = dataset
        .first()
        .ok_or_else(|| Error::MissingInput("training set is empty".into()))?;
    let channels = first.0.channels();
    if let Some((img, _)) = dataset.iter().find(|(img, _)| img.channels() != channels) {
        return Err(Error::ChannelMismatch {
            expected: channels,
            actual: img.channels(),
        });
    }
    let positives: usize = dataset.iter().map(|(_, m)| m.count()).sum();
    let total: usize = dataset.iter().map(|(_, m)| m.bits().len()).sum();
    if positives == 0 || positives == total {
        log::warn!("training set contains a single class ({positives} of {total} pixels positive)");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mean, std) = channel_stats(dataset, channels);
    let n_features = PatchClassifier::feature_count(cfg.patch_radius, channels);
    let mut weights: Vec<f64> = (0..n_features).map(|_| rng.random_range(-0.01..=0.01)).collect();
    weights.push(0.0);
    let mut model = PatchClassifier {
        patch_radius: cfg.patch_radius,
        channels,
        weights,
        mean,
        std,
    };

    let prepared = dataset
        .iter()
        .map(|(img, mask)| prepare(&model, img, Some(mask)))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut grad = vec![0.0; model.weights.len()];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut epoch_loss, mut epoch_pixels) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Prepared> = chunk.iter().map(|&i| &prepared[i]).collect();
            grad.fill(0.0);
            let n = accumulate(&model, &batch, &mut grad, &mut epoch_loss);
            epoch_pixels += n;
            let step = cfg.learning_rate / n as f64;
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= step * g;
            }
        }
        let mean_loss = epoch_loss / epoch_pixels as f64;
        log::debug!("epoch {epoch}: mean loss {mean_loss:.6}");
        epoch_losses.push(mean_loss);
    }
    model.check()?;
    Ok(Trained { model, epoch_losses })
}

/// Per-pixel foreground probability.
pub fn predict(model: &PatchClassifier, image: &Raster) -> Result<ProbMap> {
    model.check()?;
    let p = prepare(model, image, None)?;
    let mut values = Vec::with_capacity(p.width * p.height);
    for y in 0..p.height {
        for x in 0..p.width {
            values.push(sigmoid(logit(model, &p, x, y)) as f32);
        }
    }
    ProbMap::new(p.width, p.height, values)
}

/// Luminance used by the edge detector: `299 R + 587 G + 114 B` on the
/// 8-bit scale (integers for U8 input, so constant offsets cancel exactly).
fn luminance(image: &Raster) -> Vec<f64> {
    let n = image.plane_len();
    let scale = match image.domain() {
        Domain::U8 => 1.0,
        Domain::UnitF => 255.0,
    };
    let plane = |c: usize| -> Vec<f64> {
        match image.as_u8() {
            Some(d) => d[c * n..(c + 1) * n].iter().map(|&v| v as f64).collect(),
            None => image.unit_plane(c).iter().map(|v| v * scale).collect(),
        }
    };
    if image.channels() < 3 {
        return plane(0).iter().map(|v| v * 1000.0).collect();
    }
    let (r, g, b) = (plane(0), plane(1), plane(2));
    (0..n).map(|i| 299.0 * r[i] + 587.0 * g[i] + 114.0 * b[i]).collect()
}

/// Sobel gradient magnitude, replicate-padded, divided by the image maximum.
/// A flat image maps to all zeros.
pub fn sobel_edges(image: &Raster) -> ProbMap {
    let (w, h) = image.dims();
    let lum = luminance(image);
    let at = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        lum[y * w + x]
    };
    let mut mag = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            mag.push((gx * gx + gy * gy).sqrt());
        }
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    let values = if max > 0.0 {
        mag.iter().map(|m| (m / max) as f32).collect()
    } else {
        vec![0.0; w * h]
    };
    ProbMap::new(w, h, values).expect("normalized magnitudes lie in [0, 1]")
}

/// Load `<id>.dpf` or `<id>.png` for every manifest entry and check each map
/// against the size of the entry's image.
pub fn ingest_predictions(dir: &Path, manifest: &DatasetManifest) -> Result<BTreeMap<String, ProbMap>> {
    let mut maps = BTreeMap::new();
    let mut missing = Vec::new();
    let mut mismatched = Vec::new();
    for entry in &manifest.entries {
        let dpf = dir.join(format!("{}.dpf", entry.id));
        let png = dir.join(format!("{}.png", entry.id));
        let path = if dpf.exists() {
            dpf
        } else if png.exists() {
            png
        } else {
            missing.push(entry.id.clone());
            continue;
        };
        let map = read_raster(&path)?.to_prob_map()?;
        let image = read_raster(manifest.image_path(entry))?;
        if map.dims() != image.dims() {
            mismatched.push(format!(
                "{} ({}x{} vs image {}x{})",
                entry.id,
                map.width(),
                map.height(),
                image.width(),
                image.height()
            ));
            continue;
        }
        maps.insert(entry.id.clone(), map);
    }
    if !missing.is_empty() {
        return Err(Error::MissingSamples(missing));
    }
    if !mismatched.is_empty() {
        return Err(Error::format(
            dir,
            format!("prediction size differs from image: {}", mismatched.join(", ")),
        ));
    }
    Ok(maps)
}
