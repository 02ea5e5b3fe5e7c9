//! Fusing first-stage predictions into training images.
//!
//! Two fusion modes exist. [`Mode::Merge3`] builds a multiplier map in
//! `{clip_low, clip_high}` from the thresholded prediction (dilated for the
//! segmentation variant) and multiplies it into every channel, so predicted
//! regions keep their brightness and everything else is dimmed.
//! [`Mode::Concat4`] appends the raw prediction as a fourth channel.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::morphology::{dilate, StructuringElement};
use crate::raster::{round_u8, BinaryMask, Domain, ProbMap, Raster};

/// Which kind of first-stage model produced the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Segmentation probabilities; merged maps are dilated.
    Seg,
    /// Edge strengths; merged maps are not dilated.
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Merge3,
    Concat4,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Seg => "seg",
            Variant::Edge => "edge",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seg" => Ok(Variant::Seg),
            "edge" => Ok(Variant::Edge),
            other => Err(Error::Config(format!("unknown variant {other:?} (seg|edge)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Merge3 => "merge3",
            Mode::Concat4 => "concat4",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merge3" => Ok(Mode::Merge3),
            "concat4" => Ok(Mode::Concat4),
            other => Err(Error::Config(format!("unknown mode {other:?} (merge3|concat4)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceConfig {
    pub variant: Variant,
    pub mode: Mode,
    /// Predictions `>= threshold` count as positive.
    pub threshold: f64,
    pub clip_low: f64,
    pub clip_high: f64,
    /// Square dilation radius applied by the segmentation variant. 0 disables it.
    pub dilation_radius: usize,
    /// Feed the thresholded / dilated / clipped map as channel 4 instead of
    /// the raw prediction.
    pub preprocess_channel4: bool,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            variant: Variant::Seg,
            mode: Mode::Merge3,
            threshold: 0.5,
            clip_low: 0.5,
            clip_high: 1.0,
            dilation_radius: 15,
            preprocess_channel4: false,
        }
    }
}

impl EnhanceConfig {
    pub fn new(variant: Variant, mode: Mode) -> Self {
        EnhanceConfig {
            variant,
            mode,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1], got {}",
                self.threshold
            )));
        }
        if !(0.0 <= self.clip_low && self.clip_low < self.clip_high && self.clip_high <= 1.0) {
            return Err(Error::Config(format!(
                "clip range must satisfy 0 <= low < high <= 1, got [{}, {}]",
                self.clip_low, self.clip_high
            )));
        }
        Ok(())
    }

    /// Human-readable method label, e.g. `Edge-DeNISE (3-channels)`.
    pub fn method_label(&self) -> String {
        let variant = match self.variant {
            Variant::Seg => "Seg-DeNISE",
            Variant::Edge => "Edge-DeNISE",
        };
        let channels = match self.mode {
            Mode::Merge3 => 3,
            Mode::Concat4 => 4,
        };
        format!("{variant} ({channels}-channels)")
    }

    /// `key=value` pairs, space separated, in a fixed order.
    pub fn echo(&self) -> String {
        format!(
            "variant={} mode={} threshold={} clip_low={} clip_high={} dilation_radius={} preprocess_channel4={}",
            self.variant,
            self.mode,
            self.threshold,
            self.clip_low,
            self.clip_high,
            self.dilation_radius,
            self.preprocess_channel4
        )
    }
}

/// Where an enhanced sample came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub sample_id: String,
    pub prediction_id: String,
    pub config: EnhanceConfig,
}

impl Provenance {
    /// One-line manifest record.
    pub fn line(&self) -> String {
        format!(
            "id={} prediction={} {}",
            self.sample_id,
            self.prediction_id,
            self.config.echo()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedSample {
    pub image: Raster,
    pub mask: BinaryMask,
    pub provenance: Provenance,
}

/// `1` where `prob >= t`.
pub fn threshold_probs(probs: &ProbMap, t: f64) -> BinaryMask {
    let bits = probs.values().iter().map(|&p| p as f64 >= t).collect();
    BinaryMask::from_bits(probs.width(), probs.height(), bits).expect("shape preserved")
}

fn clip_binary(mask: &BinaryMask, cfg: &EnhanceConfig) -> ProbMap {
    let clip = |x: f64| x.min(cfg.clip_high).max(cfg.clip_low) as f32;
    let (lo, hi) = (clip(0.0), clip(1.0));
    let values = mask.bits().iter().map(|&b| if b { hi } else { lo }).collect();
    ProbMap::new(mask.width(), mask.height(), values).expect("clip range inside [0, 1]")
}

fn build_multiplier(probs: &ProbMap, cfg: &EnhanceConfig, radius: usize) -> ProbMap {
    let mut mask = threshold_probs(probs, cfg.threshold);
    if radius > 0 {
        mask = dilate(&mask, StructuringElement::Square(radius));
    }
    clip_binary(&mask, cfg)
}

/// Threshold, dilate by `cfg.dilation_radius`, clip.
pub fn build_multiplier_seg(probs: &ProbMap, cfg: &EnhanceConfig) -> ProbMap {
    build_multiplier(probs, cfg, cfg.dilation_radius)
}

/// Threshold, clip. No dilation.
pub fn build_multiplier_edge(grads: &ProbMap, cfg: &EnhanceConfig) -> ProbMap {
    build_multiplier(grads, cfg, 0)
}

fn multiplier_for(prediction: &ProbMap, cfg: &EnhanceConfig) -> ProbMap {
    match cfg.variant {
        Variant::Seg => build_multiplier_seg(prediction, cfg),
        Variant::Edge => build_multiplier_edge(prediction, cfg),
    }
}

fn check_dims(image: &Raster, map: &ProbMap) -> Result<()> {
    if image.dims() != map.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            actual: map.dims(),
        });
    }
    if image.channels() != 3 {
        return Err(Error::ChannelMismatch {
            expected: 3,
            actual: image.channels(),
        });
    }
    Ok(())
}

/// Multiply every channel by the per-pixel multiplier; output is U8.
///
/// Each sample becomes `round_u8(unit(v) * m)`, so `m = 1` leaves U8 input
/// bit-identical.
pub fn merge3(image: &Raster, multiplier: &ProbMap) -> Result<Raster> {
    check_dims(image, multiplier)?;
    let n = image.plane_len();
    let m = multiplier.values();
    let mut out = Vec::with_capacity(3 * n);
    for c in 0..3 {
        out.extend(
            image
                .unit_plane(c)
                .iter()
                .zip(m)
                .map(|(&v, &k)| round_u8(v * k as f64)),
        );
    }
    Raster::from_u8(image.width(), image.height(), 3, out)
}

/// Append `probs` as a fourth channel in the image's own domain.
pub fn concat4(image: &Raster, probs: &ProbMap) -> Result<Raster> {
    check_dims(image, probs)?;
    let (w, h) = image.dims();
    match image.domain() {
        Domain::U8 => {
            let mut data = image.as_u8().unwrap().to_vec();
            data.extend(probs.values().iter().map(|&p| round_u8(p as f64)));
            Raster::from_u8(w, h, 4, data)
        }
        Domain::UnitF => {
            let mut data = image.as_unit().unwrap().to_vec();
            data.extend_from_slice(probs.values());
            Raster::from_unit(w, h, 4, data)
        }
    }
}

/// Produce the enhanced training sample for one image.
pub fn enhance_sample(
    image: &Raster,
    prediction: &ProbMap,
    mask: &BinaryMask,
    cfg: &EnhanceConfig,
    ids: (&str, &str),
) -> Result<EnhancedSample> {
    cfg.validate()?;
    if mask.dims() != image.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            actual: mask.dims(),
        });
    }
    let image = match cfg.mode {
        Mode::Merge3 => merge3(image, &multiplier_for(prediction, cfg))?,
        Mode::Concat4 if cfg.preprocess_channel4 => {
            concat4(image, &multiplier_for(prediction, cfg))?
        }
        Mode::Concat4 => concat4(image, prediction)?,
    };
    Ok(EnhancedSample {
        image,
        mask: mask.clone(),
        provenance: Provenance {
            sample_id: ids.0.to_string(),
            prediction_id: ids.1.to_string(),
            config: cfg.clone(),
        },
    })
}
