//! Raster containers, value-domain conversion, and PNG / DPF file I/O.
//!
//! All rasters are stored planar (channel-major): channel `c`, row `y`,
//! column `x` lives at `c * width * height + y * width + x`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Magic bytes opening a planar-float raster file.
pub const DPF_MAGIC: &[u8; 4] = b"DPF1";

/// Value domain of a [`Raster`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Integers in `0..=255`.
    U8,
    /// Finite floats in `[0, 1]`.
    UnitF,
}

#[derive(Debug, Clone, PartialEq)]
enum Samples {
    U8(Vec<u8>),
    UnitF(Vec<f32>),
}

/// An H×W×C image with an explicit value domain and planar layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    samples: Samples,
}

fn check_shape(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "empty raster {width}x{height}"
        )));
    }
    if !matches!(channels, 1 | 3 | 4) {
        return Err(Error::InvalidRaster(format!(
            "unsupported channel count {channels}"
        )));
    }
    if len != width * height * channels {
        return Err(Error::InvalidRaster(format!(
            "buffer holds {len} samples, {width}x{height}x{channels} needs {}",
            width * height * channels
        )));
    }
    Ok(())
}

fn check_unit(values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::InvalidRaster(format!(
            "sample {i} = {} outside [0, 1]",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// Quantize a unit-interval value: `floor(v * 255 + 0.5)` clamped to `0..=255`.
pub fn round_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

impl Raster {
    pub fn from_u8(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        Ok(Raster {
            width,
            height,
            channels,
            samples: Samples::U8(data),
        })
    }

    pub fn from_unit(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        check_unit(&data)?;
        Ok(Raster {
            width,
            height,
            channels,
            samples: Samples::UnitF(data),
        })
    }

    /// Stack single-plane U8 buffers into one raster.
    pub fn from_u8_planes(width: usize, height: usize, planes: &[&[u8]]) -> Result<Self> {
        let data: Vec<u8> = planes.iter().flat_map(|p| p.iter().copied()).collect();
        Self::from_u8(width, height, planes.len(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn domain(&self) -> Domain {
        match self.samples {
            Samples::U8(_) => Domain::U8,
            Samples::UnitF(_) => Domain::UnitF,
        }
    }

    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    /// Raw U8 samples, or `None` for a float raster.
    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.samples {
            Samples::U8(d) => Some(d),
            Samples::UnitF(_) => None,
        }
    }

    /// Raw float samples, or `None` for a U8 raster.
    pub fn as_unit(&self) -> Option<&[f32]> {
        match &self.samples {
            Samples::UnitF(d) => Some(d),
            Samples::U8(_) => None,
        }
    }

    /// Sample at `(c, y, x)` expressed in the unit interval.
    pub fn unit_at(&self, c: usize, y: usize, x: usize) -> f64 {
        let i = c * self.plane_len() + y * self.width + x;
        match &self.samples {
            Samples::U8(d) => d[i] as f64 / 255.0,
            Samples::UnitF(d) => d[i] as f64,
        }
    }

    /// One channel plane as unit-interval `f64` values.
    pub fn unit_plane(&self, c: usize) -> Vec<f64> {
        let n = self.plane_len();
        let range = c * n..(c + 1) * n;
        match &self.samples {
            Samples::U8(d) => d[range].iter().map(|&v| v as f64 / 255.0).collect(),
            Samples::UnitF(d) => d[range].iter().map(|&v| v as f64).collect(),
        }
    }

    /// Convert to the unit domain (`v / 255`). Identity for float rasters.
    pub fn to_unit(&self) -> Raster {
        match &self.samples {
            Samples::UnitF(_) => self.clone(),
            Samples::U8(d) => Raster {
                width: self.width,
                height: self.height,
                channels: self.channels,
                samples: Samples::UnitF(d.iter().map(|&v| v as f32 / 255.0).collect()),
            },
        }
    }

    /// Convert to U8 with [`round_u8`]. Identity for U8 rasters.
    pub fn to_u8(&self) -> Raster {
        match &self.samples {
            Samples::U8(_) => self.clone(),
            Samples::UnitF(d) => Raster {
                width: self.width,
                height: self.height,
                channels: self.channels,
                samples: Samples::U8(d.iter().map(|&v| round_u8(v as f64)).collect()),
            },
        }
    }

    /// Interpret a single-channel raster as a probability map.
    pub fn to_prob_map(&self) -> Result<ProbMap> {
        if self.channels != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                actual: self.channels,
            });
        }
        let values = match &self.samples {
            Samples::U8(d) => d.iter().map(|&v| v as f32 / 255.0).collect(),
            Samples::UnitF(d) => d.clone(),
        };
        ProbMap::new(self.width, self.height, values)
    }

    /// Interpret a single-channel raster as a mask: any nonzero sample is foreground.
    pub fn to_mask(&self) -> Result<BinaryMask> {
        if self.channels != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                actual: self.channels,
            });
        }
        let bits = match &self.samples {
            Samples::U8(d) => d.iter().map(|&v| v != 0).collect(),
            Samples::UnitF(d) => d.iter().map(|&v| v != 0.0).collect(),
        };
        BinaryMask::from_bits(self.width, self.height, bits)
    }
}

/// Single-channel unit-interval map produced by a first-stage model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl ProbMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_shape(width, height, 1, values.len())?;
        check_unit(&values)?;
        Ok(ProbMap {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            samples: Samples::UnitF(self.values.clone()),
        }
    }
}

/// Single-channel `{0, 1}` raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty mask");
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_shape(width, height, 1, bits.len())?;
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    /// Build from a row-major `0`/`1` slice; any other value is rejected.
    pub fn from_u8(width: usize, height: usize, values: &[u8]) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidRaster(format!("mask value {v} not in {{0, 1}}")));
        }
        Self::from_bits(width, height, values.iter().map(|&v| v == 1).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// Pixelwise AND. Panics on dimension mismatch.
    pub fn and(&self, other: &BinaryMask) -> BinaryMask {
        assert_eq!(self.dims(), other.dims());
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// `{0, 255}` single-channel U8 raster, the on-disk mask convention.
    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            samples: Samples::U8(self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()),
        }
    }

    /// `{0.0, 1.0}` probability map.
    pub fn to_prob_map(&self) -> ProbMap {
        ProbMap {
            width: self.width,
            height: self.height,
            values: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Read a PNG (8-bit gray / RGB / RGBA) or DPF file, chosen by extension.
pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    if is_png(path) {
        read_png(path)
    } else {
        read_dpf(path)
    }
}

/// Write U8 rasters as PNG and float rasters as DPF.
///
/// The path extension must agree with the domain: `.png` accepts only U8.
pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match (is_png(path), raster.domain()) {
        (true, Domain::U8) => write_png(raster, path),
        (true, Domain::UnitF) => Err(Error::format(
            path,
            "PNG output is limited to 8-bit rasters; use a .dpf path for float data",
        )),
        (false, Domain::UnitF) => write_dpf(raster, path),
        (false, Domain::U8) => Err(Error::format(
            path,
            "DPF output holds float rasters; use a .png path for 8-bit data",
        )),
    }
}

fn read_png(path: &Path) -> Result<Raster> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(path, format!("corrupt PNG header: {e}")))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            depth: info.bit_depth as u8,
        });
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(Error::format(
                path,
                format!("unsupported color type {other:?}"),
            ))
        }
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, format!("corrupt PNG data: {e}")))?;
    buf.truncate(frame.buffer_size());

    let n = width * height;
    let mut planar = vec![0u8; n * channels];
    for (i, px) in buf.chunks_exact(channels).enumerate() {
        for (c, &v) in px.iter().enumerate() {
            planar[c * n + i] = v;
        }
    }
    Raster::from_u8(width, height, channels, planar)
}

fn write_png(raster: &Raster, path: &Path) -> Result<()> {
    let data = raster.as_u8().expect("caller checked domain");
    let color = match raster.channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        _ => png::ColorType::Rgba,
    };
    let n = raster.plane_len();
    let mut interleaved = Vec::with_capacity(data.len());
    for i in 0..n {
        for c in 0..raster.channels {
            interleaved.push(data[c * n + i]);
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        raster.width as u32,
        raster.height as u32,
    );
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let to_err = |e: png::EncodingError| Error::format(path, format!("PNG encoding failed: {e}"));
    let mut writer = encoder.write_header().map_err(to_err)?;
    writer.write_image_data(&interleaved).map_err(to_err)?;
    writer.finish().map_err(to_err)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn read_dpf(path: &Path) -> Result<Raster> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != DPF_MAGIC {
        return Err(Error::format(path, "corrupt header: missing DPF1 magic"));
    }
    let width = read_u32(&bytes, 4) as usize;
    let height = read_u32(&bytes, 8) as usize;
    let channels = read_u32(&bytes, 12) as usize;
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format(path, "corrupt header: dimensions overflow"))?;
    let body = &bytes[16..];
    if body.len() != count * 4 {
        return Err(Error::format(
            path,
            format!(
                "corrupt header: {width}x{height}x{channels} needs {} bytes of samples, found {}",
                count * 4,
                body.len()
            ),
        ));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Raster::from_unit(width, height, channels, values).map_err(|e| Error::format(path, e.to_string()))
}

fn write_dpf(raster: &Raster, path: &Path) -> Result<()> {
    let values = raster.as_unit().expect("caller checked domain");
    let mut bytes = Vec::with_capacity(16 + values.len() * 4);
    bytes.extend_from_slice(DPF_MAGIC);
    for v in [raster.width, raster.height, raster.channels] {
        bytes.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

pub fn read_prob_map(path: impl AsRef<Path>) -> Result<ProbMap> {
    read_raster(path.as_ref())?.to_prob_map()
}

pub fn write_prob_map(map: &ProbMap, path: impl AsRef<Path>) -> Result<()> {
    write_raster(&map.to_raster(), path)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    read_raster(path.as_ref())?.to_mask()
}

pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write_raster(&mask.to_raster(), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn to_unit_examples() {
        let r = Raster::from_u8(3, 1, 1, vec![255, 0, 128]).unwrap();
        let u = r.to_unit();
        assert_eq!(u.domain(), Domain::UnitF);
        let v = u.as_unit().unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 0.0);
        assert!((v[2] as f64 - 128.0 / 255.0).abs() < 1e-6);
        assert_eq!(u.to_unit(), u);
    }

    #[test]
    fn to_u8_examples() {
        let r = Raster::from_unit(4, 1, 1, vec![1.0, 0.0, 0.5, 0.49999]).unwrap();
        assert_eq!(r.to_u8().as_u8().unwrap(), &[255, 0, 128, 127]);
    }

    #[test]
    fn u8_unit_round_trip_exhaustive() {
        let all: Vec<u8> = (0..=255).collect();
        let r = Raster::from_u8(256, 1, 1, all).unwrap();
        assert_eq!(r.to_unit().to_u8(), r);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Raster::from_u8(0, 1, 1, vec![]).is_err());
        assert!(Raster::from_u8(2, 2, 2, vec![0; 8]).is_err());
        assert!(Raster::from_u8(2, 2, 3, vec![0; 11]).is_err());
        assert!(Raster::from_unit(1, 1, 1, vec![1.5]).is_err());
        assert!(Raster::from_unit(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(BinaryMask::from_u8(1, 1, &[2]).is_err());
    }

    #[test]
    fn png_rgb_and_dpf_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<u8> = (0..64 * 64 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let rgb = Raster::from_u8(64, 64, 3, data).unwrap();
        let p = dir.path().join("a.png");
        write_raster(&rgb, &p).unwrap();
        let back = read_raster(&p).unwrap();
        assert_eq!((back.width(), back.height(), back.channels()), (64, 64, 3));
        assert_eq!(back, rgb);

        let half = Raster::from_unit(8, 8, 1, vec![0.5; 64]).unwrap();
        let q = dir.path().join("b.dpf");
        write_raster(&half, &q).unwrap();
        assert_eq!(read_raster(&q).unwrap(), half);
        assert!(read_raster(&q).unwrap().to_prob_map().is_ok());
    }

    #[test]
    fn dpf_layout_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let r = Raster::from_unit(2, 1, 1, vec![0.25, 1.0]).unwrap();
        let p = dir.path().join("x.dpf");
        write_raster(&r, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let mut expected = b"DPF1".to_vec();
        expected.extend_from_slice(&[2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&0.25f32.to_le_bytes());
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn float_to_png_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let r = Raster::from_unit(8, 8, 4, vec![0.1; 256]).unwrap();
        let err = write_raster(&r, dir.path().join("x.png")).unwrap_err();
        assert!(err.to_string().contains("PNG output"));
    }

    #[test]
    fn sixteen_bit_png_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("deep.png");
        {
            let file = File::create(&p).unwrap();
            let mut enc = png::Encoder::new(BufWriter::new(file), 2, 2);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0u8; 8]).unwrap();
        }
        let err = read_raster(&p).unwrap_err();
        assert!(matches!(err, Error::UnsupportedBitDepth { depth: 16, .. }));
        assert!(err.to_string().contains("unsupported bit depth"));
    }

    #[test]
    fn corrupt_dpf_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.dpf");
        std::fs::write(&p, b"DPF1\x08\0\0\0\x08\0\0\0\x01\0\0\0").unwrap();
        let msg = read_raster(&p).unwrap_err().to_string();
        assert!(msg.contains("bad.dpf") && msg.contains("corrupt header"), "{msg}");
        std::fs::write(&p, b"XXXX").unwrap();
        assert!(read_raster(&p).is_err());
        assert!(read_raster(dir.path().join("missing.png")).is_err());
    }
}
