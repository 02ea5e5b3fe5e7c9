//! Synthetic aerial building scenes, dataset manifests, and seeded splits.
//!
//! Ground-truth masks record the full building footprint. Tree blobs and
//! shadows only touch image pixels, so an occluded building still appears
//! complete in its mask.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::{read_mask, read_raster, write_mask, write_raster, BinaryMask, Raster};

/// Smallest footprint a building may have, in pixels.
pub const MIN_FOOTPRINT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub image_size: usize,
    pub buildings_min: usize,
    pub buildings_max: usize,
    /// Building side lengths are drawn from `side_min..=side_max`.
    pub side_min: usize,
    pub side_max: usize,
    pub rotated_prob: f64,
    pub l_shape_prob: f64,
    pub building_brightness: (u8, u8),
    pub background_brightness: (u8, u8),
    /// Gaussian noise standard deviation on the unit scale.
    pub noise_std: f64,
    pub occlusion_prob: f64,
    /// Upper bound on the fraction of any building hidden by trees.
    pub occlusion_max_fraction: f64,
    pub shadow_prob: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            image_size: 64,
            buildings_min: 1,
            buildings_max: 4,
            side_min: 8,
            side_max: 22,
            rotated_prob: 0.4,
            l_shape_prob: 0.3,
            building_brightness: (130, 220),
            background_brightness: (50, 120),
            noise_std: 0.04,
            occlusion_prob: 0.5,
            occlusion_max_fraction: 0.3,
            shadow_prob: 0.5,
            seed: 0,
        }
    }
}

fn parse_field<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_range(key: &str, value: &str) -> Result<(u8, u8)> {
    let (a, b) = value
        .split_once('-')
        .ok_or_else(|| Error::Config(format!("{key} expects lo-hi, got {value:?}")))?;
    Ok((parse_field(key, a)?, parse_field(key, b)?))
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        if self.image_size < 32 {
            return Err(Error::Config(format!("image size must be >= 32, got {}", self.image_size)));
        }
        if self.buildings_min > self.buildings_max {
            return Err(Error::Config("buildings_min exceeds buildings_max".into()));
        }
        if self.side_min < 4 || self.side_min > self.side_max || self.side_max + 4 > self.image_size {
            return Err(Error::Config(format!(
                "building sides {}..{} do not fit a {} image",
                self.side_min, self.side_max, self.image_size
            )));
        }
        for (name, (lo, hi)) in [
            ("building_brightness", self.building_brightness),
            ("background_brightness", self.background_brightness),
        ] {
            if lo > hi {
                return Err(Error::Config(format!("{name} range is inverted")));
            }
        }
        prob("rotated_prob", self.rotated_prob)?;
        prob("l_shape_prob", self.l_shape_prob)?;
        prob("occlusion_prob", self.occlusion_prob)?;
        prob("occlusion_max_fraction", self.occlusion_max_fraction)?;
        prob("shadow_prob", self.shadow_prob)?;
        prob("noise_std", self.noise_std)
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let range = |(a, b): (u8, u8)| format!("{a}-{b}");
        [
            ("image_size", self.image_size.to_string()),
            ("buildings_min", self.buildings_min.to_string()),
            ("buildings_max", self.buildings_max.to_string()),
            ("side_min", self.side_min.to_string()),
            ("side_max", self.side_max.to_string()),
            ("rotated_prob", self.rotated_prob.to_string()),
            ("l_shape_prob", self.l_shape_prob.to_string()),
            ("building_brightness", range(self.building_brightness)),
            ("background_brightness", range(self.background_brightness)),
            ("noise_std", self.noise_std.to_string()),
            ("occlusion_prob", self.occlusion_prob.to_string()),
            ("occlusion_max_fraction", self.occlusion_max_fraction.to_string()),
            ("shadow_prob", self.shadow_prob.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Apply one `key=value` setting; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "image_size" => self.image_size = parse_field(key, value)?,
            "buildings_min" => self.buildings_min = parse_field(key, value)?,
            "buildings_max" => self.buildings_max = parse_field(key, value)?,
            "side_min" => self.side_min = parse_field(key, value)?,
            "side_max" => self.side_max = parse_field(key, value)?,
            "rotated_prob" => self.rotated_prob = parse_field(key, value)?,
            "l_shape_prob" => self.l_shape_prob = parse_field(key, value)?,
            "building_brightness" => self.building_brightness = parse_range(key, value)?,
            "background_brightness" => self.background_brightness = parse_range(key, value)?,
            "noise_std" => self.noise_std = parse_field(key, value)?,
            "occlusion_prob" => self.occlusion_prob = parse_field(key, value)?,
            "occlusion_max_fraction" => self.occlusion_max_fraction = parse_field(key, value)?,
            "shadow_prob" => self.shadow_prob = parse_field(key, value)?,
            "seed" => self.seed = parse_field(key, value)?,
            _ => return Err(Error::Config(format!("unknown scene key {key:?}"))),
        }
        Ok(())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = SceneConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

type Polygon = Vec<(f64, f64)>;

fn contains(poly: &Polygon, px: f64, py: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[(i + n - 1) % n];
        if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
            inside = !inside;
        }
    }
    inside
}

fn rasterize(poly: &Polygon, size: usize) -> BinaryMask {
    let mut m = BinaryMask::new(size, size);
    for y in 0..size {
        for x in 0..size {
            if contains(poly, x as f64 + 0.5, y as f64 + 0.5) {
                m.set(x, y, true);
            }
        }
    }
    m
}

#[derive(Debug, Clone)]
struct Tree {
    cx: f64,
    cy: f64,
    radius: f64,
    color: [u8; 3],
}

impl Tree {
    fn covers(&self, x: usize, y: usize) -> bool {
        let (dx, dy) = (x as f64 + 0.5 - self.cx, y as f64 + 0.5 - self.cy);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// One sampled scene: geometry and colors, independent of rendering.
#[derive(Debug, Clone)]
pub struct Scene {
    size: usize,
    background: [u8; 3],
    buildings: Vec<(BinaryMask, [u8; 3])>,
    shadows: Vec<(BinaryMask, [u8; 3])>,
    trees: Vec<Tree>,
    noise_std: f64,
    noise_seed: u64,
}

fn shape_polygon(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Polygon {
    let size = cfg.image_size as f64;
    let a = rng.random_range(cfg.side_min..=cfg.side_max) as f64;
    let b = rng.random_range(cfg.side_min..=cfg.side_max) as f64;
    let local: Polygon = if rng.random_bool(cfg.l_shape_prob) {
        // Remove one quadrant-ish corner from the a×b box.
        let (ca, cb) = ((a * rng.random_range(0.35..0.6)).floor(), (b * rng.random_range(0.35..0.6)).floor());
        vec![(0.0, 0.0), (a, 0.0), (a, b - cb), (a - ca, b - cb), (a - ca, b), (0.0, b)]
    } else {
        vec![(0.0, 0.0), (a, 0.0), (a, b), (0.0, b)]
    };
    let angle: f64 = if rng.random_bool(cfg.rotated_prob) {
        rng.random_range(0.15..(std::f64::consts::FRAC_PI_2 - 0.15))
    } else {
        0.0
    };
    let (s, c) = angle.sin_cos();
    let rotated: Polygon = local
        .iter()
        .map(|&(x, y)| (x - a / 2.0, y - b / 2.0))
        .map(|(x, y)| (x * c - y * s, x * s + y * c))
        .collect();
    let (minx, maxx) = rotated.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (miny, maxy) = rotated.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let span_x = (size - 2.0 - (maxx - minx)).max(0.0);
    let span_y = (size - 2.0 - (maxy - miny)).max(0.0);
    let ox = 1.0 - minx + rng.random_range(0.0..=span_x).floor();
    let oy = 1.0 - miny + rng.random_range(0.0..=span_y).floor();
    rotated.iter().map(|&(x, y)| (x + ox, y + oy)).collect()
}

fn jitter(rng: &mut ChaCha8Rng, base: f64, spread: f64) -> u8 {
    (base + rng.random_range(-spread..=spread)).round().clamp(0.0, 255.0) as u8
}

impl Scene {
    pub fn sample(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Scene {
        let size = cfg.image_size;
        let bg = rng.random_range(cfg.background_brightness.0..=cfg.background_brightness.1) as f64;
        let background = [jitter(rng, bg * 0.9, 6.0), jitter(rng, bg, 6.0), jitter(rng, bg * 0.8, 6.0)];

        let count = rng.random_range(cfg.buildings_min..=cfg.buildings_max);
        let mut buildings = Vec::with_capacity(count);
        let mut shadows = Vec::new();
        for _ in 0..count {
            let footprint = loop {
                let poly = shape_polygon(cfg, rng);
                let m = rasterize(&poly, size);
                if m.count() >= MIN_FOOTPRINT {
                    break (poly, m);
                }
            };
            let v = rng.random_range(cfg.building_brightness.0..=cfg.building_brightness.1) as f64;
            let tint = rng.random_range(-12.0..=12.0);
            let color = [jitter(rng, v + tint, 4.0), jitter(rng, v, 4.0), jitter(rng, v - tint, 4.0)];
            if rng.random_bool(cfg.shadow_prob) {
                let (dx, dy) = (rng.random_range(2.0..=4.0_f64).floor(), rng.random_range(2.0..=4.0_f64).floor());
                let moved: Polygon = footprint.0.iter().map(|&(x, y)| (x + dx, y + dy)).collect();
                let shade = [
                    (background[0] as f64 * 0.4) as u8,
                    (background[1] as f64 * 0.4) as u8,
                    (background[2] as f64 * 0.45) as u8,
                ];
                shadows.push((rasterize(&moved, size), shade));
            }
            buildings.push((footprint.1, color));
        }

        let mut scene = Scene {
            size,
            background,
            buildings,
            shadows,
            trees: Vec::new(),
            noise_std: cfg.noise_std,
            noise_seed: rng.random(),
        };
        scene.place_trees(cfg, rng);
        scene
    }

    fn tree_coverage_ok(&self, candidate: &Tree, limit: f64) -> bool {
        self.buildings.iter().all(|(m, _)| {
            let mut covered = 0usize;
            for y in 0..self.size {
                for x in 0..self.size {
                    if m.get(x, y) && (candidate.covers(x, y) || self.trees.iter().any(|t| t.covers(x, y))) {
                        covered += 1;
                    }
                }
            }
            covered as f64 <= limit * m.count() as f64
        })
    }

    fn place_trees(&mut self, cfg: &SceneConfig, rng: &mut ChaCha8Rng) {
        for i in 0..self.buildings.len() {
            if !rng.random_bool(cfg.occlusion_prob) {
                continue;
            }
            let pixels: Vec<(usize, usize)> = {
                let m = &self.buildings[i].0;
                (0..self.size * self.size)
                    .map(|k| (k % self.size, k / self.size))
                    .filter(|&(x, y)| m.get(x, y))
                    .collect()
            };
            let blobs = rng.random_range(1..=3);
            for _ in 0..blobs {
                let &(x, y) = pixels.choose(rng).expect("footprints are non-empty");
                let g = rng.random_range(60.0..=100.0);
                let tree = Tree {
                    cx: x as f64 + rng.random_range(-3.0..=3.0),
                    cy: y as f64 + rng.random_range(-3.0..=3.0),
                    radius: rng.random_range(2.5..=5.5),
                    color: [jitter(rng, g * 0.45, 5.0), jitter(rng, g, 5.0), jitter(rng, g * 0.4, 5.0)],
                };
                if self.tree_coverage_ok(&tree, cfg.occlusion_max_fraction) {
                    self.trees.push(tree);
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// One mask per building.
    pub fn building_masks(&self) -> Vec<&BinaryMask> {
        self.buildings.iter().map(|(m, _)| m).collect()
    }

    /// Union of building footprints.
    pub fn mask(&self) -> BinaryMask {
        let mut out = BinaryMask::new(self.size, self.size);
        for (m, _) in &self.buildings {
            for (i, &b) in m.bits().iter().enumerate() {
                if b {
                    out.set(i % self.size, i / self.size, true);
                }
            }
        }
        out
    }

    /// Pixels hidden by tree canopy.
    pub fn canopy(&self) -> BinaryMask {
        let mut out = BinaryMask::new(self.size, self.size);
        for y in 0..self.size {
            for x in 0..self.size {
                if self.trees.iter().any(|t| t.covers(x, y)) {
                    out.set(x, y, true);
                }
            }
        }
        out
    }

    /// Render the image. `occluded = false` omits trees; everything else,
    /// noise included, is identical between the two renders.
    pub fn render(&self, occluded: bool) -> Raster {
        let n = self.size * self.size;
        let mut rgb: Vec<[u8; 3]> = vec![self.background; n];
        for (m, color) in self.shadows.iter().chain(&self.buildings) {
            for (px, &b) in rgb.iter_mut().zip(m.bits()) {
                if b {
                    *px = *color;
                }
            }
        }
        if occluded {
            for (i, px) in rgb.iter_mut().enumerate() {
                let (x, y) = (i % self.size, i / self.size);
                if let Some(t) = self.trees.iter().find(|t| t.covers(x, y)) {
                    *px = t.color;
                }
            }
        }
        let mut noise_rng = ChaCha8Rng::seed_from_u64(self.noise_seed);
        let noise = Normal::new(0.0, self.noise_std * 255.0).expect("finite std");
        let mut planar = vec![0u8; 3 * n];
        for c in 0..3 {
            for i in 0..n {
                let v = rgb[i][c] as f64 + noise.sample(&mut noise_rng);
                planar[c * n + i] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
        Raster::from_u8(self.size, self.size, 3, planar).expect("shape is consistent")
    }
}

/// Seeded generator for sample `index`: one ChaCha stream per sample, so the
/// result does not depend on generation order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest root.
    pub image: PathBuf,
    pub mask: PathBuf,
    /// `None` until [`split_dataset`] assigns one.
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub seed: u64,
    /// Configuration echo of whatever produced the dataset.
    pub config: Vec<(String, String)>,
    /// Free-form per-sample provenance records.
    pub provenance: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

impl DatasetManifest {
    pub fn image_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.image)
    }

    pub fn mask_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.mask)
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == Some(split))
    }

    pub fn split_counts(&self) -> (usize, usize, usize) {
        let count = |s| self.entries_in(s).count();
        (count(Split::Train), count(Split::Val), count(Split::Test))
    }

    /// Read image and mask for every entry of `split`, in manifest order.
    pub fn load_split(&self, split: Split) -> Result<Vec<(String, Raster, BinaryMask)>> {
        self.entries_in(split)
            .map(|e| Ok((e.id.clone(), read_raster(self.image_path(e))?, read_mask(self.mask_path(e))?)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# denise manifest v1\n");
        let _ = writeln!(s, "# seed={}", self.seed);
        for (k, v) in &self.config {
            let _ = writeln!(s, "# config {k}={v}");
        }
        for p in &self.provenance {
            let _ = writeln!(s, "# provenance {p}");
        }
        s.push_str("id\timage\tmask\tsplit\n");
        for e in &self.entries {
            let split = e.split.map_or("-".to_string(), |s| s.to_string());
            let _ = writeln!(s, "{}\t{}\t{}\t{}", e.id, e.image.display(), e.mask.display(), split);
        }
        s
    }

    pub fn parse(text: &str, root: &Path, source: &Path) -> Result<Self> {
        let malformed = |n: usize, line: &str| Error::format(source, format!("malformed manifest line {n}: {line:?}"));
        let mut manifest = DatasetManifest {
            root: root.to_path_buf(),
            seed: 0,
            config: Vec::new(),
            provenance: Vec::new(),
            entries: Vec::new(),
        };
        let mut seen = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some(seed) = rest.strip_prefix("seed=") {
                    manifest.seed = seed.parse().map_err(|_| malformed(n, line))?;
                } else if let Some(kv) = rest.strip_prefix("config ") {
                    let (k, v) = kv.split_once('=').ok_or_else(|| malformed(n, line))?;
                    manifest.config.push((k.to_string(), v.to_string()));
                } else if let Some(p) = rest.strip_prefix("provenance ") {
                    manifest.provenance.push(p.to_string());
                }
                continue;
            }
            if line.trim().is_empty() || line.starts_with("id\t") || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 || f[0].is_empty() {
                return Err(malformed(n, line));
            }
            let split = match f[3] {
                "-" => None,
                s => Some(s.parse().map_err(|_| malformed(n, line))?),
            };
            if !seen.insert(f[0].to_string()) {
                return Err(Error::format(source, format!("duplicate sample id {:?}", f[0])));
            }
            manifest.entries.push(ManifestEntry {
                id: f[0].to_string(),
                image: PathBuf::from(f[1]),
                mask: PathBuf::from(f[2]),
                split,
            });
        }
        if manifest.entries.is_empty() {
            return Err(Error::format(source, "no entries"));
        }
        Ok(manifest)
    }
}

/// Write the manifest to `path`. Entry paths are stored relative to the
/// manifest root, which is expected to be the directory holding `path`.
pub fn save_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, manifest.to_text()).map_err(|e| Error::io(path, e))
}

/// Load a manifest; its root becomes the containing directory. Every
/// referenced file must exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().unwrap_or(Path::new("."));
    let manifest = DatasetManifest::parse(&text, root, path)?;
    let dangling: Vec<String> = manifest
        .entries
        .iter()
        .filter(|e| !manifest.image_path(e).is_file() || !manifest.mask_path(e).is_file())
        .map(|e| e.id.clone())
        .collect();
    if !dangling.is_empty() {
        return Err(Error::MissingSamples(dangling));
    }
    Ok(manifest)
}

pub fn sample_id(index: usize) -> String {
    format!("s{index:05}")
}

/// Render `n` scenes into `out/images` and `out/masks` and write
/// `out/manifest.txt`. Entries are left unsplit.
pub fn generate_dataset(cfg: &SceneConfig, n: usize, out: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Config("dataset size must be at least 1".into()));
    }
    for sub in ["images", "masks"] {
        let dir = out.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let id = sample_id(i);
        let scene = Scene::sample(cfg, &mut sample_rng(cfg.seed, i as u64));
        let image = PathBuf::from(format!("images/{id}.png"));
        let mask = PathBuf::from(format!("masks/{id}.png"));
        write_raster(&scene.render(true), out.join(&image))?;
        write_mask(&scene.mask(), out.join(&mask))?;
        entries.push(ManifestEntry {
            id,
            image,
            mask,
            split: None,
        });
    }
    let manifest = DatasetManifest {
        root: out.to_path_buf(),
        seed: cfg.seed,
        config: cfg.to_pairs(),
        provenance: Vec::new(),
        entries,
    };
    save_manifest(&manifest, out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Split sizes for `n` entries: validation and test take `floor(n * ratio)`,
/// training takes the remainder.
pub fn split_counts(n: usize, ratios: (f64, f64, f64)) -> Result<(usize, usize, usize)> {
    let (tr, va, te) = ratios;
    if !(tr > 0.0 && va > 0.0 && te > 0.0) || ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios must be positive and sum to 1, got ({tr}, {va}, {te})"
        )));
    }
    if n < 3 {
        return Err(Error::Config(format!("cannot split {n} entries three ways")));
    }
    let val = ((n as f64 * va).floor() as usize).max(1);
    let test = ((n as f64 * te).floor() as usize).max(1);
    Ok((n - val - test, val, test))
}

/// Seeded shuffle followed by contiguous train / val / test assignment.
pub fn split_dataset(manifest: &DatasetManifest, ratios: (f64, f64, f64), seed: u64) -> Result<DatasetManifest> {
    let (train, val, _) = split_counts(manifest.entries.len(), ratios)?;
    let mut order: Vec<usize> = (0..manifest.entries.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assigned = BTreeMap::new();
    for (rank, &i) in order.iter().enumerate() {
        let split = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        };
        assigned.insert(i, split);
    }
    let mut out = manifest.clone();
    for (i, e) in out.entries.iter_mut().enumerate() {
        e.split = Some(assigned[&i]);
    }
    Ok(out)
}
