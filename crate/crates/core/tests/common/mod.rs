//! Shared fixtures and brute-force reference implementations.
#![allow(dead_code)]

pub mod enhance_fixtures;

use denise::morphology::StructuringElement;
use denise::{BinaryMask, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random mask mixing blobs and salt noise, so both thin and thick
/// structures show up.
pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryMask {
    let mut m = BinaryMask::new(w, h);
    let blobs = rng.random_range(0..5);
    for _ in 0..blobs {
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (bw, bh) = (rng.random_range(1..=w / 2), rng.random_range(1..=h / 2));
        for y in y0..(y0 + bh).min(h) {
            for x in x0..(x0 + bw).min(w) {
                m.set(x, y, true);
            }
        }
    }
    let density = rng.random_range(0.0..0.08);
    for y in 0..h {
        for x in 0..w {
            if rng.random_bool(density) {
                m.set(x, y, !m.get(x, y));
            }
        }
    }
    m
}

pub fn random_rgb(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Raster {
    let data = (0..3 * w * h).map(|_| rng.random()).collect();
    Raster::from_u8(w, h, 3, data).unwrap()
}

/// Dilation by stamping the element at every foreground pixel.
pub fn stamp_dilate(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = se.radius() as i64;
    let mut out = BinaryMask::new(w, h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    let (nx, ny) = (x + dx, y + dy);
                    if se.contains(dx, dy) && nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                        out.set(nx as usize, ny as usize, true);
                    }
                }
            }
        }
    }
    out
}

/// Erosion as the complement of the dilated complement, with everything
/// outside the image counted as background.
pub fn dual_erode(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = se.radius();
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let mut bg = BinaryMask::new(pw, ph);
    for y in 0..ph {
        for x in 0..pw {
            let inside = x >= r && y >= r && x < w + r && y < h + r;
            bg.set(x, y, !(inside && mask.get(x - r, y - r)));
        }
    }
    let grown = stamp_dilate(&bg, se);
    let mut out = BinaryMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, !grown.get(x + r, y + r));
        }
    }
    out
}

/// Foreground pixels whose squared distance to some background pixel
/// (including the one-pixel ring outside the image) is at most `d²`,
/// found by scanning every candidate.
pub fn scan_band(mask: &BinaryMask, d: usize) -> BinaryMask {
    let (w, h) = mask.dims();
    let (wi, hi) = (w as i64, h as i64);
    let mut background: Vec<(i64, i64)> = Vec::new();
    for y in -1..=hi {
        for x in -1..=wi {
            let outside = x < 0 || y < 0 || x >= wi || y >= hi;
            if outside || !mask.get(x as usize, y as usize) {
                background.push((x, y));
            }
        }
    }
    let d2 = (d * d) as i64;
    let mut out = BinaryMask::new(w, h);
    for y in 0..hi {
        for x in 0..wi {
            if mask.get(x as usize, y as usize)
                && background.iter().any(|&(bx, by)| (bx - x).pow(2) + (by - y).pow(2) <= d2)
            {
                out.set(x as usize, y as usize, true);
            }
        }
    }
    out
}

pub fn count_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let inter = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x && **y).count();
    let union = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn mask_from_rows(rows: &[&str]) -> BinaryMask {
    let h = rows.len();
    let w = rows[0].len();
    let bits = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
    BinaryMask::from_bits(w, h, bits).unwrap()
}

/// Largest relative error between the analytic gradient and central finite
/// differences over every weight.
pub fn gradient_check(
    model: &denise::refmodels::PatchClassifier,
    batch: &[(Raster, BinaryMask)],
    h: f64,
) -> f64 {
    use denise::refmodels::{loss, loss_gradient};
    let analytic = loss_gradient(model, batch).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..model.weights.len() {
        let mut plus = model.clone();
        plus.weights[i] += h;
        let mut minus = model.clone();
        minus.weights[i] -= h;
        let numeric = (loss(&plus, batch).unwrap() - loss(&minus, batch).unwrap()) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

/// Classifier with random weights and normalization, plus a small batch to
/// evaluate it on.
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    channels: usize,
) -> (denise::refmodels::PatchClassifier, Vec<(Raster, BinaryMask)>) {
    let mut model = denise::refmodels::PatchClassifier::zeros(1, channels);
    for w in &mut model.weights {
        *w = rng.random_range(-0.5..0.5);
    }
    model.mean = (0..channels).map(|_| rng.random_range(0.2..0.6)).collect();
    model.std = (0..channels).map(|_| rng.random_range(0.1..0.4)).collect();
    let batch = (0..2)
        .map(|_| {
            let data = (0..channels * 36).map(|_| rng.random_range(0.0..1.0)).collect();
            (Raster::from_unit(6, 6, channels, data).unwrap(), random_mask(rng, 6, 6))
        })
        .collect();
    (model, batch)
}

/// Bright squares on a dark background: separable by intensity alone.
pub fn toy_dataset(seed: u64, n: usize) -> Vec<(Raster, BinaryMask)> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let mut mask = BinaryMask::new(16, 16);
            let (x0, y0) = (r.random_range(0..8), r.random_range(0..8));
            for y in y0..y0 + 6 {
                for x in x0..x0 + 6 {
                    mask.set(x, y, true);
                }
            }
            let mut data = Vec::with_capacity(3 * 256);
            for _ in 0..3 {
                for &b in mask.bits() {
                    let base: f64 = if b { 200.0 } else { 60.0 };
                    data.push((base + r.random_range(-20.0..20.0)) as u8);
                }
            }
            (Raster::from_u8(16, 16, 3, data).unwrap(), mask)
        })
        .collect()
}
