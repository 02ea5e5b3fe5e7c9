//! Binary morphology: dilation, erosion, and Euclidean boundary bands.
//!
//! Pixels outside the image are background for every operation here.
//! Square elements run as two separable 1-D window passes; disks go through
//! an exact squared Euclidean distance transform and are thresholded at `r²`.

use crate::raster::BinaryMask;

/// Neighborhood footprint centered on the pixel being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuringElement {
    /// Chebyshev ball: `max(|dx|, |dy|) <= radius`, a `(2r+1)²` block.
    Square(usize),
    /// Euclidean ball: `dx² + dy² <= radius²`.
    Disk(usize),
}

impl StructuringElement {
    pub fn radius(self) -> usize {
        match self {
            StructuringElement::Square(r) | StructuringElement::Disk(r) => r,
        }
    }

    /// Whether offset `(dx, dy)` lies inside the footprint.
    pub fn contains(self, dx: i64, dy: i64) -> bool {
        match self {
            StructuringElement::Square(r) => dx.abs().max(dy.abs()) <= r as i64,
            StructuringElement::Disk(r) => dx * dx + dy * dy <= (r * r) as i64,
        }
    }

    fn check(self) {
        assert!(self.radius() >= 1, "structuring element radius must be >= 1");
    }
}

/// `p` is set iff some foreground pixel lies within the footprint centered at `p`.
pub fn dilate(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    se.check();
    let (w, h) = mask.dims();
    match se {
        StructuringElement::Square(r) => {
            let rows = window_any_rows(mask.bits(), w, h, r);
            let cols = window_any_rows(&transpose(&rows, w, h), h, w, r);
            from_bits(w, h, transpose(&cols, h, w))
        }
        StructuringElement::Disk(r) => {
            let dist = squared_distance_to(mask.bits(), w, h, true);
            let limit = (r * r) as f64;
            from_bits(w, h, dist.iter().map(|&d| d <= limit).collect())
        }
    }
}

/// `p` is set iff every pixel of the footprint centered at `p` is foreground.
pub fn erode(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    se.check();
    let (w, h) = mask.dims();
    match se {
        StructuringElement::Square(r) => {
            let rows = window_all_rows(mask.bits(), w, h, r);
            let cols = window_all_rows(&transpose(&rows, w, h), h, w, r);
            from_bits(w, h, transpose(&cols, h, w))
        }
        StructuringElement::Disk(r) => {
            let dist = distance_to_background(mask);
            let limit = (r * r) as f64;
            from_bits(w, h, dist.iter().map(|&d| d > limit).collect())
        }
    }
}

/// Foreground pixels within Euclidean distance `d` of background, where the
/// image exterior counts as background: `mask ∧ ¬erode(mask, Disk(d))`.
pub fn boundary_band(mask: &BinaryMask, d: usize) -> BinaryMask {
    assert!(d >= 1, "boundary band width must be >= 1");
    mask.and(&erode(mask, StructuringElement::Disk(d)).complement())
}

/// Squared Euclidean distance from every pixel to the nearest background
/// pixel, treating the exterior as background. Foreground-only images still
/// get finite distances through the exterior.
pub fn distance_to_background(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = mask.dims();
    // One ring of background padding reproduces the exterior exactly: the
    // nearest exterior point of any pixel is its straight-line exit.
    let (pw, ph) = (w + 2, h + 2);
    let mut padded = vec![true; pw * ph];
    for y in 0..h {
        for x in 0..w {
            padded[(y + 1) * pw + x + 1] = !mask.get(x, y);
        }
    }
    let dist = squared_distance_to(&padded, pw, ph, true);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        out.extend_from_slice(&dist[(y + 1) * pw + 1..(y + 1) * pw + 1 + w]);
    }
    out
}

const FAR: f64 = 1e20;

/// Exact squared Euclidean distance transform (lower envelope of parabolas,
/// one pass per axis). Distances are to pixels whose bit equals `target`;
/// `FAR` where no such pixel exists.
pub fn squared_distance_to(bits: &[bool], w: usize, h: usize, target: bool) -> Vec<f64> {
    let mut grid: Vec<f64> = bits
        .iter()
        .map(|&b| if b == target { 0.0 } else { FAR })
        .collect();
    let mut f = vec![0.0; w.max(h)];
    let mut out = vec![0.0; w.max(h)];
    let mut v = vec![0usize; w.max(h)];
    let mut z = vec![0.0; w.max(h) + 1];

    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        envelope_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        envelope_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    grid
}

fn envelope_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let sources: Vec<usize> = (0..n).filter(|&q| f[q] < FAR).collect();
    if sources.is_empty() {
        out.fill(FAR);
        return;
    }
    let intersect = |q: usize, p: usize| -> f64 {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    let mut k = 0usize;
    v[0] = sources[0];
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for &q in &sources[1..] {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

fn from_bits(w: usize, h: usize, bits: Vec<bool>) -> BinaryMask {
    BinaryMask::from_bits(w, h, bits).expect("shape preserved")
}

fn transpose(bits: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = bits[y * w + x];
        }
    }
    out
}

/// Per-row prefix counts of set bits, `w + 1` entries per row.
fn row_prefix(row: &[bool]) -> Vec<usize> {
    let mut acc = Vec::with_capacity(row.len() + 1);
    acc.push(0);
    for &b in row {
        acc.push(acc.last().unwrap() + b as usize);
    }
    acc
}

fn window_any_rows(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(w * h);
    for row in bits.chunks_exact(w) {
        let acc = row_prefix(row);
        out.extend((0..w).map(|x| {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            acc[hi] > acc[lo]
        }));
    }
    debug_assert_eq!(out.len(), h * w);
    out
}

fn window_all_rows(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(w * h);
    for row in bits.chunks_exact(w) {
        let acc = row_prefix(row);
        out.extend((0..w).map(|x| {
            // Windows reaching past the edge include exterior background.
            x >= r && x + r < w && acc[x + r + 1] - acc[x - r] == 2 * r + 1
        }));
    }
    debug_assert_eq!(out.len(), h * w);
    out
}
