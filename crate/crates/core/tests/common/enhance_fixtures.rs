//! 8×8 fixtures whose expected outputs are written out by hand. Each
//! function panics on the first mismatch.

use denise::enhance::{enhance_sample, EnhanceConfig, Mode, Variant};
use denise::{BinaryMask, Domain, ProbMap, Raster};

const RED: [[u8; 8]; 8] = [
    [200, 200, 200, 200, 200, 200, 200, 200],
    [200, 180, 180, 180, 180, 180, 180, 200],
    [200, 180, 160, 160, 160, 160, 180, 200],
    [200, 180, 160, 140, 140, 160, 180, 200],
    [200, 180, 160, 140, 140, 160, 180, 200],
    [200, 180, 160, 160, 160, 160, 180, 200],
    [200, 180, 180, 180, 180, 180, 180, 200],
    [200, 200, 200, 200, 200, 200, 200, 200],
];
const GREEN: u8 = 100;
const BLUE: u8 = 40;

pub fn image() -> Raster {
    let mut data: Vec<u8> = RED.iter().flatten().copied().collect();
    data.extend([GREEN; 64]);
    data.extend([BLUE; 64]);
    Raster::from_u8(8, 8, 3, data).unwrap()
}

pub fn mask() -> BinaryMask {
    let mut m = BinaryMask::new(8, 8);
    for y in 2..6 {
        for x in 2..6 {
            m.set(x, y, true);
        }
    }
    m
}

fn probs(rows: [[f32; 8]; 8]) -> ProbMap {
    ProbMap::new(8, 8, rows.iter().flatten().copied().collect()).unwrap()
}

/// Expected Merge3 output for a multiplier pattern where `#` keeps the pixel
/// and `.` halves it.
fn expected_merge(pattern: [&str; 8], red: [[u8; 8]; 8]) -> Vec<u8> {
    let keep: Vec<bool> = pattern.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
    let mut out: Vec<u8> = red.iter().flatten().copied().collect();
    out.extend(keep.iter().map(|&k| if k { GREEN } else { 50 }));
    out.extend(keep.iter().map(|&k| if k { BLUE } else { 20 }));
    out
}

pub fn seg_merge3_fixture() {
    let mut p = [[0.1f32; 8]; 8];
    p[2][2] = 0.9;
    p[6][6] = 0.49;
    let cfg = EnhanceConfig {
        dilation_radius: 1,
        ..EnhanceConfig::new(Variant::Seg, Mode::Merge3)
    };
    let out = enhance_sample(&image(), &probs(p), &mask(), &cfg, ("img", "pred")).unwrap();
    // Only (2, 2) clears the threshold; the radius-1 square keeps x, y in 1..=3.
    let red = [
        [100, 100, 100, 100, 100, 100, 100, 100],
        [100, 180, 180, 180, 90, 90, 90, 100],
        [100, 180, 160, 160, 80, 80, 90, 100],
        [100, 180, 160, 140, 70, 80, 90, 100],
        [100, 90, 80, 70, 70, 80, 90, 100],
        [100, 90, 80, 80, 80, 80, 90, 100],
        [100, 90, 90, 90, 90, 90, 90, 100],
        [100, 100, 100, 100, 100, 100, 100, 100],
    ];
    let pattern = [
        "........", ".###....", ".###....", ".###....", "........", "........", "........", "........",
    ];
    assert_eq!(out.image.domain(), Domain::U8);
    assert_eq!(out.image.as_u8().unwrap(), expected_merge(pattern, red).as_slice());
    assert_eq!(out.mask, mask());
    assert_eq!(out.provenance.sample_id, "img");
    assert_eq!(out.provenance.prediction_id, "pred");
}

pub fn seg_merge3_default_radius_covers_small_tile() {
    let mut p = [[0.0f32; 8]; 8];
    p[7][0] = 1.0;
    let cfg = EnhanceConfig::new(Variant::Seg, Mode::Merge3);
    let out = enhance_sample(&image(), &probs(p), &mask(), &cfg, ("a", "b")).unwrap();
    assert_eq!(out.image, image());
}

pub fn edge_merge3_fixture() {
    let mut g = [[0.0f32; 8]; 8];
    for i in 1..7 {
        g[1][i] = 0.8;
        g[6][i] = 0.8;
    }
    g[3][1] = 0.5; // inclusive threshold
    g[4][1] = 0.49;
    g[3][3] = 1.0;
    let cfg = EnhanceConfig::new(Variant::Edge, Mode::Merge3);
    let out = enhance_sample(&image(), &probs(g), &mask(), &cfg, ("a", "b")).unwrap();
    let red = [
        [100, 100, 100, 100, 100, 100, 100, 100],
        [100, 180, 180, 180, 180, 180, 180, 100],
        [100, 90, 80, 80, 80, 80, 90, 100],
        [100, 180, 80, 140, 70, 80, 90, 100],
        [100, 90, 80, 70, 70, 80, 90, 100],
        [100, 90, 80, 80, 80, 80, 90, 100],
        [100, 180, 180, 180, 180, 180, 180, 100],
        [100, 100, 100, 100, 100, 100, 100, 100],
    ];
    let pattern = [
        "........", ".######.", "........", ".#.#....", "........", "........", ".######.", "........",
    ];
    assert_eq!(out.image.as_u8().unwrap(), expected_merge(pattern, red).as_slice());
}

pub fn concat4_fixture() {
    let mut p = [[0.0f32; 8]; 8];
    p[0][1] = 0.25;
    p[0][2] = 0.5;
    p[0][3] = 1.0;
    p[5][5] = 0.75;
    let cfg = EnhanceConfig::new(Variant::Seg, Mode::Concat4);
    let out = enhance_sample(&image(), &probs(p), &mask(), &cfg, ("a", "b")).unwrap();
    assert_eq!(out.image.channels(), 4);
    let data = out.image.as_u8().unwrap();
    assert_eq!(&data[..3 * 64], image().as_u8().unwrap());
    let mut fourth = vec![0u8; 64];
    fourth[1] = 64;
    fourth[2] = 128;
    fourth[3] = 255;
    fourth[5 * 8 + 5] = 191;
    assert_eq!(&data[3 * 64..], fourth.as_slice());

    // Float input keeps the raw probabilities untouched.
    let unit = image().to_unit();
    let out = enhance_sample(&unit, &probs(p), &mask(), &cfg, ("a", "b")).unwrap();
    let data = out.image.as_unit().unwrap();
    assert_eq!(&data[3 * 64..], probs(p).values());
    assert_eq!(&data[..3 * 64], unit.as_unit().unwrap());
}

pub fn concat4_preprocessed_channel_is_the_multiplier() {
    let mut p = [[0.0f32; 8]; 8];
    p[4][4] = 0.7;
    let cfg = EnhanceConfig {
        preprocess_channel4: true,
        ..EnhanceConfig::new(Variant::Edge, Mode::Concat4)
    };
    let out = enhance_sample(&image().to_unit(), &probs(p), &mask(), &cfg, ("a", "b")).unwrap();
    let fourth = &out.image.as_unit().unwrap()[3 * 64..];
    for (i, &v) in fourth.iter().enumerate() {
        assert_eq!(v, if i == 4 * 8 + 4 { 1.0 } else { 0.5 });
    }
}
