mod common;

use common::enhance_fixtures as fx;
use denise::enhance::{enhance_sample, EnhanceConfig, Mode, Variant};
use denise::{BinaryMask, ProbMap, Raster};

#[test]
fn seg_merge3_fixture() {
    fx::seg_merge3_fixture();
}

#[test]
fn seg_merge3_default_radius_covers_small_tile() {
    fx::seg_merge3_default_radius_covers_small_tile();
}

#[test]
fn edge_merge3_fixture() {
    fx::edge_merge3_fixture();
}

#[test]
fn concat4_fixture() {
    fx::concat4_fixture();
}

#[test]
fn concat4_preprocessed_channel_is_the_multiplier() {
    fx::concat4_preprocessed_channel_is_the_multiplier();
}

#[test]
fn rejects_wrong_channel_count_and_size() {
    let cfg = EnhanceConfig::new(Variant::Edge, Mode::Merge3);
    let gray = Raster::from_u8(8, 8, 1, vec![0; 64]).unwrap();
    let p = ProbMap::filled(8, 8, 0.0).unwrap();
    assert!(enhance_sample(&gray, &p, &fx::mask(), &cfg, ("a", "b")).is_err());
    let small = ProbMap::filled(4, 8, 0.0).unwrap();
    assert!(enhance_sample(&fx::image(), &small, &fx::mask(), &cfg, ("a", "b")).is_err());
    assert!(enhance_sample(&fx::image(), &p, &BinaryMask::new(8, 4), &cfg, ("a", "b")).is_err());
}
