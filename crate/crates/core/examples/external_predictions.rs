//! Feed predictions from another model into enhancement: write one DPF per
//! sample id into a directory, ingest it, and enhance.

use denise::enhance::{EnhanceConfig, Mode, Variant};
use denise::pipeline::enhance_dataset;
use denise::raster::write_prob_map;
use denise::refmodels::{ingest_predictions, sobel_edges};
use denise::synth::{generate_dataset, SceneConfig};

fn main() -> denise::Result<()> {
    let root = std::env::temp_dir().join("denise-external");
    let manifest = generate_dataset(&SceneConfig::default(), 5, &root.join("data"))?;

    // Stand-in for an external edge detector.
    let preds = root.join("external");
    std::fs::create_dir_all(&preds).map_err(|e| denise::Error::Io { path: preds.clone(), source: e })?;
    for e in &manifest.entries {
        let img = denise::raster::read_raster(manifest.image_path(e))?;
        write_prob_map(&sobel_edges(&img), preds.join(format!("{}.dpf", e.id)))?;
    }

    let maps = ingest_predictions(&preds, &manifest)?;
    println!("ingested {} prediction maps", maps.len());
    let cfg = EnhanceConfig::new(Variant::Edge, Mode::Concat4);
    let enhanced = enhance_dataset(&manifest, None, &preds, &cfg, &root.join("enhanced"))?;
    println!("{} enhanced samples; provenance:", enhanced.entries.len());
    for line in enhanced.provenance.iter().take(2) {
        println!("  {line}");
    }
    Ok(())
}
