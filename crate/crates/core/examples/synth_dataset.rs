//! Generate a small synthetic dataset, split it, and reload the manifest.

use denise::synth::{generate_dataset, load_manifest, save_manifest, split_dataset, SceneConfig, MANIFEST_FILE};

fn main() -> denise::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("denise-synth"), Into::into);
    let cfg = SceneConfig {
        occlusion_prob: 0.5,
        seed: 7,
        ..SceneConfig::default()
    };
    let manifest = generate_dataset(&cfg, 20, &out)?;
    let manifest = split_dataset(&manifest, (0.8, 0.1, 0.1), cfg.seed)?;
    save_manifest(&manifest, out.join(MANIFEST_FILE))?;

    let back = load_manifest(out.join(MANIFEST_FILE))?;
    println!("{} samples in {}", back.entries.len(), out.display());
    println!("split (train, val, test) = {:?}", back.split_counts());
    for e in back.entries.iter().take(3) {
        println!("  {} {} {}", e.id, e.image.display(), e.split.map_or("-".into(), |s| s.to_string()));
    }
    Ok(())
}
