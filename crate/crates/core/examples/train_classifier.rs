//! Train the patch classifier on a synthetic split and score it on the
//! test split.

use denise::metrics::{binarize, score_image, MetricsConfig};
use denise::refmodels::{predict, train, TrainConfig};
use denise::synth::{generate_dataset, split_dataset, SceneConfig, Split};

fn main() -> denise::Result<()> {
    let tmp = std::env::temp_dir().join("denise-train");
    let manifest = generate_dataset(&SceneConfig::default(), 60, &tmp)?;
    let manifest = split_dataset(&manifest, (0.8, 0.1, 0.1), 0)?;
    let train_set: Vec<_> = manifest
        .load_split(Split::Train)?
        .into_iter()
        .map(|(_, img, mask)| (img, mask))
        .collect();

    let cfg = TrainConfig {
        epochs: 10,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let trained = train(&train_set, &cfg)?;
    for (epoch, loss) in trained.epoch_losses.iter().enumerate() {
        println!("epoch {epoch:>2}  loss {loss:.4}");
    }

    let metrics = MetricsConfig::default();
    for (id, img, mask) in manifest.load_split(Split::Test)? {
        let pred = binarize(&predict(&trained.model, &img)?, &metrics);
        let s = score_image(&id, &pred, &mask, &metrics)?;
        println!("{id}: IoU {:.3}  BIoU {:.3}", s.iou, s.biou);
    }
    Ok(())
}
