mod common;

use common::{gradient_check, random_problem, rng, toy_dataset};
use denise::refmodels::{ingest_predictions, predict, sobel_edges, train, PatchClassifier, TrainConfig};
use denise::raster::write_prob_map;
use denise::synth::{generate_dataset, SceneConfig};
use denise::{Error, ProbMap, Raster};

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(31);
    for channels in [3, 4] {
        for _ in 0..3 {
            let (model, batch) = random_problem(&mut r, channels);
            let err = gradient_check(&model, &batch, 1e-5);
            assert!(err < 1e-4, "channels={channels} max relative error {err}");
        }
    }
}

fn fast() -> TrainConfig {
    TrainConfig {
        epochs: 15,
        learning_rate: 0.05,
        batch_size: 4,
        patch_radius: 1,
        seed: 9,
    }
}

#[test]
fn training_reduces_loss_and_separates_classes() {
    let data = toy_dataset(1, 16);
    let trained = train(&data, &fast()).unwrap();
    let losses = &trained.epoch_losses;
    assert_eq!(losses.len(), 15);
    assert!(losses.last().unwrap() < &(losses[0] * 0.7), "{losses:?}");

    let (img, mask) = &toy_dataset(2, 1)[0];
    let p = predict(&trained.model, img).unwrap();
    let (mut fg, mut bg) = (0.0, 0.0);
    for (v, &b) in p.values().iter().zip(mask.bits()) {
        if b {
            fg += *v as f64 / mask.count() as f64;
        } else {
            bg += *v as f64 / (256 - mask.count()) as f64;
        }
    }
    assert!(fg > bg + 0.3, "foreground {fg} background {bg}");
}

#[test]
fn training_is_deterministic_per_seed() {
    let data = toy_dataset(3, 8);
    let a = train(&data, &fast()).unwrap();
    let b = train(&data, &fast()).unwrap();
    assert_eq!(a.model, b.model);
    let c = train(&data, &TrainConfig { seed: 10, ..fast() }).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn training_rejects_mixed_channels() {
    let mut data = toy_dataset(4, 2);
    data[1].0 = data[1].0.to_unit();
    data.push((Raster::from_u8(16, 16, 1, vec![0; 256]).unwrap(), data[0].1.clone()));
    assert!(matches!(train(&data, &fast()), Err(Error::ChannelMismatch { .. })));
}

#[test]
fn checkpoint_round_trip_predicts_identically() {
    let data = toy_dataset(5, 4);
    let model = train(&data, &fast()).unwrap().model;
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.dnw");
    model.save(&path).unwrap();
    let loaded = PatchClassifier::load(&path).unwrap();
    // Weights are stored as f32; normalization stats keep full precision.
    let quantized: Vec<f64> = model.weights.iter().map(|&w| w as f32 as f64).collect();
    assert_eq!(loaded.weights, quantized);
    assert_eq!((&loaded.mean, &loaded.std), (&model.mean, &model.std));
    let (a, b) = (predict(&loaded, &data[0].0).unwrap(), predict(&model, &data[0].0).unwrap());
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() < 1e-5));
}

fn rotate90(img: &Raster) -> Raster {
    let (w, h) = img.dims();
    let src = img.as_u8().unwrap();
    let mut out = vec![0u8; src.len()];
    for c in 0..img.channels() {
        for y in 0..h {
            for x in 0..w {
                // (x, y) -> (h - 1 - y, x)
                out[c * w * h + x * h + (h - 1 - y)] = src[c * w * h + y * w + x];
            }
        }
    }
    Raster::from_u8(h, w, img.channels(), out).unwrap()
}

#[test]
fn sobel_is_rotation_and_offset_invariant() {
    let (img, _) = &toy_dataset(6, 1)[0];
    let e = sobel_edges(img);
    let er = sobel_edges(&rotate90(img));
    for y in 0..16 {
        for x in 0..16 {
            assert!((er.get(15 - y, x) - e.get(x, y)).abs() < 1e-6);
        }
    }
    let shifted: Vec<u8> = img.as_u8().unwrap().iter().map(|&v| v - 10).collect();
    // Pixels are at least 40, so subtracting 10 is a true constant offset.
    assert!(img.as_u8().unwrap().iter().all(|&v| v >= 40));
    let shifted = Raster::from_u8(16, 16, 3, shifted).unwrap();
    assert_eq!(sobel_edges(&shifted), e);
}

#[test]
fn sobel_of_flat_image_is_zero() {
    let flat = Raster::from_u8(5, 5, 3, vec![77; 75]).unwrap();
    assert!(sobel_edges(&flat).values().iter().all(|&v| v == 0.0));
}

#[test]
fn ingest_reports_missing_and_mismatched() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SceneConfig {
        image_size: 32,
        ..SceneConfig::default()
    };
    let manifest = generate_dataset(&cfg, 4, &tmp.path().join("data")).unwrap();
    let preds = tmp.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    for e in &manifest.entries {
        write_prob_map(&ProbMap::filled(32, 32, 0.3).unwrap(), preds.join(format!("{}.dpf", e.id))).unwrap();
    }
    assert_eq!(ingest_predictions(&preds, &manifest).unwrap().len(), 4);

    let gone = &manifest.entries[2].id;
    std::fs::remove_file(preds.join(format!("{gone}.dpf"))).unwrap();
    match ingest_predictions(&preds, &manifest) {
        Err(Error::MissingSamples(ids)) => assert_eq!(ids, vec![gone.clone()]),
        other => panic!("expected missing samples, got {other:?}"),
    }

    write_prob_map(&ProbMap::filled(32, 32, 0.3).unwrap(), preds.join(format!("{gone}.dpf"))).unwrap();
    let odd = &manifest.entries[1].id;
    write_prob_map(&ProbMap::filled(31, 32, 0.3).unwrap(), preds.join(format!("{odd}.dpf"))).unwrap();
    let err = ingest_predictions(&preds, &manifest).unwrap_err();
    assert!(err.to_string().contains(odd.as_str()), "{err}");
}
