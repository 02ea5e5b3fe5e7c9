//! Seg-DeNISE in 3-channel mode: threshold a probability map, dilate it,
//! and dim everything outside to half brightness.

use denise::enhance::{build_multiplier_seg, enhance_sample, EnhanceConfig, Mode, Variant};
use denise::{BinaryMask, ProbMap, Raster};

fn main() -> denise::Result<()> {
    let (w, h) = (12, 8);
    let image = Raster::from_u8(w, h, 3, vec![200; 3 * w * h])?;
    let mut probs = vec![0.1f32; w * h];
    probs[3 * w + 3] = 0.9;
    let probs = ProbMap::new(w, h, probs)?;

    let cfg = EnhanceConfig {
        dilation_radius: 2,
        ..EnhanceConfig::new(Variant::Seg, Mode::Merge3)
    };
    let multiplier = build_multiplier_seg(&probs, &cfg);
    for y in 0..h {
        let row: Vec<String> = (0..w).map(|x| format!("{:.1}", multiplier.get(x, y))).collect();
        println!("{}", row.join(" "));
    }

    let out = enhance_sample(&image, &probs, &BinaryMask::new(w, h), &cfg, ("tile", "stage1"))?;
    let red = &out.image.as_u8().unwrap()[..w];
    println!("first row of the red channel: {red:?}");
    println!("{}", out.provenance.line());
    Ok(())
}
