//! 4-channel mode: the prediction map becomes an extra image channel.

use denise::enhance::{enhance_sample, EnhanceConfig, Mode, Variant};
use denise::{BinaryMask, ProbMap, Raster};

fn main() -> denise::Result<()> {
    let (w, h) = (4, 2);
    let image = Raster::from_u8(w, h, 3, (0..3 * w * h).map(|v| (v * 10) as u8).collect())?;
    let probs = ProbMap::new(w, h, vec![0.0, 0.25, 0.5, 1.0, 0.9, 0.1, 0.7, 0.3])?;
    let mask = BinaryMask::new(w, h);

    let raw = EnhanceConfig::new(Variant::Seg, Mode::Concat4);
    let float = enhance_sample(&image.to_unit(), &probs, &mask, &raw, ("a", "p"))?;
    println!("float input, channel 4: {:?}", &float.image.as_unit().unwrap()[3 * w * h..]);
    let bytes = enhance_sample(&image, &probs, &mask, &raw, ("a", "p"))?;
    println!("8-bit input, channel 4: {:?}", &bytes.image.as_u8().unwrap()[3 * w * h..]);

    let pre = EnhanceConfig {
        preprocess_channel4: true,
        ..EnhanceConfig::new(Variant::Edge, Mode::Concat4)
    };
    let multiplied = enhance_sample(&image.to_unit(), &probs, &mask, &pre, ("a", "p"))?;
    println!("multiplier as channel 4: {:?}", &multiplied.image.as_unit().unwrap()[3 * w * h..]);
    Ok(())
}
