//! Edge-DeNISE in 3-channel mode: Sobel edges of a mask keep their pixels at
//! full brightness, everything else is halved.

use denise::enhance::{build_multiplier_edge, enhance_sample, EnhanceConfig, Mode, Variant};
use denise::refmodels::sobel_edges;
use denise::{BinaryMask, Raster};

fn main() -> denise::Result<()> {
    let (w, h) = (16, 12);
    let mut mask = BinaryMask::new(w, h);
    for y in 3..9 {
        for x in 4..12 {
            mask.set(x, y, true);
        }
    }
    let edges = sobel_edges(&mask.to_raster());
    let cfg = EnhanceConfig::new(Variant::Edge, Mode::Merge3);
    let multiplier = build_multiplier_edge(&edges, &cfg);
    for y in 0..h {
        let row: String = (0..w).map(|x| if multiplier.get(x, y) == 1.0 { '@' } else { '.' }).collect();
        println!("{row}");
    }

    let image = Raster::from_u8(w, h, 3, vec![180; 3 * w * h])?;
    let out = enhance_sample(&image, &edges, &mask, &cfg, ("tile", "edges"))?;
    println!("{}: pixel (0,0) -> {}", cfg.method_label(), out.image.as_u8().unwrap()[0]);
    Ok(())
}
