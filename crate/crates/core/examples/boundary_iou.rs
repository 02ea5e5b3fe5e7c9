//! IoU versus Boundary IoU: a one-pixel shift barely moves IoU on a large
//! square but costs much more at the boundary.

use denise::metrics::{boundary_iou, iou, BandWidth, MetricsConfig};
use denise::BinaryMask;

fn square(x0: usize, y0: usize, side: usize) -> BinaryMask {
    let mut m = BinaryMask::new(64, 64);
    for y in y0..y0 + side {
        for x in x0..x0 + side {
            m.set(x, y, true);
        }
    }
    m
}

fn main() -> denise::Result<()> {
    let truth = square(10, 10, 40);
    let pred = square(11, 11, 40);
    println!("IoU                 {:.4}", iou(&pred, &truth)?);
    let default = MetricsConfig::default();
    println!(
        "BIoU d={} (default)  {:.4}",
        default.band.resolve(64, 64),
        boundary_iou(&pred, &truth, &default)?
    );
    for d in [1, 5, 91] {
        let cfg = MetricsConfig {
            band: BandWidth::Pixels(d),
            ..MetricsConfig::default()
        };
        println!("BIoU d={d:<2}           {:.4}", boundary_iou(&pred, &truth, &cfg)?);
    }
    Ok(())
}
