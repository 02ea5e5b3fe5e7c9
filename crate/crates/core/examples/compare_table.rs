//! Render a comparison table from two metrics reports. The numbers are the
//! published U-Net rows, used here purely as sample input.

use denise::metrics::{compare_runs, ImageMetrics, MetricsConfig, MetricsReport};

fn report(method: &str, iou: f64, biou: f64) -> MetricsReport {
    let row = ImageMetrics {
        id: "all".into(),
        iou,
        biou,
        vacuous: false,
    };
    MetricsReport::new("U-Net", method, MetricsConfig::default(), vec![row])
}

fn main() -> denise::Result<()> {
    let baseline = report("Standalone", 0.7657, 0.6279);
    let enhanced = report("Edge-DeNISE (3-channels)", 0.7742, 0.6445);
    print!("{}", compare_runs(&baseline, &enhanced)?.render());
    Ok(())
}
