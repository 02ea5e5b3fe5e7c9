//! The whole two-stage flow: baseline classifier, stage-1 edges, enhanced
//! dataset, second-stage classifier, and the comparison table.
//!
//! `cargo run --release --example full_pipeline -- [seg|edge] [merge3|concat4]`

use denise::enhance::EnhanceConfig;
use denise::pipeline::{cmd_pipeline, PipelineConfig, Stage1};

fn main() -> denise::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let variant = args.first().map_or("edge", String::as_str).parse()?;
    let mode = args.get(1).map_or("merge3", String::as_str).parse()?;

    let mut cfg = PipelineConfig::default().with_seed(7);
    cfg.images = 100;
    cfg.stage1 = Stage1::Sobel;
    cfg.enhance = EnhanceConfig::new(variant, mode);
    cfg.train.epochs = 5;
    cfg.train.learning_rate = 0.05;
    cfg.run_dir = std::env::temp_dir().join("denise-pipeline");

    let outcome = cmd_pipeline(&cfg)?;
    print!("{}", outcome.table());
    println!("artifacts in {}", outcome.run_dir.display());
    Ok(())
}
