//! Two-stage data enhancement for binary segmentation.
//!
//! A first-stage model (segmentation probabilities or edge strengths) is run
//! over the input images; its predictions are fused into the images, either
//! by multiplying a thresholded, clipped (and for segmentation, dilated)
//! map into the pixels or by appending the raw map as a fourth channel. A
//! second-stage model then trains and predicts on the enhanced data, and the
//! result is scored with IoU and Boundary IoU.
//!
//! Module map:
//!
//! - [`raster`]: image / probability / mask containers and PNG + DPF I/O
//! - [`morphology`]: dilation, erosion, boundary bands
//! - [`enhance`]: the multiplier construction, 3-channel merge, 4-channel concat
//! - [`metrics`]: IoU, Boundary IoU, dataset evaluation, run comparison
//! - [`refmodels`]: patch logistic classifier, Sobel edges, prediction ingestion
//! - [`synth`]: synthetic aerial scenes, manifests, splits
//! - [`pipeline`]: the end-to-end commands behind the `denise` binary

pub mod config;
pub mod enhance;
pub mod error;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod raster;
pub mod refmodels;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{BinaryMask, Domain, ProbMap, Raster};
