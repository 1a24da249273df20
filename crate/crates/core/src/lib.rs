//! Extreme-click GrabCut segmentation.
//!
//! The crate covers the whole path from four clicks to a scored mask:
//!
//! * [`raster`]: images, masks, trimaps, polygon fill, run-length coding, IoU
//! * [`color_model`]: Gaussian mixture appearance models
//! * [`mincut`]: pixel graph construction and max-flow
//! * [`edges`], [`morphology`], [`init`]: trimap initialization from clicks
//! * [`grabcut`]: the iterative segmentation loop
//! * [`pipeline`]: shared entry points for CLI and service
//! * [`annotations`], [`eval`], [`synth`]: the evaluation harness

pub mod annotations;
pub mod color_model;
pub mod edges;
pub mod error;
pub mod eval;
pub mod grabcut;
pub mod init;
pub mod mincut;
pub mod morphology;
pub mod pipeline;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use grabcut::{segment, SegmentationConfig, SegmentationResult};
pub use pipeline::{segment_points, Mode, Region};
pub use raster::{BinaryMask, PixelRect, Point, RasterImage, Trimap, TrimapLabel};
