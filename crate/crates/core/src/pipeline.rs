//! End-to-end entry points shared by the command line, the HTTP service and
//! the evaluation harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grabcut::{segment, SegmentationConfig, SegmentationResult};
use crate::init::{build_trimap_extr, build_trimap_rect, ExtremeClicks};
use crate::raster::{PixelRect, Point, RasterImage};

/// Trimap initialization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Boundary paths between four extreme clicks.
    Extr,
    /// Plain bounding box.
    Rect,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Extr => "extr",
            Mode::Rect => "rect",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "extr" => Ok(Mode::Extr),
            "rect" => Ok(Mode::Rect),
            other => Err(format!("unknown mode '{other}', expected extr or rect")),
        }
    }
}

/// Region implied by four user points: extreme clicks for `extr`, the box
/// spanned by the first and third point for `rect`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Clicks(ExtremeClicks),
    Box(PixelRect),
}

impl Region {
    pub fn from_points(points: [Point; 4], mode: Mode) -> Self {
        match mode {
            Mode::Extr => Region::Clicks(ExtremeClicks::from_unordered(points)),
            Mode::Rect => Region::Box(PixelRect::from_corners(points[0], points[2])),
        }
    }

    pub fn bounding_box(&self) -> PixelRect {
        match self {
            Region::Clicks(c) => c.bounding_box(),
            Region::Box(b) => *b,
        }
    }

    /// A box one pixel wide or tall encloses no area.
    pub fn is_degenerate(&self) -> bool {
        let b = self.bounding_box();
        b.width() < 2 || b.height() < 2
    }
}

pub fn segment_region(image: &RasterImage, region: &Region, config: &SegmentationConfig) -> Result<SegmentationResult> {
    let trimap = match region {
        Region::Clicks(clicks) => build_trimap_extr(image, clicks)?,
        Region::Box(b) => build_trimap_rect(*b, image.width(), image.height())?,
    };
    segment(image, &trimap, config)
}

/// Validates four user points against the image and segments them.
pub fn segment_points(
    image: &RasterImage,
    points: [Point; 4],
    mode: Mode,
    config: &SegmentationConfig,
) -> Result<SegmentationResult> {
    let (w, h) = (image.width(), image.height());
    if points.iter().any(|p| p.x >= w || p.y >= h) {
        return Err(Error::ClicksOutOfBounds { width: w, height: h });
    }
    let region = Region::from_points(points, mode);
    if region.is_degenerate() {
        return Err(Error::DegenerateRegion);
    }
    segment_region(image, &region, config)
}
