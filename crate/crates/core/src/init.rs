//! Trimap initialization from four extreme clicks, plus the rectangle
//! baseline.
//!
//! The extreme-click pipeline:
//! 1. edge probability map of the image;
//! 2. minimum-cost paths top→right→bottom→left→top inside the click box;
//! 3. pseudo-mask: the paths plus the region they enclose around the click
//!    centroid;
//! 4. trimap: outside the box is definite background, the pseudo-mask is
//!    probable foreground, the rest of the box probable background; the
//!    pseudo-mask skeleton, the clicks and their centroid are clamped to
//!    definite foreground.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::edges::{edge_probability, min_cost_path, BoundaryPath, EdgeProbabilityMap};
use crate::error::{Error, Result};
use crate::morphology::morphological_skeleton;
use crate::raster::{BinaryMask, PixelRect, Point, RasterImage, Trimap, TrimapLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremeClicks {
    pub top: Point,
    pub bottom: Point,
    pub left: Point,
    pub right: Point,
}

impl ExtremeClicks {
    /// Assigns roles by coordinate extremes; ties go to the earlier point.
    pub fn from_unordered(points: [Point; 4]) -> Self {
        let pick = |better: &dyn Fn(&Point, &Point) -> bool| {
            let mut best = points[0];
            for p in &points[1..] {
                if better(p, &best) {
                    best = *p;
                }
            }
            best
        };
        Self {
            top: pick(&|p, b| p.y < b.y),
            bottom: pick(&|p, b| p.y > b.y),
            left: pick(&|p, b| p.x < b.x),
            right: pick(&|p, b| p.x > b.x),
        }
    }

    /// Traversal order used to pair clicks into boundary paths.
    pub fn cycle(&self) -> [Point; 4] {
        [self.top, self.right, self.bottom, self.left]
    }

    pub fn bounding_box(&self) -> PixelRect {
        PixelRect::bounding(&self.cycle()).expect("four points")
    }

    /// Centroid of the four clicks, rounded to the nearest pixel.
    pub fn centroid(&self) -> Point {
        let pts = self.cycle();
        let sx: usize = pts.iter().map(|p| p.x).sum();
        let sy: usize = pts.iter().map(|p| p.y).sum();
        Point::new(
            (sx as f64 / 4.0).round() as usize,
            (sy as f64 / 4.0).round() as usize,
        )
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        self.cycle().iter().all(|p| p.x < width && p.y < height)
    }

    pub fn is_consistent(&self) -> bool {
        self.top.y <= self.bottom.y && self.left.x <= self.right.x
    }
}

/// Boundary paths between consecutive clicks in [`ExtremeClicks::cycle`] order.
pub fn boundary_paths(edges: &EdgeProbabilityMap, clicks: &ExtremeClicks) -> Result<[BoundaryPath; 4]> {
    let bbox = clicks.bounding_box();
    let c = clicks.cycle();
    Ok([
        min_cost_path(edges, c[0], c[1], bbox)?,
        min_cost_path(edges, c[1], c[2], bbox)?,
        min_cost_path(edges, c[2], c[3], bbox)?,
        min_cost_path(edges, c[3], c[0], bbox)?,
    ])
}

/// Region enclosed by the boundary paths.
///
/// The centroid is flood-filled (4-connected) inside `bbox`, blocked by the
/// path pixels; the result is fill plus paths. If the centroid sits on a path
/// or the fill reaches the outer ring of the box, the boundary does not
/// enclose anything and the whole box is returned.
pub fn pseudo_mask(
    paths: &[BoundaryPath],
    clicks: &ExtremeClicks,
    bbox: PixelRect,
    width: usize,
    height: usize,
) -> BinaryMask {
    let mut boundary = BinaryMask::new(width, height);
    for p in paths.iter().flat_map(|p| &p.nodes) {
        boundary.set(p.x, p.y, true);
    }
    let fallback = || BinaryMask::from_rect(width, height, bbox);
    let seed = clicks.centroid();
    if boundary.get(seed.x, seed.y) || bbox.on_border(seed) {
        return fallback();
    }
    let mut region = boundary.clone();
    let mut queue = VecDeque::from([seed]);
    region.set(seed.x, seed.y, true);
    while let Some(p) = queue.pop_front() {
        if bbox.on_border(p) {
            return fallback();
        }
        // p is strictly inside the box, so its 4-neighbours are in the box
        for q in [
            Point::new(p.x - 1, p.y),
            Point::new(p.x + 1, p.y),
            Point::new(p.x, p.y - 1),
            Point::new(p.x, p.y + 1),
        ] {
            if !region.get(q.x, q.y) {
                region.set(q.x, q.y, true);
                queue.push_back(q);
            }
        }
    }
    region
}

/// Intermediate products of the extreme-click initialization.
#[derive(Debug, Clone)]
pub struct ExtrInit {
    pub bbox: PixelRect,
    pub paths: [BoundaryPath; 4],
    pub pseudo_mask: BinaryMask,
    pub skeleton: BinaryMask,
    pub trimap: Trimap,
}

pub fn init_extr(image: &RasterImage, clicks: &ExtremeClicks) -> Result<ExtrInit> {
    let (w, h) = (image.width(), image.height());
    if !clicks.within(w, h) {
        return Err(Error::ClicksOutOfBounds { width: w, height: h });
    }
    let edges = edge_probability(image);
    let paths = boundary_paths(&edges, clicks)?;
    let bbox = clicks.bounding_box();
    let pseudo = pseudo_mask(&paths, clicks, bbox, w, h);
    let skeleton = morphological_skeleton(&pseudo);

    let mut trimap = Trimap::new(w, h, TrimapLabel::DefiniteBg);
    for y in bbox.y0..=bbox.y1 {
        for x in bbox.x0..=bbox.x1 {
            let label = if pseudo.get(x, y) {
                TrimapLabel::ProbableFg
            } else {
                TrimapLabel::ProbableBg
            };
            trimap.set(x, y, label);
        }
    }
    for p in skeleton.points() {
        trimap.set(p.x, p.y, TrimapLabel::DefiniteFg);
    }
    for p in clicks.cycle().into_iter().chain([clicks.centroid()]) {
        trimap.set(p.x, p.y, TrimapLabel::DefiniteFg);
    }
    Ok(ExtrInit {
        bbox,
        paths,
        pseudo_mask: pseudo,
        skeleton,
        trimap,
    })
}

pub fn build_trimap_extr(image: &RasterImage, clicks: &ExtremeClicks) -> Result<Trimap> {
    init_extr(image, clicks).map(|init| init.trimap)
}

/// Inside the box is probable foreground, outside definite background.
pub fn build_trimap_rect(bbox: PixelRect, width: usize, height: usize) -> Result<Trimap> {
    if !bbox.fits(width, height) {
        return Err(Error::BoxOutOfBounds { width, height });
    }
    let mut trimap = Trimap::new(width, height, TrimapLabel::DefiniteBg);
    for y in bbox.y0..=bbox.y1 {
        for x in bbox.x0..=bbox.x1 {
            trimap.set(x, y, TrimapLabel::ProbableFg);
        }
    }
    Ok(trimap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(w: usize, h: usize) -> EdgeProbabilityMap {
        EdgeProbabilityMap::new(w, h, vec![1.0; w * h]).unwrap()
    }

    fn diamond() -> ExtremeClicks {
        ExtremeClicks {
            top: Point::new(5, 0),
            bottom: Point::new(5, 10),
            left: Point::new(0, 5),
            right: Point::new(10, 5),
        }
    }

    #[test]
    fn roles_from_unordered_points() {
        let pts = [Point::new(9, 5), Point::new(5, 9), Point::new(5, 0), Point::new(0, 5)];
        assert_eq!(
            ExtremeClicks::from_unordered(pts),
            ExtremeClicks {
                top: Point::new(5, 0),
                bottom: Point::new(5, 9),
                left: Point::new(0, 5),
                right: Point::new(9, 5),
            }
        );
        let tie = [Point::new(1, 0), Point::new(4, 0), Point::new(2, 3), Point::new(3, 3)];
        let c = ExtremeClicks::from_unordered(tie);
        assert_eq!(c.top, Point::new(1, 0));
        assert_eq!(c.bottom, Point::new(2, 3));
    }

    #[test]
    fn diamond_pseudo_mask_contains_paths_and_centroid() {
        let clicks = diamond();
        let edges = uniform(11, 11);
        let paths = boundary_paths(&edges, &clicks).unwrap();
        let bbox = clicks.bounding_box();
        let m = pseudo_mask(&paths, &clicks, bbox, 11, 11);
        for p in paths.iter().flat_map(|p| &p.nodes) {
            assert!(m.get(p.x, p.y));
        }
        assert!(m.get(5, 5));
        assert!(m.is_subset_of(&BinaryMask::from_rect(11, 11, bbox)));
        assert!(m.count() < bbox.area());
    }

    #[test]
    fn collinear_clicks_fall_back_to_box() {
        let clicks = ExtremeClicks {
            top: Point::new(2, 3),
            bottom: Point::new(6, 3),
            left: Point::new(2, 3),
            right: Point::new(6, 3),
        };
        let edges = uniform(8, 8);
        let paths = boundary_paths(&edges, &clicks).unwrap();
        let bbox = clicks.bounding_box();
        assert_eq!(
            pseudo_mask(&paths, &clicks, bbox, 8, 8),
            BinaryMask::from_rect(8, 8, bbox)
        );
    }

    #[test]
    fn square_outline_is_filled() {
        // high edge probability on the outline of [2,8]^2, low elsewhere
        let (w, h) = (11, 11);
        let mut prob = vec![0.01; w * h];
        for i in 2..=8 {
            for (x, y) in [(i, 2), (i, 8), (2, i), (8, i)] {
                prob[y * w + x] = 1.0;
            }
        }
        let edges = EdgeProbabilityMap::new(w, h, prob).unwrap();
        // corner clicks, so every leg runs straight along one side
        let clicks = ExtremeClicks {
            top: Point::new(2, 2),
            right: Point::new(8, 2),
            bottom: Point::new(8, 8),
            left: Point::new(2, 8),
        };
        let paths = boundary_paths(&edges, &clicks).unwrap();
        let m = pseudo_mask(&paths, &clicks, clicks.bounding_box(), w, h);
        // flood-fill oracle: every pixel of the closed square, nothing else
        let expected = BinaryMask::from_rect(w, h, PixelRect { x0: 2, y0: 2, x1: 8, y1: 8 });
        assert_eq!(m, expected);
    }

    #[test]
    fn rect_trimap_examples() {
        let full = build_trimap_rect(PixelRect { x0: 0, y0: 0, x1: 3, y1: 2 }, 4, 3).unwrap();
        assert_eq!(full.count(TrimapLabel::ProbableFg), 12);
        let one = build_trimap_rect(PixelRect { x0: 1, y0: 1, x1: 1, y1: 1 }, 4, 3).unwrap();
        assert_eq!(one.count(TrimapLabel::ProbableFg), 1);
        let t = build_trimap_rect(PixelRect { x0: 2, y0: 2, x1: 4, y1: 4 }, 6, 6).unwrap();
        assert_eq!(t.count(TrimapLabel::ProbableFg), 9);
        assert_eq!(t.count(TrimapLabel::DefiniteBg), 27);
        assert_eq!(t.count(TrimapLabel::DefiniteFg), 0);
        assert_eq!(
            build_trimap_rect(PixelRect { x0: 2, y0: 2, x1: 6, y1: 4 }, 6, 6),
            Err(Error::BoxOutOfBounds { width: 6, height: 6 })
        );
    }

    #[test]
    fn clicks_out_of_bounds() {
        let img = RasterImage::filled(8, 8, [0.0; 3]).unwrap();
        assert!(matches!(
            build_trimap_extr(&img, &diamond()),
            Err(Error::ClicksOutOfBounds { .. })
        ));
    }

    #[test]
    fn clicks_and_centroid_are_clamped() {
        let img = RasterImage::filled(16, 16, [30.0; 3]).unwrap();
        let clicks = ExtremeClicks {
            top: Point::new(7, 2),
            bottom: Point::new(9, 13),
            left: Point::new(3, 6),
            right: Point::new(12, 9),
        };
        let t = build_trimap_extr(&img, &clicks).unwrap();
        for p in clicks.cycle().into_iter().chain([clicks.centroid()]) {
            assert_eq!(t.get(p.x, p.y), TrimapLabel::DefiniteFg);
        }
        let bbox = clicks.bounding_box();
        for y in 0..16 {
            for x in 0..16 {
                if !bbox.contains(Point::new(x, y)) {
                    assert_eq!(t.get(x, y), TrimapLabel::DefiniteBg);
                }
            }
        }
    }
}
