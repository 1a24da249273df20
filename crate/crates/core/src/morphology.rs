//! Binary morphology with the 3x3 cross structuring element. Pixels outside
//! the image count as background.

use crate::raster::{BinaryMask, PixelRect};

fn cross_neighbors(m: &BinaryMask, x: usize, y: usize) -> [Option<bool>; 4] {
    let (w, h) = m.dims();
    [
        (x > 0).then(|| m.get(x - 1, y)),
        (x + 1 < w).then(|| m.get(x + 1, y)),
        (y > 0).then(|| m.get(x, y - 1)),
        (y + 1 < h).then(|| m.get(x, y + 1)),
    ]
}

pub fn erode(m: &BinaryMask) -> BinaryMask {
    let (w, h) = m.dims();
    let mut out = BinaryMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let keep = m.get(x, y) && cross_neighbors(m, x, y).iter().all(|n| *n == Some(true));
            out.set(x, y, keep);
        }
    }
    out
}

pub fn dilate(m: &BinaryMask) -> BinaryMask {
    let (w, h) = m.dims();
    let mut out = BinaryMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let hit = m.get(x, y) || cross_neighbors(m, x, y).iter().any(|n| *n == Some(true));
            out.set(x, y, hit);
        }
    }
    out
}

pub fn open(m: &BinaryMask) -> BinaryMask {
    dilate(&erode(m))
}

/// Lantuéjoul skeleton: the union over k of `E^k(M) \ open(E^k(M))`, where
/// `E^k` is the k-fold erosion, until the erosion is empty.
///
/// A pixel of `E^k` survives the opening iff it or a cross neighbor is in
/// `E^(k+1)`, so each round needs one erosion, restricted to the shrinking
/// bounding box of the current set.
pub fn morphological_skeleton(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut skeleton = BinaryMask::new(w, h);
    let Some(mut bbox) = mask.bounding_box() else {
        return skeleton;
    };
    let mut cur: Vec<bool> = (0..w * h).map(|i| mask.get(i % w, i / w)).collect();
    let mut next = vec![false; w * h];
    loop {
        let at = |v: &[bool], x: usize, y: usize| v[y * w + x];
        let (mut nx0, mut ny0, mut nx1, mut ny1) = (usize::MAX, usize::MAX, 0, 0);
        for y in bbox.y0..=bbox.y1 {
            for x in bbox.x0..=bbox.x1 {
                let keep = at(&cur, x, y)
                    && x > 0
                    && y > 0
                    && x + 1 < w
                    && y + 1 < h
                    && at(&cur, x - 1, y)
                    && at(&cur, x + 1, y)
                    && at(&cur, x, y - 1)
                    && at(&cur, x, y + 1);
                next[y * w + x] = keep;
                if keep {
                    (nx0, ny0, nx1, ny1) = (nx0.min(x), ny0.min(y), nx1.max(x), ny1.max(y));
                }
            }
        }
        for y in bbox.y0..=bbox.y1 {
            for x in bbox.x0..=bbox.x1 {
                if !at(&cur, x, y) {
                    continue;
                }
                let opened = at(&next, x, y)
                    || (x > 0 && at(&next, x - 1, y))
                    || (x + 1 < w && at(&next, x + 1, y))
                    || (y > 0 && at(&next, x, y - 1))
                    || (y + 1 < h && at(&next, x, y + 1));
                if !opened {
                    skeleton.set(x, y, true);
                }
            }
        }
        if nx0 == usize::MAX {
            return skeleton;
        }
        std::mem::swap(&mut cur, &mut next);
        for y in bbox.y0..=bbox.y1 {
            next[y * w + bbox.x0..=y * w + bbox.x1].fill(false);
        }
        bbox = PixelRect { x0: nx0, y0: ny0, x1: nx1, y1: ny1 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_skeleton_is_itself() {
        let mut m = BinaryMask::new(5, 5);
        m.set(2, 3, true);
        assert_eq!(morphological_skeleton(&m), m);
    }

    #[test]
    fn thin_line_is_its_own_skeleton() {
        let m = BinaryMask::from_rect(9, 3, PixelRect { x0: 1, y0: 1, x1: 7, y1: 1 });
        assert_eq!(morphological_skeleton(&m), m);
    }

    // golden from an independent scipy.ndimage run of the same construction
    // (cross element, zero border), square padded by 2 on each side
    #[test]
    fn filled_square_skeleton_golden() {
        let m = BinaryMask::from_rect(9, 9, PixelRect { x0: 2, y0: 2, x1: 6, y1: 6 });
        let golden = [
            "10001", //
            "01010", //
            "00100", //
            "01010", //
            "10001",
        ];
        let s = morphological_skeleton(&m);
        for y in 0..9 {
            for x in 0..9 {
                let want = (2..7).contains(&x) && (2..7).contains(&y) && golden[y - 2].as_bytes()[x - 2] == b'1';
                assert_eq!(s.get(x, y), want, "({x},{y})");
            }
        }
    }

    #[test]
    fn empty_mask() {
        let m = BinaryMask::new(4, 4);
        assert!(morphological_skeleton(&m).is_empty());
    }

    #[test]
    fn erosion_treats_outside_as_background() {
        let full = BinaryMask::from_rect(3, 3, PixelRect { x0: 0, y0: 0, x1: 2, y1: 2 });
        let e = erode(&full);
        assert_eq!(e.count(), 1);
        assert!(e.get(1, 1));
        assert_eq!(dilate(&e).count(), 5);
    }
}
