use extrseg_core::edges::{edge_probability, min_cost_path, EdgeProbabilityMap, EDGE_EPSILON};
use extrseg_core::eval::extract_extreme_points;
use extrseg_core::init::{build_trimap_extr, init_extr, ExtremeClicks};
use extrseg_core::morphology::morphological_skeleton;
use extrseg_core::raster::{BinaryMask, PixelRect, Point, RasterImage, TrimapLabel};
use extrseg_testkit::{min_path_brute_force, skeleton_reference};
use proptest::prelude::*;

fn mask_strategy(max: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.6), w * h)
            .prop_map(move |bits| BinaryMask::from_bits(w, h, bits).unwrap())
    })
}

fn image_strategy(w: usize, h: usize) -> impl Strategy<Value = RasterImage> {
    prop::collection::vec(any::<u8>(), w * h * 3).prop_map(move |b| RasterImage::from_rgb8(w, h, &b).unwrap())
}

fn point_in(w: usize, h: usize) -> impl Strategy<Value = Point> {
    (0..w, 0..h).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #[test]
    fn skeleton_is_a_nonempty_subset(mask in mask_strategy(20)) {
        let s = morphological_skeleton(&mask);
        prop_assert!(s.is_subset_of(&mask));
        prop_assert_eq!(s.is_empty(), mask.is_empty());
        let reference = skeleton_reference(mask.width(), mask.height(), mask.bits());
        prop_assert_eq!(s.bits(), &reference[..]);
    }

    #[test]
    fn extreme_points_lie_on_mask_and_span_its_box(mask in mask_strategy(16)) {
        prop_assume!(!mask.is_empty());
        let c = extract_extreme_points(&mask).unwrap();
        for p in c.cycle() {
            prop_assert!(mask.get(p.x, p.y));
        }
        prop_assert_eq!(Some(c.bounding_box()), mask.bounding_box());
        prop_assert!(c.is_consistent());
    }

    #[test]
    fn path_costs_match_exhaustive_search(probs in prop::collection::vec(EDGE_EPSILON..=1.0f64, 16)) {
        let map = EdgeProbabilityMap::new(4, 4, probs).unwrap();
        let costs: Vec<f64> = map.values().iter().map(|p| -p.ln()).collect();
        let full = PixelRect { x0: 0, y0: 0, x1: 3, y1: 3 };
        for a in 0..16 {
            for b in 0..16 {
                let (pa, pb) = (Point::new(a % 4, a / 4), Point::new(b % 4, b / 4));
                let path = min_cost_path(&map, pa, pb, full).unwrap();
                let best = min_path_brute_force(4, 4, &costs, (pa.x, pa.y), (pb.x, pb.y));
                prop_assert_eq!(path.cost, best);
                prop_assert_eq!(path.nodes.first(), Some(&pa));
                prop_assert_eq!(path.nodes.last(), Some(&pb));
            }
        }
    }

    #[test]
    fn paths_are_deterministic_and_connected(img in image_strategy(12, 9), a in point_in(12, 9), b in point_in(12, 9)) {
        let map = edge_probability(&img);
        let bbox = PixelRect::from_corners(a, b);
        let p1 = min_cost_path(&map, a, b, bbox).unwrap();
        let p2 = min_cost_path(&map, a, b, bbox).unwrap();
        prop_assert_eq!(&p1, &p2);
        for w in p1.nodes.windows(2) {
            let (dx, dy) = (w[0].x.abs_diff(w[1].x), w[0].y.abs_diff(w[1].y));
            prop_assert!(dx <= 1 && dy <= 1 && dx + dy > 0);
        }
        let sum: f64 = p1.nodes.iter().map(|p| map.cost(*p)).sum();
        prop_assert!((sum - p1.cost).abs() <= 1e-9 * sum.max(1.0));
    }

    #[test]
    fn edge_probabilities_in_range(img in image_strategy(9, 7)) {
        let map = edge_probability(&img);
        for v in map.values() {
            prop_assert!((EDGE_EPSILON..=1.0).contains(v));
            prop_assert!((-v.ln()).is_finite());
        }
    }

    #[test]
    fn trimap_respects_click_box(img in image_strategy(14, 11), pts in prop::array::uniform4(point_in(14, 11))) {
        let clicks = ExtremeClicks::from_unordered(pts);
        let trimap = build_trimap_extr(&img, &clicks).unwrap();
        let bbox = clicks.bounding_box();
        for y in 0..11 {
            for x in 0..14 {
                if !bbox.contains(Point::new(x, y)) {
                    prop_assert_eq!(trimap.get(x, y), TrimapLabel::DefiniteBg);
                }
            }
        }
        for p in clicks.cycle().into_iter().chain([clicks.centroid()]) {
            prop_assert_eq!(trimap.get(p.x, p.y), TrimapLabel::DefiniteFg);
        }
    }
}

#[test]
fn disk_with_extreme_clicks() {
    let (w, h) = (48, 48);
    let (cx, cy, r) = (24.0, 24.0, 15.0);
    let inside = |x: usize, y: usize| (x as f64 + 0.5 - cx).hypot(y as f64 + 0.5 - cy) <= r;
    let px: Vec<[f64; 3]> = (0..w * h)
        .map(|i| if inside(i % w, i / w) { [230.0, 200.0, 40.0] } else { [30.0, 60.0, 120.0] })
        .collect();
    let img = RasterImage::new(w, h, px).unwrap();
    let mut disk = BinaryMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            disk.set(x, y, inside(x, y));
        }
    }
    let clicks = extract_extreme_points(&disk).unwrap();
    let init = init_extr(&img, &clicks).unwrap();

    assert!(!init.skeleton.is_empty());
    assert!(init.skeleton.is_subset_of(&disk), "skeleton leaks outside the disk");
    for p in init.skeleton.points() {
        assert_eq!(init.trimap.get(p.x, p.y), TrimapLabel::DefiniteFg);
    }
    let b = init.bbox;
    for corner in [(b.x0, b.y0), (b.x1, b.y0), (b.x0, b.y1), (b.x1, b.y1)] {
        assert_eq!(init.trimap.get(corner.0, corner.1), TrimapLabel::ProbableBg);
    }
    assert!(init.pseudo_mask.is_subset_of(&BinaryMask::from_rect(w, h, b)));
}
