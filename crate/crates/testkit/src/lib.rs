//! Slow, obviously-correct reference implementations used as test oracles.
//!
//! Nothing here shares code with the library under test; inputs and outputs
//! are plain slices so that the oracles cannot inherit a bug from it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Undirected pixel-pair edges of an 8-connected `w x h` grid, given
/// capacities laid out per pixel as `[east, south, south-east, south-west]`.
pub fn grid_edges(w: usize, h: usize, caps: &[[f64; 4]]) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let targets = [
                (x + 1 < w).then(|| p + 1),
                (y + 1 < h).then(|| p + w),
                (x + 1 < w && y + 1 < h).then(|| p + w + 1),
                (x > 0 && y + 1 < h).then(|| p + w - 1),
            ];
            for (dir, q) in targets.into_iter().enumerate() {
                if let Some(q) = q {
                    edges.push((p, q, caps[p][dir]));
                }
            }
        }
    }
    edges
}

/// Capacity of the cut where `in_source[p]` marks source-side pixels.
pub fn cut_value(source: &[f64], sink: &[f64], edges: &[(usize, usize, f64)], in_source: &[bool]) -> f64 {
    let mut total = 0.0;
    for p in 0..in_source.len() {
        // severing s->p when p is on the sink side, p->t otherwise
        total += if in_source[p] { sink[p] } else { source[p] };
    }
    for &(p, q, c) in edges {
        if in_source[p] != in_source[q] {
            total += c;
        }
    }
    total
}

/// Minimum over all `2^n` source/sink partitions.
pub fn min_cut_brute_force(source: &[f64], sink: &[f64], edges: &[(usize, usize, f64)]) -> f64 {
    let n = source.len();
    assert!(n <= 20, "exhaustive cut enumeration is exponential");
    (0u32..1 << n)
        .map(|bits| {
            let side: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            cut_value(source, sink, edges, &side)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cheapest simple 8-connected path from `a` to `b` over the whole grid,
/// where a path costs the sum of its node costs accumulated from `a`.
pub fn min_path_brute_force(w: usize, h: usize, cost: &[f64], a: (usize, usize), b: (usize, usize)) -> f64 {
    fn walk(
        w: usize,
        h: usize,
        cost: &[f64],
        at: (usize, usize),
        b: (usize, usize),
        acc: f64,
        seen: &mut Vec<bool>,
        best: &mut f64,
    ) {
        if acc >= *best {
            return;
        }
        if at == b {
            *best = acc;
            return;
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (at.0 as i64 + dx, at.1 as i64 + dy);
                if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if seen[q] {
                    continue;
                }
                seen[q] = true;
                walk(w, h, cost, (nx as usize, ny as usize), b, acc + cost[q], seen, best);
                seen[q] = false;
            }
        }
    }
    let mut seen = vec![false; w * h];
    seen[a.1 * w + a.0] = true;
    let mut best = f64::INFINITY;
    walk(w, h, cost, a, b, cost[a.1 * w + a.0], &mut seen, &mut best);
    best
}

fn shift(bits: &[bool], w: usize, h: usize, x: usize, y: usize, dx: i64, dy: i64) -> bool {
    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
    nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 && bits[ny as usize * w + nx as usize]
}

const CROSS: [(i64, i64); 5] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)];

fn erosion(bits: &[bool], w: usize, h: usize) -> Vec<bool> {
    (0..w * h)
        .map(|i| CROSS.iter().all(|&(dx, dy)| shift(bits, w, h, i % w, i / w, dx, dy)))
        .collect()
}

fn dilation(bits: &[bool], w: usize, h: usize) -> Vec<bool> {
    (0..w * h)
        .map(|i| CROSS.iter().any(|&(dx, dy)| shift(bits, w, h, i % w, i / w, dx, dy)))
        .collect()
}

/// Textbook Lantuéjoul skeleton with the cross element and a zero border.
pub fn skeleton_reference(w: usize, h: usize, bits: &[bool]) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let mut e = bits.to_vec();
    while e.iter().any(|b| *b) {
        let opened = dilation(&erosion(&e, w, h), w, h);
        for i in 0..w * h {
            out[i] |= e[i] && !opened[i];
        }
        e = erosion(&e, w, h);
    }
    out
}

/// Even-odd ray casting at `(px, py)`.
pub fn point_in_polygon(px: f64, py: f64, poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Draws `n` RGB samples from an isotropic two-component mixture.
pub fn mixture_samples(n: usize, seed: u64, means: [f64; 2], sigma: f64, first_weight: f64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    (0..n)
        .map(|_| {
            let m = if rng.random_bool(first_weight) { means[0] } else { means[1] };
            [
                m + noise.sample(&mut rng),
                m + noise.sample(&mut rng),
                m + noise.sample(&mut rng),
            ]
        })
        .collect()
}

/// `w x h` pixels of `ground` with `fill` on the inclusive rectangle.
pub fn rect_scene(w: usize, h: usize, rect: (usize, usize, usize, usize), fill: [f64; 3], ground: [f64; 3]) -> Vec<[f64; 3]> {
    let (x0, y0, x1, y1) = rect;
    (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if (x0..=x1).contains(&x) && (y0..=y1).contains(&y) {
                fill
            } else {
                ground
            }
        })
        .collect()
}
