//! Edge probability from Sobel gradients, and minimum-cost boundary paths
//! through the resulting `-ln p` cost field.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::raster::{to_grayscale, PixelRect, Point, RasterImage};

/// Probability floor; keeps `-ln p` finite.
pub const EDGE_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbabilityMap {
    width: usize,
    height: usize,
    prob: Vec<f64>,
}

impl EdgeProbabilityMap {
    /// Values are clamped into `[EDGE_EPSILON, 1]`.
    pub fn new(width: usize, height: usize, prob: Vec<f64>) -> Result<Self> {
        if prob.len() != width * height || width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let prob = prob
            .into_iter()
            .map(|p| if p.is_nan() { EDGE_EPSILON } else { p.clamp(EDGE_EPSILON, 1.0) })
            .collect();
        Ok(Self { width, height, prob })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.prob
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.prob[y * self.width + x]
    }

    /// `-ln p` at a pixel.
    pub fn cost(&self, p: Point) -> f64 {
        -self.get(p.x, p.y).ln()
    }
}

/// Sobel gradient magnitude of the luma channel (replicated borders),
/// divided by its global maximum and clamped to `[EDGE_EPSILON, 1]`.
pub fn edge_probability(image: &RasterImage) -> EdgeProbabilityMap {
    let (w, h) = (image.width(), image.height());
    let luma = to_grayscale(image);
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        luma[y * w + x]
    };
    let mut mag = vec![0.0; w * h];
    let mut max = 0.0f64;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let m = gx.hypot(gy);
            mag[y as usize * w + x as usize] = m;
            max = max.max(m);
        }
    }
    let prob = if max > 0.0 {
        mag.into_iter().map(|m| m / max).collect()
    } else {
        vec![EDGE_EPSILON; w * h]
    };
    EdgeProbabilityMap::new(w, h, prob).expect("dimensions come from a valid image")
}

/// Ordered 8-connected pixel chain and its summed `-ln p` node cost.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPath {
    pub nodes: Vec<Point>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    hops: usize,
    index: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the 8-connected pixels of `bbox`, paying `-ln p` on every
/// node entered including both endpoints. Among equal-cost routes the one
/// with fewer nodes wins; remaining ties settle in row-major order.
pub fn min_cost_path(
    costs: &EdgeProbabilityMap,
    a: Point,
    b: Point,
    bbox: PixelRect,
) -> Result<BoundaryPath> {
    if !bbox.fits(costs.width, costs.height) {
        return Err(Error::BoxOutOfBounds {
            width: costs.width,
            height: costs.height,
        });
    }
    for p in [a, b] {
        if !bbox.contains(p) {
            return Err(Error::PointOutsideBox { x: p.x, y: p.y });
        }
    }
    let (bw, bh) = (bbox.width(), bbox.height());
    let local = |p: Point| (p.y - bbox.y0) * bw + (p.x - bbox.x0);
    let global = |i: usize| Point::new(bbox.x0 + i % bw, bbox.y0 + i / bw);
    let node_cost: Vec<f64> = (0..bw * bh).map(|i| costs.cost(global(i))).collect();

    let mut dist = vec![f64::INFINITY; bw * bh];
    let mut hops = vec![usize::MAX; bw * bh];
    let mut prev = vec![usize::MAX; bw * bh];
    let mut done = vec![false; bw * bh];
    let mut heap = BinaryHeap::new();
    let (start, goal) = (local(a), local(b));
    dist[start] = node_cost[start];
    hops[start] = 0;
    heap.push(HeapEntry {
        cost: dist[start],
        hops: 0,
        index: start,
    });
    while let Some(HeapEntry { cost, hops: h, index }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        if index == goal {
            break;
        }
        let (x, y) = ((index % bw) as isize, (index / bw) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= bw as isize || ny >= bh as isize {
                    continue;
                }
                let n = ny as usize * bw + nx as usize;
                if done[n] {
                    continue;
                }
                let candidate = cost + node_cost[n];
                if candidate < dist[n] || (candidate == dist[n] && h + 1 < hops[n]) {
                    dist[n] = candidate;
                    hops[n] = h + 1;
                    prev[n] = index;
                    heap.push(HeapEntry {
                        cost: candidate,
                        hops: h + 1,
                        index: n,
                    });
                }
            }
        }
    }
    let mut nodes = vec![b];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        nodes.push(global(cur));
    }
    nodes.reverse();
    Ok(BoundaryPath {
        nodes,
        cost: dist[goal],
    })
}
