//! s/t pixel graph construction and an exact max-flow/min-cut solver.
//!
//! The solver is a Boykov–Kolmogorov augmenting-path implementation: two
//! search trees grow from the terminals, paths are augmented where the
//! trees touch, and orphaned subtrees are re-adopted instead of rebuilding
//! the search from scratch. This behaves well on grid graphs where most
//! augmenting paths are short.

use std::collections::VecDeque;

use crate::color_model::{neg_log_density, ColorMixtureModel};
use crate::error::{Error, Result};
use crate::raster::{RasterImage, Rgb, Trimap, TrimapLabel};

/// Forward neighbor offsets `(dx, dy)`: E, S, SE, SW.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

/// Default stand-in for an infinite terminal capacity.
pub const DEFAULT_HARD_WEIGHT: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessParams {
    pub gamma: f64,
    pub beta: f64,
    pub hard_weight: f64,
}

impl SmoothnessParams {
    /// `hard_weight` is chosen above the largest possible sum of n-link
    /// capacities around one pixel (`< 8 gamma`).
    pub fn new(gamma: f64, beta: f64) -> Self {
        Self {
            gamma,
            beta,
            hard_weight: DEFAULT_HARD_WEIGHT.max(9.0 * gamma),
        }
    }

    pub fn for_image(gamma: f64, image: &RasterImage) -> Self {
        Self::new(gamma, compute_beta(image))
    }
}

/// 8-connected pixel graph. Each undirected neighbor pair is stored once, on
/// the pixel whose E/S/SE/SW neighbor it is.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGraph {
    pub width: usize,
    pub height: usize,
    pub source_cap: Vec<f64>,
    pub sink_cap: Vec<f64>,
    pub neighbor_caps: Vec<[f64; 4]>,
}

impl GridGraph {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            source_cap: vec![0.0; n],
            sink_cap: vec![0.0; n],
            neighbor_caps: vec![[0.0; 4]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the neighbor in direction `dir`, if inside the grid.
    pub fn neighbor(&self, index: usize, dir: usize) -> Option<usize> {
        neighbor_index(self.width, self.height, index, dir)
    }

    /// Visits every undirected pair `(p, q, capacity)` that exists in the grid.
    pub fn for_each_pair(&self, mut f: impl FnMut(usize, usize, f64)) {
        for p in 0..self.len() {
            for dir in 0..4 {
                if let Some(q) = self.neighbor(p, dir) {
                    f(p, q, self.neighbor_caps[p][dir]);
                }
            }
        }
    }

    /// Capacity of the cut induced by `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        let mut total = 0.0;
        for p in 0..self.len() {
            total += if source_side[p] {
                self.sink_cap[p]
            } else {
                self.source_cap[p]
            };
        }
        self.for_each_pair(|p, q, c| {
            if source_side[p] != source_side[q] {
                total += c;
            }
        });
        total
    }
}

pub(crate) fn neighbor_index(width: usize, height: usize, index: usize, dir: usize) -> Option<usize> {
    let (dx, dy) = NEIGHBOR_OFFSETS[dir];
    let x = (index % width) as isize + dx;
    let y = (index / width) as isize + dy;
    if x < 0 || x >= width as isize || y >= height as isize {
        return None;
    }
    Some(y as usize * width + x as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    /// Foreground.
    Source,
    /// Background.
    Sink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub flow_value: f64,
    pub side: Vec<CutSide>,
}

impl CutResult {
    pub fn source_mask(&self) -> Vec<bool> {
        self.side.iter().map(|s| *s == CutSide::Source).collect()
    }
}

fn sq_diff(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// `1 / (2 <|z_m - z_n|^2>)` over all 8-neighbor pairs; 0 for flat images.
pub fn compute_beta(image: &RasterImage) -> f64 {
    let (w, h) = (image.width(), image.height());
    let px = image.pixels();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for p in 0..w * h {
        for dir in 0..4 {
            if let Some(q) = neighbor_index(w, h, p, dir) {
                sum += sq_diff(&px[p], &px[q]);
                pairs += 1;
            }
        }
    }
    if pairs == 0 || sum <= 0.0 {
        return 0.0;
    }
    1.0 / (2.0 * sum / pairs as f64)
}

/// Builds the GrabCut graph: contrast-sensitive n-links plus mixture
/// data terms on t-links, with clamped pixels tied to their terminal by
/// `hard_weight`.
///
/// The two data terms of a probable pixel are shifted by a common constant
/// when either is negative (densities above one), which leaves the minimum
/// cut unchanged.
pub fn build_graph(
    image: &RasterImage,
    trimap: &Trimap,
    fg_model: &ColorMixtureModel,
    bg_model: &ColorMixtureModel,
    params: &SmoothnessParams,
) -> Result<GridGraph> {
    let dims = (image.width(), image.height());
    if trimap.dims() != dims {
        return Err(Error::DimensionMismatch {
            left: dims,
            right: trimap.dims(),
        });
    }
    let mut graph = GridGraph::new(dims.0, dims.1);
    fill_neighbor_caps(image, params, &mut graph);
    let px = image.pixels();
    for (p, label) in trimap.labels().iter().enumerate() {
        let (src, snk) = terminal_caps(*label, &px[p], fg_model, bg_model, params.hard_weight);
        graph.source_cap[p] = src;
        graph.sink_cap[p] = snk;
    }
    Ok(graph)
}

/// `(source_cap, sink_cap)` for one pixel.
pub(crate) fn terminal_caps(
    label: TrimapLabel,
    z: &Rgb,
    fg_model: &ColorMixtureModel,
    bg_model: &ColorMixtureModel,
    hard_weight: f64,
) -> (f64, f64) {
    match label {
        TrimapLabel::DefiniteFg => (hard_weight, 0.0),
        TrimapLabel::DefiniteBg => (0.0, hard_weight),
        TrimapLabel::ProbableFg | TrimapLabel::ProbableBg => {
            let d_bg = neg_log_density(bg_model, z);
            let d_fg = neg_log_density(fg_model, z);
            let shift = d_bg.min(d_fg).min(0.0);
            (d_bg - shift, d_fg - shift)
        }
    }
}

/// `gamma * exp(-beta |dz|^2)`, divided by sqrt(2) on diagonals.
pub fn fill_neighbor_caps(image: &RasterImage, params: &SmoothnessParams, graph: &mut GridGraph) {
    let px = image.pixels();
    let (w, h) = (image.width(), image.height());
    let diag = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..w * h {
        for dir in 0..4 {
            graph.neighbor_caps[p][dir] = match neighbor_index(w, h, p, dir) {
                Some(q) => {
                    let c = params.gamma * (-params.beta * sq_diff(&px[p], &px[q])).exp();
                    if dir >= 2 {
                        c * diag
                    } else {
                        c
                    }
                }
                None => 0.0,
            };
        }
    }
}

/// Solves max-flow on `graph`. Pixels reachable from the source in the final
/// residual graph are labeled [`CutSide::Source`]; everything else, including
/// pixels with no residual path either way, is [`CutSide::Sink`].
pub fn max_flow(graph: &GridGraph) -> CutResult {
    let mut solver = FlowNetwork::from_grid(graph);
    let flow_value = solver.solve();
    let reachable = solver.source_reachable();
    CutResult {
        flow_value,
        side: reachable
            .into_iter()
            .map(|r| if r { CutSide::Source } else { CutSide::Sink })
            .collect(),
    }
}

const NO_PARENT: usize = usize::MAX;
const TERMINAL: usize = usize::MAX - 1;
const ORPHAN: usize = usize::MAX - 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

/// Residual network in CSR form; `arcs[a ^ 1]` is the reverse of `arcs[a]`.
struct FlowNetwork {
    first_arc: Vec<usize>,
    arc_ids: Vec<usize>,
    head: Vec<usize>,
    residual: Vec<f64>,
    /// Positive: residual source->node; negative: residual node->sink.
    terminal: Vec<f64>,
    tree: Vec<Tree>,
    parent: Vec<usize>,
    timestamp: Vec<u64>,
    dist: Vec<u32>,
    in_active: Vec<bool>,
    active: VecDeque<usize>,
    orphans: VecDeque<usize>,
    time: u64,
    flow: f64,
}

impl FlowNetwork {
    fn from_grid(graph: &GridGraph) -> Self {
        let n = graph.len();
        let mut degree = vec![0usize; n];
        let mut edges = Vec::new();
        graph.for_each_pair(|p, q, c| {
            if c > 0.0 {
                degree[p] += 1;
                degree[q] += 1;
                edges.push((p, q, c));
            }
        });
        let mut first_arc = vec![0usize; n + 1];
        for i in 0..n {
            first_arc[i + 1] = first_arc[i] + degree[i];
        }
        let mut fill = first_arc.clone();
        let mut arc_ids = vec![0usize; 2 * edges.len()];
        let mut head = vec![0usize; 2 * edges.len()];
        let mut residual = vec![0.0; 2 * edges.len()];
        for (e, &(p, q, c)) in edges.iter().enumerate() {
            let (a, b) = (2 * e, 2 * e + 1);
            head[a] = q;
            head[b] = p;
            residual[a] = c;
            residual[b] = c;
            arc_ids[fill[p]] = a;
            fill[p] += 1;
            arc_ids[fill[q]] = b;
            fill[q] += 1;
        }
        let mut net = Self {
            first_arc,
            arc_ids,
            head,
            residual,
            terminal: vec![0.0; n],
            tree: vec![Tree::Free; n],
            parent: vec![NO_PARENT; n],
            timestamp: vec![0; n],
            dist: vec![0; n],
            in_active: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow: 0.0,
        };
        for i in 0..n {
            let (s, t) = (graph.source_cap[i], graph.sink_cap[i]);
            net.flow += s.min(t);
            let cap = s - t;
            net.terminal[i] = cap;
            if cap != 0.0 {
                net.tree[i] = if cap > 0.0 { Tree::Source } else { Tree::Sink };
                net.parent[i] = TERMINAL;
                net.dist[i] = 1;
                net.set_active(i);
            }
        }
        net
    }

    fn arcs(&self, i: usize) -> std::ops::Range<usize> {
        self.first_arc[i]..self.first_arc[i + 1]
    }

    fn set_active(&mut self, i: usize) {
        if !self.in_active[i] {
            self.in_active[i] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            self.in_active[i] = false;
            if self.parent[i] != NO_PARENT {
                return Some(i);
            }
        }
        None
    }

    fn solve(&mut self) -> f64 {
        let mut current: Option<usize> = None;
        loop {
            let i = match current.filter(|&i| self.parent[i] != NO_PARENT) {
                Some(i) => i,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let bridge = self.grow(i);
            self.time += 1;
            match bridge {
                Some(arc) => {
                    current = Some(i);
                    self.augment(arc);
                    self.adopt_orphans();
                }
                None => current = None,
            }
        }
        self.flow
    }

    /// Expands the tree containing `i`; returns a source-tree to sink-tree
    /// arc with residual capacity when the trees meet.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let from_source = self.tree[i] == Tree::Source;
        for k in self.arcs(i) {
            let a = self.arc_ids[k];
            let cap = if from_source {
                self.residual[a]
            } else {
                self.residual[a ^ 1]
            };
            if cap <= 0.0 {
                continue;
            }
            let j = self.head[a];
            if self.parent[j] == NO_PARENT {
                self.tree[j] = self.tree[i];
                self.parent[j] = a ^ 1;
                self.timestamp[j] = self.timestamp[i];
                self.dist[j] = self.dist[i] + 1;
                self.set_active(j);
            } else if self.tree[j] != self.tree[i] {
                return Some(if from_source { a } else { a ^ 1 });
            } else if self.timestamp[j] <= self.timestamp[i] && self.dist[j] > self.dist[i] {
                self.parent[j] = a ^ 1;
                self.timestamp[j] = self.timestamp[i];
                self.dist[j] = self.dist[i] + 1;
            }
        }
        None
    }

    fn augment(&mut self, bridge: usize) {
        let tail = self.head[bridge ^ 1];
        let tip = self.head[bridge];

        let mut bottleneck = self.residual[bridge];
        let mut i = tail;
        while self.parent[i] != TERMINAL {
            let a = self.parent[i];
            bottleneck = bottleneck.min(self.residual[a ^ 1]);
            i = self.head[a];
        }
        bottleneck = bottleneck.min(self.terminal[i]);
        let mut j = tip;
        while self.parent[j] != TERMINAL {
            let a = self.parent[j];
            bottleneck = bottleneck.min(self.residual[a]);
            j = self.head[a];
        }
        bottleneck = bottleneck.min(-self.terminal[j]);

        self.residual[bridge] -= bottleneck;
        self.residual[bridge ^ 1] += bottleneck;

        let mut i = tail;
        while self.parent[i] != TERMINAL {
            let a = self.parent[i];
            self.residual[a] += bottleneck;
            self.residual[a ^ 1] -= bottleneck;
            let next = self.head[a];
            if self.residual[a ^ 1] <= 0.0 {
                self.make_orphan_front(i);
            }
            i = next;
        }
        self.terminal[i] -= bottleneck;
        if self.terminal[i] <= 0.0 {
            self.make_orphan_front(i);
        }

        let mut j = tip;
        while self.parent[j] != TERMINAL {
            let a = self.parent[j];
            self.residual[a ^ 1] += bottleneck;
            self.residual[a] -= bottleneck;
            let next = self.head[a];
            if self.residual[a] <= 0.0 {
                self.make_orphan_front(j);
            }
            j = next;
        }
        self.terminal[j] += bottleneck;
        if self.terminal[j] >= 0.0 {
            self.make_orphan_front(j);
        }

        self.flow += bottleneck;
    }

    fn make_orphan_front(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_front(i);
    }

    fn make_orphan_back(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_back(i);
    }

    fn adopt_orphans(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.process_orphan(i);
        }
    }

    /// Distance from `j` to its terminal through valid parents, or `None` when
    /// the chain ends in an orphan.
    fn origin_distance(&mut self, mut j: usize) -> Option<u32> {
        let mut d = 0u32;
        loop {
            if self.timestamp[j] == self.time {
                d += self.dist[j];
                break;
            }
            let a = self.parent[j];
            d += 1;
            if a == TERMINAL {
                self.timestamp[j] = self.time;
                self.dist[j] = 1;
                break;
            }
            if a == ORPHAN {
                return None;
            }
            j = self.head[a];
        }
        Some(d)
    }

    fn process_orphan(&mut self, i: usize) {
        let side = self.tree[i];
        let mut best_arc = NO_PARENT;
        let mut best_dist = u32::MAX;
        for k in self.arcs(i) {
            let a = self.arc_ids[k];
            // residual toward i along the tree direction
            let cap = if side == Tree::Source {
                self.residual[a ^ 1]
            } else {
                self.residual[a]
            };
            if cap <= 0.0 {
                continue;
            }
            let j = self.head[a];
            if self.tree[j] != side || self.parent[j] == NO_PARENT {
                continue;
            }
            if let Some(mut d) = self.origin_distance(j) {
                if d < best_dist {
                    best_arc = a;
                    best_dist = d;
                }
                let mut j = j;
                while self.timestamp[j] != self.time {
                    self.timestamp[j] = self.time;
                    self.dist[j] = d;
                    d -= 1;
                    j = self.head[self.parent[j]];
                }
            }
        }
        if best_arc != NO_PARENT {
            self.parent[i] = best_arc;
            self.timestamp[i] = self.time;
            self.dist[i] = best_dist + 1;
            return;
        }
        for k in self.arcs(i) {
            let a = self.arc_ids[k];
            let j = self.head[a];
            let pj = self.parent[j];
            if self.tree[j] != side || pj == NO_PARENT {
                continue;
            }
            let cap = if side == Tree::Source {
                self.residual[a ^ 1]
            } else {
                self.residual[a]
            };
            if cap > 0.0 {
                self.set_active(j);
            }
            if pj != TERMINAL && pj != ORPHAN && self.head[pj] == i {
                self.make_orphan_back(j);
            }
        }
        self.tree[i] = Tree::Free;
        self.parent[i] = NO_PARENT;
    }

    fn source_reachable(&self) -> Vec<bool> {
        let n = self.terminal.len();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.terminal[i] > 0.0).collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for k in self.arcs(i) {
                let a = self.arc_ids[k];
                let j = self.head[a];
                if !seen[j] && self.residual[a] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }
}
