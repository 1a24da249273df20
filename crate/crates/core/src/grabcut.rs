//! Iterative GrabCut: per-side component assignment, model refit and a graph
//! cut over the probable pixels, repeated until labels settle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color_model::{assign_components, init_by_kmeans, neg_log_density, refit, ColorMixtureModel};
use crate::error::{Error, Result};
use crate::mincut::{fill_neighbor_caps, max_flow, terminal_caps, CutSide, GridGraph, SmoothnessParams};
use crate::raster::{BinaryMask, RasterImage, Rgb, Trimap, TrimapLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub components_per_side: usize,
    pub max_iterations: usize,
    pub convergence_fraction: f64,
    pub gamma: f64,
    pub seed: u64,
    pub covariance_floor: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            components_per_side: 5,
            max_iterations: 5,
            convergence_fraction: 0.001,
            gamma: 50.0,
            seed: 17,
            covariance_floor: 0.01,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations >= 1
            && self.components_per_side >= 1
            && (0.0..1.0).contains(&self.convergence_fraction)
            && self.gamma > 0.0
            && self.covariance_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub mask: BinaryMask,
    pub iterations_run: usize,
    pub final_energy: f64,
    pub energy_trace: Vec<f64>,
}

/// GrabCut objective: mixture data term over probable pixels plus the
/// contrast-weighted cost of every neighbor pair with differing labels.
pub fn energy(
    image: &RasterImage,
    trimap: &Trimap,
    labels: &[bool],
    fg_model: &ColorMixtureModel,
    bg_model: &ColorMixtureModel,
    params: &SmoothnessParams,
) -> Result<f64> {
    let dims = (image.width(), image.height());
    if trimap.dims() != dims || labels.len() != dims.0 * dims.1 {
        return Err(Error::DimensionMismatch {
            left: dims,
            right: trimap.dims(),
        });
    }
    let mut graph = GridGraph::new(dims.0, dims.1);
    fill_neighbor_caps(image, params, &mut graph);
    Ok(energy_with_caps(image, trimap, labels, fg_model, bg_model, &graph))
}

fn data_term(trimap: &Trimap, labels: &[bool], px: &[Rgb], fg: &ColorMixtureModel, bg: &ColorMixtureModel) -> f64 {
    trimap
        .labels()
        .iter()
        .zip(labels)
        .zip(px)
        .filter(|((t, _), _)| !t.is_definite())
        .map(|((_, fg_label), z)| {
            if *fg_label {
                neg_log_density(fg, z)
            } else {
                neg_log_density(bg, z)
            }
        })
        .sum()
}

fn energy_with_caps(
    image: &RasterImage,
    trimap: &Trimap,
    labels: &[bool],
    fg: &ColorMixtureModel,
    bg: &ColorMixtureModel,
    graph: &GridGraph,
) -> f64 {
    let unary = data_term(trimap, labels, image.pixels(), fg, bg);
    let mut pairwise = 0.0;
    graph.for_each_pair(|p, q, c| {
        if labels[p] != labels[q] {
            pairwise += c;
        }
    });
    unary + pairwise
}

/// What one iteration did, for monitoring and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Energy of the incoming labels under the refit models.
    pub energy_before_cut: f64,
    /// Energy of the labels produced by the cut, same models.
    pub energy_after_cut: f64,
    pub changed: usize,
}

/// Mutable GrabCut state for one image; [`segment`] drives it to completion.
pub struct GrabCut<'a> {
    image: &'a RasterImage,
    trimap: &'a Trimap,
    config: SegmentationConfig,
    graph: GridGraph,
    hard_weight: f64,
    labels: Vec<bool>,
    fg_model: ColorMixtureModel,
    bg_model: ColorMixtureModel,
}

fn side_pixels(px: &[Rgb], labels: &[bool], fg: bool) -> Vec<Rgb> {
    px.iter()
        .zip(labels)
        .filter(|(_, l)| **l == fg)
        .map(|(z, _)| *z)
        .collect()
}

impl<'a> GrabCut<'a> {
    /// Returns `None` for trimaps with nothing to optimize: no probable
    /// pixels, or an empty foreground or background side.
    pub fn new(image: &'a RasterImage, trimap: &'a Trimap, config: SegmentationConfig) -> Result<Option<Self>> {
        config.validate()?;
        let dims = (image.width(), image.height());
        if trimap.dims() != dims {
            return Err(Error::DimensionMismatch {
                left: dims,
                right: trimap.dims(),
            });
        }
        let labels: Vec<bool> = trimap.labels().iter().map(|l| l.is_fg()).collect();
        let fg_count = labels.iter().filter(|l| **l).count();
        let probable = trimap.labels().iter().any(|l| !l.is_definite());
        if fg_count == 0 || fg_count == labels.len() || !probable {
            return Ok(None);
        }
        let params = SmoothnessParams::for_image(config.gamma, image);
        let mut graph = GridGraph::new(dims.0, dims.1);
        fill_neighbor_caps(image, &params, &mut graph);
        let px = image.pixels();
        let k = config.components_per_side;
        let floor = config.covariance_floor;
        let (fg_model, _) = init_by_kmeans(&side_pixels(px, &labels, true), k, config.seed, floor)?;
        let (bg_model, _) = init_by_kmeans(
            &side_pixels(px, &labels, false),
            k,
            config.seed.wrapping_add(1),
            floor,
        )?;
        Ok(Some(Self {
            image,
            trimap,
            config,
            graph,
            hard_weight: params.hard_weight,
            labels,
            fg_model,
            bg_model,
        }))
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn models(&self) -> (&ColorMixtureModel, &ColorMixtureModel) {
        (&self.fg_model, &self.bg_model)
    }

    pub fn graph(&self) -> &GridGraph {
        &self.graph
    }

    pub fn energy(&self) -> f64 {
        energy_with_caps(self.image, self.trimap, &self.labels, &self.fg_model, &self.bg_model, &self.graph)
    }

    fn refit_side(&self, fg: bool) -> Result<ColorMixtureModel> {
        let pixels = side_pixels(self.image.pixels(), &self.labels, fg);
        let model = if fg { &self.fg_model } else { &self.bg_model };
        let assignments = assign_components(model, &pixels);
        refit(&pixels, &assignments, model.len(), self.config.covariance_floor)
    }

    fn set_terminal_caps(&mut self) {
        let hard = self.hard_weight;
        let (fg, bg) = (&self.fg_model, &self.bg_model);
        let caps: Vec<(f64, f64)> = self
            .trimap
            .labels()
            .par_iter()
            .zip(self.image.pixels().par_iter())
            .map(|(label, z)| terminal_caps(*label, z, fg, bg, hard))
            .collect();
        for (p, (s, t)) in caps.into_iter().enumerate() {
            self.graph.source_cap[p] = s;
            self.graph.sink_cap[p] = t;
        }
    }

    /// One iteration: assign + refit both models, then cut. Returns `None`
    /// without changing anything when a side has no pixels left to fit.
    pub fn step(&mut self) -> Result<Option<StepReport>> {
        let fg_count = self.labels.iter().filter(|l| **l).count();
        if fg_count == 0 || fg_count == self.labels.len() {
            return Ok(None);
        }
        self.fg_model = self.refit_side(true)?;
        self.bg_model = self.refit_side(false)?;
        let energy_before_cut = self.energy();

        self.set_terminal_caps();
        let cut = max_flow(&self.graph);
        let mut changed = 0;
        for (p, label) in self.trimap.labels().iter().enumerate() {
            let new = match label {
                TrimapLabel::DefiniteFg => true,
                TrimapLabel::DefiniteBg => false,
                _ => cut.side[p] == CutSide::Source,
            };
            if new != self.labels[p] {
                changed += 1;
                self.labels[p] = new;
            }
        }
        Ok(Some(StepReport {
            energy_before_cut,
            energy_after_cut: self.energy(),
            changed,
        }))
    }

    pub fn mask(&self) -> BinaryMask {
        BinaryMask::from_bits(self.image.width(), self.image.height(), self.labels.clone())
            .expect("labels sized to the image")
    }
}

/// Runs GrabCut from `trimap` until fewer than `convergence_fraction` of the
/// pixels change in an iteration or `max_iterations` is reached.
pub fn segment(image: &RasterImage, trimap: &Trimap, config: &SegmentationConfig) -> Result<SegmentationResult> {
    let Some(mut state) = GrabCut::new(image, trimap, *config)? else {
        let bits = trimap.labels().iter().map(|l| l.is_fg()).collect();
        return Ok(SegmentationResult {
            mask: BinaryMask::from_bits(image.width(), image.height(), bits)?,
            iterations_run: 0,
            final_energy: 0.0,
            energy_trace: Vec::new(),
        });
    };
    let total = (image.width() * image.height()) as f64;
    let mut energy_trace = Vec::new();
    for _ in 0..config.max_iterations {
        let Some(report) = state.step()? else {
            break;
        };
        energy_trace.push(report.energy_after_cut);
        if (report.changed as f64) < config.convergence_fraction * total {
            break;
        }
    }
    Ok(SegmentationResult {
        mask: state.mask(),
        iterations_run: energy_trace.len(),
        final_energy: energy_trace.last().copied().unwrap_or_else(|| state.energy()),
        energy_trace,
    })
}
