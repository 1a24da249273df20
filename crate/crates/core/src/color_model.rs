//! Gaussian mixture appearance models over RGB.
//!
//! Each side of the cut (foreground and background) owns one
//! [`ColorMixtureModel`]. Models are fit by hard assignment: k-means++ seeding
//! and Lloyd iterations for the first fit, then alternating
//! [`assign_components`] / [`refit`] sweeps.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::Rgb;

/// Upper bound returned by [`neg_log_density`].
pub const NEG_LOG_CAP: f64 = 1e9;

const LLOYD_ITERATIONS: usize = 10;
const LOG_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    weight: f64,
    mean: Rgb,
    covariance: [[f64; 3]; 3],
    inverse: [[f64; 3]; 3],
    log_det: f64,
}

impl GaussianComponent {
    /// Builds a component, caching the inverse and log-determinant.
    /// Returns `None` when the covariance is not positive definite.
    pub fn new(weight: f64, mean: Rgb, covariance: [[f64; 3]; 3]) -> Option<Self> {
        let m = Matrix3::from_fn(|r, c| covariance[r][c]);
        let chol = m.cholesky()?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let inv = chol.inverse();
        let mut inverse = [[0.0; 3]; 3];
        for (r, row) in inverse.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = inv[(r, c)];
            }
        }
        Some(Self {
            weight,
            mean,
            covariance,
            inverse,
            log_det,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> Rgb {
        self.mean
    }

    pub fn covariance(&self) -> [[f64; 3]; 3] {
        self.covariance
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `ln N(z; mean, covariance)`.
    pub fn log_density(&self, z: &Rgb) -> f64 {
        let d = [z[0] - self.mean[0], z[1] - self.mean[1], z[2] - self.mean[2]];
        let s = &self.inverse;
        let q = d[0] * (s[0][0] * d[0] + s[0][1] * d[1] + s[0][2] * d[2])
            + d[1] * (s[1][0] * d[0] + s[1][1] * d[1] + s[1][2] * d[2])
            + d[2] * (s[2][0] * d[0] + s[2][1] * d[1] + s[2][2] * d[2]);
        -0.5 * (3.0 * LOG_2PI + self.log_det + q)
    }

    /// `ln(weight) + ln N(z)`.
    fn log_weighted(&self, z: &Rgb) -> f64 {
        self.weight.ln() + self.log_density(z)
    }
}

/// A K-component Gaussian mixture; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorMixtureModel {
    components: Vec<GaussianComponent>,
}

impl ColorMixtureModel {
    /// Wraps components, renormalizing their weights.
    pub fn new(mut components: Vec<GaussianComponent>) -> Result<Self> {
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if components.is_empty() || !(total > 0.0) {
            return Err(Error::EmptyInput);
        }
        for c in &mut components {
            c.weight /= total;
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

fn sq_dist(a: &Rgb, b: &Rgb) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn nearest(centers: &[Rgb], z: &Rgb) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(c, z);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

fn kmeans_pp_seeds(pixels: &[Rgb], k: usize, rng: &mut ChaCha8Rng) -> Vec<Rgb> {
    let mut centers = vec![pixels[rng.random_range(0..pixels.len())]];
    let mut dist: Vec<f64> = pixels.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        // every remaining pixel coincides with a center
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = pixels.len() - 1;
        for (i, d) in dist.iter().enumerate() {
            if target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = pixels[pick];
        for (d, p) in dist.iter_mut().zip(pixels) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// k-means++ seeding followed by Lloyd iterations; each non-empty cluster
/// becomes a component with regularized empirical covariance.
pub fn init_by_kmeans(
    pixels: &[Rgb],
    k: usize,
    seed: u64,
    floor: f64,
) -> Result<(ColorMixtureModel, Vec<usize>)> {
    if pixels.is_empty() || k == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp_seeds(pixels, k, &mut rng);
    let mut assignments = vec![0usize; pixels.len()];
    for _ in 0..LLOYD_ITERATIONS {
        for (a, p) in assignments.iter_mut().zip(pixels) {
            *a = nearest(&centers, p);
        }
        let mut sums = vec![[0.0f64; 3]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (a, p) in assignments.iter().zip(pixels) {
            counts[*a] += 1;
            for c in 0..3 {
                sums[*a][c] += p[c];
            }
        }
        for (k, center) in centers.iter_mut().enumerate() {
            if counts[k] > 0 {
                let n = counts[k] as f64;
                *center = [sums[k][0] / n, sums[k][1] / n, sums[k][2] / n];
            }
        }
    }
    for (a, p) in assignments.iter_mut().zip(pixels) {
        *a = nearest(&centers, p);
    }
    refit_with_assignments(pixels, &assignments, centers.len(), floor)
}

/// Hard-assigns each pixel to `argmax_k pi_k N(z; mu_k, Sigma_k)`; ties go to
/// the lowest index.
pub fn assign_components(model: &ColorMixtureModel, pixels: &[Rgb]) -> Vec<usize> {
    pixels.iter().map(|z| best_component(model, z)).collect()
}

fn best_component(model: &ColorMixtureModel, z: &Rgb) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, c) in model.components.iter().enumerate() {
        let v = c.log_weighted(z);
        if v > best_v {
            best_v = v;
            best = k;
        }
    }
    best
}

/// Maximum-likelihood refit from hard assignments, with `floor` added to each
/// covariance diagonal. Empty components are dropped.
pub fn refit(pixels: &[Rgb], assignments: &[usize], k: usize, floor: f64) -> Result<ColorMixtureModel> {
    refit_with_assignments(pixels, assignments, k, floor).map(|(m, _)| m)
}

/// Like [`refit`], also returning the assignments re-indexed onto the
/// surviving components.
pub fn refit_with_assignments(
    pixels: &[Rgb],
    assignments: &[usize],
    k: usize,
    floor: f64,
) -> Result<(ColorMixtureModel, Vec<usize>)> {
    if pixels.is_empty() || pixels.len() != assignments.len() {
        return Err(Error::EmptyInput);
    }
    let mut counts = vec![0usize; k];
    let mut sums = vec![[0.0f64; 3]; k];
    for (a, p) in assignments.iter().zip(pixels) {
        counts[*a] += 1;
        for c in 0..3 {
            sums[*a][c] += p[c];
        }
    }
    let means: Vec<Rgb> = (0..k)
        .map(|j| {
            let n = counts[j].max(1) as f64;
            [sums[j][0] / n, sums[j][1] / n, sums[j][2] / n]
        })
        .collect();
    let mut scatter = vec![[[0.0f64; 3]; 3]; k];
    for (a, p) in assignments.iter().zip(pixels) {
        let m = &means[*a];
        let d = [p[0] - m[0], p[1] - m[1], p[2] - m[2]];
        let s = &mut scatter[*a];
        for r in 0..3 {
            for c in r..3 {
                s[r][c] += d[r] * d[c];
            }
        }
    }
    let total = pixels.len() as f64;
    let mut remap = vec![usize::MAX; k];
    let mut components = Vec::new();
    for j in 0..k {
        if counts[j] == 0 {
            continue;
        }
        let n = counts[j] as f64;
        let mut cov = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in r..3 {
                cov[r][c] = scatter[j][r][c] / n;
                cov[c][r] = cov[r][c];
            }
            cov[r][r] += floor;
        }
        let comp = GaussianComponent::new(n / total, means[j], cov)
            .ok_or(Error::SingularCovariance)?;
        remap[j] = components.len();
        components.push(comp);
    }
    let model = ColorMixtureModel::new(components)?;
    let reindexed = assignments.iter().map(|a| remap[*a]).collect();
    Ok((model, reindexed))
}

/// `-ln sum_k pi_k N(z; mu_k, Sigma_k)`, capped at [`NEG_LOG_CAP`].
pub fn neg_log_density(model: &ColorMixtureModel, z: &Rgb) -> f64 {
    // streaming log-sum-exp
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for c in &model.components {
        let v = c.log_weighted(z);
        if v > max {
            sum = sum * (max - v).exp() + 1.0;
            max = v;
        } else {
            sum += (v - max).exp();
        }
    }
    let value = -(max + sum.ln());
    if value.is_nan() {
        NEG_LOG_CAP
    } else {
        value.min(NEG_LOG_CAP)
    }
}

/// `sum_n ln(pi_{k_n} N(z_n; mu_{k_n}, Sigma_{k_n}))`, the quantity that
/// alternating assign/refit sweeps never decrease.
pub fn assigned_log_likelihood(model: &ColorMixtureModel, pixels: &[Rgb], assignments: &[usize]) -> f64 {
    pixels
        .iter()
        .zip(assignments)
        .map(|(z, k)| model.components[*k].log_weighted(z))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spherical(weight: f64, mean: Rgb, var: f64) -> GaussianComponent {
        GaussianComponent::new(weight, mean, [[var, 0.0, 0.0], [0.0, var, 0.0], [0.0, 0.0, var]]).unwrap()
    }

    #[test]
    fn identical_pixels_give_floor_covariance() {
        let pixels = vec![[12.0, 34.0, 56.0]; 100];
        let (model, assign) = init_by_kmeans(&pixels, 1, 17, 0.01).unwrap();
        assert_eq!(model.len(), 1);
        let c = &model.components()[0];
        assert_eq!(c.mean(), [12.0, 34.0, 56.0]);
        assert_eq!(c.weight(), 1.0);
        assert_eq!(c.covariance(), [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.01]]);
        assert!(assign.iter().all(|a| *a == 0));
        // asking for more components than distinct colors collapses to one
        let (model, _) = init_by_kmeans(&pixels, 5, 17, 0.01).unwrap();
        assert_eq!(model.len(), 1);
    }

    #[test]
    fn two_separated_clusters() {
        let mut pixels = vec![[0.0; 3]; 50];
        pixels.extend(vec![[200.0; 3]; 50]);
        let (model, _) = init_by_kmeans(&pixels, 2, 17, 0.01).unwrap();
        assert_eq!(model.len(), 2);
        let mut means: Vec<f64> = model.components().iter().map(|c| c.mean()[0]).collect();
        means.sort_by(f64::total_cmp);
        assert!(means[0].abs() < 1.0 && (means[1] - 200.0).abs() < 1.0);
        for c in model.components() {
            assert!((c.weight() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(init_by_kmeans(&[], 3, 17, 0.01), Err(Error::EmptyInput));
        assert!(refit(&[], &[], 3, 0.01).is_err());
    }

    #[test]
    fn assignment_examples() {
        let one = ColorMixtureModel::new(vec![spherical(1.0, [10.0; 3], 4.0)]).unwrap();
        assert!(assign_components(&one, &[[0.0; 3], [255.0; 3]]).iter().all(|a| *a == 0));

        let three = ColorMixtureModel::new(vec![
            spherical(1.0, [0.0; 3], 25.0),
            spherical(1.0, [100.0; 3], 25.0),
            spherical(1.0, [200.0; 3], 25.0),
        ])
        .unwrap();
        assert_eq!(assign_components(&three, &[[200.0; 3]]), vec![2]);

        let tie = ColorMixtureModel::new(vec![
            spherical(1.0, [0.0, 0.0, 0.0], 25.0),
            spherical(1.0, [10.0, 0.0, 0.0], 25.0),
        ])
        .unwrap();
        assert_eq!(assign_components(&tie, &[[5.0, 0.0, 0.0]]), vec![0]);
    }

    #[test]
    fn singleton_refit_is_exact() {
        let pixels = [[0.0; 3], [255.0; 3]];
        let model = refit(&pixels, &[0, 1], 2, 0.01).unwrap();
        assert_eq!(model.components()[0].mean(), [0.0; 3]);
        assert_eq!(model.components()[1].mean(), [255.0; 3]);
        for c in model.components() {
            assert_eq!(c.covariance(), [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.01]]);
            assert_eq!(c.weight(), 0.5);
        }
    }

    #[test]
    fn refit_drops_empty_components() {
        let pixels = [[0.0; 3], [1.0; 3], [2.0; 3]];
        let (model, remap) = refit_with_assignments(&pixels, &[3, 3, 1], 5, 0.01).unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(remap, vec![1, 1, 0]);
        let total: f64 = model.components().iter().map(|c| c.weight()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neg_log_density_at_mean_closed_form() {
        for var in [0.01, 1.0, 100.0] {
            let model = ColorMixtureModel::new(vec![spherical(1.0, [50.0; 3], var)]).unwrap();
            let expected = 0.5 * ((2.0 * std::f64::consts::PI).powi(3) * var.powi(3)).ln();
            assert!((neg_log_density(&model, &[50.0; 3]) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn neg_log_density_increases_with_distance_and_caps() {
        let model = ColorMixtureModel::new(vec![spherical(1.0, [0.0; 3], 9.0)]).unwrap();
        let mut last = f64::NEG_INFINITY;
        for d in 0..40 {
            let v = neg_log_density(&model, &[d as f64, 0.0, 0.0]);
            assert!(v > last);
            last = v;
        }
        let tiny = ColorMixtureModel::new(vec![spherical(1.0, [0.0; 3], 1e-6)]).unwrap();
        assert_eq!(neg_log_density(&tiny, &[2e6, 0.0, 0.0]), NEG_LOG_CAP);
    }
}
