//! Deterministic synthetic corpus: painted-looking blobs on noisy grounds
//! with exact polygon annotations.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotations::{AnnotationRecord, MaterialClass};
use crate::error::{Error, Result};
use crate::raster::{rasterize_polygon, RasterImage, Rgb};

pub const SYNTH_SIZE: usize = 256;

const MIN_COLOR_DISTANCE: f64 = 80.0;
const MIN_AREA: usize = 100;

/// Smoothly interpolated lattice noise summed over octaves, roughly in
/// `[-1, 1]`.
struct ValueNoise {
    octaves: Vec<(usize, Vec<f64>)>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, base_cells: usize, octaves: usize) -> Self {
        let octaves = (0..octaves)
            .map(|o| {
                let cells = base_cells << o;
                let lattice = (0..(cells + 1) * (cells + 1))
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                (cells, lattice)
            })
            .collect();
        Self { octaves }
    }

    /// `u`, `v` in `[0, 1]`.
    fn sample(&self, u: f64, v: f64) -> f64 {
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let mut total = 0.0;
        let mut amplitude = 1.0;
        let mut norm = 0.0;
        for (cells, lattice) in &self.octaves {
            let stride = cells + 1;
            let (fx, fy) = (u * *cells as f64, v * *cells as f64);
            let (ix, iy) = ((fx as usize).min(cells - 1), (fy as usize).min(cells - 1));
            let (tx, ty) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
            let at = |x: usize, y: usize| lattice[y * stride + x];
            let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
            let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
            total += amplitude * (top * (1.0 - ty) + bottom * ty);
            norm += amplitude;
            amplitude *= 0.5;
        }
        total / norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Ellipse,
    RoundedRect,
    Star,
}

fn distance(a: &Rgb, b: &Rgb) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn random_color(rng: &mut ChaCha8Rng) -> Rgb {
    [
        rng.random_range(20.0..235.0),
        rng.random_range(20.0..235.0),
        rng.random_range(20.0..235.0),
    ]
}

/// Outline in polar form around the origin, before rotation.
fn outline(rng: &mut ChaCha8Rng, shape: Shape) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = match shape {
        Shape::Ellipse | Shape::RoundedRect => {
            let a = rng.random_range(30.0..80.0);
            let b = rng.random_range(30.0..80.0);
            let n: f64 = if shape == Shape::Ellipse { 2.0 } else { 5.0 };
            (0..128)
                .map(|i| {
                    let t = TAU * i as f64 / 128.0;
                    let r = ((t.cos() / a).abs().powf(n) + (t.sin() / b).abs().powf(n)).powf(-1.0 / n);
                    (r, t)
                })
                .collect()
        }
        Shape::Star => {
            let spikes = rng.random_range(5..=8);
            let outer = rng.random_range(55.0..90.0);
            let inner = outer * rng.random_range(0.45..0.65);
            let corners: Vec<(f64, f64)> = (0..2 * spikes)
                .map(|i| {
                    let t = TAU * i as f64 / (2 * spikes) as f64;
                    let r = if i % 2 == 0 { outer } else { inner };
                    (r * t.cos(), r * t.sin())
                })
                .collect();
            let mut dense = Vec::new();
            for i in 0..corners.len() {
                let (a, b) = (corners[i], corners[(i + 1) % corners.len()]);
                for s in 0..8 {
                    let f = s as f64 / 8.0;
                    let (x, y) = (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f);
                    dense.push((x.hypot(y), y.atan2(x)));
                }
            }
            dense
        }
    };
    if rng.random_bool(0.5) {
        // brushstroke-like wobble of the boundary
        let amp = rng.random_range(0.03..0.08);
        let freq = rng.random_range(6..=14) as f64;
        let phase = rng.random_range(0.0..TAU);
        for (r, t) in &mut pts {
            *r *= 1.0 + amp * (freq * *t + phase).sin();
        }
    }
    pts
}

fn place(rng: &mut ChaCha8Rng, polar: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let rot = rng.random_range(0.0..TAU);
    let cx = rng.random_range(96.0..160.0);
    let cy = rng.random_range(96.0..160.0);
    let mut scale = 1.0;
    loop {
        let pts: Vec<(f64, f64)> = polar
            .iter()
            .map(|(r, t)| {
                let (x, y) = (cx + scale * r * (t + rot).cos(), cy + scale * r * (t + rot).sin());
                ((x * 100.0).round() / 100.0, (y * 100.0).round() / 100.0)
            })
            .collect();
        let inside = pts
            .iter()
            .all(|(x, y)| *x >= 4.0 && *y >= 4.0 && *x <= SYNTH_SIZE as f64 - 4.0 && *y <= SYNTH_SIZE as f64 - 4.0);
        if inside {
            return pts;
        }
        scale *= 0.9;
    }
}

/// One image and its annotation, fully determined by `(seed, index)`.
pub fn synthesize_sample(seed: u64, index: usize) -> Result<(RasterImage, AnnotationRecord)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index as u64);
    let base = random_color(&mut rng);
    let mut fill = random_color(&mut rng);
    while distance(&base, &fill) < MIN_COLOR_DISTANCE {
        fill = random_color(&mut rng);
    }
    let shape = [Shape::Ellipse, Shape::RoundedRect, Shape::Star][rng.random_range(0..3)];
    let polygon = loop {
        let polar = outline(&mut rng, shape);
        let polygon = place(&mut rng, &polar);
        if rasterize_polygon(&polygon, SYNTH_SIZE, SYNTH_SIZE)?.count() >= MIN_AREA {
            break polygon;
        }
    };
    let gt = rasterize_polygon(&polygon, SYNTH_SIZE, SYNTH_SIZE)?;

    let bg_noise: Vec<ValueNoise> = (0..3).map(|_| ValueNoise::new(&mut rng, 4, 3)).collect();
    let fg_noise: Vec<ValueNoise> = (0..3).map(|_| ValueNoise::new(&mut rng, 8, 2)).collect();
    let shade_dir = rng.random_range(0.0..TAU);
    let (sx, sy) = (shade_dir.cos(), shade_dir.sin());

    let n = SYNTH_SIZE as f64;
    let mut pixels = Vec::with_capacity(SYNTH_SIZE * SYNTH_SIZE);
    for y in 0..SYNTH_SIZE {
        for x in 0..SYNTH_SIZE {
            let (u, v) = (x as f64 / n, y as f64 / n);
            let jitter: [f64; 3] = std::array::from_fn(|_| rng.random_range(-4.0..4.0));
            let px: Rgb = if gt.get(x, y) {
                let shade = 12.0 * ((u - 0.5) * sx + (v - 0.5) * sy) * 2.0;
                std::array::from_fn(|c| fill[c] + shade + 8.0 * fg_noise[c].sample(u, v) + jitter[c])
            } else {
                std::array::from_fn(|c| base[c] + 12.0 * bg_noise[c].sample(u, v) + jitter[c])
            };
            pixels.push(px.map(|c| c.round().clamp(0.0, 255.0)));
        }
    }
    let image = RasterImage::new(SYNTH_SIZE, SYNTH_SIZE, pixels)?;
    let record = AnnotationRecord {
        image: format!("img_{index:04}.png"),
        class: MaterialClass::ALL[index % MaterialClass::ALL.len()],
        polygon,
    };
    Ok((image, record))
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub images_dir: PathBuf,
    pub annotations: PathBuf,
    pub records: Vec<AnnotationRecord>,
}

/// Writes `count` PNGs under `out_dir/images` and their polygons to
/// `out_dir/annotations.jsonl`.
pub fn generate_synthetic_corpus(out_dir: &Path, count: usize, seed: u64) -> Result<SyntheticCorpus> {
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    let images_dir = out_dir.join("images");
    fs::create_dir_all(&images_dir)?;
    let samples = (0..count)
        .map(|i| synthesize_sample(seed, i))
        .collect::<Result<Vec<_>>>()?;
    let mut lines = String::new();
    let mut records = Vec::with_capacity(count);
    for (image, record) in samples {
        fs::write(images_dir.join(&record.image), image.encode_png()?)?;
        lines.push_str(&record.to_json_line());
        lines.push('\n');
        records.push(record);
    }
    let annotations = out_dir.join("annotations.jsonl");
    fs::write(&annotations, lines)?;
    Ok(SyntheticCorpus {
        images_dir,
        annotations,
        records,
    })
}
