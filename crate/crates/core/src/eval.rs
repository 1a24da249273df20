//! Batch evaluation: synthesize clicks or boxes from ground-truth polygons,
//! segment, and aggregate IoU per material class.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::annotations::{AnnotationRecord, MaterialClass};
use crate::error::{Error, Result};
use crate::grabcut::SegmentationConfig;
use crate::init::ExtremeClicks;
use crate::pipeline::{segment_region, Mode, Region};
use crate::raster::{decode_image, iou, rasterize_polygon, BinaryMask, Point};

fn lower_median(mut values: Vec<usize>) -> usize {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

/// Extreme points of a mask. Ties along an extremal row or column resolve to
/// the lower median of the other coordinate.
pub fn extract_extreme_points(mask: &BinaryMask) -> Result<ExtremeClicks> {
    let pts: Vec<Point> = mask.points().collect();
    if pts.is_empty() {
        return Err(Error::EmptyMask);
    }
    let min_y = pts.iter().map(|p| p.y).min().unwrap();
    let max_y = pts.iter().map(|p| p.y).max().unwrap();
    let min_x = pts.iter().map(|p| p.x).min().unwrap();
    let max_x = pts.iter().map(|p| p.x).max().unwrap();
    let xs_at = |y: usize| pts.iter().filter(|p| p.y == y).map(|p| p.x).collect();
    let ys_at = |x: usize| pts.iter().filter(|p| p.x == x).map(|p| p.y).collect();
    Ok(ExtremeClicks {
        top: Point::new(lower_median(xs_at(min_y)), min_y),
        bottom: Point::new(lower_median(xs_at(max_y)), max_y),
        left: Point::new(min_x, lower_median(ys_at(min_x))),
        right: Point::new(max_x, lower_median(ys_at(max_x))),
    })
}

/// Order-independent sum: sorted values, pairwise reduction.
fn stable_sum(values: &[f64]) -> f64 {
    fn pairwise(v: &[f64]) -> f64 {
        match v.len() {
            0 => 0.0,
            1 => v[0],
            n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
        }
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    pairwise(&sorted)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| stable_sum(values) / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub count: usize,
    pub mean_iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalFailure {
    pub index: usize,
    pub image: String,
    pub reason: String,
}

/// Outcome of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordOutcome {
    pub index: usize,
    pub class: MaterialClass,
    pub iou: f64,
}

/// IoUs are fractions in `[0, 1]`; the JSON form reports percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: Mode,
    pub config: SegmentationConfig,
    pub per_class: BTreeMap<MaterialClass, ClassScore>,
    pub overall_micro: f64,
    pub overall_macro: f64,
    pub outcomes: Vec<RecordOutcome>,
    pub failures: Vec<EvalFailure>,
}

fn percent(v: f64) -> f64 {
    (v * 1000.0).round() / 10.0
}

#[derive(Serialize)]
struct ClassJson {
    count: usize,
    mean_iou: Option<f64>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    mode: Mode,
    config: &'a SegmentationConfig,
    total: usize,
    evaluated: usize,
    per_class: BTreeMap<&'static str, ClassJson>,
    overall_micro: f64,
    overall_macro: f64,
    failures: &'a [EvalFailure],
}

impl EvalReport {
    pub fn evaluated(&self) -> usize {
        self.outcomes.len()
    }

    pub fn total(&self) -> usize {
        self.outcomes.len() + self.failures.len()
    }

    /// Report document; IoUs as percentages rounded to one decimal.
    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            mode: self.mode,
            config: &self.config,
            total: self.total(),
            evaluated: self.evaluated(),
            per_class: self
                .per_class
                .iter()
                .map(|(c, s)| {
                    (
                        c.name(),
                        ClassJson {
                            count: s.count,
                            mean_iou: s.mean_iou.map(percent),
                        },
                    )
                })
                .collect(),
            overall_micro: percent(self.overall_micro),
            overall_macro: percent(self.overall_macro),
            failures: &self.failures,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text summary: headline means and a five-column class grid.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "Segmentation mean IOU (%), mode {}\n  micro {:.1}   macro {:.1}   ({} evaluated, {} failed)\n\nIOU by class (%)\n",
            self.mode,
            percent(self.overall_micro),
            percent(self.overall_macro),
            self.evaluated(),
            self.failures.len()
        );
        for row in MaterialClass::ALL.chunks(5) {
            let names: Vec<String> = row.iter().map(|c| format!("{:>9}", c.name())).collect();
            let vals: Vec<String> = row
                .iter()
                .map(|c| match self.per_class.get(c).and_then(|s| s.mean_iou) {
                    Some(v) => format!("{:>9.1}", percent(v)),
                    None => format!("{:>9}", "-"),
                })
                .collect();
            out.push_str(&names.join(" "));
            out.push('\n');
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Evaluates one record: rasterize, derive the region, segment, score.
pub fn evaluate_record(
    record: &AnnotationRecord,
    images_root: &Path,
    mode: Mode,
    config: &SegmentationConfig,
) -> Result<f64> {
    let bytes = std::fs::read(images_root.join(&record.image))?;
    let image = decode_image(&bytes)?;
    let gt = rasterize_polygon(&record.polygon, image.width(), image.height())?;
    let region = match mode {
        Mode::Extr => Region::Clicks(extract_extreme_points(&gt)?),
        Mode::Rect => Region::Box(gt.bounding_box().ok_or(Error::EmptyMask)?),
    };
    let result = segment_region(&image, &region, config)?;
    iou(&result.mask, &gt)
}

/// Runs every record on a pool of `jobs` workers and aggregates the scores.
/// Aggregation sorts values before summing, so the report does not depend
/// on record order or scheduling.
pub fn evaluate_corpus(
    records: &[AnnotationRecord],
    images_root: &Path,
    mode: Mode,
    config: &SegmentationConfig,
    jobs: usize,
) -> Result<EvalReport> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::NoValidRecords);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let results: Vec<Result<f64>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| evaluate_record(r, images_root, mode, config))
            .collect()
    });

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (index, (record, result)) in records.iter().zip(results).enumerate() {
        match result {
            Ok(iou) => outcomes.push(RecordOutcome {
                index,
                class: record.class,
                iou,
            }),
            Err(e) => failures.push(EvalFailure {
                index,
                image: record.image.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if outcomes.is_empty() {
        return Err(Error::NoValidRecords);
    }

    let mut per_class = BTreeMap::new();
    let mut class_means = Vec::new();
    for class in MaterialClass::ALL {
        let values: Vec<f64> = outcomes.iter().filter(|o| o.class == class).map(|o| o.iou).collect();
        let mean_iou = mean(&values);
        class_means.extend(mean_iou);
        per_class.insert(
            class,
            ClassScore {
                count: values.len(),
                mean_iou,
            },
        );
    }
    let all: Vec<f64> = outcomes.iter().map(|o| o.iou).collect();
    Ok(EvalReport {
        mode,
        config: *config,
        per_class,
        overall_micro: mean(&all).unwrap_or(0.0),
        overall_macro: mean(&class_means).unwrap_or(0.0),
        outcomes,
        failures,
    })
}
