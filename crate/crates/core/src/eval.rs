//! Boundary metrics and method comparison reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::postproc::BinaryEdgeMap;

/// Boundary precision/recall/F1 at a Chebyshev pixel tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tolerance_px: usize,
    pub pred_count: usize,
    pub truth_count: usize,
}

/// Per-stage wall-clock timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

impl TimingReport {
    pub fn new(stages: Vec<StageTiming>, total_seconds: f64, threads: usize) -> Self {
        Self {
            stages,
            total_seconds,
            threads,
        }
    }
}

/// Dilate a map by `tolerance` in the Chebyshev metric (square
/// structuring element).
fn chebyshev_dilate(map: &BinaryEdgeMap, tolerance: usize) -> Vec<bool> {
    let (w, h) = (map.width(), map.height());
    let t = tolerance as isize;
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if map.get(x, y) == 0 {
                continue;
            }
            let y_lo = (y as isize - t).max(0) as usize;
            let y_hi = ((y as isize + t) as usize).min(h - 1);
            let x_lo = (x as isize - t).max(0) as usize;
            let x_hi = ((x as isize + t) as usize).min(w - 1);
            for ny in y_lo..=y_hi {
                for nx in x_lo..=x_hi {
                    out[ny * w + nx] = true;
                }
            }
        }
    }
    out
}

fn check_dims(a: &BinaryEdgeMap, b: &BinaryEdgeMap) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::dims(format!(
            "edge maps are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Precision over predicted edge pixels, recall over truth pixels, both
/// with matches counted within a Chebyshev distance of `tolerance_px`.
pub fn boundary_f1(
    pred: &BinaryEdgeMap,
    truth: &BinaryEdgeMap,
    tolerance_px: usize,
) -> Result<BoundaryMetrics> {
    check_dims(pred, truth)?;
    let truth_zone = chebyshev_dilate(truth, tolerance_px);
    let pred_zone = chebyshev_dilate(pred, tolerance_px);

    let mut tp_pred = 0usize;
    let mut matched_truth = 0usize;
    for idx in 0..pred.bits().len() {
        if pred.bits()[idx] == 1 && truth_zone[idx] {
            tp_pred += 1;
        }
        if truth.bits()[idx] == 1 && pred_zone[idx] {
            matched_truth += 1;
        }
    }
    let pred_count = pred.count_ones();
    let truth_count = truth.count_ones();
    let precision = if pred_count > 0 {
        tp_pred as f64 / pred_count as f64
    } else {
        0.0
    };
    let recall = if truth_count > 0 {
        matched_truth as f64 / truth_count as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BoundaryMetrics {
        precision,
        recall,
        f1,
        tolerance_px,
        pred_count,
        truth_count,
    })
}

/// Machine-readable comparison of the two methods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    /// Fraction of pixels on which the two methods agree.
    pub agreement: f64,
    pub rpi_vs_truth: Option<BoundaryMetrics>,
    pub canny_vs_truth: Option<BoundaryMetrics>,
    pub timings: TimingReport,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Build a [`CompareReport`] for the two methods, with metrics against
/// ground truth when one is supplied.
pub fn compare_report(
    rpi: &BinaryEdgeMap,
    canny: &BinaryEdgeMap,
    truth: Option<&BinaryEdgeMap>,
    tolerance_px: usize,
    timings: TimingReport,
) -> Result<CompareReport> {
    check_dims(rpi, canny)?;
    let agree = rpi
        .bits()
        .iter()
        .zip(canny.bits())
        .filter(|(a, b)| a == b)
        .count();
    let agreement = agree as f64 / rpi.bits().len() as f64;
    let (rpi_vs_truth, canny_vs_truth) = match truth {
        Some(t) => (
            Some(boundary_f1(rpi, t, tolerance_px)?),
            Some(boundary_f1(canny, t, tolerance_px)?),
        ),
        None => (None, None),
    };
    Ok(CompareReport {
        schema_version: REPORT_SCHEMA_VERSION,
        agreement,
        rpi_vs_truth,
        canny_vs_truth,
        timings,
    })
}
