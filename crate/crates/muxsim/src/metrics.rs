//! Quality bookkeeping: PSNR, per-GOP MSE variance, the variance-saving
//! percentage and the grid aggregation used for cross-class summaries.
//!
//! Variance uses the 1/N (population) convention; both the L2 variance and
//! the L1 absolute-deviation sum are computed per GOP, with the variance as
//! the headline metric.

use serde::{Deserialize, Serialize};

use crate::domain::{Distortion, RateBits, SuperGopIndex};
use crate::error::{Error, Result};
use crate::rdmodel::FeedbackRecord;

const PEAK_SQUARED: f64 = 255.0 * 255.0; // 8-bit luma

/// PSNR in dB for an 8-bit luma MSE.
pub fn psnr_from_mse(mse: Distortion) -> f64 {
    10.0 * (PEAK_SQUARED / mse.mse()).log10()
}

/// Inverse of [`psnr_from_mse`].
pub fn mse_from_psnr(psnr_db: f64) -> Result<Distortion> {
    if !psnr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("psnr must be finite, got {psnr_db}")));
    }
    Distortion::new(PEAK_SQUARED / 10f64.powf(psnr_db / 10.0))
}

/// Population (1/N) variance of the per-stream MSEs of one super GOP.
pub fn variance_of_mse(mses: &[Distortion]) -> Result<f64> {
    if mses.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "variance needs ≥ 2 values, got {}",
            mses.len()
        )));
    }
    let n = mses.len() as f64;
    let mean = mses.iter().map(|d| d.mse()).sum::<f64>() / n;
    Ok(mses.iter().map(|d| (d.mse() - mean).powi(2)).sum::<f64>() / n)
}

/// Sum of absolute deviations from the mean, the L1 form of the objective.
pub fn abs_dev_sum(mses: &[Distortion]) -> Result<f64> {
    if mses.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "abs deviation needs ≥ 2 values, got {}",
            mses.len()
        )));
    }
    let n = mses.len() as f64;
    let mean = mses.iter().map(|d| d.mse()).sum::<f64>() / n;
    Ok(mses.iter().map(|d| (d.mse() - mean).abs()).sum())
}

/// Percent of MSE variance saved by the candidate relative to the baseline.
pub fn saving(variance_baseline: f64, variance_candidate: f64) -> Result<f64> {
    if variance_baseline <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "saving undefined for baseline variance {variance_baseline}"
        )));
    }
    Ok(100.0 * (variance_baseline - variance_candidate) / variance_baseline)
}

/// Per-stream record inside a [`GopReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamGopRecord {
    pub allocated: RateBits,
    pub achieved: FeedbackRecord,
    pub psnr_db: f64,
}

impl StreamGopRecord {
    pub fn mse(&self) -> Distortion {
        self.achieved.achieved_distortion
    }
}

/// Everything recorded for one super GOP under one allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct GopReport {
    pub k: SuperGopIndex,
    pub streams: Vec<StreamGopRecord>,
    pub mean_mse: f64,
    pub variance_mse: f64,
    pub abs_dev: f64,
}

impl GopReport {
    pub fn new(k: SuperGopIndex, streams: Vec<StreamGopRecord>) -> Result<Self> {
        let mses: Vec<Distortion> = streams.iter().map(|s| s.mse()).collect();
        let mean_mse = mses.iter().map(|d| d.mse()).sum::<f64>() / mses.len() as f64;
        Ok(Self {
            k,
            mean_mse,
            variance_mse: variance_of_mse(&mses)?,
            abs_dev: abs_dev_sum(&mses)?,
            streams,
        })
    }
}

/// One allocator's full run: per-GOP reports plus the averages with the
/// first (uniformly initialized) super GOP excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub allocator_name: String,
    pub gops: Vec<GopReport>,
    pub average_variance: f64,
    pub average_abs_dev: f64,
    pub average_psnr_per_stream: Vec<f64>,
}

impl RunSummary {
    pub fn from_reports(allocator_name: String, gops: Vec<GopReport>) -> Result<Self> {
        if gops.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a run summary needs ≥ 2 super GOPs, got {}",
                gops.len()
            )));
        }
        // GOP 1 carries the uniform initialization, not the allocator.
        let rest = &gops[1..];
        let m = rest.len() as f64;
        let average_variance = rest.iter().map(|g| g.variance_mse).sum::<f64>() / m;
        let average_abs_dev = rest.iter().map(|g| g.abs_dev).sum::<f64>() / m;
        let n = gops[0].streams.len();
        let average_psnr_per_stream = (0..n)
            .map(|i| rest.iter().map(|g| g.streams[i].psnr_db).sum::<f64>() / m)
            .collect();
        Ok(Self { allocator_name, gops, average_variance, average_abs_dev, average_psnr_per_stream })
    }
}

/// One cell of the cross-class comparison grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePair {
    pub variance_baseline: f64,
    pub variance_candidate: f64,
}

impl VariancePair {
    pub fn saving(&self) -> Result<f64> {
        saving(self.variance_baseline, self.variance_candidate)
    }
}

/// Aggregated comparison grid: rows are complexity-measure configurations,
/// columns are scenario classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSummary {
    pub measure_labels: Vec<String>,
    pub class_labels: Vec<String>,
    /// `cells[row][col]`
    pub cells: Vec<Vec<VariancePair>>,
    pub savings: Vec<Vec<f64>>,
    /// Per row: mean baseline variance, mean candidate variance, mean of the
    /// per-class savings.
    pub row_avg_baseline: Vec<f64>,
    pub row_avg_candidate: Vec<f64>,
    pub row_avg_saving: Vec<f64>,
    /// Per column, averaged across measure rows; the column saving is the
    /// saving of the averaged variances.
    pub col_avg_baseline: Vec<f64>,
    pub col_avg_candidate: Vec<f64>,
    pub col_avg_saving: Vec<f64>,
    /// Mean of the per-row average savings.
    pub grand_average_saving: f64,
}

/// Builds the aggregate comparison from a non-empty rectangular grid of
/// (baseline, candidate) variance pairs.
///
/// Per-row average saving is the mean of the per-class savings, not the
/// saving of averaged variances; the grand average is the mean of the
/// per-row average savings.
pub fn aggregate_table(
    measure_labels: &[String],
    class_labels: &[String],
    cells: Vec<Vec<VariancePair>>,
) -> Result<TableSummary> {
    if cells.is_empty() || cells[0].is_empty() {
        return Err(Error::InvalidArgument("aggregate_table needs a non-empty grid".into()));
    }
    let rows = cells.len();
    let cols = cells[0].len();
    if measure_labels.len() != rows || class_labels.len() != cols {
        return Err(Error::InvalidArgument(format!(
            "label counts ({} × {}) do not match grid ({rows} × {cols})",
            measure_labels.len(),
            class_labels.len()
        )));
    }
    for (r, row) in cells.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidArgument(format!(
                "grid is not rectangular: row {r} has {} cells, expected {cols}",
                row.len()
            )));
        }
    }

    let mut savings = Vec::with_capacity(rows);
    for row in &cells {
        savings.push(row.iter().map(|c| c.saving()).collect::<Result<Vec<_>>>()?);
    }

    let row_avg_baseline: Vec<f64> = cells
        .iter()
        .map(|row| row.iter().map(|c| c.variance_baseline).sum::<f64>() / cols as f64)
        .collect();
    let row_avg_candidate: Vec<f64> = cells
        .iter()
        .map(|row| row.iter().map(|c| c.variance_candidate).sum::<f64>() / cols as f64)
        .collect();
    let row_avg_saving: Vec<f64> =
        savings.iter().map(|row| row.iter().sum::<f64>() / cols as f64).collect();

    let col_avg_baseline: Vec<f64> = (0..cols)
        .map(|c| cells.iter().map(|row| row[c].variance_baseline).sum::<f64>() / rows as f64)
        .collect();
    let col_avg_candidate: Vec<f64> = (0..cols)
        .map(|c| cells.iter().map(|row| row[c].variance_candidate).sum::<f64>() / rows as f64)
        .collect();
    let col_avg_saving: Vec<f64> = col_avg_baseline
        .iter()
        .zip(&col_avg_candidate)
        .map(|(b, c)| saving(*b, *c))
        .collect::<Result<Vec<_>>>()?;

    let grand_average_saving = row_avg_saving.iter().sum::<f64>() / rows as f64;

    Ok(TableSummary {
        measure_labels: measure_labels.to_vec(),
        class_labels: class_labels.to_vec(),
        cells,
        savings,
        row_avg_baseline,
        row_avg_candidate,
        row_avg_saving,
        col_avg_baseline,
        col_avg_candidate,
        col_avg_saving,
        grand_average_saving,
    })
}
