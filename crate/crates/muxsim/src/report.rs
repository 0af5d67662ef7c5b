//! Report emission: per-GOP and summary CSVs, aligned-text comparison
//! tables and gnuplot-friendly plot data.
//!
//! Floats are serialized with Rust's shortest-round-trip formatting, so
//! reading a CSV back reconstructs the in-memory values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::domain::{Distortion, RateBits};
use crate::error::{Error, Result};
use crate::metrics::{RunSummary, StreamGopRecord, TableSummary, VariancePair};
use crate::rdmodel::FeedbackRecord;
use crate::sim::Comparison;

pub const GOP_REPORT_FILE: &str = "gop_report.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TABLE_FILE: &str = "table1.txt";
pub const VARIANCE_PLOT_FILE: &str = "variance_per_gop.dat";

pub fn write_gop_report_csv(path: &Path, summaries: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["allocator", "gop", "stream", "allocated_bits", "achieved_bits", "mse", "psnr_db"])?;
    for summary in summaries {
        for gop in &summary.gops {
            for (i, s) in gop.streams.iter().enumerate() {
                w.write_record([
                    summary.allocator_name.as_str(),
                    &gop.k.0.to_string(),
                    &i.to_string(),
                    &s.allocated.bits().to_string(),
                    &s.achieved.achieved_rate.bits().to_string(),
                    &s.achieved.achieved_distortion.mse().to_string(),
                    &s.psnr_db.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a per-GOP report back into (allocator, gop, record) rows.
pub fn read_gop_report_csv(path: &Path) -> Result<Vec<(String, usize, StreamGopRecord)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Trace(format!("gop report: missing column {i}")))
        };
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .parse::<f64>()
                .map_err(|_| Error::Trace(format!("gop report: column {i} is not a number")))
        };
        rows.push((
            field(0)?.to_string(),
            num(1)? as usize,
            StreamGopRecord {
                allocated: RateBits::new(num(3)?)?,
                achieved: FeedbackRecord {
                    achieved_rate: RateBits::new(num(4)?)?,
                    achieved_distortion: Distortion::new(num(5)?)?,
                },
                psnr_db: num(6)?,
            },
        ));
    }
    Ok(rows)
}

pub fn write_summary_csv(
    path: &Path,
    summaries: &[RunSummary],
    class_label: &str,
    measure_label: &str,
) -> Result<()> {
    let n = summaries.first().map_or(0, |s| s.average_psnr_per_stream.len());
    let mut header: Vec<String> = ["allocator", "class", "measure", "avg_variance", "avg_abs_dev"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n).map(|i| format!("avg_psnr_{i}")));

    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for s in summaries {
        let mut row = vec![
            s.allocator_name.clone(),
            class_label.to_string(),
            measure_label.to_string(),
            s.average_variance.to_string(),
            s.average_abs_dev.to_string(),
        ];
        row.extend(s.average_psnr_per_stream.iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of a summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub allocator: String,
    pub class: String,
    pub measure: String,
    pub avg_variance: f64,
    pub avg_abs_dev: f64,
    pub avg_psnr_per_stream: Vec<f64>,
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 5 {
            return Err(Error::Trace(format!(
                "summary {}: expected ≥ 5 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| Error::Trace(format!("summary {}: bad number in column {i}", path.display())))
        };
        rows.push(SummaryRow {
            allocator: record[0].to_string(),
            class: record[1].to_string(),
            measure: record[2].to_string(),
            avg_variance: num(3)?,
            avg_abs_dev: num(4)?,
            avg_psnr_per_stream: (5..record.len()).map(num).collect::<Result<Vec<_>>>()?,
        });
    }
    Ok(rows)
}

/// Aligned-text summary of one run: average variance per allocator and the
/// saving of each allocator relative to the first one.
pub fn render_run_table(summaries: &[RunSummary], comparisons: &[Comparison]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>14} {:>14} {:>10}", "allocator", "avg_variance", "avg_abs_dev", "saving");
    for s in summaries {
        let saving = comparisons
            .iter()
            .find(|c| c.candidate == s.allocator_name)
            .map(|c| format!("{:.2}%", c.average_saving))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<10} {:>14.6} {:>14.6} {:>10}",
            s.allocator_name, s.average_variance, s.average_abs_dev, saving
        );
    }
    out
}

/// Aligned-text rendering of the cross-class comparison grid, one row block
/// per measure with baseline/candidate/saving lines plus the average row
/// and column.
pub fn render_aggregate_table(t: &TableSummary, baseline: &str, candidate: &str) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<12} {:<10}", "measure", "model");
    for c in &t.class_labels {
        let _ = write!(out, " {:>10}", c);
    }
    let _ = writeln!(out, " {:>10}", "Average");

    let mut line = |label: &str, model: &str, values: &[f64], avg: f64, pct: bool| {
        let _ = write!(out, "{:<12} {:<10}", label, model);
        for v in values {
            if pct {
                let _ = write!(out, " {:>9.2}%", v);
            } else {
                let _ = write!(out, " {:>10.2}", v);
            }
        }
        if pct {
            let _ = writeln!(out, " {:>9.2}%", avg);
        } else {
            let _ = writeln!(out, " {:>10.2}", avg);
        }
    };

    for (r, measure) in t.measure_labels.iter().enumerate() {
        let base: Vec<f64> = t.cells[r].iter().map(|c| c.variance_baseline).collect();
        let cand: Vec<f64> = t.cells[r].iter().map(|c| c.variance_candidate).collect();
        line(measure, baseline, &base, t.row_avg_baseline[r], false);
        line("", candidate, &cand, t.row_avg_candidate[r], false);
        line("", "saving", &t.savings[r], t.row_avg_saving[r], true);
    }
    line("Average", baseline, &t.col_avg_baseline, mean(&t.row_avg_baseline), false);
    line("", candidate, &t.col_avg_candidate, mean(&t.row_avg_candidate), false);
    line("", "saving", &t.col_avg_saving, t.grand_average_saving, true);
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Gnuplot-style per-GOP variance series, one `# allocator:` block per
/// allocator separated by blank lines.
pub fn write_variance_plot(path: &Path, summaries: &[RunSummary]) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# per-super-GOP MSE variance");
    let _ = writeln!(out, "# columns: gop variance_mse");
    for s in summaries {
        let _ = writeln!(out, "\n# allocator: {}", s.allocator_name);
        for gop in &s.gops {
            let _ = writeln!(out, "{} {}", gop.k.0 + 1, gop.variance_mse);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-stream fit results plus rate → 1/MSE plot blocks with the fitted line.
pub fn write_fit_outputs(
    out_dir: &Path,
    fits: &[(usize, f64, f64)],
    points: &[Vec<(f64, f64, f64)>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(out_dir.join("fit.csv"))?;
    w.write_record(["stream", "sigma_fit", "r_squared"])?;
    for (stream, sigma, r2) in fits {
        w.write_record([stream.to_string(), sigma.to_string(), r2.to_string()])?;
    }
    w.flush()?;

    let mut out = String::new();
    let _ = writeln!(out, "# rate vs 1/MSE with fitted line, one block per stream");
    let _ = writeln!(out, "# columns: rate inv_mse fitted_inv_mse");
    for ((stream, _, _), pts) in fits.iter().zip(points) {
        let _ = writeln!(out, "\n# stream: {stream}");
        for &(rate, inv_mse, fitted) in pts {
            let _ = writeln!(out, "{rate} {inv_mse} {fitted}");
        }
    }
    fs::write(out_dir.join("fit_plot.dat"), out)?;
    Ok(())
}

/// Measure labels, class labels, and the `cells[measure][class]` grid.
pub type VarianceGrid = (Vec<String>, Vec<String>, Vec<Vec<VariancePair>>);

/// Reads a comparison-grid fixture CSV with columns
/// `measure,class,variance_baseline,variance_candidate`.
pub fn read_variance_grid(path: &Path) -> Result<VarianceGrid> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut measures: Vec<String> = Vec::new();
    let mut classes: Vec<String> = Vec::new();
    let mut cells: std::collections::BTreeMap<(usize, usize), VariancePair> = Default::default();
    for record in reader.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Trace(format!(
                "variance grid: expected 4 columns, got {}",
                record.len()
            )));
        }
        let measure = record[0].to_string();
        let class = record[1].to_string();
        let baseline: f64 = record[2]
            .parse()
            .map_err(|_| Error::Trace("variance grid: bad baseline value".into()))?;
        let candidate: f64 = record[3]
            .parse()
            .map_err(|_| Error::Trace("variance grid: bad candidate value".into()))?;
        let r = measures.iter().position(|m| *m == measure).unwrap_or_else(|| {
            measures.push(measure);
            measures.len() - 1
        });
        let c = classes.iter().position(|m| *m == class).unwrap_or_else(|| {
            classes.push(class);
            classes.len() - 1
        });
        cells.insert((r, c), VariancePair { variance_baseline: baseline, variance_candidate: candidate });
    }
    let mut grid = Vec::with_capacity(measures.len());
    for (r, measure) in measures.iter().enumerate() {
        let mut row = Vec::with_capacity(classes.len());
        for (c, class) in classes.iter().enumerate() {
            row.push(*cells.get(&(r, c)).ok_or_else(|| {
                Error::Trace(format!(
                    "variance grid: missing cell for measure '{measure}' class '{class}'"
                ))
            })?);
        }
        grid.push(row);
    }
    Ok((measures, classes, grid))
}
