//! Implementations behind the CLI subcommands. Kept in the library so the
//! integration tests can drive them without spawning processes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::alloc::Allocator;
use crate::config::{self, LoadedConfig};
use crate::error::{Error, Result};
use crate::rdmodel::{self, EncoderKind};
use crate::report;
use crate::sim::{self, Comparison, RunConfig};
use crate::trace;

/// Savings in run tables are reported against this allocator when present,
/// otherwise against the first configured one.
fn baseline_allocator(allocators: &[Allocator]) -> Allocator {
    allocators
        .iter()
        .copied()
        .find(|a| *a == Allocator::Lam)
        .unwrap_or(allocators[0])
}

fn write_run_outputs(out_dir: &Path, config: &RunConfig, loaded: &LoadedConfig) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let result = sim::run_multiplex(config)?;
    let baseline = baseline_allocator(&config.allocators);
    // A perfectly balanced run has zero baseline variance and no defined
    // saving; drop that comparison instead of failing the whole run.
    let comparisons: Vec<Comparison> = config
        .allocators
        .iter()
        .filter(|&&a| a != baseline)
        .filter_map(|&a| match sim::compare_runs(&result, baseline.name(), a.name()) {
            Ok(c) => Some(Ok(c)),
            Err(Error::InvalidArgument(m)) => {
                log::warn!("skipping {} vs {a} comparison: {m}", baseline.name());
                None
            }
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<Vec<_>>>()?;

    report::write_gop_report_csv(&out_dir.join(report::GOP_REPORT_FILE), &result.summaries)?;
    report::write_summary_csv(
        &out_dir.join(report::SUMMARY_FILE),
        &result.summaries,
        &loaded.class_label,
        &loaded.measure_label,
    )?;
    fs::write(
        out_dir.join(report::TABLE_FILE),
        report::render_run_table(&result.summaries, &comparisons),
    )?;
    report::write_variance_plot(&out_dir.join(report::VARIANCE_PLOT_FILE), &result.summaries)?;
    Ok(())
}

fn run_seeds(loaded: &LoadedConfig, out_dir: &Path) -> Result<()> {
    if loaded.seeds.len() == 1 {
        let mut config = loaded.base.clone();
        config.seed = loaded.seeds[0];
        config.scenario.rng_seed = loaded.seeds[0];
        return write_run_outputs(out_dir, &config, loaded);
    }
    loaded
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut config = loaded.base.clone();
            config.seed = seed;
            config.scenario.rng_seed = seed;
            write_run_outputs(&out_dir.join(format!("seed_{seed:04}")), &config, loaded)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(())
}

fn apply_overrides(
    loaded: &mut LoadedConfig,
    seed: Option<u64>,
    allocators: Option<&[String]>,
) -> Result<()> {
    if let Some(seed) = seed {
        loaded.seeds = vec![seed];
    }
    if let Some(names) = allocators {
        loaded.base.allocators = names
            .iter()
            .map(|n| n.parse::<Allocator>())
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(())
}

pub fn cmd_simulate(
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    allocators: Option<&[String]>,
) -> Result<()> {
    let mut loaded = config::load_config(config_path)?;
    apply_overrides(&mut loaded, seed, allocators)?;
    run_seeds(&loaded, out_dir)
}

pub fn cmd_replay(
    trace_path: &Path,
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    allocators: Option<&[String]>,
) -> Result<()> {
    let text = fs::read_to_string(config_path)?;
    let file = config::parse_config(&text)?;
    let trace = trace::load_trace(trace_path)?;

    let run_seed = seed.unwrap_or(file.run.seed);
    let channel_rate = config::resolve_channel_rate(&file.scenario)?;
    let scenario = trace::scenario_from_trace(
        &trace,
        channel_rate,
        file.scenario.super_gop_frames,
        file.scenario.frame_rate,
        run_seed,
    )?;

    let mut encoder = config::build_encoder(&file.encoder);
    if encoder.kind != EncoderKind::TraceReplay {
        log::info!("replay: forcing encoder kind to trace-replay");
        encoder.kind = EncoderKind::TraceReplay;
    }
    let allocator_names: Vec<String> =
        allocators.map(|a| a.to_vec()).unwrap_or_else(|| file.run.allocators.clone());
    let parsed = allocator_names
        .iter()
        .map(|n| n.parse::<Allocator>())
        .collect::<Result<Vec<_>>>()?;

    let mut base = RunConfig::new(scenario, encoder, config::build_measure(&file.complexity), parsed);
    base.floor_fraction = file.run.floor_fraction;
    base.seed = run_seed;

    let loaded = LoadedConfig {
        base,
        seeds: vec![run_seed],
        class_label: file.meta.class.clone().unwrap_or_else(|| "default".into()),
        measure_label: file.meta.measure.clone().unwrap_or_else(|| "default".into()),
    };
    run_seeds(&loaded, out_dir)
}

pub fn cmd_fit(trace_path: &Path, out_dir: &Path) -> Result<()> {
    let trace = trace::load_trace(trace_path)?;
    fs::create_dir_all(out_dir)?;

    let mut fits = Vec::with_capacity(trace.stream_count);
    let mut plot_points = Vec::with_capacity(trace.stream_count);
    for s in 0..trace.stream_count {
        let points: Vec<(f64, f64, f64)> = (0..trace.gop_count)
            .flat_map(|g| {
                let c = trace.complexity[s][g];
                trace.samples[s][g]
                    .iter()
                    .map(move |p| (p.rate.bits(), p.distortion.mse(), c))
            })
            .collect();
        if points.len() < 3 {
            return Err(Error::Trace(format!(
                "stream {s}: fit needs ≥ 3 R-D samples, trace has {}",
                points.len()
            )));
        }
        let (sigma, r2) = rdmodel::fit_hyperbolic_pooled(&points)
            .map_err(|e| Error::Trace(format!("stream {s}: {e}")))?;
        let pts = points
            .iter()
            .map(|&(rate, mse, c)| (rate, 1.0 / mse, rate / (c * c) / sigma))
            .collect();
        fits.push((s, sigma, r2));
        plot_points.push(pts);
    }
    report::write_fit_outputs(out_dir, &fits, &plot_points)
}

/// Baseline/candidate allocator names used by the aggregate report.
pub const REPORT_BASELINE: &str = "lam";
pub const REPORT_CANDIDATE: &str = "lfam";

fn grid_from_run_dirs(run_dirs: &[PathBuf]) -> Result<report::VarianceGrid> {
    // (measure, class) → (baseline variance, candidate variance)
    let mut cells: BTreeMap<(String, String), (Option<f64>, Option<f64>)> = BTreeMap::new();
    let mut measures: Vec<String> = Vec::new();
    let mut classes: Vec<String> = Vec::new();
    for dir in run_dirs {
        let rows = report::read_summary_csv(&dir.join(report::SUMMARY_FILE))?;
        for row in rows {
            if !measures.contains(&row.measure) {
                measures.push(row.measure.clone());
            }
            if !classes.contains(&row.class) {
                classes.push(row.class.clone());
            }
            let cell = cells.entry((row.measure.clone(), row.class.clone())).or_default();
            match row.allocator.as_str() {
                REPORT_BASELINE => cell.0 = Some(row.avg_variance),
                REPORT_CANDIDATE => cell.1 = Some(row.avg_variance),
                _ => {}
            }
        }
    }
    let mut grid = Vec::with_capacity(measures.len());
    for m in &measures {
        let mut row = Vec::with_capacity(classes.len());
        for c in &classes {
            match cells.get(&(m.clone(), c.clone())) {
                Some((Some(b), Some(cand))) => row.push(crate::metrics::VariancePair {
                    variance_baseline: *b,
                    variance_candidate: *cand,
                }),
                _ => {
                    return Err(Error::Trace(format!(
                        "inconsistent run grid: measure '{m}' class '{c}' lacks \
                         {REPORT_BASELINE}/{REPORT_CANDIDATE} variances"
                    )))
                }
            }
        }
        grid.push(row);
    }
    Ok((measures, classes, grid))
}

pub fn cmd_report(run_dirs: &[PathBuf], fixture: Option<&Path>, out_path: &Path) -> Result<()> {
    let (measures, classes, grid) = match fixture {
        Some(path) => report::read_variance_grid(path)?,
        None => {
            if run_dirs.is_empty() {
                return Err(Error::InvalidArgument(
                    "report needs run directories or --fixture".into(),
                ));
            }
            grid_from_run_dirs(run_dirs)?
        }
    };
    let table = crate::metrics::aggregate_table(&measures, &classes, grid)?;
    let rendered = report::render_aggregate_table(&table, REPORT_BASELINE, REPORT_CANDIDATE);
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out_path, &rendered)?;
    print!("{rendered}");
    Ok(())
}
