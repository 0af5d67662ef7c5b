//! The closed-loop multiplexing harness.
//!
//! Per super GOP: gather encoder feedback, measure look-ahead complexity,
//! allocate the channel, encode, record. Each configured allocator replays
//! the same ground-truth σ/complexity paths and the same noise draws, so
//! allocator comparisons are paired.

use crate::alloc::{
    self, AllocationDecision, AllocationInput, Allocator, StreamInput, DEFAULT_FLOOR_FRACTION,
};
use crate::complexity::{self, ComplexityMeasure};
use crate::domain::{validate_scenario, Complexity, Scenario, StreamId, SuperGopIndex};
use crate::error::{Error, Result};
use crate::metrics::{self, GopReport, RunSummary, StreamGopRecord};
use crate::rdmodel::{self, EncoderModel, FeedbackRecord, TrueState};
use crate::rng::{substream, DOMAIN_COMPLEXITY, DOMAIN_ENCODER, DOMAIN_SIGMA_DRIFT};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub encoder: EncoderModel,
    pub complexity_measure: ComplexityMeasure,
    pub allocators: Vec<Allocator>,
    pub floor_fraction: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(
        scenario: Scenario,
        encoder: EncoderModel,
        complexity_measure: ComplexityMeasure,
        allocators: Vec<Allocator>,
    ) -> Self {
        let seed = scenario.rng_seed;
        Self {
            scenario,
            encoder,
            complexity_measure,
            allocators,
            floor_fraction: DEFAULT_FLOOR_FRACTION,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let violations = validate_scenario(&self.scenario);
        if !violations.is_empty() {
            return Err(Error::InvalidScenario(violations));
        }
        self.encoder.validate()?;
        self.complexity_measure.validate(self.scenario.stream_count())?;
        if self.allocators.is_empty() {
            return Err(Error::InvalidArgument("allocator list must not be empty".into()));
        }
        Ok(())
    }
}

/// The realization shared by every allocator within one run.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `sigma[k][i]`: the true σ of stream `i` in super GOP `k`.
    pub sigma: Vec<Vec<f64>>,
    pub true_complexity: Vec<Vec<Complexity>>,
    /// What the configured look-ahead measure reported.
    pub measured_complexity: Vec<Vec<Complexity>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// One summary per configured allocator, in configuration order.
    pub summaries: Vec<RunSummary>,
    pub ground_truth: GroundTruth,
}

impl RunResult {
    pub fn summary(&self, name: &str) -> Result<&RunSummary> {
        self.summaries
            .iter()
            .find(|s| s.allocator_name == name)
            .ok_or_else(|| Error::UnknownAllocator(name.to_string()))
    }
}

fn with_context(err: Error, allocator: Allocator, stream: usize, gop: usize) -> Error {
    match err {
        Error::InvalidArgument(m) => {
            Error::InvalidArgument(format!("[{allocator} stream {stream} GOP {gop}] {m}"))
        }
        Error::DivisionByZero(m) => {
            Error::DivisionByZero(format!("[{allocator} stream {stream} GOP {gop}] {m}"))
        }
        Error::MissingData(m) => {
            Error::MissingData(format!("[{allocator} stream {stream} GOP {gop}] {m}"))
        }
        other => other,
    }
}

fn materialize_ground_truth(config: &RunConfig) -> Result<GroundTruth> {
    let s = &config.scenario;
    let (n, k_count) = (s.stream_count(), s.gop_count());
    let mut sigma = vec![vec![0.0; n]; k_count];
    let mut true_complexity = vec![Vec::with_capacity(n); k_count];
    let mut measured = vec![Vec::with_capacity(n); k_count];

    for (i, st) in s.streams.iter().enumerate() {
        for k in 0..k_count {
            sigma[k][i] = match (&config.encoder.sigma_drift, k) {
                (Some(_), 0) | (None, _) => st.gops[k].true_sigma,
                (Some(drift), _) => {
                    // A drift without an explicit mean reverts each stream
                    // to its own starting level.
                    let mut drift = *drift;
                    drift.log_mean.get_or_insert_with(|| st.gops[0].true_sigma.ln());
                    let mut rng = substream(config.seed, DOMAIN_SIGMA_DRIFT, (k * n + i) as u64);
                    rdmodel::step_sigma_drift(&drift, sigma[k - 1][i], &mut rng)
                }
            };
        }
    }
    for k in 0..k_count {
        for (i, st) in s.streams.iter().enumerate() {
            let gop = &st.gops[k];
            true_complexity[k].push(gop.true_complexity);
            let mut rng = substream(config.seed, DOMAIN_COMPLEXITY, (k * n + i) as u64);
            let m = complexity::measure(
                &config.complexity_measure,
                gop.true_complexity,
                gop.measured_complexity,
                StreamId(i),
                &mut rng,
            )?;
            measured[k].push(m);
        }
    }
    Ok(GroundTruth { sigma, true_complexity, measured_complexity: measured })
}

fn decide(
    allocator: Allocator,
    config: &RunConfig,
    truth: &GroundTruth,
    k_next: usize,
    feedback: &[FeedbackRecord],
) -> Result<AllocationDecision> {
    let s = &config.scenario;
    let n = s.stream_count();
    match allocator {
        Allocator::Uniform => alloc::allocate_uniform(n, s.channel_rate),
        Allocator::Lam => alloc::allocate_lam(
            &truth.measured_complexity[k_next],
            s.channel_rate,
            config.floor_fraction,
        ),
        Allocator::Lfam => {
            let streams = (0..n)
                .map(|i| StreamInput {
                    c_prev: truth.measured_complexity[k_next - 1][i],
                    c_next: truth.measured_complexity[k_next][i],
                    feedback: Some(feedback[i]),
                })
                .collect();
            alloc::allocate_lfam(&AllocationInput {
                streams,
                channel_rate: s.channel_rate,
                floor_fraction: config.floor_fraction,
            })
        }
        Allocator::Oracle => alloc::allocate_oracle(
            &truth.sigma[k_next],
            &truth.true_complexity[k_next],
            s.channel_rate,
            config.floor_fraction,
        ),
    }
}

fn run_one_allocator(
    allocator: Allocator,
    config: &RunConfig,
    truth: &GroundTruth,
) -> Result<RunSummary> {
    let s = &config.scenario;
    let (n, k_count) = (s.stream_count(), s.gop_count());
    let mut reports = Vec::with_capacity(k_count);
    // The first super GOP is always split uniformly: no feedback exists yet.
    let mut decision = alloc::allocate_uniform(n, s.channel_rate)?;

    for k in 0..k_count {
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let state = TrueState {
                complexity: truth.true_complexity[k][i],
                sigma: truth.sigma[k][i],
                rd_samples: &s.streams[i].gops[k].rd_samples,
            };
            let mut rng = substream(config.seed, DOMAIN_ENCODER, (k * n + i) as u64);
            let achieved =
                rdmodel::encode_supergop(&config.encoder, state, decision.shares[i], &mut rng)
                    .map_err(|e| with_context(e, allocator, i, k))?;
            records.push(StreamGopRecord {
                allocated: decision.shares[i],
                achieved,
                psnr_db: metrics::psnr_from_mse(achieved.achieved_distortion),
            });
        }
        let feedback: Vec<FeedbackRecord> = records.iter().map(|r| r.achieved).collect();
        reports.push(GopReport::new(SuperGopIndex(k), records)?);

        if k + 1 < k_count {
            decision = decide(allocator, config, truth, k + 1, &feedback)
                .map_err(|e| with_context(e, allocator, usize::MAX, k + 1))?;
        }
    }
    RunSummary::from_reports(allocator.name().to_string(), reports)
}

/// Runs every configured allocator over the same random realization.
pub fn run_multiplex(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let truth = materialize_ground_truth(config)?;
    let summaries = config
        .allocators
        .iter()
        .map(|&a| run_one_allocator(a, config, &truth))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult { summaries, ground_truth: truth })
}

/// Per-GOP and average variance saving of `candidate` over `baseline`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    /// Savings for super GOPs 2..K (the initialization GOP is excluded),
    /// so the series is one shorter than the GOP count.
    pub per_gop_saving: Vec<f64>,
    /// Saving of the average variances over super GOPs 2..K.
    pub average_saving: f64,
}

pub fn compare_runs(result: &RunResult, baseline: &str, candidate: &str) -> Result<Comparison> {
    let b = result.summary(baseline)?;
    let c = result.summary(candidate)?;
    let per_gop_saving = b.gops[1..]
        .iter()
        .zip(&c.gops[1..])
        .map(|(bg, cg)| metrics::saving(bg.variance_mse, cg.variance_mse))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        baseline: baseline.to_string(),
        candidate: candidate.to_string(),
        per_gop_saving,
        average_saving: metrics::saving(b.average_variance, c.average_variance)?,
    })
}
