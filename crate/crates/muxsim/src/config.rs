//! Run configuration files.
//!
//! A config is one TOML document with an explicit `schema_version`; unknown
//! keys are hard errors so a typo cannot silently fall back to a default.

use std::path::Path;

use serde::Deserialize;

use crate::alloc::{Allocator, DEFAULT_FLOOR_FRACTION};
use crate::complexity::ComplexityMeasure;
use crate::domain::{
    bps_to_bits_per_supergop, Complexity, GopTruth, Scenario, StreamId, StreamTrace,
};
use crate::error::{Error, Result};
use crate::rdmodel::{EncoderKind, EncoderModel, EncoderNoise, RateModelParams, SigmaDrift};
use crate::sim::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// A scalar broadcast over every super GOP, or one value per super GOP.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerGop {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerGop {
    fn resolve(&self, gop_count: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerGop::Scalar(v) => Ok(vec![*v; gop_count]),
            PerGop::List(vs) if vs.len() == gop_count => Ok(vs.clone()),
            PerGop::List(vs) => Err(Error::Config(format!(
                "{what}: expected {gop_count} per-GOP values, got {}",
                vs.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    pub name: Option<String>,
    pub complexity: PerGop,
    pub sigma: PerGop,
    /// External look-ahead values for the trace-provided measure.
    pub measured_complexity: Option<PerGop>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub channel_rate_bps: Option<f64>,
    /// Channel budget already expressed per super GOP; mutually exclusive
    /// with `channel_rate_bps`.
    pub channel_rate_bits: Option<f64>,
    #[serde(default = "default_super_gop_frames")]
    pub super_gop_frames: u32,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default = "default_num_super_gops")]
    pub num_super_gops: usize,
    #[serde(default)]
    pub streams: Vec<StreamSection>,
}

fn default_super_gop_frames() -> u32 {
    10
}

fn default_frame_rate() -> f64 {
    25.0
}

fn default_num_super_gops() -> usize {
    13
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaDriftSection {
    pub phi: f64,
    pub innovation_sd: f64,
    /// Omit to revert each stream toward its own starting σ level.
    pub log_mean: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSection {
    pub kind: EncoderKind,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "default_a")]
    pub c_lambda: f64,
    #[serde(default)]
    pub rate_cv: f64,
    #[serde(default)]
    pub dist_cv: f64,
    pub sigma_drift: Option<SigmaDriftSection>,
}

fn default_a() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
#[serde(tag = "kind")]
pub enum ComplexitySection {
    Oracle,
    BiasedOracle { biases: Vec<f64> },
    NoisyOracle { noise_cv: f64 },
    TraceProvided,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_allocators")]
    pub allocators: Vec<String>,
    #[serde(default = "default_floor_fraction")]
    pub floor_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Optional seed sweep; when present each seed becomes one run.
    pub seeds: Option<Vec<u64>>,
}

fn default_allocators() -> Vec<String> {
    vec!["lam".into(), "lfam".into()]
}

fn default_floor_fraction() -> f64 {
    DEFAULT_FLOOR_FRACTION
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            allocators: default_allocators(),
            floor_fraction: default_floor_fraction(),
            seed: 0,
            seeds: None,
        }
    }
}

/// Labels used when several runs are aggregated into a comparison grid.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    pub class: Option<String>,
    pub measure: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub meta: MetaSection,
    pub scenario: ScenarioSection,
    pub encoder: EncoderSection,
    pub complexity: ComplexitySection,
    #[serde(default)]
    pub run: RunSection,
}

/// A parsed and validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub base: RunConfig,
    /// All seeds to run; a single-element vector unless `run.seeds` is set.
    pub seeds: Vec<u64>,
    pub class_label: String,
    pub measure_label: String,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    Ok(file)
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)?;
    let file = parse_config(&text)?;
    build(&file)
}

fn build_streams(section: &ScenarioSection) -> Result<Vec<StreamTrace>> {
    let k = section.num_super_gops;
    let mut streams = Vec::with_capacity(section.streams.len());
    for (i, s) in section.streams.iter().enumerate() {
        let complexities = s.complexity.resolve(k, &format!("streams[{i}].complexity"))?;
        let sigmas = s.sigma.resolve(k, &format!("streams[{i}].sigma"))?;
        let measured = match &s.measured_complexity {
            Some(m) => Some(m.resolve(k, &format!("streams[{i}].measured_complexity"))?),
            None => None,
        };
        let gops = (0..k)
            .map(|g| {
                Ok(GopTruth {
                    true_complexity: Complexity::new(complexities[g]).map_err(|e| {
                        Error::Config(format!("streams[{i}].complexity[{g}]: {e}"))
                    })?,
                    true_sigma: sigmas[g],
                    measured_complexity: match &measured {
                        Some(m) => Some(Complexity::new(m[g]).map_err(|e| {
                            Error::Config(format!("streams[{i}].measured_complexity[{g}]: {e}"))
                        })?),
                        None => None,
                    },
                    rd_samples: Vec::new(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        streams.push(StreamTrace {
            stream: StreamId(i),
            name: s.name.clone().unwrap_or_else(|| format!("s{i}")),
            gops,
        });
    }
    Ok(streams)
}

pub fn resolve_channel_rate(section: &ScenarioSection) -> Result<crate::domain::RateBits> {
    match (section.channel_rate_bps, section.channel_rate_bits) {
        (Some(bps), None) => {
            let bits =
                bps_to_bits_per_supergop(bps, section.super_gop_frames, section.frame_rate)
                    .map_err(|e| Error::Config(format!("scenario.channel_rate_bps: {e}")))?;
            log::info!(
                "channel rate: {bps} bps → {} bits per super GOP ({} frames at {} fps)",
                bits.bits(),
                section.super_gop_frames,
                section.frame_rate
            );
            Ok(bits)
        }
        (None, Some(bits)) => crate::domain::RateBits::new(bits)
            .map_err(|e| Error::Config(format!("scenario.channel_rate_bits: {e}"))),
        (Some(_), Some(_)) => Err(Error::Config(
            "set exactly one of channel_rate_bps / channel_rate_bits, not both".into(),
        )),
        (None, None) => Err(Error::Config(
            "scenario needs channel_rate_bps or channel_rate_bits".into(),
        )),
    }
}

pub fn build_scenario(section: &ScenarioSection, seed: u64) -> Result<Scenario> {
    Ok(Scenario {
        streams: build_streams(section)?,
        channel_rate: resolve_channel_rate(section)?,
        super_gop_frames: section.super_gop_frames,
        frame_rate: section.frame_rate,
        rng_seed: seed,
    })
}

pub fn build_encoder(section: &EncoderSection) -> EncoderModel {
    EncoderModel {
        kind: section.kind,
        params: RateModelParams { a: section.a, b: section.b, c_lambda: section.c_lambda },
        noise: EncoderNoise { rate_cv: section.rate_cv, dist_cv: section.dist_cv },
        sigma_drift: section.sigma_drift.as_ref().map(|d| SigmaDrift {
            phi: d.phi,
            innovation_sd: d.innovation_sd,
            log_mean: d.log_mean,
        }),
    }
}

pub fn build_measure(section: &ComplexitySection) -> ComplexityMeasure {
    match section {
        ComplexitySection::Oracle => ComplexityMeasure::Oracle,
        ComplexitySection::BiasedOracle { biases } => {
            ComplexityMeasure::BiasedOracle { bias_per_stream: biases.clone() }
        }
        ComplexitySection::NoisyOracle { noise_cv } => {
            ComplexityMeasure::NoisyOracle { noise_cv: *noise_cv }
        }
        ComplexitySection::TraceProvided => ComplexityMeasure::TraceProvided,
    }
}

pub fn build(file: &ConfigFile) -> Result<LoadedConfig> {
    if file.scenario.streams.is_empty() {
        return Err(Error::Config(
            "scenario declares no streams (replay mode takes them from the trace)".into(),
        ));
    }
    let scenario = build_scenario(&file.scenario, file.run.seed)?;
    let allocators = file
        .run
        .allocators
        .iter()
        .map(|name| name.parse::<Allocator>())
        .collect::<Result<Vec<_>>>()?;

    let mut base = RunConfig::new(scenario, build_encoder(&file.encoder), build_measure(&file.complexity), allocators);
    base.floor_fraction = file.run.floor_fraction;
    base.seed = file.run.seed;

    let seeds = file.run.seeds.clone().unwrap_or_else(|| vec![file.run.seed]);
    if seeds.is_empty() {
        return Err(Error::Config("run.seeds must not be empty".into()));
    }
    Ok(LoadedConfig {
        base,
        seeds,
        class_label: file.meta.class.clone().unwrap_or_else(|| "default".into()),
        measure_label: file.meta.measure.clone().unwrap_or_else(|| "default".into()),
    })
}
