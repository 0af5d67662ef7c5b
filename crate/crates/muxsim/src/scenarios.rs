//! Bundled synthetic scenarios: a constant-parameter builder for tests and
//! a six-class pack sized like a broadcast multiplex benchmark
//! (2/5/4/4/3/3 streams at 20/10/4/1/2/6 Mbps).

use crate::alloc::Allocator;
use crate::complexity::ComplexityMeasure;
use crate::domain::{
    bps_to_bits_per_supergop, Complexity, GopTruth, RateBits, Scenario, StreamId, StreamTrace,
};
use crate::rdmodel::{EncoderKind, EncoderModel, SigmaDrift};
use crate::sim::RunConfig;

/// A scenario whose streams keep the same complexity and σ in every super
/// GOP. `streams` gives (complexity, sigma) per stream; `channel_rate` is
/// already in bits per super GOP.
pub fn constant_scenario(
    streams: &[(f64, f64)],
    channel_rate_bits: f64,
    gop_count: usize,
    seed: u64,
) -> Scenario {
    let streams = streams
        .iter()
        .enumerate()
        .map(|(i, &(c, sigma))| StreamTrace {
            stream: StreamId(i),
            name: format!("s{i}"),
            gops: (0..gop_count)
                .map(|_| GopTruth {
                    true_complexity: Complexity::new(c).expect("positive complexity"),
                    true_sigma: sigma,
                    measured_complexity: None,
                    rd_samples: Vec::new(),
                })
                .collect(),
        })
        .collect();
    Scenario {
        streams,
        channel_rate: RateBits::new(channel_rate_bits).expect("positive channel rate"),
        super_gop_frames: 10,
        frame_rate: 25.0,
        rng_seed: seed,
    }
}

struct ClassSpec {
    label: &'static str,
    rate_bps: f64,
    /// (complexity, relative distortion-load weight) per stream.
    streams: &'static [(f64, f64)],
}

// Relative weights set the spread of σ·C² within a class. A complexity-only
// allocator hands stream i a distortion proportional to w_i/C_i, so the
// weights are chosen to make that ratio spread widely (content whose σ·C²
// load is not predicted by its complexity). Budgets and stream counts follow
// the 6-class broadcast layout.
const CLASSES: [ClassSpec; 6] = [
    ClassSpec { label: "A", rate_bps: 20e6, streams: &[(4.0, 3.0), (6.5, 1.0)] },
    ClassSpec {
        label: "B",
        rate_bps: 10e6,
        streams: &[(1.5, 6.0), (3.0, 1.0), (4.5, 4.0), (6.0, 1.2), (8.0, 2.5)],
    },
    ClassSpec {
        label: "C",
        rate_bps: 4e6,
        streams: &[(2.0, 4.0), (3.5, 1.0), (5.0, 2.0), (2.5, 6.0)],
    },
    ClassSpec {
        label: "D",
        rate_bps: 1e6,
        streams: &[(1.0, 5.0), (1.8, 1.0), (2.6, 3.0), (3.4, 1.4)],
    },
    ClassSpec { label: "E", rate_bps: 2e6, streams: &[(1.2, 3.0), (2.4, 0.8), (3.6, 2.0)] },
    ClassSpec { label: "F", rate_bps: 6e6, streams: &[(2.2, 4.0), (4.4, 1.0), (6.6, 3.0)] },
];

const SUPER_GOP_FRAMES: u32 = 10;
const FRAME_RATE: f64 = 25.0;
const GOP_COUNT: usize = 13; // 12 measured super GOPs after the uniform one
const TARGET_MEAN_MSE: f64 = 40.0;

/// One `RunConfig` per class, all driven by the same seed. `noise_cv` sets
/// the look-ahead measurement inaccuracy; `drift` optionally turns on the
/// geometric AR(1) σ dynamics as (phi, innovation_sd), reverting each class
/// to its own mean σ level.
pub fn six_class_pack(
    seed: u64,
    noise_cv: f64,
    drift: Option<(f64, f64)>,
) -> Vec<(String, RunConfig)> {
    CLASSES
        .iter()
        .map(|spec| {
            let channel =
                bps_to_bits_per_supergop(spec.rate_bps, SUPER_GOP_FRAMES, FRAME_RATE)
                    .expect("valid class budget");
            let weight_sum: f64 = spec.streams.iter().map(|(_, w)| w).sum();
            // σ chosen so that the equal-quality operating point sits near
            // TARGET_MEAN_MSE for the class budget.
            let sigmas: Vec<f64> = spec
                .streams
                .iter()
                .map(|&(c, w)| TARGET_MEAN_MSE * channel.bits() * (w / weight_sum) / (c * c))
                .collect();
            let params: Vec<(f64, f64)> = spec
                .streams
                .iter()
                .zip(&sigmas)
                .map(|(&(c, _), &s)| (c, s))
                .collect();
            let mut scenario = constant_scenario(&params, channel.bits(), GOP_COUNT, seed);
            scenario.super_gop_frames = SUPER_GOP_FRAMES;
            scenario.frame_rate = FRAME_RATE;

            let mut encoder = EncoderModel::ideal();
            if let Some((phi, innovation_sd)) = drift {
                // log_mean: None → each stream reverts to its own σ level,
                // so the cross-stream load spread survives the dynamics.
                encoder.kind = EncoderKind::IdealHyperbolic;
                encoder.sigma_drift = Some(SigmaDrift { phi, innovation_sd, log_mean: None });
            }

            let measure = if noise_cv > 0.0 {
                ComplexityMeasure::NoisyOracle { noise_cv }
            } else {
                ComplexityMeasure::Oracle
            };
            let config = RunConfig::new(
                scenario,
                encoder,
                measure,
                vec![Allocator::Lam, Allocator::Lfam],
            );
            (spec.label.to_string(), config)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_scenario;

    #[test]
    fn pack_matches_class_layout() {
        let pack = six_class_pack(1, 0.2, Some((0.9, 0.1)));
        assert_eq!(pack.len(), 6);
        let counts: Vec<usize> =
            pack.iter().map(|(_, c)| c.scenario.stream_count()).collect();
        assert_eq!(counts, vec![2, 5, 4, 4, 3, 3]);
        for (_, config) in &pack {
            assert!(validate_scenario(&config.scenario).is_empty());
            assert_eq!(config.scenario.gop_count(), 13);
        }
        // class C budget: 4 Mbps at 10 frames / 25 fps
        assert_eq!(pack[2].1.scenario.channel_rate.bits(), 1_600_000.0);
    }
}
