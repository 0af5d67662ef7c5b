//! Core domain types shared by every other module.
//!
//! All rates inside the allocation loop are expressed in bits per super GOP.
//! Per-second budgets are converted exactly once, at scenario load, by
//! [`bps_to_bits_per_supergop`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bit budget for one super GOP. Non-negative and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RateBits(f64);

impl RateBits {
    pub fn new(bits: f64) -> Result<Self> {
        if !bits.is_finite() || bits < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "rate must be finite and non-negative, got {bits}"
            )));
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

/// Luma mean squared error of one super GOP. Strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Distortion(f64);

impl Distortion {
    pub fn new(mse: f64) -> Result<Self> {
        if !mse.is_finite() || mse <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "distortion (MSE) must be finite and positive, got {mse}"
            )));
        }
        Ok(Self(mse))
    }

    pub fn mse(self) -> f64 {
        self.0
    }
}

/// Dimensionless look-ahead complexity measure. Strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Complexity(f64);

impl Complexity {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "complexity must be finite and positive, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Index of a stream within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StreamId(pub usize);

/// Zero-based index of a super GOP within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SuperGopIndex(pub usize);

/// One sampled operating point on a stream's R-D curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdSample {
    pub rate: RateBits,
    pub distortion: Distortion,
}

/// Ground truth for one stream in one super GOP.
#[derive(Debug, Clone, PartialEq)]
pub struct GopTruth {
    pub true_complexity: Complexity,
    /// Proportionality constant of the hyperbolic R-D law for this GOP.
    pub true_sigma: f64,
    /// Complexity as reported by an external look-ahead analyzer, when the
    /// scenario supplies one (used by the trace-provided measure).
    pub measured_complexity: Option<Complexity>,
    /// Sampled R-D points, when the scenario carries encoder measurements.
    pub rd_samples: Vec<RdSample>,
}

/// Per-stream, per-super-GOP ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamTrace {
    pub stream: StreamId,
    pub name: String,
    pub gops: Vec<GopTruth>,
}

/// A complete multiplexing scenario: the streams, the shared channel and
/// the timing parameters that tie per-second budgets to super GOPs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub streams: Vec<StreamTrace>,
    /// Channel budget per super GOP.
    pub channel_rate: RateBits,
    pub super_gop_frames: u32,
    pub frame_rate: f64,
    pub rng_seed: u64,
}

impl Scenario {
    pub fn stream_count(&self) -> usize {
        self.streams.len()
    }

    pub fn gop_count(&self) -> usize {
        self.streams.first().map_or(0, |s| s.gops.len())
    }
}

/// Converts a per-second budget to bits per super GOP.
pub fn bps_to_bits_per_supergop(
    rate_bps: f64,
    super_gop_frames: u32,
    frame_rate: f64,
) -> Result<RateBits> {
    if !rate_bps.is_finite() || rate_bps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rate_bps must be positive, got {rate_bps}"
        )));
    }
    if super_gop_frames == 0 {
        return Err(Error::InvalidArgument(
            "super_gop_frames must be positive".into(),
        ));
    }
    if !frame_rate.is_finite() || frame_rate <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "frame_rate must be positive, got {frame_rate}"
        )));
    }
    RateBits::new(rate_bps * f64::from(super_gop_frames) / frame_rate)
}

/// Checks every scenario invariant. Returns an empty list when the scenario
/// is well formed; otherwise one human-readable violation per broken rule,
/// naming the stream and GOP involved.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut violations = Vec::new();

    if s.streams.len() < 2 {
        violations.push(format!("scenario needs ≥ 2 streams, has {}", s.streams.len()));
    }
    if s.channel_rate.bits() <= 0.0 {
        violations.push("channel_rate must be > 0".into());
    }
    if s.frame_rate <= 0.0 || !s.frame_rate.is_finite() {
        violations.push(format!("frame_rate must be positive, got {}", s.frame_rate));
    }
    if s.super_gop_frames == 0 {
        violations.push("super_gop_frames must be positive".into());
    }

    let gop_count = s.gop_count();
    if gop_count < 2 {
        violations.push(format!(
            "all streams need ≥ 2 super GOPs (feedback requires one), first stream has {gop_count}"
        ));
    }

    for (i, st) in s.streams.iter().enumerate() {
        if st.stream.0 != i {
            violations.push(format!(
                "stream {i}: StreamId {} does not match its position",
                st.stream.0
            ));
        }
        if st.gops.len() != gop_count {
            violations.push(format!(
                "stream {i}: has {} super GOPs, expected {gop_count}",
                st.gops.len()
            ));
        }
        for (k, gop) in st.gops.iter().enumerate() {
            if !(gop.true_sigma.is_finite() && gop.true_sigma > 0.0) {
                violations.push(format!(
                    "stream {i} GOP {k}: true_sigma must be positive, got {}",
                    gop.true_sigma
                ));
            }
            // rd_samples must trace a proper R-D curve: distortion strictly
            // decreasing as rate increases.
            let mut sorted = gop.rd_samples.clone();
            sorted.sort_by(|a, b| a.rate.partial_cmp(&b.rate).unwrap());
            for pair in sorted.windows(2) {
                if pair[1].rate.bits() <= pair[0].rate.bits() {
                    violations.push(format!(
                        "stream {i} GOP {k}: duplicate rd_sample rate {}",
                        pair[1].rate.bits()
                    ));
                } else if pair[1].distortion.mse() >= pair[0].distortion.mse() {
                    violations.push(format!(
                        "stream {i} GOP {k}: rd_samples not strictly decreasing in distortion \
                         ({} bits → {} MSE after {} bits → {} MSE)",
                        pair[1].rate.bits(),
                        pair[1].distortion.mse(),
                        pair[0].rate.bits(),
                        pair[0].distortion.mse()
                    ));
                }
            }
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::constant_scenario;

    #[test]
    fn bps_conversion_matches_hand_arithmetic() {
        let r = bps_to_bits_per_supergop(1_000_000.0, 10, 25.0).unwrap();
        assert_eq!(r.bits(), 400_000.0);
        let r = bps_to_bits_per_supergop(4_000_000.0, 10, 25.0).unwrap();
        assert_eq!(r.bits(), 1_600_000.0);
    }

    #[test]
    fn bps_conversion_is_identity_for_one_second_super_gop() {
        for x in [1.0, 123.0, 9.5e6] {
            let r = bps_to_bits_per_supergop(x, 30, 30.0).unwrap();
            assert_eq!(r.bits(), x);
        }
    }

    #[test]
    fn bps_conversion_rejects_non_positive_inputs() {
        assert!(bps_to_bits_per_supergop(0.0, 10, 25.0).is_err());
        assert!(bps_to_bits_per_supergop(1.0, 0, 25.0).is_err());
        assert!(bps_to_bits_per_supergop(1.0, 10, 0.0).is_err());
        assert!(bps_to_bits_per_supergop(f64::NAN, 10, 25.0).is_err());
    }

    #[test]
    fn well_formed_scenario_validates_clean() {
        let s = constant_scenario(&[(2.0, 2500.0), (1.0, 20000.0)], 9000.0, 12, 1);
        assert!(validate_scenario(&s).is_empty());
    }

    #[test]
    fn single_stream_scenario_is_rejected() {
        let mut s = constant_scenario(&[(2.0, 2500.0), (1.0, 20000.0)], 9000.0, 12, 1);
        s.streams.truncate(1);
        let v = validate_scenario(&s);
        assert!(v.iter().any(|m| m.contains("≥ 2 streams")), "{v:?}");
    }

    #[test]
    fn zero_sigma_violation_names_stream_and_gop() {
        let mut s = constant_scenario(&[(2.0, 2500.0), (1.0, 20000.0)], 9000.0, 12, 1);
        s.streams[1].gops[3].true_sigma = 0.0;
        let v = validate_scenario(&s);
        assert!(v.iter().any(|m| m.contains("stream 1 GOP 3")), "{v:?}");
    }

    #[test]
    fn non_monotone_rd_samples_are_flagged() {
        let mut s = constant_scenario(&[(2.0, 2500.0), (1.0, 20000.0)], 9000.0, 12, 1);
        s.streams[0].gops[0].rd_samples = vec![
            RdSample {
                rate: RateBits::new(100.0).unwrap(),
                distortion: Distortion::new(10.0).unwrap(),
            },
            RdSample {
                rate: RateBits::new(200.0).unwrap(),
                distortion: Distortion::new(11.0).unwrap(),
            },
        ];
        let v = validate_scenario(&s);
        assert!(v.iter().any(|m| m.contains("not strictly decreasing")), "{v:?}");
    }
}
