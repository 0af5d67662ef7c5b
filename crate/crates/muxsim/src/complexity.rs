//! Pluggable look-ahead complexity measures.
//!
//! The measures from the multiplexing literature are not reimplemented here;
//! the oracle family isolates exactly the property the allocators are
//! sensitive to (how accurate the look-ahead is) without importing external
//! definitions. Trace-provided values come verbatim from the scenario file.

use rand::Rng;

use crate::domain::{Complexity, StreamId};
use crate::error::{Error, Result};
use crate::rdmodel;

#[derive(Debug, Clone, PartialEq)]
pub enum ComplexityMeasure {
    /// Returns the true complexity.
    Oracle,
    /// Multiplies the true complexity by a time-invariant per-stream bias.
    BiasedOracle { bias_per_stream: Vec<f64> },
    /// Multiplies the true complexity by a mean-one lognormal factor.
    NoisyOracle { noise_cv: f64 },
    /// Returns the measured complexity recorded in the scenario file.
    TraceProvided,
}

impl ComplexityMeasure {
    pub fn validate(&self, stream_count: usize) -> Result<()> {
        match self {
            ComplexityMeasure::BiasedOracle { bias_per_stream } => {
                if bias_per_stream.len() != stream_count {
                    return Err(Error::InvalidArgument(format!(
                        "biased-oracle needs one bias per stream ({stream_count}), got {}",
                        bias_per_stream.len()
                    )));
                }
                for (i, b) in bias_per_stream.iter().enumerate() {
                    if !(b.is_finite() && *b > 0.0) {
                        return Err(Error::InvalidArgument(format!(
                            "biased-oracle bias for stream {i} must be > 0, got {b}"
                        )));
                    }
                }
                Ok(())
            }
            ComplexityMeasure::NoisyOracle { noise_cv } => {
                if !(noise_cv.is_finite() && (0.0..0.5).contains(noise_cv)) {
                    return Err(Error::InvalidArgument(format!(
                        "noisy-oracle noise_cv must be in [0, 0.5), got {noise_cv}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ComplexityMeasure::Oracle => "oracle",
            ComplexityMeasure::BiasedOracle { .. } => "biased-oracle",
            ComplexityMeasure::NoisyOracle { .. } => "noisy-oracle",
            ComplexityMeasure::TraceProvided => "trace-provided",
        }
    }
}

/// Produces the look-ahead complexity value an allocator sees for one
/// stream in one super GOP.
pub fn measure<R: Rng + ?Sized>(
    cm: &ComplexityMeasure,
    true_c: Complexity,
    measured_c: Option<Complexity>,
    stream: StreamId,
    rng: &mut R,
) -> Result<Complexity> {
    match cm {
        ComplexityMeasure::Oracle => Ok(true_c),
        ComplexityMeasure::BiasedOracle { bias_per_stream } => {
            let bias = bias_per_stream.get(stream.0).ok_or_else(|| {
                Error::InvalidArgument(format!("no bias configured for stream {}", stream.0))
            })?;
            Complexity::new(bias * true_c.value())
        }
        ComplexityMeasure::NoisyOracle { noise_cv } => {
            Complexity::new(true_c.value() * rdmodel::mean_one_lognormal(*noise_cv, rng))
        }
        ComplexityMeasure::TraceProvided => measured_c.ok_or_else(|| {
            Error::MissingData(format!(
                "trace-provided measure: no measured complexity for stream {}",
                stream.0
            ))
        }),
    }
}
