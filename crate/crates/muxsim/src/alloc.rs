//! The rate allocators.
//!
//! Every allocator reduces to the same scheme: compute a per-stream weight,
//! hand out the channel budget in proportion to the weights, then apply the
//! starvation floor. They differ only in what the weight is:
//!
//! * `uniform` — 1 for every stream (first-GOP initialization)
//! * `lam`     — the look-ahead complexity `C_{k+1}`
//! * `lfam`    — `X = D_k·R_k·C²_{k+1}/C²_k`, folding encoder feedback in
//! * `oracle`  — the true `σ·C²_{k+1}`, which equalizes distortion exactly
//!   under the ideal hyperbolic encoder

use std::fmt;
use std::str::FromStr;

use crate::domain::{Complexity, RateBits};
use crate::error::{Error, Result};
use crate::rdmodel::FeedbackRecord;

/// Default minimum share, as a fraction of the uniform split `R_c/N`.
pub const DEFAULT_FLOOR_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Allocator {
    Uniform,
    Lam,
    Lfam,
    Oracle,
}

impl Allocator {
    pub const ALL: [Allocator; 4] =
        [Allocator::Uniform, Allocator::Lam, Allocator::Lfam, Allocator::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Allocator::Uniform => "uniform",
            Allocator::Lam => "lam",
            Allocator::Lfam => "lfam",
            Allocator::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Allocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Allocator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Allocator::Uniform),
            "lam" => Ok(Allocator::Lam),
            "lfam" => Ok(Allocator::Lfam),
            "oracle" => Ok(Allocator::Oracle),
            other => Err(Error::UnknownAllocator(other.to_string())),
        }
    }
}

/// Per-stream inputs for a feedback-aware allocation.
#[derive(Debug, Clone)]
pub struct StreamInput {
    /// Measured complexity of the GOP that was just encoded (`C_k`).
    pub c_prev: Complexity,
    /// Measured look-ahead complexity of the upcoming GOP (`C_{k+1}`).
    pub c_next: Complexity,
    /// Encoder feedback for the GOP that was just encoded. Absent when a
    /// stream has no history yet (joined mid-run).
    pub feedback: Option<FeedbackRecord>,
}

#[derive(Debug, Clone)]
pub struct AllocationInput {
    pub streams: Vec<StreamInput>,
    pub channel_rate: RateBits,
    pub floor_fraction: f64,
}

/// Per-stream rate shares for the next super GOP.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision {
    pub allocator: Allocator,
    /// Real-valued shares; these sum to the channel rate (up to float
    /// rounding) and are what the virtual encoder consumes.
    pub shares: Vec<RateBits>,
    /// The weights the shares were proportional to, before flooring.
    pub weights: Vec<f64>,
    pub channel_rate: RateBits,
}

impl AllocationDecision {
    /// Integer bit budgets via largest-remainder rounding; sums exactly to
    /// the rounded channel rate.
    pub fn integer_shares(&self) -> Vec<u64> {
        let target = self.channel_rate.bits().round() as u64;
        let mut base: Vec<u64> = self.shares.iter().map(|s| s.bits().floor() as u64).collect();
        let assigned: u64 = base.iter().sum();
        let mut order: Vec<usize> = (0..base.len()).collect();
        order.sort_by(|&i, &j| {
            let fi = self.shares[i].bits().fract();
            let fj = self.shares[j].bits().fract();
            fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
        });
        let mut leftover = target.saturating_sub(assigned);
        let mut pos = 0;
        while leftover > 0 && !order.is_empty() {
            base[order[pos % order.len()]] += 1;
            pos += 1;
            leftover -= 1;
        }
        base
    }
}

/// Distributes the channel budget in proportion to `weights`, enforcing the
/// starvation floor: every stream receives at least
/// `floor_fraction · R_c / N`, with the remaining budget split
/// proportionally among the unfloored streams.
fn shares_from_weights(
    allocator: Allocator,
    weights: Vec<f64>,
    channel_rate: RateBits,
    floor_fraction: f64,
) -> Result<AllocationDecision> {
    let n = weights.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("allocation needs ≥ 2 streams, got {n}")));
    }
    if !(floor_fraction.is_finite() && (0.0..1.0).contains(&floor_fraction)) {
        return Err(Error::InvalidArgument(format!(
            "floor_fraction must be in [0, 1), got {floor_fraction}"
        )));
    }
    for (i, w) in weights.iter().enumerate() {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "allocation weight for stream {i} must be finite and ≥ 0, got {w}"
            )));
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights(format!(
            "all {n} allocation weights are zero ({allocator})"
        )));
    }

    let rc = channel_rate.bits();
    let floor = floor_fraction * rc / n as f64;
    let mut floored = vec![false; n];
    let mut shares = vec![0.0; n];
    // Clamp-and-redistribute: streams falling below the floor are pinned
    // there and removed from the proportional pool. Terminates in ≤ N
    // passes because the pinned set only grows.
    loop {
        let pinned = floored.iter().filter(|&&f| f).count();
        let budget = rc - floor * pinned as f64;
        let active_weight: f64 =
            weights.iter().zip(&floored).filter(|(_, &f)| !f).map(|(w, _)| w).sum();
        if active_weight <= 0.0 {
            return Err(Error::DegenerateWeights(format!(
                "all unfloored weights are zero ({allocator})"
            )));
        }
        for i in 0..n {
            shares[i] = if floored[i] { floor } else { weights[i] / active_weight * budget };
        }
        let mut newly = false;
        for i in 0..n {
            if !floored[i] && shares[i] < floor {
                floored[i] = true;
                newly = true;
            }
        }
        if !newly {
            break;
        }
    }

    let shares = shares
        .into_iter()
        .map(RateBits::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(AllocationDecision { allocator, shares, weights, channel_rate })
}

/// Look-ahead allocation: shares proportional to the next GOP's complexity.
pub fn allocate_lam(
    c_next: &[Complexity],
    channel_rate: RateBits,
    floor_fraction: f64,
) -> Result<AllocationDecision> {
    let weights = c_next.iter().map(|c| c.value()).collect();
    shares_from_weights(Allocator::Lam, weights, channel_rate, floor_fraction)
}

/// Look-ahead-and-feedback allocation: shares proportional to
/// `X = D_k·R_k·C²_{k+1}/C²_k`.
///
/// Streams without feedback fall back to the LAM-shaped weight
/// `C²_{k+1} × median(D·R/C²_prev)` over the streams that do have feedback.
pub fn allocate_lfam(input: &AllocationInput) -> Result<AllocationDecision> {
    let mut sigma_hats: Vec<f64> = Vec::new();
    for (i, s) in input.streams.iter().enumerate() {
        if let Some(fb) = &s.feedback {
            let r = fb.achieved_rate.bits();
            let d = fb.achieved_distortion.mse();
            if r <= 0.0 || d <= 0.0 {
                return Err(Error::InvalidFeedback(format!(
                    "stream {i}: feedback must have positive rate and distortion (R={r}, D={d})"
                )));
            }
            sigma_hats.push(d * r / (s.c_prev.value() * s.c_prev.value()));
        }
    }
    if sigma_hats.is_empty() {
        return Err(Error::InvalidFeedback(
            "lfam needs feedback for at least one stream".into(),
        ));
    }
    let median_sigma = {
        sigma_hats.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = sigma_hats.len();
        if m % 2 == 1 {
            sigma_hats[m / 2]
        } else {
            0.5 * (sigma_hats[m / 2 - 1] + sigma_hats[m / 2])
        }
    };

    let weights: Vec<f64> = input
        .streams
        .iter()
        .enumerate()
        .map(|(i, s)| match &s.feedback {
            Some(fb) => {
                let ratio = s.c_next.value() / s.c_prev.value();
                fb.achieved_distortion.mse() * fb.achieved_rate.bits() * ratio * ratio
            }
            None => {
                log::warn!("lfam: stream {i} has no feedback, using median-σ fallback weight");
                s.c_next.value() * s.c_next.value() * median_sigma
            }
        })
        .collect();
    shares_from_weights(Allocator::Lfam, weights, input.channel_rate, input.floor_fraction)
}

/// Genie allocation from true σ: shares proportional to `σ·C²`, which
/// equalizes the next GOP's distortion exactly under the ideal encoder.
pub fn allocate_oracle(
    sigma_true: &[f64],
    c_true_next: &[Complexity],
    channel_rate: RateBits,
    floor_fraction: f64,
) -> Result<AllocationDecision> {
    if sigma_true.len() != c_true_next.len() {
        return Err(Error::InvalidArgument(format!(
            "oracle allocator: {} sigmas vs {} complexities",
            sigma_true.len(),
            c_true_next.len()
        )));
    }
    for (i, s) in sigma_true.iter().enumerate() {
        if !(s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "oracle allocator: sigma for stream {i} must be > 0, got {s}"
            )));
        }
    }
    let weights = sigma_true
        .iter()
        .zip(c_true_next)
        .map(|(s, c)| s * c.value() * c.value())
        .collect();
    shares_from_weights(Allocator::Oracle, weights, channel_rate, floor_fraction)
}

/// Equal split, used to initialize the first super GOP.
pub fn allocate_uniform(n: usize, channel_rate: RateBits) -> Result<AllocationDecision> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("uniform allocation needs ≥ 2 streams, got {n}")));
    }
    shares_from_weights(Allocator::Uniform, vec![1.0; n], channel_rate, 0.0)
}
