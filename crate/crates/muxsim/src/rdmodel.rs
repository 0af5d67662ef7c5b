//! The virtual encoder: the λ/Q/R/D model chain, its inversion, σ estimation
//! from encoder feedback, hyperbolic curve fitting and the slow σ drift
//! process that stresses the adjacent-GOP similarity assumption.
//!
//! The backbone is the hyperbolic law `D = σ·C²/R`; every other relation in
//! this module is either a restatement of it (λ as its slope) or the
//! quadratic rate-vs-quantizer model it is derived from.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{Complexity, Distortion, RateBits, RdSample};
use crate::error::{Error, Result};

/// Lagrange multiplier of the rate-distortion trade-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeLambda(pub f64);

/// Quantizer step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QStep(pub f64);

/// Coefficients of the quadratic rate model `R = a·C/Q + b·C²/Q²` and the
/// λ = c·Q² constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModelParams {
    pub a: f64,
    pub b: f64,
    pub c_lambda: f64,
}

impl Default for RateModelParams {
    fn default() -> Self {
        // b = 0 reduces the quadratic model to its linear coarse form;
        // c_lambda never enters an allocation decision, only diagnostics.
        Self { a: 1.0, b: 0.0, c_lambda: 1.0 }
    }
}

impl RateModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::InvalidArgument(format!("rate model a must be > 0, got {}", self.a)));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::InvalidArgument(format!("rate model b must be ≥ 0, got {}", self.b)));
        }
        if !(self.c_lambda.is_finite() && self.c_lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "c_lambda must be > 0, got {}",
                self.c_lambda
            )));
        }
        Ok(())
    }
}

/// Geometric AR(1) dynamics for σ across super GOPs:
/// `log σ_{k+1} = (1−φ)·log_mean + φ·log σ_k + ε`, ε ~ N(0, innovation_sd²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaDrift {
    pub phi: f64,
    pub innovation_sd: f64,
    /// Level the process reverts to. `None` means "each stream's own
    /// starting level": the simulation harness resolves it per stream, and
    /// a bare [`step_sigma_drift`] call degrades to a driftless random walk.
    pub log_mean: Option<f64>,
}

impl SigmaDrift {
    pub fn validate(&self) -> Result<()> {
        // φ = 1 (frozen dynamics) is allowed as a degenerate case.
        if !(self.phi.is_finite() && (0.0..=1.0).contains(&self.phi)) {
            return Err(Error::InvalidArgument(format!(
                "sigma drift phi must be in [0, 1], got {}",
                self.phi
            )));
        }
        if !(self.innovation_sd.is_finite() && self.innovation_sd >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma drift innovation_sd must be ≥ 0, got {}",
                self.innovation_sd
            )));
        }
        if let Some(m) = self.log_mean {
            if !m.is_finite() {
                return Err(Error::InvalidArgument("sigma drift log_mean must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Multiplicative encoder inaccuracy, as coefficients of variation of
/// mean-one lognormal factors applied to achieved rate and distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderNoise {
    pub rate_cv: f64,
    pub dist_cv: f64,
}

impl Default for EncoderNoise {
    fn default() -> Self {
        Self { rate_cv: 0.0, dist_cv: 0.0 }
    }
}

/// Which virtual encoder maps an allocated budget to an achieved (R, D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Achieves exactly the allocated rate; D follows the hyperbolic law.
    IdealHyperbolic,
    /// Hyperbolic law with lognormal inaccuracy on achieved R and D.
    NoisyHyperbolic,
    /// Inverts the quadratic rate model for Q, then reports the hyperbolic D.
    QuadraticQ,
    /// Interpolates D(R) on the scenario's sampled R-D points.
    TraceReplay,
}

/// Parametric virtual encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub kind: EncoderKind,
    pub params: RateModelParams,
    pub noise: EncoderNoise,
    /// When present, σ evolves across GOPs instead of replaying the trace.
    pub sigma_drift: Option<SigmaDrift>,
}

impl EncoderModel {
    pub fn ideal() -> Self {
        Self {
            kind: EncoderKind::IdealHyperbolic,
            params: RateModelParams::default(),
            noise: EncoderNoise::default(),
            sigma_drift: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (label, cv) in [("rate_cv", self.noise.rate_cv), ("dist_cv", self.noise.dist_cv)] {
            if !(cv.is_finite() && (0.0..0.5).contains(&cv)) {
                return Err(Error::InvalidArgument(format!(
                    "encoder {label} must be in [0, 0.5), got {cv}"
                )));
            }
        }
        if let Some(d) = &self.sigma_drift {
            d.validate()?;
        }
        Ok(())
    }
}

/// What the encoder actually produced for one stream in one super GOP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub achieved_rate: RateBits,
    pub achieved_distortion: Distortion,
}

/// Estimate of a stream's σ for the upcoming super GOP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub sigma_hat: f64,
}

/// Ground-truth encoder state for one stream in one super GOP.
#[derive(Debug, Clone, Copy)]
pub struct TrueState<'a> {
    pub complexity: Complexity,
    pub sigma: f64,
    pub rd_samples: &'a [RdSample],
}

/// Hyperbolic R-D law: `D = σ·C²/R`.
pub fn distortion_from_rate(sigma: f64, c: Complexity, r: RateBits) -> Result<Distortion> {
    if r.bits() == 0.0 {
        return Err(Error::DivisionByZero(format!(
            "distortion_from_rate with zero rate (σ={sigma}, C={})",
            c.value()
        )));
    }
    Distortion::new(sigma * c.value() * c.value() / r.bits())
}

/// Inverts the hyperbolic law on last GOP's feedback: `σ̂ = D·R/C²`.
pub fn estimate_sigma(feedback: &FeedbackRecord, c_k: Complexity) -> Result<SigmaEstimate> {
    let r = feedback.achieved_rate.bits();
    let d = feedback.achieved_distortion.mse();
    if r <= 0.0 || d <= 0.0 {
        return Err(Error::InvalidFeedback(format!(
            "feedback must have positive rate and distortion, got R={r}, D={d}"
        )));
    }
    Ok(SigmaEstimate { sigma_hat: d * r / (c_k.value() * c_k.value()) })
}

/// Quadratic rate model: `R = a·C/Q + b·C²/Q²` (b = 0 gives the linear form).
pub fn rate_from_qstep(params: &RateModelParams, c: Complexity, q: QStep) -> Result<RateBits> {
    if !(q.0.is_finite() && q.0 > 0.0) {
        return Err(Error::InvalidArgument(format!("qstep must be > 0, got {}", q.0)));
    }
    let x = c.value() / q.0;
    RateBits::new(params.a * x + params.b * x * x)
}

/// Inverts the quadratic rate model: the unique positive root of
/// `b·x² + a·x − R = 0` with `x = C/Q`.
pub fn qstep_from_rate(params: &RateModelParams, c: Complexity, r: RateBits) -> Result<QStep> {
    if r.bits() <= 0.0 {
        return Err(Error::InvalidArgument(format!("rate must be > 0, got {}", r.bits())));
    }
    let (a, b) = (params.a, params.b);
    let x = if b > 0.0 {
        (-a + (a * a + 4.0 * b * r.bits()).sqrt()) / (2.0 * b)
    } else {
        r.bits() / a
    };
    Ok(QStep(c.value() / x))
}

/// HEVC-style multiplier law `λ = c·Q²`.
pub fn lambda_from_qstep(params: &RateModelParams, q: QStep) -> Result<LagrangeLambda> {
    if !(q.0.is_finite() && q.0 > 0.0) {
        return Err(Error::InvalidArgument(format!("qstep must be > 0, got {}", q.0)));
    }
    Ok(LagrangeLambda(params.c_lambda * q.0 * q.0))
}

/// λ as the (negated) slope of the hyperbolic R-D curve: `λ = σ·C²/R²`.
pub fn lambda_from_rate(sigma: f64, c: Complexity, r: RateBits) -> Result<LagrangeLambda> {
    if r.bits() == 0.0 {
        return Err(Error::DivisionByZero("lambda_from_rate with zero rate".into()));
    }
    let c2 = c.value() * c.value();
    Ok(LagrangeLambda(sigma * c2 / (r.bits() * r.bits())))
}

/// Mean-one lognormal factor with the given coefficient of variation.
pub fn mean_one_lognormal<R: Rng + ?Sized>(cv: f64, rng: &mut R) -> f64 {
    if cv == 0.0 {
        return 1.0;
    }
    let s2 = (1.0 + cv * cv).ln();
    let dist = LogNormal::new(-0.5 * s2, s2.sqrt()).expect("valid lognormal");
    dist.sample(rng)
}

/// Runs the virtual encoder for one super GOP of one stream.
pub fn encode_supergop<R: Rng + ?Sized>(
    model: &EncoderModel,
    state: TrueState<'_>,
    allocated: RateBits,
    rng: &mut R,
) -> Result<FeedbackRecord> {
    if allocated.bits() <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "allocated rate must be > 0, got {}",
            allocated.bits()
        )));
    }
    match model.kind {
        EncoderKind::IdealHyperbolic => Ok(FeedbackRecord {
            achieved_rate: allocated,
            achieved_distortion: distortion_from_rate(state.sigma, state.complexity, allocated)?,
        }),
        EncoderKind::NoisyHyperbolic => {
            let rate_factor = mean_one_lognormal(model.noise.rate_cv, rng);
            let dist_factor = mean_one_lognormal(model.noise.dist_cv, rng);
            let achieved = RateBits::new(allocated.bits() * rate_factor)?;
            let d = distortion_from_rate(state.sigma, state.complexity, achieved)?;
            Ok(FeedbackRecord {
                achieved_rate: achieved,
                achieved_distortion: Distortion::new(d.mse() * dist_factor)?,
            })
        }
        EncoderKind::QuadraticQ => {
            // Q is recovered from the quadratic model; distortion still
            // follows the hyperbolic law at the achieved rate.
            let q = qstep_from_rate(&model.params, state.complexity, allocated)?;
            let achieved = rate_from_qstep(&model.params, state.complexity, q)?;
            Ok(FeedbackRecord {
                achieved_rate: achieved,
                achieved_distortion: distortion_from_rate(state.sigma, state.complexity, achieved)?,
            })
        }
        EncoderKind::TraceReplay => {
            let d = interpolate_rd(state.rd_samples, allocated)?;
            Ok(FeedbackRecord { achieved_rate: allocated, achieved_distortion: d })
        }
    }
}

/// Log-log interpolation of D(R) on sampled points, clamped to the sampled
/// rate range. Exact for power-law curves.
pub fn interpolate_rd(samples: &[RdSample], r: RateBits) -> Result<Distortion> {
    if samples.is_empty() {
        return Err(Error::MissingData(
            "trace-replay encoder needs rd_samples for every super GOP".into(),
        ));
    }
    let mut pts: Vec<(f64, f64)> =
        samples.iter().map(|s| (s.rate.bits(), s.distortion.mse())).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let r = r.bits();
    if r <= pts[0].0 {
        if r < pts[0].0 {
            log::warn!("trace-replay: rate {r} below sampled range, clamping to {}", pts[0].0);
        }
        return Distortion::new(pts[0].1);
    }
    if r >= pts[pts.len() - 1].0 {
        if r > pts[pts.len() - 1].0 {
            log::warn!(
                "trace-replay: rate {r} above sampled range, clamping to {}",
                pts[pts.len() - 1].0
            );
        }
        return Distortion::new(pts[pts.len() - 1].1);
    }
    let idx = pts.partition_point(|p| p.0 < r);
    if pts[idx].0 == r {
        return Distortion::new(pts[idx].1);
    }
    let (r0, d0) = pts[idx - 1];
    let (r1, d1) = pts[idx];
    let t = (r.ln() - r0.ln()) / (r1.ln() - r0.ln());
    Distortion::new((d0.ln() + t * (d1.ln() - d0.ln())).exp())
}

/// Advances the geometric AR(1) σ process by one super GOP.
pub fn step_sigma_drift<R: Rng + ?Sized>(drift: &SigmaDrift, sigma_k: f64, rng: &mut R) -> f64 {
    debug_assert!(sigma_k > 0.0);
    let eps = if drift.innovation_sd == 0.0 {
        0.0
    } else {
        Normal::new(0.0, drift.innovation_sd).expect("valid normal").sample(rng)
    };
    let log_mean = drift.log_mean.unwrap_or_else(|| sigma_k.ln());
    ((1.0 - drift.phi) * log_mean + drift.phi * sigma_k.ln() + eps).exp()
}

/// Least-squares fit of `1/D` against `R` through the origin, the linearity
/// check behind the hyperbolic law. Returns the implied σ and the
/// (uncentered) coefficient of determination.
pub fn fit_hyperbolic(samples: &[RdSample], c: Complexity) -> Result<(f64, f64)> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need ≥ 3 samples to fit, got {}", samples.len())));
    }
    let mut rates: Vec<f64> = samples.iter().map(|s| s.rate.bits()).collect();
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rates.dedup();
    if rates.len() < 2 {
        return Err(Error::Fit("degenerate samples: all rates identical".into()));
    }

    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for s in samples {
        let x = s.rate.bits();
        let y = 1.0 / s.distortion.mse();
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    let slope = sxy / sxx;
    if !(slope.is_finite() && slope > 0.0) {
        return Err(Error::Fit(format!("non-positive fitted slope {slope}")));
    }
    let r_squared = (sxy * sxy) / (sxx * syy);
    let sigma_fit = 1.0 / (slope * c.value() * c.value());
    Ok((sigma_fit, r_squared.clamp(0.0, 1.0)))
}

/// Pooled variant of [`fit_hyperbolic`] for samples spanning super GOPs with
/// different complexities: regresses `1/D` on `R/C²` through the origin, so
/// one σ per stream. `points` are (rate, mse, complexity).
pub fn fit_hyperbolic_pooled(points: &[(f64, f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need ≥ 3 samples to fit, got {}", points.len())));
    }
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(rate, mse, c) in points {
        let x = rate / (c * c);
        let y = 1.0 / mse;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate samples: all rates zero".into()));
    }
    let slope = sxy / sxx;
    if !(slope.is_finite() && slope > 0.0) {
        return Err(Error::Fit(format!("non-positive fitted slope {slope}")));
    }
    let r_squared = ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0);
    Ok((1.0 / slope, r_squared))
}
