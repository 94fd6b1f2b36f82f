//! Gaussian weight model and threshold design.
//!
//! Weights are modeled as i.i.d. `N(0, σ²)`. The upper embedding threshold is
//! `T₁ = σ·Q⁻¹(1 − R)` for a design pruning rate `R`; the lower threshold
//! defaults to `T₁/2`.
//!
//! `Q⁻¹(1 − R)` puts one-sided mass `1 − R` above `T₁`, while magnitude
//! pruning removes the `R` fraction with the smallest `|w|`, whose cutoff is
//! the two-sided quantile `σ·Q⁻¹((1 − R)/2)`. Both are available through
//! [`ThresholdRule`]; the one-sided form is the default.

use serde::Serialize;
use thiserror::Error;

use crate::rng::GaussianSampler;
use crate::watermark::WeightVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("pruning rate {0} outside [0, 1)")]
    RateOutOfRange(f64),
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error(
        "design rate {rate} gives a non-positive upper threshold ({t1}); \
         choose a rate above 0.5 or set the thresholds explicitly"
    )]
    NonPositiveThreshold { rate: f64, t1: f64 },
    #[error("thresholds must satisfy 0 < t0 < t1 (t0={t0}, t1={t1})")]
    InvalidThresholds { t0: f64, t1: f64 },
    #[error("cannot estimate sigma from an empty weight vector")]
    EmptyInput,
    #[error("sample count must be at least 1")]
    ZeroSamples,
}

/// Zero-mean Gaussian weight model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianModel {
    sigma: f64,
}

impl GaussianModel {
    pub fn new(sigma: f64) -> Result<Self, StatsError> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(StatsError::InvalidSigma(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<WeightVector, StatsError> {
        sample_gaussian_weights(n, self.sigma, seed)
    }

    /// Expected magnitude-pruning cutoff at rate `R`, `σ·Q⁻¹((1 − R)/2)`.
    pub fn pruning_cutoff(&self, rate: PruneRate) -> Result<f64, StatsError> {
        if rate.value() == 0.0 {
            return Ok(0.0);
        }
        Ok(self.sigma * q_inverse((1.0 - rate.value()) / 2.0)?)
    }
}

/// Pruning rate `R ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct PruneRate(f64);

impl PruneRate {
    pub fn new(rate: f64) -> Result<Self, StatsError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(StatsError::RateOutOfRange(rate));
        }
        Ok(Self(rate))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Embedding thresholds `0 < T₀ < T₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPair {
    t0: f64,
    t1: f64,
}

impl ThresholdPair {
    pub fn new(t0: f64, t1: f64) -> Result<Self, StatsError> {
        if !(t0.is_finite() && t1.is_finite() && 0.0 < t0 && t0 < t1) {
            return Err(StatsError::InvalidThresholds { t0, t1 });
        }
        Ok(Self { t0, t1 })
    }

    /// `T₀ = T₁/2`.
    pub fn with_default_t0(t1: f64) -> Result<Self, StatsError> {
        Self::new(t1 / 2.0, t1)
    }

    /// Designs `T₁` for `rate` under `rule` and applies the default `T₀`.
    pub fn design(sigma: f64, rate: PruneRate, rule: ThresholdRule) -> Result<Self, StatsError> {
        Self::with_default_t0(rule.design_t1(sigma, rate)?)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn margin(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// Which Gaussian mass the design rate is matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `T₁ = σ·Q⁻¹(1 − R)`.
    #[default]
    OneSided,
    /// `T₁ = σ·Q⁻¹((1 − R)/2)`, the expected cutoff of magnitude pruning.
    TwoSided,
}

impl ThresholdRule {
    pub fn design_t1(self, sigma: f64, rate: PruneRate) -> Result<f64, StatsError> {
        match self {
            ThresholdRule::OneSided => design_t1(sigma, rate),
            ThresholdRule::TwoSided => design_t1_two_sided(sigma, rate),
        }
    }
}

/// Standard normal upper tail `Q(x) = P(Z > x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of [`q_function`] on `(0, 1)`.
///
/// Solves on the upper tail only: for `p > 1/2` it returns `−Q⁻¹(1 − p)`,
/// where `1 − p` is exact and carries far more precision than `p`. The
/// Abramowitz–Stegun 26.2.23 rational estimate (error below 4.5e−4) is
/// refined with Newton steps, falling back to bisection whenever a step
/// leaves the current bracket.
pub fn q_inverse(p: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::ProbabilityOutOfRange(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-upper_tail_inverse(1.0 - p));
    }
    Ok(upper_tail_inverse(p))
}

/// `Q⁻¹(p)` for `0 < p < 1/2`.
fn upper_tail_inverse(p: f64) -> f64 {
    let t = (-2.0 * p.ln()).sqrt();
    let mut x = t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);

    // Q is decreasing: Q(lo) ≥ p ≥ Q(hi)
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let f = q_function(x) - p;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x + f / std_normal_pdf(x);
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// `T₁ = σ·Q⁻¹(1 − R)`; rejects rates that make `T₁ ≤ 0`.
pub fn design_t1(sigma: f64, rate: PruneRate) -> Result<f64, StatsError> {
    GaussianModel::new(sigma)?;
    let t1 = sigma * q_inverse(1.0 - rate.value())?;
    if t1 <= 0.0 {
        return Err(StatsError::NonPositiveThreshold {
            rate: rate.value(),
            t1,
        });
    }
    Ok(t1)
}

/// `T₁ = σ·Q⁻¹((1 − R)/2)`; rejects `R = 0`.
pub fn design_t1_two_sided(sigma: f64, rate: PruneRate) -> Result<f64, StatsError> {
    GaussianModel::new(sigma)?;
    let t1 = sigma * q_inverse((1.0 - rate.value()) / 2.0)?;
    if t1 <= 0.0 {
        return Err(StatsError::NonPositiveThreshold {
            rate: rate.value(),
            t1,
        });
    }
    Ok(t1)
}

/// Root mean square about zero, `√(Σ wᵢ²/N)`.
pub fn estimate_sigma(weights: &[f32]) -> Result<f64, StatsError> {
    if weights.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let sum_sq: f64 = weights.iter().map(|&w| f64::from(w) * f64::from(w)).sum();
    Ok((sum_sq / weights.len() as f64).sqrt())
}

/// `n` i.i.d. `N(0, σ²)` weights from a SplitMix64/Box–Muller stream,
/// rounded to binary32.
pub fn sample_gaussian_weights(
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<WeightVector, StatsError> {
    if n == 0 {
        return Err(StatsError::ZeroSamples);
    }
    GaussianModel::new(sigma)?;
    let mut sampler = GaussianSampler::new(seed);
    let values = (0..n)
        .map(|_| (sigma * sampler.next_standard()) as f32)
        .collect();
    Ok(WeightVector::new_unchecked(values))
}
