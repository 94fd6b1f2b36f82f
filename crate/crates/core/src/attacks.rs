//! Magnitude pruning and auxiliary perturbation attacks.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::rng::{GaussianSampler, SplitMix64};
use crate::stats::{estimate_sigma, PruneRate, StatsError, ThresholdRule};
use crate::watermark::{EmbedSpec, WeightVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error("pruning rate {0} outside [0, 1)")]
    RateOutOfRange(f64),
    #[error("noise sigma must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("attack budget {budget} exceeds the {n} available weights")]
    BudgetExceeded { budget: usize, n: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Outcome of a pruning pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneSpec {
    pub rate: f64,
    /// `floor(R·N)`, clamped to `N − 1`.
    pub p: usize,
    /// `p`-th smallest magnitude (0-indexed).
    pub cutoff: f32,
    /// Number of weights set to zero; below `p` when magnitudes tie at the cutoff.
    pub zeroed: usize,
}

/// Magnitude pruning: zeroes every weight with `|w| < cutoff`, where the
/// cutoff is the `floor(R·N)`-th smallest magnitude. Ties at the cutoff survive.
pub fn prune(weights: &WeightVector, rate: f64) -> Result<(WeightVector, PruneSpec), AttackError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(AttackError::RateOutOfRange(rate));
    }
    let n = weights.len();
    let p = ((rate * n as f64).floor() as usize).min(n - 1);
    let mut mags: Vec<f32> = weights.iter().map(|w| w.abs()).collect();
    let (_, &mut cutoff, _) = mags.select_nth_unstable_by(p, f32::total_cmp);
    let mut out = weights.clone();
    let mut zeroed = 0;
    for w in out.as_mut_slice() {
        if w.abs() < cutoff {
            *w = 0.0;
            zeroed += 1;
        }
    }
    Ok((
        out,
        PruneSpec {
            rate,
            p,
            cutoff,
            zeroed,
        },
    ))
}

/// Adds i.i.d. `N(0, σ²)` noise to every weight, deterministic per seed.
pub fn add_noise(
    weights: &WeightVector,
    sigma: f64,
    seed: u64,
) -> Result<WeightVector, AttackError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(AttackError::InvalidNoise(sigma));
    }
    if sigma == 0.0 {
        return Ok(weights.clone());
    }
    let mut sampler = GaussianSampler::new(seed);
    let values = weights
        .iter()
        .map(|&w| (f64::from(w) + sigma * sampler.next_standard()) as f32)
        .collect();
    Ok(WeightVector::new_unchecked(values))
}

/// How a position-blind attacker tries to flip codeword bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlipStrategy {
    /// Pull the largest magnitudes down to the attacker's pruning-cutoff
    /// estimate, hoping to turn ones into zeros.
    Suppress,
    /// Push random small weights up to the attacker's `T₁` estimate,
    /// hoping to turn zeros into ones.
    Inflate,
}

impl std::str::FromStr for FlipStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "suppress" => Ok(Self::Suppress),
            "inflate" => Ok(Self::Inflate),
            other => Err(format!(
                "unknown strategy '{other}' (expected suppress or inflate)"
            )),
        }
    }
}

/// Attacker configuration. The attacker estimates `σ` from the weights it
/// sees and assumes the owner designed for `assumed_rate` under `rule`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlipAttack {
    pub strategy: FlipStrategy,
    pub budget: usize,
    pub assumed_rate: f64,
    pub rule: ThresholdRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub weights: WeightVector,
    /// Indices the attacker modified, in the order chosen.
    pub touched: Vec<usize>,
    /// Target magnitude written to each touched weight.
    pub level: f64,
}

/// Runs a position-blind bit-flip attack.
pub fn targeted_flip_attack(
    weights: &WeightVector,
    attack: &FlipAttack,
    seed: u64,
) -> Result<AttackOutcome, AttackError> {
    let n = weights.len();
    if attack.budget > n {
        return Err(AttackError::BudgetExceeded {
            budget: attack.budget,
            n,
        });
    }
    let rate = PruneRate::new(attack.assumed_rate)
        .map_err(|_| AttackError::RateOutOfRange(attack.assumed_rate))?;
    if attack.budget == 0 {
        return Ok(AttackOutcome {
            weights: weights.clone(),
            touched: Vec::new(),
            level: 0.0,
        });
    }
    let sigma_hat = estimate_sigma(weights)?.max(f64::MIN_POSITIVE);
    let (touched, level) = match attack.strategy {
        FlipStrategy::Suppress => {
            let level = sigma_hat * crate::stats::q_inverse((1.0 - rate.value()) / 2.0)?;
            let mut idx: Vec<usize> = (0..n).collect();
            let by_mag = |&a: &usize, &b: &usize| {
                weights[b]
                    .abs()
                    .total_cmp(&weights[a].abs())
                    .then(a.cmp(&b))
            };
            if attack.budget < n {
                idx.select_nth_unstable_by(attack.budget, by_mag);
                idx.truncate(attack.budget);
            }
            idx.sort_by(by_mag);
            (idx, level.max(0.0))
        }
        FlipStrategy::Inflate => {
            let level = attack.rule.design_t1(sigma_hat, rate)?;
            let mut small: Vec<usize> = (0..n)
                .filter(|&i| f64::from(weights[i].abs()) < level)
                .collect();
            let take = attack.budget.min(small.len());
            let mut rng = SplitMix64::new(seed);
            for i in 0..take {
                let j = i + rng.next_below((small.len() - i) as u64) as usize;
                small.swap(i, j);
            }
            small.truncate(take);
            (small, level)
        }
    };
    let mut out = weights.clone();
    let level32 = level as f32;
    for &i in &touched {
        let w = out[i];
        out.as_mut_slice()[i] = if w >= 0.0 { level32 } else { -level32 };
    }
    Ok(AttackOutcome {
        weights: out,
        touched,
        level,
    })
}

/// How many touched indices landed on embedded positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HitCount {
    pub embedded: usize,
    pub ones: usize,
    pub zeros: usize,
}

/// Counts hits on the spec's positions, split by the codeword bit there.
pub fn count_hits(
    touched: &[usize],
    spec: &EmbedSpec,
    codeword: &crate::codec::Codeword,
) -> HitCount {
    let touched: HashSet<usize> = touched.iter().copied().collect();
    let mut hits = HitCount {
        embedded: 0,
        ones: 0,
        zeros: 0,
    };
    for (&p, &bit) in spec.positions.iter().zip(codeword.bits()) {
        if touched.contains(&p) {
            hits.embedded += 1;
            if bit {
                hits.ones += 1;
            } else {
                hits.zeros += 1;
            }
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::sample_gaussian_weights;

    fn wv(v: &[f32]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn prune_hand_example() {
        let (out, spec) = prune(&wv(&[0.1, -0.5, 2.0, -3.0]), 0.5).unwrap();
        assert_eq!(&out[..], &[0.0, 0.0, 2.0, -3.0]);
        assert_eq!(spec.p, 2);
        assert_eq!(spec.cutoff, 2.0);
        assert_eq!(spec.zeroed, 2);
    }

    #[test]
    fn prune_rate_zero_keeps_everything() {
        let w = wv(&[0.3, -0.1, 0.2]);
        let (out, spec) = prune(&w, 0.0).unwrap();
        assert_eq!(out, w);
        assert_eq!((spec.p, spec.cutoff, spec.zeroed), (0, 0.1, 0));
    }

    #[test]
    fn prune_ties_survive() {
        let (out, spec) = prune(&wv(&[1.0, 1.0, 1.0, 2.0]), 0.5).unwrap();
        assert_eq!(&out[..], &[1.0, 1.0, 1.0, 2.0]);
        assert_eq!(spec.zeroed, 0);
    }

    #[test]
    fn prune_rejects_bad_rates() {
        let w = wv(&[1.0]);
        assert_eq!(
            prune(&w, 1.0).unwrap_err(),
            AttackError::RateOutOfRange(1.0)
        );
        assert!(prune(&w, -0.1).is_err());
        assert!(prune(&w, f64::NAN).is_err());
    }

    #[test]
    fn prune_gaussian_fraction() {
        let w = sample_gaussian_weights(1_000_000, 1.0, 3).unwrap();
        let (out, spec) = prune(&w, 0.9).unwrap();
        let frac = spec.zeroed as f64 / 1e6;
        assert!((frac - 0.9).abs() <= 0.005, "{frac}");
        assert!(out.iter().all(|&x| x == 0.0 || x.abs() >= spec.cutoff));
    }

    #[test]
    fn cutoff_matches_two_sided_design_only() {
        use crate::stats::{design_t1, design_t1_two_sided, PruneRate};
        let w = sample_gaussian_weights(1_000_000, 0.01, 9746).unwrap();
        let rate = PruneRate::new(0.9746).unwrap();
        let (_, spec) = prune(&w, rate.value()).unwrap();
        let cutoff = f64::from(spec.cutoff);
        let two = design_t1_two_sided(0.01, rate).unwrap();
        let one = design_t1(0.01, rate).unwrap();
        assert!((cutoff - two).abs() / two < 0.02, "{cutoff} vs {two}");
        // the one-sided design sits about 13% below the cutoff
        assert!((cutoff - one) / cutoff > 0.1, "{cutoff} vs {one}");
    }

    #[test]
    fn noise_contract() {
        let w = sample_gaussian_weights(1000, 1.0, 1).unwrap();
        assert_eq!(add_noise(&w, 0.0, 5).unwrap(), w);
        assert_eq!(
            add_noise(&w, 0.1, 5).unwrap(),
            add_noise(&w, 0.1, 5).unwrap()
        );
        assert_ne!(
            add_noise(&w, 0.1, 5).unwrap(),
            add_noise(&w, 0.1, 6).unwrap()
        );
        assert_eq!(add_noise(&w, -1.0, 5), Err(AttackError::InvalidNoise(-1.0)));
    }

    #[test]
    fn flip_attack_budget_zero_is_identity() {
        let w = sample_gaussian_weights(100, 1.0, 1).unwrap();
        for strategy in [FlipStrategy::Suppress, FlipStrategy::Inflate] {
            let a = FlipAttack {
                strategy,
                budget: 0,
                assumed_rate: 0.95,
                rule: ThresholdRule::OneSided,
            };
            let out = targeted_flip_attack(&w, &a, 1).unwrap();
            assert_eq!(out.weights, w);
            assert!(out.touched.is_empty());
        }
    }

    #[test]
    fn suppress_hits_largest() {
        let w = wv(&[0.1, -5.0, 0.2, 4.0, -0.3]);
        let a = FlipAttack {
            strategy: FlipStrategy::Suppress,
            budget: 2,
            assumed_rate: 0.5,
            rule: ThresholdRule::OneSided,
        };
        let out = targeted_flip_attack(&w, &a, 0).unwrap();
        assert_eq!(out.touched, vec![1, 3]);
        assert!(out.weights[1] < 0.0 && out.weights[3] > 0.0);
        assert!(out.weights[1].abs() < 5.0);
    }

    #[test]
    fn inflate_touches_small_weights_only() {
        let w = sample_gaussian_weights(10_000, 1.0, 2).unwrap();
        let a = FlipAttack {
            strategy: FlipStrategy::Inflate,
            budget: 50,
            assumed_rate: 0.95,
            rule: ThresholdRule::OneSided,
        };
        let out = targeted_flip_attack(&w, &a, 9).unwrap();
        assert_eq!(out.touched.len(), 50);
        for &i in &out.touched {
            assert!(f64::from(w[i].abs()) < out.level);
            assert_eq!(f64::from(out.weights[i].abs()), f64::from(out.level as f32));
        }
        let too_big = FlipAttack {
            budget: 10_001,
            ..a
        };
        assert!(targeted_flip_attack(&w, &too_big, 9).is_err());
    }
}
