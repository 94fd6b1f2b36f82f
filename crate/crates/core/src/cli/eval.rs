//! Monte-Carlo pruning-robustness harness.
//!
//! Each trial samples Gaussian weights, embeds a random message, then for
//! every attack rate prunes the marked vector, extracts and decodes.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::attacks::{prune, AttackError};
use crate::codec::{self, CodeParams, CodecError, WatermarkMessage};
use crate::rng::{derive_seed, SplitMix64};
use crate::stats::{sample_gaussian_weights, PruneRate, StatsError, ThresholdPair, ThresholdRule};
use crate::watermark::{embed, extract_detailed, EmbedSpec, RatioPolicy, WatermarkError};

/// Attack rates at least this far below the design rate must always recover.
pub const GUARD_BAND: f64 = 0.01;

pub const CSV_HEADER: [&str; 13] = [
    "trial_seed",
    "n",
    "sigma",
    "k",
    "alpha",
    "L",
    "r_design",
    "r_attack",
    "bit_errors",
    "recovered",
    "cutoff",
    "t1",
    "modified_count",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Watermark(#[from] WatermarkError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub trials: usize,
    pub n: usize,
    pub sigma: f64,
    pub params: CodeParams,
    pub design_rate: f64,
    pub attack_rates: Vec<f64>,
    pub rule: ThresholdRule,
    pub seed: u64,
    pub policy: RatioPolicy,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial_seed: u64,
    pub n: usize,
    pub sigma: f64,
    pub k: usize,
    pub alpha: usize,
    #[serde(rename = "L")]
    pub len: usize,
    pub r_design: f64,
    pub r_attack: f64,
    pub bit_errors: usize,
    #[serde(serialize_with = "yes_no")]
    pub recovered: bool,
    pub cutoff: f32,
    pub t1: f64,
    pub modified_count: usize,
}

fn yes_no<S: serde::Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(if *v { "yes" } else { "no" })
}

impl TrialRow {
    /// Inside the guard band, so a failure here is a verification failure.
    pub fn guarded(&self) -> bool {
        self.r_attack <= self.r_design - GUARD_BAND
    }
}

/// Seed of trial `t`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64)
}

fn random_message(k: usize, seed: u64) -> WatermarkMessage {
    let mut rng = SplitMix64::new(seed);
    WatermarkMessage::new((0..k).map(|_| rng.next_bool()).collect())
}

/// Runs one trial and returns one row per attack rate, in input order.
pub fn run_trial(config: &EvalConfig, trial: usize) -> Result<Vec<TrialRow>, EvalError> {
    let seed = trial_seed(config.seed, trial);
    let weights = sample_gaussian_weights(config.n, config.sigma, derive_seed(seed, 0))?;
    let message = random_message(config.params.k(), derive_seed(seed, 1));
    let key = derive_seed(seed, 2);
    let rate = PruneRate::new(config.design_rate)?;
    let thresholds = ThresholdPair::design(config.sigma, rate, config.rule)?;
    let codeword = codec::encode(&message, &config.params)?;
    let spec = EmbedSpec::generate(key, config.params, thresholds, config.n, config.policy)?;
    let (marked, receipt) = embed(&weights, &codeword, &spec)?;

    let mut rows = Vec::with_capacity(config.attack_rates.len());
    for &r_attack in &config.attack_rates {
        let (pruned, prune_spec) = prune(&marked, r_attack)?;
        let extraction = extract_detailed(&pruned, &spec)?;
        let bit_errors = match codec::decode(&extraction.codeword, &config.params) {
            Ok(decoded) => decoded.bit_errors(&message),
            // index beyond 2^k: count every bit as lost
            Err(_) => config.params.k(),
        };
        rows.push(TrialRow {
            trial_seed: seed,
            n: config.n,
            sigma: config.sigma,
            k: config.params.k(),
            alpha: config.params.alpha(),
            len: config.params.len(),
            r_design: config.design_rate,
            r_attack,
            bit_errors,
            recovered: bit_errors == 0,
            cutoff: prune_spec.cutoff,
            t1: thresholds.t1(),
            modified_count: receipt.modified_count,
        });
    }
    Ok(rows)
}

/// All trials, ordered by (trial, attack rate).
pub fn run_eval(config: &EvalConfig) -> Result<Vec<TrialRow>, EvalError> {
    let mut rows = Vec::with_capacity(config.trials * config.attack_rates.len());
    for trial in 0..config.trials {
        rows.extend(run_trial(config, trial)?);
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(out: W, rows: &[TrialRow]) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
