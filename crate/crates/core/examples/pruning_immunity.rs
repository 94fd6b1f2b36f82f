//! Magnitude pruning against a watermark designed for R = 0.95, for both
//! threshold rules. Recovery holds while the cutoff stays below T₁.

use cwcmark::attacks::prune;
use cwcmark::codec::{find_params, WatermarkMessage};
use cwcmark::rng::{derive_seed, SplitMix64};
use cwcmark::stats::{sample_gaussian_weights, PruneRate, ThresholdPair, ThresholdRule};
use cwcmark::watermark::{embed_message, extract_message, RatioPolicy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = find_params(64, 10)?.params();
    let trials = 10;
    for rule in [ThresholdRule::TwoSided, ThresholdRule::OneSided] {
        let thresholds = ThresholdPair::design(0.01, PruneRate::new(0.95)?, rule)?;
        println!("{rule:?}: T₁ = {:.6}", thresholds.t1());
        for rate in [0.5f64, 0.8, 0.9, 0.94, 0.97, 0.99] {
            let mut recovered = 0;
            let mut cutoff = 0.0f32;
            for t in 0..trials {
                let seed = derive_seed(rate.to_bits(), t);
                let weights = sample_gaussian_weights(100_000, 0.01, seed)?;
                let mut rng = SplitMix64::new(seed);
                let m = WatermarkMessage::new((0..64).map(|_| rng.next_bool()).collect());
                let (marked, receipt) = embed_message(
                    &weights,
                    &m,
                    rng.next_u64(),
                    thresholds,
                    params,
                    RatioPolicy::Enforce,
                )?;
                let (pruned, spec) = prune(&marked, rate)?;
                cutoff = cutoff.max(spec.cutoff);
                if extract_message(&pruned, &receipt.spec).ok() == Some(m) {
                    recovered += 1;
                }
            }
            println!("  R={rate:<5} cutoff ≤ {cutoff:.6}  recovered {recovered}/{trials}");
        }
    }
    Ok(())
}
