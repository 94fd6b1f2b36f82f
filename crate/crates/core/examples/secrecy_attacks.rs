//! Position-blind bit-flip attacks. The attacker only sees the weights, so
//! its touched weights rarely land on embedded positions.

use cwcmark::attacks::{count_hits, targeted_flip_attack, FlipAttack, FlipStrategy};
use cwcmark::codec::{self, find_params, WatermarkMessage};
use cwcmark::stats::{sample_gaussian_weights, PruneRate, ThresholdPair, ThresholdRule};
use cwcmark::watermark::{embed, extract_message, EmbedSpec, RatioPolicy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1_000_000;
    let weights = sample_gaussian_weights(n, 0.01, 99)?;
    let params = find_params(64, 10)?.params();
    let thresholds = ThresholdPair::design(0.01, PruneRate::new(0.95)?, ThresholdRule::TwoSided)?;
    let message = WatermarkMessage::new((0..64).map(|i| i % 5 == 1).collect());
    let codeword = codec::encode(&message, &params)?;
    let spec = EmbedSpec::generate(0xfeed, params, thresholds, n, RatioPolicy::Enforce)?;
    let (marked, _) = embed(&weights, &codeword, &spec)?;

    for strategy in [FlipStrategy::Suppress, FlipStrategy::Inflate] {
        for budget in [10, 1_000, 50_000] {
            let attack = FlipAttack {
                strategy,
                budget,
                assumed_rate: 0.95,
                rule: ThresholdRule::TwoSided,
            };
            let outcome = targeted_flip_attack(&marked, &attack, 1)?;
            let hits = count_hits(&outcome.touched, &spec, &codeword);
            let intact = extract_message(&outcome.weights, &spec).ok() == Some(message.clone());
            println!(
                "{strategy:?} budget {budget:>6}: hit {} ones, {} zeros; message intact: {intact}",
                hits.ones, hits.zeros
            );
        }
    }
    Ok(())
}
