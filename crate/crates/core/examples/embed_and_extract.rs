//! The full pipeline on a synthetic layer: select positions from a key,
//! project the weights, then recover the message from the weights alone.

use cwcmark::codec::{find_params, WatermarkMessage};
use cwcmark::stats::{sample_gaussian_weights, PruneRate, ThresholdPair, ThresholdRule};
use cwcmark::watermark::{embed_message, extract_detailed, extract_message, RatioPolicy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weights = sample_gaussian_weights(100_000, 0.01, 7)?;
    let params = find_params(64, 10)?.params();
    let thresholds = ThresholdPair::design(0.01, PruneRate::new(0.95)?, ThresholdRule::TwoSided)?;
    let message = WatermarkMessage::new((0..64).map(|i| i % 3 == 0).collect());

    let (marked, receipt) = embed_message(
        &weights,
        &message,
        0x5eed,
        thresholds,
        params,
        RatioPolicy::Enforce,
    )?;
    println!(
        "changed {} of {} selected weights, largest change {:.6}",
        receipt.modified_count,
        params.len(),
        receipt.max_perturbation
    );
    let untouched = (0..weights.len())
        .filter(|i| !receipt.spec.positions.contains(i))
        .all(|i| weights[i].to_bits() == marked[i].to_bits());
    println!("weights outside the selection unchanged: {untouched}");

    let detail = extract_detailed(&marked, &receipt.spec)?;
    println!(
        "smallest selected one {:.6}, largest zero {:.6}",
        detail.min_one, detail.max_zero
    );
    assert_eq!(extract_message(&marked, &receipt.spec)?, message);
    println!("message recovered");
    Ok(())
}
