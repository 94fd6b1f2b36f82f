//! Additive Gaussian noise against the gap between T₀ and T₁.

use cwcmark::attacks::add_noise;
use cwcmark::codec::{self, find_params, WatermarkMessage};
use cwcmark::rng::SplitMix64;
use cwcmark::stats::{sample_gaussian_weights, PruneRate, ThresholdPair, ThresholdRule};
use cwcmark::watermark::{embed, extract, EmbedSpec, RatioPolicy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = find_params(64, 10)?.params();
    let thresholds = ThresholdPair::design(0.01, PruneRate::new(0.95)?, ThresholdRule::TwoSided)?;
    let margin = thresholds.margin();
    let weights = sample_gaussian_weights(100_000, 0.01, 4)?;
    let mut rng = SplitMix64::new(4);
    let trials = 20;

    println!("margin T₁ − T₀ = {margin:.6}");
    for fraction in [0.05, 1.0 / 6.0, 0.5, 1.0, 2.0] {
        let sigma_noise = margin * fraction;
        let mut flipped = 0;
        for _ in 0..trials {
            let m = WatermarkMessage::new((0..64).map(|_| rng.next_bool()).collect());
            let codeword = codec::encode(&m, &params)?;
            let spec = EmbedSpec::generate(
                rng.next_u64(),
                params,
                thresholds,
                weights.len(),
                RatioPolicy::Enforce,
            )?;
            let (marked, _) = embed(&weights, &codeword, &spec)?;
            let noisy = add_noise(&marked, sigma_noise, rng.next_u64())?;
            let got = extract(&noisy, &spec)?;
            flipped += got
                .bits()
                .iter()
                .zip(codeword.bits())
                .filter(|(a, b)| a != b)
                .count();
        }
        let ber = flipped as f64 / (trials * params.len()) as f64;
        println!("σ_noise = {fraction:.3}·margin: codeword bit error rate {ber:.5}");
    }
    Ok(())
}
