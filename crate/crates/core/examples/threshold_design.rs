//! Designing T₁ and T₀ from a weight spread and a pruning rate.

use cwcmark::stats::{
    estimate_sigma, q_function, q_inverse, sample_gaussian_weights, GaussianModel, PruneRate,
    ThresholdPair, ThresholdRule,
};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma = 0.01;
    println!(
        "Q(1.6449) = {:.6}, Q⁻¹(0.05) = {:.6}",
        q_function(1.6449),
        q_inverse(0.05)?
    );

    let model = GaussianModel::new(sigma)?;
    println!(
        "{:>6} {:>10} {:>10} {:>10}",
        "R", "one-sided", "two-sided", "cutoff"
    );
    for r in [0.5, 0.8, 0.9, 0.95, 0.99] {
        let rate = PruneRate::new(r)?;
        // the one-sided rule has no solution at R = 0.5
        let one = ThresholdRule::OneSided
            .design_t1(sigma, rate)
            .map(|t| format!("{t:.6}"))
            .unwrap_or_else(|_| "-".into());
        let two = ThresholdRule::TwoSided.design_t1(sigma, rate)?;
        println!(
            "{r:>6} {one:>10} {two:>10.6} {:>10.6}",
            model.pruning_cutoff(rate)?
        );
    }

    // σ estimated from the weights themselves
    let weights = sample_gaussian_weights(200_000, sigma, 1)?;
    let sigma_hat = estimate_sigma(&weights)?;
    let pair = ThresholdPair::design(sigma_hat, PruneRate::new(0.95)?, ThresholdRule::TwoSided)?;
    println!(
        "σ̂ = {sigma_hat:.6}: T₁ = {:.6}, T₀ = {:.6}, margin {:.6}",
        pair.t1(),
        pair.t0(),
        pair.margin()
    );
    Ok(())
}
