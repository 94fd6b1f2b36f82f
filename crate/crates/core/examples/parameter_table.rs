//! Code lengths for the reference (k, α) grid under both length rules.
//!
//! ```text
//! cargo run --example parameter_table
//! ```

use cwcmark::codec::{find_params_for_tolerance, find_params_with, LengthRule};

const SETS: [(usize, usize); 8] = [
    (64, 8),
    (64, 10),
    (128, 20),
    (254, 40),
    (256, 40),
    (512, 79),
    (1024, 127),
    (1024, 170),
];

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>5} {:>4} {:>7} {:>7} {:>9}",
        "k", "α", "L", "L_min", "tolerance"
    );
    for (k, alpha) in SETS {
        let bound = find_params_with(k, alpha, LengthRule::ProductBound)?;
        let minimal = find_params_with(k, alpha, LengthRule::Minimal)?;
        println!(
            "{k:>5} {alpha:>4} {:>7} {:>7} {:>9.4}",
            bound.len, minimal.len, bound.tolerance
        );
    }

    // smallest α reaching a target tolerance
    let r = find_params_for_tolerance(64, 0.99, LengthRule::ProductBound)?;
    println!(
        "k=64 tolerance ≥ 0.99: α={} L={} ({:.4})",
        r.alpha, r.len, r.tolerance
    );
    Ok(())
}
