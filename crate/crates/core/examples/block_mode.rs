//! Payloads longer than one code word are split into blocks, each embedded
//! at its own disjoint set of positions.

use cwcmark::cli::{format_hex_message, parse_hex_message};
use cwcmark::codec::find_params;
use cwcmark::stats::{sample_gaussian_weights, PruneRate, ThresholdPair, ThresholdRule};
use cwcmark::watermark::{embed_blocks, extract_blocks, RatioPolicy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let payload = parse_hex_message("6d6f64656c2d6f776e65723a20616c696365")?;
    let params = find_params(64, 10)?.params();
    let weights = sample_gaussian_weights(250_000, 0.01, 3)?;
    let thresholds = ThresholdPair::design(0.01, PruneRate::new(0.95)?, ThresholdRule::TwoSided)?;

    let (marked, receipt) = embed_blocks(
        &weights,
        &payload,
        77,
        thresholds,
        params,
        RatioPolicy::Enforce,
    )?;
    let layout = &receipt.layout;
    println!(
        "{} bits in {} blocks of {params}",
        payload.len(),
        layout.blocks.len()
    );
    for (j, block) in layout.blocks.iter().enumerate() {
        println!("  block {j}: first positions {:?}", &block[..4]);
    }

    let back = extract_blocks(&marked, layout)?;
    println!(
        "recovered {}",
        String::from_utf8(hex_bytes(&format_hex_message(&back)))?
    );
    Ok(())
}

fn hex_bytes(hex: &str) -> Vec<u8> {
    (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).unwrap())
        .collect()
}
