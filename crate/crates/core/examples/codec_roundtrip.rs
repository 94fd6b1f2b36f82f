//! Encode a message into a constant-weight codeword and back, and show the
//! colexicographic index behind it.

use cwcmark::codec::{self, bits_to_int, codeword_index, find_params, WatermarkMessage};
use cwcmark::rng::SplitMix64;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = find_params(64, 10)?.params();
    let mut rng = SplitMix64::new(2024);
    let message = WatermarkMessage::new((0..64).map(|_| rng.next_bool()).collect());

    let codeword = codec::encode(&message, &params)?;
    let ones: Vec<usize> = codeword.support().collect();
    println!("{params}");
    println!("message value   {}", bits_to_int(&message));
    println!("codeword index  {}", codeword_index(&codeword, &params)?);
    println!("one positions   {ones:?}");

    let back = codec::decode(&codeword, &params)?;
    assert_eq!(back, message);
    println!("decoded back to the same {} bits", back.len());

    // a word whose index is too large for 64 bits is rejected on decode
    let mut bits = vec![false; params.len()];
    for b in bits.iter_mut().rev().take(10) {
        *b = true;
    }
    let top = codec::Codeword::new(bits);
    println!(
        "last word decodes: {:?}",
        codec::decode(&top, &params).map(|_| ())
    );
    Ok(())
}
