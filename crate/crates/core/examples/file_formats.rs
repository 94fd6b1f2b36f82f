//! Weight files and spec files on disk, and how corrupt input is reported.

use cwcmark::codec::find_params;
use cwcmark::io::{self, SpecFile};
use cwcmark::stats::{sample_gaussian_weights, PruneRate, ThresholdPair, ThresholdRule};
use cwcmark::watermark::{EmbedSpec, RatioPolicy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let weights = sample_gaussian_weights(50_000, 0.01, 11)?;
    let wpath = dir.path().join("layer.cwcw");
    io::write_weights(&wpath, &weights)?;
    println!(
        "{} bytes for {} weights",
        std::fs::metadata(&wpath)?.len(),
        weights.len()
    );
    assert_eq!(io::read_weights(&wpath)?, weights);

    let params = find_params(16, 3)?.params();
    let thresholds = ThresholdPair::design(0.01, PruneRate::new(0.9)?, ThresholdRule::OneSided)?;
    let spec = EmbedSpec::generate(5, params, thresholds, weights.len(), RatioPolicy::Enforce)?;
    let file = SpecFile::single(spec, weights.len());
    let spath = dir.path().join("layer.spec");
    io::write_spec(&spath, &file)?;
    let text = std::fs::read_to_string(&spath)?;
    for line in text.lines().take(10) {
        println!("  {line}");
    }
    assert_eq!(io::read_spec(&spath)?, file);

    let mut bytes = std::fs::read(&wpath)?;
    bytes.truncate(bytes.len() / 2);
    println!("truncated: {}", io::decode_weights(&bytes).unwrap_err());
    bytes[0] = b'X';
    println!("bad magic: {}", io::decode_weights(&bytes).unwrap_err());
    println!(
        "bad spec:  {}",
        SpecFile::parse("k = 16\nalpha = three\n").unwrap_err()
    );
    Ok(())
}
