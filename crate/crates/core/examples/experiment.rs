//! A small Monte-Carlo sweep written as CSV, the same harness the `eval`
//! verb drives.

use cwcmark::cli::eval::{run_eval, write_csv, EvalConfig};
use cwcmark::codec::find_params;
use cwcmark::stats::ThresholdRule;
use cwcmark::watermark::RatioPolicy;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = EvalConfig {
        trials: 3,
        n: 100_000,
        sigma: 0.01,
        params: find_params(64, 10)?.params(),
        design_rate: 0.95,
        attack_rates: vec![0.5, 0.9, 0.999],
        rule: ThresholdRule::TwoSided,
        seed: 1,
        policy: RatioPolicy::Enforce,
    };
    let rows = run_eval(&config)?;
    write_csv(std::io::stdout().lock(), &rows)?;
    let failed = rows.iter().filter(|r| !r.recovered).count();
    eprintln!("{failed} of {} rows failed to recover", rows.len());
    Ok(())
}
