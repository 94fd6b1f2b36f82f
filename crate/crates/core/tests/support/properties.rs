//! Module invariants as property checks. Each check runs its own
//! deterministic proptest runner so both the property tests and the
//! acceptance suite can drive them.

use std::collections::HashSet;
use std::sync::OnceLock;

use cwcmark::attacks::prune;
use cwcmark::cli::{format_hex_message, parse_hex_message, REFERENCE_SETS};
use cwcmark::codec::{self, binomial, find_params_with, CodeParams, LengthRule, WatermarkMessage};
use cwcmark::io::{decode_weights, encode_weights, SpecFile};
use cwcmark::rng::SplitMix64;
use cwcmark::stats::{
    design_t1, design_t1_two_sided, q_function, q_inverse, sample_gaussian_weights, PruneRate,
    ThresholdPair,
};
use cwcmark::watermark::{
    embed, extract, join_blocks, select_block_positions, select_positions, split_blocks,
    BlockLayout, EmbedSpec, RatioPolicy, WeightVector,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 128;

pub type Check = fn(u32) -> Result<(), String>;

pub const ALL: &[(&str, Check)] = &[
    ("codec: constant weight", constant_weight),
    (
        "codec: roundtrip on reference sets",
        roundtrip_reference_sets,
    ),
    ("codec: roundtrip on small codes", roundtrip_small_codes),
    ("codec: pascal rule", pascal_rule),
    ("codec: length monotone in k", length_monotone_in_k),
    ("stats: q strictly decreasing", q_decreasing),
    ("stats: q symmetry", q_symmetry),
    ("stats: q_inverse inverts q", q_inverse_inverts),
    ("stats: design_t1 linear in sigma", design_linear_in_sigma),
    (
        "stats: two-sided empirical consistency",
        empirical_consistency,
    ),
    ("watermark: exactness", exactness),
    ("watermark: locality", locality),
    ("watermark: idempotence", idempotence),
    ("watermark: sign preservation", sign_preservation),
    ("watermark: extract weight is alpha", extract_weight_alpha),
    (
        "watermark: pipeline survives sub-threshold pruning",
        pipeline_under_pruning,
    ),
    (
        "watermark: selection distinct and deterministic",
        selection_valid,
    ),
    ("watermark: block split/join inverse", blocks_inverse),
    (
        "watermark: block positions disjoint",
        block_positions_disjoint,
    ),
    ("attacks: prune only zeroes", prune_only_zeroes),
    (
        "attacks: prune idempotent on generic input",
        prune_idempotent,
    ),
    ("attacks: zeroed count bounded by ties", prune_zeroed_count),
    ("io: weight bytes roundtrip", weight_bytes_roundtrip),
    ("io: spec roundtrip", spec_roundtrip),
    ("io: extraction ignores key", extraction_ignores_key),
    ("cli: hex roundtrip", hex_roundtrip),
];

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn reference_params() -> &'static [CodeParams] {
    static PARAMS: OnceLock<Vec<CodeParams>> = OnceLock::new();
    PARAMS.get_or_init(|| {
        REFERENCE_SETS
            .iter()
            .map(|&(k, a)| {
                find_params_with(k, a, LengthRule::default())
                    .unwrap()
                    .params()
            })
            .collect()
    })
}

fn random_message(k: usize, seed: u64) -> WatermarkMessage {
    let mut rng = SplitMix64::new(seed);
    WatermarkMessage::new((0..k).map(|_| rng.next_bool()).collect())
}

/// Small (k, α) pairs with their minimal lengths, capped at L = 150.
fn small_params() -> impl Strategy<Value = CodeParams> {
    (1usize..=24, 1usize..=8).prop_filter_map("codeword too long", |(k, a)| {
        let p = find_params_with(k, a, LengthRule::Minimal).ok()?.params();
        (p.len() <= 150).then_some(p)
    })
}

fn constant_weight(cases: u32) -> Result<(), String> {
    check(
        cases,
        (0..REFERENCE_SETS.len(), any::<u64>()),
        |(i, seed)| {
            let p = reference_params()[i];
            let c = codec::encode(&random_message(p.k(), seed), &p).unwrap();
            prop_assert_eq!(c.weight(), p.alpha());
            prop_assert_eq!(c.len(), p.len());
            Ok(())
        },
    )
}

fn roundtrip_reference_sets(cases: u32) -> Result<(), String> {
    check(
        cases,
        (0..REFERENCE_SETS.len(), any::<u64>()),
        |(i, seed)| {
            let p = reference_params()[i];
            let m = random_message(p.k(), seed);
            let c = codec::encode(&m, &p).unwrap();
            prop_assert_eq!(codec::decode(&c, &p).unwrap(), m);
            Ok(())
        },
    )
}

fn roundtrip_small_codes(cases: u32) -> Result<(), String> {
    check(cases, (small_params(), any::<u64>()), |(p, seed)| {
        let m = random_message(p.k(), seed);
        let c = codec::encode(&m, &p).unwrap();
        prop_assert_eq!(codec::decode(&c, &p).unwrap(), m);
        Ok(())
    })
}

fn pascal_rule(cases: u32) -> Result<(), String> {
    check(
        cases,
        (1u64..=200).prop_flat_map(|n| (Just(n), 1..=n)),
        |(n, r)| {
            prop_assert_eq!(binomial(n, r), binomial(n - 1, r - 1) + binomial(n - 1, r));
            Ok(())
        },
    )
}

fn length_monotone_in_k(cases: u32) -> Result<(), String> {
    let rule = prop_oneof![Just(LengthRule::ProductBound), Just(LengthRule::Minimal)];
    // small alpha with large k overflows usize lengths
    check(cases, (1usize..=200, 4usize..=30, rule), |(k, a, rule)| {
        let l0 = find_params_with(k, a, rule).unwrap().len;
        let l1 = find_params_with(k + 1, a, rule).unwrap().len;
        prop_assert!(l0 <= l1, "k={} alpha={} {} > {}", k, a, l0, l1);
        Ok(())
    })
}

fn q_decreasing(cases: u32) -> Result<(), String> {
    check(cases, (-10.0f64..10.0, 1e-6f64..1.0), |(x, dx)| {
        prop_assert!(q_function(x) >= q_function(x + dx));
        // Below about -6.5, Q(x) is within one ulp of 1 and a 1e-6 step no
        // longer changes the rounded value, so strictness is checked where
        // binary64 can resolve it.
        if x >= -6.0 {
            prop_assert!(q_function(x) > q_function(x + dx));
        }
        Ok(())
    })
}

fn q_symmetry(cases: u32) -> Result<(), String> {
    check(cases, -10.0f64..10.0, |x| {
        prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() <= 1e-12);
        Ok(())
    })
}

fn q_inverse_inverts(cases: u32) -> Result<(), String> {
    check(cases, -6.0f64..6.0, |x| {
        let back = q_inverse(q_function(x)).unwrap();
        prop_assert!((back - x).abs() <= 1e-8, "x={} back={}", x, back);
        Ok(())
    })
}

fn design_linear_in_sigma(cases: u32) -> Result<(), String> {
    check(
        cases,
        (0.51f64..0.9999, -20i32..20, 1e-3f64..1e3),
        |(r, e, s)| {
            let rate = PruneRate::new(r).unwrap();
            let unit = design_t1(1.0, rate).unwrap();
            // power-of-two scaling is exact in binary64
            let p2 = 2f64.powi(e);
            prop_assert_eq!(design_t1(p2, rate).unwrap(), p2 * unit);
            // general scaling is one rounding away
            let t = design_t1(s, rate).unwrap();
            prop_assert!((t - s * unit).abs() <= 2.0 * f64::EPSILON * t);
            Ok(())
        },
    )
}

fn empirical_consistency(cases: u32) -> Result<(), String> {
    check(
        cases,
        (0.05f64..0.99, 1e-3f64..10.0, any::<u64>()),
        |(r, sigma, seed)| {
            let n = 100_000;
            let t1 = design_t1_two_sided(sigma, PruneRate::new(r).unwrap()).unwrap();
            let w = sample_gaussian_weights(n, sigma, seed).unwrap();
            let below = w.iter().filter(|x| f64::from(x.abs()) < t1).count() as f64 / n as f64;
            // 5 binomial standard deviations at the worst case p = 1/2
            prop_assert!(
                (below - r).abs() < 5.0 * 0.5 / (n as f64).sqrt(),
                "r={} got {}",
                r,
                below
            );
            Ok(())
        },
    )
}

/// Finite weights with adversarial structure mixed in.
fn weight_values(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f32>> {
    let value = prop_oneof![
        4 => -5.0f32..5.0,
        1 => Just(0.0f32),
        1 => Just(-0.0f32),
        1 => Just(1.0f32),
        1 => Just(-1.0f32),
        1 => -1e-38f32..1e-38,
    ];
    prop::collection::vec(value, len)
}

/// Weights, a spec with positions drawn by key, and a message.
fn embed_case() -> impl Strategy<Value = (WeightVector, EmbedSpec, WatermarkMessage)> {
    (
        small_params(),
        weight_values(200..400),
        any::<u64>(),
        any::<u64>(),
        1e-3f64..5.0,
        0.01f64..0.99,
    )
        .prop_filter("needs L ≤ N", |(p, w, ..)| p.len() <= w.len())
        .prop_map(|(p, w, key, mseed, t1, ratio)| {
            let weights = WeightVector::new(w).unwrap();
            let thresholds = ThresholdPair::new(t1 * ratio, t1).unwrap();
            let spec =
                EmbedSpec::generate(key, p, thresholds, weights.len(), RatioPolicy::Override)
                    .unwrap();
            (weights, spec, random_message(p.k(), mseed))
        })
}

fn exactness(cases: u32) -> Result<(), String> {
    check(cases, embed_case(), |(w, spec, m)| {
        let c = codec::encode(&m, &spec.params).unwrap();
        let (marked, receipt) = embed(&w, &c, &spec).unwrap();
        prop_assert!(receipt.modified_count <= spec.params.len());
        prop_assert_eq!(extract(&marked, &spec).unwrap(), c);
        Ok(())
    })
}

fn locality(cases: u32) -> Result<(), String> {
    check(cases, embed_case(), |(w, spec, m)| {
        let c = codec::encode(&m, &spec.params).unwrap();
        let (marked, _) = embed(&w, &c, &spec).unwrap();
        let selected: HashSet<usize> = spec.positions.iter().copied().collect();
        for i in 0..w.len() {
            if !selected.contains(&i) {
                prop_assert_eq!(w[i].to_bits(), marked[i].to_bits());
            }
        }
        Ok(())
    })
}

fn idempotence(cases: u32) -> Result<(), String> {
    check(cases, embed_case(), |(w, spec, m)| {
        let c = codec::encode(&m, &spec.params).unwrap();
        let (once, _) = embed(&w, &c, &spec).unwrap();
        let (twice, receipt) = embed(&once, &c, &spec).unwrap();
        prop_assert_eq!(receipt.modified_count, 0);
        prop_assert!(once
            .iter()
            .zip(twice.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        Ok(())
    })
}

fn sign_preservation(cases: u32) -> Result<(), String> {
    check(cases, embed_case(), |(w, spec, m)| {
        let c = codec::encode(&m, &spec.params).unwrap();
        let (marked, _) = embed(&w, &c, &spec).unwrap();
        for (&a, &b) in w.iter().zip(marked.iter()) {
            if a > 0.0 {
                prop_assert!(b > 0.0);
            } else if a < 0.0 {
                prop_assert!(b < 0.0);
            } else {
                prop_assert!(b >= 0.0);
            }
        }
        Ok(())
    })
}

fn extract_weight_alpha(cases: u32) -> Result<(), String> {
    check(cases, embed_case(), |(w, spec, _)| {
        // no embedding: arbitrary weights stand in for a corrupted model
        let c = extract(&w, &spec).unwrap();
        prop_assert_eq!(c.weight(), spec.params.alpha());
        Ok(())
    })
}

fn pipeline_under_pruning(cases: u32) -> Result<(), String> {
    let strategy = (
        small_params(),
        any::<u64>(),
        any::<u64>(),
        0.0f64..0.99,
        0.5f64..3.0,
    );
    check(cases, strategy, |(p, seed, key, rate, t1)| {
        let n = 3_000;
        let w = sample_gaussian_weights(n, 1.0, seed).unwrap();
        let m = random_message(p.k(), seed ^ 1);
        let t = ThresholdPair::with_default_t0(t1).unwrap();
        let spec = EmbedSpec::generate(key, p, t, n, RatioPolicy::Override).unwrap();
        let c = codec::encode(&m, &p).unwrap();
        let (marked, _) = embed(&w, &c, &spec).unwrap();
        let (pruned, ps) = prune(&marked, rate).unwrap();
        if f64::from(ps.cutoff) < t1 {
            prop_assert_eq!(
                extract(&pruned, &spec).unwrap(),
                extract(&marked, &spec).unwrap()
            );
            prop_assert_eq!(
                codec::decode(&extract(&pruned, &spec).unwrap(), &p).unwrap(),
                m
            );
        }
        Ok(())
    })
}

fn selection_valid(cases: u32) -> Result<(), String> {
    let strategy = (1usize..5_000).prop_flat_map(|n| (Just(n), 0..=n, any::<u64>()));
    check(cases, strategy, |(n, l, key)| {
        let a = select_positions(key, n, l, RatioPolicy::Override).unwrap();
        prop_assert_eq!(a.len(), l);
        prop_assert!(a.iter().all(|&p| p < n));
        prop_assert_eq!(a.iter().collect::<HashSet<_>>().len(), l);
        prop_assert_eq!(
            a,
            select_positions(key, n, l, RatioPolicy::Override).unwrap()
        );
        Ok(())
    })
}

fn blocks_inverse(cases: u32) -> Result<(), String> {
    check(
        cases,
        (prop::collection::vec(any::<bool>(), 1..300), 1usize..70),
        |(bits, kb)| {
            let blocks = split_blocks(&bits, kb).unwrap();
            prop_assert_eq!(blocks.len(), bits.len().div_ceil(kb));
            prop_assert!(blocks.iter().all(|b| b.len() == kb));
            prop_assert_eq!(join_blocks(&blocks, bits.len()), bits);
            Ok(())
        },
    )
}

fn block_positions_disjoint(cases: u32) -> Result<(), String> {
    let strategy = (1usize..20, 1usize..8, any::<u64>())
        .prop_flat_map(|(l, b, key)| (Just(l), Just(b), Just(key), l * b..l * b * 3));
    check(cases, strategy, |(l, blocks, key, n)| {
        let layout = select_block_positions(key, n, l, blocks, RatioPolicy::Override).unwrap();
        prop_assert_eq!(layout.len(), blocks);
        let all: HashSet<usize> = layout.iter().flatten().copied().collect();
        prop_assert_eq!(all.len(), l * blocks);
        prop_assert!(all.iter().all(|&p| p < n));
        Ok(())
    })
}

fn prune_only_zeroes(cases: u32) -> Result<(), String> {
    check(
        cases,
        (weight_values(1..500), 0.0f64..0.999),
        |(w, rate)| {
            let w = WeightVector::new(w).unwrap();
            let (out, spec) = prune(&w, rate).unwrap();
            for (&a, &b) in w.iter().zip(out.iter()) {
                if a.abs() >= spec.cutoff {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                } else {
                    prop_assert_eq!(b, 0.0);
                }
            }
            Ok(())
        },
    )
}

fn prune_idempotent(cases: u32) -> Result<(), String> {
    // continuous draws: magnitudes tie with probability zero
    check(
        cases,
        (1usize..5_000, any::<u64>(), 0.0f64..0.999),
        |(n, seed, rate)| {
            let w = sample_gaussian_weights(n, 1.0, seed).unwrap();
            let mags: HashSet<u32> = w.iter().map(|x| x.abs().to_bits()).collect();
            prop_assume!(mags.len() == n);
            let (once, _) = prune(&w, rate).unwrap();
            let (twice, _) = prune(&once, rate).unwrap();
            prop_assert_eq!(once, twice);
            Ok(())
        },
    )
}

fn prune_zeroed_count(cases: u32) -> Result<(), String> {
    check(
        cases,
        (weight_values(1..500), 0.0f64..0.999),
        |(w, rate)| {
            let n = w.len();
            let w = WeightVector::new(w).unwrap();
            let (_, spec) = prune(&w, rate).unwrap();
            let ties = w.iter().filter(|x| x.abs() == spec.cutoff).count();
            prop_assert!(spec.p < n);
            prop_assert!(spec.p as f64 <= rate * n as f64);
            prop_assert!(spec.zeroed <= spec.p);
            prop_assert!(spec.zeroed + ties > spec.p);
            Ok(())
        },
    )
}

fn weight_bytes_roundtrip(cases: u32) -> Result<(), String> {
    let finite = any::<u32>().prop_filter("finite", |b| f32::from_bits(*b).is_finite());
    check(cases, prop::collection::vec(finite, 1..2_000), |raw| {
        let values: Vec<f32> = raw.iter().map(|&b| f32::from_bits(b)).collect();
        let bytes = encode_weights(&values);
        prop_assert_eq!(bytes.len(), 14 + 4 * values.len());
        prop_assert_eq!(&bytes, &encode_weights(&values));
        let back = decode_weights(&bytes).unwrap();
        prop_assert!(back.iter().map(|x| x.to_bits()).eq(raw.iter().copied()));
        Ok(())
    })
}

fn spec_case() -> impl Strategy<Value = SpecFile> {
    (
        small_params(),
        any::<u64>(),
        1usize..5,
        1e-300f64..1e3,
        0.0f64..1.0,
        prop::option::of(1e-9f64..1e9),
        prop::option::of(0.0f64..1.0),
    )
        .prop_flat_map(|(p, key, blocks, t1, ratio, sigma, rate)| {
            let min_bits = (blocks - 1) * p.k() + 1;
            (
                Just((p, key, blocks, t1, ratio, sigma, rate)),
                min_bits..=blocks * p.k(),
                p.len() * blocks..p.len() * blocks * 4,
            )
        })
        .prop_filter_map(
            "t0 must stay positive",
            |((p, key, blocks, t1, ratio, sigma, rate), bits, n)| {
                let thresholds = ThresholdPair::new(t1 * ratio, t1).ok()?;
                let positions =
                    select_block_positions(key, n, p.len(), blocks, RatioPolicy::Override).ok()?;
                Some(SpecFile {
                    layout: BlockLayout {
                        key,
                        params: p,
                        thresholds,
                        message_bits: bits,
                        blocks: positions,
                    },
                    n,
                    sigma,
                    rate,
                })
            },
        )
}

fn spec_roundtrip(cases: u32) -> Result<(), String> {
    check(cases, spec_case(), |spec| {
        let text = spec.to_text();
        prop_assert_eq!(text.clone(), spec.to_text());
        prop_assert_eq!(SpecFile::parse(&text).unwrap(), spec);
        Ok(())
    })
}

fn extraction_ignores_key(cases: u32) -> Result<(), String> {
    check(
        cases,
        (embed_case(), any::<u64>()),
        |((w, spec, m), other_key)| {
            let c = codec::encode(&m, &spec.params).unwrap();
            let (marked, _) = embed(&w, &c, &spec).unwrap();
            let file = SpecFile::single(spec.clone(), w.len());
            let mut text = file.to_text();
            text = text.replace(
                &format!("key = {}\n", spec.key),
                &format!("key = {other_key}\n"),
            );
            let reread = SpecFile::parse(&text).unwrap().single_block().unwrap();
            prop_assert_eq!(extract(&marked, &reread).unwrap(), c);
            Ok(())
        },
    )
}

fn hex_roundtrip(cases: u32) -> Result<(), String> {
    check(cases, "(0x)?[0-9a-f]{1,300}", |hex| {
        let bits = parse_hex_message(&hex).unwrap();
        let digits = hex.trim_start_matches("0x");
        prop_assert_eq!(bits.len(), 4 * digits.len());
        prop_assert_eq!(format_hex_message(&bits), digits);
        Ok(())
    })
}
