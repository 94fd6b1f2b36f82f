//! Keyed position selection, two-threshold embedding and detection.
//!
//! A codeword `c` of weight `α` is written into `L` key-selected weights:
//! ones are pushed to magnitude at least `T₁`, zeros to at most `T₀`, signs
//! kept. Detection marks the `α` largest magnitudes among the selected
//! weights as ones. Magnitude pruning only zeroes weights below its cutoff,
//! so whenever the cutoff stays below `T₁` the ones survive and the zeros
//! (pruned or not) stay below them.

use std::collections::{HashMap, HashSet};
use std::ops::Deref;

use serde::Serialize;
use thiserror::Error;

use crate::codec::{self, CodeParams, CodecError, Codeword, WatermarkMessage};
use crate::rng::{derive_seed, SplitMix64};
use crate::stats::ThresholdPair;

/// Largest `L/N` ratio accepted without an explicit override.
pub const MAX_SELECTION_RATIO: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WatermarkError {
    #[error("weight vector must not be empty")]
    EmptyWeights,
    #[error("weight {index} is not finite")]
    NonFinite { index: usize },
    #[error("cannot select {l} positions out of {n}")]
    TooManyPositions { l: usize, n: usize },
    #[error(
        "selecting {l} of {n} weights exceeds the ratio L <= N/100; \
         pass an explicit override to allow it"
    )]
    RatioPolicy { l: usize, n: usize },
    #[error("spec expects {expected} positions, got {actual}")]
    PositionCount { expected: usize, actual: usize },
    #[error("position {position} is out of range for {n} weights")]
    PositionOutOfRange { position: usize, n: usize },
    #[error("position {0} is selected twice")]
    DuplicatePosition(usize),
    #[error("codeword length {actual} does not match L = {expected}")]
    CodewordLength { expected: usize, actual: usize },
    #[error("thresholds collapse in binary32 (t0={t0}, t1={t1})")]
    ThresholdPrecision { t0: f64, t1: f64 },
    #[error("block size must be at least 1")]
    ZeroBlockSize,
    #[error("message must not be empty")]
    EmptyMessage,
    #[error("block layout has {blocks} blocks but {expected} are needed for {bits} bits")]
    BlockCount {
        blocks: usize,
        expected: usize,
        bits: usize,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Flattened model weights in binary32. Non-empty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f32>);

impl WeightVector {
    pub fn new(values: Vec<f32>) -> Result<Self, WatermarkError> {
        if values.is_empty() {
            return Err(WatermarkError::EmptyWeights);
        }
        if let Some(index) = values.iter().position(|w| !w.is_finite()) {
            return Err(WatermarkError::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub(crate) fn new_unchecked(values: Vec<f32>) -> Self {
        debug_assert!(!values.is_empty() && values.iter().all(|w| w.is_finite()));
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.0
    }
}

impl Deref for WeightVector {
    type Target = [f32];

    fn deref(&self) -> &[f32] {
        &self.0
    }
}

/// Whether the `L ≤ N/100` selection ratio is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioPolicy {
    #[default]
    Enforce,
    Override,
}

impl RatioPolicy {
    fn check(self, l: usize, n: usize) -> Result<(), WatermarkError> {
        if self == RatioPolicy::Enforce && (l as f64) > n as f64 * MAX_SELECTION_RATIO {
            return Err(WatermarkError::RatioPolicy { l, n });
        }
        Ok(())
    }
}

/// Lazily materialized identity permutation of `0..n` for a partial
/// Fisher–Yates shuffle; only swapped slots are stored.
struct SparseShuffle {
    rng: SplitMix64,
    n: usize,
    drawn: usize,
    swapped: HashMap<usize, usize>,
}

impl SparseShuffle {
    fn new(key: u64, n: usize) -> Self {
        Self {
            rng: SplitMix64::new(key),
            n,
            drawn: 0,
            swapped: HashMap::new(),
        }
    }

    /// Step `i`: `j = i + uniform(n − i)`, swap slots `i` and `j`, emit slot `i`.
    fn next_index(&mut self) -> Option<usize> {
        let i = self.drawn;
        if i >= self.n {
            return None;
        }
        let j = i + self.rng.next_below((self.n - i) as u64) as usize;
        let at_j = self.swapped.get(&j).copied().unwrap_or(j);
        let at_i = self.swapped.get(&i).copied().unwrap_or(i);
        self.swapped.insert(j, at_i);
        self.swapped.remove(&i);
        self.drawn += 1;
        Some(at_j)
    }
}

/// `l` distinct indices from `0..n`, in selection order, by a partial
/// Fisher–Yates shuffle driven by SplitMix64 seeded with `key`.
pub fn select_positions(
    key: u64,
    n: usize,
    l: usize,
    policy: RatioPolicy,
) -> Result<Vec<usize>, WatermarkError> {
    if l > n {
        return Err(WatermarkError::TooManyPositions { l, n });
    }
    policy.check(l, n)?;
    let mut shuffle = SparseShuffle::new(key, n);
    Ok((0..l).filter_map(|_| shuffle.next_index()).collect())
}

/// Everything needed to embed into and extract from one block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedSpec {
    pub key: u64,
    #[serde(serialize_with = "serialize_params")]
    pub params: CodeParams,
    pub thresholds: ThresholdPair,
    pub positions: Vec<usize>,
}

fn serialize_params<S: serde::Serializer>(p: &CodeParams, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("CodeParams", 3)?;
    st.serialize_field("k", &p.k())?;
    st.serialize_field("alpha", &p.alpha())?;
    st.serialize_field("len", &p.len())?;
    st.end()
}

impl EmbedSpec {
    /// Selects positions for a model of `n` weights from `key`.
    pub fn generate(
        key: u64,
        params: CodeParams,
        thresholds: ThresholdPair,
        n: usize,
        policy: RatioPolicy,
    ) -> Result<Self, WatermarkError> {
        let positions = select_positions(key, n, params.len(), policy)?;
        Ok(Self {
            key,
            params,
            thresholds,
            positions,
        })
    }

    /// Checks the positions against a model of `n` weights.
    pub fn validate(&self, n: usize) -> Result<(), WatermarkError> {
        if self.positions.len() != self.params.len() {
            return Err(WatermarkError::PositionCount {
                expected: self.params.len(),
                actual: self.positions.len(),
            });
        }
        let mut seen = HashSet::with_capacity(self.positions.len());
        for &p in &self.positions {
            if p >= n {
                return Err(WatermarkError::PositionOutOfRange { position: p, n });
            }
            if !seen.insert(p) {
                return Err(WatermarkError::DuplicatePosition(p));
            }
        }
        Ok(())
    }
}

/// Audit record of one embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedReceipt {
    pub spec: EmbedSpec,
    pub modified_count: usize,
    pub max_perturbation: f64,
}

/// Thresholds as binary32 values that still satisfy the constraints when
/// widened: `T₁` rounded up, `T₀` rounded down.
fn binary32_thresholds(t: &ThresholdPair) -> Result<(f32, f32), WatermarkError> {
    let t0 = round_f32_down(t.t0());
    let t1 = round_f32_up(t.t1());
    if !(t0 > 0.0 && t0 < t1 && t1.is_finite()) {
        return Err(WatermarkError::ThresholdPrecision {
            t0: t.t0(),
            t1: t.t1(),
        });
    }
    Ok((t0, t1))
}

fn round_f32_up(x: f64) -> f32 {
    let y = x as f32;
    if f64::from(y) < x {
        f32::from_bits(y.to_bits() + 1)
    } else {
        y
    }
}

fn round_f32_down(x: f64) -> f32 {
    let y = x as f32;
    if f64::from(y) > x {
        f32::from_bits(y.to_bits() - 1)
    } else {
        y
    }
}

/// `+1` for `x ≥ 0` (including zero), `−1` otherwise.
fn sgn(x: f32) -> f32 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Projects the selected weights onto the two-threshold constraint set.
///
/// For each selected position with bit `c`:
/// `c = 1, |w| < T₁ → sgn(w)·T₁`; `c = 0, |w| > T₀ → sgn(w)·T₀`; otherwise
/// unchanged. All other weights are copied bit for bit.
pub fn embed(
    weights: &WeightVector,
    codeword: &Codeword,
    spec: &EmbedSpec,
) -> Result<(WeightVector, EmbedReceipt), WatermarkError> {
    let mut out = weights.clone();
    let (modified_count, max_perturbation) = embed_in_place(&mut out, codeword, spec)?;
    Ok((
        out,
        EmbedReceipt {
            spec: spec.clone(),
            modified_count,
            max_perturbation,
        },
    ))
}

fn embed_in_place(
    weights: &mut WeightVector,
    codeword: &Codeword,
    spec: &EmbedSpec,
) -> Result<(usize, f64), WatermarkError> {
    spec.validate(weights.len())?;
    if codeword.len() != spec.params.len() {
        return Err(WatermarkError::CodewordLength {
            expected: spec.params.len(),
            actual: codeword.len(),
        });
    }
    let (t0, t1) = binary32_thresholds(&spec.thresholds)?;
    let mut modified = 0;
    let mut max_perturbation = 0.0f64;
    for (&pos, &bit) in spec.positions.iter().zip(codeword.bits()) {
        let w = weights.0[pos];
        let magnitude = f64::from(w.abs());
        let projected = if bit && magnitude < f64::from(t1) {
            sgn(w) * t1
        } else if !bit && magnitude > f64::from(t0) {
            sgn(w) * t0
        } else {
            w
        };
        if projected.to_bits() != w.to_bits() {
            modified += 1;
            max_perturbation = max_perturbation.max((f64::from(projected) - f64::from(w)).abs());
            weights.0[pos] = projected;
        }
    }
    Ok((modified, max_perturbation))
}

/// Detailed detection result.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub codeword: Codeword,
    /// Smallest magnitude marked as a one.
    pub min_one: f32,
    /// Largest magnitude marked as a zero (0 when `α = L`).
    pub max_zero: f32,
}

impl Extraction {
    /// The `α`-th and `(α+1)`-th largest magnitudes coincide, so the
    /// lowest-index tie-break decided at least one bit.
    pub fn tie_at_boundary(&self) -> bool {
        self.min_one == self.max_zero && self.codeword.weight() < self.codeword.len()
    }
}

/// Marks the `α` largest selected magnitudes as ones; ties go to the
/// earlier entry of the position list.
pub fn extract(weights: &WeightVector, spec: &EmbedSpec) -> Result<Codeword, WatermarkError> {
    extract_detailed(weights, spec).map(|e| e.codeword)
}

pub fn extract_detailed(
    weights: &WeightVector,
    spec: &EmbedSpec,
) -> Result<Extraction, WatermarkError> {
    spec.validate(weights.len())?;
    let gathered: Vec<f32> = spec.positions.iter().map(|&p| weights.0[p].abs()).collect();
    let alpha = spec.params.alpha();
    let order = top_indices(&gathered, alpha);
    let mut bits = vec![false; gathered.len()];
    for &i in &order {
        bits[i] = true;
    }
    let min_one = order.last().map_or(0.0, |&i| gathered[i]);
    let max_zero = gathered
        .iter()
        .zip(&bits)
        .filter(|(_, &b)| !b)
        .map(|(&m, _)| m)
        .fold(0.0f32, f32::max);
    Ok(Extraction {
        codeword: Codeword::new(bits),
        min_one,
        max_zero,
    })
}

/// Indices of the `count` largest values, descending by value then
/// ascending by index.
fn top_indices(values: &[f32], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// Encode, select positions and embed in one call.
pub fn embed_message(
    weights: &WeightVector,
    message: &WatermarkMessage,
    key: u64,
    thresholds: ThresholdPair,
    params: CodeParams,
    policy: RatioPolicy,
) -> Result<(WeightVector, EmbedReceipt), WatermarkError> {
    let codeword = codec::encode(message, &params)?;
    let spec = EmbedSpec::generate(key, params, thresholds, weights.len(), policy)?;
    embed(weights, &codeword, &spec)
}

/// Extract then decode.
pub fn extract_message(
    weights: &WeightVector,
    spec: &EmbedSpec,
) -> Result<WatermarkMessage, WatermarkError> {
    let codeword = extract(weights, spec)?;
    Ok(codec::decode(&codeword, &spec.params)?)
}

/// Splits a long payload into `k_block`-bit blocks, zero-padding the last.
pub fn split_blocks(
    bits: &[bool],
    k_block: usize,
) -> Result<Vec<WatermarkMessage>, WatermarkError> {
    if k_block == 0 {
        return Err(WatermarkError::ZeroBlockSize);
    }
    if bits.is_empty() {
        return Err(WatermarkError::EmptyMessage);
    }
    Ok(bits
        .chunks(k_block)
        .map(|chunk| {
            let mut block = chunk.to_vec();
            block.resize(k_block, false);
            WatermarkMessage::new(block)
        })
        .collect())
}

/// Concatenates blocks and drops the padding beyond `original_len`.
pub fn join_blocks(blocks: &[WatermarkMessage], original_len: usize) -> Vec<bool> {
    let mut bits: Vec<bool> = blocks
        .iter()
        .flat_map(|b| b.bits().iter().copied())
        .collect();
    bits.truncate(original_len);
    bits
}

/// Seed for block `j`: `key ^ j` passed through SplitMix64.
pub fn block_key(key: u64, block: usize) -> u64 {
    derive_seed(key, block as u64)
}

/// Pairwise-disjoint position lists for `blocks` blocks of `l` positions.
///
/// Block `j` runs its own shuffle seeded by [`block_key`] and skips any index
/// already taken by an earlier block.
pub fn select_block_positions(
    key: u64,
    n: usize,
    l: usize,
    blocks: usize,
    policy: RatioPolicy,
) -> Result<Vec<Vec<usize>>, WatermarkError> {
    let total = l * blocks;
    if total > n {
        return Err(WatermarkError::TooManyPositions { l: total, n });
    }
    policy.check(total, n)?;
    let mut used = HashSet::with_capacity(total);
    let mut layout = Vec::with_capacity(blocks);
    for j in 0..blocks {
        let mut shuffle = SparseShuffle::new(block_key(key, j), n);
        let mut positions = Vec::with_capacity(l);
        while positions.len() < l {
            let p = shuffle
                .next_index()
                .expect("n ≥ total guarantees enough free indices");
            if used.insert(p) {
                positions.push(p);
            }
        }
        layout.push(positions);
    }
    Ok(layout)
}

/// A payload spread over one or more blocks sharing code parameters and
/// thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub key: u64,
    pub params: CodeParams,
    pub thresholds: ThresholdPair,
    pub message_bits: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl BlockLayout {
    pub fn block_specs(&self) -> Vec<EmbedSpec> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(j, positions)| EmbedSpec {
                key: if self.blocks.len() == 1 {
                    self.key
                } else {
                    block_key(self.key, j)
                },
                params: self.params,
                thresholds: self.thresholds,
                positions: positions.clone(),
            })
            .collect()
    }

    pub fn validate(&self, n: usize) -> Result<(), WatermarkError> {
        let expected = self.message_bits.div_ceil(self.params.k());
        if self.blocks.len() != expected || expected == 0 {
            return Err(WatermarkError::BlockCount {
                blocks: self.blocks.len(),
                expected,
                bits: self.message_bits,
            });
        }
        let mut seen = HashSet::new();
        for spec in self.block_specs() {
            spec.validate(n)?;
            for &p in &spec.positions {
                if !seen.insert(p) {
                    return Err(WatermarkError::DuplicatePosition(p));
                }
            }
        }
        Ok(())
    }
}

impl From<EmbedSpec> for BlockLayout {
    fn from(spec: EmbedSpec) -> Self {
        Self {
            key: spec.key,
            params: spec.params,
            thresholds: spec.thresholds,
            message_bits: spec.params.k(),
            blocks: vec![spec.positions],
        }
    }
}

/// Block-mode counterpart of [`EmbedReceipt`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockReceipt {
    pub layout: BlockLayout,
    pub modified_count: usize,
    pub max_perturbation: f64,
}

/// Splits `bits` into `params.k()`-bit blocks and embeds each into its own
/// disjoint position set. A single block uses [`select_positions`] directly,
/// so it matches [`embed_message`].
pub fn embed_blocks(
    weights: &WeightVector,
    bits: &[bool],
    key: u64,
    thresholds: ThresholdPair,
    params: CodeParams,
    policy: RatioPolicy,
) -> Result<(WeightVector, BlockReceipt), WatermarkError> {
    let messages = split_blocks(bits, params.k())?;
    let blocks = if messages.len() == 1 {
        vec![select_positions(key, weights.len(), params.len(), policy)?]
    } else {
        select_block_positions(key, weights.len(), params.len(), messages.len(), policy)?
    };
    let layout = BlockLayout {
        key,
        params,
        thresholds,
        message_bits: bits.len(),
        blocks,
    };
    let mut out = weights.clone();
    let mut modified_count = 0;
    let mut max_perturbation = 0.0f64;
    for (message, spec) in messages.iter().zip(layout.block_specs()) {
        let codeword = codec::encode(message, &params)?;
        let (m, p) = embed_in_place(&mut out, &codeword, &spec)?;
        modified_count += m;
        max_perturbation = max_perturbation.max(p);
    }
    Ok((
        out,
        BlockReceipt {
            layout,
            modified_count,
            max_perturbation,
        },
    ))
}

/// Recovers the full payload of a block layout.
pub fn extract_blocks(
    weights: &WeightVector,
    layout: &BlockLayout,
) -> Result<Vec<bool>, WatermarkError> {
    layout.validate(weights.len())?;
    let messages = layout
        .block_specs()
        .iter()
        .map(|spec| extract_message(weights, spec))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(join_blocks(&messages, layout.message_bits))
}
