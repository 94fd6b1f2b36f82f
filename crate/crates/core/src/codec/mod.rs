//! Enumerative (Schalkwijk) constant-weight coding.
//!
//! A `k`-bit message is read as the integer `B = Σ b_t 2^t` and mapped to the
//! `B`-th length-`L` binary word of Hamming weight `α` in colexicographic
//! order. The inverse sums `C(t, ℓ)` over the positions `t` of the ones,
//! where `ℓ` counts ones seen so far (1-based).

mod limbs;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use self::limbs::Limbs;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("message has {actual} bits but the code carries {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("message index exceeds the code capacity C({len}, {alpha})")]
    CapacityExceeded { len: usize, alpha: usize },
    #[error("codeword has weight {actual}, expected {expected}")]
    MalformedCodeword { expected: usize, actual: usize },
    #[error("codeword has length {actual}, expected {expected}")]
    CodewordLength { expected: usize, actual: usize },
    #[error("integer does not fit in {k} bits")]
    OutOfRange { k: usize },
    #[error("codeword length for k={k}, alpha={alpha} exceeds the addressable range")]
    LengthOverflow { k: usize, alpha: usize },
}

/// Binomial coefficient `C(n, r)`, zero when `r > n`.
pub fn binomial(n: u64, r: u64) -> BigUint {
    binomial_limbs(n, r).to_biguint()
}

/// Running product `C(n-r+i, i) = C(n-r+i-1, i-1)·(n-r+i)/i`. Every partial
/// product is itself a binomial, so a batch of consecutive factors can be
/// folded into one word-sized numerator and denominator and divided exactly.
fn binomial_limbs(n: u64, r: u64) -> Limbs {
    if r > n {
        return Limbs::zero();
    }
    let r = r.min(n - r);
    let base = n - r;
    let mut acc = Limbs::one();
    scale_exact(&mut acc, (1..=r).map(|i| (base + i, i)));
    acc
}

/// Multiplies by `Π num / Π den`, folding factors into word-sized batches.
/// Every prefix of the product must leave an integer.
fn scale_exact(value: &mut Limbs, factors: impl IntoIterator<Item = (u64, u64)>) {
    let (mut num, mut den) = (1u64, 1u64);
    for (a, b) in factors {
        match (num.checked_mul(a), den.checked_mul(b)) {
            (Some(x), Some(y)) => {
                num = x;
                den = y;
            }
            _ => {
                value.mul_word(num);
                value.div_exact_word(den);
                num = a;
                den = b;
            }
        }
    }
    value.mul_word(num);
    value.div_exact_word(den);
}

/// `2^k` as a big integer.
pub fn pow2(k: usize) -> BigUint {
    BigUint::one() << k
}

/// Code parameters `(k, α, L)` with `C(L, α) ≥ 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeParams {
    k: usize,
    alpha: usize,
    len: usize,
}

#[allow(clippy::len_without_is_empty)]
impl CodeParams {
    pub fn new(k: usize, alpha: usize, len: usize) -> Result<Self, CodecError> {
        if k == 0 {
            return Err(CodecError::InvalidParams("k must be at least 1".into()));
        }
        if alpha == 0 || alpha > len {
            return Err(CodecError::InvalidParams(format!(
                "alpha must satisfy 1 <= alpha <= L (alpha={alpha}, L={len})"
            )));
        }
        if binomial(len as u64, alpha as u64) < pow2(k) {
            return Err(CodecError::InvalidParams(format!(
                "C({len}, {alpha}) < 2^{k}: code cannot carry {k} bits"
            )));
        }
        Ok(Self { k, alpha, len })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Number of distinct codewords, `C(L, α)`.
    pub fn capacity(&self) -> BigUint {
        binomial(self.len as u64, self.alpha as u64)
    }

    /// Largest pruning rate the code tolerates, `1 − α/L`.
    pub fn pruning_tolerance(&self) -> f64 {
        1.0 - self.alpha as f64 / self.len as f64
    }
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(k={}, alpha={}, L={})", self.k, self.alpha, self.len)
    }
}

/// Payload bits `b_0 … b_{k−1}`; bit `t` has weight `2^t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WatermarkMessage {
    bits: Vec<bool>,
}

impl WatermarkMessage {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            bits: vec![false; k],
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    /// Number of positions where the two messages differ; extra bits in the
    /// longer message count as errors.
    pub fn bit_errors(&self, other: &Self) -> usize {
        let common = self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count();
        common + self.bits.len().abs_diff(other.bits.len())
    }
}

impl From<Vec<bool>> for WatermarkMessage {
    fn from(bits: Vec<bool>) -> Self {
        Self::new(bits)
    }
}

/// Binary word `c_0 … c_{L−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    bits: Vec<bool>,
}

impl Codeword {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Positions of the ones, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `B = Σ b_t 2^t`.
pub fn bits_to_int(message: &WatermarkMessage) -> BigUint {
    let mut acc = BigUint::zero();
    for (t, &b) in message.bits.iter().enumerate() {
        if b {
            acc.set_bit(t as u64, true);
        }
    }
    acc
}

/// Inverse of [`bits_to_int`]; `value` must be below `2^k`.
pub fn int_to_bits(value: &BigUint, k: usize) -> Result<WatermarkMessage, CodecError> {
    if value.bits() > k as u64 {
        return Err(CodecError::OutOfRange { k });
    }
    Ok(WatermarkMessage::new(
        (0..k as u64).map(|t| value.bit(t)).collect(),
    ))
}

/// Encodes a message into a weight-`α` codeword.
pub fn encode(message: &WatermarkMessage, params: &CodeParams) -> Result<Codeword, CodecError> {
    if message.len() != params.k {
        return Err(CodecError::LengthMismatch {
            expected: params.k,
            actual: message.len(),
        });
    }
    encode_index(&bits_to_int(message), params)
}

/// Maps an index `0 ≤ B < C(L, α)` to its codeword.
///
/// Scans positions downward and emits a one at position `m` whenever the
/// remaining index reaches `C(m, ℓ)`, then subtracts it and decrements `ℓ`.
/// Each next one-position is located with an `f64` scan of the ratio
/// `C(m, ℓ)/C(n, ℓ)`, stopping slightly early, and then confirmed with exact
/// arithmetic.
pub fn encode_index(index: &BigUint, params: &CodeParams) -> Result<Codeword, CodecError> {
    let len = params.len as u64;
    let mut ones = params.alpha as u64;
    // current = C(n, ones)
    let mut n = len - 1;
    let mut current = binomial_limbs(n, ones);
    let capacity = if len == ones {
        Limbs::one()
    } else {
        // C(L, α) = C(L−1, α)·L/(L−α)
        let mut c = current.clone();
        c.mul_word(len);
        c.div_exact_word(len - ones);
        c
    };
    let mut rest = Limbs::from_biguint(index);
    if rest >= capacity {
        return Err(CodecError::CapacityExceeded {
            len: params.len,
            alpha: params.alpha,
        });
    }

    let mut bits = vec![false; params.len];
    while ones > 0 {
        let m = if rest.is_zero() {
            // the remaining ones fill the lowest positions
            ones - 1
        } else {
            next_one_estimate(&rest, &current, n, ones)
        };
        if m < n {
            let walk_cost = (n - m).div_ceil(4);
            let fresh_cost = ones.min(m.saturating_sub(ones)).div_ceil(8);
            if fresh_cost < walk_cost {
                current = binomial_limbs(m, ones);
            } else {
                scale_exact(&mut current, (m + 1..=n).rev().map(|i| (i - ones, i)));
            }
            n = m;
        }
        // the estimate never lands below the true position; step down if above
        while rest < current {
            current.mul_word(n - ones);
            current.div_exact_word(n);
            n -= 1;
        }
        bits[n as usize] = true;
        rest.sub_assign(&current);
        if n == 0 {
            ones -= 1;
            break;
        }
        // C(n−1, ℓ−1) = C(n, ℓ)·ℓ/n
        current.mul_word(ones);
        current.div_exact_word(n);
        ones -= 1;
        n -= 1;
    }
    debug_assert!(rest.is_zero() && ones == 0);
    Ok(Codeword::new(bits))
}

/// Largest `m ≤ n` whose ratio `C(m, ℓ)/C(n, ℓ)` is at most
/// `(1 + 1e−9)·rest/C(n, ℓ)`, scanned in `f64`. The slack dominates the
/// accumulated rounding error, so the result is never below the exact
/// next one-position.
fn next_one_estimate(rest: &Limbs, current: &Limbs, n: u64, ones: u64) -> u64 {
    const RESCALE: i32 = 512;
    let (rm, re) = rest.to_f64_parts();
    let (cm, ce) = current.to_f64_parts();
    let target_mant = rm / cm * (1.0 + 1e-9);
    let target_exp = re - ce;
    // ratio = r·2^scale
    let mut r = 1.0f64;
    let mut scale = 0i64;
    let threshold =
        |scale: i64| target_mant * 2f64.powi((target_exp - scale).clamp(-2000, 2000) as i32);
    let mut t = threshold(scale);
    let mut j = n;
    while r > t {
        // C(j−1, ℓ) = C(j, ℓ)·(j−ℓ)/j; reaches zero at j = ℓ
        r *= (j - ones) as f64 / j as f64;
        j -= 1;
        if r < f64::MIN_POSITIVE * 2f64.powi(RESCALE) && r > 0.0 {
            r *= 2f64.powi(RESCALE);
            scale -= i64::from(RESCALE);
            t = threshold(scale);
        }
    }
    j
}

/// Recovers the colexicographic index of a weight-`α` codeword.
pub fn codeword_index(codeword: &Codeword, params: &CodeParams) -> Result<BigUint, CodecError> {
    if codeword.len() != params.len {
        return Err(CodecError::CodewordLength {
            expected: params.len,
            actual: codeword.len(),
        });
    }
    let weight = codeword.weight();
    if weight != params.alpha {
        return Err(CodecError::MalformedCodeword {
            expected: params.alpha,
            actual: weight,
        });
    }
    let mut acc = Limbs::zero();
    // C(t_prev, ℓ−1) of the previous one, reused when the gap is short
    let mut prev: Option<(u64, Limbs)> = None;
    for (i, t) in codeword.support().enumerate() {
        let (t, ell) = (t as u64, i as u64 + 1);
        let term = match prev.take() {
            Some((pt, mut value)) if pt >= ell && t - pt < ell => {
                // C(pt, ℓ) = C(pt, ℓ−1)(pt−ℓ+1)/ℓ, then C(m+1, ℓ) = C(m, ℓ)(m+1)/(m+1−ℓ)
                let factors = std::iter::once((pt - ell + 1, ell))
                    .chain((pt..t).map(|m| (m + 1, m + 1 - ell)));
                scale_exact(&mut value, factors);
                value
            }
            _ => binomial_limbs(t, ell),
        };
        acc.add_assign(&term);
        prev = Some((t, term));
    }
    Ok(acc.to_biguint())
}

/// Decodes a codeword back to the `k`-bit message.
pub fn decode(codeword: &Codeword, params: &CodeParams) -> Result<WatermarkMessage, CodecError> {
    int_to_bits(&codeword_index(codeword, params)?, params.k)
}

/// How [`find_params_with`] picks the codeword length for `(k, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthRule {
    /// Smallest `L` with `(L−α)^α / α! ≥ 2^k`. Since
    /// `C(L, α) > (L−α)^α / α!`, the capacity condition always holds; this
    /// is the rule behind the commonly quoted `(k, α, L)` parameter tables,
    /// which overshoot the tight length by a few percent.
    #[default]
    ProductBound,
    /// Smallest `L` with `C(L, α) ≥ 2^k`.
    Minimal,
}

impl LengthRule {
    fn accepts(self, len: u64, alpha: u64, target: &BigUint, alpha_factorial: &BigUint) -> bool {
        match self {
            LengthRule::Minimal => binomial(len, alpha) >= *target,
            LengthRule::ProductBound => {
                len > alpha
                    && num_traits::pow(BigUint::from(len - alpha), alpha as usize)
                        >= target * alpha_factorial
            }
        }
    }
}

impl std::str::FromStr for LengthRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "product-bound" => Ok(Self::ProductBound),
            "minimal" => Ok(Self::Minimal),
            other => Err(format!(
                "unknown length rule '{other}' (expected product-bound or minimal)"
            )),
        }
    }
}

/// Outcome of the length search for `(k, α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamReport {
    pub k: usize,
    pub alpha: usize,
    pub len: usize,
    pub rule: LengthRule,
    /// `1 − α/L`.
    pub tolerance: f64,
    /// `floor(log2 C(L, α))`: whole bits the code could carry.
    pub capacity_bits: u64,
    /// Whether `C(L, α) < 2^{k+1}` also holds.
    pub upper_bound_holds: bool,
}

impl ParamReport {
    pub fn params(&self) -> CodeParams {
        CodeParams {
            k: self.k,
            alpha: self.alpha,
            len: self.len,
        }
    }
}

/// [`find_params_with`] under the default [`LengthRule::ProductBound`].
pub fn find_params(k: usize, alpha: usize) -> Result<ParamReport, CodecError> {
    find_params_with(k, alpha, LengthRule::default())
}

/// Smallest `L` accepted by `rule`, found by doubling then bisection.
/// Both rules are monotone in `L`.
pub fn find_params_with(
    k: usize,
    alpha: usize,
    rule: LengthRule,
) -> Result<ParamReport, CodecError> {
    if k == 0 || alpha == 0 {
        return Err(CodecError::InvalidParams(
            "k and alpha must both be at least 1".into(),
        ));
    }
    let target = pow2(k);
    let a = alpha as u64;
    let alpha_factorial = (1..=a).fold(BigUint::one(), |acc, i| acc * i);
    let fits = |len: u64| rule.accepts(len, a, &target, &alpha_factorial);

    // neither rule accepts L = α (C(α, α) = 1 < 2^k)
    let mut lo = a;
    let mut hi = a;
    while !fits(hi) {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .filter(|&h| h <= usize::MAX as u64)
            .ok_or(CodecError::LengthOverflow { k, alpha })?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let len = hi as usize;
    let capacity = binomial(hi, a);
    Ok(ParamReport {
        k,
        alpha,
        len,
        rule,
        tolerance: 1.0 - alpha as f64 / len as f64,
        capacity_bits: capacity.bits() - 1,
        upper_bound_holds: capacity < pow2(k + 1),
    })
}

/// Largest `α` whose code still tolerates pruning rate `tolerance`,
/// scanning `α = 1, 2, …` until the tolerance drops below the target.
pub fn find_params_for_tolerance(
    k: usize,
    tolerance: f64,
    rule: LengthRule,
) -> Result<ParamReport, CodecError> {
    if !(0.0..1.0).contains(&tolerance) {
        return Err(CodecError::InvalidParams(format!(
            "target tolerance {tolerance} outside [0, 1)"
        )));
    }
    let mut best = None;
    for alpha in 1..=k {
        let report = match find_params_with(k, alpha, rule) {
            Ok(r) => r,
            // L beyond usize: tolerance is effectively 1, keep scanning
            Err(CodecError::LengthOverflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        if report.tolerance < tolerance {
            break;
        }
        best = Some(report);
    }
    best.ok_or_else(|| {
        CodecError::InvalidParams(format!("no alpha reaches tolerance {tolerance} for k={k}"))
    })
}

/// `log2` of a big integer, for reporting.
pub fn approx_log2(value: &BigUint) -> f64 {
    let bits = value.bits();
    if bits <= 53 {
        return value.to_f64().map_or(0.0, f64::log2);
    }
    let shifted = (value >> (bits - 53)).to_f64().unwrap_or(1.0);
    shifted.log2() + (bits - 53) as f64
}
