//! Little-endian `u64` limb arithmetic for the codec's inner loops.
//!
//! Only the handful of operations the enumerative walk needs: scaling by a
//! word, exact division by a word, comparison and subtraction. Exact division
//! multiplies by the 2-adic inverse of the odd part of the divisor, so no
//! hardware divide runs per limb.

use std::cmp::Ordering;

use num_bigint::BigUint;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Limbs(Vec<u64>);

impl Limbs {
    pub(crate) fn zero() -> Self {
        Self(Vec::new())
    }

    pub(crate) fn one() -> Self {
        Self(vec![1])
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn normalize(&mut self) {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
    }

    pub(crate) fn mul_word(&mut self, w: u64) {
        if w == 0 {
            self.0.clear();
            return;
        }
        let mut carry = 0u64;
        for limb in &mut self.0 {
            let t = u128::from(*limb) * u128::from(w) + u128::from(carry);
            *limb = t as u64;
            carry = (t >> 64) as u64;
        }
        if carry != 0 {
            self.0.push(carry);
        }
    }

    /// `self /= d`, where `d` is known to divide `self` exactly.
    pub(crate) fn div_exact_word(&mut self, d: u64) {
        debug_assert!(d != 0);
        let shift = d.trailing_zeros();
        if shift > 0 {
            self.shr_small(shift);
        }
        let odd = d >> shift;
        if odd == 1 {
            return;
        }
        let inv = inverse_mod_word(odd);
        let mut borrow = 0u64;
        for limb in &mut self.0 {
            let (x, b) = limb.overflowing_sub(borrow);
            let q = x.wrapping_mul(inv);
            *limb = q;
            borrow = ((u128::from(q) * u128::from(odd)) >> 64) as u64 + u64::from(b);
        }
        debug_assert_eq!(borrow, 0, "division was not exact");
        self.normalize();
    }

    fn shr_small(&mut self, shift: u32) {
        debug_assert!(shift > 0 && shift < 64);
        let len = self.0.len();
        for i in 0..len {
            let hi = if i + 1 < len {
                self.0[i + 1] << (64 - shift)
            } else {
                0
            };
            self.0[i] = (self.0[i] >> shift) | hi;
        }
        self.normalize();
    }

    /// `self -= other`; requires `self ≥ other`.
    pub(crate) fn sub_assign(&mut self, other: &Self) {
        debug_assert!(Ord::cmp(&*self, other) != Ordering::Less);
        let mut borrow = false;
        for (i, limb) in self.0.iter_mut().enumerate() {
            let rhs = other.0.get(i).copied().unwrap_or(0);
            if i >= other.0.len() && !borrow {
                break;
            }
            let (a, b1) = limb.overflowing_sub(rhs);
            let (a, b2) = a.overflowing_sub(u64::from(borrow));
            *limb = a;
            borrow = b1 || b2;
        }
        self.normalize();
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        let mut carry = false;
        for (i, limb) in self.0.iter_mut().enumerate() {
            let rhs = other.0.get(i).copied().unwrap_or(0);
            if i >= other.0.len() && !carry {
                break;
            }
            let (a, c1) = limb.overflowing_add(rhs);
            let (a, c2) = a.overflowing_add(u64::from(carry));
            *limb = a;
            carry = c1 || c2;
        }
        if carry {
            self.0.push(1);
        }
    }

    /// `(m, e)` with `self ≈ m·2^e`, relative error below 2^-52.
    pub(crate) fn to_f64_parts(&self) -> (f64, i64) {
        let len = self.0.len();
        match len {
            0 => (0.0, 0),
            1 => (self.0[0] as f64, 0),
            _ => {
                let hi = self.0[len - 1] as f64;
                let lo = self.0[len - 2] as f64;
                (hi + lo * 2f64.powi(-64), 64 * (len as i64 - 1))
            }
        }
    }

    pub(crate) fn to_biguint(&self) -> BigUint {
        let words: Vec<u32> = self
            .0
            .iter()
            .flat_map(|&w| [w as u32, (w >> 32) as u32])
            .collect();
        BigUint::new(words)
    }

    pub(crate) fn from_biguint(value: &BigUint) -> Self {
        let mut limbs = Self(value.to_u64_digits());
        limbs.normalize();
        limbs
    }
}

impl PartialOrd for Limbs {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Limbs {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

/// Inverse of an odd word modulo 2^64 by Newton iteration.
fn inverse_mod_word(odd: u64) -> u64 {
    debug_assert!(odd & 1 == 1);
    // correct to 3 bits; each step doubles the precision
    let mut inv = odd;
    for _ in 0..5 {
        inv = inv.wrapping_mul(2u64.wrapping_sub(odd.wrapping_mul(inv)));
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn inverse_is_inverse() {
        for d in [1u64, 3, 5, 12345, u64::MAX, 0xd_eadb_eef1] {
            assert_eq!(d.wrapping_mul(inverse_mod_word(d)), 1);
        }
    }

    #[test]
    fn exact_division_matches_biguint() {
        let mut x = BigUint::one();
        for f in 2u64..60 {
            x *= f * 1_000_003;
        }
        for d in [2u64, 6, 7 * 1_000_003, 1 << 40, 59 * 58 * 57 * 1_000_003] {
            let mut limbs = Limbs::from_biguint(&x);
            limbs.div_exact_word(d);
            assert_eq!(limbs.to_biguint(), &x / d);
        }
    }

    #[test]
    fn float_parts() {
        let x = BigUint::from(3u32) << 200u32;
        let (m, e) = Limbs::from_biguint(&x).to_f64_parts();
        assert_eq!(m * 2f64.powi(e as i32), 3.0 * 2f64.powi(200));
        assert_eq!(
            Limbs::from_biguint(&BigUint::from(7u32)).to_f64_parts(),
            (7.0, 0)
        );
        assert_eq!(Limbs::zero().to_f64_parts(), (0.0, 0));
    }

    #[test]
    fn add_sub_roundtrip() {
        let a = Limbs::from_biguint(&(BigUint::one() << 200u32));
        let b = Limbs::from_biguint(&BigUint::from(u64::MAX));
        let mut c = a.clone();
        c.add_assign(&b);
        assert!(c > a);
        c.sub_assign(&b);
        assert_eq!(c, a);
        c.sub_assign(&a);
        assert!(c.is_zero());
    }
}
