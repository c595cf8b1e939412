//! Outward-rounded `f64` intervals, used where values are transcendental
//! (logarithms in entropy sums).

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

const LN_REL_ERR: f64 = 8.0 * f64::EPSILON;

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "{lo} > {hi}");
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn widen(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn add(self, o: Interval) -> Self {
        Self::widen(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(self, o: Interval) -> Self {
        Self::widen(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn mul(self, o: Interval) -> Self {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::widen(lo, hi)
    }

    /// Division by a positive interval.
    pub fn div(self, o: Interval) -> Self {
        assert!(o.lo > 0.0, "division by interval containing zero");
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::widen(lo, hi)
    }

    pub fn scale(self, k: f64) -> Self {
        self.mul(Interval::point(k))
    }

    pub fn min(self, o: Interval) -> Self {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Certainly `self < o`.
    pub fn certainly_lt(&self, o: &Interval) -> bool {
        self.hi < o.lo
    }

    /// Not certainly `self > o` (i.e. `self ≤ o` is consistent with the data).
    pub fn possibly_le(&self, o: &Interval) -> bool {
        self.lo <= o.hi
    }

    /// Enclosure of `ln(x)` for a positive integer.
    pub fn ln_big(x: &BigUint) -> Self {
        assert!(!x.is_zero(), "ln(0)");
        let (approx, shift) = split_mantissa(x);
        let v = approx.ln() + shift as f64 * std::f64::consts::LN_2;
        let err = LN_REL_ERR * (approx.ln().abs() + shift as f64 * std::f64::consts::LN_2 + 1.0);
        Self::widen(v - err, v + err)
    }

    /// Enclosure of `ln(num / den)`.
    pub fn ln_ratio(num: &BigUint, den: &BigUint) -> Self {
        Self::ln_big(num).sub(Self::ln_big(den))
    }

    /// Enclosure of the rational `num / den`.
    pub fn ratio(num: &BigUint, den: &BigUint) -> Self {
        let (a, sa) = split_mantissa(num);
        let (b, sb) = split_mantissa(den);
        let v = a / b * 2f64.powi((sa - sb) as i32);
        let err = v * 4.0 * f64::EPSILON;
        Self::widen(v - err, v + err)
    }
}

/// `x ≈ m * 2^shift` with `m` carrying the top 64 bits.
fn split_mantissa(x: &BigUint) -> (f64, i64) {
    let bits = x.bits() as i64;
    if bits <= 64 {
        (x.to_u64().expect("fits") as f64, 0)
    } else {
        let shift = bits - 64;
        let top: BigUint = x >> (shift as usize);
        (top.to_u64().expect("fits") as f64, shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_encloses_known_values() {
        let i = Interval::ln_big(&BigUint::from(4u32));
        assert!(i.contains(4f64.ln()));
        assert!(i.width() < 1e-13);
        let big = BigUint::from(3u32).pow(500);
        let i = Interval::ln_big(&big);
        assert!(i.contains(500.0 * 3f64.ln()));
        let r = Interval::ln_ratio(&BigUint::from(1u32), &BigUint::from(4u32));
        assert!(r.contains(-(4f64.ln())));
    }

    #[test]
    fn arithmetic_is_outward() {
        let a = Interval::point(0.1).add(Interval::point(0.2));
        assert!(a.lo < 0.1 + 0.2 && a.hi > 0.1 + 0.2);
        let m = Interval::new(-1.0, 2.0).mul(Interval::new(3.0, 4.0));
        assert!(m.lo <= -4.0 && m.hi >= 8.0);
    }
}
