//! Extended-exponent floating point.
//!
//! Affine recursions with log-centered slopes wander over thousands of
//! binary orders of magnitude within 10^6 steps, far outside the `f64`
//! exponent range. `Wide` keeps an `f64` mantissa together with a separate
//! power-of-two exponent so those states can shrink back without having
//! saturated on the way up.

use std::cmp::Ordering;

/// Mantissas are kept inside [2^-64, 2^64] (or exactly zero).
const RENORM_HI: f64 = 18_446_744_073_709_551_616.0; // 2^64
const RENORM_LO: f64 = 1.0 / 18_446_744_073_709_551_616.0;

#[inline]
fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((1023 + k) as u64) << 52)
}

/// The value `mant * 2^exp`.
#[derive(Debug, Clone, Copy)]
pub struct Wide {
    mant: f64,
    exp: i64,
}

impl Wide {
    pub const ZERO: Wide = Wide { mant: 0.0, exp: 0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Wide { mant: x, exp: 0 }.normalized()
    }

    #[inline]
    fn normalized(self) -> Self {
        let a = self.mant.abs();
        if a == 0.0 || !a.is_finite() || (RENORM_LO..=RENORM_HI).contains(&a) {
            return self;
        }
        let biased = ((a.to_bits() >> 52) & 0x7ff) as i64;
        if biased == 0 {
            // subnormal mantissa: lift it first
            let lifted = self.mant * pow2(600);
            return Wide {
                mant: lifted,
                exp: self.exp - 600,
            }
            .normalized();
        }
        let k = biased - 1023;
        Wide {
            mant: self.mant * pow2(-k),
            exp: self.exp + k,
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.mant.is_finite()
    }

    /// Nearest `f64`, saturating to ±inf or to zero outside its range.
    #[inline]
    pub fn to_f64(self) -> f64 {
        if self.exp == 0 || self.mant == 0.0 || !self.mant.is_finite() {
            return self.mant;
        }
        if self.exp > 1100 {
            return self.mant.signum() * f64::INFINITY;
        }
        if self.exp < -1200 {
            return 0.0 * self.mant.signum();
        }
        // two halves keep the intermediate power of two representable
        let half = self.exp / 2;
        self.mant * pow2(half.clamp(-1022, 1023)) * pow2((self.exp - half).clamp(-1022, 1023))
    }

    /// Natural logarithm of the absolute value.
    pub fn ln_abs(self) -> f64 {
        self.mant.abs().ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    #[inline]
    pub fn abs(self) -> Self {
        Wide {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    #[inline]
    pub fn mul_f64(self, k: f64) -> Self {
        Wide {
            mant: self.mant * k,
            exp: self.exp,
        }
        .normalized()
    }

    #[inline]
    pub fn add(self, other: Wide) -> Self {
        if self.mant == 0.0 {
            return other;
        }
        if other.mant == 0.0 {
            return self;
        }
        let (big, small) = if self.exp >= other.exp {
            (self, other)
        } else {
            (other, self)
        };
        let d = big.exp - small.exp;
        if d > 200 {
            // |small/big| <= 2^(128 - d): below half an ulp
            return big;
        }
        let scaled = if d == 0 {
            small.mant
        } else {
            small.mant * pow2(-d)
        };
        Wide {
            mant: big.mant + scaled,
            exp: big.exp,
        }
        .normalized()
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        if self.exp == 0 {
            return Wide::from_f64(self.mant + b);
        }
        self.add(Wide::from_f64(b))
    }

    #[inline]
    pub fn neg(self) -> Self {
        Wide {
            mant: -self.mant,
            exp: self.exp,
        }
    }

    /// Ordering against a plain `f64` threshold.
    pub fn cmp_f64(self, t: f64) -> Ordering {
        let diff = self.add(Wide::from_f64(-t));
        diff.mant.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }
}

impl PartialEq for Wide {
    fn eq(&self, other: &Self) -> bool {
        self.add(other.neg()).mant == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_ordinary_values() {
        for &x in &[0.0, 1.0, -2.5, 1e-300, 3e300, 0.1, -7.0e-310] {
            assert_eq!(Wide::from_f64(x).to_f64(), x);
        }
    }

    #[test]
    fn survives_excursions_beyond_f64_range() {
        let mut w = Wide::from_f64(1.0);
        for _ in 0..5000 {
            w = w.mul_f64(2.0).add_f64(1.0);
        }
        assert_eq!(w.to_f64(), f64::INFINITY);
        // 2^5001 - 1 after 5000 steps
        assert!((w.ln_abs() - 5001.0 * std::f64::consts::LN_2).abs() < 1e-9);
        for _ in 0..5000 {
            w = w.mul_f64(0.5);
        }
                assert!((w.to_f64() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn comparisons() {
        let big = Wide::from_f64(1e300).mul_f64(1e300);
        assert_eq!(big.cmp_f64(3.0), Ordering::Greater);
        assert_eq!(big.neg().cmp_f64(3.0), Ordering::Less);
        assert_eq!(Wide::from_f64(3.0).cmp_f64(3.0), Ordering::Equal);
    }
}
