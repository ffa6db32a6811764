//! Two's-complement words with an explicit bit width.
//!
//! Values are integers in units of one input LSB. Arithmetic wraps modulo
//! `2^width` and never saturates; truncation floors (arithmetic shift right).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_WIDTH: u32 = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedWord {
    value: i64,
    width: u32,
}

fn check_width(width: u32) -> Result<()> {
    if (1..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(Error::WidthOutOfRange(width))
    }
}

/// Reduce `v` modulo `2^width` into `[-2^(width-1), 2^(width-1))`.
pub(crate) fn wrap_to_width(v: i128, width: u32) -> i64 {
    let modulus = 1i128 << width;
    let half = modulus >> 1;
    let r = v.rem_euclid(modulus);
    (if r >= half { r - modulus } else { r }) as i64
}

impl FixedWord {
    pub fn from_integer(v: i64, width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(Self {
            value: wrap_to_width(v as i128, width),
            width,
        })
    }

    pub fn zero(width: u32) -> Result<Self> {
        Self::from_integer(0, width)
    }

    /// Largest and smallest representable values for `width`.
    pub fn range(width: u32) -> Result<(i64, i64)> {
        check_width(width)?;
        let half = 1i128 << (width - 1);
        Ok(((-half) as i64, (half - 1) as i64))
    }

    pub fn value(&self) -> i64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Low `width` bits as an unsigned pattern.
    pub fn bits(&self) -> u64 {
        if self.width == 64 {
            self.value as u64
        } else {
            (self.value as u64) & ((1u64 << self.width) - 1)
        }
    }

    pub fn from_bits(bits: u64, width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(Self {
            value: wrap_to_width(bits as i128, width),
            width,
        })
    }

    fn same_width(&self, other: &Self) -> Result<()> {
        if self.width == other.width {
            Ok(())
        } else {
            Err(Error::WidthMismatch {
                left: self.width,
                right: other.width,
            })
        }
    }

    pub fn wrap_add(self, rhs: Self) -> Result<Self> {
        self.same_width(&rhs)?;
        Ok(Self {
            value: wrap_to_width(self.value as i128 + rhs.value as i128, self.width),
            width: self.width,
        })
    }

    pub fn wrap_sub(self, rhs: Self) -> Result<Self> {
        self.same_width(&rhs)?;
        Ok(Self {
            value: wrap_to_width(self.value as i128 - rhs.value as i128, self.width),
            width: self.width,
        })
    }

    /// Drop `discard` LSBs, returning the narrower word and the discarded
    /// remainder in `[0, 2^discard)`.
    pub fn truncate_lsb_with_remainder(self, discard: u32) -> Result<(Self, u64)> {
        if discard >= self.width {
            return Err(Error::TruncateTooWide {
                discard,
                width: self.width,
            });
        }
        let remainder = if discard == 0 {
            0
        } else {
            (self.value as u64) & ((1u64 << discard) - 1)
        };
        Ok((
            Self {
                value: self.value >> discard,
                width: self.width - discard,
            },
            remainder,
        ))
    }

    pub fn truncate_lsb(self, discard: u32) -> Result<Self> {
        self.truncate_lsb_with_remainder(discard).map(|(w, _)| w)
    }

    /// Sign-extend when widening, keep the low bits when narrowing.
    pub fn resize(self, new_width: u32) -> Result<Self> {
        check_width(new_width)?;
        Ok(Self {
            value: wrap_to_width(self.value as i128, new_width),
            width: new_width,
        })
    }
}

impl fmt::Debug for FixedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}b", self.value, self.width)
    }
}

impl fmt::Display for FixedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0w$b}", self.bits(), w = self.width as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(v: i64, width: u32) -> FixedWord {
        FixedWord::from_integer(v, width).unwrap()
    }

    #[test]
    fn from_integer_examples() {
        assert_eq!(w(5, 4).to_string(), "0101");
        assert_eq!(w(5, 4).value(), 5);
        assert_eq!(w(-1, 4).to_string(), "1111");
        assert_eq!(w(-1, 4).value(), -1);
        assert_eq!(w(1 << 20, 25).value(), 1 << 20);
        assert_eq!(w(8, 4).value(), -8);
        assert_eq!(FixedWord::from_integer(1, 0), Err(Error::WidthOutOfRange(0)));
        assert_eq!(FixedWord::from_integer(1, 65), Err(Error::WidthOutOfRange(65)));
        assert_eq!(w(i64::MIN, 64).value(), i64::MIN);
    }

    #[test]
    fn wrap_add_examples() {
        assert_eq!(w(7, 4).wrap_add(w(1, 4)).unwrap().value(), -8);
        assert_eq!(w(-8, 4).wrap_add(w(-8, 4)).unwrap().value(), 0);
        let sum = (0..16).try_fold(w(0, 4), |acc, _| acc.wrap_add(w(1, 4))).unwrap();
        assert_eq!(sum.value(), 0);
        assert_eq!(
            w(1, 4).wrap_add(w(1, 5)),
            Err(Error::WidthMismatch { left: 4, right: 5 })
        );
    }

    #[test]
    fn wrap_sub_examples() {
        assert_eq!(w(5, 4).wrap_sub(w(3, 4)).unwrap().value(), 2);
        let d = w(0, 4).wrap_sub(w(1, 4)).unwrap();
        assert_eq!((d.value(), d.to_string().as_str()), (-1, "1111"));
        assert_eq!(w(-8, 4).wrap_sub(w(1, 4)).unwrap().value(), 7);
        assert!(w(0, 3).wrap_sub(w(0, 4)).is_err());
    }

    #[test]
    fn truncate_examples() {
        let a = FixedWord::from_bits(0b0101101, 7).unwrap();
        let (t, r) = a.truncate_lsb_with_remainder(3).unwrap();
        assert_eq!(t.width(), 4);
        assert_eq!(t.bits(), 0b0101);
        assert_eq!(r, 0b101);
        let (same, r0) = a.truncate_lsb_with_remainder(0).unwrap();
        assert_eq!((same, r0), (a, 0));
        assert_eq!(
            a.truncate_lsb(7),
            Err(Error::TruncateTooWide { discard: 7, width: 7 })
        );
        // floor, not round-toward-zero
        assert_eq!(w(-1, 8).truncate_lsb(2).unwrap().value(), -1);
        assert_eq!(w(-5, 8).truncate_lsb(1).unwrap().value(), -3);
    }

    #[test]
    fn truncation_mean_discard_near_half_quantum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let total: u64 = (0..n)
            .map(|_| {
                let v = rng.gen_range(-(1 << 15)..(1 << 15));
                w(v, 16).truncate_lsb_with_remainder(3).unwrap().1
            })
            .sum();
        let mean = total as f64 / n as f64;
        // integer inputs give (E-1)/2 = 3.5; the continuous model gives E/2 = 4
        assert!((mean - 3.5).abs() < 0.05, "mean {mean}");
        assert!((mean - 4.0).abs() <= 0.5 + 0.05);
    }

    #[test]
    fn resize_examples() {
        let r = w(-3, 5).resize(25).unwrap();
        assert_eq!((r.value(), r.width()), (-3, 25));
        assert_eq!(w(5, 4).resize(4).unwrap(), w(5, 4));
        let n = w(-6, 4).resize(3).unwrap();
        assert_eq!((n.to_string().as_str(), n.value()), ("010", 2));
        assert!(w(0, 4).resize(0).is_err());
    }

    #[test]
    fn exhaustive_wrap_add_matches_modular_sum() {
        for width in 1..=8u32 {
            let (lo, hi) = FixedWord::range(width).unwrap();
            let m = 1i64 << width;
            for a in lo..=hi {
                for b in lo..=hi {
                    let s = w(a, width).wrap_add(w(b, width)).unwrap().value();
                    assert_eq!((s - (a + b)).rem_euclid(m), 0);
                    assert!(s >= lo && s <= hi);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn truncate_reconstructs(v in any::<i64>(), width in 2u32..=64, b in 0u32..63) {
            prop_assume!(b < width);
            let a = w(v, width);
            let (t, r) = a.truncate_lsb_with_remainder(b).unwrap();
            prop_assert!(r < (1u128 << b) as u64 || b == 0 && r == 0);
            let rebuilt = ((t.value() as i128) << b) + r as i128;
            prop_assert_eq!(rebuilt, a.value() as i128);
        }

        #[test]
        fn widening_is_lossless(v in any::<i64>(), width in 1u32..=64, extra in 0u32..=63) {
            let a = w(v, width);
            let wide = (width + extra).min(64);
            prop_assert_eq!(a.resize(wide).unwrap().resize(width).unwrap(), a);
            prop_assert_eq!(a.resize(wide).unwrap().value(), a.value());
        }
    }
}
