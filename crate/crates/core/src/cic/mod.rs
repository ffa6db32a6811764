//! Hogenauer CIC filters: sizing, recursive and non-recursive decimators,
//! the interpolator, a cycle-accurate pipelined decimator, and the plain
//! rate-change primitives.
//!
//! Datapath values are integers in units of one input LSB. Every stage of a
//! decimator is a register of known width; with all widths at
//! [`CicConfig::register_width`] the wrapping integrators still produce the
//! exact output because the final result fits the register.

mod decimator;
mod interpolator;
mod nonrecursive;
mod pipelined;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixword::{FixedWord, MAX_WIDTH};

pub use decimator::CicState;
pub use interpolator::interpolate;
pub use nonrecursive::decimate_nonrecursive;
pub use pipelined::{Latency, PipelinedCic};

/// Order, ratio, differential delay and input width of a CIC filter, plus
/// optional per-stage register widths (N integrators, N combs, output).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CicConfig {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub b_in: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_widths: Option<Vec<u32>>,
}

fn ceil_log2(v: u128) -> u32 {
    if v <= 1 {
        0
    } else {
        128 - (v - 1).leading_zeros()
    }
}

impl CicConfig {
    pub fn new(n: usize, r: usize, m: usize, b_in: u32) -> Result<Self> {
        let cfg = Self {
            n,
            r,
            m,
            b_in,
            stage_widths: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stage_widths(mut self, widths: Vec<u32>) -> Result<Self> {
        self.stage_widths = Some(widths);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCic(msg));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.r == 0 {
            return bad("r must be >= 1".into());
        }
        if self.m == 0 {
            return bad("m must be >= 1".into());
        }
        if self.b_in == 0 || self.b_in > MAX_WIDTH {
            return bad(format!("b_in must be in 1..={MAX_WIDTH}"));
        }
        let growth = self.growth().ok_or_else(|| Error::InvalidCic("register growth overflows".into()))?;
        let width = ceil_log2(growth) + self.b_in;
        if width > MAX_WIDTH {
            return bad(format!("register width {width} exceeds {MAX_WIDTH} bits"));
        }
        if let Some(ws) = &self.stage_widths {
            if ws.len() != 2 * self.n + 1 {
                return bad(format!("expected {} stage widths, got {}", 2 * self.n + 1, ws.len()));
            }
            if ws[0] != width {
                return bad(format!("first stage width {} must equal register width {width}", ws[0]));
            }
            if ws.windows(2).any(|p| p[1] > p[0]) {
                return bad("stage widths must be non-increasing".into());
            }
            if ws.iter().any(|&w| w < 2) {
                return bad("stage widths must be at least 2 bits".into());
            }
        }
        Ok(())
    }

    fn growth(&self) -> Option<u128> {
        ((self.r * self.m) as u128).checked_pow(self.n as u32)
    }

    /// Index of the register MSB: `ceil(N·log2(RM) + B_in − 1)`.
    pub fn register_msb_index(&self) -> u32 {
        ceil_log2(self.growth().expect("validated")) + self.b_in - 1
    }

    pub fn register_width(&self) -> u32 {
        self.register_msb_index() + 1
    }

    /// Maximum register growth `(RM)^N` and its value in dB.
    pub fn max_growth(&self) -> (u128, f64) {
        let g = self.growth().expect("validated");
        (g, 20.0 * (g as f64).log10())
    }

    /// Stage widths, defaulting to the full register width everywhere.
    pub fn widths(&self) -> Vec<u32> {
        self.stage_widths
            .clone()
            .unwrap_or_else(|| vec![self.register_width(); 2 * self.n + 1])
    }

    pub fn output_width(&self) -> u32 {
        *self.widths().last().expect("2N+1 widths")
    }

    /// LSBs dropped between the full-precision register and the output.
    pub fn output_shift(&self) -> u32 {
        self.register_width() - self.output_width()
    }

    /// Taps of `(sum_{k<RM} z^-k)^N`.
    pub fn impulse_coefficients(&self) -> Vec<i128> {
        let len = self.r * self.m;
        (0..self.n).fold(vec![1i128], |acc, _| {
            let mut out = vec![0i128; acc.len() + len - 1];
            // running-sum convolution with a length-RM box
            let mut window = 0i128;
            for (i, o) in out.iter_mut().enumerate() {
                if i < acc.len() {
                    window += acc[i];
                }
                if i >= len {
                    window -= acc[i - len];
                }
                *o = window;
            }
            out
        })
    }
}

/// A CIC one order above the modulator suppresses its shaped noise.
pub fn recommend_order(modulator_order: usize) -> Result<usize> {
    if modulator_order == 0 {
        return Err(Error::InvalidSdm("modulator order must be >= 1".into()));
    }
    Ok(modulator_order + 1)
}

/// Keep `x[m·r + phase]`.
pub fn downsample<T: Clone>(input: &[T], r: usize, phase: usize) -> Result<Vec<T>> {
    if r == 0 {
        return Err(Error::ZeroRatio);
    }
    if phase >= r {
        return Err(Error::PhaseOutOfRange { phase, ratio: r });
    }
    Ok(input.iter().skip(phase).step_by(r).cloned().collect())
}

/// Insert `r − 1` copies of `zero` after every sample.
pub fn upsample<T: Clone>(input: &[T], r: usize, zero: T) -> Result<Vec<T>> {
    if r == 0 {
        return Err(Error::ZeroRatio);
    }
    let mut out = Vec::with_capacity(input.len() * r);
    for x in input {
        out.push(x.clone());
        out.extend(std::iter::repeat_n(zero.clone(), r - 1));
    }
    Ok(out)
}

/// Arithmetic a CIC datapath needs from its sample type.
pub trait CicSample: Copy + std::fmt::Debug + PartialEq + Send + Sync {
    fn zero(width: u32) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    /// Move a value into a register of `width` bits.
    fn into_stage(self, width: u32) -> Self;
    fn check_input(&self, b_in: u32) -> Result<()>;
}

impl CicSample for FixedWord {
    fn zero(width: u32) -> Self {
        FixedWord::zero(width).expect("validated width")
    }

    fn add(self, rhs: Self) -> Self {
        self.wrap_add(rhs).expect("stage widths agree")
    }

    fn sub(self, rhs: Self) -> Self {
        self.wrap_sub(rhs).expect("stage widths agree")
    }

    fn into_stage(self, width: u32) -> Self {
        if width < self.width() {
            self.truncate_lsb(self.width() - width).expect("narrower stage")
        } else {
            self.resize(width).expect("validated width")
        }
    }

    fn check_input(&self, b_in: u32) -> Result<()> {
        if self.width() == b_in {
            Ok(())
        } else {
            Err(Error::InputWidth {
                got: self.width(),
                expected: b_in,
            })
        }
    }
}

/// Unbounded reference arithmetic; stage widths are ignored.
impl CicSample for i128 {
    fn zero(_: u32) -> Self {
        0
    }

    fn add(self, rhs: Self) -> Self {
        self + rhs
    }

    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }

    fn into_stage(self, _: u32) -> Self {
        self
    }

    fn check_input(&self, _: u32) -> Result<()> {
        Ok(())
    }
}

/// Convert raw integers to `b_in`-bit input words, rejecting values that
/// do not fit.
pub fn input_words(cfg: &CicConfig, samples: &[i64]) -> Result<Vec<FixedWord>> {
    let (lo, hi) = FixedWord::range(cfg.b_in)?;
    samples
        .iter()
        .map(|&v| {
            if v < lo || v > hi {
                Err(Error::InvalidCic(format!("input {v} does not fit in {} bits", cfg.b_in)))
            } else {
                FixedWord::from_integer(v, cfg.b_in)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_index_examples() {
        let c = CicConfig::new(5, 16, 1, 5).unwrap();
        assert_eq!(c.register_msb_index(), 24);
        assert_eq!(c.register_width(), 25);
        assert_eq!(CicConfig::new(1, 2, 1, 1).unwrap().register_msb_index(), 1);
        assert_eq!(CicConfig::new(1, 2, 1, 1).unwrap().register_width(), 2);
        assert_eq!(CicConfig::new(3, 8, 1, 4).unwrap().register_msb_index(), 12);
        // non-power-of-two growth rounds up
        assert_eq!(CicConfig::new(2, 3, 1, 1).unwrap().register_msb_index(), 4);
    }

    #[test]
    fn growth_examples() {
        let (g, db) = CicConfig::new(5, 16, 1, 5).unwrap().max_growth();
        assert_eq!(g, 1 << 20);
        assert!((db - 120.41).abs() < 0.01);
        assert_eq!(CicConfig::new(1, 7, 2, 4).unwrap().max_growth().0, 14);
        assert_eq!(CicConfig::new(2, 4, 1, 4).unwrap().max_growth().0, 16);
    }

    #[test]
    fn order_rule() {
        assert_eq!(recommend_order(3).unwrap(), 4);
        assert_eq!(recommend_order(1).unwrap(), 2);
        assert_eq!(recommend_order(2).unwrap(), 3);
        assert!(recommend_order(0).is_err());
    }

    #[test]
    fn impulse_examples() {
        assert_eq!(CicConfig::new(1, 4, 1, 4).unwrap().impulse_coefficients(), vec![1, 1, 1, 1]);
        assert_eq!(CicConfig::new(2, 2, 1, 4).unwrap().impulse_coefficients(), vec![1, 2, 1]);
        let h = CicConfig::new(5, 16, 1, 5).unwrap().impulse_coefficients();
        assert_eq!(h.len(), 15 * 5 + 1);
        assert_eq!(h.iter().sum::<i128>(), 1 << 20);
        assert!(h.iter().all(|&c| c > 0));
        assert!(h.iter().eq(h.iter().rev()));
        let h2 = CicConfig::new(3, 3, 2, 4).unwrap().impulse_coefficients();
        assert_eq!(h2.iter().sum::<i128>(), 216);
        assert!(h2.iter().eq(h2.iter().rev()));
    }

    #[test]
    fn config_validation() {
        assert!(CicConfig::new(0, 16, 1, 5).is_err());
        assert!(CicConfig::new(5, 0, 1, 5).is_err());
        assert!(CicConfig::new(5, 16, 0, 5).is_err());
        assert!(CicConfig::new(5, 16, 1, 0).is_err());
        assert!(CicConfig::new(20, 16, 1, 5).is_err());
        let c = CicConfig::new(1, 1, 1, 4).unwrap();
        assert_eq!(c.register_width(), 4);
        let base = CicConfig::new(2, 4, 1, 4).unwrap();
        assert!(base.clone().with_stage_widths(vec![8, 8, 8, 8, 8]).is_ok());
        assert!(base.clone().with_stage_widths(vec![8, 8, 8, 8]).is_err());
        assert!(base.clone().with_stage_widths(vec![7, 7, 7, 7, 7]).is_err());
        assert!(base.clone().with_stage_widths(vec![8, 6, 7, 6, 6]).is_err());
        assert!(base.with_stage_widths(vec![8, 6, 4, 2, 1]).is_err());
    }

    #[test]
    fn downsample_examples() {
        let x: Vec<i32> = (0..8).collect();
        assert_eq!(downsample(&x, 4, 0).unwrap(), vec![0, 4]);
        assert_eq!(downsample(&x, 1, 0).unwrap(), x);
        assert_eq!(downsample(&x, 4, 3).unwrap(), vec![3, 7]);
        assert_eq!(
            downsample(&x, 4, 4),
            Err(Error::PhaseOutOfRange { phase: 4, ratio: 4 })
        );
        assert_eq!(downsample(&x, 0, 0), Err(Error::ZeroRatio));
    }

    #[test]
    fn upsample_examples() {
        assert_eq!(upsample(&[1, 2], 3, 0).unwrap(), vec![1, 0, 0, 2, 0, 0]);
        assert_eq!(upsample(&[5, 6], 1, 0).unwrap(), vec![5, 6]);
        let x = vec![3, -1, 4, 1, -5];
        for r in 1..5 {
            assert_eq!(downsample(&upsample(&x, r, 0).unwrap(), r, 0).unwrap(), x);
        }
    }

    #[test]
    fn input_word_range_checked() {
        let c = CicConfig::new(1, 4, 1, 5).unwrap();
        assert!(input_words(&c, &[-16, 15]).is_ok());
        assert!(input_words(&c, &[16]).is_err());
    }
}
