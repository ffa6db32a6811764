//! Behavioral sigma-delta modulators and the textbook quantization-noise
//! formulas.
//!
//! The loop is a chain of unity-coefficient integrators, each fed back from
//! the previous quantizer output:
//!
//! ```text
//! u1[n] = u1[n-1] + x[n-1] - y[n-1]
//! uk[n] = uk[n-1] + u(k-1)[n] - y[n-1]     k = 2..L
//! y[n]  = Q(uL[n])
//! ```
//!
//! which gives `Y(z) = z^-1 X(z) + (1 - z^-1)^L E(z)` with `e = y - uL`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integrator magnitude, in units of full scale, treated as divergence.
pub const INSTABILITY_LIMIT: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdmConfig {
    pub order: usize,
    pub quantizer_bits: u32,
    pub full_scale: f64,
    pub sample_rate: f64,
}

impl SdmConfig {
    pub fn new(order: usize, quantizer_bits: u32, full_scale: f64, sample_rate: f64) -> Result<Self> {
        let cfg = Self {
            order,
            quantizer_bits,
            full_scale,
            sample_rate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.order) {
            return Err(Error::InvalidSdm(format!("order {} not in 1..=3", self.order)));
        }
        if !(1..=8).contains(&self.quantizer_bits) {
            return Err(Error::InvalidSdm(format!(
                "quantizer bits {} not in 1..=8",
                self.quantizer_bits
            )));
        }
        if !(self.full_scale.is_finite() && self.full_scale > 0.0) {
            return Err(Error::InvalidSdm("full scale must be positive".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidRate(format!("{} Hz", self.sample_rate)));
        }
        Ok(())
    }

    /// Quantizer step. A 1-bit quantizer has the two levels ±full_scale.
    pub fn step(&self) -> f64 {
        2.0 * self.full_scale / ((1u32 << self.quantizer_bits) - 1) as f64
    }

    /// Largest code magnitude.
    pub fn max_code(&self) -> i32 {
        if self.quantizer_bits == 1 {
            1
        } else {
            (1 << (self.quantizer_bits - 1)) - 1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantized<T> {
    pub code: i32,
    pub value: T,
    pub error: T,
    pub clipped: bool,
}

/// Uniform quantizer. Multi-bit quantizers are midtread with codes
/// `-(2^(B-1) - 1) ..= 2^(B-1) - 1`; the 1-bit case is a sign decision.
pub fn quantize<T: Real>(v: T, cfg: &SdmConfig) -> Quantized<T> {
    let fs = T::of(cfg.full_scale);
    if cfg.quantizer_bits == 1 {
        let code = if v >= T::zero() { 1 } else { -1 };
        let value = if code > 0 { fs } else { -fs };
        return Quantized {
            code,
            value,
            error: value - v,
            clipped: v.abs() > fs,
        };
    }
    let step = T::of(cfg.step());
    let kmax = cfg.max_code();
    let raw = (v / step).round();
    let code = if raw > T::of(kmax as f64) {
        kmax + 1
    } else if raw < T::of(-kmax as f64) {
        -kmax - 1
    } else {
        raw.to_i32().expect("bounded code")
    };
    let clipped = code.abs() > kmax;
    let code = code.clamp(-kmax, kmax);
    let value = T::of(code as f64) * step;
    Quantized {
        code,
        value,
        error: value - v,
        clipped,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdmState<T> {
    pub integrators: Vec<T>,
    pub last_feedback: T,
    pub last_input: T,
    pub samples: usize,
}

impl<T: Real> SdmState<T> {
    pub fn new(cfg: &SdmConfig) -> Self {
        Self {
            integrators: vec![T::zero(); cfg.order],
            last_feedback: T::zero(),
            last_input: T::zero(),
            samples: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdmRun<T> {
    pub codes: Vec<i32>,
    pub values: Vec<T>,
    pub errors: Vec<T>,
    pub clip_count: usize,
}

/// Run the modulator over `input`, continuing from `state`.
pub fn run_sdm<T: Real>(cfg: &SdmConfig, state: &mut SdmState<T>, input: &[T]) -> Result<SdmRun<T>> {
    cfg.validate()?;
    let limit = T::of(INSTABILITY_LIMIT * cfg.full_scale);
    let mut run = SdmRun {
        codes: Vec::with_capacity(input.len()),
        values: Vec::with_capacity(input.len()),
        errors: Vec::with_capacity(input.len()),
        clip_count: 0,
    };
    for &x in input {
        let y_prev = state.last_feedback;
        let mut feed = state.last_input;
        for (k, u) in state.integrators.iter_mut().enumerate() {
            *u = *u + feed - y_prev;
            if !(u.abs() <= limit) {
                return Err(Error::Unstable {
                    sample: state.samples,
                    stage: k + 1,
                    magnitude: u.as_f64().abs(),
                });
            }
            feed = *u;
        }
        let q = quantize(feed, cfg);
        run.clip_count += q.clipped as usize;
        run.codes.push(q.code);
        run.values.push(q.value);
        run.errors.push(q.error);
        state.last_feedback = q.value;
        state.last_input = x;
        state.samples += 1;
    }
    Ok(run)
}

/// Ideal B-bit quantizer SNR for a full-scale sine.
pub fn snr_quantizer_db(bits: u32) -> f64 {
    6.02 * bits as f64 + 1.76
}

/// Oversampling ratio `fs / (2 f_B)`.
pub fn osr(sample_rate: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidRate(format!("bandwidth {bandwidth} Hz")));
    }
    if sample_rate < 2.0 * bandwidth {
        return Err(Error::InvalidRate(format!(
            "{sample_rate} Hz is below Nyquist for a {bandwidth} Hz band"
        )));
    }
    Ok(sample_rate / (2.0 * bandwidth))
}

/// White quantization noise left in band after oversampling alone.
pub fn inband_noise_power<T: Real>(e_sq: T, osr: T) -> T {
    e_sq / osr
}

/// One-sided spectral density of white noise of RMS `e_rms` at `sample_rate`.
pub fn noise_density<T: Real>(e_rms: T, sample_rate: T) -> T {
    e_rms * (T::of(2.0) / sample_rate).sqrt()
}
