use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_SNR_LEN: usize = 2048;

/// Bins either side of the tone counted as signal.
pub const SIGNAL_HALF_WIDTH: usize = 3;

const DC_BINS: usize = 3;

// 4-term Blackman-Harris, periodic form
const BH4: [f64; 4] = [0.35875, 0.48829, 0.14128, 0.01168];

/// In-band SNR of a tone in dB.
///
/// The stream is windowed with a 4-term Blackman-Harris window. Signal
/// power is the energy in the bins within three of the tone; noise is every
/// other bin up to `band`, excluding the bins next to DC. For a tone on an
/// exact bin the window confines all of its energy to the signal bins.
pub fn measure_snr<T: Real>(signal: &[T], signal_freq: f64, rate: f64, band: f64) -> Result<f64> {
    let n = signal.len();
    if n < MIN_SNR_LEN {
        return Err(Error::StreamTooShort {
            len: n,
            min: MIN_SNR_LEN,
        });
    }
    if !(rate > 0.0 && band > 0.0 && band <= rate / 2.0) {
        return Err(Error::InvalidMeasurement(format!("band {band} Hz at rate {rate} Hz")));
    }
    if !(signal_freq > 0.0 && signal_freq < band) {
        return Err(Error::InvalidMeasurement(format!(
            "tone {signal_freq} Hz outside (0, {band}) Hz"
        )));
    }
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut buf: Vec<Complex<T>> = signal
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let a = step * i as f64;
            let w = BH4[0] - BH4[1] * a.cos() + BH4[2] * (2.0 * a).cos() - BH4[3] * (3.0 * a).cos();
            Complex::new(x * T::of(w), T::zero())
        })
        .collect();
    FftPlanner::<T>::new().plan_fft_forward(n).process(&mut buf);
    let bin_hz = rate / n as f64;
    let tone_bin = (signal_freq / bin_hz).round() as usize;
    let last = ((band / bin_hz).floor() as usize).min(n / 2);
    let lo = tone_bin.saturating_sub(SIGNAL_HALF_WIDTH);
    let hi = tone_bin + SIGNAL_HALF_WIDTH;
    let (mut sig, mut noise) = (0.0, 0.0);
    for (k, c) in buf.iter().enumerate().take(last + 1) {
        let p = c.norm_sqr().as_f64();
        if (lo..=hi).contains(&k) {
            sig += p;
        } else if k > DC_BINS {
            noise += p;
        }
    }
    if sig <= 0.0 {
        return Err(Error::InvalidMeasurement("no signal energy".into()));
    }
    if noise <= 0.0 {
        return Ok(-super::NULL_FLOOR_DB);
    }
    Ok(10.0 * (sig / noise).log10())
}
