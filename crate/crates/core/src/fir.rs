//! Linear-phase FIR filters: half-band design, polyphase decimate-by-2,
//! CIC droop compensation and plain direct-form application.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::cic_power_response_normalized;
use crate::cic::CicConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct FirFilter<T> {
    pub taps: Vec<T>,
    pub input_rate: f64,
    pub decimation: usize,
}

impl<T: Real> FirFilter<T> {
    pub fn new(taps: Vec<T>, input_rate: f64, decimation: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InfeasibleFilter("no taps".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InfeasibleFilter("non-finite tap".into()));
        }
        if decimation == 0 {
            return Err(Error::ZeroRatio);
        }
        if !(input_rate.is_finite() && input_rate > 0.0) {
            return Err(Error::InvalidRate(format!("{input_rate} Hz")));
        }
        Ok(Self {
            taps,
            input_rate,
            decimation,
        })
    }

    pub fn output_rate(&self) -> f64 {
        self.input_rate / self.decimation as f64
    }

    pub fn is_symmetric(&self) -> bool {
        self.taps.iter().eq(self.taps.iter().rev())
    }

    /// Odd length, symmetric, centre 0.5 and zeros at every even nonzero
    /// offset from the centre.
    pub fn is_halfband(&self) -> bool {
        let n = self.taps.len();
        if n.is_multiple_of(2) || !self.is_symmetric() {
            return false;
        }
        let c = n / 2;
        self.taps[c] == T::of(0.5)
            && self
                .taps
                .iter()
                .enumerate()
                .all(|(i, &t)| i == c || i.abs_diff(c) % 2 == 1 || t == T::zero())
    }

    /// Complex response at `freq` Hz as (re, im).
    pub fn response_at(&self, freq: f64) -> (f64, f64) {
        let w = 2.0 * std::f64::consts::PI * freq / self.input_rate;
        self.taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, h)| {
            let h = h.as_f64();
            let a = w * k as f64;
            (re + h * a.cos(), im - h * a.sin())
        })
    }

    /// Real zero-phase amplitude of an odd-length symmetric filter.
    pub fn amplitude_at(&self, freq: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / self.input_rate;
        let c = (self.taps.len() / 2) as f64;
        self.taps
            .iter()
            .enumerate()
            .map(|(k, h)| h.as_f64() * (w * (k as f64 - c)).cos())
            .sum()
    }

    pub fn magnitude_at(&self, freq: f64) -> f64 {
        let (re, im) = self.response_at(freq);
        re.hypot(im)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser's empirical beta for a stopband attenuation in dB.
pub fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfBandSpec {
    /// Tap count minus one.
    pub order: usize,
    pub input_rate: f64,
    pub f_pass: f64,
}

impl HalfBandSpec {
    /// Mirror of the passband edge about a quarter of the input rate.
    pub fn f_stop(&self) -> f64 {
        self.input_rate / 2.0 - self.f_pass
    }

    /// Attenuation the Kaiser estimate predicts at this order.
    pub fn expected_attenuation_db(&self) -> f64 {
        let dw = 2.0 * std::f64::consts::PI * (self.f_stop() - self.f_pass) / self.input_rate;
        2.285 * dw * self.order as f64 + 7.95
    }
}

/// Kaiser-windowed half-band lowpass with cutoff at a quarter of the input
/// rate. Zero taps are set exactly, the centre is exactly 0.5 and the
/// remaining taps are rescaled so the DC gain is one.
pub fn design_halfband<T: Real>(spec: &HalfBandSpec) -> Result<FirFilter<T>> {
    if spec.order < 2 || !spec.order.is_multiple_of(2) {
        return Err(Error::InfeasibleFilter(format!("order {} must be even and >= 2", spec.order)));
    }
    if !(spec.input_rate > 0.0) {
        return Err(Error::InvalidRate(format!("{} Hz", spec.input_rate)));
    }
    if !(spec.f_pass > 0.0 && spec.f_pass < spec.input_rate / 4.0) {
        return Err(Error::InfeasibleFilter(format!(
            "f_pass {} Hz must lie in (0, {}) Hz",
            spec.f_pass,
            spec.input_rate / 4.0
        )));
    }
    let c = spec.order / 2;
    let beta = kaiser_beta(spec.expected_attenuation_db());
    // built from |offset| so the taps are exactly palindromic
    let tap = |d: usize| -> f64 {
        if d == 0 {
            0.5
        } else if d.is_multiple_of(2) {
            0.0
        } else {
            let x = std::f64::consts::PI * d as f64 / 2.0;
            let r = d as f64 / c as f64;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(beta);
            0.5 * x.sin() / x * w
        }
    };
    let mut taps: Vec<f64> = (0..=spec.order).map(|i| tap(i.abs_diff(c))).collect();
    let side: f64 = taps.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, t)| t).sum();
    if side.abs() < 1e-12 {
        return Err(Error::InfeasibleFilter("degenerate window".into()));
    }
    for (i, t) in taps.iter_mut().enumerate() {
        if i != c {
            *t *= 0.5 / side;
        }
    }
    FirFilter::new(taps.into_iter().map(T::of).collect(), spec.input_rate, 2)
}

/// Decimate by two using the half-band structure: the zero taps are
/// skipped and symmetric pairs share one multiply. Returns the output and
/// the number of multiplies performed.
pub fn apply_decim2_polyphase<T: Real>(f: &FirFilter<T>, input: &[T]) -> Result<(Vec<T>, usize)> {
    if f.decimation != 2 {
        return Err(Error::NotHalfBand(format!("decimation is {}", f.decimation)));
    }
    if !f.is_halfband() {
        return Err(Error::NotHalfBand("tap structure".into()));
    }
    let c = f.taps.len() / 2;
    let pairs: Vec<(usize, T)> = (1..=c)
        .step_by(2)
        .map(|d| (d, f.taps[c + d]))
        .filter(|(_, h)| *h != T::zero())
        .collect();
    let at = |i: isize| -> T {
        if i >= 0 && (i as usize) < input.len() {
            input[i as usize]
        } else {
            T::zero()
        }
    };
    let half = T::of(0.5);
    let outputs = input.len().div_ceil(2);
    let mut out = Vec::with_capacity(outputs);
    for m in 0..outputs {
        let centre = (2 * m) as isize - c as isize;
        let mut acc = half * at(centre);
        for &(d, h) in &pairs {
            acc = acc + h * (at(centre - d as isize) + at(centre + d as isize));
        }
        out.push(acc);
    }
    Ok((out, outputs * (1 + pairs.len())))
}

/// Direct-form convolution followed by phase-0 downsampling.
pub fn apply_fir<T: Real>(f: &FirFilter<T>, input: &[T]) -> Vec<T> {
    (0..input.len())
        .step_by(f.decimation)
        .map(|n| {
            f.taps
                .iter()
                .take(n + 1)
                .enumerate()
                .fold(T::zero(), |acc, (k, &h)| acc + h * input[n - k])
        })
        .collect()
}

/// Specification of a CIC droop compensator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroopSpec {
    /// Tap count minus one; must be even.
    pub order: usize,
    /// Rate at which the compensator runs.
    pub input_rate: f64,
    /// Edge of the band that is flattened.
    pub f_pass: f64,
    /// Output rate of the CIC being corrected.
    pub cic_output_rate: f64,
    /// Optional stopband edge; the fit also pushes the response towards
    /// zero from here to half the input rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_stop: Option<f64>,
    #[serde(default = "one")]
    pub stop_weight: f64,
    #[serde(default = "default_flatness")]
    pub max_deviation_db: f64,
}

fn one() -> f64 {
    1.0
}

fn default_flatness() -> f64 {
    0.05
}

pub const DROOP_GRID: usize = 512;

impl DroopSpec {
    pub fn new(order: usize, input_rate: f64, f_pass: f64, cic_output_rate: f64) -> Self {
        Self {
            order,
            input_rate,
            f_pass,
            cic_output_rate,
            f_stop: None,
            stop_weight: 1.0,
            max_deviation_db: default_flatness(),
        }
    }

    pub fn with_stopband(mut self, f_stop: f64, weight: f64) -> Self {
        self.f_stop = Some(f_stop);
        self.stop_weight = weight;
        self
    }
}

fn cic_magnitude(cic: &CicConfig, freq: f64, cic_output_rate: f64) -> f64 {
    cic_power_response_normalized(cic, freq / cic_output_rate)
        .expect("non-negative frequency")
        .sqrt()
}

/// Least-squares symmetric FIR approximating the inverse CIC magnitude over
/// the passband.
pub fn design_droop_compensator<T: Real>(spec: &DroopSpec, cic: &CicConfig) -> Result<FirFilter<T>> {
    cic.validate()?;
    if !spec.order.is_multiple_of(2) {
        return Err(Error::InfeasibleFilter(format!("order {} must be even", spec.order)));
    }
    if !(spec.input_rate > 0.0 && spec.cic_output_rate > 0.0) {
        return Err(Error::InvalidRate("rates must be positive".into()));
    }
    if !(spec.f_pass > 0.0 && spec.f_pass < spec.input_rate / 4.0) {
        return Err(Error::InfeasibleFilter(format!(
            "f_pass {} Hz must lie in (0, {}) Hz",
            spec.f_pass,
            spec.input_rate / 4.0
        )));
    }
    if let Some(fs) = spec.f_stop {
        if !(fs > spec.f_pass && fs < spec.input_rate / 2.0) {
            return Err(Error::InfeasibleFilter(format!("stopband edge {fs} Hz")));
        }
    }
    let half = spec.order / 2;
    let nyq = spec.input_rate / 2.0;
    let mut rows: Vec<(f64, f64, f64)> = (0..DROOP_GRID)
        .map(|i| {
            let f = spec.f_pass * i as f64 / (DROOP_GRID - 1) as f64;
            (f, 1.0 / cic_magnitude(cic, f, spec.cic_output_rate), 1.0)
        })
        .collect();
    if let Some(fs) = spec.f_stop {
        rows.extend((0..DROOP_GRID).map(|i| {
            let f = fs + (nyq - fs) * i as f64 / (DROOP_GRID - 1) as f64;
            (f, 0.0, spec.stop_weight)
        }));
    }
    // zero-phase amplitude: a0 + sum_d a_d cos(d w)
    let a = DMatrix::from_fn(rows.len(), half + 1, |r, d| {
        let (f, _, w) = rows[r];
        w * (2.0 * std::f64::consts::PI * f / spec.input_rate * d as f64).cos()
    });
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&(_, t, w)| w * t));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InfeasibleFilter(e.to_string()))?;
    let dc: f64 = coef.iter().sum();
    let taps: Vec<f64> = (0..=spec.order)
        .map(|i| {
            let d = i.abs_diff(half);
            if d == 0 {
                coef[0] / dc
            } else {
                coef[d] / (2.0 * dc)
            }
        })
        .collect();
    let filter = FirFilter::new(taps.into_iter().map(T::of).collect(), spec.input_rate, 2)?;
    let deviation = droop_deviation_db(&filter, cic, spec.cic_output_rate, spec.f_pass);
    if deviation > spec.max_deviation_db {
        return Err(Error::FitResidual {
            deviation_db: deviation,
            limit_db: spec.max_deviation_db,
        });
    }
    Ok(filter)
}

/// Largest departure from 0 dB of the CIC followed by `f`, over `[0, f_pass]`.
pub fn droop_deviation_db<T: Real>(f: &FirFilter<T>, cic: &CicConfig, cic_output_rate: f64, f_pass: f64) -> f64 {
    (0..=2048)
        .map(|i| {
            let freq = f_pass * i as f64 / 2048.0;
            let g = cic_magnitude(cic, freq, cic_output_rate) * f.magnitude_at(freq);
            (20.0 * g.log10()).abs()
        })
        .fold(0.0, f64::max)
}

/// One coefficient per line.
pub fn save_taps<T: Real>(taps: &[T], path: &Path) -> Result<()> {
    let text: String = taps.iter().map(|t| format!("{t}\n")).collect();
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn load_taps<T: Real>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let taps = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map(T::of).map_err(|e| Error::Parse {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<T>>>()?;
    if taps.is_empty() {
        return Err(Error::EmptyStream);
    }
    Ok(taps)
}
