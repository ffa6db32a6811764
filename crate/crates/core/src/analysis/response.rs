use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NULL_FLOOR_DB;
use crate::cic::CicConfig;
use crate::error::{Error, Result};
use crate::fir::FirFilter;
use crate::scalar::Real;

/// Sampled magnitude and phase response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub freqs: Vec<f64>,
    pub magnitude_db: Vec<f64>,
    pub phase_rad: Vec<f64>,
    pub reference_rate: f64,
}

fn clamp_db(db: f64) -> f64 {
    if db.is_nan() || db < NULL_FLOOR_DB {
        NULL_FLOOR_DB
    } else {
        db
    }
}

impl ResponseCurve {
    pub fn new(freqs: Vec<f64>, magnitude_db: Vec<f64>, phase_rad: Vec<f64>, reference_rate: f64) -> Result<Self> {
        if freqs.len() != magnitude_db.len() || freqs.len() != phase_rad.len() {
            return Err(Error::InvalidMeasurement("curve columns differ in length".into()));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasurement("frequencies must increase".into()));
        }
        Ok(Self {
            freqs,
            magnitude_db: magnitude_db.into_iter().map(clamp_db).collect(),
            phase_rad,
            reference_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Index of the grid point closest to `freq`.
    pub fn nearest(&self, freq: f64) -> Option<usize> {
        (0..self.freqs.len()).min_by(|&a, &b| {
            (self.freqs[a] - freq)
                .abs()
                .total_cmp(&(self.freqs[b] - freq).abs())
        })
    }

    /// Largest |magnitude| in dB over grid points within `[lo, hi]`.
    pub fn max_deviation_db(&self, lo: f64, hi: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.magnitude_db)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, m)| m.abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("freq_hz,magnitude_db,phase_rad\n");
        for i in 0..self.freqs.len() {
            s.push_str(&format!("{},{},{}\n", self.freqs[i], self.magnitude_db[i], self.phase_rad[i]));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// `points` evenly spaced frequencies from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn growth_power(cfg: &CicConfig) -> f64 {
    ((cfg.r * cfg.m) as f64).powi(2 * cfg.n as i32)
}

/// CIC power response `[sin(πMf) / sin(πf/R)]^(2N)`, with `f` relative to
/// the output rate. Where the denominator vanishes the limit `(RM)^(2N)` is
/// used.
pub fn cic_power_response_exact(cfg: &CicConfig, f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::FrequencyOutOfRange(f));
    }
    let den = (PI * f / cfg.r as f64).sin();
    if den.abs() < 1e-12 {
        return Ok(growth_power(cfg));
    }
    Ok(((PI * cfg.m as f64 * f).sin() / den).powi(2 * cfg.n as i32))
}

/// Exact response divided by the DC gain.
pub fn cic_power_response_normalized(cfg: &CicConfig, f: f64) -> Result<f64> {
    Ok(cic_power_response_exact(cfg, f)? / growth_power(cfg))
}

/// Large-R approximation `[RM · sinc(Mf)]^(2N)`, valid for `0 <= f <= 1/M`.
pub fn cic_power_response_approx(cfg: &CicConfig, f: f64) -> Result<f64> {
    let m = cfg.m as f64;
    if !(0.0..=1.0 / m).contains(&f) {
        return Err(Error::FrequencyOutOfRange(f));
    }
    if f == 0.0 {
        return Ok(growth_power(cfg));
    }
    let x = PI * m * f;
    Ok(((cfg.r * cfg.m) as f64 * x.sin() / x).powi(2 * cfg.n as i32))
}

/// Normalized CIC response on a grid of input-rate frequencies in Hz.
/// Phase is the linear-phase delay of the symmetric impulse response.
pub fn cic_response(cfg: &CicConfig, input_rate: f64, grid: &[f64]) -> Result<ResponseCurve> {
    let out_rate = input_rate / cfg.r as f64;
    let delay = cfg.n as f64 * (cfg.r * cfg.m - 1) as f64 / 2.0;
    let mut mags = Vec::with_capacity(grid.len());
    let mut phases = Vec::with_capacity(grid.len());
    for &f in grid {
        if !(0.0..=input_rate / 2.0).contains(&f) {
            return Err(Error::FrequencyOutOfRange(f));
        }
        let p = cic_power_response_normalized(cfg, f / out_rate)?;
        mags.push(10.0 * p.log10());
        phases.push(-2.0 * PI * f / input_rate * delay);
    }
    ResponseCurve::new(grid.to_vec(), mags, phases, input_rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Integrator,
    Comb,
}

/// Power and phase of `1/(1 - z^-k)` or `1 - z^-k` at `omega` rad/sample.
/// The comb phase is the delay term `-kω/2`.
pub fn stage_response(kind: StageKind, k: usize, omega: f64) -> Result<(f64, f64)> {
    let kw = k as f64 * omega;
    let c = 1.0 - kw.cos();
    match kind {
        StageKind::Integrator => {
            if c.abs() < 1e-15 {
                return Err(Error::IntegratorPole);
            }
            Ok((1.0 / (2.0 * c), -kw.sin().atan2(c)))
        }
        StageKind::Comb => Ok((2.0 * c, -kw / 2.0)),
    }
}

/// Response of raw taps running at `rate`, with phase unwrapped along the
/// grid.
pub fn taps_response(taps: &[f64], rate: f64, grid: &[f64]) -> Result<ResponseCurve> {
    let mut mags = Vec::with_capacity(grid.len());
    let mut phases: Vec<f64> = Vec::with_capacity(grid.len());
    for &f in grid {
        let w = 2.0 * PI * f / rate;
        let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, h)| {
            let a = w * k as f64;
            (re + h * a.cos(), im - h * a.sin())
        });
        mags.push(20.0 * re.hypot(im).log10());
        let mut ph = im.atan2(re);
        if let Some(&prev) = phases.last() {
            ph += 2.0 * PI * ((prev - ph) / (2.0 * PI)).round();
        }
        phases.push(ph);
    }
    ResponseCurve::new(grid.to_vec(), mags, phases, rate)
}

/// Response of an FIR filter at its input rate.
pub fn fir_response<T: Real>(f: &FirFilter<T>, grid: &[f64]) -> Result<ResponseCurve> {
    let taps: Vec<f64> = f.taps.iter().map(|t| t.as_f64()).collect();
    taps_response(&taps, f.input_rate, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn audio_cic() -> CicConfig {
        CicConfig::new(5, 16, 1, 5).unwrap()
    }

    fn db(p: f64) -> f64 {
        10.0 * p.log10()
    }

    #[test]
    fn exact_response_examples() {
        let c = audio_cic();
        assert!(db(cic_power_response_normalized(&c, 0.0).unwrap()).abs() < 1e-12);
        assert!(db(cic_power_response_normalized(&c, 1e-9).unwrap()).abs() < 1e-9);
        for k in 1..4 {
            assert!(cic_power_response_normalized(&c, k as f64).unwrap() < 1e-25);
        }
        let m2 = CicConfig::new(2, 4, 2, 5).unwrap();
        assert!(cic_power_response_exact(&m2, 0.5).unwrap() < 1e-20);
        let droop = db(cic_power_response_normalized(&c, 22.0 / 384.0).unwrap());
        assert!((droop + 0.25).abs() <= 0.05, "{droop}");
        assert!(cic_power_response_exact(&c, -0.1).is_err());
    }

    #[test]
    fn approx_tracks_exact() {
        let c = audio_cic();
        assert_eq!(cic_power_response_approx(&c, 0.0).unwrap(), cic_power_response_exact(&c, 0.0).unwrap());
        assert!(cic_power_response_approx(&c, 1.0).unwrap() < 1e-20);
        assert!(cic_power_response_approx(&c, 1.01).is_err());
        for n in 1..=7 {
            let c = CicConfig::new(n, 16, 1, 4).unwrap();
            for i in 0..4096 {
                let f = 255.0 / 256.0 * i as f64 / 4095.0;
                let e = db(cic_power_response_exact(&c, f).unwrap());
                let a = db(cic_power_response_approx(&c, f).unwrap());
                assert!((e - a).abs() < 1.0);
            }
        }
    }

    #[test]
    fn stage_examples() {
        let (p, _) = stage_response(StageKind::Integrator, 1, PI).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
        assert_eq!(stage_response(StageKind::Comb, 1, 0.0).unwrap().0, 0.0);
        let (p, ph) = stage_response(StageKind::Comb, 2, PI / 2.0).unwrap();
        assert!((p - 4.0).abs() < 1e-15);
        assert!((ph + PI / 2.0).abs() < 1e-15);
        assert_eq!(stage_response(StageKind::Integrator, 1, 0.0), Err(Error::IntegratorPole));
        // integrator phase: -(π - ω)/2 on (0, 2π)
        let (_, ph) = stage_response(StageKind::Integrator, 1, 1.0).unwrap();
        assert!((ph + (PI - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fir_response_examples() {
        let id = FirFilter::new(vec![1.0], 1.0, 1).unwrap();
        let r = fir_response(&id, &linear_grid(0.0, 0.5, 11)).unwrap();
        assert!(r.magnitude_db.iter().all(|m| m.abs() < 1e-12));
        assert!(r.phase_rad.iter().all(|p| p.abs() < 1e-12));
        let pair = FirFilter::new(vec![1.0, 1.0], 1.0, 1).unwrap();
        let r = fir_response(&pair, &[0.5]).unwrap();
        assert!(r.magnitude_db[0] < -250.0);
    }

    #[test]
    fn impulse_taps_agree_with_closed_form() {
        for (n, r, m) in [(5, 16, 1), (3, 8, 2), (2, 5, 1)] {
            let c = CicConfig::new(n, r, m, 4).unwrap();
            let taps: Vec<f64> = c.impulse_coefficients().iter().map(|&v| v as f64).collect();
            let rate = r as f64;
            let grid = linear_grid(0.0, rate / 2.0, 1001);
            let curve = taps_response(&taps, rate, &grid).unwrap();
            for (f, got) in grid.iter().zip(&curve.magnitude_db) {
                let p = cic_power_response_exact(&c, *f).unwrap();
                let want = db(p);
                // away from nulls: within 100 dB of the DC gain
                if want > db(cic_power_response_exact(&c, 0.0).unwrap()) - 100.0 {
                    assert!((got - want).abs() < 1e-9, "{f}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn linear_phase_of_symmetric_taps() {
        let f = FirFilter::new(vec![0.1, 0.3, 0.5, 0.3, 0.1], 1.0, 1).unwrap();
        let r = fir_response(&f, &linear_grid(0.0, 0.3, 50)).unwrap();
        for (fr, ph) in r.freqs.iter().zip(&r.phase_rad) {
            assert!((ph + 2.0 * PI * fr * 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_csv_and_clamp() {
        let c = ResponseCurve::new(vec![0.0, 1.0], vec![0.0, f64::NEG_INFINITY], vec![0.0, 0.5], 4.0).unwrap();
        assert_eq!(c.magnitude_db[1], NULL_FLOOR_DB);
        assert_eq!(c.to_csv(), "freq_hz,magnitude_db,phase_rad\n0,0,0\n1,-400,0.5\n");
        assert!(ResponseCurve::new(vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2], 1.0).is_err());
    }

    #[test]
    fn cic_curve_dc_and_droop() {
        let c = audio_cic();
        let grid = linear_grid(0.0, 48e3, 49);
        let r = cic_response(&c, 6.144e6, &grid).unwrap();
        assert!(r.magnitude_db[0].abs() < 1e-12);
        let i = r.nearest(22e3).unwrap();
        assert!((r.magnitude_db[i] + 0.25).abs() <= 0.05);
    }
}
