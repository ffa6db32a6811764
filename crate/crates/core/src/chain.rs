//! Multi-stage decimation: optional modulator, CIC, half-bands, droop
//! correction and generic FIR stages, with rate bookkeeping and CSV I/O.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{cic_power_response_normalized, ResponseCurve};
use crate::cic::{CicConfig, CicState};
use crate::error::{Error, Result};
use crate::fir::{apply_decim2_polyphase, apply_fir, design_droop_compensator, design_halfband, DroopSpec, FirFilter, HalfBandSpec};
use crate::fixword::FixedWord;
use crate::scalar::Real;
use crate::sdm::{run_sdm, SdmConfig, SdmState};

/// How the integer CIC output is brought back to unity DC gain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CicScaling {
    /// Exact division by `(RM)^N`.
    #[default]
    Exact,
    /// Arithmetic shift right by `ceil(log2 (RM)^N)`, flooring.
    Shift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StageSpec {
    Cic {
        n: usize,
        r: usize,
        m: usize,
        b_in: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stage_widths: Option<Vec<u32>>,
        #[serde(default)]
        scaling: CicScaling,
    },
    Halfband {
        order: usize,
        f_pass: f64,
    },
    /// Compensates the closest preceding CIC stage.
    Droop {
        order: usize,
        f_pass: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f_stop: Option<f64>,
        #[serde(default = "unit_weight")]
        stop_weight: f64,
    },
    Fir {
        taps: Vec<f64>,
        decimation: usize,
    },
}

fn unit_weight() -> f64 {
    1.0
}

impl StageSpec {
    pub fn decimation(&self) -> usize {
        match self {
            StageSpec::Cic { r, .. } => *r,
            StageSpec::Halfband { .. } | StageSpec::Droop { .. } => 2,
            StageSpec::Fir { decimation, .. } => *decimation,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StageSpec::Cic { .. } => "cic",
            StageSpec::Halfband { .. } => "halfband",
            StageSpec::Droop { .. } => "droop",
            StageSpec::Fir { .. } => "fir",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulatorSpec {
    pub order: usize,
    pub quantizer_bits: u32,
    #[serde(default = "unit_weight")]
    pub full_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub input_rate_hz: f64,
    #[serde(default = "default_band")]
    pub audio_band_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulator: Option<ModulatorSpec>,
    #[serde(default)]
    pub stages: Vec<StageSpec>,
}

fn default_band() -> f64 {
    24e3
}

impl Default for ChainConfig {
    /// Third-order 5-bit modulator at 6.144 MHz, CIC ÷16, half-band ÷2,
    /// droop corrector ÷2 and a long half-band ÷2 down to 48 kHz.
    fn default() -> Self {
        Self {
            input_rate_hz: 6.144e6,
            audio_band_hz: 24e3,
            modulator: Some(ModulatorSpec {
                order: 3,
                quantizer_bits: 5,
                full_scale: 1.0,
            }),
            stages: vec![
                StageSpec::Cic {
                    n: 5,
                    r: 16,
                    m: 1,
                    b_in: 5,
                    stage_widths: None,
                    scaling: CicScaling::Exact,
                },
                StageSpec::Halfband {
                    order: 8,
                    f_pass: 32e3,
                },
                StageSpec::Droop {
                    order: 14,
                    f_pass: 22e3,
                    f_stop: Some(70e3),
                    stop_weight: 1.0,
                },
                StageSpec::Halfband {
                    order: 80,
                    f_pass: 21.77e3,
                },
            ],
        }
    }
}

impl ChainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn total_decimation(&self) -> usize {
        self.stages.iter().map(StageSpec::decimation).product()
    }

    /// Input rate of every stage followed by the final output rate.
    pub fn rates(&self) -> Vec<f64> {
        let mut rates = vec![self.input_rate_hz];
        for s in &self.stages {
            let last = *rates.last().expect("non-empty");
            rates.push(last / s.decimation() as f64);
        }
        rates
    }

    pub fn output_rate(&self) -> f64 {
        *self.rates().last().expect("non-empty")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.input_rate_hz.is_finite() && self.input_rate_hz > 0.0) {
            return Err(Error::InvalidRate(format!("input rate {} Hz", self.input_rate_hz)));
        }
        if !(self.audio_band_hz > 0.0) {
            return Err(Error::InvalidRate(format!("audio band {} Hz", self.audio_band_hz)));
        }
        if let Some(m) = &self.modulator {
            self.sdm_config(m)?;
        }
        build_stages::<f64>(self).map(|_| ())
    }

    fn sdm_config(&self, m: &ModulatorSpec) -> Result<SdmConfig> {
        SdmConfig::new(m.order, m.quantizer_bits, m.full_scale, self.input_rate_hz)
    }
}

/// A stage ready to run.
#[derive(Clone, Debug)]
pub enum Stage<T> {
    Cic { cfg: CicConfig, scaling: CicScaling },
    Halfband(FirFilter<T>),
    Fir(FirFilter<T>),
}

impl<T: Real> Stage<T> {
    /// Magnitude and phase at `freq` Hz, normalized to unity at DC.
    fn response(&self, freq: f64, rate: f64) -> (f64, f64) {
        match self {
            Stage::Cic { cfg, .. } => {
                let out_rate = rate / cfg.r as f64;
                let p = cic_power_response_normalized(cfg, freq / out_rate).expect("non-negative");
                let delay = cfg.n as f64 * (cfg.r * cfg.m - 1) as f64 / 2.0;
                (p.sqrt(), -2.0 * PI * freq / rate * delay)
            }
            Stage::Halfband(f) | Stage::Fir(f) => {
                let (re, im) = f.response_at(freq);
                let (dc, _) = f.response_at(0.0);
                (re.hypot(im) / dc.abs(), im.atan2(re))
            }
        }
    }
}

/// Design every stage at the rate it runs at.
pub fn build_stages<T: Real>(cfg: &ChainConfig) -> Result<Vec<Stage<T>>> {
    let rates = cfg.rates();
    let mut last_cic: Option<(CicConfig, f64)> = None;
    let mut out = Vec::with_capacity(cfg.stages.len());
    for (i, (spec, &rate)) in cfg.stages.iter().zip(&rates).enumerate() {
        let wrap = |e: Error| Error::Stage {
            stage: i,
            reason: e.to_string(),
        };
        let stage = match spec {
            StageSpec::Cic {
                n,
                r,
                m,
                b_in,
                stage_widths,
                scaling,
            } => {
                let mut c = CicConfig::new(*n, *r, *m, *b_in).map_err(wrap)?;
                if let Some(w) = stage_widths {
                    c = c.with_stage_widths(w.clone()).map_err(wrap)?;
                }
                last_cic = Some((c.clone(), rate / *r as f64));
                Stage::Cic {
                    cfg: c,
                    scaling: *scaling,
                }
            }
            StageSpec::Halfband { order, f_pass } => Stage::Halfband(
                design_halfband(&HalfBandSpec {
                    order: *order,
                    input_rate: rate,
                    f_pass: *f_pass,
                })
                .map_err(wrap)?,
            ),
            StageSpec::Droop {
                order,
                f_pass,
                f_stop,
                stop_weight,
            } => {
                let (cic, cic_rate) = last_cic.clone().ok_or_else(|| Error::Stage {
                    stage: i,
                    reason: "droop stage needs a preceding cic stage".into(),
                })?;
                let mut spec = DroopSpec::new(*order, rate, *f_pass, cic_rate);
                if let Some(fs) = f_stop {
                    spec = spec.with_stopband(*fs, *stop_weight);
                }
                Stage::Fir(design_droop_compensator(&spec, &cic).map_err(wrap)?)
            }
            StageSpec::Fir { taps, decimation } => Stage::Fir(
                FirFilter::new(taps.iter().map(|&t| T::of(t)).collect(), rate, *decimation).map_err(wrap)?,
            ),
        };
        out.push(stage);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalStream<T> {
    pub samples: Vec<T>,
    pub rate: f64,
}

impl<T: Real> SignalStream<T> {
    pub fn new(samples: Vec<T>, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidRate(format!("{rate} Hz")));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidMeasurement("non-finite sample".into()));
        }
        Ok(Self { samples, rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct ChainRun<T> {
    /// Modulator output levels when the chain has a modulator.
    pub modulated: Option<SignalStream<T>>,
    pub modulator_clips: usize,
    /// Output of every stage, in order; the last one is the chain output.
    pub stages: Vec<SignalStream<T>>,
}

impl<T: Real> ChainRun<T> {
    pub fn output<'a>(&'a self, input: &'a SignalStream<T>) -> &'a SignalStream<T> {
        self.stages
            .last()
            .or(self.modulated.as_ref())
            .unwrap_or(input)
    }
}

fn rates_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

fn cic_stage<T: Real>(cfg: &CicConfig, scaling: CicScaling, samples: &[T], lsb: f64) -> Result<Vec<T>> {
    let (lo, hi) = FixedWord::range(cfg.b_in)?;
    let words = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let v = s.as_f64();
            if v.fract() != 0.0 || v < lo as f64 || v > hi as f64 {
                return Err(Error::InvalidCic(format!(
                    "sample {i} ({v}) is not a {}-bit integer",
                    cfg.b_in
                )));
            }
            FixedWord::from_integer(v as i64, cfg.b_in)
        })
        .collect::<Result<Vec<_>>>()?;
    let out = CicState::<FixedWord>::new(cfg)?.decimate(&words)?;
    let (gain, _) = cfg.max_growth();
    let shift = cfg.output_shift();
    Ok(match scaling {
        CicScaling::Exact => {
            let k = lsb * (1u128 << shift) as f64 / gain as f64;
            out.iter().map(|w| T::of(w.value() as f64 * k)).collect()
        }
        CicScaling::Shift => {
            let total = 128 - (gain - 1).leading_zeros();
            let extra = total.saturating_sub(shift);
            out.iter()
                .map(|w| T::of((w.value() >> extra.min(63)) as f64 * lsb))
                .collect()
        }
    })
}

/// Run `input` through the modulator (if any) and every stage. Startup
/// transients are kept, so each stage emits `ceil(len / decimation)`
/// samples.
pub fn run_chain<T: Real>(cfg: &ChainConfig, input: &SignalStream<T>) -> Result<ChainRun<T>> {
    if !rates_match(input.rate, cfg.input_rate_hz) {
        return Err(Error::RateMismatch {
            got: input.rate,
            expected: cfg.input_rate_hz,
        });
    }
    if input.is_empty() {
        return Err(Error::EmptyStream);
    }
    let stages = build_stages::<T>(cfg)?;
    let rates = cfg.rates();
    let mut run = ChainRun {
        modulated: None,
        modulator_clips: 0,
        stages: Vec::with_capacity(stages.len()),
    };
    // integer-valued stream handed to a CIC, with the size of one unit
    let mut current: Vec<T> = input.samples.clone();
    let mut lsb = 1.0;
    if let Some(m) = &cfg.modulator {
        let sdm = cfg.sdm_config(m)?;
        let levels = run_sdm(&sdm, &mut SdmState::new(&sdm), &input.samples)?;
        run.modulator_clips = levels.clip_count;
        run.modulated = Some(SignalStream::new(levels.values, input.rate)?);
        current = levels.codes.iter().map(|&c| T::of(c as f64)).collect();
        lsb = if sdm.quantizer_bits == 1 { sdm.full_scale } else { sdm.step() };
    }
    let mut coded = cfg.modulator.is_some();
    for (i, stage) in stages.iter().enumerate() {
        let wrap = |e: Error| Error::Stage {
            stage: i,
            reason: e.to_string(),
        };
        current = match stage {
            Stage::Cic { cfg: c, scaling } => {
                let out = cic_stage(c, *scaling, &current, if coded { lsb } else { 1.0 }).map_err(wrap)?;
                coded = false;
                out
            }
            Stage::Halfband(f) => apply_decim2_polyphase(f, &current).map_err(wrap)?.0,
            Stage::Fir(f) => apply_fir(f, &current),
        };
        run.stages.push(SignalStream::new(current.clone(), rates[i + 1])?);
    }
    Ok(run)
}

/// Cascade magnitude and phase on a grid of input-rate frequencies, each
/// stage evaluated at its own sample rate and normalized to 0 dB at DC.
pub fn overall_response(cfg: &ChainConfig, grid: &[f64]) -> Result<ResponseCurve> {
    let stages = build_stages::<f64>(cfg)?;
    let rates = cfg.rates();
    let mut mags = Vec::with_capacity(grid.len());
    let mut phases: Vec<f64> = Vec::with_capacity(grid.len());
    for &f in grid {
        if !(0.0..=cfg.input_rate_hz / 2.0).contains(&f) {
            return Err(Error::FrequencyOutOfRange(f));
        }
        let (mut mag, mut ph) = (1.0, 0.0);
        for (s, &rate) in stages.iter().zip(&rates) {
            let (m, p) = s.response(f, rate);
            mag *= m;
            ph += p;
        }
        let mut ph = ph.rem_euclid(2.0 * PI);
        if let Some(&prev) = phases.last() {
            ph += 2.0 * PI * ((prev - ph) / (2.0 * PI)).round();
        }
        mags.push(20.0 * mag.log10());
        phases.push(ph);
    }
    ResponseCurve::new(grid.to_vec(), mags, phases, cfg.input_rate_hz)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// `# rate_hz=<rate>` header, then `index,value` rows.
pub fn save_csv<T: Real>(stream: &SignalStream<T>, path: &Path) -> Result<()> {
    let mut text = format!("# rate_hz={}\nindex,value\n", stream.rate);
    for (i, v) in stream.samples.iter().enumerate() {
        text.push_str(&format!("{i},{v}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn load_csv<T: Real>(path: &Path) -> Result<SignalStream<T>> {
    parse_csv(&read_file(path)?)
}

pub fn parse_csv<T: Real>(text: &str) -> Result<SignalStream<T>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut rate = None;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(r) = comment.trim().strip_prefix("rate_hz=") {
                let r: f64 = r.trim().parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
                    line: line_no,
                    reason: format!("bad rate: {e}"),
                })?;
                rate = Some(r);
            }
            continue;
        }
        if line == "index,value" {
            continue;
        }
        let (_, value) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: line_no,
            reason: "expected `index,value`".into(),
        })?;
        let v: f64 = value.trim().parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        samples.push(T::of(v));
    }
    let rate = rate.ok_or(Error::MissingRate)?;
    if samples.is_empty() {
        return Err(Error::EmptyStream);
    }
    SignalStream::new(samples, rate)
}
