use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cic::{input_words, CicConfig, CicState};
use crate::error::{Error, Result};
use crate::fixword::FixedWord;

/// Truncation noise of one stage, in input-LSB units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageNoise {
    pub stage: usize,
    pub discard_bits: u32,
    pub quantum: f64,
    pub mean: f64,
    pub variance: f64,
    pub dc_gain: f64,
    pub power_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub stages: Vec<StageNoise>,
    pub total_mean: f64,
    pub total_variance: f64,
}

impl NoiseBudget {
    /// Variance contributed by all stages before the output register.
    pub fn inner_variance(&self) -> f64 {
        self.stages[..self.stages.len() - 1]
            .iter()
            .map(|s| s.variance * s.power_gain)
            .sum()
    }
}

fn convolve(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut out = vec![0i128; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn difference(delay: usize) -> Vec<i128> {
    let mut d = vec![0i128; delay + 1];
    d[0] = 1;
    d[delay] = -1;
    d
}

/// Impulse response from the input of stage `j` (1-based: integrators
/// `1..=N`, combs `N+1..=2N`, output register `2N+1`) to the filter output.
///
/// Integrator sources see the remaining integrators and all N combs, taken
/// at the input rate where each comb delays by RM. Comb sources see only
/// the remaining combs at the output rate.
pub fn hj_coefficients(cfg: &CicConfig, j: usize) -> Result<Vec<i128>> {
    cfg.validate()?;
    let n = cfg.n;
    if j == 0 || j > 2 * n + 1 {
        return Err(Error::StageIndex {
            index: j,
            max: 2 * n + 1,
        });
    }
    let mut h = vec![1i128];
    if j <= n {
        let boxcar = vec![1i128; cfg.r * cfg.m];
        for _ in 0..(n - j + 1) {
            h = convolve(&h, &boxcar);
        }
        for _ in 0..(j - 1) {
            h = convolve(&h, &difference(cfg.r * cfg.m));
        }
    } else {
        for _ in 0..(2 * n + 1 - j) {
            h = convolve(&h, &difference(cfg.m));
        }
    }
    Ok(h)
}

/// Noise budget for per-stage discards `b_j`, each counted from the LSB of
/// the full-precision register.
///
/// A stage only adds noise when it drops bits its input still had, i.e.
/// when `b_j` exceeds `b_(j-1)` (with `b_0 = 0`); its error is then uniform
/// with quantum `2^b_j`.
pub fn truncation_budget(cfg: &CicConfig, discards: &[u32]) -> Result<NoiseBudget> {
    cfg.validate()?;
    let n = cfg.n;
    if discards.len() != 2 * n + 1 {
        return Err(Error::DiscardCount {
            got: discards.len(),
            expected: 2 * n + 1,
        });
    }
    let width = cfg.register_width();
    let mut stages = Vec::with_capacity(discards.len());
    let mut prev = 0u32;
    for (i, &b) in discards.iter().enumerate() {
        let j = i + 1;
        if b + 2 > width {
            return Err(Error::DiscardTooLarge {
                stage: j,
                discard: b,
                width,
            });
        }
        let quantum = if b > prev { (2.0f64).powi(b as i32) } else { 0.0 };
        prev = b;
        let dc_gain = if j == 1 {
            cfg.max_growth().0 as f64
        } else if j == 2 * n + 1 {
            1.0
        } else {
            0.0
        };
        let power_gain = hj_coefficients(cfg, j)?
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum();
        stages.push(StageNoise {
            stage: j,
            discard_bits: b,
            quantum,
            mean: quantum / 2.0,
            variance: quantum * quantum / 12.0,
            dc_gain,
            power_gain,
        });
    }
    Ok(NoiseBudget {
        total_mean: stages.iter().map(|s| s.mean * s.dc_gain).sum(),
        total_variance: stages.iter().map(|s| s.variance * s.power_gain).sum(),
        stages,
    })
}

pub fn widths_from_discards(cfg: &CicConfig, discards: &[u32]) -> Vec<u32> {
    let w = cfg.register_width();
    discards.iter().map(|b| w - b).collect()
}

/// Stage widths for a `b_out`-bit output.
///
/// The output stage drops `W - b_out` bits and sets the allowance: the
/// noise of all earlier stages together may not exceed the output
/// truncation variance. Starting from no discards, the stage (2..=2N) whose
/// increment leaves the least inner variance is bumped by one bit, keeping
/// discards non-decreasing, until no bump fits; ties go to the later stage.
pub fn prune_stage_widths(cfg: &CicConfig, b_out: u32) -> Result<Vec<u32>> {
    cfg.validate()?;
    let w = cfg.register_width();
    if b_out > w {
        return Err(Error::OutputTooWide { b_out, register: w });
    }
    if b_out < 2 {
        return Err(Error::InvalidCic("output width must be at least 2 bits".into()));
    }
    let len = 2 * cfg.n + 1;
    let mut b = vec![0u32; len];
    b[len - 1] = w - b_out;
    let allowance = truncation_budget(cfg, &b)?.stages[len - 1].variance;
    loop {
        let mut best: Option<(f64, usize)> = None;
        for j in 1..len - 1 {
            if b[j] + 1 > b[j + 1] {
                continue;
            }
            let mut trial = b.clone();
            trial[j] += 1;
            let v = truncation_budget(cfg, &trial)?.inner_variance();
            if v <= allowance && best.is_none_or(|(bv, _)| v <= bv) {
                best = Some((v, j));
            }
        }
        match best {
            Some((_, j)) => b[j] += 1,
            None => break,
        }
    }
    Ok(widths_from_discards(cfg, &b))
}

/// Output error of a pruned decimator against full precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
}

const CHUNK_OUTPUTS: usize = 1 << 14;

/// Drive the pruned filter and its full-precision twin with the same
/// uniformly random `b_in`-bit input and collect the output error in
/// input-LSB units. Work is split into independently seeded chunks so the
/// result does not depend on the thread count.
pub fn monte_carlo_error(pruned: &CicConfig, outputs: usize, seed: u64) -> Result<ErrorStats> {
    pruned.validate()?;
    let full = CicConfig {
        stage_widths: None,
        ..pruned.clone()
    };
    let shift = pruned.output_shift();
    let skip = 2 * pruned.n;
    if outputs == 0 {
        return Err(Error::InvalidMeasurement("no output samples requested".into()));
    }
    let chunks = outputs.div_ceil(CHUNK_OUTPUTS);
    let half = 1i64 << (pruned.b_in - 1);
    let partial: Vec<(usize, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(usize, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let keep = CHUNK_OUTPUTS.min(outputs - c * CHUNK_OUTPUTS);
            let raw: Vec<i64> = (0..(keep + skip) * pruned.r)
                .map(|_| rng.gen_range(-half..half))
                .collect();
            let x: Vec<FixedWord> = input_words(pruned, &raw)?;
            let a = CicState::<FixedWord>::new(&full)?.decimate(&x)?;
            let t = CicState::<FixedWord>::new(pruned)?.decimate(&x)?;
            let (mut s1, mut s2) = (0.0, 0.0);
            for (f, p) in a.iter().zip(&t).skip(skip) {
                let e = ((p.value() as i128) << shift) - f.value() as i128;
                s1 += e as f64;
                s2 += (e as f64) * (e as f64);
            }
            Ok((a.len() - skip, s1, s2))
        })
        .collect::<Result<_>>()?;
    let count: usize = partial.iter().map(|p| p.0).sum();
    let s1: f64 = partial.iter().map(|p| p.1).sum();
    let s2: f64 = partial.iter().map(|p| p.2).sum();
    let mean = s1 / count as f64;
    Ok(ErrorStats {
        samples: count,
        mean,
        variance: s2 / count as f64 - mean * mean,
    })
}
