use std::path::Path;

use cicdsp::analysis::{
    cic_response, fir_response, linear_grid, measure_snr, monte_carlo_error, prune_stage_widths, tone,
    truncation_budget, widths_from_discards,
};
use cicdsp::bitarith::{verify, AdderKind, VerifyMode};
use cicdsp::chain::{build_stages, load_csv, overall_response, run_chain, save_csv, ChainConfig, SignalStream, Stage};
use cicdsp::cic::CicConfig;
use cicdsp::fir::{design_droop_compensator, design_halfband, save_taps, DroopSpec, HalfBandSpec};
use cicdsp::sdm::{osr, run_sdm, SdmConfig, SdmState};
use cicdsp::Error;
use serde_json::{json, Value};

use crate::{
    print_json, runtime, usage, AdderArgs, ChainArgs, CicArgs, CliError, DesignArgs, FilterKind, Mode, NoiseArgs, ResponseArgs,
    SdmArgs, SimulateArgs, SnrArgs,
};

type Result<T> = std::result::Result<T, CliError>;

const MIN_POINTS: usize = 16;
const EXHAUSTIVE_CLI_MAX_WIDTH: usize = 12;

/// Library errors caused by bad parameters are usage errors; anything that
/// went wrong while doing the work is a runtime error.
fn lib(e: Error) -> CliError {
    match e {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::RateMismatch { .. }
        | Error::Stage { .. }
        | Error::EmptyStream
        | Error::FitResidual { .. }
        | Error::Unstable { .. }
        | Error::InvalidMeasurement(_) => runtime(e),
        other => usage(other),
    }
}

fn cic_config(a: &CicArgs) -> Result<CicConfig> {
    for (name, v) in [("n", a.n), ("r", a.r), ("m", a.m)] {
        if v < 1 {
            return Err(usage(format!("{name} must be ≥ 1")));
        }
    }
    CicConfig::new(a.n, a.r, a.m, a.b_in).map_err(lib)
}

fn load_chain(path: Option<&Path>) -> Result<ChainConfig> {
    match path {
        Some(p) => ChainConfig::load(p).map_err(runtime),
        None => Ok(ChainConfig::default()),
    }
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn design(a: &DesignArgs) -> Result<Value> {
    let cfg = cic_config(&a.cic)?;
    let w = cfg.register_width();
    let b_out = a.b_out.unwrap_or(w);
    if b_out == 0 {
        return Err(usage("bout must be ≥ 1"));
    }
    let widths = prune_stage_widths(&cfg, b_out).map_err(lib)?;
    let discards: Vec<u32> = widths.iter().map(|x| w - x).collect();
    let budget = truncation_budget(&cfg, &discards).map_err(lib)?;
    let (g_max, g_max_db) = cfg.max_growth();
    Ok(json!({
        "n": cfg.n,
        "r": cfg.r,
        "m": cfg.m,
        "b_in": cfg.b_in,
        "b_out": b_out,
        "msb_index": cfg.register_msb_index(),
        "register_width": w,
        "g_max": g_max,
        "g_max_db": g_max_db,
        "stage_widths": widths,
        "noise_budget": budget,
    }))
}

pub fn response(a: &ResponseArgs) -> Result<Value> {
    if a.points < MIN_POINTS {
        return Err(usage(format!("points must be at least {MIN_POINTS}, got {}", a.points)));
    }
    let chain = if a.filter == FilterKind::Chain {
        let c = load_chain(a.config.as_deref())?;
        if let Some(fs) = a.fs {
            if fs != c.input_rate_hz {
                return Err(usage(format!(
                    "--fs {fs} disagrees with the chain input rate {}",
                    c.input_rate_hz
                )));
            }
        }
        Some(c)
    } else {
        None
    };
    let fs = match (a.filter, a.fs, &chain) {
        (_, _, Some(c)) => c.input_rate_hz,
        (_, Some(fs), _) => fs,
        (FilterKind::Cic, None, _) => 6.144e6,
        (FilterKind::Hb1, None, _) => 384e3,
        (FilterKind::Droop, None, _) => 192e3,
        (FilterKind::Hb2, None, _) => 96e3,
        (FilterKind::Chain, None, None) => unreachable!("chain config loaded above"),
    };
    if !(fs.is_finite() && fs > 0.0) {
        return Err(usage(format!("fs must be positive, got {fs}")));
    }
    let fmax = a.fmax.unwrap_or(fs / 2.0);
    if !(fmax > 0.0 && fmax <= fs / 2.0) {
        return Err(usage(format!("fmax must lie in (0, {}]", fs / 2.0)));
    }
    let grid = linear_grid(0.0, fmax, a.points);
    let curve = match a.filter {
        FilterKind::Cic => cic_response(&cic_config(&a.cic)?, fs, &grid).map_err(lib)?,
        FilterKind::Hb1 | FilterKind::Hb2 => {
            let (order, f_pass) = if a.filter == FilterKind::Hb1 { (8, 32e3) } else { (80, 21.77e3) };
            let spec = HalfBandSpec {
                order: a.order.unwrap_or(order),
                input_rate: fs,
                f_pass: a.fpass.unwrap_or(f_pass),
            };
            fir_response(&design_halfband::<f64>(&spec).map_err(lib)?, &grid).map_err(lib)?
        }
        FilterKind::Droop => {
            let cic = cic_config(&a.cic)?;
            let spec = DroopSpec::new(a.order.unwrap_or(14), fs, a.fpass.unwrap_or(22e3), 2.0 * fs)
                .with_stopband(a.fstop.unwrap_or(70e3), 1.0);
            fir_response(&design_droop_compensator::<f64>(&spec, &cic).map_err(lib)?, &grid).map_err(lib)?
        }
        FilterKind::Chain => overall_response(chain.as_ref().expect("loaded"), &grid).map_err(lib)?,
    };
    curve.write_csv(&a.out).map_err(runtime)?;
    Ok(json!({
        "filter": format!("{:?}", a.filter).to_lowercase(),
        "fs": fs,
        "points": curve.len(),
        "dc_db": curve.magnitude_db[0],
        "out": a.out.display().to_string(),
    }))
}

pub fn simulate(a: &SimulateArgs) -> Result<Value> {
    let cfg = load_chain(a.config.as_deref())?;
    let input = load_csv::<f64>(&a.input).map_err(runtime)?;
    let run = run_chain(&cfg, &input).map_err(runtime)?;
    let out = run.output(&input);
    save_csv(out, &a.out).map_err(runtime)?;

    let mut taps_written = Vec::new();
    if let Some(dir) = &a.taps_dir {
        std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        for (i, stage) in build_stages::<f64>(&cfg).map_err(lib)?.iter().enumerate() {
            if let Stage::Halfband(f) | Stage::Fir(f) = stage {
                let path = dir.join(format!("stage{i}_{}.csv", cfg.stages[i].kind()));
                save_taps(&f.taps, &path).map_err(runtime)?;
                taps_written.push(path.display().to_string());
            }
        }
    }

    let rates = cfg.rates();
    let stages: Vec<Value> = run
        .stages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            json!({
                "index": i,
                "kind": cfg.stages[i].kind(),
                "input_rate_hz": rates[i],
                "output_rate_hz": s.rate,
                "samples": s.len(),
            })
        })
        .collect();
    // the first eighth of the output is treated as settling time
    let tail = &out.samples[out.len() / 8..];
    let band = a.band.min(out.rate / 2.0);
    let snr = measure_snr(tail, a.freq, out.rate, band).ok();
    Ok(json!({
        "input_rate_hz": input.rate,
        "output_rate_hz": out.rate,
        "total_decimation": cfg.total_decimation(),
        "input_samples": input.len(),
        "output_samples": out.len(),
        "modulator_clips": run.modulator_clips,
        "stages": stages,
        "snr_db": snr.map(finite).unwrap_or(Value::Null),
        "snr_band_hz": band,
        "taps": taps_written,
        "out": a.out.display().to_string(),
    }))
}

pub fn sdm(a: &SdmArgs) -> Result<Value> {
    if !(a.amp >= 0.0 && a.amp <= a.full_scale) {
        return Err(usage(format!(
            "amp {} must lie in [0, full scale {}]",
            a.amp, a.full_scale
        )));
    }
    if a.len == 0 {
        return Err(usage("len must be ≥ 1"));
    }
    let cfg = SdmConfig::new(a.order, a.bits, a.full_scale, a.fs).map_err(lib)?;
    let ratio = osr(a.fs, a.band).map_err(lib)?;
    let x = tone(a.amp, a.freq, a.fs, a.len);
    let run = run_sdm(&cfg, &mut SdmState::new(&cfg), &x).map_err(lib)?;
    let snr = if a.amp > 0.0 {
        measure_snr(&run.values, a.freq, a.fs, a.band).ok()
    } else {
        None
    };
    if let Some(path) = &a.out {
        let codes = SignalStream::new(run.codes.iter().map(|&c| c as f64).collect(), a.fs).map_err(runtime)?;
        save_csv(&codes, path).map_err(runtime)?;
    }
    Ok(json!({
        "order": a.order,
        "bits": a.bits,
        "fs": a.fs,
        "osr": ratio,
        "samples": a.len,
        "step": cfg.step(),
        "clip_count": run.clip_count,
        "snr_db": snr.map(finite).unwrap_or(Value::Null),
        "out": a.out.as_ref().map(|p| p.display().to_string()),
    }))
}

pub fn noise_budget(a: &NoiseArgs) -> Result<Value> {
    let cfg = cic_config(&a.cic)?;
    let w = cfg.register_width();
    let discards = match &a.discards {
        Some(d) => d.clone(),
        None => prune_stage_widths(&cfg, a.b_out)
            .map_err(lib)?
            .iter()
            .map(|x| w - x)
            .collect(),
    };
    let budget = truncation_budget(&cfg, &discards).map_err(lib)?;
    let widths = widths_from_discards(&cfg, &discards);
    let monte_carlo = if a.trials > 0 {
        let pruned = cfg.clone().with_stage_widths(widths.clone()).map_err(lib)?;
        let stats = monte_carlo_error(&pruned, a.trials, a.seed).map_err(lib)?;
        let rel = if budget.total_variance > 0.0 {
            stats.variance / budget.total_variance - 1.0
        } else {
            0.0
        };
        json!({
            "outputs": stats.samples,
            "mean": stats.mean,
            "variance": stats.variance,
            "relative_error": rel,
            "seed": a.seed,
        })
    } else {
        Value::Null
    };
    Ok(json!({
        "register_width": w,
        "discards": discards,
        "stage_widths": widths,
        "budget": budget,
        "monte_carlo": monte_carlo,
    }))
}

pub fn adders(a: &AdderArgs) -> Result<Value> {
    let kind: AdderKind = a.kind.parse().map_err(lib)?;
    let mode = match a.mode {
        Mode::Exhaustive if a.width > EXHAUSTIVE_CLI_MAX_WIDTH => {
            return Err(usage(format!(
                "exhaustive mode is limited to width ≤ {EXHAUSTIVE_CLI_MAX_WIDTH}, got {}",
                a.width
            )))
        }
        Mode::Exhaustive => VerifyMode::Exhaustive,
        Mode::Random => VerifyMode::Random {
            trials: a.trials,
            seed: a.seed,
        },
    };
    let rep = verify(kind, a.width, mode).map_err(lib)?;
    let v = json!({
        "kind": rep.kind,
        "width": rep.width,
        "mode": format!("{:?}", a.mode).to_lowercase(),
        "depth": rep.depth,
        "trials": rep.equivalence_trials,
        "mismatches": rep.mismatches,
    });
    if rep.mismatches > 0 {
        print_json(&v);
        return Err(runtime(format!("{} mismatches against integer arithmetic", rep.mismatches)));
    }
    Ok(v)
}

pub fn chain(a: &ChainArgs) -> Result<Value> {
    let cfg = load_chain(a.config.as_deref())?;
    if let Some(path) = &a.emit {
        std::fs::write(path, cfg.to_json()).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    let rates = cfg.rates();
    let stages: Vec<Value> = cfg
        .stages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            json!({
                "index": i,
                "kind": s.kind(),
                "decimation": s.decimation(),
                "input_rate_hz": rates[i],
                "output_rate_hz": rates[i + 1],
            })
        })
        .collect();
    let edge = a.band.min(cfg.output_rate() / 2.0);
    if !(edge > 0.0) {
        return Err(usage(format!("band must be positive, got {}", a.band)));
    }
    let curve = overall_response(&cfg, &linear_grid(0.0, edge, 1001)).map_err(lib)?;
    Ok(json!({
        "input_rate_hz": cfg.input_rate_hz,
        "output_rate_hz": cfg.output_rate(),
        "total_decimation": cfg.total_decimation(),
        "audio_band_hz": cfg.audio_band_hz,
        "modulator": cfg.modulator,
        "stages": stages,
        "passband_edge_hz": edge,
        "passband_deviation_db": curve.max_deviation_db(0.0, edge),
        "emitted": a.emit.as_ref().map(|p| p.display().to_string()),
    }))
}

pub fn snr(a: &SnrArgs) -> Result<Value> {
    let s = load_csv::<f64>(&a.input).map_err(runtime)?;
    if a.skip >= s.len() {
        return Err(usage(format!("skip {} leaves no samples of {}", a.skip, s.len())));
    }
    let snr = measure_snr(&s.samples[a.skip..], a.freq, s.rate, a.band).map_err(lib)?;
    Ok(json!({
        "snr_db": finite(snr),
        "rate_hz": s.rate,
        "samples": s.len() - a.skip,
        "band_hz": a.band,
    }))
}
