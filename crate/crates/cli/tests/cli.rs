use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cicdsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cicdsp"))
        .args(args)
        .env_remove("CICDSP_THREADS")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = cicdsp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_stream(path: &Path, rate: f64, samples: impl Iterator<Item = f64>) {
    let mut s = format!("# rate_hz={rate}\nindex,value\n");
    for (i, v) in samples.enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    std::fs::write(path, s).unwrap();
}

fn read_stream(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

fn read_curve(path: &Path) -> Vec<(f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

#[test]
fn design_reference_cic() {
    let v = ok_json(&["design", "--n", "5", "--r", "16", "--m", "1", "--bin", "5", "--bout", "16"]);
    assert_eq!(v["register_width"], 25);
    assert_eq!(v["msb_index"], 24);
    assert_eq!(v["g_max"], 1u64 << 20);
    assert!((v["g_max_db"].as_f64().unwrap() - 120.4).abs() < 0.1);
    let widths = v["stage_widths"].as_array().unwrap();
    assert_eq!(widths.len(), 11);
    assert_eq!(widths[0], 25);
    assert_eq!(widths[10], 16);
    assert!(v["noise_budget"]["total_variance"].as_f64().unwrap() > 0.0);
}

#[test]
fn design_smallest() {
    let v = ok_json(&["design", "--n", "1", "--r", "2", "--m", "1", "--bin", "1"]);
    assert_eq!(v["register_width"], 2);
}

#[test]
fn design_rejects_zero_order() {
    let out = cicdsp(&["design", "--n", "0", "--r", "16", "--m", "1", "--bin", "5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("n must be ≥ 1"));
}

#[test]
fn unknown_flags_and_help() {
    assert_eq!(code(&cicdsp(&["design", "--bogus"])), 2);
    assert_eq!(code(&cicdsp(&["frobnicate"])), 2);
    assert_eq!(code(&cicdsp(&[])), 2);
    for sub in ["design", "response", "simulate", "sdm", "noise-budget", "adders", "chain", "snr"] {
        let out = cicdsp(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("--"), "{sub}");
    }
}

#[test]
fn cic_response_curve() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok_json(&["response", "--filter", "cic", "--points", "4097", "--out", p(&a)]);
    ok_json(&["response", "--filter", "cic", "--points", "4097", "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("freq_hz,magnitude_db,phase_rad\n"));
    let rows = read_curve(&a);
    assert_eq!(rows.len(), 4097);
    assert_eq!(rows[0], (0.0, 0.0));
    let near = rows
        .iter()
        .min_by(|x, y| (x.0 - 22e3).abs().total_cmp(&(y.0 - 22e3).abs()))
        .unwrap();
    assert!((near.1 + 0.25).abs() <= 0.05, "{near:?}");
}

#[test]
fn response_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(code(&cicdsp(&["response", "--filter", "cic", "--points", "8", "--out", p(&out)])), 2);
    assert_eq!(code(&cicdsp(&["response", "--filter", "fancy", "--out", p(&out)])), 2);
    let fit = cicdsp(&["response", "--filter", "droop", "--order", "2", "--fpass", "40000", "--out", p(&out)]);
    assert_eq!(code(&fit), 1);
    assert!(stderr(&fit).contains("droop fit"));
}

#[test]
fn other_responses() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["hb1", "hb2", "droop", "chain"] {
        let out = dir.path().join(format!("{f}.csv"));
        let v = ok_json(&["response", "--filter", f, "--points", "257", "--out", p(&out)]);
        assert!(v["dc_db"].as_f64().unwrap().abs() < 1e-9, "{f}");
        assert_eq!(read_curve(&out).len(), 257);
    }
    let out = dir.path().join("hb.csv");
    ok_json(&["response", "--filter", "hb1", "--points", "1025", "--out", p(&out)]);
    let rows = read_curve(&out);
    let half = rows.iter().find(|r| r.0 == 96e3).unwrap();
    assert!((half.1 + 20.0 * 2f64.log10()).abs() < 1e-6, "{half:?}");
}

#[test]
fn simulate_identity_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("id.json");
    std::fs::write(&cfg, r#"{"input_rate_hz": 48000, "stages": []}"#).unwrap();
    let input = dir.path().join("in.csv");
    let output = dir.path().join("out.csv");
    let x: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
    write_stream(&input, 48e3, x.iter().copied());
    let v = ok_json(&["simulate", "--config", p(&cfg), "--in", p(&input), "--out", p(&output)]);
    assert_eq!(v["output_rate_hz"], 48000.0);
    assert_eq!(read_stream(&output), x);
}

#[test]
fn simulate_default_chain() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tone.csv");
    let output = dir.path().join("y.csv");
    let taps = dir.path().join("taps");
    let fs = 6.144e6;
    write_stream(&input, fs, (0..393_216).map(|i| 0.5 * (2.0 * PI * 1000.0 * i as f64 / fs).sin()));
    let v = ok_json(&["simulate", "--in", p(&input), "--out", p(&output), "--taps-dir", p(&taps)]);
    assert_eq!(v["output_rate_hz"], 48000.0);
    assert_eq!(v["total_decimation"], 128);
    assert_eq!(v["output_samples"], 3072);
    let rates: Vec<f64> = v["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["output_rate_hz"].as_f64().unwrap())
        .collect();
    assert_eq!(rates, [384e3, 192e3, 96e3, 48e3]);
    assert!(v["snr_db"].as_f64().unwrap() >= 90.0);
    assert_eq!(v["taps"].as_array().unwrap().len(), 3);
    assert!(taps.join("stage2_droop.csv").exists());
    assert_eq!(read_stream(&output).len(), 3072);

    let snr = ok_json(&["snr", "--in", p(&output), "--freq", "1000", "--skip", "384"]);
    assert_eq!(snr["snr_db"], v["snr_db"]);
}

#[test]
fn simulate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = dir.path().join("o.csv");
    let r = cicdsp(&["simulate", "--in", p(&missing), "--out", p(&out)]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("nope.csv"));

    let wrong = dir.path().join("wrong.csv");
    write_stream(&wrong, 48e3, (0..100).map(|_| 0.0));
    let r = cicdsp(&["simulate", "--in", p(&wrong), "--out", p(&out)]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("rate"));
}

#[test]
fn adders_verification() {
    let v = ok_json(&["adders", "--kind", "mcla", "--width", "8", "--mode", "exhaustive"]);
    assert_eq!(v["mismatches"], 0);
    assert_eq!(v["trials"], 1u64 << 17);
    let csa4 = ok_json(&["adders", "--kind", "csa", "--width", "4", "--mode", "exhaustive"]);
    assert_eq!(csa4["mismatches"], 0);
    let csa24 = ok_json(&["adders", "--kind", "csa", "--width", "24", "--trials", "2000"]);
    assert_eq!(csa24["mismatches"], 0);
    assert_eq!(csa4["depth"], csa24["depth"]);
    let a = cicdsp(&["adders", "--kind", "rcas", "--width", "25", "--trials", "5000", "--seed", "9"]);
    let b = cicdsp(&["adders", "--kind", "rcas", "--width", "25", "--trials", "5000", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&cicdsp(&["adders", "--kind", "rca", "--width", "20", "--mode", "exhaustive"])), 2);
    assert_eq!(code(&cicdsp(&["adders", "--kind", "nope", "--width", "4"])), 2);
}

#[test]
fn sdm_zero_input_gives_zero_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("codes.csv");
    let v = ok_json(&["sdm", "--order", "1", "--amp", "0", "--len", "4096", "--out", p(&out)]);
    assert_eq!(v["clip_count"], 0);
    let codes = read_stream(&out);
    assert_eq!(codes.len(), 4096);
    assert!(codes.iter().all(|&c| c == 0.0));
}

#[test]
fn sdm_order_one_slope() {
    let fs = 131_072.0;
    let osrs = [32.0f64, 64.0, 128.0, 256.0];
    let snr: Vec<f64> = osrs
        .iter()
        .map(|o| {
            let band = (fs / (2.0 * o)).to_string();
            let v = ok_json(&[
                "sdm", "--order", "1", "--bits", "4", "--fs", "131072", "--freq", "67", "--amp", "0.5", "--len",
                "131072", "--band", &band,
            ]);
            assert!((v["osr"].as_f64().unwrap() - o).abs() < 1e-9);
            v["snr_db"].as_f64().unwrap()
        })
        .collect();
    let xs: Vec<f64> = osrs.iter().map(|o| o.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, snr.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&snr).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / xs.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope - 9.0).abs() <= 1.5, "slope {slope}, snr {snr:?}");
}

#[test]
fn sdm_validation() {
    let r = cicdsp(&["sdm", "--amp", "1.5"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("full scale"));
    assert_eq!(code(&cicdsp(&["sdm", "--order", "0"])), 2);
}

#[test]
fn noise_budget_is_seeded() {
    let args = ["noise-budget", "--n", "3", "--r", "8", "--bin", "6", "--bout", "8", "--trials", "50000", "--seed", "4"];
    let a = cicdsp(&args);
    let b = cicdsp(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["monte_carlo"]["relative_error"].as_f64().unwrap().abs() < 0.1);

    let explicit = ok_json(&["noise-budget", "--discards", "0,0,0,0,0,0,0,0,0,0,9"]);
    assert_eq!(explicit["stage_widths"][10], 16);
    assert_eq!(code(&cicdsp(&["noise-budget", "--discards", "1,2"])), 2);
}

#[test]
fn chain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chain.json");
    let a = ok_json(&["chain", "--emit", p(&cfg)]);
    assert_eq!(a["output_rate_hz"], 48000.0);
    assert!(a["passband_deviation_db"].as_f64().unwrap() <= 0.1);
    let b = ok_json(&["chain", "--config", p(&cfg)]);
    assert_eq!(a["stages"], b["stages"]);
    assert_eq!(a["passband_deviation_db"], b["passband_deviation_db"]);

    std::fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(code(&cicdsp(&["chain", "--config", p(&cfg)])), 1);
}

#[test]
fn thread_cap() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_cicdsp"))
            .args(["noise-budget", "--trials", "40000", "--seed", "2"])
            .env("CICDSP_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(code(&run("zero")), 2);
}
