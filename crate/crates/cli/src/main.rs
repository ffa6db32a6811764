//! `cicdsp`: design, analyze and simulate CIC decimation chains.
//!
//! Summaries go to stdout as JSON, curves and streams to CSV files. Exit
//! status is 0 on success, 1 on runtime or verification failure and 2 on
//! usage errors.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn runtime(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "cicdsp", version, about = "Fixed-point CIC decimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Size a CIC filter: register width, growth and pruned stage widths.
    Design(DesignArgs),
    /// Write a frequency response curve as CSV.
    Response(ResponseArgs),
    /// Run a CSV stream through a decimation chain.
    Simulate(SimulateArgs),
    /// Run the sigma-delta modulator on a test tone.
    Sdm(SdmArgs),
    /// Per-stage truncation noise, optionally checked by Monte-Carlo.
    NoiseBudget(NoiseArgs),
    /// Verify a gate-level adder against integer arithmetic.
    Adders(AdderArgs),
    /// Describe a chain configuration (the default one unless given).
    Chain(ChainArgs),
    /// Measure in-band SNR of a CSV stream.
    Snr(SnrArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CicArgs {
    /// Filter order (number of integrator/comb pairs).
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Decimation ratio.
    #[arg(long, default_value_t = 16)]
    pub r: usize,
    /// Differential delay.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Input word width in bits.
    #[arg(long = "bin", default_value_t = 5)]
    pub b_in: u32,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub cic: CicArgs,
    /// Output word width; stages are pruned towards it. Defaults to the
    /// full register width (no pruning).
    #[arg(long = "bout")]
    pub b_out: Option<u32>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Cic,
    Hb1,
    Hb2,
    Droop,
    Chain,
}

#[derive(Args, Debug)]
pub struct ResponseArgs {
    #[arg(long, value_enum)]
    pub filter: FilterKind,
    /// Number of grid points from 0 to `--fmax`.
    #[arg(long, default_value_t = 4097)]
    pub points: usize,
    /// Input sample rate of the filter in Hz. Each filter has its own default.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Top of the grid in Hz; defaults to fs/2.
    #[arg(long)]
    pub fmax: Option<f64>,
    /// Half-band or droop corrector order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Passband edge in Hz for half-band and droop designs.
    #[arg(long)]
    pub fpass: Option<f64>,
    /// Droop corrector stopband edge in Hz.
    #[arg(long)]
    pub fstop: Option<f64>,
    #[command(flatten)]
    pub cic: CicArgs,
    /// Chain configuration JSON for `--filter chain`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Chain configuration JSON; the default chain when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input stream CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output stream CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory to write the designed FIR taps into.
    #[arg(long)]
    pub taps_dir: Option<PathBuf>,
    /// Test tone frequency used for the SNR figure.
    #[arg(long, default_value_t = 1000.0)]
    pub freq: f64,
    /// Upper band edge in Hz for the SNR figure, capped at the output Nyquist.
    #[arg(long, default_value_t = 20e3)]
    pub band: f64,
}

#[derive(Args, Debug)]
pub struct SdmArgs {
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Quantizer bits.
    #[arg(long, default_value_t = 5)]
    pub bits: u32,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 6.144e6)]
    pub fs: f64,
    /// Tone frequency in Hz.
    #[arg(long, default_value_t = 1000.0)]
    pub freq: f64,
    /// Tone amplitude; must not exceed full scale.
    #[arg(long, default_value_t = 0.5)]
    pub amp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub full_scale: f64,
    /// Signal band in Hz for SNR and OSR.
    #[arg(long, default_value_t = 20e3)]
    pub band: f64,
    /// Number of samples.
    #[arg(long, default_value_t = 1 << 18)]
    pub len: usize,
    /// Code stream CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub cic: CicArgs,
    /// Output word width.
    #[arg(long = "bout", default_value_t = 16)]
    pub b_out: u32,
    /// Explicit comma-separated discard bits for all 2N+1 stages instead of
    /// pruning towards `--bout`.
    #[arg(long, value_delimiter = ',')]
    pub discards: Option<Vec<u32>>,
    /// Monte-Carlo outputs to simulate; 0 skips the check.
    #[arg(long, default_value_t = 0)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Random,
}

#[derive(Args, Debug)]
pub struct AdderArgs {
    /// ha, pfa, csa, rca, mcla or rcas.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub width: usize,
    #[arg(long, value_enum, default_value_t = Mode::Random)]
    pub mode: Mode,
    /// Random trials.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ChainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the configuration JSON here.
    #[arg(long)]
    pub emit: Option<PathBuf>,
    /// Upper edge in Hz of the passband deviation figure.
    #[arg(long, default_value_t = 20e3)]
    pub band: f64,
}

#[derive(Args, Debug)]
pub struct SnrArgs {
    /// Stream CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Tone frequency in Hz.
    #[arg(long)]
    pub freq: f64,
    /// Band edge in Hz.
    #[arg(long, default_value_t = 20e3)]
    pub band: f64,
    /// Samples to skip at the start (filter settling).
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CICDSP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("CICDSP_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(runtime)
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Design(a) => commands::design(&a),
        Command::Response(a) => commands::response(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sdm(a) => commands::sdm(&a),
        Command::NoiseBudget(a) => commands::noise_budget(&a),
        Command::Adders(a) => commands::adders(&a),
        Command::Chain(a) => commands::chain(&a),
        Command::Snr(a) => commands::snr(&a),
    }
}

/// Write `v` to stdout; a closed pipe is not an error.
pub fn print_json(v: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
