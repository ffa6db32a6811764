//! Frequency responses, SNR measurement and the CIC truncation-noise model.

mod noise;
mod response;
mod snr;

pub use noise::{
    hj_coefficients, monte_carlo_error, prune_stage_widths, truncation_budget, widths_from_discards,
    ErrorStats, NoiseBudget, StageNoise,
};
pub use response::{
    cic_power_response_approx, cic_power_response_exact, cic_power_response_normalized, cic_response,
    fir_response, linear_grid, stage_response, taps_response, ResponseCurve, StageKind,
};
pub use snr::{measure_snr, MIN_SNR_LEN, SIGNAL_HALF_WIDTH};

/// Magnitudes below this are reported as this value, in dB.
pub const NULL_FLOOR_DB: f64 = -400.0;

/// `amplitude · sin(2π freq n / rate)` for `n = 0..len`.
pub fn tone(amplitude: f64, freq: f64, rate: f64, len: usize) -> Vec<f64> {
    let w = 2.0 * std::f64::consts::PI * freq / rate;
    (0..len).map(|n| amplitude * (w * n as f64).sin()).collect()
}
