//! Bit-exact fixed-point CIC decimation, sigma-delta modulation, multirate
//! FIR stages and the analysis around them.
//!
//! The integer datapath (`fixword`, `bitarith`, `cic`) is exact. The
//! modulator, FIR filters and spectral measurements are generic over
//! [`scalar::Real`]; the aliases below fix them to `f64` or `f32`.

pub mod analysis;
pub mod bitarith;
pub mod chain;
pub mod cic;
pub mod error;
pub mod fir;
pub mod fixword;
pub mod scalar;
pub mod sdm;

pub use error::{Error, Result};

pub type FirFilter64 = fir::FirFilter<f64>;
pub type FirFilter32 = fir::FirFilter<f32>;
pub type SignalStream64 = chain::SignalStream<f64>;
pub type SignalStream32 = chain::SignalStream<f32>;
pub type ChainRun64 = chain::ChainRun<f64>;
pub type SdmState64 = sdm::SdmState<f64>;
pub type SdmRun64 = sdm::SdmRun<f64>;
