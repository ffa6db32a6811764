//! Floating-point scalar abstraction for the real-valued parts of the toolkit.
//!
//! The modulator, FIR machinery and spectral analysis run over any [`Real`]
//! type. The decimation datapath itself is integer and lives in
//! [`crate::fixword`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Debug + Display + Default
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `10·log10(power)` with the null floor applied.
pub fn power_db<T: Real>(power: T) -> T {
    let floor = T::of(crate::analysis::NULL_FLOOR_DB);
    if power <= T::zero() {
        return floor;
    }
    let db = T::of(10.0) * power.log10();
    if db < floor {
        floor
    } else {
        db
    }
}
