use super::{CicConfig, CicSample};
use crate::error::{Error, Result};

/// Non-recursive CIC decimator for `R = 2^S`, `M = 1`.
///
/// Uses `H(z) = prod_{s<S} (1 + z^{-2^s})^N`: each of the S stages applies
/// `(1 + z^-1)^N` as N two-tap sums and then keeps every other sample. All
/// arithmetic runs at the full register width.
pub fn decimate_nonrecursive<S: CicSample>(cfg: &CicConfig, input: &[S]) -> Result<Vec<S>> {
    cfg.validate()?;
    if !cfg.r.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(cfg.r));
    }
    if cfg.m != 1 {
        return Err(Error::InvalidCic("non-recursive form requires m = 1".into()));
    }
    let width = cfg.register_width();
    let mut signal = input
        .iter()
        .map(|x| {
            x.check_input(cfg.b_in)?;
            Ok(x.into_stage(width))
        })
        .collect::<Result<Vec<S>>>()?;
    for _ in 0..cfg.r.trailing_zeros() {
        for _ in 0..cfg.n {
            let mut prev = S::zero(width);
            for v in signal.iter_mut() {
                let cur = *v;
                *v = cur.add(prev);
                prev = cur;
            }
        }
        signal = signal.into_iter().step_by(2).collect();
    }
    Ok(signal
        .into_iter()
        .map(|v| v.into_stage(cfg.output_width()))
        .collect())
}
