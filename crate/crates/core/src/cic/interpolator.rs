use super::{upsample, CicConfig, CicSample};
use crate::error::Result;

/// CIC interpolator: N combs at the low rate, zero-stuffing by R, then N
/// integrators at the high rate. Emits R outputs per input.
pub fn interpolate<S: CicSample>(cfg: &CicConfig, input: &[S]) -> Result<Vec<S>> {
    cfg.validate()?;
    let width = cfg.register_width();
    let mut signal = input
        .iter()
        .map(|x| {
            x.check_input(cfg.b_in)?;
            Ok(x.into_stage(width))
        })
        .collect::<Result<Vec<S>>>()?;
    for _ in 0..cfg.n {
        let mut line = std::collections::VecDeque::from(vec![S::zero(width); cfg.m]);
        for v in signal.iter_mut() {
            let delayed = line.pop_front().expect("M-deep delay");
            line.push_back(*v);
            *v = v.sub(delayed);
        }
    }
    let mut signal = upsample(&signal, cfg.r, S::zero(width))?;
    for _ in 0..cfg.n {
        let mut acc = S::zero(width);
        for v in signal.iter_mut() {
            acc = acc.add(*v);
            *v = acc;
        }
    }
    Ok(signal)
}
