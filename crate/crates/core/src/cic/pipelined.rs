use std::collections::VecDeque;

use serde::Serialize;

use super::{CicConfig, CicSample, CicState};
use crate::error::Result;

/// Extra delay introduced by pipeline registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Latency {
    pub output_samples: usize,
    pub input_cycles: usize,
}

/// Cycle-accurate CIC decimator with a register between every stage.
///
/// Integrators read the previous stage's register from the last clock, so
/// integrator `i` lags the unpipelined chain by `i` cycles; the downsampler
/// phase is shifted by `N − 1` to compensate. At the low rate the captured
/// sample and every comb output sit in a register, adding N output samples
/// of delay. With pipelining disabled this is the plain recursive decimator.
#[derive(Clone, Debug)]
pub struct PipelinedCic<S> {
    cfg: CicConfig,
    enabled: bool,
    widths: Vec<u32>,
    integrators: Vec<S>,
    // regs[0] is the downsampler register, regs[j + 1] follows comb j
    regs: Vec<S>,
    delays: Vec<VecDeque<S>>,
    cycle: usize,
    plain: CicState<S>,
}

impl<S: CicSample> PipelinedCic<S> {
    pub fn new(cfg: &CicConfig, enabled: bool) -> Result<Self> {
        let plain = CicState::new(cfg)?;
        let widths = cfg.widths();
        let n = cfg.n;
        Ok(Self {
            integrators: (0..n).map(|i| S::zero(widths[i])).collect(),
            regs: (0..=n).map(|j| S::zero(widths[n + j])).collect(),
            delays: (0..n)
                .map(|j| std::iter::repeat_n(S::zero(widths[n + j]), cfg.m).collect())
                .collect(),
            widths,
            cfg: cfg.clone(),
            enabled,
            cycle: 0,
            plain,
        })
    }

    pub fn latency(&self) -> Latency {
        if self.enabled {
            let n = self.cfg.n;
            Latency {
                output_samples: n,
                input_cycles: n * self.cfg.r + n - 1,
            }
        } else {
            Latency {
                output_samples: 0,
                input_cycles: 0,
            }
        }
    }

    fn clock(&mut self, x: S) -> Result<Option<S>> {
        x.check_input(self.cfg.b_in)?;
        let n = self.cfg.n;
        let old = self.integrators.clone();
        for i in 0..n {
            let feed = if i == 0 { x } else { old[i - 1] };
            self.integrators[i] = old[i].add(feed.into_stage(self.widths[i]));
        }
        let t = self.cycle;
        self.cycle += 1;
        if t < n - 1 || !(t - (n - 1)).is_multiple_of(self.cfg.r) {
            return Ok(None);
        }
        let old = self.regs.clone();
        self.regs[0] = self.integrators[n - 1].into_stage(self.widths[n]);
        for j in 0..n {
            let v = old[j].into_stage(self.widths[n + j]);
            let line = &mut self.delays[j];
            let delayed = line.pop_front().expect("delay line holds M samples");
            line.push_back(v);
            let w = if j + 1 < n { self.widths[n + j + 1] } else { self.widths[2 * n] };
            self.regs[j + 1] = v.sub(delayed).into_stage(w);
        }
        Ok(Some(self.regs[n]))
    }

    /// Clock in a block of input samples; state carries over between calls.
    pub fn decimate_pipelined(&mut self, input: &[S]) -> Result<(Vec<S>, Latency)> {
        if !self.enabled {
            return Ok((self.plain.decimate(input)?, self.latency()));
        }
        let mut out = Vec::with_capacity(input.len() / self.cfg.r + 1);
        for &x in input {
            if let Some(y) = self.clock(x)? {
                out.push(y);
            }
        }
        Ok((out, self.latency()))
    }
}
