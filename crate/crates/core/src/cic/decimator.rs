use std::collections::VecDeque;

use super::{CicConfig, CicSample};
use crate::error::Result;

/// Running registers of a recursive CIC decimator.
///
/// N integrators run at the input rate; the phase counter starts at zero so
/// the first input of every block of R is kept; N combs with an M-deep delay
/// line run at the output rate.
#[derive(Clone, Debug)]
pub struct CicState<S> {
    cfg: CicConfig,
    widths: Vec<u32>,
    integrators: Vec<S>,
    combs: Vec<VecDeque<S>>,
    phase: usize,
}

impl<S: CicSample> CicState<S> {
    pub fn new(cfg: &CicConfig) -> Result<Self> {
        cfg.validate()?;
        let widths = cfg.widths();
        let n = cfg.n;
        Ok(Self {
            integrators: (0..n).map(|i| S::zero(widths[i])).collect(),
            combs: (0..n)
                .map(|j| std::iter::repeat_n(S::zero(widths[n + j]), cfg.m).collect())
                .collect(),
            widths,
            cfg: cfg.clone(),
            phase: 0,
        })
    }

    pub fn config(&self) -> &CicConfig {
        &self.cfg
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn integrators(&self) -> &[S] {
        &self.integrators
    }

    /// Feed one input sample; returns an output on phase-0 samples.
    pub fn push(&mut self, x: S) -> Result<Option<S>> {
        x.check_input(self.cfg.b_in)?;
        let n = self.cfg.n;
        let mut carry = x;
        for (i, reg) in self.integrators.iter_mut().enumerate() {
            *reg = reg.add(carry.into_stage(self.widths[i]));
            carry = *reg;
        }
        let keep = self.phase == 0;
        self.phase = (self.phase + 1) % self.cfg.r;
        if !keep {
            return Ok(None);
        }
        for (j, line) in self.combs.iter_mut().enumerate() {
            let v = carry.into_stage(self.widths[n + j]);
            let delayed = line.pop_front().expect("delay line holds M samples");
            line.push_back(v);
            carry = v.sub(delayed);
        }
        Ok(Some(carry.into_stage(self.widths[2 * n])))
    }

    pub fn decimate(&mut self, input: &[S]) -> Result<Vec<S>> {
        let mut out = Vec::with_capacity(input.len() / self.cfg.r + 1);
        for &x in input {
            if let Some(y) = self.push(x)? {
                out.push(y);
            }
        }
        Ok(out)
    }
}
