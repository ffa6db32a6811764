use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{GateNetwork, NetworkBuilder, Wire};
use super::{BitVector, CarrySignals};
use crate::error::{Error, Result};

/// Bits per lookahead group.
pub const GROUP_SIZE: usize = 4;

/// Widest exhaustive check, counted in network input bits.
const EXHAUSTIVE_INPUT_BITS: usize = 27;
const EXHAUSTIVE_MAX_WIDTH: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderKind {
    Ha,
    Pfa,
    Csa,
    Rca,
    Mcla,
    Rcas,
}

impl AdderKind {
    pub const ALL: [AdderKind; 6] = [
        AdderKind::Ha,
        AdderKind::Pfa,
        AdderKind::Csa,
        AdderKind::Rca,
        AdderKind::Mcla,
        AdderKind::Rcas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdderKind::Ha => "ha",
            AdderKind::Pfa => "pfa",
            AdderKind::Csa => "csa",
            AdderKind::Rca => "rca",
            AdderKind::Mcla => "mcla",
            AdderKind::Rcas => "rcas",
        }
    }
}

impl fmt::Display for AdderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdderKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownAdderKind(s.to_string()))
    }
}

struct Cells<'a>(&'a mut NetworkBuilder);

impl Cells<'_> {
    fn half(&mut self, a: Wire, b: Wire) -> (Wire, Wire) {
        let s = self.0.xor(a, b);
        let c = self.0.and(&[a, b]);
        (s, c)
    }

    fn majority(&mut self, a: Wire, b: Wire, c: Wire) -> Wire {
        let ab = self.0.and(&[a, b]);
        let ac = self.0.and(&[a, c]);
        let bc = self.0.and(&[b, c]);
        self.0.or(&[ab, ac, bc])
    }

    /// Sum-only cell (carry out left unconnected).
    fn spfa(&mut self, a: Wire, b: Wire, c: Wire) -> Wire {
        let t = self.0.xor(a, b);
        self.0.xor(t, c)
    }

    fn full(&mut self, a: Wire, b: Wire, c: Wire) -> (Wire, Wire) {
        let s = self.spfa(a, b, c);
        let co = self.majority(a, b, c);
        (s, co)
    }

    fn ripple(&mut self, a: &[Wire], b: &[Wire], cin: Wire) -> (Vec<Wire>, Wire) {
        let mut carry = cin;
        let sum = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let (s, c) = self.full(x, y, carry);
                carry = c;
                s
            })
            .collect();
        (sum, carry)
    }
}

fn build_network(kind: AdderKind, width: usize) -> GateNetwork {
    let mut nb = NetworkBuilder::new();
    let a = nb.inputs(width);
    let b = nb.inputs(width);
    match kind {
        AdderKind::Ha => {
            let mut cells = Cells(&mut nb);
            let (s, c): (Vec<_>, Vec<_>) = a.iter().zip(&b).map(|(&x, &y)| cells.half(x, y)).unzip();
            nb.output("s", s);
            nb.output("c", c);
        }
        AdderKind::Pfa | AdderKind::Csa => {
            let z = nb.inputs(width);
            let mut cells = Cells(&mut nb);
            let (s, c): (Vec<_>, Vec<_>) = (0..width).map(|i| cells.full(a[i], b[i], z[i])).unzip();
            if kind == AdderKind::Csa {
                let zero = nb.constant(false);
                let mut shifted = vec![zero];
                shifted.extend(c);
                nb.output("s", s);
                nb.output("c", shifted);
            } else {
                nb.output("s", s);
                nb.output("c", c);
            }
        }
        AdderKind::Rca => {
            let cin = nb.input();
            let (sum, cout) = Cells(&mut nb).ripple(&a, &b, cin);
            nb.output("sum", sum);
            nb.output("cout", vec![cout]);
        }
        AdderKind::Rcas => {
            let sub = nb.input();
            let b_inv: Vec<Wire> = b.iter().map(|&y| nb.xor(y, sub)).collect();
            let (sum, cout) = Cells(&mut nb).ripple(&a, &b_inv, sub);
            nb.output("sum", sum);
            nb.output("cout", vec![cout]);
        }
        AdderKind::Mcla => {
            let cin = nb.input();
            build_mcla(&mut nb, &a, &b, cin);
        }
    }
    nb.build()
}

/// Lookahead adder from 4-bit groups chained through group carries.
fn build_mcla(nb: &mut NetworkBuilder, a: &[Wire], b: &[Wire], cin: Wire) {
    let width = a.len();
    let padded = width.div_ceil(GROUP_SIZE) * GROUP_SIZE;
    let zero = nb.constant(false);
    let pad = |v: &[Wire]| -> Vec<Wire> {
        let mut v = v.to_vec();
        v.resize(padded, zero);
        v
    };
    let (a, b) = (pad(a), pad(b));

    let g: Vec<Wire> = (0..padded).map(|i| nb.and(&[a[i], b[i]])).collect();
    let p: Vec<Wire> = (0..padded).map(|i| nb.or(&[a[i], b[i]])).collect();

    // carries[i] is the carry into bit i
    let mut carries = Vec::with_capacity(padded + 1);
    let mut group_g = Vec::new();
    let mut group_p = Vec::new();
    let mut c0 = cin;
    for base in (0..padded).step_by(GROUP_SIZE) {
        carries.push(c0);
        // c_{k} = g_{k-1} + p_{k-1} g_{k-2} + ... + p_{k-1}..p_0 c0
        for k in 1..GROUP_SIZE {
            let mut terms = Vec::with_capacity(k + 1);
            for j in (0..k).rev() {
                let mut t: Vec<Wire> = ((j + 1)..k).rev().map(|m| p[base + m]).collect();
                t.push(g[base + j]);
                terms.push(nb.and(&t));
            }
            let mut t: Vec<Wire> = (0..k).rev().map(|m| p[base + m]).collect();
            t.push(c0);
            terms.push(nb.and(&t));
            let c = nb.or(&terms);
            carries.push(c);
        }
        let pg_in: Vec<Wire> = (0..GROUP_SIZE).rev().map(|m| p[base + m]).collect();
        let pg = nb.and(&pg_in);
        let mut gg_terms = Vec::with_capacity(GROUP_SIZE);
        for j in (0..GROUP_SIZE).rev() {
            let mut t: Vec<Wire> = ((j + 1)..GROUP_SIZE).rev().map(|m| p[base + m]).collect();
            t.push(g[base + j]);
            gg_terms.push(nb.and(&t));
        }
        let gg = nb.or(&gg_terms);
        let pc = nb.and(&[pg, c0]);
        c0 = nb.or(&[gg, pc]);
        group_g.push(gg);
        group_p.push(pg);
    }
    carries.push(c0);

    let mut cells = Cells(nb);
    let sum: Vec<Wire> = (0..width).map(|i| cells.spfa(a[i], b[i], carries[i])).collect();
    nb.output("sum", sum);
    nb.output("cout", vec![carries[width]]);
    nb.output("g", g);
    nb.output("p", p);
    nb.output("group_g", group_g);
    nb.output("group_p", group_p);
}

/// A constructed adder network of one kind and width.
#[derive(Clone, Debug)]
pub struct Adder {
    kind: AdderKind,
    width: usize,
    net: GateNetwork,
}

impl Adder {
    pub fn new(kind: AdderKind, width: usize) -> Result<Self> {
        if width == 0 || width > 64 {
            return Err(Error::OperandWidths(vec![width]));
        }
        Ok(Self {
            kind,
            width,
            net: build_network(kind, width),
        })
    }

    pub fn kind(&self) -> AdderKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn network(&self) -> &GateNetwork {
        &self.net
    }

    pub fn depth(&self) -> usize {
        self.net.depth()
    }

    fn third_operand_bits(&self) -> usize {
        match self.kind {
            AdderKind::Ha => 0,
            AdderKind::Pfa | AdderKind::Csa => self.width,
            AdderKind::Rca | AdderKind::Mcla | AdderKind::Rcas => 1,
        }
    }

    fn mask(&self) -> u128 {
        (1u128 << self.width) - 1
    }

    /// Integer the network is supposed to produce for the given operands.
    fn expected(&self, a: u64, b: u64, z: u64) -> u128 {
        let (a, b, z) = (a as u128, b as u128, z as u128);
        match self.kind {
            AdderKind::Ha => a + b,
            AdderKind::Pfa | AdderKind::Csa | AdderKind::Rca | AdderKind::Mcla => a + b + z,
            AdderKind::Rcas => {
                if z == 1 {
                    a + (!b & self.mask()) + 1
                } else {
                    a + b
                }
            }
        }
    }

    /// Integer read off the network outputs.
    fn produced(&self, e: &super::network::Evaluation<'_>, lane: u32) -> u128 {
        match self.kind {
            AdderKind::Ha | AdderKind::Pfa => e.bus_value("s", lane) + 2 * e.bus_value("c", lane),
            AdderKind::Csa => e.bus_value("s", lane) + e.bus_value("c", lane),
            AdderKind::Rca | AdderKind::Mcla | AdderKind::Rcas => {
                e.bus_value("sum", lane) + (e.bus_value("cout", lane) << self.width)
            }
        }
    }

    fn pack(&self, ops: &[(u64, u64, u64)]) -> Vec<u64> {
        let w = self.width;
        let mut lanes = vec![0u64; self.net.input_count()];
        for (j, &(a, b, z)) in ops.iter().enumerate() {
            for i in 0..w {
                lanes[i] |= ((a >> i) & 1) << j;
                lanes[w + i] |= ((b >> i) & 1) << j;
            }
            for i in 0..self.third_operand_bits() {
                lanes[2 * w + i] |= ((z >> i) & 1) << j;
            }
        }
        lanes
    }

    /// Count operand triples where the network disagrees with integer
    /// arithmetic. At most 64 triples per call.
    fn mismatches(&self, ops: &[(u64, u64, u64)]) -> u64 {
        debug_assert!(ops.len() <= 64);
        let e = self.net.eval_lanes(&self.pack(ops));
        ops.iter()
            .enumerate()
            .filter(|(j, &(a, b, z))| self.produced(&e, *j as u32) != self.expected(a, b, z))
            .count() as u64
    }

    fn eval_one(&self, a: u64, b: u64, z: u64) -> super::network::Evaluation<'_> {
        self.net.eval_lanes(&self.pack(&[(a, b, z)]))
    }
}

fn equal_widths(vs: &[&BitVector]) -> Result<usize> {
    let w = vs[0].width();
    if vs.iter().any(|v| v.width() != w) {
        return Err(Error::OperandWidths(vs.iter().map(|v| v.width()).collect()));
    }
    Ok(w)
}

fn bus(e: &super::network::Evaluation<'_>, name: &str) -> BitVector {
    BitVector::new(e.bus(name, 0)).expect("non-empty bus")
}

/// Three operands in, sum and shifted-carry vectors out (`s + c = x + y + z`).
pub fn csa_compress(x: &BitVector, y: &BitVector, z: &BitVector) -> Result<(BitVector, BitVector)> {
    let w = equal_widths(&[x, y, z])?;
    let adder = Adder::new(AdderKind::Csa, w)?;
    let e = adder.eval_one(x.to_u64(), y.to_u64(), z.to_u64());
    Ok((bus(&e, "s"), bus(&e, "c")))
}

pub fn rca_add(a: &BitVector, b: &BitVector, cin: bool) -> Result<(BitVector, bool)> {
    let w = equal_widths(&[a, b])?;
    let adder = Adder::new(AdderKind::Rca, w)?;
    let e = adder.eval_one(a.to_u64(), b.to_u64(), cin as u64);
    Ok((bus(&e, "sum"), e.bus("cout", 0)[0]))
}

pub fn mcla_add(a: &BitVector, b: &BitVector, cin: bool) -> Result<(BitVector, bool, Vec<CarrySignals>)> {
    let w = equal_widths(&[a, b])?;
    let adder = Adder::new(AdderKind::Mcla, w)?;
    let e = adder.eval_one(a.to_u64(), b.to_u64(), cin as u64);
    let (g, p) = (e.bus("g", 0), e.bus("p", 0));
    let (gg, pg) = (e.bus("group_g", 0), e.bus("group_p", 0));
    let groups = (0..gg.len())
        .map(|k| {
            let r = k * GROUP_SIZE..(k + 1) * GROUP_SIZE;
            CarrySignals {
                g: g[r.clone()].to_vec(),
                p: p[r].to_vec(),
                group_g: gg[k],
                group_p: pg[k],
            }
        })
        .collect();
    Ok((bus(&e, "sum"), e.bus("cout", 0)[0], groups))
}

/// Ripple-carry adder/subtractor: `sub` inverts `b` and feeds carry-in.
pub fn rcas(a: &BitVector, b: &BitVector, sub: bool) -> Result<(BitVector, bool)> {
    let w = equal_widths(&[a, b])?;
    let adder = Adder::new(AdderKind::Rcas, w)?;
    let e = adder.eval_one(a.to_u64(), b.to_u64(), sub as u64);
    Ok((bus(&e, "sum"), e.bus("cout", 0)[0]))
}

pub fn logic_depth(kind: AdderKind, width: usize) -> Result<usize> {
    Ok(Adder::new(kind, width)?.depth())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Random { trials: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub kind: AdderKind,
    pub width: usize,
    pub depth: usize,
    pub equivalence_trials: u64,
    pub mismatches: u64,
}

/// Check an adder network against integer arithmetic.
pub fn verify(kind: AdderKind, width: usize, mode: VerifyMode) -> Result<EquivalenceReport> {
    let adder = Adder::new(kind, width)?;
    let w = width as u32;
    let third = adder.third_operand_bits() as u32;
    let (trials, mismatches) = match mode {
        VerifyMode::Exhaustive => {
            let bits = adder.net.input_count();
            if width > EXHAUSTIVE_MAX_WIDTH || bits > EXHAUSTIVE_INPUT_BITS {
                return Err(Error::ExhaustiveTooLarge {
                    kind: kind.to_string(),
                    width,
                });
            }
            let total = 1u64 << bits;
            let lo_mask = (1u64 << w) - 1;
            let third_mask = (1u64 << third) - 1;
            let decode = |i: u64| (i & lo_mask, (i >> w) & lo_mask, (i >> (2 * w)) & third_mask);
            let mismatches: u64 = (0..total.div_ceil(64))
                .into_par_iter()
                .map(|chunk| {
                    let ops: Vec<_> = (chunk * 64..((chunk + 1) * 64).min(total)).map(decode).collect();
                    adder.mismatches(&ops)
                })
                .sum();
            (total, mismatches)
        }
        VerifyMode::Random { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lo_mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
            let third_mask = if third == 64 { u64::MAX } else { (1u64 << third) - 1 };
            let mut mismatches = 0;
            let mut done = 0;
            while done < trials {
                let n = (trials - done).min(64) as usize;
                let ops: Vec<_> = (0..n)
                    .map(|_| {
                        (
                            rng.gen::<u64>() & lo_mask,
                            rng.gen::<u64>() & lo_mask,
                            rng.gen::<u64>() & third_mask,
                        )
                    })
                    .collect();
                mismatches += adder.mismatches(&ops);
                done += n as u64;
            }
            (trials, mismatches)
        }
    };
    Ok(EquivalenceReport {
        kind,
        width,
        depth: adder.depth(),
        equivalence_trials: trials,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixword::FixedWord;

    fn bv(v: u64, w: usize) -> BitVector {
        BitVector::from_u64(v, w).unwrap()
    }

    #[test]
    fn csa_examples() {
        let (s, c) = csa_compress(&bv(1, 1), &bv(1, 1), &bv(1, 1)).unwrap();
        assert_eq!((s.to_u64(), c.to_u64()), (1, 2));
        let (s, c) = csa_compress(&bv(5, 3), &bv(3, 3), &bv(6, 3)).unwrap();
        assert_eq!((s.to_u64(), c.to_u64()), (0, 14));
        assert_eq!(c.width(), 4);
        let (s, c) = csa_compress(&bv(0, 3), &bv(0, 3), &bv(0, 3)).unwrap();
        assert_eq!((s.to_u64(), c.to_u64()), (0, 0));
        assert!(csa_compress(&bv(0, 3), &bv(0, 4), &bv(0, 3)).is_err());
    }

    #[test]
    fn rca_examples() {
        let (s, c) = rca_add(&bv(7, 4), &bv(8, 4), false).unwrap();
        assert_eq!((s.to_u64(), c), (15, false));
        let (s, c) = rca_add(&bv(15, 4), &bv(1, 4), false).unwrap();
        assert_eq!((s.to_u64(), c), (0, true));
        assert!(rca_add(&bv(0, 4), &bv(0, 5), false).is_err());
    }

    #[test]
    fn mcla_examples() {
        let (s, c, groups) = mcla_add(
            &BitVector::from_msb_str("1111").unwrap(),
            &BitVector::from_msb_str("0001").unwrap(),
            false,
        )
        .unwrap();
        assert_eq!((s.to_u64(), c), (0, true));
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].g, vec![true, false, false, false]);
        assert_eq!(groups[0].p, vec![true; 4]);
        assert!(groups[0].group_p && groups[0].group_g);

        let (s, c, groups) = mcla_add(&bv(0, 4), &bv(0, 4), false).unwrap();
        assert_eq!((s.to_u64(), c), (0, false));
        assert!(!groups[0].group_p && !groups[0].group_g);
    }

    #[test]
    fn mcla_pads_odd_widths() {
        let (s, c, groups) = mcla_add(&bv(0b11111, 5), &bv(1, 5), false).unwrap();
        assert_eq!((s.to_u64(), c), (0, true));
        assert_eq!(groups.len(), 2);
        let (s, c, _) = mcla_add(&bv(0b10110, 5), &bv(0b00111, 5), true).unwrap();
        assert_eq!((s.to_u64(), c), (0b11110, false));
    }

    #[test]
    fn rcas_examples() {
        assert_eq!(rcas(&bv(5, 4), &bv(3, 4), true).unwrap().0.to_u64(), 2);
        assert_eq!(rcas(&bv(5, 4), &bv(3, 4), false).unwrap().0.to_u64(), 8);
        let (r, _) = rcas(&bv(0, 4), &bv(1, 4), true).unwrap();
        assert_eq!(format!("{r:?}"), "BitVector(1111)");
    }

    #[test]
    fn rcas_subtract_matches_wrap_sub() {
        for width in 1..=8u32 {
            let adder = Adder::new(AdderKind::Rcas, width as usize).unwrap();
            let (lo, hi) = FixedWord::range(width).unwrap();
            for a in lo..=hi {
                for b in lo..=hi {
                    let (fa, fb) = (
                        FixedWord::from_integer(a, width).unwrap(),
                        FixedWord::from_integer(b, width).unwrap(),
                    );
                    let e = adder.eval_one(fa.bits(), fb.bits(), 1);
                    let got = FixedWord::from_bits(e.bus_value("sum", 0) as u64, width).unwrap();
                    assert_eq!(got, fa.wrap_sub(fb).unwrap());
                }
            }
        }
    }

    #[test]
    fn exhaustive_equivalence_small_widths() {
        for kind in AdderKind::ALL {
            for width in 1..=4 {
                let r = verify(kind, width, VerifyMode::Exhaustive).unwrap();
                assert_eq!(r.mismatches, 0, "{kind} width {width}");
            }
        }
        for kind in [AdderKind::Rca, AdderKind::Mcla, AdderKind::Rcas, AdderKind::Ha] {
            for width in 5..=8 {
                let r = verify(kind, width, VerifyMode::Exhaustive).unwrap();
                assert_eq!(r.mismatches, 0, "{kind} width {width}");
                assert!(r.equivalence_trials >= 1 << (2 * width));
            }
        }
    }

    #[test]
    fn random_equivalence_width_25() {
        for kind in AdderKind::ALL {
            let r = verify(kind, 25, VerifyMode::Random { trials: 100_000, seed: 3 }).unwrap();
            assert_eq!(r.mismatches, 0, "{kind}");
            assert_eq!(r.equivalence_trials, 100_000);
        }
    }

    #[test]
    fn broken_network_is_caught() {
        // swap sum for carry on one bit and make sure verify notices
        let mut adder = Adder::new(AdderKind::Rca, 3).unwrap();
        let mut nb = NetworkBuilder::new();
        let a = nb.inputs(3);
        let b = nb.inputs(3);
        let cin = nb.input();
        let (mut sum, cout) = Cells(&mut nb).ripple(&a, &b, cin);
        sum[1] = cout;
        nb.output("sum", sum);
        nb.output("cout", vec![cout]);
        adder.net = nb.build();
        let ops: Vec<_> = (0..64u64).map(|i| (i & 7, (i >> 3) & 7, 0)).collect();
        assert!(adder.mismatches(&ops) > 0);
    }

    #[test]
    fn depth_examples() {
        assert_eq!(logic_depth(AdderKind::Ha, 1).unwrap(), 1);
        let pfa = logic_depth(AdderKind::Pfa, 1).unwrap();
        for w in 1..=32 {
            assert_eq!(logic_depth(AdderKind::Csa, w).unwrap(), pfa);
        }
        let mut prev = 0;
        for w in 1..=32 {
            let d = logic_depth(AdderKind::Rca, w).unwrap();
            assert!(d > prev);
            prev = d;
        }
        assert!(logic_depth(AdderKind::Rca, 25).unwrap() > logic_depth(AdderKind::Mcla, 25).unwrap());
        assert!(logic_depth(AdderKind::Rca, 0).is_err());
    }

    #[test]
    fn depth_matches_longest_path_oracle() {
        // independent DFS over the gate list
        fn longest(net: &GateNetwork) -> usize {
            fn go(net: &GateNetwork, i: usize, memo: &mut Vec<Option<usize>>) -> usize {
                if let Some(d) = memo[i] {
                    return d;
                }
                use crate::bitarith::Gate;
                let d = match &net.gates()[i] {
                    Gate::Input(_) | Gate::Const(_) => 0,
                    Gate::Not(w) => 1 + go(net, w.index(), memo),
                    Gate::And(ws) | Gate::Or(ws) | Gate::Xor(ws) => {
                        1 + ws.iter().map(|w| go(net, w.index(), memo)).max().unwrap()
                    }
                };
                memo[i] = Some(d);
                d
            }
            let mut memo = vec![None; net.gates().len()];
            (0..net.gates().len()).map(|i| go(net, i, &mut memo)).max().unwrap()
        }
        for kind in [AdderKind::Rca, AdderKind::Mcla] {
            let a = Adder::new(kind, 25).unwrap();
            assert_eq!(a.depth(), longest(a.network()));
        }
    }

    #[test]
    fn exhaustive_guard() {
        assert!(matches!(
            verify(AdderKind::Rca, 20, VerifyMode::Exhaustive),
            Err(Error::ExhaustiveTooLarge { .. })
        ));
        assert!(matches!(
            verify(AdderKind::Csa, 12, VerifyMode::Exhaustive),
            Err(Error::ExhaustiveTooLarge { .. })
        ));
        assert_eq!("MCLA".parse::<AdderKind>().unwrap(), AdderKind::Mcla);
        assert!("cla".parse::<AdderKind>().is_err());
    }
}
