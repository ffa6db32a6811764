//! Gate-level adder and subtractor models.
//!
//! Every architecture is built as a [`GateNetwork`] and evaluated gate by
//! gate, so the functional results and the logic depth come from the same
//! structure. Propagate is `p_i = a_i OR b_i`; sums still use XOR.

mod adders;
pub mod network;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adders::{
    csa_compress, logic_depth, mcla_add, rca_add, rcas, verify, Adder, AdderKind,
    EquivalenceReport, VerifyMode, GROUP_SIZE,
};
pub use network::{Gate, GateNetwork, NetworkBuilder, Wire};

/// Fixed-width bit vector, index 0 = LSB.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::OperandWidths(vec![0]));
        }
        Ok(Self { bits })
    }

    pub fn from_u64(value: u64, width: usize) -> Result<Self> {
        if width == 0 || width > 64 {
            return Err(Error::OperandWidths(vec![width]));
        }
        if width < 64 && value >> width != 0 {
            return Err(Error::BitVectorRange { value, width });
        }
        Ok(Self {
            bits: (0..width).map(|i| (value >> i) & 1 == 1).collect(),
        })
    }

    /// Parse 0/1 digits written MSB first, e.g. `"0101"`.
    pub fn from_msb_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::NotABit(other as u8)),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn to_u128(&self) -> u128 {
        self.bits
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as u128) << i)
            .sum()
    }

    pub fn to_u64(&self) -> u64 {
        self.to_u128() as u64
    }
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = self.bits.iter().rev().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "BitVector({s})")
    }
}

/// Generate/propagate signals of one 4-bit lookahead group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarrySignals {
    pub g: Vec<bool>,
    pub p: Vec<bool>,
    pub group_g: bool,
    pub group_p: bool,
}

fn bit(v: u8) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::NotABit(other)),
    }
}

/// Half adder: `(a XOR b, a AND b)`.
pub fn ha(a: u8, b: u8) -> Result<(u8, u8)> {
    let (a, b) = (bit(a)?, bit(b)?);
    Ok(((a ^ b) as u8, (a & b) as u8))
}

/// Full adder cell with carry out.
pub fn pfa(a: u8, b: u8, cin: u8) -> Result<(u8, u8)> {
    let (a, b, c) = (bit(a)?, bit(b)?, bit(cin)?);
    let s = a ^ b ^ c;
    let cout = (a & b) | (a & c) | (b & c);
    Ok((s as u8, cout as u8))
}
