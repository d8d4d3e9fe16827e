//! QR code versions 1–4, byte mode only.

mod decode;
mod encode;
pub mod layout;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::SymbologyError;

pub use decode::decode_qr;
pub use encode::{encode_qr, encode_qr_with_mask, penalty_score};
pub use layout::{byte_capacity, codeword_modules, BlockSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EcLevel {
    L,
    M,
    Q,
    H,
}

impl EcLevel {
    pub const ALL: [EcLevel; 4] = [EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H];

    pub fn ordinal(self) -> usize {
        match self {
            EcLevel::L => 0,
            EcLevel::M => 1,
            EcLevel::Q => 2,
            EcLevel::H => 3,
        }
    }

    /// Two-bit value carried in the format information.
    pub fn format_bits(self) -> u8 {
        match self {
            EcLevel::L => 0b01,
            EcLevel::M => 0b00,
            EcLevel::Q => 0b11,
            EcLevel::H => 0b10,
        }
    }

    pub fn from_format_bits(bits: u8) -> EcLevel {
        match bits & 0b11 {
            0b01 => EcLevel::L,
            0b00 => EcLevel::M,
            0b11 => EcLevel::Q,
            _ => EcLevel::H,
        }
    }
}

impl fmt::Display for EcLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EcLevel::L => "L",
            EcLevel::M => "M",
            EcLevel::Q => "Q",
            EcLevel::H => "H",
        })
    }
}

impl FromStr for EcLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "L" => Ok(EcLevel::L),
            "M" => Ok(EcLevel::M),
            "Q" => Ok(EcLevel::Q),
            "H" => Ok(EcLevel::H),
            other => Err(format!("unknown EC level {other:?}, expected L, M, Q or H")),
        }
    }
}

/// Square grid of modules, row-major, `true` = dark.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    size: usize,
    bits: Vec<bool>,
}

impl BitMatrix {
    /// A light matrix of a supported size (21, 25, 29 or 33).
    pub fn new(size: usize) -> Result<BitMatrix, SymbologyError> {
        layout::version_for_size(size).ok_or(SymbologyError::UnsupportedVersion(size))?;
        Ok(BitMatrix {
            size,
            bits: vec![false; size * size],
        })
    }

    pub fn from_bits(size: usize, bits: Vec<bool>) -> Result<BitMatrix, SymbologyError> {
        if bits.len() != size * size {
            return Err(SymbologyError::BadImage(format!(
                "{} modules do not form a {size}x{size} square",
                bits.len()
            )));
        }
        let mut m = BitMatrix::new(size)?;
        m.bits = bits;
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn version(&self) -> u8 {
        layout::version_for_size(self.size).expect("size validated on construction")
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, dark: bool) {
        self.bits[row * self.size + col] = dark;
    }

    pub fn toggle(&mut self, row: usize, col: usize) {
        let i = row * self.size + col;
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.size, self.size)?;
        for row in self.bits.chunks(self.size) {
            let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
