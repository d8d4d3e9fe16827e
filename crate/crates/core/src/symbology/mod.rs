//! Barcode and QR symbology: EAN-13 on luminance scanlines, QR versions 1–4
//! on sampled bit matrices, and the Reed–Solomon layer beneath QR.
//!
//! Decoders return a [`ScanResult`]: the decoded bytes, the symbology, the
//! bounding rectangle and the corner polygon of the located symbol.

pub mod ean13;
pub mod gf256;
pub mod pnm;
pub mod qr;
pub mod rs;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ean13::{decode_ean13, ean13_check_digit, encode_ean13, is_valid_ean13, LuminanceScanline};
pub use qr::{decode_qr, encode_qr, BitMatrix, EcLevel};
pub use pnm::{read_pbm, read_pgm, write_pbm, write_pgm};
pub use rs::{rs_decode, rs_encode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbologyError {
    #[error("expected {expected} digits, got {got}")]
    InvalidDigitCount { expected: usize, got: usize },
    #[error("input contains a non-digit character")]
    NonDigit,
    #[error("check digit {got} does not match computed {expected}")]
    BadCheckDigit { expected: u8, got: u8 },
    #[error("no symbol found")]
    NoSymbolFound,
    #[error("symbol read but check digit fails")]
    ChecksumMismatch,
    #[error("module width must be at least 1 pixel")]
    InvalidModuleWidth,
    #[error("data length {data_len} plus {nsym} parity bytes exceeds codeword capacity")]
    CapacityExceeded { data_len: usize, nsym: usize },
    #[error("too many errors to correct")]
    TooManyErrors,
    #[error("payload of {len} bytes exceeds capacity {capacity}")]
    PayloadTooLarge { len: usize, capacity: usize },
    #[error("format information unreadable")]
    FormatInfoUnreadable,
    #[error("unsupported segment mode {0:#06b}")]
    UnsupportedMode(u8),
    #[error("unsupported version or matrix size {0}")]
    UnsupportedVersion(usize),
    #[error("segment data truncated")]
    MalformedPayload,
    #[error("bad image: {0}")]
    BadImage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SymbolType {
    Ean13,
    QrCode,
}

impl SymbolType {
    pub fn as_str(self) -> &'static str {
        match self {
            SymbolType::Ean13 => "EAN13",
            SymbolType::QrCode => "QRCODE",
        }
    }
}

/// Axis-aligned bounding box in pixels (scanlines) or modules (matrices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub left: i64,
    pub top: i64,
    pub width: i64,
    pub height: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

/// One decoded symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub data: Vec<u8>,
    pub symbol_type: SymbolType,
    pub rect: Rect,
    pub polygon: Vec<Point>,
}

impl ScanResult {
    /// The payload as UTF-8 text.
    pub fn text(&self) -> Result<&str, std::str::Utf8Error> {
        std::str::from_utf8(&self.data)
    }
}
