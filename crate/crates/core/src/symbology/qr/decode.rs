use super::layout::{self, BlockSpec};
use super::{BitMatrix, EcLevel};
use crate::symbology::rs::rs_correct_in_place;
use crate::symbology::{Point, Rect, ScanResult, SymbolType, SymbologyError};

/// Maximum Hamming distance accepted when matching format information.
const FORMAT_MAX_DISTANCE: u32 = 3;

/// Decodes a sampled QR matrix.
pub fn decode_qr(matrix: &BitMatrix) -> Result<ScanResult, SymbologyError> {
    let size = matrix.size();
    let version = layout::version_for_size(size).ok_or(SymbologyError::UnsupportedVersion(size))?;
    let (ec, mask) = read_format(matrix)?;
    let spec = BlockSpec::new(version, ec);

    let positions = layout::data_bit_positions(version);
    let mut raw = vec![0u8; spec.total_codewords];
    for (i, &(r, c)) in positions.iter().take(spec.total_codewords * 8).enumerate() {
        let bit = matrix.get(r, c) ^ layout::mask_bit(mask, r, c);
        raw[i / 8] |= (bit as u8) << (7 - i % 8);
    }

    let lens = spec.block_data_lens();
    let mut data = Vec::with_capacity(spec.data_codewords());
    for (indices, len) in spec.interleaved_indices().iter().zip(lens) {
        let mut block: Vec<u8> = indices.iter().map(|&i| raw[i]).collect();
        rs_correct_in_place(&mut block, spec.ec_per_block)?;
        data.extend_from_slice(&block[..len]);
    }

    let payload = parse_segments(&data)?;
    let s = size as i64;
    Ok(ScanResult {
        data: payload,
        symbol_type: SymbolType::QrCode,
        rect: Rect {
            left: 0,
            top: 0,
            width: s,
            height: s,
        },
        polygon: vec![
            Point { x: 0, y: 0 },
            Point { x: s, y: 0 },
            Point { x: s, y: s },
            Point { x: 0, y: s },
        ],
    })
}

/// Reads both format copies and returns the valid (EC level, mask) nearest
/// to either of them.
fn read_format(matrix: &BitMatrix) -> Result<(EcLevel, u8), SymbologyError> {
    let read = |positions: [(usize, usize); 15]| -> u16 {
        positions
            .iter()
            .enumerate()
            .fold(0u16, |acc, (i, &(r, c))| acc | (matrix.get(r, c) as u16) << i)
    };
    let copies = [
        read(layout::format_positions_primary()),
        read(layout::format_positions_secondary(matrix.size())),
    ];
    let best = copies
        .iter()
        .flat_map(|&word| {
            (0..32u8).map(move |d| {
                let ec = EcLevel::from_format_bits(d >> 3);
                let mask = d & 7;
                ((layout::format_word(ec, mask) ^ word).count_ones(), ec, mask)
            })
        })
        .min_by_key(|&(dist, _, _)| dist)
        .expect("64 candidates");
    if best.0 <= FORMAT_MAX_DISTANCE {
        return Ok((best.1, best.2));
    }
    Err(SymbologyError::FormatInfoUnreadable)
}

fn parse_segments(data: &[u8]) -> Result<Vec<u8>, SymbologyError> {
    let mut reader = BitReader { data, pos: 0 };
    let mut out = Vec::new();
    loop {
        if reader.remaining() < 4 {
            break;
        }
        let mode = reader.read(4).expect("checked remaining") as u8;
        match mode {
            0b0000 => break,
            0b0100 => {
                let count = reader.read(8).ok_or(SymbologyError::MalformedPayload)? as usize;
                if reader.remaining() < count * 8 {
                    return Err(SymbologyError::MalformedPayload);
                }
                for _ in 0..count {
                    out.push(reader.read(8).expect("checked remaining") as u8);
                }
            }
            other => return Err(SymbologyError::UnsupportedMode(other)),
        }
    }
    Ok(out)
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn remaining(&self) -> usize {
        self.data.len() * 8 - self.pos
    }

    fn read(&mut self, n: usize) -> Option<u32> {
        if self.remaining() < n {
            return None;
        }
        let mut v = 0u32;
        for _ in 0..n {
            let bit = self.data[self.pos / 8] >> (7 - self.pos % 8) & 1;
            v = v << 1 | bit as u32;
            self.pos += 1;
        }
        Some(v)
    }
}
