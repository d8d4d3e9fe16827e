use super::layout::{self, BlockSpec, MAX_VERSION, MIN_VERSION};
use super::{BitMatrix, EcLevel};
use crate::symbology::rs::rs_parity;
use crate::symbology::SymbologyError;

const MODE_BYTE: u32 = 0b0100;
const PAD_BYTES: [u8; 2] = [0xEC, 0x11];

/// Encodes `payload` as a byte-mode QR symbol, choosing the mask with the
/// lowest penalty score (ties go to the lower mask index).
pub fn encode_qr(payload: &[u8], version: u8, ec: EcLevel) -> Result<BitMatrix, SymbologyError> {
    encode_qr_with_mask(payload, version, ec, None)
}

/// As [`encode_qr`], optionally forcing one of the eight masks.
pub fn encode_qr_with_mask(
    payload: &[u8],
    version: u8,
    ec: EcLevel,
    mask: Option<u8>,
) -> Result<BitMatrix, SymbologyError> {
    if !(MIN_VERSION..=MAX_VERSION).contains(&version) {
        return Err(SymbologyError::UnsupportedVersion(version as usize));
    }
    if let Some(m) = mask {
        assert!(m < 8, "mask index {m} out of range");
    }
    let capacity = layout::byte_capacity(version, ec);
    if payload.len() > capacity {
        return Err(SymbologyError::PayloadTooLarge {
            len: payload.len(),
            capacity,
        });
    }

    let spec = BlockSpec::new(version, ec);
    let data = data_codewords(payload, spec.data_codewords());
    let codewords = add_ec_and_interleave(&data, &spec)?;

    let base = function_patterns(version);
    let positions = layout::data_bit_positions(version);
    let mut unmasked = base.clone();
    for (i, &(r, c)) in positions.iter().enumerate() {
        let dark = i < codewords.len() * 8 && codewords[i / 8] >> (7 - i % 8) & 1 == 1;
        unmasked.set(r, c, dark);
    }

    let apply = |mask: u8| {
        let mut m = unmasked.clone();
        for &(r, c) in &positions {
            if layout::mask_bit(mask, r, c) {
                m.toggle(r, c);
            }
        }
        draw_format(&mut m, ec, mask);
        m
    };

    Ok(match mask {
        Some(m) => apply(m),
        None => (0..8u8)
            .map(apply)
            .enumerate()
            .min_by_key(|(i, m)| (penalty_score(m), *i))
            .map(|(_, m)| m)
            .expect("eight candidates"),
    })
}

fn data_codewords(payload: &[u8], capacity: usize) -> Vec<u8> {
    let mut bits = BitWriter::default();
    bits.push(MODE_BYTE, 4);
    bits.push(payload.len() as u32, 8);
    for &b in payload {
        bits.push(b as u32, 8);
    }
    let cap_bits = capacity * 8;
    let terminator = (cap_bits - bits.len()).min(4);
    bits.push(0, terminator as u32);
    let pad = (8 - bits.len() % 8) % 8;
    bits.push(0, pad as u32);
    let mut bytes = bits.into_bytes();
    let mut pads = PAD_BYTES.iter().cycle();
    while bytes.len() < capacity {
        bytes.push(*pads.next().expect("cycle"));
    }
    bytes
}

fn add_ec_and_interleave(data: &[u8], spec: &BlockSpec) -> Result<Vec<u8>, SymbologyError> {
    let mut blocks = Vec::with_capacity(spec.num_blocks);
    let mut offset = 0;
    for len in spec.block_data_lens() {
        let block = &data[offset..offset + len];
        offset += len;
        blocks.push((block.to_vec(), rs_parity(block, spec.ec_per_block)?));
    }
    let mut out = vec![0u8; spec.total_codewords];
    for (b, indices) in spec.interleaved_indices().iter().enumerate() {
        let (d, e) = &blocks[b];
        for (&idx, &byte) in indices.iter().zip(d.iter().chain(e.iter())) {
            out[idx] = byte;
        }
    }
    Ok(out)
}

fn function_patterns(version: u8) -> BitMatrix {
    let size = layout::size_for_version(version);
    let mut m = BitMatrix::new(size).expect("supported version");
    for i in 0..size {
        m.set(6, i, i % 2 == 0);
        m.set(i, 6, i % 2 == 0);
    }
    for (r0, c0) in [(3isize, 3isize), (3, size as isize - 4), (size as isize - 4, 3)] {
        for dr in -4..=4isize {
            for dc in -4..=4isize {
                let (r, c) = (r0 + dr, c0 + dc);
                if r < 0 || c < 0 || r >= size as isize || c >= size as isize {
                    continue;
                }
                let dist = dr.abs().max(dc.abs());
                m.set(r as usize, c as usize, dist != 2 && dist != 4);
            }
        }
    }
    if let Some(a) = layout::alignment_center(version) {
        for dr in -2..=2isize {
            for dc in -2..=2isize {
                let dist = dr.abs().max(dc.abs());
                m.set((a as isize + dr) as usize, (a as isize + dc) as usize, dist != 1);
            }
        }
    }
    m.set(size - 8, 8, true);
    m
}

fn draw_format(m: &mut BitMatrix, ec: EcLevel, mask: u8) {
    let word = layout::format_word(ec, mask);
    let size = m.size();
    for (i, (&(r1, c1), &(r2, c2))) in layout::format_positions_primary()
        .iter()
        .zip(layout::format_positions_secondary(size).iter())
        .enumerate()
    {
        let bit = word >> i & 1 == 1;
        m.set(r1, c1, bit);
        m.set(r2, c2, bit);
    }
    m.set(size - 8, 8, true);
}

/// The four-rule mask penalty: long runs, 2×2 blocks, finder-like
/// sequences and dark/light imbalance.
pub fn penalty_score(m: &BitMatrix) -> u32 {
    let n = m.size();
    let mut score = 0u32;

    let line = |i: usize, j: usize, horizontal: bool| {
        if horizontal {
            m.get(i, j)
        } else {
            m.get(j, i)
        }
    };

    for horizontal in [true, false] {
        for i in 0..n {
            let mut run = 1;
            for j in 1..n {
                if line(i, j, horizontal) == line(i, j - 1, horizontal) {
                    run += 1;
                } else {
                    if run >= 5 {
                        score += 3 + (run - 5);
                    }
                    run = 1;
                }
            }
            if run >= 5 {
                score += 3 + (run - 5);
            }

            const FINDER_A: [bool; 11] = [
                true, false, true, true, true, false, true, false, false, false, false,
            ];
            const FINDER_B: [bool; 11] = [
                false, false, false, false, true, false, true, true, true, false, true,
            ];
            for j in 0..n.saturating_sub(10) {
                let window = |pattern: &[bool; 11]| {
                    pattern
                        .iter()
                        .enumerate()
                        .all(|(k, &p)| line(i, j + k, horizontal) == p)
                };
                if window(&FINDER_A) {
                    score += 40;
                }
                if window(&FINDER_B) {
                    score += 40;
                }
            }
        }
    }

    for r in 0..n - 1 {
        for c in 0..n - 1 {
            let v = m.get(r, c);
            if m.get(r, c + 1) == v && m.get(r + 1, c) == v && m.get(r + 1, c + 1) == v {
                score += 3;
            }
        }
    }

    let dark = m.bits().iter().filter(|&&b| b).count() as u32;
    let total = (n * n) as u32;
    let deviation = (dark * 100).abs_diff(total * 50) / total;
    score += deviation / 5 * 10;
    score
}

#[derive(Default)]
struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    fn push(&mut self, value: u32, count: u32) {
        for i in (0..count).rev() {
            self.bits.push(value >> i & 1 == 1);
        }
    }

    fn len(&self) -> usize {
        self.bits.len()
    }

    fn into_bytes(self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8))
            .collect()
    }
}
