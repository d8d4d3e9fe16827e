//! Version 1–4 geometry: function-pattern map, codeword placement order,
//! format-information positions and block structure.

use super::EcLevel;

pub const MIN_VERSION: u8 = 1;
pub const MAX_VERSION: u8 = 4;

/// Total codewords per version (data + EC).
const TOTAL_CODEWORDS: [usize; 4] = [26, 44, 70, 100];

/// (EC codewords per block, block count), indexed by version then L/M/Q/H.
const EC_BLOCKS: [[(usize, usize); 4]; 4] = [
    [(7, 1), (10, 1), (13, 1), (17, 1)],
    [(10, 1), (16, 1), (22, 1), (28, 1)],
    [(15, 1), (26, 1), (18, 2), (22, 2)],
    [(20, 1), (18, 2), (26, 2), (16, 4)],
];

/// Alignment pattern centre (row = col) for versions 2–4.
const ALIGNMENT_CENTER: [Option<usize>; 4] = [None, Some(18), Some(22), Some(26)];

pub fn size_for_version(version: u8) -> usize {
    17 + 4 * version as usize
}

pub fn version_for_size(size: usize) -> Option<u8> {
    if size < 21 || (size - 17) % 4 != 0 {
        return None;
    }
    let v = ((size - 17) / 4) as u8;
    (MIN_VERSION..=MAX_VERSION).contains(&v).then_some(v)
}

pub fn alignment_center(version: u8) -> Option<usize> {
    ALIGNMENT_CENTER[version as usize - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub total_codewords: usize,
    pub ec_per_block: usize,
    pub num_blocks: usize,
}

impl BlockSpec {
    pub fn new(version: u8, ec: EcLevel) -> BlockSpec {
        let (ec_per_block, num_blocks) = EC_BLOCKS[version as usize - 1][ec.ordinal()];
        BlockSpec {
            total_codewords: TOTAL_CODEWORDS[version as usize - 1],
            ec_per_block,
            num_blocks,
        }
    }

    pub fn data_codewords(&self) -> usize {
        self.total_codewords - self.ec_per_block * self.num_blocks
    }

    /// Data length of each block; short blocks come first.
    pub fn block_data_lens(&self) -> Vec<usize> {
        let data = self.data_codewords();
        let short = data / self.num_blocks;
        let long = data % self.num_blocks;
        (0..self.num_blocks)
            .map(|i| if i >= self.num_blocks - long { short + 1 } else { short })
            .collect()
    }

    /// For each block, the indices of its codewords (data then EC) in the
    /// interleaved stream placed in the symbol.
    pub fn interleaved_indices(&self) -> Vec<Vec<usize>> {
        let lens = self.block_data_lens();
        let max_len = lens.iter().copied().max().unwrap_or(0);
        let mut out = vec![Vec::new(); self.num_blocks];
        let mut next = 0;
        for i in 0..max_len {
            for (b, &len) in lens.iter().enumerate() {
                if i < len {
                    out[b].push(next);
                    next += 1;
                }
            }
        }
        for _ in 0..self.ec_per_block {
            for block in out.iter_mut() {
                block.push(next);
                next += 1;
            }
        }
        out
    }
}

/// Byte-mode payload capacity: 4 mode bits + 8 count bits precede the data.
pub fn byte_capacity(version: u8, ec: EcLevel) -> usize {
    BlockSpec::new(version, ec).data_codewords() - 2
}

/// `true` where a module belongs to a function pattern or reserved area.
pub fn function_map(version: u8) -> Vec<Vec<bool>> {
    let size = size_for_version(version);
    let mut map = vec![vec![false; size]; size];
    let mut mark = |r0: usize, c0: usize, h: usize, w: usize| {
        for row in map.iter_mut().skip(r0).take(h) {
            for m in row.iter_mut().skip(c0).take(w) {
                *m = true;
            }
        }
    };
    // finders with separators and the adjoining format areas
    mark(0, 0, 9, 9);
    mark(0, size - 8, 9, 8);
    mark(size - 8, 0, 8, 9);
    // timing
    mark(6, 0, 1, size);
    mark(0, 6, size, 1);
    if let Some(a) = alignment_center(version) {
        mark(a - 2, a - 2, 5, 5);
    }
    map
}

/// Module coordinates (row, col) of every data bit in placement order.
pub fn data_bit_positions(version: u8) -> Vec<(usize, usize)> {
    let size = size_for_version(version);
    let map = function_map(version);
    let mut out = Vec::new();
    let mut right = size as isize - 1;
    while right >= 1 {
        if right == 6 {
            right = 5;
        }
        let upward = (right + 1) & 2 == 0;
        for vert in 0..size {
            let row = if upward { size - 1 - vert } else { vert };
            for j in 0..2 {
                let col = (right - j) as usize;
                if !map[row][col] {
                    out.push((row, col));
                }
            }
        }
        right -= 2;
    }
    out
}

/// Module coordinates of the 8 bits (MSB first) of each placed codeword.
pub fn codeword_modules(version: u8) -> Vec<[(usize, usize); 8]> {
    let positions = data_bit_positions(version);
    let total = TOTAL_CODEWORDS[version as usize - 1];
    (0..total)
        .map(|i| {
            let mut cw = [(0, 0); 8];
            cw.copy_from_slice(&positions[i * 8..i * 8 + 8]);
            cw
        })
        .collect()
}

/// First format-information copy, bit i at (row, col); bit 0 is the LSB.
pub fn format_positions_primary() -> [(usize, usize); 15] {
    let mut out = [(0, 0); 15];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = match i {
            0..=5 => (i, 8),
            6 => (7, 8),
            7 => (8, 8),
            8 => (8, 7),
            _ => (8, 14 - i),
        };
    }
    out
}

/// Second format-information copy, split between the other two finders.
pub fn format_positions_secondary(size: usize) -> [(usize, usize); 15] {
    let mut out = [(0, 0); 15];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = if i < 8 {
            (8, size - 1 - i)
        } else {
            (size - 15 + i, 8)
        };
    }
    out
}

/// 15-bit masked format word for an EC level and mask.
pub fn format_word(ec: EcLevel, mask: u8) -> u16 {
    let data = (ec.format_bits() as u16) << 3 | mask as u16;
    let mut rem = data << 10;
    for i in (10..15).rev() {
        if rem >> i & 1 == 1 {
            rem ^= 0x537 << (i - 10);
        }
    }
    ((data << 10) | rem) ^ 0x5412
}

pub fn mask_bit(mask: u8, row: usize, col: usize) -> bool {
    let (r, c) = (row, col);
    match mask {
        0 => (r + c) % 2 == 0,
        1 => r % 2 == 0,
        2 => c % 3 == 0,
        3 => (r + c) % 3 == 0,
        4 => (r / 2 + c / 3) % 2 == 0,
        5 => (r * c) % 2 + (r * c) % 3 == 0,
        6 => ((r * c) % 2 + (r * c) % 3) % 2 == 0,
        7 => ((r + c) % 2 + (r * c) % 3) % 2 == 0,
        _ => unreachable!("mask index {mask} out of range"),
    }
}
