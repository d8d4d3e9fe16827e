//! Binary PGM (P5) scanlines and PBM (P4) matrices.

use super::ean13::LuminanceScanline;
use super::qr::BitMatrix;
use super::SymbologyError;

/// Refuse images larger than this many pixels.
pub const MAX_PIXELS: usize = 1 << 24;

/// Quiet zone written around matrices by [`write_pbm`].
pub const PBM_QUIET_MODULES: usize = 4;

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: Option<usize>,
    data_start: usize,
}

fn bad(msg: impl Into<String>) -> SymbologyError {
    SymbologyError::BadImage(msg.into())
}

fn parse_header(bytes: &[u8], with_maxval: bool) -> Result<Header, SymbologyError> {
    if bytes.len() < 2 {
        return Err(bad("truncated header"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let fields = if with_maxval { 3 } else { 2 };
    let mut values = Vec::with_capacity(fields);
    while values.len() < fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos || pos - start > 9 {
            return Err(bad("malformed header number"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        values.push(text.parse::<usize>().expect("at most 9 digits"));
    }
    // exactly one whitespace byte before the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("missing whitespace after header")),
    }
    let (width, height) = (values[0], values[1]);
    if width == 0 || height == 0 || width.saturating_mul(height) > MAX_PIXELS {
        return Err(bad(format!("unsupported dimensions {width}x{height}")));
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval: with_maxval.then(|| values[2]),
        data_start: pos,
    })
}

pub fn write_pgm(scan: &LuminanceScanline) -> Vec<u8> {
    let mut out = format!("P5\n{} 1\n255\n", scan.len()).into_bytes();
    out.extend_from_slice(scan.pixels());
    out
}

/// Reads a P5 image and returns its middle row as a scanline. Sample
/// values are rescaled to 0–255 when maxval is below 255.
pub fn read_pgm(bytes: &[u8]) -> Result<LuminanceScanline, SymbologyError> {
    let h = parse_header(bytes, true)?;
    if &h.magic != b"P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let maxval = h.maxval.expect("requested");
    if maxval == 0 || maxval > 255 {
        return Err(bad(format!("unsupported maxval {maxval}")));
    }
    let raster = &bytes[h.data_start..];
    if raster.len() < h.width * h.height {
        return Err(bad("truncated raster"));
    }
    let row = h.height / 2;
    let pixels = raster[row * h.width..(row + 1) * h.width]
        .iter()
        .map(|&p| ((p.min(maxval as u8) as usize * 255) / maxval) as u8)
        .collect();
    LuminanceScanline::new(pixels)
}

/// P4 image of `matrix` with a [`PBM_QUIET_MODULES`] light border.
pub fn write_pbm(matrix: &BitMatrix) -> Vec<u8> {
    let q = PBM_QUIET_MODULES;
    let side = matrix.size() + 2 * q;
    let mut out = format!("P4\n{side} {side}\n").into_bytes();
    let row_bytes = side.div_ceil(8);
    for y in 0..side {
        let mut row = vec![0u8; row_bytes];
        for x in 0..side {
            let dark = (q..q + matrix.size()).contains(&y)
                && (q..q + matrix.size()).contains(&x)
                && matrix.get(y - q, x - q);
            if dark {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

/// Reads a P4 image at one pixel per module. Any light border is cropped
/// to the bounding box of dark modules; finder patterns mark three corners
/// so the box is the symbol.
pub fn read_pbm(bytes: &[u8]) -> Result<BitMatrix, SymbologyError> {
    let h = parse_header(bytes, false)?;
    if &h.magic != b"P4" {
        return Err(bad("not a binary PBM (P4)"));
    }
    let row_bytes = h.width.div_ceil(8);
    let raster = &bytes[h.data_start..];
    if raster.len() < row_bytes * h.height {
        return Err(bad("truncated raster"));
    }
    let px = |x: usize, y: usize| raster[y * row_bytes + x / 8] & (0x80 >> (x % 8)) != 0;

    let crop = |x0: usize, y0: usize, side: usize| {
        let bits = (y0..y0 + side)
            .flat_map(|y| (x0..x0 + side).map(move |x| (x, y)))
            .map(|(x, y)| px(x, y))
            .collect();
        BitMatrix::from_bits(side, bits)
    };

    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..h.height {
        for x in 0..h.width {
            if px(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x0 != usize::MAX && x1 - x0 == y1 - y0 {
        if let Ok(m) = crop(x0, y0, x1 - x0 + 1) {
            return Ok(m);
        }
    }
    if h.width == h.height {
        return crop(0, 0, h.width);
    }
    Err(bad(format!(
        "no square symbol found in {}x{} image",
        h.width, h.height
    )))
}
