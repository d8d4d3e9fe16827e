//! EAN-13 on a single luminance scanline.
//!
//! The 95-module symbol is: start guard `101`, six left digits (L or G
//! parity, the mix encoding the leading digit), centre guard `01010`, six
//! right digits (R codes), end guard `101`.

use super::{Point, Rect, ScanResult, SymbolType, SymbologyError};

pub const SYMBOL_MODULES: usize = 95;
pub const ENCODE_QUIET_MODULES: usize = 9;

const L_CODES: [u8; 10] = [
    0b0001101, 0b0011001, 0b0010011, 0b0111101, 0b0100011, 0b0110001, 0b0101111, 0b0111011,
    0b0110111, 0b0001011,
];

/// Parity of left digits 2..=7 indexed by the leading digit; bit set = G.
const PARITY: [u8; 10] = [
    0b000000, 0b001011, 0b001101, 0b001110, 0b010011, 0b011001, 0b011100, 0b010101, 0b010110,
    0b011010,
];

const GUARD_RUNS: usize = 3;
const CENTER_RUNS: usize = 5;
const DIGIT_RUNS: usize = 4;
/// Runs from the first bar of the start guard to the last bar of the end guard.
const SYMBOL_RUNS: usize = 2 * GUARD_RUNS + CENTER_RUNS + 12 * DIGIT_RUNS;

/// One row of 8-bit luminance samples, 0 = black and 255 = white.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LuminanceScanline {
    pixels: Vec<u8>,
}

impl LuminanceScanline {
    pub fn new(pixels: Vec<u8>) -> Result<Self, SymbologyError> {
        if pixels.is_empty() {
            return Err(SymbologyError::BadImage("empty scanline".into()));
        }
        Ok(LuminanceScanline { pixels })
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn reversed(&self) -> LuminanceScanline {
        let mut pixels = self.pixels.clone();
        pixels.reverse();
        LuminanceScanline { pixels }
    }
}

/// Parses exactly `n` ASCII digits.
pub fn parse_digits(text: &str, n: usize) -> Result<Vec<u8>, SymbologyError> {
    let bytes = text.as_bytes();
    if bytes.len() != n {
        return Err(SymbologyError::InvalidDigitCount {
            expected: n,
            got: bytes.len(),
        });
    }
    bytes
        .iter()
        .map(|&b| {
            if b.is_ascii_digit() {
                Ok(b - b'0')
            } else {
                Err(SymbologyError::NonDigit)
            }
        })
        .collect()
}

/// The digit that makes the 1-3 weighted sum of all 13 digits ≡ 0 (mod 10).
pub fn ean13_check_digit(digits: &[u8]) -> Result<u8, SymbologyError> {
    if digits.len() != 12 {
        return Err(SymbologyError::InvalidDigitCount {
            expected: 12,
            got: digits.len(),
        });
    }
    if digits.iter().any(|&d| d > 9) {
        return Err(SymbologyError::NonDigit);
    }
    let sum: u32 = digits
        .iter()
        .enumerate()
        .map(|(i, &d)| d as u32 * if i % 2 == 0 { 1 } else { 3 })
        .sum();
    Ok(((10 - sum % 10) % 10) as u8)
}

/// True for 13 ASCII digits whose last digit checks.
pub fn is_valid_ean13(text: &str) -> bool {
    match parse_digits(text, 13) {
        Ok(d) => ean13_check_digit(&d[..12]).is_ok_and(|c| c == d[12]),
        Err(_) => false,
    }
}

/// Module pattern of the 95-module symbol, `true` = bar.
fn module_pattern(digits: &[u8]) -> Vec<bool> {
    let mut modules = Vec::with_capacity(SYMBOL_MODULES);
    let mut push_bits = |bits: u8, width: u32| {
        for i in (0..width).rev() {
            modules.push(bits >> i & 1 == 1);
        }
    };
    push_bits(0b101, 3);
    let parity = PARITY[digits[0] as usize];
    for (k, &d) in digits[1..7].iter().enumerate() {
        let g = parity >> (5 - k) & 1 == 1;
        let code = if g { g_code(d) } else { L_CODES[d as usize] };
        push_bits(code, 7);
    }
    push_bits(0b01010, 5);
    for &d in &digits[7..13] {
        push_bits(!L_CODES[d as usize] & 0x7F, 7);
    }
    push_bits(0b101, 3);
    modules
}

/// G code: the R code read backwards.
fn g_code(d: u8) -> u8 {
    let r = !L_CODES[d as usize] & 0x7F;
    (0..7).fold(0, |acc, i| acc | ((r >> i) & 1) << (6 - i))
}

/// Renders `digits13` at `module_width` pixels per module with a 9-module
/// quiet zone on each side.
pub fn encode_ean13(digits13: &str, module_width: usize) -> Result<LuminanceScanline, SymbologyError> {
    if module_width == 0 {
        return Err(SymbologyError::InvalidModuleWidth);
    }
    let digits = parse_digits(digits13, 13)?;
    let expected = ean13_check_digit(&digits[..12])?;
    if expected != digits[12] {
        return Err(SymbologyError::BadCheckDigit {
            expected,
            got: digits[12],
        });
    }
    let quiet = vec![255u8; ENCODE_QUIET_MODULES * module_width];
    let mut pixels = quiet.clone();
    for bar in module_pattern(&digits) {
        let v = if bar { 0 } else { 255 };
        pixels.extend(std::iter::repeat_n(v, module_width));
    }
    pixels.extend_from_slice(&quiet);
    Ok(LuminanceScanline { pixels })
}

#[derive(Debug, Clone, Copy)]
struct Run {
    dark: bool,
    start: usize,
    len: usize,
}

fn run_lengths(scan: &LuminanceScanline) -> Option<Vec<Run>> {
    let px = scan.pixels();
    let (min, max) = px
        .iter()
        .fold((u8::MAX, u8::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    if min == max {
        return None;
    }
    // global threshold at (min+max)/2, doubled to stay in integers
    let threshold2 = min as u16 + max as u16;
    let mut runs: Vec<Run> = Vec::new();
    for (i, &p) in px.iter().enumerate() {
        let dark = (p as u16) * 2 < threshold2;
        match runs.last_mut() {
            Some(r) if r.dark == dark => r.len += 1,
            _ => runs.push(Run {
                dark,
                start: i,
                len: 1,
            }),
        }
    }
    Some(runs)
}

enum WindowRead {
    Digits([u8; 13]),
    Reversed,
    Invalid,
}

fn classify(len: usize, module: f64) -> Option<u8> {
    let m = (len as f64 / module).round();
    (1.0..=4.0).contains(&m).then_some(m as u8)
}

/// Looks up a 4-run digit; returns (digit, is_g). R codes share L widths.
fn lookup_digit(widths: [u8; 4]) -> Option<(u8, bool)> {
    for d in 0..10u8 {
        let l = code_widths(L_CODES[d as usize]);
        if l == widths {
            return Some((d, false));
        }
        let mut g = l;
        g.reverse();
        if g == widths {
            return Some((d, true));
        }
    }
    None
}

/// Run widths of a 7-bit code, read left to right.
fn code_widths(code: u8) -> [u8; 4] {
    let mut out = [0u8; 4];
    let mut idx = 0;
    let mut prev = code >> 6 & 1;
    for i in (0..7).rev() {
        let bit = code >> i & 1;
        if bit != prev {
            idx += 1;
            prev = bit;
        }
        out[idx] += 1;
    }
    out
}

fn read_window(runs: &[Run], module: f64) -> WindowRead {
    let widths: Option<Vec<u8>> = runs.iter().map(|r| classify(r.len, module)).collect();
    let Some(widths) = widths else {
        return WindowRead::Invalid;
    };
    let ones = |range: std::ops::Range<usize>| widths[range].iter().all(|&w| w == 1);
    let center = GUARD_RUNS + 6 * DIGIT_RUNS;
    let right = center + CENTER_RUNS;
    let end = right + 6 * DIGIT_RUNS;
    if !ones(0..GUARD_RUNS) || !ones(center..right) || !ones(end..end + GUARD_RUNS) {
        return WindowRead::Invalid;
    }

    let mut digits = [0u8; 13];
    let mut parity = 0u8;
    for k in 0..6 {
        let at = GUARD_RUNS + k * DIGIT_RUNS;
        let w: [u8; 4] = widths[at..at + 4].try_into().expect("4 runs");
        if w.iter().sum::<u8>() != 7 {
            return WindowRead::Invalid;
        }
        let Some((d, g)) = lookup_digit(w) else {
            return WindowRead::Invalid;
        };
        digits[k + 1] = d;
        parity = parity << 1 | g as u8;
    }
    if parity == 0b111111 {
        return WindowRead::Reversed;
    }
    let Some(first) = PARITY.iter().position(|&p| p == parity) else {
        return WindowRead::Invalid;
    };
    digits[0] = first as u8;
    for k in 0..6 {
        let at = right + k * DIGIT_RUNS;
        let w: [u8; 4] = widths[at..at + 4].try_into().expect("4 runs");
        if w.iter().sum::<u8>() != 7 {
            return WindowRead::Invalid;
        }
        match lookup_digit(w) {
            Some((d, false)) => digits[k + 7] = d,
            _ => return WindowRead::Invalid,
        }
    }
    WindowRead::Digits(digits)
}

/// Locates and decodes one EAN-13 symbol in either reading direction.
pub fn decode_ean13(scan: &LuminanceScanline) -> Result<ScanResult, SymbologyError> {
    let runs = run_lengths(scan).ok_or(SymbologyError::NoSymbolFound)?;
    let mut checksum_failed = false;

    for i in 0..runs.len() {
        if !runs[i].dark || i == 0 || i + SYMBOL_RUNS >= runs.len() {
            continue;
        }
        let window = &runs[i..i + SYMBOL_RUNS];
        let module = window[..GUARD_RUNS].iter().map(|r| r.len).sum::<usize>() as f64 / 3.0;
        let quiet_ok = |r: &Run| r.len as f64 + 0.5 >= module;
        if !quiet_ok(&runs[i - 1]) || !quiet_ok(&runs[i + SYMBOL_RUNS]) {
            continue;
        }

        let digits = match read_window(window, module) {
            WindowRead::Digits(d) => d,
            WindowRead::Reversed => {
                let mut rev = window.to_vec();
                rev.reverse();
                let rev_module =
                    rev[..GUARD_RUNS].iter().map(|r| r.len).sum::<usize>() as f64 / 3.0;
                match read_window(&rev, rev_module) {
                    WindowRead::Digits(d) => d,
                    _ => continue,
                }
            }
            WindowRead::Invalid => continue,
        };

        let check = ean13_check_digit(&digits[..12]).expect("12 decimal digits");
        if check != digits[12] {
            checksum_failed = true;
            continue;
        }

        let left = window[0].start as i64;
        let last = window[SYMBOL_RUNS - 1];
        let right = (last.start + last.len) as i64;
        return Ok(ScanResult {
            data: digits.iter().map(|d| b'0' + d).collect(),
            symbol_type: SymbolType::Ean13,
            rect: Rect {
                left,
                top: 0,
                width: right - left,
                height: 1,
            },
            polygon: vec![
                Point { x: left, y: 0 },
                Point { x: right, y: 0 },
                Point { x: right, y: 1 },
                Point { x: left, y: 1 },
            ],
        });
    }

    Err(if checksum_failed {
        SymbologyError::ChecksumMismatch
    } else {
        SymbologyError::NoSymbolFound
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_check(digits: &[u8]) -> u8 {
        (0..10u8)
            .find(|c| {
                let s: u32 = digits
                    .iter()
                    .chain(std::iter::once(c))
                    .enumerate()
                    .map(|(i, &d)| d as u32 * if i % 2 == 0 { 1 } else { 3 })
                    .sum();
                s % 10 == 0
            })
            .unwrap()
    }

    #[test]
    fn check_digit_examples() {
        assert_eq!(ean13_check_digit(&[0; 12]).unwrap(), 0);
        assert_eq!(ean13_check_digit(&parse_digits("590123412345", 12).unwrap()).unwrap(), 7);
        // 6·1 + 6·3 = 24 → 6
        assert_eq!(ean13_check_digit(&[1; 12]).unwrap(), 6);
        assert!(matches!(
            ean13_check_digit(&[1; 11]),
            Err(SymbologyError::InvalidDigitCount { expected: 12, got: 11 })
        ));
    }

    #[test]
    fn check_digit_agrees_with_brute_force() {
        let mut x: u64 = 0x9E3779B97F4A7C15;
        for _ in 0..2000 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let digits: Vec<u8> = (0..12).map(|i| ((x >> (i * 5)) % 10) as u8).collect();
            assert_eq!(ean13_check_digit(&digits).unwrap(), brute_force_check(&digits));
        }
    }

    #[test]
    fn symbol_structure() {
        let scan = encode_ean13("5901234123457", 1).unwrap();
        assert_eq!(scan.len(), SYMBOL_MODULES + 2 * ENCODE_QUIET_MODULES);
        let body = &scan.pixels()[9..9 + 95];
        assert_eq!(&body[..3], &[0, 255, 0]);
        assert_eq!(&body[45..50], &[255, 0, 255, 0, 255]);
        assert_eq!(&body[92..], &[0, 255, 0]);
    }

    #[test]
    fn g_codes_match_reference_table() {
        let g = [
            0b0100111, 0b0110011, 0b0011011, 0b0100001, 0b0011101, 0b0111001, 0b0000101,
            0b0010001, 0b0001001, 0b0010111,
        ];
        for d in 0..10u8 {
            assert_eq!(g_code(d), g[d as usize]);
        }
    }

    #[test]
    fn bad_check_digit_rejected() {
        assert_eq!(
            encode_ean13("5901234123450", 1),
            Err(SymbologyError::BadCheckDigit { expected: 7, got: 0 })
        );
    }

    #[test]
    fn round_trip_and_reversal() {
        for w in 1..=4 {
            let scan = encode_ean13("5901234123457", w).unwrap();
            let r = decode_ean13(&scan).unwrap();
            assert_eq!(r.data, b"5901234123457");
            assert_eq!(r.rect.left, (9 * w) as i64);
            assert_eq!(r.rect.width, (95 * w) as i64);
            let rr = decode_ean13(&scan.reversed()).unwrap();
            assert_eq!(rr.data, b"5901234123457");
        }
    }

    #[test]
    fn all_white_has_no_symbol() {
        let scan = LuminanceScanline::new(vec![255; 200]).unwrap();
        assert_eq!(decode_ean13(&scan), Err(SymbologyError::NoSymbolFound));
    }

    #[test]
    fn flipped_digit_reports_checksum_mismatch() {
        // Swap in the pattern of a different right-hand digit without fixing the check digit.
        let good = encode_ean13("5901234123457", 2).unwrap();
        let other = encode_ean13("5901234123464", 2).unwrap();
        let mut px = good.pixels().to_vec();
        // last-but-one right digit occupies modules 78..85
        let (a, b) = ((9 + 78) * 2, (9 + 85) * 2);
        px[a..b].copy_from_slice(&other.pixels()[a..b]);
        let scan = LuminanceScanline::new(px).unwrap();
        assert_eq!(decode_ean13(&scan), Err(SymbologyError::ChecksumMismatch));
    }

    #[test]
    fn tolerates_one_module_quiet_zone() {
        let scan = encode_ean13("4006381333931", 3).unwrap();
        let px = &scan.pixels()[8 * 3..scan.len() - 8 * 3];
        let r = decode_ean13(&LuminanceScanline::new(px.to_vec()).unwrap()).unwrap();
        assert_eq!(r.data, b"4006381333931");
    }

    #[test]
    fn contrast_scaled_input_still_decodes() {
        let scan = encode_ean13("9780306406157", 2).unwrap();
        let px: Vec<u8> = scan.pixels().iter().map(|&p| if p == 0 { 60 } else { 190 }).collect();
        let r = decode_ean13(&LuminanceScanline::new(px).unwrap()).unwrap();
        assert_eq!(r.data, b"9780306406157");
    }
}
