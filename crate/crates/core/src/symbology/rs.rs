//! Reed–Solomon over GF(256)/0x11D with generator roots α^0..α^(nsym−1),
//! the convention used by QR codes.
//!
//! Codewords are laid out with the first byte as the highest-degree
//! coefficient, so byte `i` of an `n`-byte codeword sits at power `n-1-i`.

use super::gf256::{Gf256, GfPoly};
use super::SymbologyError;

/// Longest codeword the field supports.
pub const MAX_CODEWORD_LEN: usize = 255;

/// Generator polynomial ∏ (x − α^i) for i in 0..nsym.
pub fn generator_poly(nsym: usize) -> GfPoly {
    (0..nsym).fold(GfPoly::one(), |g, i| {
        g.mul(&GfPoly::new(vec![Gf256::ONE, Gf256::alpha_pow(i)]))
    })
}

/// Parity bytes for `data`.
pub fn rs_parity(data: &[u8], nsym: usize) -> Result<Vec<u8>, SymbologyError> {
    if nsym == 0 || data.len() + nsym > MAX_CODEWORD_LEN {
        return Err(SymbologyError::CapacityExceeded {
            data_len: data.len(),
            nsym,
        });
    }
    let generator = generator_poly(nsym);
    let gen = generator.coeffs();
    // Synthetic division of data·x^nsym by the monic generator.
    let mut rem = vec![Gf256::ZERO; nsym];
    for &byte in data {
        let factor = Gf256(byte) + rem[0];
        rem.rotate_left(1);
        rem[nsym - 1] = Gf256::ZERO;
        if !factor.is_zero() {
            for (r, &g) in rem.iter_mut().zip(&gen[1..]) {
                *r += g * factor;
            }
        }
    }
    Ok(rem.into_iter().map(|g| g.0).collect())
}

/// `data` followed by `nsym` parity bytes.
pub fn rs_encode(data: &[u8], nsym: usize) -> Result<Vec<u8>, SymbologyError> {
    let parity = rs_parity(data, nsym)?;
    let mut out = Vec::with_capacity(data.len() + nsym);
    out.extend_from_slice(data);
    out.extend_from_slice(&parity);
    Ok(out)
}

/// Syndromes S_j = c(α^j), j in 0..nsym.
pub fn syndromes(codeword: &[u8], nsym: usize) -> Vec<Gf256> {
    let poly = GfPoly::from_bytes(codeword);
    (0..nsym).map(|j| poly.eval(Gf256::alpha_pow(j))).collect()
}

/// Corrects `codeword` in place. Returns the number of corrected bytes.
pub fn rs_correct_in_place(codeword: &mut [u8], nsym: usize) -> Result<usize, SymbologyError> {
    let n = codeword.len();
    if nsym == 0 || n <= nsym || n > MAX_CODEWORD_LEN {
        return Err(SymbologyError::CapacityExceeded {
            data_len: n.saturating_sub(nsym),
            nsym,
        });
    }
    let synd = syndromes(codeword, nsym);
    if synd.iter().all(|s| s.is_zero()) {
        return Ok(0);
    }

    let locator = berlekamp_massey(&synd);
    let num_errors = locator.len() - 1;
    if num_errors == 0 || num_errors > nsym / 2 {
        return Err(SymbologyError::TooManyErrors);
    }

    // Chien search over the positions present in this (shortened) codeword.
    let mut positions = Vec::with_capacity(num_errors);
    for i in 0..n {
        let power = n - 1 - i;
        let x_inv = Gf256::alpha_pow(255 - power % 255);
        if eval_low(&locator, x_inv).is_zero() {
            positions.push(i);
        }
    }
    if positions.len() != num_errors {
        return Err(SymbologyError::TooManyErrors);
    }

    // Ω(x) = S(x)·Λ(x) mod x^nsym
    let mut omega = vec![Gf256::ZERO; nsym];
    for (i, &s) in synd.iter().enumerate() {
        for (j, &l) in locator.iter().enumerate() {
            if i + j < nsym {
                omega[i + j] += s * l;
            }
        }
    }
    let locator_deriv: Vec<Gf256> = locator
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| if k % 2 == 1 { c } else { Gf256::ZERO })
        .collect();

    // Forney, first consecutive root α^0: e = X·Ω(X⁻¹)/Λ'(X⁻¹)
    for &i in &positions {
        let power = n - 1 - i;
        let x = Gf256::alpha_pow(power);
        let x_inv = x.inverse().expect("alpha powers are nonzero");
        let denom = eval_low(&locator_deriv, x_inv);
        if denom.is_zero() {
            return Err(SymbologyError::TooManyErrors);
        }
        let magnitude = x * eval_low(&omega, x_inv) / denom;
        codeword[i] ^= magnitude.0;
    }

    if syndromes(codeword, nsym).iter().any(|s| !s.is_zero()) {
        return Err(SymbologyError::TooManyErrors);
    }
    Ok(num_errors)
}

/// Corrects up to floor(nsym/2) byte errors and returns the data portion.
pub fn rs_decode(codeword: &[u8], nsym: usize) -> Result<Vec<u8>, SymbologyError> {
    let mut buf = codeword.to_vec();
    rs_correct_in_place(&mut buf, nsym)?;
    buf.truncate(codeword.len() - nsym);
    Ok(buf)
}

/// Evaluates a lowest-degree-first coefficient vector.
fn eval_low(coeffs: &[Gf256], x: Gf256) -> Gf256 {
    coeffs.iter().rev().fold(Gf256::ZERO, |acc, &c| acc * x + c)
}

/// Error locator Λ(x), lowest degree first, trimmed to its true degree.
fn berlekamp_massey(synd: &[Gf256]) -> Vec<Gf256> {
    let mut current = vec![Gf256::ONE];
    let mut previous = vec![Gf256::ONE];
    let mut len = 0usize;
    let mut shift = 1usize;
    let mut prev_disc = Gf256::ONE;

    for n in 0..synd.len() {
        let mut disc = synd[n];
        for i in 1..=len.min(current.len() - 1) {
            disc += current[i] * synd[n - i];
        }
        if disc.is_zero() {
            shift += 1;
            continue;
        }
        let coef = disc / prev_disc;
        let mut next = current.clone();
        if next.len() < previous.len() + shift {
            next.resize(previous.len() + shift, Gf256::ZERO);
        }
        for (i, &b) in previous.iter().enumerate() {
            next[i + shift] += coef * b;
        }
        if 2 * len <= n {
            previous = current;
            len = n + 1 - len;
            prev_disc = disc;
            shift = 1;
        } else {
            shift += 1;
        }
        current = next;
    }
    current.truncate(len + 1);
    while current.len() > 1 && current.last().is_some_and(|c| c.is_zero()) {
        current.pop();
    }
    current
}
