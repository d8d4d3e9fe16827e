//! Arithmetic over GF(2^8) reduced by x^8 + x^4 + x^3 + x^2 + 1 (0x11D).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub};

/// Primitive polynomial used by QR Reed–Solomon.
pub const PRIMITIVE_POLY: u16 = 0x11D;

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= PRIMITIVE_POLY;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
static EXP: [u8; 512] = TABLES.0;
static LOG: [u8; 256] = TABLES.1;

/// An element of GF(256).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    /// α^power, with the exponent taken mod 255.
    pub fn alpha_pow(power: usize) -> Gf256 {
        Gf256(EXP[power % 255])
    }

    /// Discrete log base α. `None` for zero.
    pub fn log(self) -> Option<usize> {
        (self.0 != 0).then(|| LOG[self.0 as usize] as usize)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse. `None` for zero.
    pub fn inverse(self) -> Option<Gf256> {
        self.log().map(|l| Gf256(EXP[255 - l]))
    }

    pub fn pow(self, n: usize) -> Gf256 {
        match self.log() {
            None if n == 0 => Gf256::ONE,
            None => Gf256::ZERO,
            Some(l) => Gf256(EXP[(l * n) % 255]),
        }
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    fn mul(self, rhs: Gf256) -> Gf256 {
        if self.0 == 0 || rhs.0 == 0 {
            return Gf256::ZERO;
        }
        Gf256(EXP[LOG[self.0 as usize] as usize + LOG[rhs.0 as usize] as usize])
    }
}

impl MulAssign for Gf256 {
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = *self * rhs;
    }
}

impl Div for Gf256 {
    type Output = Gf256;
    /// Panics on division by zero.
    fn div(self, rhs: Gf256) -> Gf256 {
        let inv = rhs.inverse().expect("division by zero in GF(256)");
        self * inv
    }
}

/// Polynomial over GF(256), coefficients stored highest degree first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GfPoly {
    coeffs: Vec<Gf256>,
}

impl GfPoly {
    /// Builds a polynomial, stripping leading zeros. An empty or all-zero
    /// input is the zero polynomial.
    pub fn new(coeffs: Vec<Gf256>) -> GfPoly {
        let first = coeffs.iter().position(|c| !c.is_zero());
        match first {
            Some(i) => GfPoly {
                coeffs: coeffs[i..].to_vec(),
            },
            None => GfPoly {
                coeffs: vec![Gf256::ZERO],
            },
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> GfPoly {
        GfPoly::new(bytes.iter().map(|&b| Gf256(b)).collect())
    }

    pub fn zero() -> GfPoly {
        GfPoly {
            coeffs: vec![Gf256::ZERO],
        }
    }

    pub fn one() -> GfPoly {
        GfPoly {
            coeffs: vec![Gf256::ONE],
        }
    }

    /// c·x^degree
    pub fn monomial(degree: usize, c: Gf256) -> GfPoly {
        if c.is_zero() {
            return GfPoly::zero();
        }
        let mut coeffs = vec![Gf256::ZERO; degree + 1];
        coeffs[0] = c;
        GfPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs[0].is_zero()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Gf256] {
        &self.coeffs
    }

    /// Coefficient of x^degree.
    pub fn coeff(&self, degree: usize) -> Gf256 {
        if degree > self.degree() {
            Gf256::ZERO
        } else {
            self.coeffs[self.coeffs.len() - 1 - degree]
        }
    }

    pub fn eval(&self, x: Gf256) -> Gf256 {
        self.coeffs
            .iter()
            .fold(Gf256::ZERO, |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &GfPoly) -> GfPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Gf256::ZERO; n];
        for (i, &c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        for (i, &c) in other.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        GfPoly::new(out)
    }

    pub fn mul(&self, other: &GfPoly) -> GfPoly {
        if self.is_zero() || other.is_zero() {
            return GfPoly::zero();
        }
        let mut out = vec![Gf256::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        GfPoly::new(out)
    }

    pub fn scale(&self, c: Gf256) -> GfPoly {
        GfPoly::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Quotient and remainder. Panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &GfPoly) -> (GfPoly, GfPoly) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        if self.degree() < divisor.degree() || self.is_zero() {
            return (GfPoly::zero(), self.clone());
        }
        let lead_inv = divisor.coeffs[0].inverse().expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        let qlen = self.coeffs.len() - divisor.coeffs.len() + 1;
        let mut quot = vec![Gf256::ZERO; qlen];
        for i in 0..qlen {
            let c = rem[i] * lead_inv;
            quot[i] = c;
            if c.is_zero() {
                continue;
            }
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] += d * c;
            }
        }
        (GfPoly::new(quot), GfPoly::new(rem[qlen..].to_vec()))
    }

    /// Formal derivative. Over characteristic 2 the even-power terms vanish.
    pub fn derivative(&self) -> GfPoly {
        let deg = self.degree();
        if deg == 0 {
            return GfPoly::zero();
        }
        let mut out = Vec::with_capacity(deg);
        for power in (1..=deg).rev() {
            let c = self.coeff(power);
            out.push(if power % 2 == 1 { c } else { Gf256::ZERO });
        }
        GfPoly::new(out)
    }
}
