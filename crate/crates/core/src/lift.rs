//! The lift from stored bit fragments to lattice points, and its inverse.
//!
//! A fragment of `3m` bits is split into three `m`-bit blocks. Each block is
//! Gray-mapped onto square `2^m`-QAM (`m/2` in-phase bits first, then `m/2`
//! quadrature bits, reflected binary Gray code per axis over the odd levels
//! `−(M−1), …, M−1`, `M = 2^(m/2)`), giving `q1, q2, q3`. The lattice point is
//! `x = q1 + q2·η + q3·η²` together with its embedding row `(σ0(x), σ1(x), σ2(x))`.

use num_complex::Complex64;

use crate::algebra::{FieldElement, GaussianInt};
use crate::{Error, Result};

/// Largest supported bits-per-symbol.
pub const MAX_M: u32 = 32;

fn check_m(m: u32) -> Result<()> {
    if m < 2 || !m.is_multiple_of(2) || m > MAX_M {
        return Err(Error::InvalidParameter(format!(
            "bits per QAM symbol must be even and in 2..={MAX_M}, got {m}"
        )));
    }
    Ok(())
}

/// Odd PAM levels `−(M−1), …, M−1` for one QAM axis, ascending.
pub fn pam_levels(m: u32) -> Result<Vec<i64>> {
    check_m(m)?;
    let side = 1i64 << (m / 2);
    Ok((0..side).map(|i| 2 * i - (side - 1)).collect())
}

/// Mean of `|q|²` over the uniform square `2^m`-QAM set: `2(M²−1)/3`.
pub fn qam_average_energy(m: u32) -> Result<f64> {
    check_m(m)?;
    let side = (1u64 << (m / 2)) as f64;
    Ok(2.0 * (side * side - 1.0) / 3.0)
}

fn gray_to_index(mut g: u64) -> u64 {
    let mut shift = 1;
    while shift < 64 {
        g ^= g >> shift;
        shift <<= 1;
    }
    g
}

fn index_to_gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

fn bits_to_u64(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

fn u64_to_bits(v: u64, width: usize, out: &mut Vec<bool>) {
    out.extend((0..width).rev().map(|i| (v >> i) & 1 == 1));
}

fn axis_level(bits: &[bool]) -> i64 {
    let side = 1i64 << bits.len();
    2 * gray_to_index(bits_to_u64(bits)) as i64 - (side - 1)
}

fn axis_bits(level: i64, half: u32, out: &mut Vec<bool>) -> Result<()> {
    let side = 1i64 << half;
    if level % 2 == 0 || level.abs() > side - 1 {
        return Err(Error::OutOfConstellation(format!(
            "level {level} for {}-PAM",
            side
        )));
    }
    let index = ((level + side - 1) / 2) as u64;
    u64_to_bits(index_to_gray(index), half as usize, out);
    Ok(())
}

/// A point of square `2^m`-QAM: both coordinates odd with magnitude at most `2^(m/2) − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QamSymbol {
    value: GaussianInt,
    m: u32,
}

impl QamSymbol {
    pub fn new(value: GaussianInt, m: u32) -> Result<Self> {
        check_m(m)?;
        let max = (1i64 << (m / 2)) - 1;
        let ok = |c: i64| c % 2 != 0 && c.abs() <= max;
        if !ok(value.re) || !ok(value.im) {
            return Err(Error::OutOfConstellation(format!("{value} for {}-QAM", 1u64 << m)));
        }
        Ok(QamSymbol { value, m })
    }

    pub fn value(&self) -> GaussianInt {
        self.value
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m
    }
}

/// Gray map from an `m`-bit string (with `m = bits.len()`) to `2^m`-QAM.
pub fn gray_encode(bits: &[bool]) -> Result<QamSymbol> {
    let m = bits.len() as u32;
    check_m(m)?;
    let half = bits.len() / 2;
    let value = GaussianInt::new(axis_level(&bits[..half]), axis_level(&bits[half..]));
    QamSymbol::new(value, m)
}

/// Inverse Gray map.
pub fn gray_decode(q: &QamSymbol) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(q.m as usize);
    axis_bits(q.value.re, q.m / 2, &mut out)?;
    axis_bits(q.value.im, q.m / 2, &mut out)?;
    Ok(out)
}

/// A stored fragment of exactly `3m` bits feeding one lattice point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fragment {
    bits: Vec<bool>,
    m: u32,
}

impl Fragment {
    pub fn new(bits: Vec<bool>, m: u32) -> Result<Self> {
        check_m(m)?;
        if bits.len() != 3 * m as usize {
            return Err(Error::LengthMismatch {
                expected: 3 * m as usize,
                actual: bits.len(),
            });
        }
        Ok(Fragment { bits, m })
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn from_bit_str(s: &str, m: u32) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Fragment::new(bits, m)
    }

    /// Fragment number `index` in lexicographic order (bit 0 is the most significant).
    pub fn from_index(index: u64, m: u32) -> Result<Self> {
        let mut bits = Vec::with_capacity(3 * m as usize);
        u64_to_bits(index, 3 * m as usize, &mut bits);
        Fragment::new(bits, m)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn m(&self) -> u32 {
        self.m
    }
}

/// A constellation point: the field element and its (unnormalized) embedding row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticePoint {
    pub element: FieldElement,
    pub embedded_row: [Complex64; 3],
}

impl LatticePoint {
    pub fn new(element: FieldElement) -> Self {
        LatticePoint {
            element,
            embedded_row: element.embedding_row(),
        }
    }
}

/// `L = f ∘ g`: three Gray-mapped QAM symbols become the coefficients of `x`.
pub fn lift(frag: &Fragment) -> Result<LatticePoint> {
    let m = frag.m as usize;
    let q: Vec<GaussianInt> = frag
        .bits
        .chunks(m)
        .map(|block| gray_encode(block).map(|s| s.value()))
        .collect::<Result<_>>()?;
    Ok(LatticePoint::new(FieldElement::new(q[0], q[1], q[2])))
}

/// `L⁻¹`. Fails if a coefficient is not a `2^m`-QAM symbol.
pub fn unlift(p: &LatticePoint, m: u32) -> Result<Fragment> {
    let mut bits = Vec::with_capacity(3 * m as usize);
    for c in p.element.coeffs {
        bits.extend(gray_decode(&QamSymbol::new(c, m)?)?);
    }
    Fragment::new(bits, m)
}
