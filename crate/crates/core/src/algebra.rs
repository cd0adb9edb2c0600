//! Exact arithmetic in `O_E = Z[i][η]`, `η = 2cos(2π/7)`.
//!
//! `E = Q(i, η)` is a cyclic cubic extension of `F = Q(i)`. Elements are stored
//! as coefficient triples over the basis `{1, η, η²}` with Gaussian-integer
//! coefficients, and every product is reduced with the minimal polynomial
//! `x³ + x² − 2x − 1` of `η`. The Galois group is generated by `τ: η ↦ η² − 2`,
//! which sends `2cos(2π/7) → 2cos(4π/7) → 2cos(6π/7) → 2cos(2π/7)`.
//!
//! All integer arithmetic is checked; overflow surfaces as [`Error::Overflow`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Exact complex integer `re + im·i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussianInt {
    pub re: i64,
    pub im: i64,
}

impl GaussianInt {
    pub const ZERO: GaussianInt = GaussianInt { re: 0, im: 0 };
    pub const ONE: GaussianInt = GaussianInt { re: 1, im: 0 };
    pub const I: GaussianInt = GaussianInt { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        GaussianInt { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        Ok(GaussianInt {
            re: self.re.checked_add(rhs.re).ok_or(Error::Overflow)?,
            im: self.im.checked_add(rhs.im).ok_or(Error::Overflow)?,
        })
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self> {
        Ok(GaussianInt {
            re: self.re.checked_sub(rhs.re).ok_or(Error::Overflow)?,
            im: self.im.checked_sub(rhs.im).ok_or(Error::Overflow)?,
        })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self> {
        let rr = self.re.checked_mul(rhs.re).ok_or(Error::Overflow)?;
        let ii = self.im.checked_mul(rhs.im).ok_or(Error::Overflow)?;
        let ri = self.re.checked_mul(rhs.im).ok_or(Error::Overflow)?;
        let ir = self.im.checked_mul(rhs.re).ok_or(Error::Overflow)?;
        Ok(GaussianInt {
            re: rr.checked_sub(ii).ok_or(Error::Overflow)?,
            im: ri.checked_add(ir).ok_or(Error::Overflow)?,
        })
    }

    pub fn checked_neg(self) -> Result<Self> {
        Ok(GaussianInt {
            re: self.re.checked_neg().ok_or(Error::Overflow)?,
            im: self.im.checked_neg().ok_or(Error::Overflow)?,
        })
    }

    /// Multiplication by a rational integer.
    pub fn checked_scale(self, k: i64) -> Result<Self> {
        Ok(GaussianInt {
            re: self.re.checked_mul(k).ok_or(Error::Overflow)?,
            im: self.im.checked_mul(k).ok_or(Error::Overflow)?,
        })
    }

    /// Squared absolute value `re² + im²`.
    pub fn norm_sqr(self) -> Result<i64> {
        let a = self.re.checked_mul(self.re).ok_or(Error::Overflow)?;
        let b = self.im.checked_mul(self.im).ok_or(Error::Overflow)?;
        a.checked_add(b).ok_or(Error::Overflow)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
}

impl From<i64> for GaussianInt {
    fn from(re: i64) -> Self {
        GaussianInt { re, im: 0 }
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0 {
            write!(f, "{}-{}i", self.re, self.im.unsigned_abs())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

// Operator forms panic on overflow; use the `checked_*` methods to recover.
impl Add for GaussianInt {
    type Output = GaussianInt;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("GaussianInt addition overflowed")
    }
}

impl Sub for GaussianInt {
    type Output = GaussianInt;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("GaussianInt subtraction overflowed")
    }
}

impl Mul for GaussianInt {
    type Output = GaussianInt;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("GaussianInt multiplication overflowed")
    }
}

impl Neg for GaussianInt {
    type Output = GaussianInt;
    fn neg(self) -> Self {
        self.checked_neg().expect("GaussianInt negation overflowed")
    }
}

/// Monic cubic `x³ + a2·x² + a1·x + a0`, stored as `[a0, a1, a2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinimalPoly {
    pub lower: [i64; 3],
}

/// Minimal polynomial of `η = 2cos(2π/7)`: `x³ + x² − 2x − 1`.
pub const MINIMAL_POLY: MinimalPoly = MinimalPoly { lower: [-1, -2, 1] };

impl MinimalPoly {
    pub fn eval(&self, x: f64) -> f64 {
        let [a0, a1, a2] = self.lower;
        ((x + a2 as f64) * x + a1 as f64) * x + a0 as f64
    }

    /// The three real roots, in the fixed order `ρ0 > ρ1 > ρ2`.
    pub fn roots(&self) -> [f64; 3] {
        ROOTS.map(|e| e.root_value)
    }
}

/// A real embedding `σ_j: η ↦ ρ_j` of `E` into `C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Embedding {
    pub index: usize,
    pub root_value: f64,
}

impl Embedding {
    /// `ρ_j = 2cos(2π(j+1)/7)`, so `ρ0 = 2cos(2π/7) > ρ1 = 2cos(4π/7) > ρ2 = 2cos(6π/7)`.
    pub fn new(index: usize) -> Result<Self> {
        if index > 2 {
            return Err(Error::InvalidParameter(format!(
                "embedding index {index} not in 0..3"
            )));
        }
        Ok(ROOTS[index])
    }

    pub fn all() -> [Embedding; 3] {
        ROOTS
    }
}

const ROOTS: [Embedding; 3] = [
    Embedding {
        index: 0,
        root_value: 1.246_979_603_717_467_2,
    },
    Embedding {
        index: 1,
        root_value: -0.445_041_867_912_628_7,
    },
    Embedding {
        index: 2,
        root_value: -1.801_937_735_804_838,
    },
];

/// Element `c0 + c1·η + c2·η²` of `O_E` with Gaussian-integer coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub coeffs: [GaussianInt; 3],
}

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement {
        coeffs: [GaussianInt::ZERO; 3],
    };
    pub const ONE: FieldElement = FieldElement {
        coeffs: [GaussianInt::ONE, GaussianInt::ZERO, GaussianInt::ZERO],
    };
    pub const ETA: FieldElement = FieldElement {
        coeffs: [GaussianInt::ZERO, GaussianInt::ONE, GaussianInt::ZERO],
    };

    pub const fn new(c0: GaussianInt, c1: GaussianInt, c2: GaussianInt) -> Self {
        FieldElement {
            coeffs: [c0, c1, c2],
        }
    }

    /// Shorthand for elements with rational-integer coefficients.
    pub const fn from_ints(c0: i64, c1: i64, c2: i64) -> Self {
        FieldElement::new(
            GaussianInt::new(c0, 0),
            GaussianInt::new(c1, 0),
            GaussianInt::new(c2, 0),
        )
    }

    pub const fn constant(c: GaussianInt) -> Self {
        FieldElement::new(c, GaussianInt::ZERO, GaussianInt::ZERO)
    }

    /// The basis element `η^ℓ`, `ℓ ∈ {0,1,2}`.
    pub fn basis(l: usize) -> Self {
        let mut coeffs = [GaussianInt::ZERO; 3];
        coeffs[l] = GaussianInt::ONE;
        FieldElement { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(GaussianInt::is_zero)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        let mut coeffs = [GaussianInt::ZERO; 3];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeffs[i].checked_add(rhs.coeffs[i])?;
        }
        Ok(FieldElement { coeffs })
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        let mut coeffs = [GaussianInt::ZERO; 3];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeffs[i].checked_sub(rhs.coeffs[i])?;
        }
        Ok(FieldElement { coeffs })
    }

    /// Exact product reduced modulo the minimal polynomial.
    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        let mut prod = [GaussianInt::ZERO; 5];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                prod[i + j] = prod[i + j].checked_add(a.checked_mul(*b)?)?;
            }
        }
        // η^d = η^(d-3)·η³ and η³ = −a2·η² − a1·η − a0.
        for d in (3..5).rev() {
            let top = prod[d];
            prod[d] = GaussianInt::ZERO;
            for (i, a) in MINIMAL_POLY.lower.iter().enumerate() {
                prod[d - 3 + i] = prod[d - 3 + i].checked_sub(top.checked_scale(*a)?)?;
            }
        }
        Ok(FieldElement {
            coeffs: [prod[0], prod[1], prod[2]],
        })
    }

    /// `τ^power(x)`, by substituting the image of `η` into `x` and reducing.
    ///
    /// The power is applied literally (not reduced mod 3), so `apply_tau(x, 3)`
    /// exercises three compositions.
    pub fn apply_tau(&self, power: u32) -> Result<Self> {
        // τ(η) = η² − 2; τ^(p+1)(η) = τ^p(η)² − 2.
        let two = FieldElement::from_ints(2, 0, 0);
        let mut image = FieldElement::ETA;
        for _ in 0..power {
            image = image.checked_mul(&image)?.checked_sub(&two)?;
        }
        let image_sq = image.checked_mul(&image)?;
        let [c0, c1, c2] = self.coeffs;
        FieldElement::constant(c0)
            .checked_add(&image.scale_by(c1)?)?
            .checked_add(&image_sq.scale_by(c2)?)
    }

    /// Multiplication by a Gaussian integer.
    pub fn scale_by(&self, g: GaussianInt) -> Result<Self> {
        let mut coeffs = [GaussianInt::ZERO; 3];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeffs[i].checked_mul(g)?;
        }
        Ok(FieldElement { coeffs })
    }

    /// `σ_j(x) = c0 + c1·ρ_j + c2·ρ_j²`.
    pub fn embed(&self, j: usize) -> Result<Complex64> {
        let rho = Embedding::new(j)?.root_value;
        Ok(self.embed_at(rho))
    }

    fn embed_at(&self, rho: f64) -> Complex64 {
        let [c0, c1, c2] = self.coeffs;
        c0.to_complex() + c1.to_complex() * rho + c2.to_complex() * (rho * rho)
    }

    /// `(σ_0(x), σ_1(x), σ_2(x))`, which equals `(x, τ(x), τ²(x))` evaluated at `ρ0`.
    pub fn embedding_row(&self) -> [Complex64; 3] {
        ROOTS.map(|e| self.embed_at(e.root_value))
    }

    /// Relative trace and norm down to `Q(i)`.
    ///
    /// Fails with [`Error::NotRational`] if either result has a non-zero `η`
    /// or `η²` coefficient, which can only happen if `τ` or the reduction is wrong.
    pub fn trace_norm(&self) -> Result<(GaussianInt, GaussianInt)> {
        let t1 = self.apply_tau(1)?;
        let t2 = self.apply_tau(2)?;
        let trace = self.checked_add(&t1)?.checked_add(&t2)?;
        let norm = self.checked_mul(&t1)?.checked_mul(&t2)?;
        Ok((trace.as_rational()?, norm.as_rational()?))
    }

    fn as_rational(&self) -> Result<GaussianInt> {
        if self.coeffs[1].is_zero() && self.coeffs[2].is_zero() {
            Ok(self.coeffs[0])
        } else {
            Err(Error::NotRational(self.to_string()))
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c0, c1, c2] = self.coeffs;
        write!(f, "({c0}) + ({c1})η + ({c2})η²")
    }
}

impl From<GaussianInt> for FieldElement {
    fn from(g: GaussianInt) -> Self {
        FieldElement::constant(g)
    }
}

/// Coefficient-wise sum.
pub fn fe_add(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    a.checked_add(b)
}

/// Product reduced modulo `x³ + x² − 2x − 1`.
pub fn fe_mul(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    a.checked_mul(b)
}

pub fn apply_tau(x: &FieldElement, power: u32) -> Result<FieldElement> {
    x.apply_tau(power)
}

pub fn embed(x: &FieldElement, j: usize) -> Result<Complex64> {
    x.embed(j)
}

pub fn trace_norm(x: &FieldElement) -> Result<(GaussianInt, GaussianInt)> {
    x.trace_norm()
}
