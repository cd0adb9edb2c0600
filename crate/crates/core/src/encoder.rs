//! Space-time codewords and the vectorized system model.
//!
//! A session with `K` active single-antenna helpers and `T = 3` channel uses
//! sends the `K × 3` matrix whose row `k` is `(x_k, τ(x_k), τ²(x_k))` evaluated
//! numerically, i.e. the embedding row of helper `k`'s lattice point. With
//! `x_k = Σ_ℓ q_{k,ℓ} η^ℓ` this is the linear-dispersion form
//! `X_k = Σ_ℓ q_{k,ℓ} C_{k,ℓ}` where `C_{k,ℓ}` is the embedding row of `η^ℓ`.
//!
//! Vectorization is column-major and symbols are ordered user-major, so the
//! equivalent channel column for `(k, ℓ)` is `vec(H_k C_{k,ℓ})`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{FieldElement, GaussianInt};
use crate::lift::{qam_average_energy, LatticePoint};
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Channel uses per session.
pub const SESSION_LENGTH: usize = 3;
/// Complex symbols per helper per session.
pub const SYMBOLS_PER_USER: usize = 3;

/// Mean energy of one unnormalized embedding row per channel use, over
/// uniform `2^m`-QAM coefficients: `E_s · Σ_ℓ Tr(η^{2ℓ}) / T`.
///
/// The traces are computed exactly; for this field `Σ_ℓ Tr(η^{2ℓ}) = 3 + 5 + 13 = 21`.
pub fn mean_row_energy(m: u32) -> Result<f64> {
    let es = qam_average_energy(m)?;
    let mut trace_sum = 0i64;
    for l in 0..SYMBOLS_PER_USER {
        let b = FieldElement::basis(l);
        let (tr, _) = b.checked_mul(&b)?.trace_norm()?;
        trace_sum += tr.re;
    }
    Ok(es * trace_sum as f64 / SESSION_LENGTH as f64)
}

/// Scale factor `1/sqrt(E_avg)` giving unit average energy per antenna per channel use.
pub fn codebook_normalizer(m: u32) -> Result<f64> {
    Ok(1.0 / mean_row_energy(m)?.sqrt())
}

/// Stacked transmit matrix of the active helpers (one row per helper antenna).
#[derive(Clone, Debug, PartialEq)]
pub struct CodeMatrix {
    pub entries: CMatrix,
    pub active_users: usize,
}

impl CodeMatrix {
    /// `X_k`, the `n_t × T` block of user `k` (here a single row).
    pub fn user_block(&self, k: usize) -> CMatrix {
        self.entries.rows(k, 1).into_owned()
    }

    pub fn channel_uses(&self) -> usize {
        self.entries.ncols()
    }
}

fn codeword_from_points(points: &[&LatticePoint], m: u32) -> Result<CodeMatrix> {
    let scale = codebook_normalizer(m)?;
    let entries = CMatrix::from_fn(points.len(), SESSION_LENGTH, |i, j| {
        points[i].embedded_row[j] * scale
    });
    Ok(CodeMatrix {
        entries,
        active_users: points.len(),
    })
}

/// The 2×3 pair-session matrix with rows `(x_i, τ(x_i), τ²(x_i))`, normalized.
pub fn build_pair_codeword(p1: &LatticePoint, p2: &LatticePoint, m: u32) -> Result<CodeMatrix> {
    codeword_from_points(&[p1, p2], m)
}

/// The 1×3 single-helper matrix used by TDMA and by leftover singleton sessions.
pub fn build_tdma_codeword(p: &LatticePoint, m: u32) -> Result<CodeMatrix> {
    codeword_from_points(&[p], m)
}

/// Per-user dispersion matrices `C_{k,ℓ}` (each `1 × T`).
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionBasis {
    pub per_user: Vec<Vec<CMatrix>>,
    pub symbols_per_user: usize,
    pub channel_uses: usize,
}

impl DispersionBasis {
    /// Basis of the algebraic code for `users` simultaneous helpers at `2^m`-QAM.
    pub fn algebraic(users: usize, m: u32) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidParameter("at least one active user".into()));
        }
        let scale = codebook_normalizer(m)?;
        let rows: Vec<CMatrix> = (0..SYMBOLS_PER_USER)
            .map(|l| {
                let row = FieldElement::basis(l).embedding_row();
                CMatrix::from_fn(1, SESSION_LENGTH, |_, j| row[j] * scale)
            })
            .collect();
        Ok(DispersionBasis {
            per_user: vec![rows; users],
            symbols_per_user: SYMBOLS_PER_USER,
            channel_uses: SESSION_LENGTH,
        })
    }

    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    /// `X_k = Σ_ℓ x_{k,ℓ} C_{k,ℓ}` stacked over users.
    pub fn codeword(&self, symbols: &[Vec<GaussianInt>]) -> Result<CodeMatrix> {
        if symbols.len() != self.users() {
            return Err(Error::LengthMismatch {
                expected: self.users(),
                actual: symbols.len(),
            });
        }
        let mut entries = CMatrix::zeros(self.users(), self.channel_uses);
        for (k, (basis, xs)) in self.per_user.iter().zip(symbols).enumerate() {
            if xs.len() != self.symbols_per_user {
                return Err(Error::LengthMismatch {
                    expected: self.symbols_per_user,
                    actual: xs.len(),
                });
            }
            for (c, x) in basis.iter().zip(xs) {
                let mut row = entries.row_mut(k);
                row += c.row(0) * x.to_complex();
            }
        }
        Ok(CodeMatrix {
            entries,
            active_users: self.users(),
        })
    }
}

/// The `(n_r·T) × (K·s)` matrix `H` of `vec(Y) = H x + vec(W)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalentChannel {
    pub matrix: CMatrix,
}

/// Column-major vectorization.
pub fn vectorize(m: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

/// Column `(k, ℓ)` (user-major) is `vec(H_k C_{k,ℓ})`.
pub fn build_equivalent_channel(
    channels: &[CMatrix],
    basis: &DispersionBasis,
) -> Result<EquivalentChannel> {
    if channels.len() != basis.users() {
        return Err(Error::ShapeMismatch(format!(
            "{} channel matrices for {} users",
            channels.len(),
            basis.users()
        )));
    }
    let n_r = channels.first().map(|h| h.nrows()).unwrap_or(0);
    let rows = n_r * basis.channel_uses;
    let cols = basis.users() * basis.symbols_per_user;
    let mut matrix = CMatrix::zeros(rows, cols);
    for (k, (h, cs)) in channels.iter().zip(&basis.per_user).enumerate() {
        for (l, c) in cs.iter().enumerate() {
            if h.nrows() != n_r || h.ncols() != c.nrows() || c.ncols() != basis.channel_uses {
                return Err(Error::ShapeMismatch(format!(
                    "user {k}: channel {}x{}, dispersion {}x{}",
                    h.nrows(),
                    h.ncols(),
                    c.nrows(),
                    c.ncols()
                )));
            }
            let col = vectorize(&(h * c));
            matrix.set_column(k * basis.symbols_per_user + l, &col);
        }
    }
    Ok(EquivalentChannel { matrix })
}

/// Complex-to-real expansion. Each complex entry becomes the block
/// `[Re −Im; Im Re]`, and each complex coordinate becomes `(re, im)`.
pub fn realify(h: &CMatrix, y: &DVector<Complex64>) -> (DMatrix<f64>, DVector<f64>) {
    let (r, c) = h.shape();
    let mut a = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = h[(i, j)];
            a[(2 * i, 2 * j)] = z.re;
            a[(2 * i, 2 * j + 1)] = -z.im;
            a[(2 * i + 1, 2 * j)] = z.im;
            a[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    let b = DVector::from_fn(2 * y.len(), |i, _| {
        if i % 2 == 0 {
            y[i / 2].re
        } else {
            y[i / 2].im
        }
    });
    (a, b)
}

/// Sphere-decodability criterion `n_r·T ≥ K·s`.
pub fn sphere_decodable(s: usize, t: usize, n_r: usize, k: usize) -> bool {
    n_r * t >= k * s
}
