//! Exact maximum-likelihood decoding of `y = H x + w` over a finite integer alphabet.
//!
//! [`sphere_decode`] triangularizes `H = QR` and runs a depth-first
//! Schnorr–Euchner search from the last coordinate to the first: at every level
//! the admissible alphabet values are visited in order of increasing partial
//! metric, a branch is cut once its partial metric exceeds the best full metric
//! found so far, and the radius starts at infinity. [`brute_force_ml`] scans the
//! whole product alphabet and is the definitional oracle.
//!
//! Both decoders break ties (metrics within `1e-9·(1 + best)`) in favour of the
//! lexicographically smallest coordinate vector and report the metric as the
//! directly computed `‖y − H x‖²`, so their outputs are comparable bit for bit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{FieldElement, GaussianInt};
use crate::channel::{ChannelRealization, SnrPoint};
use crate::encoder::{
    build_equivalent_channel, realify, sphere_decodable, vectorize, CMatrix, DispersionBasis,
};
use crate::lift::{pam_levels, LatticePoint};
use crate::{Error, Result};

/// Diagonal entries of `R` below this magnitude count as rank deficiency.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Largest product alphabet the brute-force oracle will scan.
pub const BRUTE_FORCE_LIMIT: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderMode {
    #[default]
    Sphere,
    /// Brute-force ML oracle.
    Ml,
}

impl std::str::FromStr for DecoderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(DecoderMode::Sphere),
            "ml" | "oracle" => Ok(DecoderMode::Ml),
            other => Err(Error::InvalidParameter(format!("unknown decoder {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeProblem {
    pub matrix: DMatrix<f64>,
    pub observation: DVector<f64>,
    /// Allowed values per coordinate, ascending.
    pub alphabets: Vec<Vec<i64>>,
}

impl DecodeProblem {
    pub fn new(matrix: DMatrix<f64>, observation: DVector<f64>, alphabets: Vec<Vec<i64>>) -> Result<Self> {
        if matrix.nrows() != observation.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but observation of length {}",
                matrix.nrows(),
                observation.len()
            )));
        }
        if matrix.ncols() != alphabets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} columns but {} alphabets",
                matrix.ncols(),
                alphabets.len()
            )));
        }
        if matrix.nrows() < matrix.ncols() {
            return Err(Error::InvalidParameter(format!(
                "underdetermined system: {} rows < {} columns",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut alphabets = alphabets;
        for a in &mut alphabets {
            a.sort_unstable();
            a.dedup();
            if a.is_empty() {
                return Err(Error::InvalidParameter("empty coordinate alphabet".into()));
            }
        }
        Ok(DecodeProblem {
            matrix,
            observation,
            alphabets,
        })
    }

    /// Same alphabet on every coordinate.
    pub fn uniform(matrix: DMatrix<f64>, observation: DVector<f64>, alphabet: &[i64]) -> Result<Self> {
        let n = matrix.ncols();
        DecodeProblem::new(matrix, observation, vec![alphabet.to_vec(); n])
    }

    pub fn dimension(&self) -> usize {
        self.matrix.ncols()
    }

    /// `‖y − H x‖²`.
    pub fn metric(&self, x: &[i64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.matrix.nrows() {
            let mut r = self.observation[i];
            for (j, &xj) in x.iter().enumerate() {
                r -= self.matrix[(i, j)] * xj as f64;
            }
            total += r * r;
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub coordinates: Vec<i64>,
    /// Squared Euclidean distance `‖y − H x̂‖²`.
    pub metric: f64,
    pub visited_nodes: u64,
    /// Set when the sphere decoder fell back to brute force on a rank-deficient `R`.
    pub fallback: bool,
}

fn tie_tolerance(best: f64) -> f64 {
    1e-9 * (1.0 + best)
}

/// `true` if `(metric, x)` should replace the incumbent `(best, best_x)`.
fn improves(metric: f64, x: &[i64], best: Option<(f64, &[i64])>) -> bool {
    match best {
        None => true,
        Some((b, bx)) => {
            let tol = tie_tolerance(b);
            metric < b - tol || (metric <= b + tol && x < bx)
        }
    }
}

/// Exhaustive ML search in lexicographic order.
pub fn brute_force_ml(p: &DecodeProblem) -> Result<DecodeResult> {
    let size = p
        .alphabets
        .iter()
        .try_fold(1u128, |acc, a| acc.checked_mul(a.len() as u128))
        .unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge(size));
    }
    let n = p.dimension();
    let mut digits = vec![0usize; n];
    let mut x: Vec<i64> = p.alphabets.iter().map(|a| a[0]).collect();
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut visited = 0u64;
    loop {
        visited += 1;
        let metric = p.metric(&x);
        if improves(metric, &x, best.as_ref().map(|(b, bx)| (*b, bx.as_slice()))) {
            best = Some((metric, x.clone()));
        }
        // mixed-radix increment, last coordinate fastest
        let mut i = n;
        loop {
            if i == 0 {
                let (metric, coordinates) = best.expect("at least one candidate");
                return Ok(DecodeResult {
                    coordinates,
                    metric,
                    visited_nodes: visited,
                    fallback: false,
                });
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < p.alphabets[i].len() {
                x[i] = p.alphabets[i][digits[i]];
                break;
            }
            digits[i] = 0;
            x[i] = p.alphabets[i][0];
        }
    }
}

struct Search<'a> {
    r: &'a DMatrix<f64>,
    z: &'a DVector<f64>,
    alphabets: &'a [Vec<i64>],
    x: Vec<i64>,
    best: Option<(f64, Vec<i64>)>,
    visited: u64,
    candidates: Vec<Vec<(f64, i64)>>,
}

impl Search<'_> {
    fn radius(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |(b, _)| *b)
    }

    fn descend(&mut self, level: usize, partial: f64) {
        let n = self.x.len();
        let mut s = self.z[level];
        for j in level + 1..n {
            s -= self.r[(level, j)] * self.x[j] as f64;
        }
        let rii = self.r[(level, level)];
        let mut cands = std::mem::take(&mut self.candidates[level]);
        cands.clear();
        cands.extend(self.alphabets[level].iter().map(|&a| {
            let e = s - rii * a as f64;
            (e * e, a)
        }));
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(inc, a) in &cands {
            let d = partial + inc;
            let radius = self.radius();
            if d > radius + tie_tolerance(radius) {
                break;
            }
            self.visited += 1;
            self.x[level] = a;
            if level == 0 {
                let best = self.best.as_ref().map(|(b, bx)| (*b, bx.as_slice()));
                if improves(d, &self.x, best) {
                    self.best = Some((d, self.x.clone()));
                }
            } else {
                self.descend(level - 1, d);
            }
        }
        self.candidates[level] = cands;
    }
}

/// Exact ML decoding by QR preprocessing and depth-first enumeration.
pub fn sphere_decode(p: &DecodeProblem) -> Result<DecodeResult> {
    let n = p.dimension();
    if n == 0 {
        return Ok(DecodeResult {
            coordinates: vec![],
            metric: p.observation.norm_squared(),
            visited_nodes: 0,
            fallback: false,
        });
    }
    let qr = p.matrix.clone().qr();
    let r = qr.r();
    if (0..n).any(|i| r[(i, i)].abs() < RANK_TOLERANCE) {
        let mut out = brute_force_ml(p)?;
        out.fallback = true;
        return Ok(out);
    }
    let z = qr.q().transpose() * &p.observation;
    let mut search = Search {
        r: &r,
        z: &z,
        alphabets: &p.alphabets,
        x: vec![0; n],
        best: None,
        visited: 0,
        candidates: vec![Vec::new(); n],
    };
    search.descend(n - 1, 0.0);
    let visited = search.visited;
    let (_, coordinates) = search.best.expect("infinite initial radius admits a leaf");
    Ok(DecodeResult {
        metric: p.metric(&coordinates),
        coordinates,
        visited_nodes: visited,
        fallback: false,
    })
}

pub fn decode(p: &DecodeProblem, mode: DecoderMode) -> Result<DecodeResult> {
    match mode {
        DecoderMode::Sphere => sphere_decode(p),
        DecoderMode::Ml => brute_force_ml(p),
    }
}

/// Decoded lattice points of one session plus search statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionDecode {
    pub points: Vec<LatticePoint>,
    pub visited_nodes: u64,
    pub fallback: bool,
}

/// Builds the real system for a received session matrix.
pub fn session_problem(
    y: &CMatrix,
    chan: &ChannelRealization,
    basis: &DispersionBasis,
    snr: SnrPoint,
    m: u32,
) -> Result<DecodeProblem> {
    let scaled: Vec<CMatrix> = chan.users.iter().map(|h| h * num_complex::Complex64::from(snr.amplitude())).collect();
    let eq = build_equivalent_channel(&scaled, basis)?;
    if eq.matrix.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "received {}x{}, system expects {} entries",
            y.nrows(),
            y.ncols(),
            eq.matrix.nrows()
        )));
    }
    let (a, b) = realify(&eq.matrix, &vectorize(y));
    let levels = pam_levels(m)?;
    DecodeProblem::uniform(a, b, &levels)
}

/// Full receiver: equivalent channel, realification, ML decoding, regrouping
/// into one lattice point per active helper.
pub fn decode_session(
    y: &CMatrix,
    chan: &ChannelRealization,
    basis: &DispersionBasis,
    snr: SnrPoint,
    mode: DecoderMode,
    m: u32,
) -> Result<SessionDecode> {
    let users = chan.users.len();
    if mode == DecoderMode::Sphere
        && !sphere_decodable(basis.symbols_per_user, basis.channel_uses, chan.receive_antennas(), users)
    {
        return Err(Error::InvalidParameter(format!(
            "{users} users with {} receive antennas is not sphere-decodable",
            chan.receive_antennas()
        )));
    }
    let problem = session_problem(y, chan, basis, snr, m)?;
    let result = decode(&problem, mode)?;
    let points = regroup(&result.coordinates, basis.symbols_per_user)?;
    Ok(SessionDecode {
        points,
        visited_nodes: result.visited_nodes,
        fallback: result.fallback,
    })
}

/// Real coordinates `(re, im)` per symbol, `s` symbols per user → lattice points.
pub fn regroup(coords: &[i64], s: usize) -> Result<Vec<LatticePoint>> {
    if s != 3 || !coords.len().is_multiple_of(2 * s) {
        return Err(Error::LengthMismatch {
            expected: 2 * s * (coords.len() / (2 * s)).max(1),
            actual: coords.len(),
        });
    }
    Ok(coords
        .chunks(2 * s)
        .map(|c| {
            let g = |l: usize| GaussianInt::new(c[2 * l], c[2 * l + 1]);
            LatticePoint::new(FieldElement::new(g(0), g(1), g(2)))
        })
        .collect())
}
