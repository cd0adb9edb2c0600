//! Block-Rayleigh multiple-access channel, `Y = sqrt(SNR)·Σ_k H_k X_k + W`.
//!
//! Every entry of `H_k` and `W` is i.i.d. `CN(0, 1)`. `H_k` is held constant over
//! the `T` channel uses of a session and redrawn for the next one. The SNR is the
//! per-receive-antenna ratio for a unit-energy codebook with unit noise variance;
//! the `sqrt(SNR)` scale is applied at the transmitter.

use num_complex::Complex64;
use rand::Rng;

use crate::encoder::{CMatrix, CodeMatrix};
use crate::rng::complex_gaussian;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub snr_linear: f64,
}

impl SnrPoint {
    pub fn from_db(snr_db: f64) -> Result<Self> {
        let snr_linear = 10f64.powf(snr_db / 10.0);
        if !snr_linear.is_finite() || snr_linear <= 0.0 {
            return Err(Error::InvalidParameter(format!("SNR {snr_db} dB is not representable")));
        }
        Ok(SnrPoint { snr_db, snr_linear })
    }

    pub fn amplitude(&self) -> f64 {
        self.snr_linear.sqrt()
    }
}

/// Per-user `n_r × n_t` fading matrices for one session.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub users: Vec<CMatrix>,
}

impl ChannelRealization {
    pub fn receive_antennas(&self) -> usize {
        self.users.first().map_or(0, |h| h.nrows())
    }

    /// `[H_1 ⋯ H_K]`, `n_r × K·n_t`.
    pub fn stacked(&self) -> CMatrix {
        let n_r = self.receive_antennas();
        let cols: usize = self.users.iter().map(|h| h.ncols()).sum();
        let mut out = CMatrix::zeros(n_r, cols);
        let mut c = 0;
        for h in &self.users {
            out.view_mut((0, c), h.shape()).copy_from(h);
            c += h.ncols();
        }
        out
    }

    /// Deterministic channel: user `k`'s antenna lands on receive antenna `k mod n_r`.
    pub fn identity(n_r: usize, k_active: usize) -> Self {
        let users = (0..k_active)
            .map(|k| {
                let mut h = CMatrix::zeros(n_r, 1);
                h[(k % n_r, 0)] = 1.0.into();
                h
            })
            .collect();
        ChannelRealization { users }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseBlock {
    pub w: CMatrix,
}

impl NoiseBlock {
    pub fn zeros(n_r: usize, t: usize) -> Self {
        NoiseBlock {
            w: CMatrix::zeros(n_r, t),
        }
    }
}

/// Fresh channel and noise for one session. Draws the channel entries user by
/// user (column-major), then the noise (column-major).
pub fn draw_session<R: Rng + ?Sized>(
    rng: &mut R,
    n_r: usize,
    n_t: usize,
    k_active: usize,
    t: usize,
) -> (ChannelRealization, NoiseBlock) {
    let chan = draw_channel(rng, n_r, n_t, k_active);
    let w = CMatrix::from_fn(n_r, t, |_, _| complex_gaussian(rng));
    (chan, NoiseBlock { w })
}

/// Channel matrices only, for outage trials that need no noise.
pub fn draw_channel<R: Rng + ?Sized>(
    rng: &mut R,
    n_r: usize,
    n_t: usize,
    k_active: usize,
) -> ChannelRealization {
    let users = (0..k_active)
        .map(|_| CMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(rng)))
        .collect();
    ChannelRealization { users }
}

/// `Y = sqrt(SNR)·Σ_k H_k X_k + W`.
pub fn transmit(
    x: &CodeMatrix,
    chan: &ChannelRealization,
    noise: &NoiseBlock,
    snr: SnrPoint,
) -> Result<CMatrix> {
    let n_r = chan.receive_antennas();
    let t = x.channel_uses();
    if chan.users.len() != x.active_users {
        return Err(Error::ShapeMismatch(format!(
            "{} channel matrices for {} active users",
            chan.users.len(),
            x.active_users
        )));
    }
    if noise.w.shape() != (n_r, t) {
        return Err(Error::ShapeMismatch(format!(
            "noise is {:?}, expected ({n_r}, {t})",
            noise.w.shape()
        )));
    }
    let mut y = CMatrix::zeros(n_r, t);
    let mut row = 0;
    for h in &chan.users {
        if h.nrows() != n_r || row + h.ncols() > x.entries.nrows() {
            return Err(Error::ShapeMismatch("channel does not match codeword rows".into()));
        }
        y += h * x.entries.rows(row, h.ncols());
        row += h.ncols();
    }
    Ok(y * Complex64::from(snr.amplitude()) + &noise.w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::build_pair_codeword;
    use crate::lift::{lift, Fragment};
    use crate::rng::trial_rng;

    #[test]
    fn draws_are_deterministic() {
        let a = draw_session(&mut trial_rng(11, 42), 2, 1, 2, 3);
        let b = draw_session(&mut trial_rng(11, 42), 2, 1, 2, 3);
        assert_eq!(a, b);
        let c = draw_session(&mut trial_rng(11, 43), 2, 1, 2, 3);
        assert_ne!(a, c);
    }

    #[test]
    fn entry_statistics() {
        let n = 1_000_000;
        let mut rng = trial_rng(2024, 0);
        let mut power = 0.0;
        let mut cross = Vec::with_capacity(n);
        for _ in 0..n {
            let z = complex_gaussian(&mut rng);
            power += z.norm_sqr();
            cross.push(z.re * z.im);
        }
        let power = power / n as f64;
        assert!((0.99..=1.01).contains(&power), "E|h|^2 = {power}");
        let mean = cross.iter().sum::<f64>() / n as f64;
        let var = cross.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "E[Re Im] = {mean}, se {se}");
    }

    fn pair_codeword(i: u64, j: u64) -> CodeMatrix {
        let p = lift(&Fragment::from_index(i, 2).unwrap()).unwrap();
        let q = lift(&Fragment::from_index(j, 2).unwrap()).unwrap();
        build_pair_codeword(&p, &q, 2).unwrap()
    }

    #[test]
    fn identity_channel_noiseless() {
        let x = pair_codeword(5, 17);
        let snr = SnrPoint::from_db(20.0).unwrap();
        let chan = ChannelRealization::identity(2, 2);
        let y = transmit(&x, &chan, &NoiseBlock::zeros(2, 3), snr).unwrap();
        assert!((y - &x.entries * Complex64::from(snr.amplitude())).norm() < 1e-12);
    }

    #[test]
    fn zero_codeword_gives_noise() {
        let x = CodeMatrix {
            entries: CMatrix::zeros(2, 3),
            active_users: 2,
        };
        let (chan, noise) = draw_session(&mut trial_rng(1, 1), 2, 1, 2, 3);
        let y = transmit(&x, &chan, &noise, SnrPoint::from_db(10.0).unwrap()).unwrap();
        assert_eq!(y, noise.w);
    }

    #[test]
    fn superposition_without_noise() {
        let x1 = pair_codeword(1, 2);
        let x2 = pair_codeword(40, 63);
        let sum = CodeMatrix {
            entries: &x1.entries + &x2.entries,
            active_users: 2,
        };
        let (chan, _) = draw_session(&mut trial_rng(3, 3), 2, 1, 2, 3);
        let zero = NoiseBlock::zeros(2, 3);
        let snr = SnrPoint::from_db(7.0).unwrap();
        let y = transmit(&sum, &chan, &zero, snr).unwrap();
        let y1 = transmit(&x1, &chan, &zero, snr).unwrap();
        let y2 = transmit(&x2, &chan, &zero, snr).unwrap();
        assert!((y - y1 - y2).norm() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = pair_codeword(0, 0);
        let (chan, noise) = draw_session(&mut trial_rng(0, 0), 2, 1, 1, 3);
        assert!(transmit(&x, &chan, &noise, SnrPoint::from_db(0.0).unwrap()).is_err());
        let (chan, _) = draw_session(&mut trial_rng(0, 0), 2, 1, 2, 3);
        let bad = NoiseBlock::zeros(2, 4);
        assert!(transmit(&x, &chan, &bad, SnrPoint::from_db(0.0).unwrap()).is_err());
    }

    /// Received signal-to-noise energy ratio is `SNR · n_t · K_active`: each active
    /// unit-energy helper contributes `n_r·T` expected energy, the noise `n_r·T`.
    #[test]
    fn received_snr_calibration() {
        let snr = SnrPoint::from_db(10.0).unwrap();
        let trials = 100_000u64;
        let (mut sig, mut noi) = (0.0, 0.0);
        for t in 0..trials {
            let mut rng = trial_rng(77, t);
            use rand::Rng;
            let x = pair_codeword(rng.random_range(0..64), rng.random_range(0..64));
            let (chan, noise) = draw_session(&mut rng, 2, 1, 2, 3);
            let clean = transmit(&x, &chan, &NoiseBlock::zeros(2, 3), snr).unwrap();
            sig += clean.norm_squared();
            noi += noise.w.norm_squared();
        }
        let ratio = sig / noi;
        let expected = snr.snr_linear * 1.0 * 2.0;
        assert!((ratio / expected - 1.0).abs() < 0.03, "ratio {ratio}, expected {expected}");
    }

    #[test]
    fn stacked_layout() {
        let chan = ChannelRealization::identity(2, 2);
        let s = chan.stacked();
        assert_eq!(s, CMatrix::identity(2, 2));
        assert_eq!(s[(0, 0)], Complex64::new(1.0, 0.0));
    }
}
