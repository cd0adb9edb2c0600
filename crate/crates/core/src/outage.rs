//! Monte Carlo outage probability and diversity-slope regression.
//!
//! At finite SNR a multiplexing gain `r` is mapped to the rate
//! `R = r·log2(SNR) + offset` bits per channel use; the offset keeps `r = 0`
//! meaningful. A channel draw is in outage when the instantaneous mutual
//! information cannot support the attempted rates:
//!
//! - TDMA: one helper on its `n_r × 1` channel at gain `K r`.
//! - Pair: two helpers, each at gain `K r / 2`; outage if either single-user
//!   constraint or the joint sum-rate constraint fails.
//! - Full MAC: all `K` helpers at gain `r`; outage if any of the `2^K − 1`
//!   subset constraints fails.
//!
//! Each trial index owns one channel draw that is reused across the SNR grid,
//! so the counts at different SNRs are coupled and the whole result is a
//! function of `(seed, trial index)` only.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channel, ChannelRealization, SnrPoint};
use crate::dmt::{to_f64, Rational};
use crate::rng::trial_rng;
use crate::{Error, Result};

/// Largest helper count for exhaustive subset enumeration.
pub const MAX_FULL_MAC_USERS: u32 = 12;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutageScheme {
    Tdma,
    Pair,
    FullMac,
}

impl OutageScheme {
    pub fn name(&self) -> &'static str {
        match self {
            OutageScheme::Tdma => "tdma",
            OutageScheme::Pair => "pair",
            OutageScheme::FullMac => "full-mac",
        }
    }

    /// Helpers whose channels one trial draws.
    fn users(&self, k: u32) -> usize {
        match self {
            OutageScheme::Tdma => 1,
            OutageScheme::Pair => 2,
            OutageScheme::FullMac => k as usize,
        }
    }
}

impl std::str::FromStr for OutageScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tdma" => Ok(OutageScheme::Tdma),
            "pair" => Ok(OutageScheme::Pair),
            "full-mac" | "mac" => Ok(OutageScheme::FullMac),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

/// `log2 det(I + snr · Σ_{k∈S} h_k h_k†)` over the users selected by `mask`.
fn log2det_subset(chan: &ChannelRealization, mask: u64, snr: f64) -> f64 {
    let n_r = chan.receive_antennas();
    let mut a = DMatrix::<Complex64>::identity(n_r, n_r);
    for (k, h) in chan.users.iter().enumerate() {
        if mask >> k & 1 == 1 {
            a += h * h.adjoint() * Complex64::from(snr);
        }
    }
    if n_r == 2 {
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        return det.re.log2();
    }
    match a.cholesky() {
        Some(c) => c.l().diagonal().iter().map(|d| 2.0 * d.re.log2()).sum(),
        None => 0.0,
    }
}

fn rate(gain: f64, snr: SnrPoint, offset: f64) -> f64 {
    gain * snr.snr_linear.log2() + offset
}

/// One helper at multiplexing gain `K r`.
pub fn outage_trial_tdma(chan: &ChannelRealization, snr: SnrPoint, k: u32, r: Rational, offset: f64) -> bool {
    let target = rate(k as f64 * to_f64(r), snr, offset);
    log2det_subset(chan, 1, snr.snr_linear) < target
}

/// Two simultaneous helpers, each at multiplexing gain `K r / 2`.
pub fn outage_trial_pair(chan: &ChannelRealization, snr: SnrPoint, k: u32, r: Rational, offset: f64) -> bool {
    let per_user = rate(k as f64 * to_f64(r) / 2.0, snr, offset);
    log2det_subset(chan, 0b01, snr.snr_linear) < per_user
        || log2det_subset(chan, 0b10, snr.snr_linear) < per_user
        || log2det_subset(chan, 0b11, snr.snr_linear) < 2.0 * per_user
}

/// All `K` helpers simultaneously at multiplexing gain `r`.
pub fn outage_trial_full_mac(
    chan: &ChannelRealization,
    snr: SnrPoint,
    k: u32,
    r: Rational,
    offset: f64,
) -> Result<bool> {
    if k > MAX_FULL_MAC_USERS {
        return Err(Error::InvalidParameter(format!(
            "full-MAC subset enumeration is limited to K <= {MAX_FULL_MAC_USERS}, got {k}"
        )));
    }
    if chan.users.len() != k as usize {
        return Err(Error::ShapeMismatch(format!("{} channels for K = {k}", chan.users.len())));
    }
    let per_user = rate(to_f64(r), snr, offset);
    Ok((1u64..1 << k).any(|mask| {
        let size = mask.count_ones() as f64;
        log2det_subset(chan, mask, snr.snr_linear) < size * per_user
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutageSpec {
    pub scheme: OutageScheme,
    pub k: u32,
    pub r: Rational,
    pub rate_offset_bits: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl OutageSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if self.scheme == OutageScheme::FullMac && self.k > MAX_FULL_MAC_USERS {
            return Err(Error::InvalidParameter(format!(
                "full-MAC needs K <= {MAX_FULL_MAC_USERS}, got {}",
                self.k
            )));
        }
        if self.r < Rational::from_integer(0) {
            return Err(Error::InvalidParameter("r must be non-negative".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("SNR grid must be non-empty and strictly ascending".into()));
        }
        for &db in &self.snr_grid_db {
            SnrPoint::from_db(db)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub snr_db: f64,
    pub outages: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl CellEstimate {
    pub fn new(snr_db: f64, outages: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(outages, trials);
        CellEstimate {
            snr_db,
            outages,
            trials,
            p_hat: outages as f64 / trials as f64,
            ci_lo,
            ci_hi,
        }
    }

    pub fn overlaps(&self, other: &CellEstimate) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub d_hat: f64,
    /// Standard error of the slope; `None` when only two points were usable.
    pub stderr: Option<f64>,
    /// Indices of the points used in the fit.
    pub used: Vec<usize>,
    /// Indices dropped for having zero outage events.
    pub excluded: Vec<usize>,
}

/// Least-squares slope of `−log10 p̂` against `log10 SNR`.
///
/// `points` are `(snr_linear, p_hat)`. Cells with `p̂ = 0` are excluded and
/// reported; fewer than two usable cells is an [`Error::InsufficientData`].
pub fn estimate_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for (i, &(_, p)) in points.iter().enumerate() {
        if p > 0.0 {
            used.push(i);
        } else {
            excluded.push(i);
        }
    }
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} of {} SNR points have outage events; need at least 2",
            used.len(),
            points.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&i| points[i].0.log10()).collect();
    let ys: Vec<f64> = used.iter().map(|&i| -points[i].1.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("SNR points coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let d_hat = sxy / sxx;
    let stderr = (used.len() > 2).then(|| {
        let intercept = my - d_hat * mx;
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - d_hat * x).powi(2))
            .sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    });
    Ok(SlopeFit {
        d_hat,
        stderr,
        used,
        excluded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub cells: Vec<CellEstimate>,
    pub slope: Option<SlopeFit>,
}

fn trial_flags(spec: &OutageSpec, snrs: &[SnrPoint], trial: u64, out: &mut [u64]) -> Result<()> {
    let mut rng = trial_rng(spec.seed, trial);
    let chan = draw_channel(&mut rng, 2, 1, spec.scheme.users(spec.k));
    for (count, &snr) in out.iter_mut().zip(snrs) {
        let hit = match spec.scheme {
            OutageScheme::Tdma => outage_trial_tdma(&chan, snr, spec.k, spec.r, spec.rate_offset_bits),
            OutageScheme::Pair => outage_trial_pair(&chan, snr, spec.k, spec.r, spec.rate_offset_bits),
            OutageScheme::FullMac => {
                outage_trial_full_mac(&chan, snr, spec.k, spec.r, spec.rate_offset_bits)?
            }
        };
        *count += hit as u64;
    }
    Ok(())
}

/// Outage counts per SNR cell, computed on the current rayon pool.
pub fn outage_counts(spec: &OutageSpec) -> Result<Vec<u64>> {
    spec.validate()?;
    let snrs: Vec<SnrPoint> = spec
        .snr_grid_db
        .iter()
        .map(|&db| SnrPoint::from_db(db))
        .collect::<Result<_>>()?;
    const CHUNK: u64 = 4096;
    let chunks = spec.trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; snrs.len()];
            for t in c * CHUNK..((c + 1) * CHUNK).min(spec.trials) {
                trial_flags(spec, &snrs, t, &mut counts)?;
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; snrs.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Runs the sweep and fits the diversity slope. A slope that cannot be fitted
/// (too few cells with outage events) is left as `None`.
pub fn run_outage(spec: &OutageSpec) -> Result<OutageEstimate> {
    let counts = outage_counts(spec)?;
    let cells: Vec<CellEstimate> = spec
        .snr_grid_db
        .iter()
        .zip(&counts)
        .map(|(&db, &c)| CellEstimate::new(db, c, spec.trials))
        .collect();
    let pts: Vec<(f64, f64)> = cells
        .iter()
        .map(|c| (10f64.powf(c.snr_db / 10.0), c.p_hat))
        .collect();
    let slope = estimate_slope(&pts).ok();
    Ok(OutageEstimate { cells, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::CMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rq(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn snr(db: f64) -> SnrPoint {
        SnrPoint::from_db(db).unwrap()
    }

    fn spec(scheme: OutageScheme, k: u32, r: Rational, offset: f64, grid: &[f64], trials: u64) -> OutageSpec {
        OutageSpec {
            scheme,
            k,
            r,
            rate_offset_bits: offset,
            snr_grid_db: grid.to_vec(),
            trials,
            seed: 12345,
        }
    }

    #[test]
    fn huge_snr_means_no_outage() {
        let s = SnrPoint { snr_db: 120.0, snr_linear: 1e12 };
        for t in 0..1000 {
            let mut rng = trial_rng(1, t);
            let pair = draw_channel(&mut rng, 2, 1, 2);
            assert!(!outage_trial_pair(&pair, s, 10, rq(0, 1), 1.0));
            let single = draw_channel(&mut rng, 2, 1, 1);
            assert!(!outage_trial_tdma(&single, s, 10, rq(0, 1), 1.0));
        }
    }

    #[test]
    fn zero_channel_is_outage() {
        let zero = ChannelRealization {
            users: vec![CMatrix::zeros(2, 1), CMatrix::zeros(2, 1)],
        };
        assert!(outage_trial_pair(&zero, snr(20.0), 10, rq(1, 20), 0.0));
        assert!(outage_trial_pair(&zero, snr(20.0), 10, rq(0, 1), 0.5));
        let one = ChannelRealization {
            users: vec![CMatrix::zeros(2, 1)],
        };
        assert!(outage_trial_tdma(&one, snr(20.0), 10, rq(1, 100), 0.0));
        assert!(outage_trial_full_mac(&zero, snr(20.0), 2, rq(0, 1), 1.0).unwrap());
    }

    /// At 0 dB with a 1-bit offset, TDMA outage is `‖h‖² < 1` and `‖h‖²` is
    /// Erlang(2, 1), so `P = 1 − 2/e`.
    #[test]
    fn tdma_matches_erlang_closed_form() {
        let exact = 1.0 - 2.0 / std::f64::consts::E;
        let trials = 200_000;
        let s = spec(OutageScheme::Tdma, 10, rq(1, 10), 1.0, &[0.0], trials);
        let p = outage_counts(&s).unwrap()[0] as f64 / trials as f64;
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!(p > 0.0 && p < 1.0);
        assert!((p - exact).abs() < 4.0 * se, "p = {p}, exact = {exact}");
    }

    #[test]
    fn full_mac_single_user_is_tdma_at_gain_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 0..2000 {
            let chan = draw_channel(&mut trial_rng(4, t), 2, 1, 1);
            let r = rq(rng.random_range(0..50), 100);
            let db = rng.random_range(0.0..30.0);
            let offset = rng.random_range(0.0..2.0);
            assert_eq!(
                outage_trial_full_mac(&chan, snr(db), 1, r, offset).unwrap(),
                outage_trial_tdma(&chan, snr(db), 1, r, offset)
            );
        }
    }

    #[test]
    fn full_mac_guard() {
        let chan = draw_channel(&mut trial_rng(0, 0), 2, 1, 13);
        assert!(outage_trial_full_mac(&chan, snr(10.0), 13, rq(0, 1), 1.0).is_err());
        let bad = spec(OutageScheme::FullMac, 13, rq(0, 1), 1.0, &[10.0], 10);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn outage_is_monotone_in_snr_at_fixed_rate() {
        for t in 0..500 {
            let chan = draw_channel(&mut trial_rng(9, t), 2, 1, 3);
            let mut prev = true;
            for db in (0..40).map(|i| i as f64) {
                let now = outage_trial_full_mac(&chan, snr(db), 3, rq(0, 1), 1.0).unwrap();
                assert!(!now || prev, "outage reappeared at {db} dB");
                prev = now;
            }
        }
    }

    #[test]
    fn slope_on_exact_power_laws() {
        let grid = [10.0, 100.0, 1000.0, 10_000.0];
        let fit = estimate_slope(&grid.map(|s: f64| (s, s.powf(-2.0)))).unwrap();
        assert!((fit.d_hat - 2.0).abs() < 1e-12);
        assert!(fit.stderr.unwrap() < 1e-12);
        for c in [1e-3, 0.5, 7.0] {
            let fit = estimate_slope(&grid.map(|s: f64| (s, c * s.powf(-1.5)))).unwrap();
            assert!((fit.d_hat - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_with_multiplicative_jitter() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..100 {
            let pts: Vec<(f64, f64)> = [10.0, 15.0, 20.0, 25.0]
                .iter()
                .map(|db: &f64| {
                    let s = 10f64.powf(db / 10.0);
                    (s, 0.3 * s.powf(-2.0) * rng.random_range(0.95..1.05))
                })
                .collect();
            let fit = estimate_slope(&pts).unwrap();
            assert!((fit.d_hat - 2.0).abs() < 0.1, "{}", fit.d_hat);
        }
    }

    #[test]
    fn slope_excludes_empty_cells() {
        let fit = estimate_slope(&[(10.0, 0.1), (100.0, 0.001), (1000.0, 0.0)]).unwrap();
        assert_eq!(fit.excluded, vec![2]);
        assert!(fit.stderr.is_none());
        assert!((fit.d_hat - 2.0).abs() < 1e-12);
        assert!(matches!(
            estimate_slope(&[(10.0, 0.1), (100.0, 0.0)]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        for (k, n) in [(0u64, 10u64), (5, 10), (10, 10), (3, 100_000), (500, 1000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn counts_are_deterministic_across_pools() {
        let s = spec(OutageScheme::Pair, 10, rq(1, 20), 0.0, &[5.0, 10.0, 15.0], 50_000);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| outage_counts(&s).unwrap());
        let b = four.install(|| outage_counts(&s).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, outage_counts(&s).unwrap());
    }

    #[test]
    fn tdma_is_worse_than_pair_at_positive_gain() {
        let grid = [10.0, 15.0, 20.0, 25.0];
        let t = run_outage(&spec(OutageScheme::Tdma, 10, rq(1, 20), 0.0, &grid, 200_000)).unwrap();
        let p = run_outage(&spec(OutageScheme::Pair, 10, rq(1, 20), 0.0, &grid, 200_000)).unwrap();
        for (a, b) in t.cells.iter().zip(&p.cells) {
            assert!(a.p_hat >= b.p_hat, "{a:?} vs {b:?}");
            if !a.overlaps(b) {
                assert!(a.ci_lo > b.ci_hi);
            }
        }
    }

    #[test]
    fn doubling_trials_stays_in_interval() {
        let mut outside = 0;
        let reps = 100;
        for rep in 0..reps {
            let mut s = spec(OutageScheme::Tdma, 1, rq(0, 1), 1.0, &[10.0], 4000);
            s.seed = 1000 + rep;
            let base = CellEstimate::new(10.0, outage_counts(&s).unwrap()[0], s.trials);
            s.trials *= 2;
            let doubled = outage_counts(&s).unwrap()[0] as f64 / s.trials as f64;
            if doubled < base.ci_lo || doubled > base.ci_hi {
                outside += 1;
            }
        }
        assert!(outside as f64 <= 0.05 * reps as f64, "{outside} of {reps}");
    }

    #[test]
    fn tdma_slope_near_two() {
        let est = run_outage(&spec(OutageScheme::Tdma, 10, rq(0, 1), 1.0, &[10.0, 15.0, 20.0, 25.0], 200_000)).unwrap();
        let d = est.slope.unwrap().d_hat;
        assert!((1.7..=2.3).contains(&d), "d_hat = {d}");
    }

    #[test]
    fn spec_validation() {
        assert!(spec(OutageScheme::Tdma, 10, rq(0, 1), 1.0, &[10.0, 5.0], 10).validate().is_err());
        assert!(spec(OutageScheme::Tdma, 10, rq(0, 1), 1.0, &[], 10).validate().is_err());
        assert!(spec(OutageScheme::Tdma, 10, rq(0, 1), 1.0, &[1.0], 0).validate().is_err());
        assert!(spec(OutageScheme::Tdma, 10, rq(-1, 1), 1.0, &[1.0], 1).validate().is_err());
    }
}
