//! Pair-scheduled repair transmission and the end-to-end repair simulation.
//!
//! A repair downloads every block of every helper's share. The scheduler works
//! in block rounds: in round `b` the helpers are shuffled and cut into
//! disjoint pairs, each pair sending its `b`-th blocks in one 2-user session.
//! With an odd helper count the last helper of the round sends alone. Within a
//! round the first pair slot is therefore a uniformly random 2-subset, which
//! gives each helper the `2/K` activity probability of random pair selection.
//!
//! Shares are cut into `3m`-bit blocks (zero-padded at the end), one block per
//! lattice point. Each session sees a fresh channel and is decoded on its own.
//! A share is usable only if all of its blocks were decoded without error.
//!
//! The TDMA baseline sends one helper per session. To spend the same airtime
//! as the pair scheme it carries the same number of bits per session, so its
//! QAM symbols use `2m` bits and each TDMA block holds `6m` bits.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_session, transmit, ChannelRealization, NoiseBlock, SnrPoint};
use crate::decoder::{decode_session, DecoderMode};
use crate::encoder::{build_pair_codeword, build_tdma_codeword, DispersionBasis, SESSION_LENGTH};
use crate::lift::{lift, unlift, Fragment, MAX_M};
use crate::rng::trial_rng;
use crate::storage::{mds_encode, repair_node, NodeContent, StorageConfig};
use crate::{Error, Result};

/// Receive antennas at the newcomer.
pub const RECEIVE_ANTENNAS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    /// `(helper node id, block index)` per active helper; one or two entries.
    pub active: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub sessions: Vec<Session>,
}

impl SessionPlan {
    pub fn pair_sessions(&self) -> usize {
        self.sessions.iter().filter(|s| s.active.len() == 2).count()
    }
}

/// Seeded random disjoint-pair rounds, one round per block index.
pub fn plan_sessions<R: Rng + ?Sized>(helpers: &[usize], blocks_per_helper: usize, rng: &mut R) -> SessionPlan {
    let mut sessions = Vec::with_capacity(blocks_per_helper * helpers.len().div_ceil(2));
    let mut order = helpers.to_vec();
    for block in 0..blocks_per_helper {
        order.shuffle(rng);
        sessions.extend(order.chunks(2).map(|c| Session {
            active: c.iter().map(|&h| (h, block)).collect(),
        }));
    }
    SessionPlan { sessions }
}

/// One helper per session, helpers in the given order within each block round.
pub fn plan_tdma(helpers: &[usize], blocks_per_helper: usize) -> SessionPlan {
    let sessions = (0..blocks_per_helper)
        .flat_map(|block| {
            helpers.iter().map(move |&h| Session {
                active: vec![(h, block)],
            })
        })
        .collect();
    SessionPlan { sessions }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Pair,
    Tdma,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Pair => "pair",
            Scheme::Tdma => "tdma",
        }
    }

    /// Bits per QAM symbol for a base `m`.
    pub fn symbol_bits(&self, m: u32) -> u32 {
        match self {
            Scheme::Pair => m,
            Scheme::Tdma => 2 * m,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair" => Ok(Scheme::Pair),
            "tdma" => Ok(Scheme::Tdma),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// Block Rayleigh fading with Gaussian noise.
    #[default]
    Rayleigh,
    /// Rayleigh fading, noise forced to zero.
    Noiseless,
    /// Identity channel, noise forced to zero.
    Identity,
}

impl std::str::FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rayleigh" => Ok(ChannelMode::Rayleigh),
            "noiseless" => Ok(ChannelMode::Noiseless),
            "identity" => Ok(ChannelMode::Identity),
            other => Err(Error::InvalidParameter(format!("unknown channel mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairParams {
    pub storage: StorageConfig,
    pub m: u32,
    pub file_bytes: usize,
    pub decoder: DecoderMode,
    pub channel: ChannelMode,
    pub seed: u64,
}

impl RepairParams {
    pub fn validate(&self, scheme: Scheme) -> Result<()> {
        self.storage.validate()?;
        if self.storage.n == self.storage.k {
            return Err(Error::InvalidParameter("repair needs n > k".into()));
        }
        if self.m == 0 || scheme.symbol_bits(self.m) > MAX_M || self.m % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "m must be even and at most {} for the {} scheme, got {}",
                match scheme {
                    Scheme::Pair => MAX_M,
                    Scheme::Tdma => MAX_M / 2,
                },
                scheme.name(),
                self.m
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairTrialResult {
    pub snr_db: f64,
    pub sessions_total: u64,
    pub sessions_errored: u64,
    pub pair_sessions_total: u64,
    pub pair_sessions_errored: u64,
    pub shares_total: u64,
    pub shares_failed: u64,
    /// Every helper share arrived intact.
    pub fragment_ok: bool,
    pub repaired_share_ok: bool,
    pub visited_nodes: u64,
    pub fallbacks: u64,
}

fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|b| (0..8).rev().map(move |i| b >> i & 1 == 1))
        .collect()
}

fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8))
        .collect()
}

fn draw(rng: &mut impl Rng, mode: ChannelMode, users: usize) -> (ChannelRealization, NoiseBlock) {
    let (chan, noise) = draw_session(rng, RECEIVE_ANTENNAS, 1, users, SESSION_LENGTH);
    match mode {
        ChannelMode::Rayleigh => (chan, noise),
        ChannelMode::Noiseless => (chan, NoiseBlock::zeros(RECEIVE_ANTENNAS, SESSION_LENGTH)),
        ChannelMode::Identity => (
            ChannelRealization::identity(RECEIVE_ANTENNAS, users),
            NoiseBlock::zeros(RECEIVE_ANTENNAS, SESSION_LENGTH),
        ),
    }
}

/// Sends `frags` (one per active helper) through one session and returns the
/// decoded fragments plus search statistics.
fn run_session(
    frags: &[Fragment],
    q: u32,
    bases: &[DispersionBasis; 2],
    snr: SnrPoint,
    p: &RepairParams,
    rng: &mut impl Rng,
) -> Result<(Vec<Fragment>, u64, bool)> {
    let points: Vec<_> = frags.iter().map(lift).collect::<Result<_>>()?;
    let x = match points.as_slice() {
        [a] => build_tdma_codeword(a, q)?,
        [a, b] => build_pair_codeword(a, b, q)?,
        _ => return Err(Error::InvalidParameter("sessions have one or two helpers".into())),
    };
    let (chan, noise) = draw(rng, p.channel, points.len());
    let y = transmit(&x, &chan, &noise, snr)?;
    let dec = decode_session(&y, &chan, &bases[points.len() - 1], snr, p.decoder, q)?;
    let out = dec.points.iter().map(|pt| unlift(pt, q)).collect::<Result<_>>()?;
    Ok((out, dec.visited_nodes, dec.fallback))
}

fn run_trial(p: &RepairParams, scheme: Scheme, snr: SnrPoint, trial: u64) -> Result<RepairTrialResult> {
    p.validate(scheme)?;
    let cfg = &p.storage;
    let q = scheme.symbol_bits(p.m);
    let block_bits = 3 * q as usize;
    let bases = [DispersionBasis::algebraic(1, q)?, DispersionBasis::algebraic(2, q)?];

    let mut rng = trial_rng(p.seed, trial);
    let file: Vec<u8> = (0..p.file_bytes).map(|_| rng.random()).collect();
    let shares = mds_encode(&file, cfg)?;
    let lost = rng.random_range(0..cfg.n);
    let mut helpers: Vec<usize> = (0..cfg.n).filter(|&i| i != lost).collect();
    helpers.shuffle(&mut rng);
    helpers.truncate(cfg.d);
    helpers.sort_unstable();

    let share_bits = 8 * shares[0].fragment.len();
    let blocks = share_bits.div_ceil(block_bits);
    let sent: Vec<Vec<bool>> = shares
        .iter()
        .map(|s| {
            let mut b = bytes_to_bits(&s.fragment);
            b.resize(blocks * block_bits, false);
            b
        })
        .collect();
    let plan = match scheme {
        Scheme::Pair => plan_sessions(&helpers, blocks, &mut rng),
        Scheme::Tdma => plan_tdma(&helpers, blocks),
    };

    let mut received: Vec<Vec<bool>> = vec![vec![false; blocks * block_bits]; cfg.n];
    let mut intact = vec![true; cfg.n];
    let mut res = RepairTrialResult {
        snr_db: snr.snr_db,
        sessions_total: plan.sessions.len() as u64,
        sessions_errored: 0,
        pair_sessions_total: plan.pair_sessions() as u64,
        pair_sessions_errored: 0,
        shares_total: helpers.len() as u64,
        shares_failed: 0,
        fragment_ok: false,
        repaired_share_ok: false,
        visited_nodes: 0,
        fallbacks: 0,
    };
    for session in &plan.sessions {
        let span = |b: usize| b * block_bits..(b + 1) * block_bits;
        let frags: Vec<Fragment> = session
            .active
            .iter()
            .map(|&(h, b)| Fragment::new(sent[h][span(b)].to_vec(), q))
            .collect::<Result<_>>()?;
        let (decoded, visited, fallback) = run_session(&frags, q, &bases, snr, p, &mut rng)?;
        res.visited_nodes += visited;
        res.fallbacks += fallback as u64;
        let mut errored = false;
        for ((&(h, b), tx), rx) in session.active.iter().zip(&frags).zip(&decoded) {
            received[h][span(b)].copy_from_slice(rx.bits());
            if tx != rx {
                intact[h] = false;
                errored = true;
            }
        }
        if errored {
            res.sessions_errored += 1;
            if session.active.len() == 2 {
                res.pair_sessions_errored += 1;
            }
        }
    }

    let usable: Vec<NodeContent> = helpers
        .iter()
        .filter(|&&h| intact[h])
        .map(|&h| NodeContent {
            node_id: h,
            pad_len: shares[h].pad_len,
            fragment: bits_to_bytes(&received[h][..share_bits]),
        })
        .collect();
    res.shares_failed = (helpers.len() - usable.len()) as u64;
    res.fragment_ok = res.shares_failed == 0;
    res.repaired_share_ok = usable.len() >= cfg.k && repair_node(lost, &usable, cfg)? == shares[lost];
    Ok(res)
}

/// One end-to-end repair over pair-scheduled sessions. The file, the lost
/// node, the helper set, the schedule and every channel draw come from the
/// substream `(p.seed, trial)`, so trials at different SNRs share them.
pub fn run_repair_trial(p: &RepairParams, snr: SnrPoint, trial: u64) -> Result<RepairTrialResult> {
    run_trial(p, Scheme::Pair, snr, trial)
}

/// As [`run_repair_trial`] with one helper per session.
pub fn run_tdma_trial(p: &RepairParams, snr: SnrPoint, trial: u64) -> Result<RepairTrialResult> {
    run_trial(p, Scheme::Tdma, snr, trial)
}

/// Aggregated counts for one SNR point.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCell {
    pub trials: u64,
    pub sessions: u64,
    pub session_errors: u64,
    pub pair_sessions: u64,
    pub pair_session_errors: u64,
    pub shares: u64,
    pub share_failures: u64,
    pub repair_failures: u64,
    pub visited_nodes: u64,
    pub fallbacks: u64,
}

impl RepairCell {
    fn add_trial(&mut self, r: &RepairTrialResult) {
        self.trials += 1;
        self.sessions += r.sessions_total;
        self.session_errors += r.sessions_errored;
        self.pair_sessions += r.pair_sessions_total;
        self.pair_session_errors += r.pair_sessions_errored;
        self.shares += r.shares_total;
        self.share_failures += r.shares_failed;
        self.repair_failures += !r.repaired_share_ok as u64;
        self.visited_nodes += r.visited_nodes;
        self.fallbacks += r.fallbacks;
    }

    fn merge(&mut self, o: &RepairCell) {
        self.trials += o.trials;
        self.sessions += o.sessions;
        self.session_errors += o.session_errors;
        self.pair_sessions += o.pair_sessions;
        self.pair_session_errors += o.pair_session_errors;
        self.shares += o.shares;
        self.share_failures += o.share_failures;
        self.repair_failures += o.repair_failures;
        self.visited_nodes += o.visited_nodes;
        self.fallbacks += o.fallbacks;
    }
}

fn snr_points(grid_db: &[f64]) -> Result<Vec<SnrPoint>> {
    if grid_db.is_empty() {
        return Err(Error::InvalidParameter("SNR grid is empty".into()));
    }
    grid_db.iter().map(|&db| SnrPoint::from_db(db)).collect()
}

/// Trials `0..trials` at every SNR of the grid on the current rayon pool.
/// The result depends only on the inputs, not on the pool size.
pub fn repair_sweep(p: &RepairParams, scheme: Scheme, snr_grid_db: &[f64], trials: u64) -> Result<Vec<RepairCell>> {
    p.validate(scheme)?;
    let snrs = snr_points(snr_grid_db)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut cells = vec![RepairCell::default(); snrs.len()];
            for (cell, &snr) in cells.iter_mut().zip(&snrs) {
                cell.add_trial(&run_trial(p, scheme, snr, t)?);
            }
            Ok(cells)
        })
        .try_reduce(
            || vec![RepairCell::default(); snrs.len()],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y));
                Ok(a)
            },
        )
}

/// Decoder-level experiment: independent sessions of random fragments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSweepSpec {
    /// Active helpers per session, 1 or 2.
    pub users: usize,
    pub m: u32,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub decoder: DecoderMode,
    pub channel: ChannelMode,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCell {
    pub trials: u64,
    pub frame_errors: u64,
    /// Wrong QAM coefficients over all helpers of the session.
    pub symbol_errors: u64,
    pub symbols: u64,
    pub visited_nodes: u64,
    pub fallbacks: u64,
}

pub fn session_sweep(spec: &SessionSweepSpec) -> Result<Vec<SessionCell>> {
    if !(1..=2).contains(&spec.users) {
        return Err(Error::InvalidParameter(format!("sessions have 1 or 2 users, got {}", spec.users)));
    }
    let snrs = snr_points(&spec.snr_grid_db)?;
    let basis = DispersionBasis::algebraic(spec.users, spec.m)?;
    let params = RepairParams {
        storage: StorageConfig { n: 2, k: 1, d: 1 },
        m: spec.m,
        file_bytes: 0,
        decoder: spec.decoder,
        channel: spec.channel,
        seed: spec.seed,
    };
    let bases = [basis.clone(), basis];
    let space = 1u64 << (3 * spec.m).min(63);
    (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut cells = vec![SessionCell::default(); snrs.len()];
            for (cell, &snr) in cells.iter_mut().zip(&snrs) {
                let mut rng = trial_rng(spec.seed, t);
                let frags: Vec<Fragment> = (0..spec.users)
                    .map(|_| Fragment::from_index(rng.random_range(0..space), spec.m))
                    .collect::<Result<_>>()?;
                let (decoded, visited, fallback) = run_session(&frags, spec.m, &bases, snr, &params, &mut rng)?;
                let wrong: u64 = frags
                    .iter()
                    .zip(&decoded)
                    .map(|(a, b)| {
                        let (pa, pb) = (lift(a).unwrap(), lift(b).unwrap());
                        (0..3).filter(|&l| pa.element.coeffs[l] != pb.element.coeffs[l]).count() as u64
                    })
                    .sum();
                cell.trials += 1;
                cell.frame_errors += (wrong > 0) as u64;
                cell.symbol_errors += wrong;
                cell.symbols += 3 * spec.users as u64;
                cell.visited_nodes += visited;
                cell.fallbacks += fallback as u64;
            }
            Ok(cells)
        })
        .try_reduce(
            || vec![SessionCell::default(); snrs.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.trials += y.trials;
                    x.frame_errors += y.frame_errors;
                    x.symbol_errors += y.symbol_errors;
                    x.symbols += y.symbols;
                    x.visited_nodes += y.visited_nodes;
                    x.fallbacks += y.fallbacks;
                }
                Ok(a)
            },
        )
}
