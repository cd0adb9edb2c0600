//! Sphere-decodable algebraic space-time storage codes.
//!
//! Helper nodes in a wireless distributed storage system send their erasure-coded
//! shares to a newcomer over a block-Rayleigh multiple-access channel. Shares are
//! lifted bijectively onto points of an algebraic lattice built from the cubic
//! field `Q(2cos(2π/7))` over `Q(i)`, two helpers transmit at a time, and the
//! newcomer runs an exact sphere decoder. The crate also carries the closed-form
//! diversity-multiplexing tradeoff curves of the scheme and a Monte Carlo outage
//! estimator that checks them.
//!
//! Modules, bottom-up:
//!
//! - [`algebra`]: exact arithmetic in `Z[i][η]`, the Galois automorphism and the
//!   real embeddings.
//! - [`lift`]: Gray-labelled QAM and the lift from bit fragments to lattice points.
//! - [`encoder`]: pair and single-user codewords, dispersion basis, equivalent channel.
//! - [`channel`]: seeded block-Rayleigh MAC draws and the transmit map.
//! - [`decoder`]: QR sphere decoder and brute-force ML oracle.
//! - [`dmt`]: exact piecewise-linear DMT curves.
//! - [`outage`]: outage-probability Monte Carlo and slope regression.
//! - [`storage`]: GF(2^8) systematic MDS code and node repair.
//! - [`protocol`]: pair scheduling and the end-to-end repair simulation.

pub mod algebra;
pub mod channel;
pub mod decoder;
pub mod dmt;
pub mod encoder;
mod error;
pub mod lift;
pub mod outage;
pub mod protocol;
pub mod rng;
pub mod storage;

pub use error::{Error, Result};

pub use num_complex::Complex64;
