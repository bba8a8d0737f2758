//! # mudiv — how many users should feed back channel state?
//!
//! Opportunistic scheduling in a block-fading broadcast channel picks, every
//! coherence block, the user with the best instantaneous SNR. The scheduling
//! gain (multiuser diversity) grows only double-logarithmically in the number
//! of users, while the uplink resources spent collecting SNR reports grow
//! linearly (dedicated feedback) or logarithmically (SNR-threshold random
//! access). This crate quantifies that tradeoff and finds the optimal number
//! of feedback users for FDD and TDD systems:
//!
//! - [`specfun`] — Lambert-W (both real branches), exponential integral E1,
//!   harmonic numbers.
//! - [`channel`] — seeded sampling of per-user link metrics: Rayleigh SNR,
//!   multi-antenna Gamma SNR, MIMO log-det mutual information.
//! - [`muvdiv`] — scheduled spectral efficiency C(K): exact alternating-sum
//!   closed form, adaptive quadrature, bounds, and growth-rate
//!   approximations.
//! - [`dedicated`] — per-user orthogonal feedback: weighted-sum-rate and
//!   downlink-rate optimizers plus their Lambert-W approximants, including
//!   MIMO and SIMO variants.
//! - [`snrfb`] — SNR-threshold feedback on an N-slot slotted-ALOHA channel:
//!   exact capture distribution, Monte Carlo cross-checks, joint (K, N)
//!   optimization.
//! - [`mc`] — reproducible Monte Carlo engine with per-trial counter-based
//!   streams; results are independent of worker count.
//! - [`experiments`] — sweep runner that writes each study as CSV curves
//!   plus a text summary (the `mudiv` binary is a thin wrapper around it).
//!
//! ## Example
//!
//! ```
//! use mudiv::dedicated::{self, SystemParams};
//! use mudiv::muvdiv::SpectralEfficiencyMethod;
//!
//! // 75 users, 300-symbol blocks, 5 feedback bits per user, 10 dB.
//! let params = SystemParams::new(10.0, 300, 5, 0.5, 75).unwrap();
//! let opt = dedicated::tdd_optimize_exact(&params, SpectralEfficiencyMethod::Quadrature).unwrap();
//! // Collecting SNR from every user would waste downlink bandwidth: the
//! // optimum is a small fraction of the population.
//! assert!(opt.k_star < 30);
//! ```

pub mod channel;
pub mod config;
pub mod dedicated;
pub mod experiments;
pub mod mc;
pub mod muvdiv;
pub mod quadrature;
pub mod snrfb;
pub mod specfun;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameters violate a feasibility constraint (e.g. feedback would
    /// consume more than the whole bandwidth).
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A Monte Carlo estimate could not be formed (no qualifying trials).
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),
    /// An exhaustive enumeration was requested beyond its size cap.
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    /// Config text could not be parsed.
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    /// Config value outside its allowed range.
    #[error("config range error for `{key}`: {msg}")]
    ConfigRange { key: String, msg: String },
    /// A Monte Carlo trial function failed.
    #[error("trial {index} failed: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Converts an SNR in dB to a linear power ratio.
pub fn db_to_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(snr_linear: f64) -> f64 {
    10.0 * snr_linear.log10()
}
