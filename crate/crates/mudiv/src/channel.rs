//! Per-user channel realizations under block fading.
//!
//! Three antenna configurations share one sampling interface. The link
//! metric is the quantity users would report: instantaneous SNR (linear) for
//! single-output and receive-diversity links, and the spatial-multiplexing
//! mutual information (bits/symbol) for square MIMO.
//!
//! All sampling is driven by an explicit stream, normally one of
//! [`crate::mc::trial_rng`]'s counter-based streams, which keeps every
//! estimate reproducible and independent of thread scheduling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Antenna configuration of one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    /// Single antenna, Rayleigh fading: metric |h|² ~ Exp(1).
    SisoRayleigh,
    /// `n_r` receive antennas, maximum ratio combining: metric
    /// Σ|h_j|² ~ Gamma(n_r, 1).
    SimoGamma { n_r: u32 },
    /// `n`×`n` i.i.d. MIMO, equal power per stream: metric
    /// log2 det(I + (P/n)·H·H†) in bits/symbol.
    MimoIid { n: u32 },
}

/// A fading kind plus the average SNR it is driven at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingConfig {
    pub kind: Fading,
    /// Average SNR as a linear power ratio (not dB).
    pub avg_snr_p: f64,
}

impl FadingConfig {
    pub fn new(kind: Fading, avg_snr_p: f64) -> Result<Self> {
        if !(avg_snr_p > 0.0) {
            return Err(Error::Domain(format!(
                "average SNR must be positive, got {avg_snr_p}"
            )));
        }
        let antennas = match kind {
            Fading::SisoRayleigh => 1,
            Fading::SimoGamma { n_r } => n_r,
            Fading::MimoIid { n } => n,
        };
        if antennas < 1 {
            return Err(Error::Domain("antenna count must be >= 1".into()));
        }
        Ok(FadingConfig { kind, avg_snr_p })
    }
}

/// One realization of the per-user link metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetricSample {
    /// SNR (linear) for SISO/SIMO; mutual information (bits/symbol) for MIMO.
    pub value: f64,
    pub kind: Fading,
}

/// One CN(0, 1) draw: two real Gaussians of variance 1/2.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * SQRT_HALF, im * SQRT_HALF)
}

/// Draws one link-metric realization.
pub fn sample_user_metric<R: Rng + ?Sized>(cfg: &FadingConfig, rng: &mut R) -> LinkMetricSample {
    let value = match cfg.kind {
        Fading::SisoRayleigh => complex_gaussian(rng).norm_sqr(),
        Fading::SimoGamma { n_r } => {
            (0..n_r).map(|_| complex_gaussian(rng).norm_sqr()).sum()
        }
        Fading::MimoIid { n } => mimo_mutual_information(cfg.avg_snr_p, n, rng),
    };
    LinkMetricSample { value, kind: cfg.kind }
}

/// Maximum metric among `k` independent users (the scheduled user's metric).
pub fn sample_max_metric<R: Rng + ?Sized>(
    cfg: &FadingConfig,
    k: u64,
    rng: &mut R,
) -> LinkMetricSample {
    let mut best = f64::NEG_INFINITY;
    for _ in 0..k.max(1) {
        best = best.max(sample_user_metric(cfg, rng).value);
    }
    LinkMetricSample { value: best, kind: cfg.kind }
}

/// log2 det(I + (p/n)·H·H†) for one i.i.d. CN(0,1) channel draw.
///
/// The Gram matrix is Hermitian positive definite, so the log-determinant
/// comes from a Cholesky factor's diagonal.
fn mimo_mutual_information<R: Rng + ?Sized>(p: f64, n: u32, rng: &mut R) -> f64 {
    let n = n as usize;
    let h = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    gram_log2_det(p, &h)
}

/// log2 det(I + (p/n)·H·H†) of a given channel matrix.
pub fn gram_log2_det(p: f64, h: &DMatrix<Complex64>) -> f64 {
    let n = h.nrows();
    let scale = Complex64::new(p / n as f64, 0.0);
    let mut m = h * h.adjoint() * scale;
    for i in 0..n {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let chol = m
        .cholesky()
        .expect("I + (P/n) H H^H is positive definite by construction");
    let mut log_det = 0.0;
    for i in 0..n {
        // Cholesky diagonal is real and positive.
        log_det += 2.0 * chol.l()[(i, i)].re.ln();
    }
    log_det / std::f64::consts::LN_2
}
