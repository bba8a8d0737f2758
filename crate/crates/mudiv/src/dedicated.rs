//! Dedicated (per-user orthogonal) feedback: cost models and optimizers for
//! the number of feedback users.
//!
//! Every user spends `L_fb` bits per coherence block reporting its SNR, so
//! feedback bandwidth grows linearly in K while the scheduling benefit grows
//! like log log K. In FDD the cost lands on the uplink rate; in TDD it eats
//! the common bandwidth and therefore the downlink rate itself. Both systems
//! admit closed-form approximations to the optimal K through the Lambert-W
//! function, implemented here next to the exact integer scans they
//! approximate, plus the MIMO and SIMO variants where the scheduled metric
//! changes distribution.

use crate::muvdiv::{
    self, gaussian_max_mean, mimo_mi_gaussian_params, simo_growth_rate, MimoGaussianParams,
    SpectralEfficiencyMethod,
};
use crate::specfun::lambert_w_log_arg;
use crate::{mc, Error, Result};

/// Which duplexing scheme charges the feedback cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Duplex {
    Fdd,
    Tdd,
}

impl Duplex {
    pub fn tag(&self) -> &'static str {
        match self {
            Duplex::Fdd => "fdd",
            Duplex::Tdd => "tdd",
        }
    }
}

// ---------------------------------------------------------------------------
// System parameters
// ---------------------------------------------------------------------------

/// System-level constants of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Average SNR as a linear power ratio.
    pub p: f64,
    /// Downlink resource blocklength in symbols (coherence bandwidth ×
    /// coherence time).
    pub t_check: u32,
    /// Feedback payload per user in bits.
    pub l_fb: u32,
    /// Weight of the downlink rate in the FDD objective.
    pub lambda_r: f64,
    /// Total user population.
    pub k_total: u64,
}

impl SystemParams {
    pub fn new(p: f64, t_check: u32, l_fb: u32, lambda_r: f64, k_total: u64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("average SNR must be positive, got {p}")));
        }
        if t_check == 0 || l_fb == 0 {
            return Err(Error::Domain("blocklength and feedback bits must be positive".into()));
        }
        if !(lambda_r >= 0.0) {
            return Err(Error::Domain(format!("rate weight must be >= 0, got {lambda_r}")));
        }
        if k_total == 0 {
            return Err(Error::Domain("population must hold at least one user".into()));
        }
        let params = SystemParams { p, t_check, l_fb, lambda_r, k_total };
        if params.t_eff() <= 1.0 {
            return Err(Error::Infeasible(format!(
                "effective blocklength {} (= {t_check}/{l_fb}) must exceed 1",
                params.t_eff()
            )));
        }
        Ok(params)
    }

    /// Effective blocklength T = Ť / L_fb.
    pub fn t_eff(&self) -> f64 {
        self.t_check as f64 / self.l_fb as f64
    }

    /// Uplink/AWGN spectral efficiency log2(1 + P).
    pub fn c_uplink(&self) -> f64 {
        (1.0 + self.p).log2()
    }

    /// Largest K an optimizer may select: the data bandwidth must stay
    /// strictly positive, so the zero-bandwidth point is excluded.
    pub fn k_max_feasible(&self) -> u64 {
        let bandwidth_limit = (self.t_eff() * self.c_uplink()).floor() as i64 - 1;
        self.k_total.min(bandwidth_limit.max(0) as u64)
    }
}

// ---------------------------------------------------------------------------
// Result types
// ---------------------------------------------------------------------------

/// How an optimizer arrived at its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMethod {
    /// Integer scan of the exact objective.
    ExactScan,
    /// Lambert-W closed form, rounded against its own continuous objective.
    LambertApprox,
}

/// Optimizer output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptResult {
    /// Optimal number of feedback users.
    pub k_star: u64,
    /// Optimal slot count, for the random-access optimizers only.
    pub n_star: Option<u64>,
    /// Objective value at the optimum. For [`OptMethod::LambertApprox`] this
    /// is the approximate objective the closed form optimizes, not the exact
    /// rate.
    pub value: f64,
    pub method: OptMethod,
    /// Scanned (or admissible) k range.
    pub feasible_range: (u64, u64),
}

/// A per-K evaluation of the rates and the optimization objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub k: u64,
    /// Downlink rate, bits/symbol.
    pub r_d: f64,
    /// Uplink rate, bits/symbol (zero in TDD: no uplink data).
    pub r_u: f64,
    pub objective: f64,
}

/// A full rate sweep over the feasible K range.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub entries: Vec<RatePoint>,
    pub method: SpectralEfficiencyMethod,
    pub duplex: Duplex,
}

// ---------------------------------------------------------------------------
// FDD: feedback cost on the uplink
// ---------------------------------------------------------------------------

/// Uplink rate with k dedicated feedback users: log2(1+P) − k/T.
///
/// Zero exactly when feedback fills the whole uplink; beyond that the
/// configuration is infeasible.
pub fn fdd_uplink_rate(params: &SystemParams, k: u64) -> Result<f64> {
    let budget = params.t_eff() * params.c_uplink();
    if k as f64 > budget {
        return Err(Error::Infeasible(format!(
            "{k} feedback users need more than the whole uplink ({budget:.3} user budget)"
        )));
    }
    Ok(params.c_uplink() - k as f64 / params.t_eff())
}

/// Weighted FDD sum rate λ_R·C(k) + R_U(k) with C evaluated by `method`.
pub fn fdd_weighted_objective(
    params: &SystemParams,
    k: u64,
    method: SpectralEfficiencyMethod,
) -> Result<f64> {
    let c_df = muvdiv::spectral_efficiency(k, params.p, method)?;
    Ok(params.lambda_r * c_df + fdd_uplink_rate(params, k)?)
}

/// Exact integer argmax of the weighted FDD sum rate.
///
/// The objective is concave in k, so the scan stops at the first strict
/// decrease; ties break toward fewer feedback users.
pub fn fdd_optimize_exact(
    params: &SystemParams,
    method: SpectralEfficiencyMethod,
) -> Result<OptResult> {
    let (k_min, k_max) = feasible_span(params)?;
    let (k_star, value) =
        concave_argmax(k_min, k_max, |k| fdd_weighted_objective(params, k, method))?;
    Ok(OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::ExactScan,
        feasible_range: (k_min, k_max),
    })
}

/// The surrogate objective whose stationary point the FDD closed form
/// solves exactly: λ_R·ln(1 + P ln k) + ln(1+P) − k/T.
///
/// Its downlink term is the log-log approximation in natural-log units;
/// only the argmax is meaningful, not the scale.
pub fn fdd_approx_objective(params: &SystemParams, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    let kf = k as f64;
    Ok(params.lambda_r * (1.0 + params.p * kf.ln()).ln() + (1.0 + params.p).ln()
        - kf / params.t_eff())
}

/// Closed-form approximation to the optimal FDD feedback population:
/// K = λ_R·T / W(e^{1/P}·λ_R·T), rounded against [`fdd_approx_objective`].
pub fn fdd_k_ap(params: &SystemParams) -> Result<OptResult> {
    let lt = params.lambda_r * params.t_eff();
    if !(lt > 0.0) {
        return Err(Error::Domain(
            "the closed form needs lambda_r * t_eff > 0".into(),
        ));
    }
    // W(e^{1/P}·λT) solved in log form: immune to overflow of the argument.
    let w = lambert_w_log_arg(1.0 / params.p + lt.ln())?;
    let k_cont = lt / w;
    let (k_min, k_max) = feasible_span(params)?;
    let (k_star, value) =
        round_against(k_cont, k_min, k_max, |k| fdd_approx_objective(params, k))?;
    Ok(OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::LambertApprox,
        feasible_range: (k_min, k_max),
    })
}

// ---------------------------------------------------------------------------
// TDD: feedback cost on the common bandwidth
// ---------------------------------------------------------------------------

/// TDD downlink rate with k feedback users:
/// (1 − k/(T·log2(1+P)))·C(k).
pub fn tdd_downlink_rate(
    params: &SystemParams,
    k: u64,
    method: SpectralEfficiencyMethod,
) -> Result<f64> {
    let t1 = params.t_eff() * params.c_uplink();
    if k as f64 > t1 {
        return Err(Error::Infeasible(format!(
            "{k} feedback users exceed the common bandwidth ({t1:.3} user budget)"
        )));
    }
    let c_df = muvdiv::spectral_efficiency(k, params.p, method)?;
    Ok((1.0 - k as f64 / t1) * c_df)
}

/// Exact integer argmax of the TDD downlink rate.
pub fn tdd_optimize_exact(
    params: &SystemParams,
    method: SpectralEfficiencyMethod,
) -> Result<OptResult> {
    let (k_min, k_max) = feasible_span(params)?;
    let (k_star, value) = concave_argmax(k_min, k_max, |k| tdd_downlink_rate(params, k, method))?;
    Ok(OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::ExactScan,
        feasible_range: (k_min, k_max),
    })
}

/// The approximate TDD downlink rate (1 − k/T₁)·log2(1 + P ln k) with
/// T₁ = T·log2(1+P); the TDD closed form approximates its argmax.
pub fn tdd_approx_objective(params: &SystemParams, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    let t1 = params.t_eff() * params.c_uplink();
    let kf = k as f64;
    Ok((1.0 - kf / t1) * (1.0 + params.p * kf.ln()).log2())
}

/// Two-stage Lambert-W approximation to the optimal TDD feedback
/// population:
///
/// T₁ = T·log2(1+P), K₁ = T₁/W(e^{1/P}T₁),
/// T₂ = (T₁ − K₁)/ln(1 + P ln K₁), K = T₂/W(e^{1/P}T₂),
///
/// rounded against [`tdd_approx_objective`]. The refinement stops after the
/// second stage; at high SNR that can sit a couple of users below the true
/// argmax of the approximate rate.
pub fn tdd_k_ap(params: &SystemParams) -> Result<OptResult> {
    let t1 = params.t_eff() * params.c_uplink();
    if t1 <= std::f64::consts::E {
        return Err(Error::Domain(format!(
            "two-stage refinement needs T·log2(1+P) > e, got {t1:.3}"
        )));
    }
    let inv_p = 1.0 / params.p;
    let k1 = t1 / lambert_w_log_arg(inv_p + t1.ln())?;
    let t2 = (t1 - k1) / (1.0 + params.p * k1.ln()).ln();
    if !(t2 > 1.0) {
        return Err(Error::Domain(format!(
            "refined blocklength {t2:.3} too small for the Lambert stage"
        )));
    }
    let k_cont = t2 / lambert_w_log_arg(inv_p + t2.ln())?;
    let (k_min, k_max) = feasible_span(params)?;
    let (k_star, value) =
        round_against(k_cont, k_min, k_max, |k| tdd_approx_objective(params, k))?;
    Ok(OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::LambertApprox,
        feasible_range: (k_min, k_max),
    })
}

// ---------------------------------------------------------------------------
// Rate curves
// ---------------------------------------------------------------------------

/// Evaluates downlink/uplink rates and the objective for every feasible k.
pub fn rate_curve(
    params: &SystemParams,
    duplex: Duplex,
    method: SpectralEfficiencyMethod,
) -> Result<RateCurve> {
    let (k_min, k_max) = feasible_span(params)?;
    let mut entries = Vec::with_capacity((k_max - k_min + 1) as usize);
    for k in k_min..=k_max {
        let point = match duplex {
            Duplex::Fdd => {
                let r_d = muvdiv::spectral_efficiency(k, params.p, method)?;
                let r_u = fdd_uplink_rate(params, k)?;
                RatePoint { k, r_d, r_u, objective: params.lambda_r * r_d + r_u }
            }
            Duplex::Tdd => {
                let r_d = tdd_downlink_rate(params, k, method)?;
                RatePoint { k, r_d, r_u: 0.0, objective: r_d }
            }
        };
        entries.push(point);
    }
    Ok(RateCurve { entries, method, duplex })
}

// ---------------------------------------------------------------------------
// Single-user multi-antenna variants (TDD objective)
// ---------------------------------------------------------------------------

/// MIMO optimizer output: the integer scan of the Gaussian-approximated
/// rate next to its closed form, plus the Gaussian parameters used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoOpt {
    pub scan: OptResult,
    pub closed_form: OptResult,
    pub gauss: MimoGaussianParams,
}

/// Integer scan of the Gaussian-max downlink rate
/// (1 − k/T₁)·(μ + σ·sqrt(2 ln k)) for explicit moments.
pub fn gaussian_rate_scan(params: &SystemParams, mu: f64, sigma2: f64) -> Result<OptResult> {
    let (k_min, k_max) = feasible_span(params)?;
    let t1 = params.t_eff() * params.c_uplink();
    let objective = |k: u64| -> Result<f64> {
        Ok((1.0 - k as f64 / t1) * gaussian_max_mean(mu, sigma2, k)?)
    };
    let (k_star, value) = exhaustive_argmax(k_min, k_max, objective)?;
    Ok(OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::ExactScan,
        feasible_range: (k_min, k_max),
    })
}

/// Optimal feedback population for an n×n spatial-multiplexing downlink,
/// via the Gaussian approximation to the per-user mutual information.
///
/// Returns both the integer scan and the two-stage closed form
/// K = T₁/(2W(B·T₁/2)) with ln B = (1 + (μ/σ)·sqrt(2 ln K₁))/2 and
/// K₁ = T₁/(2W(T₁/2)). When P <= e the Gaussian mean is nonpositive and
/// `gauss.regime_valid` is false; results are still produced but mean
/// little.
pub fn mimo_optimize(params: &SystemParams, n: u32) -> Result<MimoOpt> {
    let gauss = mimo_mi_gaussian_params(n, params.p)?;
    let scan = gaussian_rate_scan(params, gauss.mu, gauss.sigma2)?;

    let t1 = params.t_eff() * params.c_uplink();
    let half = t1 / 2.0;
    if half <= std::f64::consts::E {
        return Err(Error::Domain(format!(
            "closed form needs T·log2(1+P)/2 > e, got {half:.3}"
        )));
    }
    let k1 = half / lambert_w_log_arg(half.ln())?;
    let sigma = gauss.sigma2.sqrt();
    let ln_b = 0.5 * (1.0 + gauss.mu / sigma * (2.0 * k1.ln()).sqrt());
    let k_cont = half / lambert_w_log_arg(ln_b + half.ln())?;
    let (k_min, k_max) = feasible_span(params)?;
    let (k_star, value) = round_against(k_cont, k_min, k_max, |k| {
        Ok((1.0 - k as f64 / t1) * gaussian_max_mean(gauss.mu, gauss.sigma2, k)?)
    })?;
    let closed_form = OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::LambertApprox,
        feasible_range: (k_min, k_max),
    };
    Ok(MimoOpt { scan, closed_form, gauss })
}

/// Optimal feedback population with `n_r` receive antennas per user:
/// integer scan of (1 − k/T₁)·log2(1 + P·b_K) over the growth rate of the
/// max of Gamma(n_r, 1) SNRs. (No usable closed form; solved numerically.)
pub fn simo_optimize(params: &SystemParams, n_r: u32) -> Result<OptResult> {
    let (k_min, k_max) = feasible_span(params)?;
    let k_min = k_min.max(2); // growth rate needs k >= 2
    if k_min > k_max {
        return Err(Error::Infeasible("no feasible k >= 2".into()));
    }
    let t1 = params.t_eff() * params.c_uplink();
    let (k_star, value) = exhaustive_argmax(k_min, k_max, |k| {
        let g = simo_growth_rate(k, n_r)?;
        Ok((1.0 - k as f64 / t1) * (1.0 + params.p * g.b_k).log2())
    })?;
    Ok(OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::ExactScan,
        feasible_range: (k_min, k_max),
    })
}

/// Monte Carlo counterpart of [`simo_optimize`]: maximizes
/// (1 − k/T₁)·E[log2(1 + P·max of k Gamma(n_r,1))] with the expectation
/// estimated by common random numbers — each trial draws one pool of
/// `k_max` SNRs and prefix maxima price every k at once, so adjacent-k
/// noise cancels in the comparison.
pub fn simo_optimize_mc(
    params: &SystemParams,
    n_r: u32,
    mc_config: &mc::McConfig,
) -> Result<OptResult> {
    use rand_distr::{Distribution, Exp1};
    let (k_min, k_max) = feasible_span(params)?;
    let t1 = params.t_eff() * params.c_uplink();
    let n_k = k_max as usize;
    let sums = mc::map_reduce_trials(
        mc_config.trials,
        mc_config.workers,
        || vec![0.0f64; n_k],
        |mut acc, t| {
            let mut rng = mc::trial_rng(mc_config.seed, t);
            let mut running_max = f64::NEG_INFINITY;
            for (i, slot) in acc.iter_mut().enumerate().take(n_k) {
                let snr: f64 = (0..n_r).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum();
                running_max = running_max.max(snr);
                let _ = i;
                *slot += (1.0 + params.p * running_max).log2();
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    let mut best: Option<(u64, f64)> = None;
    for k in k_min..=k_max {
        let mean = sums[(k - 1) as usize] / mc_config.trials as f64;
        let v = (1.0 - k as f64 / t1) * mean;
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    let (k_star, value) = best.ok_or_else(|| Error::Infeasible("empty scan range".into()))?;
    Ok(OptResult {
        k_star,
        n_star: None,
        value,
        method: OptMethod::ExactScan,
        feasible_range: (k_min, k_max),
    })
}

// ---------------------------------------------------------------------------
// Scan helpers
// ---------------------------------------------------------------------------

fn feasible_span(params: &SystemParams) -> Result<(u64, u64)> {
    let k_max = params.k_max_feasible();
    if k_max < 1 {
        return Err(Error::Infeasible(
            "bandwidth cannot host even one feedback user".into(),
        ));
    }
    Ok((1, k_max))
}

/// Full integer scan; ties break toward the smaller argument.
pub fn exhaustive_argmax<F>(k_lo: u64, k_hi: u64, mut f: F) -> Result<(u64, f64)>
where
    F: FnMut(u64) -> Result<f64>,
{
    let mut best_k = k_lo;
    let mut best_v = f(k_lo)?;
    for k in k_lo + 1..=k_hi {
        let v = f(k)?;
        if v > best_v {
            best_k = k;
            best_v = v;
        }
    }
    Ok((best_k, best_v))
}

/// Scan that stops at the first strict decrease, valid for concave
/// objectives. Plateaus keep the earlier k.
fn concave_argmax<F>(k_lo: u64, k_hi: u64, mut f: F) -> Result<(u64, f64)>
where
    F: FnMut(u64) -> Result<f64>,
{
    let mut best_k = k_lo;
    let mut best_v = f(k_lo)?;
    for k in k_lo + 1..=k_hi {
        let v = f(k)?;
        if v > best_v {
            best_k = k;
            best_v = v;
        } else if v < best_v {
            break;
        }
    }
    Ok((best_k, best_v))
}

/// Rounds a continuous optimizer output to the better of floor/ceil under
/// the continuous objective, clamped to the feasible span.
fn round_against<F>(k_cont: f64, k_lo: u64, k_hi: u64, mut objective: F) -> Result<(u64, f64)>
where
    F: FnMut(u64) -> Result<f64>,
{
    let clamp = |k: f64| -> u64 { (k.max(k_lo as f64).min(k_hi as f64)) as u64 };
    let lo = clamp(k_cont.floor());
    let hi = clamp(k_cont.ceil());
    let v_lo = objective(lo)?;
    if hi == lo {
        return Ok((lo, v_lo));
    }
    let v_hi = objective(hi)?;
    Ok(if v_hi > v_lo { (hi, v_hi) } else { (lo, v_lo) })
}
