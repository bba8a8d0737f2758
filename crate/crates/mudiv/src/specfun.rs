//! Special functions used by the rate formulas and optimizers: the real
//! Lambert-W function (principal and −1 branches), the exponential integral
//! E1, and harmonic numbers.
//!
//! Lambert-W is solved to near machine precision because it sits inside the
//! closed-form optimizers that golden tests compare against; the asymptotic
//! expansion is kept separately since several closed forms in the literature
//! are really statements about that expansion.

use crate::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// 1/e, the branch point of the Lambert-W function.
#[cfg(test)]
const INV_E: f64 = 0.367_879_441_171_442_33;

/// Real branch of the Lambert-W function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// W0: defined for x >= -1/e, W0(x) >= -1.
    Principal,
    /// W-1: defined for -1/e <= x < 0, W-1(x) <= -1.
    NegativeOne,
}

// ---------------------------------------------------------------------------
// Lambert-W
// ---------------------------------------------------------------------------

/// Solves w·e^w = x on the requested branch.
///
/// The residual |w·e^w − x| is driven below `1e-13 · max(1, |x|)` by Halley
/// iteration from a branch-specific seed (at most 50 steps; convergence is
/// cubic and takes 2–5 in practice).
pub fn lambert_w(x: f64, branch: Branch) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("lambert_w: non-finite argument {x}")));
    }
    let q = 1.0 + std::f64::consts::E * x; // distance from the branch point
    if q < 0.0 {
        return Err(Error::Domain(format!(
            "lambert_w: x = {x} below the branch point -1/e"
        )));
    }
    match branch {
        Branch::Principal => {
            if q == 0.0 {
                return Ok(-1.0);
            }
            let seed = if x < 0.0 {
                if x > -0.2 {
                    // Taylor series at 0 is accurate enough as a seed here.
                    x * (1.0 + x * (-1.0 + x * 1.5))
                } else {
                    branch_point_series(q, true)
                }
            } else if x <= std::f64::consts::E {
                (1.0 + x).ln()
            } else {
                let l1 = x.ln();
                l1 - l1.ln()
            };
            Ok(halley(x, seed))
        }
        Branch::NegativeOne => {
            if x >= 0.0 {
                return Err(Error::Domain(format!(
                    "lambert_w: branch W-1 requires x < 0, got {x}"
                )));
            }
            if q == 0.0 {
                return Ok(-1.0);
            }
            if q < 1e-6 {
                // So close to the branch point that the series is already
                // more accurate than the iteration's termination test.
                return Ok(branch_point_series(q, false));
            }
            let seed = if x < -0.25 {
                branch_point_series(q, false)
            } else {
                // W-1(x) ~ ln(-x) - ln(-ln(-x)) for small |x|.
                let l1 = (-x).ln();
                let l2 = (-l1).ln();
                l1 - l2 + l2 / l1
            };
            // Newton on w + ln(-w) = ln(-x): monotone on (-inf, -1), immune
            // to the vanishing derivative of w e^w at w = -1.
            let target = (-x).ln();
            let mut w = seed.min(-1.0 - 1e-12);
            for _ in 0..50 {
                let g = w + (-w).ln() - target;
                let step = g / (1.0 + 1.0 / w);
                w -= step;
                if w > -1.0 {
                    w = -1.0 - 1e-12;
                }
                if step.abs() < 1e-12 * w.abs() {
                    break;
                }
            }
            Ok(halley(x, w))
        }
    }
}

/// Series for W about the branch point x = -1/e in powers of
/// p = ±sqrt(2(1 + e·x)); the sign selects the branch.
fn branch_point_series(q: f64, principal: bool) -> f64 {
    let p = if principal { (2.0 * q).sqrt() } else { -(2.0 * q).sqrt() };
    -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
}

/// Halley iteration on f(w) = w·e^w − x.
fn halley(x: f64, seed: f64) -> f64 {
    let tol = 1e-13 * x.abs().max(1.0);
    let mut w = seed;
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            break;
        }
        let fp = ew * (w + 1.0);
        let denom = fp - (w + 2.0) * f / (2.0 * (w + 1.0));
        let step = if denom != 0.0 { f / denom } else { f / fp };
        w -= step;
    }
    w
}

/// Solves w + ln w = ln_x (i.e. w = W(e^{ln_x}) on the principal branch)
/// without forming e^{ln_x}, which overflows for ln_x > ~709.
///
/// Requires ln_x >= 1, so that w >= 1 and the equation is well conditioned.
pub fn lambert_w_log_arg(ln_x: f64) -> Result<f64> {
    if !(ln_x >= 1.0) {
        return Err(Error::Domain(format!(
            "lambert_w_log_arg: requires ln_x >= 1, got {ln_x}"
        )));
    }
    let mut w = if ln_x > 2.0 { ln_x - ln_x.ln() } else { 1.0 };
    for _ in 0..50 {
        let g = w + w.ln() - ln_x;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if w < 0.5 {
            w = 0.5;
        }
        if step.abs() <= 1e-14 * w {
            break;
        }
    }
    Ok(w)
}

/// Leading asymptotic expansion of Lambert-W.
///
/// For x >= e this is the principal-branch expansion `ln x − ln ln x`; for
/// -1/e <= x < 0 it is the W-1 expansion `ln(−x) − ln(−ln(−x))`. Unlike
/// [`lambert_w`] the result is an approximation, not residual-exact.
pub fn lambert_w_asymptotic(x: f64) -> Result<f64> {
    if x >= std::f64::consts::E {
        let l1 = x.ln();
        Ok(l1 - l1.ln())
    } else if x < 0.0 && 1.0 + std::f64::consts::E * x >= 0.0 {
        let l1 = (-x).ln(); // <= -1, so -l1 > 0
        Ok(l1 - (-l1).ln())
    } else {
        Err(Error::Domain(format!(
            "lambert_w_asymptotic: x = {x} outside [-1/e, 0) and [e, inf)"
        )))
    }
}

// ---------------------------------------------------------------------------
// Exponential integral E1
// ---------------------------------------------------------------------------

/// Exponential integral E1(x) = ∫_x^∞ e^{−t}/t dt for x > 0.
///
/// Power series below 1, continued fraction above; both converge to near
/// machine precision, comfortably inside the 1e-10 relative target.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("exp_integral_e1: requires x > 0, got {x}")));
    }
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok((-x).exp() * e1_cf(x))
    }
}

/// Scaled exponential integral e^x·E1(x) for x > 0.
///
/// Stays finite for arbitrarily large x (≈ 1/x), where the unscaled product
/// would overflow or lose everything to underflow.
pub fn exp_e1_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("exp_e1_scaled: requires x > 0, got {x}")));
    }
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_cf(x))
    }
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = -term / kf;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Continued fraction for e^x·E1(x), modified Lentz algorithm.
fn e1_cf(x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200u32 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

// ---------------------------------------------------------------------------
// Harmonic numbers
// ---------------------------------------------------------------------------

/// k-th harmonic number H_k = Σ_{i=1}^{k} 1/i.
///
/// Forward summation with Neumaier compensation; exact to the final
/// rounding for every k used in the sweeps (up to 1e7).
pub fn harmonic(k: u64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 1..=k {
        let term = 1.0 / i as f64;
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    sum + comp
}
