//! Sigmoid calibration of decision values.
//!
//! Fits `p(f) = 1 / (1 + exp(a * f + b))` by Newton's method with
//! backtracking on the cross-entropy against the smoothed targets
//! `(N+ + 1) / (N+ + 2)` for positives and `1 / (N- + 2)` for negatives.
//! See Lin, Lin & Weng, "A note on Platt's probabilistic outputs for support
//! vector machines" for the iteration used here.

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;
const MIN_STEP: f64 = 1e-10;
const HESSIAN_RIDGE: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-5;

/// Fitted sigmoid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub a: f64,
    pub b: f64,
    /// True when the fit was flat or non-monotone and `(-1, 0)` is used
    /// instead.
    pub degenerate: bool,
}

impl Calibration {
    pub const FALLBACK: Calibration = Calibration { a: -1.0, b: 0.0, degenerate: true };
}

/// Negative log-likelihood of the smoothed targets under `(a, b)`.
pub fn platt_objective(decisions: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let (hi, lo) = targets(y);
    decisions
        .iter()
        .zip(y)
        .map(|(f, yi)| {
            let t = if *yi > 0.0 { hi } else { lo };
            let z = f * a + b;
            if z >= 0.0 {
                t * z + libm::log1p(libm::exp(-z))
            } else {
                (t - 1.0) * z + libm::log1p(libm::exp(z))
            }
        })
        .sum()
}

fn targets(y: &[f64]) -> (f64, f64) {
    let pos = y.iter().filter(|v| **v > 0.0).count() as f64;
    let neg = y.len() as f64 - pos;
    ((pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0))
}

/// Fits the sigmoid. Requires both signs in `y`.
///
/// Returns [`Calibration::FALLBACK`] when all decision values are equal or the
/// optimum has `a >= 0`.
pub fn fit_platt(decisions: &[f64], y: &[f64]) -> Result<Calibration> {
    if decisions.len() != y.len() {
        return Err(Error::LengthMismatch { pred: decisions.len(), truth: y.len() });
    }
    let pos = y.iter().filter(|v| **v > 0.0).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassData);
    }
    let first = decisions[0];
    if decisions.iter().all(|f| *f == first) {
        return Ok(Calibration::FALLBACK);
    }
    let (hi, lo) = targets(y);
    let mut a = 0.0;
    let mut b = libm::log((neg as f64 + 1.0) / (pos as f64 + 1.0));
    let mut fval = platt_objective(decisions, y, a, b);
    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21) = (HESSIAN_RIDGE, HESSIAN_RIDGE, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (f, yi) in decisions.iter().zip(y) {
            let t = if *yi > 0.0 { hi } else { lo };
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = libm::exp(-z);
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = libm::exp(z);
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < GRAD_TOL && g2.abs() < GRAD_TOL {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = platt_objective(decisions, y, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    if a >= 0.0 || !a.is_finite() || !b.is_finite() {
        return Ok(Calibration::FALLBACK);
    }
    Ok(Calibration { a, b, degenerate: false })
}
