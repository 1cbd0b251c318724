//! Binary linear SVM: hinge loss with an L2 penalty on the weights, trained by
//! stochastic subgradient descent on the primal.
//!
//! The objective is
//!
//! ```text
//! F(w, b) = lambda/2 * |w|^2 + 1/n * sum_i max(0, 1 - y_i (w . x_i + b))
//! ```
//!
//! with an unpenalized bias, so `F(0, 0) = 1` on any data.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::num::{self, dot};

/// Solver settings. Defaults: `lambda = 1e-4`, `epochs = 20`, `seed = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmHyperParams {
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
}

impl Default for SvmHyperParams {
    fn default() -> Self {
        Self { lambda: 1e-4, epochs: 20, seed: 0 }
    }
}

impl SvmHyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// A trained hyperplane plus its sigmoid calibration.
///
/// The calibrated probability of the positive class is
/// `1 / (1 + exp(platt_a * f + platt_b))` for decision value `f`; with
/// `platt_a < 0` it increases with `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub w: Vec<f64>,
    pub b: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    /// Set when calibration failed and the `(-1, 0)` fallback is in use.
    pub calibration_fallback: bool,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    pub fn probability_of_decision(&self, f: f64) -> f64 {
        num::inv_logistic(self.platt_a * f + self.platt_b)
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        self.probability_of_decision(self.decision(x))
    }
}

fn check_inputs(x: &[f64], dim: usize, y: &[f64]) -> Result<()> {
    if dim == 0 || x.len() != y.len() * dim {
        return Err(Error::FeatureDimMismatch { expected: y.len() * dim, found: x.len() });
    }
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::InvalidParameter("targets must be +1 or -1".into()));
    }
    Ok(())
}

/// Exact primal objective `F(w, b)` for row-major samples `x` of width `dim`.
pub fn svm_objective(w: &[f64], b: f64, x: &[f64], dim: usize, y: &[f64], lambda: f64) -> f64 {
    assert_eq!(w.len(), dim);
    assert_eq!(x.len(), y.len() * dim);
    let hinge: f64 = x
        .chunks_exact(dim)
        .zip(y)
        .map(|(xi, yi)| {
            let loss = 1.0 - yi * (dot(w, xi) + b);
            if loss > 0.0 {
                loss
            } else {
                0.0
            }
        })
        .sum();
    0.5 * lambda * dot(w, w) + hinge / y.len() as f64
}

/// A subgradient of `F` at `(w, b)`. Where no margin equals 1 exactly this is
/// the gradient.
pub fn svm_subgradient(
    w: &[f64],
    b: f64,
    x: &[f64],
    dim: usize,
    y: &[f64],
    lambda: f64,
) -> (Vec<f64>, f64) {
    let n = y.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|wj| lambda * wj).collect();
    let mut gb = 0.0;
    for (xi, yi) in x.chunks_exact(dim).zip(y) {
        if yi * (dot(w, xi) + b) < 1.0 {
            for (g, xij) in gw.iter_mut().zip(xi) {
                *g -= yi * xij / n;
            }
            gb -= yi / n;
        }
    }
    (gw, gb)
}

/// Trains an uncalibrated SVM (`platt_a = -1`, `platt_b = 0`).
///
/// Each epoch visits the samples in a fresh seeded permutation. Step `t`
/// (counted from 1) uses `eta = 1 / (1 + lambda * t)`: shrink `w` by
/// `1 - eta * lambda`, then on a margin violation move `w` and `b` by
/// `eta * y * x` and `eta * y`. The returned iterate is the epoch-end iterate
/// with the lowest objective, the all-zero start included, so the objective
/// never exceeds 1.
pub fn train_binary_svm(x: &[f64], dim: usize, y: &[f64], hp: &SvmHyperParams) -> Result<BinarySvm> {
    train_binary_svm_seeded(x, dim, y, hp, 0)
}

pub(crate) fn train_binary_svm_seeded(
    x: &[f64],
    dim: usize,
    y: &[f64],
    hp: &SvmHyperParams,
    stream: u64,
) -> Result<BinarySvm> {
    hp.validate()?;
    check_inputs(x, dim, y)?;
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(y.iter().any(|v| *v > 0.0) && y.iter().any(|v| *v < 0.0)) {
        return Err(Error::SingleClassData);
    }
    let lambda = hp.lambda;
    let mut rng = num::rng(hp.seed, stream);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = (w.clone(), b, svm_objective(&w, b, x, dim, y, lambda));
    let mut t: u64 = 0;
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (1.0 + lambda * t as f64);
            let xi = &x[i * dim..(i + 1) * dim];
            let yi = y[i];
            let violated = yi * (dot(&w, xi) + b) < 1.0;
            let shrink = 1.0 - eta * lambda;
            if violated {
                let step = eta * yi;
                for (wj, xij) in w.iter_mut().zip(xi) {
                    *wj = *wj * shrink + step * xij;
                }
                b += step;
            } else {
                w.iter_mut().for_each(|wj| *wj *= shrink);
            }
        }
        let obj = svm_objective(&w, b, x, dim, y, lambda);
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
    }
    Ok(BinarySvm { w: best.0, b: best.1, platt_a: -1.0, platt_b: 0.0, calibration_fallback: false })
}
