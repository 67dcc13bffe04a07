//! Weighted noise sums behind every limit statement:
//!
//! ```text
//! xi_theta  = k^-1/2 sum_l theta^-l V_l          eta_theta = k^-1/2 sum_l theta^-(n-l)-1 V_l
//! xi_rho    = k^-1/2 sum_l rho^-l V_l            eta_rho   = k^-1/2 sum_l rho^-(n-l)-1 V_l
//! phi_theta = (n k^1/2)^-1 sum_l (n-l+1) theta^-l V_l
//! ```
//!
//! Also the exact finite-`n` covariance of these sums and their limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, Params, SamplePath};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub xi_theta: f64,
    pub eta_theta: f64,
    pub xi_rho: f64,
    pub eta_rho: f64,
    pub phi_theta: f64,
}

impl FunctionalSet {
    /// `(xi_theta, eta_theta, xi_rho, eta_rho)`.
    pub fn quad(&self) -> [f64; 4] {
        [self.xi_theta, self.eta_theta, self.xi_rho, self.eta_rho]
    }
}

/// Weight vectors `w[l - 1]` such that each functional is `sum_l w[l-1] V_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub xi_theta: Vec<f64>,
    pub eta_theta: Vec<f64>,
    pub xi_rho: Vec<f64>,
    pub eta_rho: Vec<f64>,
    pub phi_theta: Vec<f64>,
}

/// Running inverse powers `r^-1, r^-2, ..., r^-n`. Underflow flushes to zero.
fn inverse_powers(r: f64, n: usize) -> Vec<f64> {
    let inv = r.recip();
    let mut w = 1.0;
    (0..n)
        .map(|_| {
            w *= inv;
            w
        })
        .collect()
}

pub fn weights(params: &Params, n: usize) -> Weights {
    let scale = params.k_n.sqrt().recip();
    let pt = inverse_powers(params.theta, n);
    let pr = inverse_powers(params.rho, n);
    let nf = n as f64;
    // theta^-(n-l)-1 for l = 1..n is theta^-(n-l+1): the power sequence reversed.
    Weights {
        xi_theta: pt.iter().map(|w| w * scale).collect(),
        eta_theta: pt.iter().rev().map(|w| w * scale).collect(),
        xi_rho: pr.iter().map(|w| w * scale).collect(),
        eta_rho: pr.iter().rev().map(|w| w * scale).collect(),
        phi_theta: pt
            .iter()
            .enumerate()
            .map(|(i, w)| (nf - i as f64) / nf * w * scale)
            .collect(),
    }
}

fn dot(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn functionals(path: &SamplePath) -> FunctionalSet {
    let w = weights(&path.params, path.n());
    FunctionalSet {
        xi_theta: dot(&w.xi_theta, &path.v),
        eta_theta: dot(&w.eta_theta, &path.v),
        xi_rho: dot(&w.xi_rho, &path.v),
        eta_rho: dot(&w.eta_rho, &path.v),
        phi_theta: dot(&w.phi_theta, &path.v),
    }
}

/// `n (xi_theta - phi_theta) / k_n + xi_theta / (2 gamma1)`, whose limit is
/// `zeta_theta`. Only meaningful for equal roots.
pub fn zeta_combination(fs: &FunctionalSet, config: &ModelConfig) -> Result<f64> {
    if config.gamma1 != config.gamma2 {
        return Err(Error::InvalidArgument(format!(
            "zeta combination needs gamma1 == gamma2, got {} and {}",
            config.gamma1, config.gamma2
        )));
    }
    let n = config.n as f64;
    Ok(n * (fs.xi_theta - fs.phi_theta) / config.k_n() + fs.xi_theta / (2.0 * config.gamma1))
}

pub type Matrix4 = [[f64; 4]; 4];

/// Exact covariance of `(xi_theta, eta_theta, xi_rho, eta_rho)` at finite `n`.
pub fn exact_covariance(params: &Params, n: usize, sigma: f64) -> Matrix4 {
    let w = weights(params, n);
    let ws = [&w.xi_theta, &w.eta_theta, &w.xi_rho, &w.eta_rho];
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = sigma * sigma * dot(ws[i], ws[j]);
        }
    }
    out
}

/// Limit covariance of `(xi_theta, eta_theta, xi_rho, eta_rho)` when the
/// roots share a sign.
pub fn sigma1(gamma1: f64, gamma2: f64, sigma: f64) -> Matrix4 {
    let s2 = sigma * sigma;
    let (a, b, c) = (s2 / (2.0 * gamma1), s2 / (2.0 * gamma2), s2 / (gamma1 + gamma2));
    [
        [a, 0.0, c, 0.0],
        [0.0, a, 0.0, c],
        [c, 0.0, b, 0.0],
        [0.0, c, 0.0, b],
    ]
}

/// Limit covariance when the roots have opposite signs: all four are
/// independent.
pub fn sigma2(gamma1: f64, gamma2: f64, sigma: f64) -> Matrix4 {
    let s2 = sigma * sigma;
    let (a, b) = (s2 / (2.0 * gamma1), s2 / (2.0 * gamma2));
    [
        [a, 0.0, 0.0, 0.0],
        [0.0, a, 0.0, 0.0],
        [0.0, 0.0, b, 0.0],
        [0.0, 0.0, 0.0, b],
    ]
}

/// Limit covariance of `(phi_theta, xi_theta, eta_theta)`.
pub fn gamma_matrix(gamma1: f64, sigma: f64) -> [[f64; 3]; 3] {
    let a = sigma * sigma / (2.0 * gamma1);
    [[a, a, 0.0], [a, a, 0.0], [0.0, 0.0, a]]
}

/// Limit covariance of `(phi_theta, zeta_theta)` for equal roots.
pub fn xi_matrix(gamma: f64, sigma: f64) -> [[f64; 2]; 2] {
    let s2 = sigma * sigma;
    [
        [s2 / (2.0 * gamma), s2 / (2.0 * gamma * gamma)],
        [s2 / (2.0 * gamma * gamma), 5.0 * s2 / (8.0 * gamma.powi(3))],
    ]
}
