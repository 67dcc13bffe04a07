//! Least-squares estimators and path aggregates.
//!
//! ```text
//! theta_hat = sum_{k=1}^n X_k X_{k-1} / sum_{k=1}^n X_{k-1}^2
//! e_k       = X_k - theta_hat X_{k-1},  e_0 = 0
//! rho_hat   = sum_{k=1}^n e_k e_{k-1} / sum_{k=1}^n e_{k-1}^2
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SamplePath;
use crate::summation::{Accumulator, SummationMode};

/// Sums over one path. All run over `k = 1..=n` unless noted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// `P_n = sum X_k X_{k-1}`
    pub p_n: f64,
    /// `S_{n-1,n} = sum X_{k-1}^2`
    pub s_n_minus_1: f64,
    /// `S_n = sum X_k^2`
    pub s_n: f64,
    /// `L_n = sum V_k^2`
    pub l_n: f64,
    /// `M_n = sum X_{k-1} V_k`
    pub m_n: f64,
    /// `N_n = sum_{k=2}^n X_{k-2} V_k`
    pub n_n: f64,
    /// `sum eps_{k-1} V_k`
    pub ev_n: f64,
    /// `P_n - theta_n S_{n-1,n}`, evaluated as `sum X_{k-1} eps_k`.
    pub p_minus_theta_s: f64,
    /// `P_n - rho_n S_{n-1,n}`, evaluated as `sum X_{k-1} u_k`.
    pub p_minus_rho_s: f64,
}

/// All sums in a single pass over the path.
pub fn aggregates(path: &SamplePath, mode: SummationMode) -> Aggregates {
    let acc = || Accumulator::new(mode);
    let (mut p, mut s1, mut s, mut l, mut m, mut nn, mut ev, mut pt, mut pr) =
        (acc(), acc(), acc(), acc(), acc(), acc(), acc(), acc(), acc());
    let x = &path.x;
    for k in 1..=path.n() {
        let vk = path.noise(k);
        let prev = x[k - 1];
        p.add(x[k] * prev);
        s1.add(prev * prev);
        s.add(x[k] * x[k]);
        l.add(vk * vk);
        m.add(prev * vk);
        if k >= 2 {
            nn.add(x[k - 2] * vk);
        }
        ev.add(path.eps[k - 1] * vk);
        pt.add(prev * path.eps[k]);
        pr.add(prev * path.u[k]);
    }
    Aggregates {
        p_n: p.value(),
        s_n_minus_1: s1.value(),
        s_n: s.value(),
        l_n: l.value(),
        m_n: m.value(),
        n_n: nn.value(),
        ev_n: ev.value(),
        p_minus_theta_s: pt.value(),
        p_minus_rho_s: pr.value(),
    }
}

pub fn estimate_theta(path: &SamplePath) -> Result<f64> {
    theta_from(&aggregates(path, SummationMode::Plain))
}

fn theta_from(agg: &Aggregates) -> Result<f64> {
    if agg.s_n_minus_1 == 0.0 {
        return Err(Error::ZeroDenominator("theta_hat"));
    }
    Ok(agg.p_n / agg.s_n_minus_1)
}

/// `e_k = X_k - theta_hat X_{k-1}` for `k = 0..=n`, with `e_0 = 0`.
///
/// Evaluated as `eps_k - (theta_hat - theta_n) X_{k-1}`. The direct
/// difference cancels the leading digits of two numbers of size `X_k`,
/// which on long explosive paths are many orders above `eps_k`.
pub fn residuals(path: &SamplePath, theta_hat: f64) -> Vec<f64> {
    residuals_from_dev(path, theta_hat - path.params.theta)
}

fn residuals_from_dev(path: &SamplePath, theta_dev: f64) -> Vec<f64> {
    std::iter::once(0.0)
        .chain((1..=path.n()).map(|k| path.eps[k] - theta_dev * path.x[k - 1]))
        .collect()
}

pub fn estimate_rho(path: &SamplePath, theta_hat: f64) -> Result<f64> {
    rho_from(&residuals(path, theta_hat), SummationMode::Plain)
}

fn rho_from(res: &[f64], mode: SummationMode) -> Result<f64> {
    let mut num = Accumulator::new(mode);
    let mut den = Accumulator::new(mode);
    for w in res.windows(2) {
        num.add(w[1] * w[0]);
        den.add(w[0] * w[0]);
    }
    let den = den.value();
    if den == 0.0 {
        return Err(Error::ZeroDenominator("rho_hat"));
    }
    Ok(num.value() / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub rho_hat: f64,
    pub residuals: Vec<f64>,
    /// `theta_hat - theta_n` as `(P_n - theta_n S_{n-1,n}) / S_{n-1,n}`.
    ///
    /// On explosive paths this deviation sits far below the resolution of
    /// `theta_hat` itself, so the normalized statistics are built from it
    /// rather than from `theta_hat - theta_n`.
    pub theta_dev: f64,
    /// `theta_hat - rho_n` as `(P_n - rho_n S_{n-1,n}) / S_{n-1,n}`.
    pub rho_dev: f64,
    pub aggregates: Aggregates,
}

/// Both estimators plus every aggregate.
pub fn estimate(path: &SamplePath, mode: SummationMode) -> Result<EstimateResult> {
    let agg = aggregates(path, mode);
    let theta_hat = theta_from(&agg)?;
    let theta_dev = agg.p_minus_theta_s / agg.s_n_minus_1;
    let res = residuals_from_dev(path, theta_dev);
    let rho_hat = rho_from(&res, mode)?;
    Ok(EstimateResult {
        theta_hat,
        rho_hat,
        residuals: res,
        theta_dev,
        rho_dev: agg.p_minus_rho_s / agg.s_n_minus_1,
        aggregates: agg,
    })
}

/// Flat record for CSV export, keyed by seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub seed: u64,
    pub theta_hat: f64,
    pub rho_hat: f64,
    pub theta_dev: f64,
    pub rho_dev: f64,
    pub p_n: f64,
    pub s_n_minus_1: f64,
    pub s_n: f64,
    pub l_n: f64,
    pub m_n: f64,
    pub n_n: f64,
    pub ev_n: f64,
}

impl EstimateRow {
    pub fn new(seed: u64, est: &EstimateResult) -> Self {
        let a = &est.aggregates;
        EstimateRow {
            seed,
            theta_hat: est.theta_hat,
            rho_hat: est.rho_hat,
            theta_dev: est.theta_dev,
            rho_dev: est.rho_dev,
            p_n: a.p_n,
            s_n_minus_1: a.s_n_minus_1,
            s_n: a.s_n,
            l_n: a.l_n,
            m_n: a.m_n,
            n_n: a.n_n,
            ev_n: a.ev_n,
        }
    }
}
