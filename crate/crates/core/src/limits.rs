//! Normalized statistics, their Cauchy limits, and goodness of fit.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::EstimateResult;
use crate::model::{effective_params, ModelConfig, Regime};

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremBranch {
    T1_1,
    T1_2,
    T1_3,
    T2_1,
    T2_2,
}

impl TheoremBranch {
    pub const ALL: [TheoremBranch; 5] = [
        TheoremBranch::T1_1,
        TheoremBranch::T1_2,
        TheoremBranch::T1_3,
        TheoremBranch::T2_1,
        TheoremBranch::T2_2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremBranch::T1_1 => "T1_1",
            TheoremBranch::T1_2 => "T1_2",
            TheoremBranch::T1_3 => "T1_3",
            TheoremBranch::T2_1 => "T2_1",
            TheoremBranch::T2_2 => "T2_2",
        }
    }

    /// T1 branches need roots of equal sign.
    pub fn same_sign(self) -> bool {
        matches!(self, TheoremBranch::T1_1 | TheoremBranch::T1_2 | TheoremBranch::T1_3)
    }

    pub fn check(self, config: &ModelConfig) -> Result<()> {
        let mismatch = |reason: String| Err(Error::BranchMismatch { branch: self, reason });
        if self.same_sign() != config.regime.same_sign() {
            let want = if self.same_sign() { "PP or MM" } else { "PM or MP" };
            return mismatch(format!("needs regime {want}, got {}", config.regime));
        }
        let (g1, g2) = (config.gamma1, config.gamma2);
        let ok = match self {
            TheoremBranch::T1_1 | TheoremBranch::T2_1 => g1 > g2,
            TheoremBranch::T1_2 | TheoremBranch::T2_2 => g2 > g1,
            TheoremBranch::T1_3 => g1 == g2,
        };
        if !ok {
            let want = match self {
                TheoremBranch::T1_1 | TheoremBranch::T2_1 => "gamma1 > gamma2",
                TheoremBranch::T1_2 | TheoremBranch::T2_2 => "gamma2 > gamma1",
                TheoremBranch::T1_3 => "gamma1 == gamma2",
            };
            return mismatch(format!("needs {want}, got gamma1={g1}, gamma2={g2}"));
        }
        Ok(())
    }
}

impl fmt::Display for TheoremBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremBranch::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown branch `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyRef {
    pub location: f64,
    pub scale: f64,
}

impl CauchyRef {
    pub const STANDARD: CauchyRef = CauchyRef { location: 0.0, scale: 1.0 };

    pub fn new(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && location.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Cauchy reference needs finite location and positive scale, got ({location}, {scale})"
            )));
        }
        Ok(CauchyRef { location, scale })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        1.0 / (PI * self.scale * (1.0 + z * z))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        0.5 + ((x - self.location) / self.scale).atan() / PI
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.location + self.scale * (PI * (p - 0.5)).tan()
    }

    pub fn negated(&self) -> CauchyRef {
        CauchyRef { location: -self.location, scale: self.scale }
    }
}

/// Law of `B / A` for zero-mean jointly normal `(A, B)` with
/// `var A = var_a`, `var B = var_b`, `cov(A, B) = cov`.
pub fn ratio_of_normals(var_a: f64, var_b: f64, cov: f64) -> Result<CauchyRef> {
    let det = var_a * var_b - cov * cov;
    if !(var_a > 0.0 && det > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "singular covariance: var_a={var_a}, var_b={var_b}, cov={cov}"
        )));
    }
    CauchyRef::new(cov / var_a, det.sqrt() / var_a)
}

/// Constant in front of the T1_2 statistic.
///
/// The limit of `rho^n theta^-n k (theta_hat - rho)` is
/// `2 gamma2 (gamma2 - gamma1) / (gamma1 + gamma2) * xi_theta / xi_rho`, so
/// normalizing to `xi_theta / xi_rho` takes `(g1 + g2) / (2 g2 (g2 - g1))`.
pub fn t1_2_constant(gamma1: f64, gamma2: f64) -> f64 {
    (gamma1 + gamma2) / (2.0 * gamma2 * (gamma2 - gamma1))
}

/// The branch statistic for one estimate.
///
/// Deviations come from [`EstimateResult::theta_dev`] and
/// [`EstimateResult::rho_dev`]. For T1_2 the centering
/// `k (theta_hat - theta) - k (rho - theta)` is `k (theta_hat - rho)`, and
/// `k (rho - theta)` equals `gamma2 - gamma1` in the PP regime.
pub fn normalized_statistic(
    branch: TheoremBranch,
    est: &EstimateResult,
    config: &ModelConfig,
) -> Result<f64> {
    branch.check(config)?;
    let p = effective_params(config)?;
    let (g1, g2, k) = (config.gamma1, config.gamma2, p.k_n);
    let n = config.n as i32;
    let theta_over_rho = (p.theta / p.rho).powi(n);
    let rho_over_theta = (p.rho / p.theta).powi(n);
    Ok(match branch {
        TheoremBranch::T1_1 => {
            (g1 + g2) / (2.0 * g1 * (g1 - g2)) * k * theta_over_rho * est.theta_dev
        }
        TheoremBranch::T1_2 => t1_2_constant(g1, g2) * rho_over_theta * k * est.rho_dev,
        TheoremBranch::T1_3 => {
            let nf = config.n as f64;
            nf / k * (nf * est.theta_dev - p.theta)
        }
        TheoremBranch::T2_1 => {
            (g2 / g1).sqrt() / (2.0 * g1) * k * theta_over_rho * est.theta_dev
        }
        TheoremBranch::T2_2 => {
            (g1 / g2).sqrt() / (2.0 * g2) * k * rho_over_theta * est.rho_dev
        }
    })
}

/// Limit law of the branch statistic. MM references are the PP ones with
/// the location negated.
pub fn cauchy_reference(branch: TheoremBranch, config: &ModelConfig) -> Result<CauchyRef> {
    branch.check(config)?;
    let (g1, g2) = (config.gamma1, config.gamma2);
    let r = match branch {
        TheoremBranch::T1_1 => CauchyRef {
            location: 2.0 * g1 / (g1 + g2),
            scale: (g1 / g2).sqrt() * (g1 - g2) / (g1 + g2),
        },
        TheoremBranch::T1_2 => CauchyRef {
            location: 2.0 * g2 / (g1 + g2),
            scale: (g2 / g1).sqrt() * (g2 - g1) / (g1 + g2),
        },
        TheoremBranch::T1_3 => CauchyRef { location: 1.0 / g1, scale: 1.0 / (2.0 * g1) },
        TheoremBranch::T2_1 | TheoremBranch::T2_2 => CauchyRef::STANDARD,
    };
    Ok(if config.regime == Regime::MM { r.negated() } else { r })
}

/// Splits off non-finite values, returning the finite ones and the count
/// dropped.
pub fn split_finite(samples: &[f64]) -> (Vec<f64>, usize) {
    let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    let dropped = samples.len() - finite.len();
    (finite, dropped)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Kolmogorov–Smirnov distance to the reference CDF.
pub fn ks_distance(samples: &[f64], reference: &CauchyRef) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "KS distance needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let bad = samples.iter().filter(|x| !x.is_finite()).count();
    if bad > 0 {
        return Err(Error::NonFinite { count: bad });
    }
    let s = sorted(samples);
    let r = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = reference.cdf(x);
        d.max((i + 1) as f64 / r - f).max(f - i as f64 / r)
    }))
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("median of an empty sample".into()));
    }
    Ok(quantile_sorted(&sorted(samples), 0.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub prob: f64,
    pub empirical: f64,
    pub analytic: f64,
}

pub fn quantile_table(samples: &[f64], reference: &CauchyRef, probs: &[f64]) -> Result<Vec<QuantileRow>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("quantile table of an empty sample".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::InvalidArgument(format!("probability {p} outside (0, 1)")));
    }
    let s = sorted(samples);
    Ok(probs
        .iter()
        .map(|&p| QuantileRow { prob: p, empirical: quantile_sorted(&s, p), analytic: reference.quantile(p) })
        .collect())
}

/// Fraction of samples with `|x - location| > multiple * scale`.
pub fn tail_fraction(samples: &[f64], reference: &CauchyRef, multiple: f64) -> f64 {
    let cut = multiple * reference.scale;
    let hits = samples.iter().filter(|x| (**x - reference.location).abs() > cut).count();
    hits as f64 / samples.len() as f64
}

/// `P(|C| > multiple)` for a standard Cauchy `C`.
pub fn analytic_tail_fraction(multiple: f64) -> f64 {
    2.0 * (1.0 / multiple).atan() / PI
}
