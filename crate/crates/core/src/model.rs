//! Model parameterisation, path simulation and closed-form path oracles.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest horizon accepted by [`ModelConfig::validate`]. Keeps
/// `theta_n^(2n) k_n^4` inside the `f64` range for the rates used in practice.
pub const MAX_N: usize = 2000;

/// Default relative gap `|theta - rho| / (|theta| + |rho|)` below which the
/// distinct-roots closed form is refused.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// Signs of `(theta_n, rho_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(alias = "pp")]
    PP,
    #[serde(alias = "pm")]
    PM,
    #[serde(alias = "mm")]
    MM,
    #[serde(alias = "mp")]
    MP,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::PP, Regime::PM, Regime::MM, Regime::MP];

    pub fn theta_sign(self) -> f64 {
        match self {
            Regime::PP | Regime::PM => 1.0,
            Regime::MM | Regime::MP => -1.0,
        }
    }

    pub fn rho_sign(self) -> f64 {
        match self {
            Regime::PP | Regime::MP => 1.0,
            Regime::PM | Regime::MM => -1.0,
        }
    }

    /// True when `theta_n` and `rho_n` share a sign.
    pub fn same_sign(self) -> bool {
        matches!(self, Regime::PP | Regime::MM)
    }

    /// Regime reached by `Y_k = (-1)^k X_k`.
    pub fn flipped(self) -> Regime {
        match self {
            Regime::PP => Regime::MM,
            Regime::MM => Regime::PP,
            Regime::PM => Regime::MP,
            Regime::MP => Regime::PM,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::PP => "PP",
            Regime::PM => "PM",
            Regime::MM => "MM",
            Regime::MP => "MP",
        };
        f.write_str(s)
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PP" => Ok(Regime::PP),
            "PM" => Ok(Regime::PM),
            "MM" => Ok(Regime::MM),
            "MP" => Ok(Regime::MP),
            _ => Err(Error::InvalidArgument(format!("unknown regime `{s}`"))),
        }
    }
}

/// Distribution of the i.i.d. noise `V_k`. All choices are symmetric with
/// mean zero and variance `sigma^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Noise {
    #[serde(alias = "gaussian")]
    Gaussian,
    #[serde(alias = "rademacher")]
    Rademacher,
    #[serde(alias = "uniform")]
    Uniform,
}

impl Noise {
    pub const ALL: [Noise; 3] = [Noise::Gaussian, Noise::Rademacher, Noise::Uniform];

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, sigma: f64) -> f64 {
        match self {
            Noise::Gaussian => sigma * rng.sample::<f64, _>(StandardNormal),
            Noise::Rademacher => {
                if rng.random::<bool>() {
                    sigma
                } else {
                    -sigma
                }
            }
            Noise::Uniform => {
                let half_width = sigma * 3f64.sqrt();
                rng.random_range(-half_width..half_width)
            }
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Noise::Gaussian => "Gaussian",
            Noise::Rademacher => "Rademacher",
            Noise::Uniform => "Uniform",
        };
        f.write_str(s)
    }
}

impl FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Noise::Gaussian),
            "rademacher" => Ok(Noise::Rademacher),
            "uniform" => Ok(Noise::Uniform),
            _ => Err(Error::InvalidArgument(format!("unknown noise `{s}`"))),
        }
    }
}

/// Full parameterisation of the model.
///
/// The JSON form uses exactly these field names; unknown keys are rejected
/// and the decoded value is validated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfigFields")]
pub struct ModelConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha: f64,
    pub n: usize,
    pub regime: Regime,
    pub sigma: f64,
    pub noise: Noise,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelConfigFields {
    gamma1: f64,
    gamma2: f64,
    alpha: f64,
    n: usize,
    regime: Regime,
    sigma: f64,
    noise: Noise,
}

impl TryFrom<ModelConfigFields> for ModelConfig {
    type Error = Error;

    fn try_from(f: ModelConfigFields) -> Result<Self> {
        let cfg = ModelConfig {
            gamma1: f.gamma1,
            gamma2: f.gamma2,
            alpha: f.alpha,
            n: f.n,
            regime: f.regime,
            sigma: f.sigma,
            noise: f.noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Default for ModelConfig {
    /// The simulation design point: `n = 400`, `k_n = n^(1/3)`, standard
    /// Gaussian noise.
    fn default() -> Self {
        ModelConfig {
            gamma1: 2.0,
            gamma2: 1.0,
            alpha: 1.0 / 3.0,
            n: 400,
            regime: Regime::PP,
            sigma: 1.0,
            noise: Noise::Gaussian,
        }
    }
}

impl ModelConfig {
    pub fn new(
        gamma1: f64,
        gamma2: f64,
        alpha: f64,
        n: usize,
        regime: Regime,
        sigma: f64,
        noise: Noise,
    ) -> Result<Self> {
        let cfg = ModelConfig {
            gamma1,
            gamma2,
            alpha,
            n,
            regime,
            sigma,
            noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.gamma1.is_finite() && self.gamma1 > 0.0) {
            return bad(format!("gamma1 must be positive, got {}", self.gamma1));
        }
        if !(self.gamma2.is_finite() && self.gamma2 > 0.0) {
            return bad(format!("gamma2 must be positive, got {}", self.gamma2));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.n > MAX_N {
            return bad(format!("n must not exceed {MAX_N}, got {}", self.n));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }

    pub fn k_n(&self) -> f64 {
        (self.n as f64).powf(self.alpha)
    }

    /// `gamma1 == gamma2` in a same-sign regime, i.e. `theta_n == rho_n`.
    pub fn equal_roots(&self) -> bool {
        self.gamma1 == self.gamma2 && self.regime.same_sign()
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_gammas(mut self, gamma1: f64, gamma2: f64) -> Self {
        self.gamma1 = gamma1;
        self.gamma2 = gamma2;
        self
    }
}

/// Effective coefficients of one model instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub theta: f64,
    pub rho: f64,
    pub k_n: f64,
}

impl Params {
    pub fn new(theta: f64, rho: f64, k_n: f64) -> Self {
        Params { theta, rho, k_n }
    }

    pub fn equal_roots(&self) -> bool {
        self.theta == self.rho
    }

    /// `|theta - rho| / (|theta| + |rho|)`.
    pub fn relative_gap(&self) -> f64 {
        (self.theta - self.rho).abs() / (self.theta.abs() + self.rho.abs())
    }

    /// Natural log of the largest root magnitude raised to `power`.
    pub fn log_growth(&self, power: usize) -> f64 {
        power as f64 * self.theta.abs().max(self.rho.abs()).ln()
    }

    pub fn flipped(&self) -> Params {
        Params::new(-self.theta, -self.rho, self.k_n)
    }
}

/// `theta_n = ±(1 + gamma1/k_n)`, `rho_n = ±(1 + gamma2/k_n)`, `k_n = n^alpha`.
pub fn effective_params(config: &ModelConfig) -> Result<Params> {
    config.validate()?;
    let k_n = config.k_n();
    let theta = config.regime.theta_sign() * (1.0 + config.gamma1 / k_n);
    let rho = config.regime.rho_sign() * (1.0 + config.gamma2 / k_n);
    Ok(Params { theta, rho, k_n })
}

/// One realisation of the model.
///
/// `v[k - 1]` holds `V_k`; `eps[k]`, `x[k]` and `u[k]` are indexed by time
/// with `eps[0] = x[0] = u[0] = 0`.
///
/// `u_k = X_k - rho_n X_{k-1}` is carried alongside. It obeys its own
/// recursion `u_k = theta_n u_{k-1} + V_k`, which yields it without the
/// cancellation of the direct difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub params: Params,
    pub v: Vec<f64>,
    pub eps: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl SamplePath {
    /// Runs the recursion on a given noise sequence `V_1..V_n`.
    pub fn from_noise(params: Params, v: Vec<f64>) -> SamplePath {
        let n = v.len();
        let mut eps = Vec::with_capacity(n + 1);
        let mut x = Vec::with_capacity(n + 1);
        let mut u = Vec::with_capacity(n + 1);
        eps.push(0.0);
        x.push(0.0);
        u.push(0.0);
        for (k, &vk) in v.iter().enumerate() {
            let e = params.rho * eps[k] + vk;
            eps.push(e);
            x.push(params.theta * x[k] + e);
            u.push(params.theta * u[k] + vk);
        }
        SamplePath { params, v, eps, x, u }
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// `V_k` for `1 <= k <= n`.
    #[inline]
    pub fn noise(&self, k: usize) -> f64 {
        self.v[k - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().all(|&x| x == 0.0)
    }
}

/// Draws `V_1..V_n` from the configured noise and runs the recursion.
/// Deterministic in `(config, seed)`.
pub fn simulate(config: &ModelConfig, seed: u64) -> Result<SamplePath> {
    let params = effective_params(config)?;
    let mut rng = rng::stream(seed);
    let v = (0..config.n)
        .map(|_| config.noise.sample(&mut rng, config.sigma))
        .collect();
    Ok(SamplePath::from_noise(params, v))
}

/// Which closed form produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootsBranch {
    Distinct,
    Equal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub value: f64,
    pub branch: RootsBranch,
}

/// Closed-form `X_{k,n}` from the noise alone, with the default degeneracy
/// threshold.
pub fn closed_form_x(path: &SamplePath, k: usize) -> Result<ClosedForm> {
    closed_form_x_with(path, k, DEGENERACY_THRESHOLD)
}

/// Closed-form `X_{k,n}`:
///
/// ```text
/// distinct roots:  X_k = theta/(theta-rho) theta^k sum_{l<=k} theta^-l V_l
///                      - rho/(theta-rho)   rho^k   sum_{l<=k} rho^-l   V_l
/// equal roots:     X_k = theta^k sum_{l<=k} (k-l+1) theta^-l V_l
/// ```
///
/// The equal-roots form is used only when `theta == rho` exactly; a gap
/// below `threshold` (relative) is rejected rather than extrapolated.
pub fn closed_form_x_with(path: &SamplePath, k: usize, threshold: f64) -> Result<ClosedForm> {
    let n = path.n();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    let Params { theta, rho, .. } = path.params;
    let k_i32 = k as i32;

    if path.params.equal_roots() {
        let inv = theta.recip();
        let mut w = 1.0;
        let mut s = 0.0;
        for l in 1..=k {
            w *= inv;
            s += (k - l + 1) as f64 * w * path.noise(l);
        }
        return Ok(ClosedForm {
            value: theta.powi(k_i32) * s,
            branch: RootsBranch::Equal,
        });
    }

    if path.params.relative_gap() < threshold {
        return Err(Error::DegenerateRoots {
            gap: (theta - rho).abs(),
        });
    }
    let (inv_t, inv_r) = (theta.recip(), rho.recip());
    let (mut wt, mut wr) = (1.0, 1.0);
    let (mut st, mut sr) = (0.0, 0.0);
    for l in 1..=k {
        wt *= inv_t;
        wr *= inv_r;
        st += wt * path.noise(l);
        sr += wr * path.noise(l);
    }
    let d = theta - rho;
    let value = theta / d * theta.powi(k_i32) * st - rho / d * rho.powi(k_i32) * sr;
    Ok(ClosedForm {
        value,
        branch: RootsBranch::Distinct,
    })
}

/// The path `Y_k = (-1)^k X_k` with `eta_k = (-1)^k eps_k` and noise
/// `W_k = (-1)^k V_k`, generated by `(-theta_n, -rho_n)`. Only sign changes
/// are applied, so the map is exact and an involution.
pub fn sign_flip(path: &SamplePath) -> SamplePath {
    let alt = |k: usize, x: f64| if k % 2 == 1 { -x } else { x };
    let flip = |xs: &[f64]| xs.iter().enumerate().map(|(k, &x)| alt(k, x)).collect::<Vec<_>>();
    SamplePath {
        params: path.params.flipped(),
        v: path.v.iter().enumerate().map(|(i, &x)| alt(i + 1, x)).collect(),
        eps: flip(&path.eps),
        x: flip(&path.x),
        u: flip(&path.u),
    }
}
