//! Simulation and verification toolkit for the mildly explosive first-order
//! autoregression driven by a mildly explosive AR(1) error,
//!
//! ```text
//! X_k = theta_n X_{k-1} + eps_k,    eps_k = rho_n eps_{k-1} + V_k,    X_0 = eps_0 = 0,
//! ```
//!
//! with `|theta_n| = 1 + gamma1 / k_n`, `|rho_n| = 1 + gamma2 / k_n` and
//! `k_n = n^alpha`.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameter space, path simulation, closed-form paths, sign flip.
//! * [`estimation`]: least-squares estimators and the path aggregates.
//! * [`functionals`]: the weighted noise sums `xi`, `eta`, `phi`.
//! * [`identities`]: exact finite-sample identity checks.
//! * [`limits`]: normalized statistics, Cauchy references, goodness of fit.
//! * [`harness`]: seeded parallel Monte Carlo campaigns and property suites.

pub mod error;
pub mod estimation;
pub mod functionals;
pub mod harness;
pub mod identities;
pub mod limits;
pub mod model;
pub mod rng;
pub mod summation;

pub use error::{Error, Result};
pub use estimation::{aggregates, estimate, estimate_rho, estimate_theta, Aggregates, EstimateResult};
pub use functionals::{functionals, zeta_combination, FunctionalSet};
pub use harness::{run_campaign, run_property_suite, CampaignConfig, CampaignResult};
pub use identities::{IdentityId, IdentityReport};
pub use limits::{cauchy_reference, ks_distance, normalized_statistic, CauchyRef, TheoremBranch};
pub use model::{simulate, ModelConfig, Noise, Params, Regime, SamplePath};
pub use summation::SummationMode;
