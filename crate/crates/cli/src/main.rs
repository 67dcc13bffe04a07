//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed (or an I/O error), 2 usage error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use explosive_ar::estimation::EstimateRow;
use explosive_ar::harness::{identity_campaign, suite_ids, write_campaign, CampaignSummary};
use explosive_ar::identities::{verify_all, IdentityReport};
use explosive_ar::limits::QuantileRow;
use explosive_ar::rng::replication_seed;
use explosive_ar::{
    estimate, run_campaign, run_property_suite, simulate, CampaignConfig, Error, ModelConfig, Noise,
    Regime, SummationMode, TheoremBranch,
};

#[derive(Parser)]
#[command(name = "explosive-ar", version, about = "Mildly explosive AR(1) with AR(1) errors: simulation, estimation, identity checks and Cauchy limit campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write it as CSV (k, v, eps, x).
    Simulate(SimulateArgs),
    /// Estimate theta and rho on simulated paths, one CSV row per path.
    Estimate(EstimateArgs),
    /// Check the exact identity catalog, one CSV row per (identity, path).
    Verify(VerifyArgs),
    /// Run a Monte Carlo campaign for one branch.
    Mc(CampaignArgs),
    /// Run a campaign and report the fit against the Cauchy reference.
    LimitCheck(LimitCheckArgs),
    /// Run a registered property suite.
    Suite(SuiteArgs),
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// JSON config file. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// pp, pm, mm or mp.
    #[arg(long)]
    regime: Option<Regime>,
    #[arg(long)]
    sigma: Option<f64>,
    /// gaussian, rademacher or uniform.
    #[arg(long)]
    noise: Option<Noise>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Compensated summation for all sums.
    #[arg(long)]
    kahan: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of paths.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Draw a random nondegenerate configuration per path instead of using
    /// the model flags.
    #[arg(long)]
    random: bool,
    #[arg(long)]
    kahan: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    branch: Option<TheoremBranch>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for statistics.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    kahan: bool,
}

#[derive(Args)]
struct LimitCheckArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Fail when the KS distance is at or above this value.
    #[arg(long, default_value_t = 0.10)]
    max_ks: f64,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite id; see --list.
    name: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    list: bool,
}

/// Config file layout. Every field is optional; `model` holds a complete
/// model configuration when present.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<ModelConfig>,
    branch: Option<TheoremBranch>,
    replications: Option<usize>,
    base_seed: Option<u64>,
    workers: Option<usize>,
    output_path: Option<PathBuf>,
    summation_mode: Option<SummationMode>,
}

fn read_file_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

impl ModelArgs {
    fn resolve(&self, file: &FileConfig) -> Result<ModelConfig, CliError> {
        let mut cfg = file.model.unwrap_or_default();
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.gamma1 {
            cfg.gamma1 = v;
        }
        if let Some(v) = self.gamma2 {
            cfg.gamma2 = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.regime {
            cfg.regime = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.noise {
            cfg.noise = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl CampaignArgs {
    fn resolve(&self) -> Result<CampaignConfig, CliError> {
        let file = read_file_config(&self.model.config)?;
        let model = self.model.resolve(&file)?;
        let branch = self.branch.or(file.branch).ok_or_else(|| CliError::Usage("--branch is required".into()))?;
        let cfg = CampaignConfig {
            model,
            branch,
            replications: self.reps.or(file.replications).unwrap_or(1000),
            base_seed: self.seed.or(file.base_seed).unwrap_or(0),
            workers: self.workers.or(file.workers).unwrap_or_else(default_workers),
            output_path: self.out.clone().or(file.output_path),
            summation_mode: if self.kahan {
                SummationMode::Compensated
            } else {
                file.summation_mode.unwrap_or_default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn mode(kahan: bool) -> SummationMode {
    if kahan {
        SummationMode::Compensated
    } else {
        SummationMode::Plain
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::BranchMismatch { .. }
            | Error::UnknownSuite(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(fs::File::create(p)?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct PathRow {
    k: usize,
    v: f64,
    eps: f64,
    x: f64,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<bool, CliError> {
    let cfg = a.model.resolve(&read_file_config(&a.model.config)?)?;
    let path = simulate(&cfg, a.seed)?;
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    for k in 0..=path.n() {
        let v = if k == 0 { 0.0 } else { path.noise(k) };
        w.serialize(PathRow { k, v, eps: path.eps[k], x: path.x[k] })?;
    }
    w.flush()?;
    Ok(true)
}

fn cmd_estimate(a: &EstimateArgs) -> Result<bool, CliError> {
    let cfg = a.model.resolve(&read_file_config(&a.model.config)?)?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    let mut degenerate = 0;
    for i in 0..a.reps {
        let seed = if a.reps == 1 { a.seed } else { replication_seed(a.seed, i as u64) };
        match estimate(&simulate(&cfg, seed)?, mode(a.kahan)) {
            Ok(est) => w.serialize(EstimateRow::new(seed, &est))?,
            Err(Error::ZeroDenominator(what)) => {
                degenerate += 1;
                eprintln!("seed {seed}: zero denominator in {what}");
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.flush()?;
    Ok(degenerate == 0)
}

#[derive(Serialize)]
struct VerifyRow<'a> {
    identity: &'a str,
    part: &'a str,
    path_index: usize,
    seed: u64,
    gamma1: f64,
    gamma2: f64,
    alpha: f64,
    n: usize,
    regime: Regime,
    noise: Noise,
    lhs: f64,
    rhs: f64,
    rel_residual: f64,
    tolerance: f64,
    status: String,
    flags: String,
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool, CliError> {
    let runs: Vec<(ModelConfig, u64, Vec<IdentityReport>)> = if a.random {
        identity_campaign(a.seed, a.reps, mode(a.kahan))
    } else {
        let cfg = a.model.resolve(&read_file_config(&a.model.config)?)?;
        (0..a.reps)
            .map(|i| {
                let seed = replication_seed(a.seed, i as u64);
                simulate(&cfg, seed).map(|p| (cfg, seed, verify_all(&p, mode(a.kahan))))
            })
            .collect::<Result<_, _>>()?
    };
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    let mut unflagged = 0;
    for (i, (cfg, seed, reports)) in runs.iter().enumerate() {
        for r in reports {
            unflagged += r.is_unflagged_failure() as usize;
            w.serialize(VerifyRow {
                identity: r.identity_id.as_str(),
                part: &r.part,
                path_index: i,
                seed: *seed,
                gamma1: cfg.gamma1,
                gamma2: cfg.gamma2,
                alpha: cfg.alpha,
                n: cfg.n,
                regime: cfg.regime,
                noise: cfg.noise,
                lhs: r.lhs,
                rhs: r.rhs,
                rel_residual: r.rel_residual,
                tolerance: r.tolerance,
                status: format!("{:?}", r.status).to_lowercase(),
                flags: r.flags_string(),
            })?;
        }
    }
    w.flush()?;
    if unflagged > 0 {
        eprintln!("{unflagged} unflagged identity failures");
    }
    Ok(unflagged == 0)
}

fn cmd_mc(a: &CampaignArgs) -> Result<bool, CliError> {
    let cfg = a.resolve()?;
    let res = run_campaign(&cfg)?;
    let summary = CampaignSummary::new(&cfg, &res);
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if !res.within_nonfinite_cap() {
        eprintln!("{} of {} statistics non-finite", res.nonfinite_count, cfg.replications);
    }
    Ok(res.within_nonfinite_cap())
}

#[derive(Serialize)]
struct LimitReport {
    location: f64,
    scale: f64,
    ks: Option<f64>,
    n_nonfinite: usize,
    quantiles: Vec<QuantileRow>,
}

fn cmd_limit_check(a: &LimitCheckArgs) -> Result<bool, CliError> {
    let cfg = a.campaign.resolve()?;
    let res = run_campaign(&CampaignConfig { output_path: None, ..cfg.clone() })?;
    if let Some(dir) = &cfg.output_path {
        write_campaign(dir, &cfg, &res)?;
        write_json(&dir.join("limit_check.json"), &limit_report(&res))?;
    }
    println!("{}", serde_json::to_string_pretty(&limit_report(&res))?);
    let fit_ok = res.ks.is_some_and(|ks| ks < a.max_ks);
    Ok(fit_ok && res.within_nonfinite_cap())
}

fn limit_report(res: &explosive_ar::CampaignResult) -> LimitReport {
    LimitReport {
        location: res.reference.location,
        scale: res.reference.scale,
        ks: res.ks,
        n_nonfinite: res.nonfinite_count,
        quantiles: res.quantiles(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn cmd_suite(a: &SuiteArgs) -> Result<bool, CliError> {
    if a.list {
        for id in suite_ids() {
            println!("{id}");
        }
        return Ok(true);
    }
    let name = a.name.as_deref().ok_or_else(|| CliError::Usage("suite name required (see --list)".into()))?;
    let rep = run_property_suite(name, a.seed)?;
    println!("{}", serde_json::to_string_pretty(&rep)?);
    Ok(rep.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Mc(a) => cmd_mc(a),
        Command::LimitCheck(a) => cmd_limit_check(a),
        Command::Suite(a) => cmd_suite(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
