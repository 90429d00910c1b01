//! Dependent wild bootstrap (DWB), recolored wild bootstrap (RWB) and their
//! combination (RDWB) for the `T` and `t` unit root statistics.
//!
//! All three share one resampling loop: residuals are multiplied by kernel
//! multipliers, rebuilt into a series under the unit root null (plain
//! cumulation for DWB, an AR recoloring for RWB/RDWB), re-detrended and
//! re-tested. Replication `b` draws from its own substream of the run seed, so
//! results do not depend on how replications are scheduled across threads.

mod kernel;
mod multipliers;
mod mv;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::Kernel;
pub use multipliers::{generate_multipliers, ConstantMultipliers, KernelMultipliers, MultiplierSource};
pub use mv::{default_mv_candidates, ks_distance, mv_select_bandwidth, MvSelection};

use crate::error::{Error, Result};
use crate::rng::replication_rng;
use crate::series::{ols_detrend, ObservedSeries, TrendProjector, TrendSpec};
use crate::stats::{adf_fit, maic_select, unit_root_statistics, UnitRootStats};

/// Fraction of failed replications tolerated before a run is declared degenerate.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Dwb,
    Rwb,
    Rdwb,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dwb => "DWB",
            Method::Rwb => "RWB",
            Method::Rdwb => "RDWB",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dwb" => Ok(Method::Dwb),
            "rwb" => Ok(Method::Rwb),
            "rdwb" => Ok(Method::Rdwb),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// Which of the two unit root statistics a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "T")]
    Coef,
    #[serde(rename = "t")]
    T,
}

impl Statistic {
    pub const BOTH: [Statistic; 2] = [Statistic::Coef, Statistic::T];

    pub fn symbol(self) -> &'static str {
        match self {
            Statistic::Coef => "T",
            Statistic::T => "t",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "T" => Ok(Statistic::Coef),
            "t" => Ok(Statistic::T),
            other => Err(Error::InvalidConfig(format!("unknown statistic '{other}'"))),
        }
    }
}

/// How the multiplier bandwidth `l` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(usize),
    /// `floor(6 (n/100)^{1/4})`.
    DeterministicRule,
    /// Minimum-volatility search over the default candidate set.
    MinimumVolatility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub method: Method,
    pub replications: usize,
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(method: Method, replications: usize, seed: u64) -> Self {
        BootstrapConfig {
            method,
            replications,
            bandwidth: Bandwidth::DeterministicRule,
            kernel: Kernel::Bartlett,
            seed,
        }
    }

    pub fn with_bandwidth(mut self, bandwidth: Bandwidth) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("at least one bootstrap replication is required".into()));
        }
        match (self.method, self.bandwidth) {
            (_, Bandwidth::Fixed(0)) => Err(Error::InvalidConfig("bandwidth must be at least 1".into())),
            (Method::Rwb, Bandwidth::MinimumVolatility) => Err(Error::InvalidConfig(
                "RWB uses independent multipliers (l = 1); bandwidth selection does not apply".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Observed statistics, bootstrap samples and left-tail p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub method: Method,
    pub observed: UnitRootStats,
    /// Bootstrap draws of `T`, one per successful replication.
    pub coef_star: Vec<f64>,
    /// Bootstrap draws of `t`, aligned with `coef_star`.
    pub t_star: Vec<f64>,
    pub p_coef: f64,
    pub p_t: f64,
    pub l_used: usize,
    pub k_hat: Option<usize>,
    pub replications: usize,
    pub failures: usize,
}

#[derive(Serialize)]
struct ResultReport {
    method: Method,
    l_used: usize,
    k_hat: Option<usize>,
    #[serde(rename = "B")]
    replications: usize,
    observed: ObservedReport,
    #[serde(rename = "p_T")]
    p_coef: f64,
    p_t: f64,
}

#[derive(Serialize)]
struct ObservedReport {
    rho: f64,
    #[serde(rename = "T")]
    coef: f64,
    t: Option<f64>,
    s_sq: f64,
}

impl BootstrapResult {
    pub fn stars(&self, statistic: Statistic) -> &[f64] {
        match statistic {
            Statistic::Coef => &self.coef_star,
            Statistic::T => &self.t_star,
        }
    }

    pub fn observed_value(&self, statistic: Statistic) -> f64 {
        match statistic {
            Statistic::Coef => self.observed.coef_stat,
            // runs only succeed when the observed t is defined
            Statistic::T => self.observed.t_stat.unwrap_or(f64::NAN),
        }
    }

    pub fn p_value(&self, statistic: Statistic) -> f64 {
        match statistic {
            Statistic::Coef => self.p_coef,
            Statistic::T => self.p_t,
        }
    }

    /// JSON report `{method, l_used, k_hat, B, observed: {rho, T, t, s_sq}, p_T, p_t}`.
    pub fn to_json(&self) -> serde_json::Value {
        let report = ResultReport {
            method: self.method,
            l_used: self.l_used,
            k_hat: self.k_hat,
            replications: self.replications,
            observed: ObservedReport {
                rho: self.observed.rho_hat,
                coef: self.observed.coef_stat,
                t: self.observed.t_stat,
                s_sq: self.observed.s_sq,
            },
            p_coef: self.p_coef,
            p_t: self.p_t,
        };
        serde_json::to_value(report).expect("report serializes")
    }
}

/// Left-tail bootstrap p-value `#{b : stars[b] < observed} / B`.
pub fn p_value(stars: &[f64], observed: f64) -> f64 {
    assert!(!stars.is_empty(), "p-value needs at least one bootstrap draw");
    stars.iter().filter(|&&s| s < observed).count() as f64 / stars.len() as f64
}

/// Lower empirical quantile: the `ceil(alpha * B)`-th order statistic (at least the first).
pub fn bootstrap_quantile(stars: &[f64], alpha: f64) -> f64 {
    assert!(!stars.is_empty(), "quantile needs at least one bootstrap draw");
    let mut sorted = stars.to_vec();
    sorted.sort_by(f64::total_cmp);
    order_statistic(&sorted, alpha)
}

/// `ceil(alpha * len)`-th smallest element of an already sorted slice.
pub(crate) fn order_statistic(sorted: &[f64], alpha: f64) -> f64 {
    let rank = (alpha * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Deterministic bandwidth `floor(6 (n/100)^{1/4})`, at least one.
pub fn default_bandwidth(n: usize) -> usize {
    ((6.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize).max(1)
}

/// Everything a resampling loop needs from the observed data.
#[derive(Debug, Clone)]
struct Prepared {
    observed: UnitRootStats,
    residuals: Vec<f64>,
    /// AR coefficients used to recolor; empty for DWB.
    pi: Vec<f64>,
    k_hat: Option<usize>,
    trend: TrendSpec,
}

fn prepare(series: &ObservedSeries, method: Method) -> Result<Prepared> {
    let detrended = ols_detrend(series)?;
    let x = &detrended.x;
    let observed = unit_root_statistics(x)?;
    observed.t()?;
    match method {
        Method::Dwb => {
            let rho = observed.rho_hat;
            let residuals = x.windows(2).map(|w| w[1] - rho * w[0]).collect();
            Ok(Prepared {
                observed,
                residuals,
                pi: Vec::new(),
                k_hat: None,
                trend: series.trend(),
            })
        }
        Method::Rwb | Method::Rdwb => {
            let k_hat = maic_select(x)?.k_hat;
            let fit = adf_fit(x, k_hat, k_hat + 2)?;
            Ok(Prepared {
                observed,
                residuals: fit.residuals,
                pi: fit.pi,
                k_hat: Some(k_hat),
                trend: series.trend(),
            })
        }
    }
}

/// Partial sums of `u`, i.e. a series built under `rho = 1` from `x_0 = 0`.
pub fn cumulate(u: &[f64]) -> Vec<f64> {
    recolor(u, &[])
}

/// Rebuild levels from perturbed residuals under `pi_0 = 0`.
///
/// The first `k = pi.len()` levels are the residuals themselves; after that
/// `dx_t = sum_i pi_i dx_{t-i} + u_t` with `x_0 = 0`. With `k = 0` this is
/// plain cumulation.
pub fn recolor(u: &[f64], pi: &[f64]) -> Vec<f64> {
    let k = pi.len();
    let mut levels = Vec::with_capacity(u.len());
    let mut diffs = Vec::with_capacity(u.len());
    let mut prev = 0.0;
    for (idx, &ut) in u.iter().enumerate() {
        let (level, diff) = if idx < k {
            (ut, ut - prev)
        } else {
            let ar: f64 = pi.iter().enumerate().map(|(i, p)| p * diffs[idx - 1 - i]).sum();
            let diff = ar + ut;
            (prev + diff, diff)
        };
        diffs.push(diff);
        levels.push(level);
        prev = level;
    }
    levels
}

enum Replication {
    Ok(f64, f64),
    Failed,
}

fn resample(
    prep: &Prepared,
    method: Method,
    l: usize,
    source: &dyn MultiplierSource,
    replications: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    let len = prep.residuals.len();
    let projector = TrendProjector::new(prep.trend, len)?;
    let draws = (0..replications)
        .into_par_iter()
        .with_min_len(8)
        .map(|b| {
            let mut rng = replication_rng(seed, b);
            let mut w = vec![0.0; len];
            source.fill(&mut rng, &mut w);
            let u_star: Vec<f64> = prep.residuals.iter().zip(&w).map(|(u, w)| u * w).collect();
            let x_star = recolor(&u_star, &prep.pi);
            if x_star.iter().any(|v| !v.is_finite()) {
                return Err(Error::UnstableRecoloring { pi: prep.pi.clone() });
            }
            let detrended = projector.residualize(&x_star);
            Ok(match unit_root_statistics(&detrended) {
                Ok(UnitRootStats {
                    coef_stat,
                    t_stat: Some(t),
                    ..
                }) => Replication::Ok(coef_stat, t),
                Ok(_) | Err(Error::DegenerateSeries) => Replication::Failed,
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut coef_star = Vec::with_capacity(replications);
    let mut t_star = Vec::with_capacity(replications);
    for d in &draws {
        if let Replication::Ok(c, t) = d {
            coef_star.push(*c);
            t_star.push(*t);
        }
    }
    let failures = replications - coef_star.len();
    if failures as f64 > MAX_FAILURE_RATE * replications as f64 {
        return Err(Error::DegenerateBootstrap {
            failures,
            replications,
        });
    }
    let p_coef = p_value(&coef_star, prep.observed.coef_stat);
    let p_t = p_value(&t_star, prep.observed.t()?);
    Ok(BootstrapResult {
        method,
        observed: prep.observed,
        coef_star,
        t_star,
        p_coef,
        p_t,
        l_used: l,
        k_hat: prep.k_hat,
        replications,
        failures,
    })
}

fn resolve_bandwidth(series: &ObservedSeries, config: &BootstrapConfig) -> Result<usize> {
    match (config.method, config.bandwidth) {
        (Method::Rwb, _) => Ok(1),
        (_, Bandwidth::Fixed(l)) => Ok(l),
        (_, Bandwidth::DeterministicRule) => Ok(default_bandwidth(series.len())),
        (_, Bandwidth::MinimumVolatility) => {
            let candidates = default_mv_candidates(series.len());
            Ok(mv_select_bandwidth(series, config, &candidates, Statistic::Coef)?.l_selected)
        }
    }
}

fn run_prepared(
    prep: &Prepared,
    config: &BootstrapConfig,
    l: usize,
    source: Option<&dyn MultiplierSource>,
) -> Result<BootstrapResult> {
    let len = prep.residuals.len();
    if l >= len {
        return Err(Error::InvalidConfig(format!(
            "bandwidth {l} must be below the {len} available residuals"
        )));
    }
    match source {
        Some(source) => resample(prep, config.method, l, source, config.replications, config.seed),
        None => {
            let kernel = KernelMultipliers::new(config.kernel, l, len)?;
            resample(prep, config.method, l, &kernel, config.replications, config.seed)
        }
    }
}

/// Run the configured bootstrap test on a series.
pub fn run_bootstrap(series: &ObservedSeries, config: &BootstrapConfig) -> Result<BootstrapResult> {
    config.validate()?;
    let l = resolve_bandwidth(series, config)?;
    let prep = prepare(series, config.method)?;
    run_prepared(&prep, config, l, None)
}

/// Run the configured bootstrap with an injected multiplier source.
pub fn run_bootstrap_with_source(
    series: &ObservedSeries,
    config: &BootstrapConfig,
    source: &dyn MultiplierSource,
) -> Result<BootstrapResult> {
    config.validate()?;
    let l = resolve_bandwidth(series, config)?;
    let prep = prepare(series, config.method)?;
    run_prepared(&prep, config, l, Some(source))
}

/// Dependent wild bootstrap on unrestricted first-order residuals.
pub fn dwb_run(series: &ObservedSeries, config: &BootstrapConfig) -> Result<BootstrapResult> {
    if config.method != Method::Dwb {
        return Err(Error::InvalidConfig(format!("dwb_run called with method {}", config.method)));
    }
    run_bootstrap(series, config)
}

/// Recolored (dependent) wild bootstrap on MAIC-selected ADF residuals.
pub fn rdwb_run(series: &ObservedSeries, config: &BootstrapConfig) -> Result<BootstrapResult> {
    if config.method == Method::Dwb {
        return Err(Error::InvalidConfig("rdwb_run requires method RWB or RDWB".into()));
    }
    run_bootstrap(series, config)
}
