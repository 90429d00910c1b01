//! Bootstrap unit root tests for errors whose variance and dependence drift over time.
//!
//! The crate detrends a series by OLS, computes the normalised-bias `T` and
//! studentised `t` statistics, and approximates their null distributions with
//! the dependent wild bootstrap (DWB), the recolored wild bootstrap (RWB) or
//! the recolored dependent wild bootstrap (RDWB). A Monte Carlo harness
//! reproduces size tables and size-corrected power curves on simulated data.

pub mod bootstrap;
pub mod dgp;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod rng;
pub mod series;
pub mod stats;

pub use bootstrap::{
    bootstrap_quantile, default_bandwidth, dwb_run, p_value, rdwb_run, run_bootstrap, Bandwidth,
    BootstrapConfig, BootstrapResult, Kernel, Method, Statistic,
};
pub use dgp::{simulate_series, DgpSpec, ProcessId};
pub use error::{Error, Result};
pub use series::{ols_detrend, DetrendedSeries, ObservedSeries, TrendSpec};
pub use stats::{adf_fit, maic_select, unit_root_statistics, AdfFit, MaicSelection, UnitRootStats};
pub use io::read_series_csv;
pub use montecarlo::{
    infeasible_critical_value, run_size_experiment, size_corrected_power, ExperimentSpec, MethodSpec, RejectionRow,
    RejectionTable,
};
