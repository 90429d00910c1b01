//! Python bindings for `urtest_core`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use urtest_core::bootstrap::{self, mv_select_bandwidth, MvSelection};
use urtest_core::montecarlo::parse_bandwidth;
use urtest_core::rng::StreamKey;
use urtest_core::{BootstrapConfig, DgpSpec, Error, Kernel, Method, ObservedSeries, ProcessId, Statistic, TrendSpec};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) => PyValueError::new_err(e.to_string()),
        _ if e.is_data_error() => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn series(values: Vec<f64>, trend: &str) -> PyResult<ObservedSeries> {
    ObservedSeries::new(values, parse::<TrendSpec>(trend)?).map_err(to_py)
}

#[pyclass(name = "UnitRootStats", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyUnitRootStats {
    rho_hat: f64,
    #[pyo3(name = "T")]
    coef_stat: f64,
    t: Option<f64>,
    s_sq: f64,
    n_eff: usize,
}

impl From<urtest_core::UnitRootStats> for PyUnitRootStats {
    fn from(s: urtest_core::UnitRootStats) -> Self {
        PyUnitRootStats {
            rho_hat: s.rho_hat,
            coef_stat: s.coef_stat,
            t: s.t_stat,
            s_sq: s.s_sq,
            n_eff: s.n_eff,
        }
    }
}

#[pymethods]
impl PyUnitRootStats {
    fn __repr__(&self) -> String {
        format!(
            "UnitRootStats(rho_hat={}, T={}, t={}, s_sq={})",
            self.rho_hat,
            self.coef_stat,
            self.t.map_or("None".to_string(), |t| t.to_string()),
            self.s_sq
        )
    }
}

#[pyclass(name = "BootstrapResult", frozen, get_all)]
struct PyBootstrapResult {
    method: String,
    observed: PyUnitRootStats,
    #[pyo3(name = "T_star")]
    coef_star: Vec<f64>,
    t_star: Vec<f64>,
    #[pyo3(name = "p_T")]
    p_coef: f64,
    p_t: f64,
    l_used: usize,
    k_hat: Option<usize>,
    replications: usize,
    failures: usize,
    json: String,
}

#[pymethods]
impl PyBootstrapResult {
    /// JSON report as printed by the command-line tool.
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        let k_hat = self.k_hat.map_or("None".to_string(), |k| k.to_string());
        format!(
            "BootstrapResult(method={}, l_used={}, k_hat={k_hat}, p_T={}, p_t={})",
            self.method, self.l_used, self.p_coef, self.p_t
        )
    }
}

#[derive(FromPyObject)]
enum BandwidthArg {
    Fixed(usize),
    Named(String),
}

/// OLS-detrend `values`; returns `(x, beta)`.
#[pyfunction]
#[pyo3(signature = (values, trend = "constant"))]
fn detrend(values: Vec<f64>, trend: &str) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let d = urtest_core::ols_detrend(&series(values, trend)?).map_err(to_py)?;
    Ok((d.x, d.beta))
}

#[pyfunction]
fn unit_root_statistics(x: Vec<f64>) -> PyResult<PyUnitRootStats> {
    Ok(urtest_core::unit_root_statistics(&x).map_err(to_py)?.into())
}

/// MAIC lag choice on a detrended series; returns `(k_hat, k_max, scores)`.
#[pyfunction]
fn maic_select(x: Vec<f64>) -> PyResult<(usize, usize, Vec<Option<f64>>)> {
    let sel = urtest_core::maic_select(&x).map_err(to_py)?;
    Ok((sel.k_hat, sel.k_max, sel.scores))
}

#[pyfunction]
#[pyo3(signature = (values, method = "rdwb", trend = "constant", B = 999, l = BandwidthArg::Named("auto".into()), kernel = "bartlett", seed = 0))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn bootstrap_test(
    py: Python<'_>,
    values: Vec<f64>,
    method: &str,
    trend: &str,
    B: usize,
    l: BandwidthArg,
    kernel: &str,
    seed: u64,
) -> PyResult<PyBootstrapResult> {
    let bandwidth = match l {
        BandwidthArg::Fixed(l) => parse_bandwidth(&l.to_string()),
        BandwidthArg::Named(s) => parse_bandwidth(&s),
    }
    .map_err(to_py)?;
    let config = BootstrapConfig::new(parse::<Method>(method)?, B, seed)
        .with_bandwidth(bandwidth)
        .with_kernel(parse::<Kernel>(kernel)?);
    let s = series(values, trend)?;
    let res = py.detach(|| urtest_core::run_bootstrap(&s, &config)).map_err(to_py)?;
    Ok(PyBootstrapResult {
        method: res.method.to_string(),
        observed: res.observed.into(),
        json: res.to_json().to_string(),
        coef_star: res.coef_star,
        t_star: res.t_star,
        p_coef: res.p_coef,
        p_t: res.p_t,
        l_used: res.l_used,
        k_hat: res.k_hat,
        replications: res.replications,
        failures: res.failures,
    })
}

/// Minimum-volatility bandwidth; returns `(l_selected, candidates, distances)`.
#[pyfunction]
#[pyo3(signature = (values, method = "rdwb", trend = "constant", B = 399, kernel = "bartlett", seed = 0, candidates = None, statistic = "T"))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn mv_select(
    py: Python<'_>,
    values: Vec<f64>,
    method: &str,
    trend: &str,
    B: usize,
    kernel: &str,
    seed: u64,
    candidates: Option<Vec<usize>>,
    statistic: &str,
) -> PyResult<(usize, Vec<usize>, Vec<f64>)> {
    let config = BootstrapConfig::new(parse::<Method>(method)?, B, seed).with_kernel(parse::<Kernel>(kernel)?);
    let s = series(values, trend)?;
    let candidates = candidates.unwrap_or_else(|| bootstrap::default_mv_candidates(s.len()));
    let stat = parse::<Statistic>(statistic)?;
    let MvSelection {
        l_selected,
        candidates,
        distances,
        ..
    } = py
        .detach(|| mv_select_bandwidth(&s, &config, &candidates, stat))
        .map_err(to_py)?;
    Ok((l_selected, candidates, distances))
}

/// Simulate `X_1..X_n` from a design such as `"MA_1_1"`.
#[pyfunction]
#[pyo3(signature = (process, n, c = 0.0, seed = 0))]
fn simulate_series(process: &str, n: usize, c: f64, seed: u64) -> PyResult<Vec<f64>> {
    let spec = DgpSpec::new(parse::<ProcessId>(process)?, n, c).map_err(to_py)?;
    let s = urtest_core::simulate_series(&spec, &mut StreamKey::root(seed).rng()).map_err(to_py)?;
    Ok(s.values().to_vec())
}

#[pyfunction]
fn default_bandwidth(n: usize) -> usize {
    urtest_core::default_bandwidth(n)
}

fn nonempty(v: &[f64], what: &str) -> PyResult<()> {
    if v.is_empty() {
        Err(PyValueError::new_err(format!("{what} must not be empty")))
    } else {
        Ok(())
    }
}

#[pyfunction]
fn p_value(stars: Vec<f64>, observed: f64) -> PyResult<f64> {
    nonempty(&stars, "stars")?;
    Ok(urtest_core::p_value(&stars, observed))
}

#[pyfunction]
fn bootstrap_quantile(stars: Vec<f64>, alpha: f64) -> PyResult<f64> {
    nonempty(&stars, "stars")?;
    Ok(urtest_core::bootstrap_quantile(&stars, alpha))
}

#[pyfunction]
fn ks_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    nonempty(&a, "a")?;
    nonempty(&b, "b")?;
    Ok(bootstrap::ks_distance(&a, &b))
}

#[pymodule]
fn urtest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUnitRootStats>()?;
    m.add_class::<PyBootstrapResult>()?;
    m.add_function(wrap_pyfunction!(detrend, m)?)?;
    m.add_function(wrap_pyfunction!(unit_root_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(maic_select, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_test, m)?)?;
    m.add_function(wrap_pyfunction!(mv_select, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_series, m)?)?;
    m.add_function(wrap_pyfunction!(default_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(p_value, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance, m)?)?;
    Ok(())
}
