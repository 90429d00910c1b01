//! Observed series, deterministic trends and OLS detrending.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest polynomial trend degree accepted.
pub const MAX_TREND_DEGREE: usize = 5;

/// Gram matrices with a condition number above this are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Deterministic trend regressors removed before testing.
///
/// `Polynomial(d)` uses the raw time index, columns `1, t, ..., t^d` for
/// `t = 1..=m`. `Constant` and `Linear` are the degree 0 and 1 cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendSpec {
    None,
    Constant,
    Linear,
    Polynomial(usize),
}

impl TrendSpec {
    /// Polynomial degree, `None` when no trend is removed.
    pub fn degree(self) -> Option<usize> {
        match self {
            TrendSpec::None => None,
            TrendSpec::Constant => Some(0),
            TrendSpec::Linear => Some(1),
            TrendSpec::Polynomial(d) => Some(d),
        }
    }

    /// Number of trend regressors `p`.
    pub fn regressors(self) -> usize {
        self.degree().map_or(0, |d| d + 1)
    }

    pub fn validate(self) -> Result<()> {
        match self.degree() {
            Some(d) if d > MAX_TREND_DEGREE => Err(Error::InvalidConfig(format!(
                "trend degree {d} exceeds the maximum of {MAX_TREND_DEGREE}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for TrendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrendSpec::None => f.write_str("none"),
            TrendSpec::Constant => f.write_str("constant"),
            TrendSpec::Linear => f.write_str("linear"),
            TrendSpec::Polynomial(d) => write!(f, "poly:{d}"),
        }
    }
}

impl FromStr for TrendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s.trim().to_ascii_lowercase().as_str() {
            "none" => TrendSpec::None,
            "constant" | "const" => TrendSpec::Constant,
            "linear" => TrendSpec::Linear,
            other => {
                let degree = other
                    .strip_prefix("poly:")
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown trend '{s}'")))?;
                TrendSpec::Polynomial(degree)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Observations `y_1..y_m` together with the trend to remove.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSeries {
    values: Vec<f64>,
    trend: TrendSpec,
}

impl ObservedSeries {
    pub fn new(values: Vec<f64>, trend: TrendSpec) -> Result<Self> {
        trend.validate()?;
        let min_len = trend.regressors() + 4;
        if values.len() < min_len {
            return Err(Error::InvalidSeries(format!(
                "{} observations is too short for trend '{trend}' (need at least {min_len})",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "observation {} is not finite",
                pos + 1
            )));
        }
        Ok(ObservedSeries { values, trend })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trend(&self) -> TrendSpec {
        self.trend
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// OLS residuals `x` of the observations on the trend, and the fitted coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DetrendedSeries {
    pub x: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Trend design matrix with column `j` holding `t^j`, `t = 1..=m`.
pub fn build_trend_matrix(trend: TrendSpec, m: usize) -> DMatrix<f64> {
    let p = trend.regressors();
    DMatrix::from_fn(m, p, |i, j| ((i + 1) as f64).powi(j as i32))
}

/// Orthogonal projector onto the complement of a trend's column space.
///
/// Built once per (trend, length) pair with a Householder QR of the
/// column-normalised design, then reused for every series of that length.
#[derive(Debug, Clone)]
pub struct TrendProjector {
    m: usize,
    /// Orthonormal basis of the trend column space, column-major `m x p`.
    q: Vec<Vec<f64>>,
    r: DMatrix<f64>,
    scales: Vec<f64>,
}

impl TrendProjector {
    pub fn new(trend: TrendSpec, m: usize) -> Result<Self> {
        Self::from_design(build_trend_matrix(trend, m))
    }

    /// Projector for an arbitrary full-rank design matrix.
    pub fn from_design(mut z: DMatrix<f64>) -> Result<Self> {
        let (m, p) = z.shape();
        if p == 0 {
            return Ok(TrendProjector {
                m,
                q: Vec::new(),
                r: DMatrix::zeros(0, 0),
                scales: Vec::new(),
            });
        }
        if m < p {
            return Err(Error::InsufficientData {
                needed: p,
                available: m,
            });
        }
        let mut scales = Vec::with_capacity(p);
        for mut col in z.column_iter_mut() {
            let norm = col.norm();
            if norm == 0.0 {
                return Err(Error::RankDeficient {
                    condition: f64::INFINITY,
                });
            }
            col /= norm;
            scales.push(norm);
        }
        let qr = z.qr();
        let r = qr.r();
        let singular = r.clone().singular_values();
        let (smax, smin) = singular
            .iter()
            .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
        let condition = if smin > 0.0 {
            (smax / smin).powi(2)
        } else {
            f64::INFINITY
        };
        if !(condition <= MAX_GRAM_CONDITION) {
            return Err(Error::RankDeficient { condition });
        }
        let q_mat = qr.q();
        let q = q_mat.column_iter().map(|c| c.iter().copied().collect()).collect();
        Ok(TrendProjector { m, q, r, scales })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn regressors(&self) -> usize {
        self.q.len()
    }

    /// Residual of `y` after projecting out the trend, written into `out`.
    pub fn residualize_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.m);
        out.copy_from_slice(y);
        for col in &self.q {
            let coef: f64 = col.iter().zip(y).map(|(a, b)| a * b).sum();
            for (o, c) in out.iter_mut().zip(col) {
                *o -= coef * c;
            }
        }
    }

    pub fn residualize(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.residualize_into(y, &mut out);
        out
    }

    /// Least-squares coefficients on the original (unnormalised) design.
    pub fn coefficients(&self, y: &[f64]) -> Vec<f64> {
        let p = self.q.len();
        if p == 0 {
            return Vec::new();
        }
        let qty = DVector::from_iterator(
            p,
            self.q
                .iter()
                .map(|col| col.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()),
        );
        let solved = self
            .r
            .solve_upper_triangular(&qty)
            .expect("triangular factor checked nonsingular at construction");
        solved
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| b / s)
            .collect()
    }
}

/// Regress the observations on their trend and return residuals and coefficients.
pub fn ols_detrend(series: &ObservedSeries) -> Result<DetrendedSeries> {
    let projector = TrendProjector::new(series.trend(), series.len())?;
    Ok(DetrendedSeries {
        x: projector.residualize(series.values()),
        beta: projector.coefficients(series.values()),
    })
}
