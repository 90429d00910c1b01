//! Unit root statistics, the augmented Dickey-Fuller regression and MAIC lag selection.
//!
//! A detrended vector of length `m` is read as `x_1..x_m`; the first-order
//! regression uses the `n = m - 1` pairs `(x_t, x_{t-1})`, `t = 2..=m`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TrendProjector;

/// Residual variances at or below this fraction of the regressor scale count as zero.
const ZERO_VARIANCE_RTOL: f64 = 1e-28;

/// Least-squares root estimate and the two unit root statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitRootStats {
    #[serde(rename = "rho")]
    pub rho_hat: f64,
    /// Normalised bias `n (rho_hat - 1)`.
    #[serde(rename = "T")]
    pub coef_stat: f64,
    /// Studentised statistic; `None` when the residual variance is zero.
    #[serde(rename = "t")]
    pub t_stat: Option<f64>,
    pub s_sq: f64,
    #[serde(skip)]
    pub n_eff: usize,
    #[serde(skip)]
    pub sum_lag_sq: f64,
}

impl UnitRootStats {
    /// The t statistic, or `ZeroResidualVariance` if it is undefined.
    pub fn t(&self) -> Result<f64> {
        self.t_stat.ok_or(Error::ZeroResidualVariance)
    }
}

/// Compute `rho_hat`, `T = n(rho_hat - 1)`, `s^2` and `t` for a detrended vector.
pub fn unit_root_statistics(x: &[f64]) -> Result<UnitRootStats> {
    let m = x.len();
    if m < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            available: m,
        });
    }
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for w in x.windows(2) {
        sxx += w[0] * w[0];
        sxy += w[1] * w[0];
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let n = m - 1;
    let rho_hat = sxy / sxx;
    let ssr: f64 = x
        .windows(2)
        .map(|w| {
            let e = w[1] - rho_hat * w[0];
            e * e
        })
        .sum();
    let s_sq = ssr / (n - 2) as f64;
    let t_stat = if s_sq > ZERO_VARIANCE_RTOL * sxx / n as f64 {
        Some(sxx.sqrt() * (rho_hat - 1.0) / s_sq.sqrt())
    } else {
        None
    };
    Ok(UnitRootStats {
        rho_hat,
        coef_stat: n as f64 * (rho_hat - 1.0),
        t_stat,
        s_sq,
        n_eff: n,
        sum_lag_sq: sxx,
    })
}

/// OLS fit of `dx_t = pi_0 x_{t-1} + sum_i pi_i dx_{t-i} + u_t` without intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct AdfFit {
    pub k: usize,
    pub pi0: f64,
    pub pi: Vec<f64>,
    /// Residuals for `t = fit_start..=fit_end` (1-based).
    pub residuals: Vec<f64>,
    /// Mean squared residual over the fit range.
    pub sigma_sq: f64,
    pub fit_start: usize,
    pub fit_end: usize,
    /// `sum x_{t-1}^2` over the fit range.
    pub sum_lag_sq: f64,
}

/// Fit the ADF regression with `k` lagged differences over `t = fit_start..=m` (1-based).
pub fn adf_fit(x: &[f64], k: usize, fit_start: usize) -> Result<AdfFit> {
    let m = x.len();
    if fit_start < k + 2 {
        return Err(Error::InvalidConfig(format!(
            "fit start {fit_start} leaves lagged differences undefined for k = {k}"
        )));
    }
    let rows = (m + 1).saturating_sub(fit_start);
    if rows < k + 3 {
        return Err(Error::InsufficientData {
            needed: k + 3,
            available: rows,
        });
    }
    // value at 1-based index t
    let at = |t: usize| x[t - 1];
    let diff = |t: usize| at(t) - at(t - 1);
    let ts = fit_start..=m;
    let design = DMatrix::from_fn(rows, k + 1, |r, c| {
        let t = fit_start + r;
        if c == 0 {
            at(t - 1)
        } else {
            diff(t - c)
        }
    });
    let response: Vec<f64> = ts.clone().map(diff).collect();
    let projector = TrendProjector::from_design(design)?;
    let coefs = projector.coefficients(&response);
    let residuals = projector.residualize(&response);
    let sigma_sq = residuals.iter().map(|u| u * u).sum::<f64>() / rows as f64;
    let sum_lag_sq = ts.map(|t| at(t - 1).powi(2)).sum();
    Ok(AdfFit {
        k,
        pi0: coefs[0],
        pi: coefs[1..].to_vec(),
        residuals,
        sigma_sq,
        fit_start,
        fit_end: m,
        sum_lag_sq,
    })
}

/// Largest lag considered by MAIC for a series of `n` observations, `floor(12 (n/100)^{1/4})`.
pub fn max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// MAIC scores for every candidate lag and the minimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct MaicSelection {
    pub k_hat: usize,
    /// `scores[k]` is `None` when lag `k` was excluded (singular fit or zero variance).
    pub scores: Vec<Option<f64>>,
    pub k_max: usize,
}

/// Select the ADF lag order by the modified AIC over a common estimation sample.
///
/// All candidates are fitted on `t = k_max + 2..=m`, so `sigma_k^2` and the
/// penalty share the divisor `m - k_max - 1`. The rule-of-thumb `k_max` is
/// capped for short series so that the largest fit keeps `k_max + 3` rows.
pub fn maic_select(x: &[f64]) -> Result<MaicSelection> {
    let m = x.len();
    if m < 6 {
        return Err(Error::InsufficientData {
            needed: 6,
            available: m,
        });
    }
    let k_max = max_lag(m).min((m - 4) / 2);
    let fit_start = k_max + 2;
    let rows = (m - k_max - 1) as f64;
    let mut scores = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let score = match adf_fit(x, k, fit_start) {
            Ok(fit) if fit.sigma_sq > ZERO_VARIANCE_RTOL * fit.sum_lag_sq / rows => {
                let tau = fit.pi0 * fit.pi0 * fit.sum_lag_sq / fit.sigma_sq;
                Some(fit.sigma_sq.ln() + 2.0 * (tau + k as f64) / rows)
            }
            Ok(_) | Err(Error::RankDeficient { .. }) => None,
            Err(e) => return Err(e),
        };
        scores.push(score);
    }
    let k_hat = scores
        .iter()
        .enumerate()
        .filter_map(|(k, s)| s.map(|v| (k, v)))
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
        .ok_or(Error::DegenerateSigma)?;
    Ok(MaicSelection {
        k_hat,
        scores,
        k_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_series_is_exact_unit_root() {
        let s = unit_root_statistics(&[1.0; 5]).unwrap();
        assert_eq!(s.rho_hat, 1.0);
        assert_eq!(s.coef_stat, 0.0);
        assert_eq!(s.s_sq, 0.0);
        assert_eq!(s.t(), Err(Error::ZeroResidualVariance));
    }

    #[test]
    fn alternating_series() {
        let s = unit_root_statistics(&[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.rho_hat, 0.0);
        assert_eq!(s.coef_stat, -4.0);
        assert_eq!(s.n_eff, 4);
        // residuals equal x_t: 1, 0, 1, 0 -> s^2 = 2 / 2
        assert_relative_eq!(s.s_sq, 1.0);
        assert_relative_eq!(s.t().unwrap(), -(2.0f64).sqrt());
    }

    #[test]
    fn degenerate_lagged_series() {
        assert_eq!(
            unit_root_statistics(&[0.0, 0.0, 0.0, 0.0, 3.0]),
            Err(Error::DegenerateSeries)
        );
        assert!(matches!(
            unit_root_statistics(&[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn adf_one_regressor_closed_form() {
        // Three rows for k = 0, exactly the k + 3 minimum.
        let fit = adf_fit(&[1.0, 2.0, 3.0, 4.0], 0, 2).unwrap();
        assert_relative_eq!(fit.pi0, 6.0 / 14.0, epsilon = 1e-14);
        assert!(fit.pi.is_empty());
        assert_eq!(fit.residuals.len(), 3);
    }

    #[test]
    fn adf_constant_series() {
        let fit = adf_fit(&[2.5; 8], 0, 2).unwrap();
        assert_eq!(fit.pi0, 0.0);
        assert!(fit.residuals.iter().all(|&u| u == 0.0));
        assert_eq!(fit.sigma_sq, 0.0);
    }

    #[test]
    fn adf_preconditions() {
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        assert!(matches!(adf_fit(&x, 2, 3), Err(Error::InvalidConfig(_))));
        assert!(matches!(
            adf_fit(&x, 3, 6),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn max_lag_rule() {
        assert_eq!(max_lag(100), 12);
        assert_eq!(max_lag(400), 16);
    }

    #[test]
    fn maic_all_lags_degenerate() {
        let mut x = vec![0.0; 100];
        x[0] = 1.0;
        assert_eq!(maic_select(&x), Err(Error::DegenerateSigma));
    }

    #[test]
    fn maic_prefers_smaller_lag_on_ties() {
        // A pure random-walk-like deterministic sequence with irregular steps.
        let x: Vec<f64> = (0..120)
            .scan(0.0, |acc, i| {
                *acc += ((i * 7919) % 13) as f64 - 6.0;
                Some(*acc)
            })
            .collect();
        let sel = maic_select(&x).unwrap();
        assert_eq!(sel.scores.len(), sel.k_max + 1);
        let best = sel.scores[sel.k_hat].unwrap();
        for (k, s) in sel.scores.iter().enumerate() {
            if let Some(s) = s {
                assert!(*s >= best);
                if *s == best {
                    assert!(k >= sel.k_hat);
                }
            }
        }
    }

    fn walk(steps: &[f64]) -> Vec<f64> {
        steps
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e;
                Some(*acc)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn scale_invariance(steps in prop::collection::vec(-5.0f64..5.0, 20..120), a in 1e-3f64..1e3) {
            let x = walk(&steps);
            let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
            let s0 = unit_root_statistics(&x).unwrap();
            let s1 = unit_root_statistics(&scaled).unwrap();
            let close = |p: f64, q: f64| (p - q).abs() <= 1e-12 * p.abs().max(q.abs()).max(1e-300);
            prop_assert!(close(s0.rho_hat, s1.rho_hat));
            prop_assert!((s0.coef_stat - s1.coef_stat).abs() <= 1e-12 * s0.n_eff as f64 * s0.rho_hat.abs().max(1.0));
            prop_assert!((s0.t().unwrap() - s1.t().unwrap()).abs() <= 1e-10 * s0.t().unwrap().abs().max(1.0));
            prop_assert!((s1.s_sq - a * a * s0.s_sq).abs() <= 1e-10 * a * a * s0.s_sq);
            prop_assert_eq!(s0.coef_stat, s0.n_eff as f64 * (s0.rho_hat - 1.0));
        }

        #[test]
        fn adf_k0_matches_first_order_regression(steps in prop::collection::vec(-5.0f64..5.0, 20..120)) {
            let x = walk(&steps);
            let s = unit_root_statistics(&x).unwrap();
            let fit = adf_fit(&x, 0, 2).unwrap();
            prop_assert!((fit.pi0 - (s.rho_hat - 1.0)).abs() <= 1e-12 * s.rho_hat.abs().max(1.0));
        }

        #[test]
        fn adf_residuals_orthogonal(steps in prop::collection::vec(-5.0f64..5.0, 40..120), k in 0usize..6) {
            let x = walk(&steps);
            let start = k + 2;
            let fit = adf_fit(&x, k, start).unwrap();
            let res_norm = fit.residuals.iter().map(|u| u * u).sum::<f64>().sqrt();
            let columns: Vec<Vec<f64>> = (0..=k)
                .map(|c| (start..=x.len()).map(|t| if c == 0 { x[t - 2] } else { x[t - c - 1] - x[t - c - 2] }).collect())
                .collect();
            for col in columns {
                let cn = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                let ip: f64 = col.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
                prop_assert!(ip.abs() <= 1e-8 * cn * res_norm + 1e-12);
            }
        }
    }
}
