//! Minimum-volatility bandwidth selection.
//!
//! Each candidate bandwidth is run with the same seed, and the candidate
//! whose bootstrap distribution moves least (in Kolmogorov-Smirnov distance)
//! when stepping to the next candidate wins.

use log::warn;

use super::{prepare, run_prepared, BootstrapConfig, Statistic};
use crate::error::{Error, Result};
use crate::series::ObservedSeries;
use crate::stats::max_lag;

/// Outcome of a minimum-volatility search.
#[derive(Debug, Clone, PartialEq)]
pub struct MvSelection {
    pub l_selected: usize,
    /// Candidates whose bootstrap run succeeded, in input order.
    pub candidates: Vec<usize>,
    /// `distances[i]` is the KS distance between candidates `i` and `i + 1`.
    pub distances: Vec<f64>,
    /// Candidates dropped because their run failed, with the reason.
    pub dropped: Vec<(usize, String)>,
}

/// Default candidates `1..=floor(12 (n/100)^{1/4}) + 1`.
pub fn default_mv_candidates(n: usize) -> Vec<usize> {
    (1..=max_lag(n) + 1).collect()
}

/// Two-sample Kolmogorov-Smirnov distance `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS distance needs two nonempty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Pick the bandwidth among `candidates` whose bootstrap law is most stable.
///
/// The configured method, kernel, replication count and seed are reused for
/// every candidate; only the bandwidth changes. Candidates must be
/// nondecreasing and lie in `[1, n - 1]`.
pub fn mv_select_bandwidth(
    series: &ObservedSeries,
    config: &BootstrapConfig,
    candidates: &[usize],
    statistic: Statistic,
) -> Result<MvSelection> {
    let n = series.len();
    if config.method == super::Method::Rwb {
        return Err(Error::InvalidConfig(
            "RWB fixes l = 1; bandwidth selection applies to DWB and RDWB".into(),
        ));
    }
    if candidates.len() < 2 {
        return Err(Error::InvalidConfig("minimum volatility needs at least two candidates".into()));
    }
    if candidates.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("candidate bandwidths must be nondecreasing".into()));
    }
    if candidates.iter().any(|&l| l == 0 || l >= n) {
        return Err(Error::InvalidConfig(format!(
            "candidate bandwidths must lie in [1, {}]",
            n - 1
        )));
    }
    let mut fixed = *config;
    fixed.validate()?;
    let prep = prepare(series, config.method)?;

    let mut survivors = Vec::with_capacity(candidates.len());
    let mut samples = Vec::with_capacity(candidates.len());
    let mut dropped = Vec::new();
    for &l in candidates {
        fixed.bandwidth = super::Bandwidth::Fixed(l);
        match run_prepared(&prep, &fixed, l, None) {
            Ok(result) => {
                survivors.push(l);
                samples.push(result.stars(statistic).to_vec());
            }
            Err(e) => {
                warn!("bandwidth candidate {l} dropped: {e}");
                dropped.push((l, e.to_string()));
            }
        }
    }
    if survivors.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "only {} candidate bandwidth(s) produced a bootstrap distribution",
            survivors.len()
        )));
    }
    let distances: Vec<f64> = samples.windows(2).map(|w| ks_distance(&w[0], &w[1])).collect();
    let best = distances
        .iter()
        .enumerate()
        .fold(0, |best, (i, d)| if *d < distances[best] { i } else { best });
    Ok(MvSelection {
        l_selected: survivors[best],
        candidates: survivors,
        distances,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_point_masses() {
        assert_eq!(ks_distance(&[0.0, 0.0], &[1.0]), 1.0);
    }

    #[test]
    fn shifted_ladders() {
        let d = ks_distance(&[1.0, 2.0, 3.0], &[1.5, 2.5, 3.5]);
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identical_samples() {
        assert_eq!(ks_distance(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn default_candidate_ranges() {
        assert_eq!(default_mv_candidates(100), (1..=13).collect::<Vec<_>>());
        assert_eq!(default_mv_candidates(400), (1..=17).collect::<Vec<_>>());
    }
}
