use proptest::prelude::*;
use urtest_core::bootstrap::{cumulate, run_bootstrap_with_source, ConstantMultipliers};
use urtest_core::rng::StreamKey;
use urtest_core::series::build_trend_matrix;
use urtest_core::{
    ols_detrend, p_value, run_bootstrap, simulate_series, unit_root_statistics, Bandwidth, BootstrapConfig, DgpSpec,
    Method, ObservedSeries, TrendSpec,
};

fn simulated(id: &str, n: usize, seed: u64) -> ObservedSeries {
    let spec = DgpSpec::new(id.parse().unwrap(), n, 0.0).unwrap();
    simulate_series(&spec, &mut StreamKey::root(seed).rng()).unwrap()
}

fn with_trend(series: &ObservedSeries, trend: TrendSpec) -> ObservedSeries {
    ObservedSeries::new(series.values().to_vec(), trend).unwrap()
}

#[test]
fn unit_multipliers_rebuild_residual_partial_sums() {
    let series = simulated("MA_1_1", 120, 1);
    let x = ols_detrend(&series).unwrap().x;
    let rho = unit_root_statistics(&x).unwrap().rho_hat;
    let u_hat: Vec<f64> = (1..x.len()).map(|t| x[t] - rho * x[t - 1]).collect();
    let mut partial = Vec::new();
    let mut acc = 0.0;
    for u in &u_hat {
        acc += u;
        partial.push(acc);
    }
    assert_eq!(cumulate(&u_hat), partial);

    let config = BootstrapConfig::new(Method::Dwb, 25, 3);
    let res = run_bootstrap_with_source(&series, &config, &ConstantMultipliers(1.0)).unwrap();
    let expected = unit_root_statistics(&partial).unwrap();
    assert!(res.coef_star.iter().all(|&v| v == expected.coef_stat));
    assert!(res.t_star.iter().all(|&v| v == expected.t_stat.unwrap()));
    let diffs: Vec<f64> = std::iter::once(partial[0]).chain(partial.windows(2).map(|w| w[1] - w[0])).collect();
    for (d, u) in diffs.iter().zip(&u_hat) {
        assert!((d - u).abs() <= 1e-12 * u.abs().max(1.0));
    }
}

#[test]
fn rwb_equals_rdwb_with_unit_bandwidth() {
    for (id, seed) in [("AR_1_1", 4), ("MA_2_1", 5), ("MA_6_3", 6)] {
        let series = with_trend(&simulated(id, 100, seed), TrendSpec::Constant);
        let rwb = run_bootstrap(&series, &BootstrapConfig::new(Method::Rwb, 99, 11)).unwrap();
        let rdwb = run_bootstrap(
            &series,
            &BootstrapConfig::new(Method::Rdwb, 99, 11).with_bandwidth(Bandwidth::Fixed(1)),
        )
        .unwrap();
        assert_eq!(rwb.coef_star, rdwb.coef_star);
        assert_eq!(rwb.t_star, rdwb.t_star);
        assert_eq!((rwb.p_coef, rwb.p_t, rwb.k_hat), (rdwb.p_coef, rdwb.p_t, rdwb.k_hat));
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let series = simulated("MA_4_1", 100, 7);
    let run = |threads: usize, method: Method| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_bootstrap(&series, &BootstrapConfig::new(method, 199, 99)).unwrap())
    };
    for method in [Method::Dwb, Method::Rwb, Method::Rdwb] {
        assert_eq!(run(1, method), run(6, method));
        assert_eq!(run(3, method), run(3, method));
    }
}

#[test]
fn seeds_matter() {
    let series = simulated("MA_1_1", 100, 8);
    let a = run_bootstrap(&series, &BootstrapConfig::new(Method::Rdwb, 99, 1)).unwrap();
    let b = run_bootstrap(&series, &BootstrapConfig::new(Method::Rdwb, 99, 2)).unwrap();
    assert_ne!(a.coef_star, b.coef_star);
}

#[test]
fn fixed_bandwidth_bounds() {
    let series = simulated("MA_1_1", 30, 9);
    let ok = BootstrapConfig::new(Method::Dwb, 19, 1).with_bandwidth(Bandwidth::Fixed(28));
    assert_eq!(run_bootstrap(&series, &ok).unwrap().l_used, 28);
    let too_wide = ok.with_bandwidth(Bandwidth::Fixed(29));
    assert!(run_bootstrap(&series, &too_wide).is_err());
}

proptest! {
    #[test]
    fn left_tail_counts_add_up(stars in prop::collection::vec(-50.0f64..50.0, 1..400), observed in -60.0f64..60.0) {
        let above = stars.iter().filter(|&&s| s >= observed).count() as f64 / stars.len() as f64;
        prop_assert_eq!(p_value(&stars, observed) + above, 1.0);
    }

    #[test]
    fn statistics_ignore_added_trends(
        steps in prop::collection::vec(-3.0f64..3.0, 30..150),
        beta in prop::collection::vec(-10.0f64..10.0, 3),
        which in 0usize..3,
    ) {
        let trend = [TrendSpec::Constant, TrendSpec::Linear, TrendSpec::Polynomial(2)][which];
        let y: Vec<f64> = steps.iter().scan(0.0, |a, e| { *a += e; Some(*a) }).collect();
        let z = build_trend_matrix(trend, y.len());
        let shifted: Vec<f64> = (0..y.len())
            .map(|t| y[t] + (0..z.ncols()).map(|j| z[(t, j)] * beta[j]).sum::<f64>())
            .collect();
        let base = unit_root_statistics(&ols_detrend(&ObservedSeries::new(y, trend).unwrap()).unwrap().x).unwrap();
        let moved = unit_root_statistics(&ols_detrend(&ObservedSeries::new(shifted, trend).unwrap()).unwrap().x).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        prop_assert!(rel(base.rho_hat, moved.rho_hat) < 1e-10);
        prop_assert!(rel(base.coef_stat, moved.coef_stat) < 1e-10);
        prop_assert!(rel(base.t_stat.unwrap(), moved.t_stat.unwrap()) < 1e-10);
    }
}
