use urtest_core::montecarlo::calibrate_level;
use urtest_core::rng::{label, StreamKey};
use urtest_core::{
    run_bootstrap, run_size_experiment, simulate_series, size_corrected_power, BootstrapConfig, BootstrapResult, DgpSpec,
    ExperimentSpec, Method, Statistic,
};

fn spec(json: &str) -> ExperimentSpec {
    ExperimentSpec::from_json(json).unwrap()
}

const TWO_DGPS: &str = r#"{"dgps":[{"model":"MA","phi":1,"omega":1,"n":50},{"model":"AR","phi":3,"omega":2,"n":60}],
    "c_grid":[0,-15],"methods":["dwb","rdwb"],"N":30,"B":39,"alpha":0.1,"seed":21}"#;

#[test]
fn tables_are_reproducible_across_thread_counts() {
    let s = spec(TWO_DGPS);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (run_size_experiment(&s).unwrap(), size_corrected_power(&s).unwrap()))
    };
    assert_eq!(run(1), run(5));
}

#[test]
fn cells_do_not_depend_on_other_cells() {
    let full = spec(TWO_DGPS);
    let mut single = full.clone();
    single.dgps.remove(0);
    single.methods.reverse();
    let a = size_corrected_power(&full).unwrap();
    let b = size_corrected_power(&single).unwrap();
    for row in &b.rows {
        let twin = a.get(row.process, row.n, &row.method, row.statistic, row.c).unwrap();
        assert_eq!(twin, row);
    }
    assert_eq!(b.rows.len(), a.rows.len() / 2);
}

#[test]
fn size_rows_share_null_replications_with_power() {
    let s = spec(TWO_DGPS);
    let sizes = run_size_experiment(&s).unwrap();
    let power = size_corrected_power(&s).unwrap();
    for row in &sizes.rows {
        assert_eq!(power.get(row.process, row.n, &row.method, row.statistic, 0.0).unwrap(), row);
    }
    assert!(power.rows.iter().all(|r| (0.0..=1.0).contains(&r.rate)));
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn nth(sorted: &[f64], level: f64) -> Option<f64> {
    let rank = (level * sorted.len() as f64).ceil() as usize;
    (rank > 0).then(|| sorted[rank.min(sorted.len()) - 1])
}

/// Replays every replication from its documented stream keys and redoes the
/// level calibration by sorting.
#[test]
fn calibration_matches_replayed_replications() {
    let s = spec(
        r#"{"dgps":[{"model":"MA","phi":1,"omega":1,"n":60}],"c_grid":[0,-10],
            "methods":["rdwb"],"N":60,"B":49,"alpha":0.1,"seed":13}"#,
    );
    let table = size_corrected_power(&s).unwrap();
    let process = s.dgps[0].process;
    let replay = |c: f64| -> Vec<BootstrapResult> {
        let cell = |role: &str| {
            StreamKey::root(s.seed).child(label(role)).child(label(&process.to_string())).child(60).child(c.to_bits())
        };
        (0..s.replications as u64)
            .map(|r| {
                let series = simulate_series(&DgpSpec::new(process, 60, c).unwrap(), &mut cell("data").child(r).rng()).unwrap();
                let seed = cell("multipliers").child(label("RDWB")).child(r).value();
                run_bootstrap(&series, &BootstrapConfig::new(Method::Rdwb, 49, seed)).unwrap()
            })
            .collect()
    };
    let null = replay(0.0);
    let alt = replay(-10.0);
    for stat in Statistic::BOTH {
        let observed: Vec<f64> = null.iter().map(|r| r.observed_value(stat)).collect();
        let critical = nth(&sorted(&observed), 0.1).unwrap();
        let levels: Vec<f64> =
            null.iter().map(|r| r.stars(stat).iter().filter(|&&v| v < critical).count() as f64 / 49.0).collect();
        let alpha_c = levels.iter().sum::<f64>() / levels.len() as f64;
        let rejects = |r: &BootstrapResult| nth(&sorted(r.stars(stat)), alpha_c).is_some_and(|q| r.observed_value(stat) < q);
        let cal = table.metadata.calibrations.iter().find(|c| c.statistic == stat).unwrap();
        assert_eq!(cal.critical_value, critical);
        assert!((cal.alpha_c - alpha_c).abs() < 1e-15);
        assert_eq!(cal.corrected_null_rate, null.iter().filter(|r| rejects(r)).count() as f64 / 60.0);
        let power = table.rows.iter().find(|r| r.statistic == stat && r.c == -10.0).unwrap();
        assert_eq!(power.rate, alt.iter().filter(|r| rejects(r)).count() as f64 / 60.0);
        let size = table.rows.iter().find(|r| r.statistic == stat && r.c == 0.0).unwrap();
        assert_eq!(size.rate, null.iter().filter(|r| r.p_value(stat) <= 0.1).count() as f64 / 60.0);
    }
}

#[test]
fn single_draw_levels_are_indicators() {
    let observed = [-3.0, -1.0, 0.5, 2.0];
    let stars: Vec<Vec<f64>> = vec![vec![-4.0], vec![0.0], vec![-3.5], vec![1.0]];
    let refs: Vec<&[f64]> = stars.iter().map(Vec::as_slice).collect();
    let cal = calibrate_level(&observed, &refs, 0.25).unwrap();
    assert_eq!(cal.critical_value, -3.0);
    assert_eq!(cal.levels, vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(cal.alpha_c, 0.5);

    let s = spec(
        r#"{"dgps":[{"model":"MA","phi":1,"omega":1,"n":40}],"c_grid":[0,-20],
            "methods":["rdwb"],"N":40,"B":1,"alpha":0.1,"seed":2}"#,
    );
    let table = size_corrected_power(&s).unwrap();
    for cal in &table.metadata.calibrations {
        let scaled = cal.alpha_c * 40.0;
        assert!((scaled - scaled.round()).abs() < 1e-9, "alpha_c {} is not a mean of indicators", cal.alpha_c);
    }
    assert_eq!(table.rows.iter().filter(|r| r.statistic == Statistic::T).count(), 2);
}

#[test]
fn uncorrectable_level_never_rejects() {
    // DWB on a strongly negative MA is distorted enough that no bootstrap draw
    // reaches the null critical value
    let s = spec(
        r#"{"dgps":[{"model":"MA","phi":2,"omega":1,"n":60}],"c_grid":[0,-10],
            "methods":["dwb"],"N":200,"B":49,"alpha":0.05,"seed":4}"#,
    );
    let table = size_corrected_power(&s).unwrap();
    for cal in table.metadata.calibrations.iter().filter(|c| c.alpha_c == 0.0) {
        assert_eq!(cal.corrected_null_rate, 0.0);
        let row = table.rows.iter().find(|r| r.statistic == cal.statistic && r.c == -10.0).unwrap();
        assert_eq!(row.rate, 0.0);
    }
}
