//! Monte Carlo experiments: empirical size tables and size-corrected power.
//!
//! Every replication draws its data from a stream keyed by the cell
//! (process, n, c) and the replication index, and its multipliers from a
//! stream that additionally includes the method label. Results are therefore
//! independent of thread count, cell ordering and which other cells are run.

use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    bootstrap_quantile, order_statistic, run_bootstrap, Bandwidth, BootstrapConfig, BootstrapResult, Kernel, Method,
    Statistic,
};
use crate::dgp::{simulate_series, DgpSpec, ErrorModel, OmegaSpec, PhiSpec, ProcessId};
use crate::error::{Error, Result};
use crate::rng::{label, StreamKey};

/// Share of failed replications above which a cell is flagged.
pub const FLAG_FAILURE_RATE: f64 = 0.01;

/// A simulation design without its local alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DgpTemplate {
    pub process: ProcessId,
    pub n: usize,
}

impl DgpTemplate {
    pub fn at(&self, c: f64) -> DgpSpec {
        DgpSpec {
            process: self.process,
            n: self.n,
            c,
        }
    }
}

/// One bootstrap variant in an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec {
            method,
            bandwidth: Bandwidth::DeterministicRule,
            kernel: Kernel::Bartlett,
        }
    }

    pub fn config(&self, replications: usize, seed: u64) -> BootstrapConfig {
        BootstrapConfig::new(self.method, replications, seed)
            .with_bandwidth(self.bandwidth)
            .with_kernel(self.kernel)
    }

    /// Name used in tables: `RDWB`, or e.g. `RDWB[l=4;parzen]` for non-default settings.
    pub fn label(&self) -> String {
        let mut extras = Vec::new();
        match self.bandwidth {
            Bandwidth::DeterministicRule => {}
            Bandwidth::Fixed(l) => extras.push(format!("l={l}")),
            Bandwidth::MinimumVolatility => extras.push("l=mv".to_string()),
        }
        if self.kernel != Kernel::Bartlett {
            extras.push(self.kernel.to_string());
        }
        if extras.is_empty() {
            self.method.name().to_string()
        } else {
            format!("{}[{}]", self.method.name(), extras.join(";"))
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A Monte Carlo study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dgps: Vec<DgpTemplate>,
    pub c_grid: Vec<f64>,
    pub methods: Vec<MethodSpec>,
    /// Monte Carlo replications `N`.
    pub replications: usize,
    /// Bootstrap replications `B`.
    pub bootstrap_replications: usize,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    dgps: Vec<RawDgp>,
    #[serde(default = "default_c_grid")]
    c_grid: Vec<f64>,
    methods: Vec<RawMethod>,
    #[serde(rename = "N")]
    n_reps: usize,
    #[serde(rename = "B")]
    b_reps: usize,
    alpha: f64,
    seed: u64,
}

fn default_c_grid() -> Vec<f64> {
    vec![0.0]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDgp {
    model: ErrorModel,
    phi: PhiSpec,
    omega: OmegaSpec,
    n: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawMethod {
    Name(String),
    Full {
        method: String,
        #[serde(default)]
        l: Option<RawBandwidth>,
        #[serde(default)]
        kernel: Option<String>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawBandwidth {
    Fixed(usize),
    Named(String),
}

/// Parse a bandwidth flag: `auto`, `mv` or a positive integer.
pub fn parse_bandwidth(s: &str) -> Result<Bandwidth> {
    match s.trim().to_ascii_lowercase().as_str() {
        "auto" => Ok(Bandwidth::DeterministicRule),
        "mv" => Ok(Bandwidth::MinimumVolatility),
        other => match other.parse::<usize>() {
            Ok(l) if l >= 1 => Ok(Bandwidth::Fixed(l)),
            _ => Err(Error::InvalidConfig(format!("bandwidth '{s}' is not auto, mv or a positive integer"))),
        },
    }
}

impl RawMethod {
    fn resolve(self) -> Result<MethodSpec> {
        match self {
            RawMethod::Name(name) => Ok(MethodSpec::new(name.parse()?)),
            RawMethod::Full { method, l, kernel } => {
                let mut spec = MethodSpec::new(method.parse()?);
                spec.bandwidth = match l {
                    None => Bandwidth::DeterministicRule,
                    Some(RawBandwidth::Fixed(l)) => parse_bandwidth(&l.to_string())?,
                    Some(RawBandwidth::Named(s)) => parse_bandwidth(&s)?,
                };
                if let Some(k) = kernel {
                    spec.kernel = k.parse()?;
                }
                Ok(spec)
            }
        }
    }
}

impl ExperimentSpec {
    /// Parse and validate a JSON experiment description.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawExperiment =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("experiment config: {e}")))?;
        let spec = ExperimentSpec {
            dgps: raw
                .dgps
                .into_iter()
                .map(|d| DgpTemplate {
                    process: ProcessId {
                        model: d.model,
                        phi: d.phi,
                        omega: d.omega,
                    },
                    n: d.n,
                })
                .collect(),
            c_grid: raw.c_grid,
            methods: raw.methods.into_iter().map(RawMethod::resolve).collect::<Result<_>>()?,
            replications: raw.n_reps,
            bootstrap_replications: raw.b_reps,
            alpha: raw.alpha,
            seed: raw.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dgps.is_empty() {
            return bad("at least one dgp is required".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.c_grid.is_empty() {
            return bad("c_grid must not be empty".into());
        }
        if self.replications == 0 {
            return bad("N must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        for &c in &self.c_grid {
            if !c.is_finite() {
                return bad(format!("c = {c} is not finite"));
            }
        }
        for d in &self.dgps {
            for &c in &self.c_grid {
                d.at(c).validate()?;
            }
        }
        let mut labels: Vec<String> = self.methods.iter().map(MethodSpec::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("methods must be distinct".into());
        }
        for m in &self.methods {
            m.config(self.bootstrap_replications, self.seed).validate()?;
        }
        Ok(())
    }

    pub fn has_alternatives(&self) -> bool {
        self.c_grid.iter().any(|&c| c < 0.0)
    }
}

/// One rejection rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub process: ProcessId,
    pub n: usize,
    pub method: String,
    pub statistic: Statistic,
    pub c: f64,
    pub rate: f64,
    /// Replications that produced no test decision.
    pub failures: usize,
}

/// Level calibration of one (dgp, method, statistic) for size-corrected power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub dgp: String,
    pub n: usize,
    pub method: String,
    pub statistic: Statistic,
    pub critical_value: f64,
    pub alpha_c: f64,
    /// Null rejection rate when testing at `alpha_c`.
    pub corrected_null_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    #[serde(rename = "N")]
    pub replications: usize,
    #[serde(rename = "B")]
    pub bootstrap_replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub size_corrected: bool,
    /// Cells whose failure count reached 1% of `N`.
    pub flagged: Vec<String>,
    #[serde(default)]
    pub calibrations: Vec<Calibration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
    pub metadata: TableMetadata,
}

const CSV_HEADER: [&str; 9] = ["model", "phi", "omega", "n", "method", "statistic", "c", "rate", "failures"];

impl RejectionTable {
    pub fn get(&self, process: ProcessId, n: usize, method: &str, statistic: Statistic, c: f64) -> Option<&RejectionRow> {
        self.rows
            .iter()
            .find(|r| r.process == process && r.n == n && r.method == method && r.statistic == statistic && r.c == c)
    }

    /// Write rows as CSV with columns `model,phi,omega,n,method,statistic,c,rate,failures`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let io = |e: csv::Error| Error::InvalidConfig(format!("writing table: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            let model = match r.process.model {
                ErrorModel::MA => "MA",
                ErrorModel::AR => "AR",
            };
            w.write_record([
                model.to_string(),
                r.process.phi.index().to_string(),
                r.process.omega.index().to_string(),
                r.n.to_string(),
                r.method.clone(),
                r.statistic.symbol().to_string(),
                r.c.to_string(),
                r.rate.to_string(),
                r.failures.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(format!("writing table: {e}")))?;
        Ok(())
    }

    pub fn write_metadata<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.metadata)
            .map_err(|e| Error::InvalidConfig(format!("writing metadata: {e}")))
    }

    /// Read a table back from its CSV and metadata sidecar.
    pub fn read<R1: Read, R2: Read>(csv_reader: R1, metadata_reader: R2) -> Result<Self> {
        let rows = read_rejection_csv(csv_reader)?;
        let metadata = serde_json::from_reader(metadata_reader)
            .map_err(|e| Error::InvalidConfig(format!("reading metadata: {e}")))?;
        Ok(RejectionTable { rows, metadata })
    }
}

/// Parse the CSV written by [`RejectionTable::write_csv`].
pub fn read_rejection_csv<R: Read>(reader: R) -> Result<Vec<RejectionRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::InvalidConfig(format!("reading table: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidConfig(format!("unexpected table header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let bad = |what: &str| Error::InvalidConfig(format!("table line {line}: bad {what}"));
        let rec = rec.map_err(|e| Error::InvalidConfig(format!("table line {line}: {e}")))?;
        let field = |j: usize| rec.get(j).ok_or_else(|| bad(CSV_HEADER[j]));
        let process: ProcessId = format!("{}_{}_{}", field(0)?, field(1)?, field(2)?).parse()?;
        rows.push(RejectionRow {
            process,
            n: field(3)?.parse().map_err(|_| bad("n"))?,
            method: field(4)?.to_string(),
            statistic: field(5)?.parse()?,
            c: field(6)?.parse().map_err(|_| bad("c"))?,
            rate: field(7)?.parse().map_err(|_| bad("rate"))?,
            failures: field(8)?.parse().map_err(|_| bad("failures"))?,
        });
    }
    Ok(rows)
}

/// The `ceil(alpha N)`-th order statistic of simulated null statistics.
pub fn infeasible_critical_value(null_stats: &[f64], alpha: f64) -> Result<f64> {
    if null_stats.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    let mut sorted = null_stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(order_statistic(&sorted, alpha))
}

/// Effective bootstrap level that makes the test exact on simulated nulls.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCalibration {
    pub critical_value: f64,
    /// Per-replication `#{b : stat*_b < critical_value} / B`.
    pub levels: Vec<f64>,
    pub alpha_c: f64,
}

/// Calibrate the bootstrap level from null statistics and their bootstrap draws.
pub fn calibrate_level(null_observed: &[f64], null_stars: &[&[f64]], alpha: f64) -> Result<LevelCalibration> {
    if null_observed.len() != null_stars.len() {
        return Err(Error::InvalidConfig("observed statistics and bootstrap samples differ in count".into()));
    }
    let critical_value = infeasible_critical_value(null_observed, alpha)?;
    let levels: Vec<f64> = null_stars
        .iter()
        .map(|s| s.iter().filter(|&&v| v < critical_value).count() as f64 / s.len() as f64)
        .collect();
    let alpha_c = levels.iter().sum::<f64>() / levels.len() as f64;
    Ok(LevelCalibration {
        critical_value,
        levels,
        alpha_c,
    })
}

/// `observed < ` the `level` bootstrap quantile. A zero level never rejects,
/// since the empirical quantile at 0 is minus infinity.
fn rejects_below(observed: f64, stars: &[f64], level: f64) -> bool {
    level * stars.len() as f64 > 0.0 && observed < bootstrap_quantile(stars, level)
}

fn cell_key(root: StreamKey, dgp: &DgpSpec) -> StreamKey {
    // -0.0 and 0.0 are the same cell
    let c = if dgp.c == 0.0 { 0.0f64 } else { dgp.c };
    root.child(label(&dgp.process.to_string())).child(dgp.n as u64).child(c.to_bits())
}

/// Per-replication summary kept by a cell run.
struct Rep {
    observed: [f64; 2],
    p: [f64; 2],
    stars: Option<[Vec<f64>; 2]>,
}

fn stat_index(s: Statistic) -> usize {
    match s {
        Statistic::Coef => 0,
        Statistic::T => 1,
    }
}

/// Run `N` replications of one (dgp, method) cell. `None` marks a failed replication.
fn run_cell(spec: &ExperimentSpec, dgp: &DgpSpec, method: &MethodSpec, keep_stars: bool) -> Result<Vec<Option<Rep>>> {
    let root = StreamKey::root(spec.seed);
    let data_key = cell_key(root.child(label("data")), dgp);
    let mult_key = cell_key(root.child(label("multipliers")), dgp).child(label(&method.label()));
    log::info!("cell {} n={} c={} {}", dgp.process, dgp.n, dgp.c, method);
    (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = data_key.child(rep as u64).rng();
            let series = simulate_series(dgp, &mut rng)?;
            let config = method.config(spec.bootstrap_replications, mult_key.child(rep as u64).value());
            match run_bootstrap(&series, &config) {
                Ok(res) => Ok(Some(summarize(res, keep_stars))),
                Err(e @ Error::InvalidConfig(_)) => Err(e),
                Err(e) => {
                    log::debug!("replication {rep} of {} failed: {e}", dgp.process);
                    Ok(None)
                }
            }
        })
        .collect()
}

fn summarize(res: BootstrapResult, keep_stars: bool) -> Rep {
    let observed = [res.observed_value(Statistic::Coef), res.observed_value(Statistic::T)];
    let p = [res.p_coef, res.p_t];
    let stars = keep_stars.then_some([res.coef_star, res.t_star]);
    Rep { observed, p, stars }
}

fn cell_name(dgp: &DgpSpec, method: &MethodSpec) -> String {
    format!("{}/n={}/c={}/{}", dgp.process, dgp.n, dgp.c, method)
}

fn metadata(spec: &ExperimentSpec, size_corrected: bool) -> TableMetadata {
    TableMetadata {
        replications: spec.replications,
        bootstrap_replications: spec.bootstrap_replications,
        alpha: spec.alpha,
        seed: spec.seed,
        size_corrected,
        flagged: Vec::new(),
        calibrations: Vec::new(),
    }
}

fn note_failures(meta: &mut TableMetadata, spec: &ExperimentSpec, dgp: &DgpSpec, method: &MethodSpec, failures: usize) {
    if failures as f64 >= FLAG_FAILURE_RATE * spec.replications as f64 && failures > 0 {
        log::warn!("{}: {failures} of {} replications failed", cell_name(dgp, method), spec.replications);
        meta.flagged.push(cell_name(dgp, method));
    }
}

fn size_rows(spec: &ExperimentSpec, dgp: &DgpSpec, method: &MethodSpec, reps: &[Option<Rep>]) -> Vec<RejectionRow> {
    let failures = reps.iter().filter(|r| r.is_none()).count();
    Statistic::BOTH
        .iter()
        .map(|&s| {
            let i = stat_index(s);
            let rejections = reps.iter().flatten().filter(|r| r.p[i] <= spec.alpha).count();
            RejectionRow {
                process: dgp.process,
                n: dgp.n,
                method: method.label(),
                statistic: s,
                c: 0.0,
                rate: rejections as f64 / spec.replications as f64,
                failures,
            }
        })
        .collect()
}

/// Empirical size of every (dgp, method) under the unit root null, for `T` and `t`.
pub fn run_size_experiment(spec: &ExperimentSpec) -> Result<RejectionTable> {
    spec.validate()?;
    let mut meta = metadata(spec, false);
    let mut rows = Vec::new();
    for template in &spec.dgps {
        let dgp = template.at(0.0);
        for method in &spec.methods {
            let reps = run_cell(spec, &dgp, method, false)?;
            let cell = size_rows(spec, &dgp, method, &reps);
            note_failures(&mut meta, spec, &dgp, method, cell[0].failures);
            rows.extend(cell);
        }
    }
    Ok(RejectionTable { rows, metadata: meta })
}

/// Raw sizes at `c = 0` and size-corrected power at each `c < 0`.
///
/// The null replications calibrate an effective level `alpha_c` per
/// (dgp, method, statistic); alternatives reject when the observed statistic
/// falls below the `alpha_c` bootstrap quantile.
pub fn size_corrected_power(spec: &ExperimentSpec) -> Result<RejectionTable> {
    spec.validate()?;
    if !spec.c_grid.contains(&0.0) || !spec.has_alternatives() {
        return Err(Error::InvalidConfig("size-corrected power needs c = 0 and at least one c < 0 in c_grid".into()));
    }
    let mut meta = metadata(spec, true);
    let mut rows = Vec::new();
    for template in &spec.dgps {
        for method in &spec.methods {
            let null = template.at(0.0);
            let null_reps = run_cell(spec, &null, method, true)?;
            let sizes = size_rows(spec, &null, method, &null_reps);
            note_failures(&mut meta, spec, &null, method, sizes[0].failures);

            let mut alpha_c = [0.0; 2];
            for s in Statistic::BOTH {
                let i = stat_index(s);
                let ok: Vec<&Rep> = null_reps.iter().flatten().collect();
                let observed: Vec<f64> = ok.iter().map(|r| r.observed[i]).collect();
                let stars: Vec<&[f64]> = ok.iter().map(|r| r.stars.as_ref().expect("stars kept")[i].as_slice()).collect();
                let cal = calibrate_level(&observed, &stars, spec.alpha)?;
                let corrected = ok
                    .iter()
                    .zip(&stars)
                    .filter(|(r, st)| rejects_below(r.observed[i], st, cal.alpha_c))
                    .count();
                if cal.alpha_c == 0.0 {
                    log::warn!(
                        "{} {s}: no bootstrap draw falls below the null critical value; corrected test never rejects",
                        cell_name(&null, method)
                    );
                }
                alpha_c[i] = cal.alpha_c;
                meta.calibrations.push(Calibration {
                    dgp: template.process.to_string(),
                    n: template.n,
                    method: method.label(),
                    statistic: s,
                    critical_value: cal.critical_value,
                    alpha_c: cal.alpha_c,
                    corrected_null_rate: corrected as f64 / spec.replications as f64,
                });
            }
            drop(null_reps);

            let mut by_c: Vec<Vec<RejectionRow>> = Vec::new();
            for &c in &spec.c_grid {
                if c == 0.0 {
                    by_c.push(sizes.clone());
                    continue;
                }
                let dgp = template.at(c);
                let reps = run_cell(spec, &dgp, method, true)?;
                let failures = reps.iter().filter(|r| r.is_none()).count();
                note_failures(&mut meta, spec, &dgp, method, failures);
                by_c.push(
                    Statistic::BOTH
                        .iter()
                        .map(|&s| {
                            let i = stat_index(s);
                            let rejections = reps
                                .iter()
                                .flatten()
                                .filter(|r| {
                                    let stars = &r.stars.as_ref().expect("stars kept")[i];
                                    rejects_below(r.observed[i], stars, alpha_c[i])
                                })
                                .count();
                            RejectionRow {
                                process: template.process,
                                n: template.n,
                                method: method.label(),
                                statistic: s,
                                c,
                                rate: rejections as f64 / spec.replications as f64,
                                failures,
                            }
                        })
                        .collect(),
                );
            }
            // statistic-major, then c in grid order
            for i in 0..2 {
                rows.extend(by_c.iter().map(|cell| cell[i].clone()));
            }
        }
    }
    Ok(RejectionTable { rows, metadata: meta })
}
