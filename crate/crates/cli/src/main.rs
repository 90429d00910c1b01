use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use urtest_core::bootstrap::{default_mv_candidates, mv_select_bandwidth};
use urtest_core::montecarlo::parse_bandwidth;
use urtest_core::{
    read_series_csv, run_bootstrap, run_size_experiment, size_corrected_power, BootstrapConfig, Error, ExperimentSpec,
    Kernel, Method, ObservedSeries, RejectionTable, Statistic, TrendSpec,
};

const MIN_OBSERVATIONS: usize = 20;

#[derive(Parser)]
#[command(name = "urtest", version, about = "Bootstrap unit root tests and simulation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a single-column CSV series for a unit root.
    Test(TestArgs),
    /// Run a size (and optionally size-corrected power) study from a JSON config.
    Simulate(SimArgs),
    /// Select the multiplier bandwidth by minimum volatility.
    Mv(MvArgs),
    /// Size-corrected power curves from a JSON config.
    PowerCurve(SimArgs),
}

#[derive(Args)]
struct BootstrapArgs {
    /// Input CSV with one numeric column (optional header).
    input: PathBuf,
    #[arg(long, default_value = "rdwb")]
    method: Method,
    /// none, constant, linear or poly:d
    #[arg(long, default_value = "constant")]
    trend: TrendSpec,
    #[arg(long = "B", default_value_t = 999)]
    b: usize,
    #[arg(long, default_value = "bartlett")]
    kernel: Kernel,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "URTEST_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    common: BootstrapArgs,
    /// auto, mv or a positive integer
    #[arg(long, default_value = "auto")]
    l: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct MvArgs {
    #[command(flatten)]
    common: BootstrapArgs,
    /// Candidate bandwidths, "a..b" (inclusive) or a comma list; defaults to 1..k_max+1.
    #[arg(long)]
    candidates: Option<String>,
    /// Statistic whose bootstrap law is compared: T or t.
    #[arg(long, default_value = "T")]
    statistic: Statistic,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "URTEST_THREADS")]
    threads: Option<usize>,
}

enum Failure {
    Config(String),
    Data(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => Failure::Config(e.to_string()),
            _ if e.is_data_error() => Failure::Data(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = match &cli.command {
        Command::Test(a) => a.common.threads,
        Command::Mv(a) => a.common.threads,
        Command::Simulate(a) | Command::PowerCurve(a) => a.threads,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a, false),
        Command::PowerCurve(a) => cmd_simulate(a, true),
        Command::Mv(a) => cmd_mv(a),
    })
}

fn load_series(path: &Path, trend: TrendSpec) -> CliResult<ObservedSeries> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let values = read_series_csv(BufReader::new(file)).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    if values.len() < MIN_OBSERVATIONS {
        return Err(Failure::Data(format!(
            "{}: {} observations, at least {MIN_OBSERVATIONS} are required",
            path.display(),
            values.len()
        )));
    }
    Ok(ObservedSeries::new(values, trend)?)
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json serializes"));
}

fn cmd_test(args: TestArgs) -> CliResult<()> {
    let c = &args.common;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::Config(format!("--alpha {} must lie in (0, 1)", args.alpha)));
    }
    let config = BootstrapConfig::new(c.method, c.b, c.seed)
        .with_bandwidth(parse_bandwidth(&args.l)?)
        .with_kernel(c.kernel);
    config.validate()?;
    let series = load_series(&c.input, c.trend)?;
    let result = run_bootstrap(&series, &config)?;
    let mut report = result.to_json();
    let verdict = |s: Statistic| {
        if result.p_value(s) <= args.alpha {
            "reject"
        } else {
            "fail to reject"
        }
    };
    report["n"] = json!(series.len());
    report["trend"] = json!(series.trend().to_string());
    report["kernel"] = json!(c.kernel.to_string());
    report["seed"] = json!(c.seed);
    report["alpha"] = json!(args.alpha);
    report["failures"] = json!(result.failures);
    report["decision"] = json!({"T": verdict(Statistic::Coef), "t": verdict(Statistic::T)});
    print_json(&report);
    Ok(())
}

fn parse_candidates(s: &str) -> CliResult<Vec<usize>> {
    let bad = || Failure::Config(format!("--candidates '{s}' is not 'a..b' or a comma list"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_mv(args: MvArgs) -> CliResult<()> {
    let c = &args.common;
    let config = BootstrapConfig::new(c.method, c.b, c.seed).with_kernel(c.kernel);
    if c.method == Method::Rwb {
        return Err(Failure::Config("RWB fixes l = 1; use dwb or rdwb for bandwidth selection".into()));
    }
    let explicit = args.candidates.as_deref().map(parse_candidates).transpose()?;
    let series = load_series(&c.input, c.trend)?;
    let candidates = explicit.unwrap_or_else(|| default_mv_candidates(series.len()));
    let sel = mv_select_bandwidth(&series, &config, &candidates, args.statistic)?;
    let dropped: Vec<_> = sel.dropped.iter().map(|(l, why)| json!({"l": l, "reason": why})).collect();
    print_json(&json!({
        "l_selected": sel.l_selected,
        "candidates": candidates,
        "evaluated": sel.candidates,
        "H": sel.distances,
        "dropped": dropped,
        "statistic": args.statistic.symbol(),
        "method": c.method,
        "B": c.b,
        "seed": c.seed,
    }));
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn cmd_simulate(args: SimArgs, power_curve: bool) -> CliResult<()> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let spec = ExperimentSpec::from_json(&text)?;
    let table = if power_curve || spec.has_alternatives() {
        size_corrected_power(&spec)?
    } else {
        run_size_experiment(&spec)?
    };
    let meta = sidecar_path(&args.out);
    let written = write_outputs(&table, &args.out, &meta, power_curve);
    if let Err(e) = written {
        let _ = fs::remove_file(&args.out);
        let _ = fs::remove_file(&meta);
        return Err(Failure::Config(format!("writing {}: {e}", args.out.display())));
    }
    Ok(())
}

fn write_outputs(table: &RejectionTable, out: &Path, meta: &Path, power_curve: bool) -> std::io::Result<()> {
    let to_io = |e: Error| std::io::Error::other(e.to_string());
    let mut w = BufWriter::new(File::create(out)?);
    if power_curve {
        writeln!(w, "dgp,n,c,method,statistic,rate")?;
        for r in &table.rows {
            writeln!(w, "{},{},{},{},{},{}", r.process, r.n, r.c, r.method, r.statistic, r.rate)?;
        }
    } else {
        table.write_csv(&mut w).map_err(to_io)?;
    }
    w.flush()?;
    let mut m = BufWriter::new(File::create(meta)?);
    table.write_metadata(&mut m).map_err(to_io)?;
    writeln!(m)?;
    m.flush()
}
