use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harvest_delay::analytic::route;
use harvest_delay::config::{dbm_to_watts, mw_times_seconds_to_uj, ArrivalSpec};
use harvest_delay::sim::{compare, empirical_pmf, Comparison};
use harvest_delay::{analyze, simulate, summarize, AgeCycleSummary, Error, GeneralEngine, Pmf, SimOptions};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

mod inputs;

use inputs::{Built, Inputs, ModelArgs};

#[derive(Parser)]
#[command(name = "harvest-delay", version, about = "Update age and update cycle of an energy-harvesting sensor")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pmf of the update age (blocks from sensing to delivery).
    Age(PmfArgs),
    /// Pmf of the update cycle (blocks between deliveries).
    Cycle(PmfArgs),
    /// P_suc, mean age and cycle, and their W → ∞ limits.
    Limits(PmfArgs),
    /// Run the block-level simulator.
    Simulate(SimArgs),
    /// Simulate and measure the distance to the analytic pmfs.
    Compare(SimArgs),
    /// Means and limits over a range of one parameter.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PmfArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    updates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Updates discarded at the start of each replication.
    #[arg(long, default_value_t = 100)]
    warmup: usize,
    #[arg(long, default_value_t = 8)]
    replications: usize,
    /// Keep every n-th post-TB battery level (0 keeps none).
    #[arg(long, default_value_t = 1)]
    energy_stride: usize,
    /// Directory for one single-column CSV per sampled metric.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Write the JSON summary to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    #[value(name = "W", alias = "w")]
    Window,
    #[value(name = "rho_dbm_power")]
    RhoDbmPower,
    #[value(name = "p_sen_mW", alias = "p_sen_mw")]
    PSenMw,
    #[value(name = "p_tx_mW", alias = "p_tx_mw")]
    PTxMw,
    #[value(name = "p_rf_dbm")]
    PRfDbm,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Swept parameter.
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Explicit values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["from", "to", "step"])]
    values: Vec<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["to", "step"])]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{param}={value}: {source}")]
    Point {
        param: &'static str,
        value: f64,
        source: Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot encode JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Core(e) | CliError::Point { source: e, .. } => e,
            CliError::Usage(_) => return 2,
            _ => return 1,
        };
        match core {
            Error::GridOverflow { .. } => 3,
            e if e.is_validation() => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.cmd {
        Cmd::Age(a) => cmd_pmf(a, Metric::Age),
        Cmd::Cycle(a) => cmd_pmf(a, Metric::Cycle),
        Cmd::Limits(a) => cmd_limits(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// The invocation as a shell command, with argv[0] normalised.
fn command_line() -> String {
    let args = std::env::args().skip(1).map(|a| {
        if !a.is_empty() && a.chars().all(|c| c.is_ascii_alphanumeric() || "-_.,/=:+".contains(c)) {
            a
        } else {
            format!("'{}'", a.replace('\'', r"'\''"))
        }
    });
    std::iter::once("harvest-delay".to_string()).chain(args).collect::<Vec<_>>().join(" ")
}

fn header(inputs: &Inputs, built: &Built) -> String {
    format!(
        "# harvest-delay {}\n# command: {}\n{}",
        env!("CARGO_PKG_VERSION"),
        command_line(),
        inputs.describe(built)
    )
}

fn run_header(inputs: &Inputs, built: &Built) -> serde_json::Value {
    let lines: Vec<String> = header(inputs, built).lines().map(|l| l.trim_start_matches("# ").to_string()).collect();
    json!(lines)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Clone, Copy)]
enum Metric {
    Age,
    Cycle,
}

fn cmd_pmf(a: PmfArgs, metric: Metric) -> CliResult<()> {
    let inputs = a.model.resolve()?;
    let built = inputs.build()?;
    let an = analyze(&built.cfg, built.p_out, &inputs.opts)?;
    let (pmf, mean) = match metric {
        Metric::Age => (&an.age, an.summary.mean_age),
        Metric::Cycle => (&an.cycle, an.summary.mean_cycle),
    };
    let text = if a.output.json {
        to_json(&json!({
            "run": run_header(&inputs, &built),
            "route": an.route,
            "p_suc": an.summary.p_suc,
            "mean": mean,
            "tail_mass": pmf.tail_mass,
            "pmf": pmf.iter().filter(|(_, p)| *p > 0.0).collect::<Vec<_>>(),
        }))?
    } else {
        let mut s = header(&inputs, &built);
        s += &format!("# route: {:?}\n", an.route).to_lowercase();
        s += &format!("# p_suc: {}\n# mean: {}\n# tail_mass: {}\n", an.summary.p_suc, mean, pmf.tail_mass);
        s += &pmf_csv(pmf);
        s
    };
    emit(&a.output.out, &text)
}

fn pmf_csv(pmf: &Pmf) -> String {
    let mut s = String::from("k_blocks,probability\n");
    for (k, p) in pmf.iter().filter(|(_, p)| *p > 0.0) {
        s += &format!("{k},{p}\n");
    }
    s
}

const SUMMARY_COLUMNS: &str = "p_suc,mean_age,mean_cycle,limit_age,limit_cycle";

fn summary_row(s: &AgeCycleSummary) -> String {
    format!("{},{},{},{},{}", s.p_suc, s.mean_age, s.mean_cycle, s.limit_age, s.limit_cycle)
}

fn cmd_limits(a: PmfArgs) -> CliResult<()> {
    let inputs = a.model.resolve()?;
    let built = inputs.build()?;
    let s = summarize(&built.cfg, built.p_out, &inputs.opts)?;
    let text = if a.output.json {
        to_json(&json!({ "run": run_header(&inputs, &built), "summary": s }))?
    } else {
        format!("{}{SUMMARY_COLUMNS}\n{}\n", header(&inputs, &built), summary_row(&s))
    };
    emit(&a.output.out, &text)
}

fn sim_options(a: &SimArgs) -> SimOptions {
    SimOptions {
        n_updates: a.updates,
        seed: a.seed,
        warmup: a.warmup,
        replications: a.replications,
        energy_stride: a.energy_stride,
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn cmd_simulate(a: SimArgs) -> CliResult<()> {
    let inputs = a.model.resolve()?;
    let built = inputs.build()?;
    let r = simulate(&built.cfg, built.p_out, &sim_options(&a))?;
    if let Some(dir) = &a.samples {
        fs::create_dir_all(dir)?;
        let head = format!("{}# seed: {}\n", header(&inputs, &built), a.seed);
        let column = |name: &str, values: Vec<String>| -> CliResult<()> {
            let mut s = format!("{head}{name}\n");
            for v in values {
                s += &v;
                s.push('\n');
            }
            fs::write(dir.join(format!("{name}.csv")), s)?;
            Ok(())
        };
        let ints = |v: &[u64]| v.iter().map(u64::to_string).collect();
        column("update_age", ints(&r.update_ages))?;
        column("update_cycle", ints(&r.update_cycles))?;
        column("fails_between_updates", ints(&r.fails_between_updates))?;
        column("post_tb_energy", r.post_tb_energies.iter().map(f64::to_string).collect())?;
    }
    let text = to_json(&json!({
        "run": run_header(&inputs, &built),
        "seed": r.seed,
        "updates": r.update_ages.len(),
        "cycles": r.update_cycles.len(),
        "replications": r.replications,
        "warmup_discarded": r.warmup_discarded,
        "mean_age": r.mean_age(),
        "mean_cycle": r.mean_cycle(),
        "mean_fails_between_updates": r.mean_fails(),
        "mean_post_tb_energy": mean(&r.post_tb_energies),
    }))?;
    emit(&a.out, &text)
}

#[derive(Serialize)]
struct MetricReport {
    #[serde(flatten)]
    distance: Comparison,
    analytic_mean: f64,
    simulated_mean: f64,
}

fn cmd_compare(a: SimArgs) -> CliResult<()> {
    let inputs = a.model.resolve()?;
    let built = inputs.build()?;
    let an = analyze(&built.cfg, built.p_out, &inputs.opts)?;
    let r = simulate(&built.cfg, built.p_out, &SimOptions { energy_stride: 0, ..sim_options(&a) })?;
    let report = |pmf: &Pmf, mean: f64, samples: &[u64]| -> CliResult<MetricReport> {
        let emp = empirical_pmf(samples)?;
        Ok(MetricReport {
            distance: compare(pmf, &emp),
            analytic_mean: mean,
            simulated_mean: emp.mean,
        })
    };
    let p_suc = an.summary.p_suc;
    let text = to_json(&json!({
        "run": run_header(&inputs, &built),
        "seed": a.seed,
        "updates": r.update_ages.len(),
        "route": an.route,
        "age": report(&an.age, an.summary.mean_age, &r.update_ages)?,
        "cycle": report(&an.cycle, an.summary.mean_cycle, &r.update_cycles)?,
        "fails_between_updates": {
            "analytic_mean": (1.0 - p_suc) / p_suc,
            "simulated_mean": r.mean_fails(),
        },
    }))?;
    emit(&a.out, &text)
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Window => "W",
            SweepParam::RhoDbmPower => "rho_dbm_power",
            SweepParam::PSenMw => "p_sen_mW",
            SweepParam::PTxMw => "p_tx_mW",
            SweepParam::PRfDbm => "p_rf_dbm",
        }
    }

    fn apply(self, base: &Inputs, x: f64) -> harvest_delay::Result<Inputs> {
        let mut i = base.clone();
        let t = i.block_duration;
        match self {
            SweepParam::Window => {
                if x.fract() != 0.0 || x < 1.0 || x > u32::MAX as f64 {
                    return Err(Error::NonPositive {
                        field: "W",
                        value: x,
                        expected: "a whole number of blocks >= 1",
                    });
                }
                i.window = x as u32;
            }
            SweepParam::RhoDbmPower => {
                let rho = dbm_to_watts(x) * t * 1e6;
                i.arrivals = match i.arrivals {
                    ArrivalSpec::Deterministic { .. } => ArrivalSpec::Deterministic { rho },
                    ArrivalSpec::Exponential { .. } => ArrivalSpec::Exponential { rho },
                    ArrivalSpec::Gamma { shape, .. } => ArrivalSpec::Gamma { shape, scale: rho / shape },
                    ArrivalSpec::Tabulated { .. } => {
                        return Err(Error::Config("a tabulated density has a fixed mean".into()))
                    }
                };
            }
            SweepParam::PSenMw => i.e_sen = mw_times_seconds_to_uj(x, t),
            SweepParam::PTxMw => i.e_tx = mw_times_seconds_to_uj(x, t),
            SweepParam::PRfDbm => {
                if i.channel.p_out.is_some() {
                    return Err(Error::ConflictingChannel);
                }
                i.channel.rf_tx_power = None;
                i.channel.rf_tx_power_dbm = Some(x);
            }
        }
        Ok(i)
    }
}

fn sweep_values(a: &SweepArgs) -> CliResult<Vec<f64>> {
    if !a.values.is_empty() {
        return Ok(a.values.clone());
    }
    let (Some(from), Some(to), Some(step)) = (a.from, a.to, a.step) else {
        return Err(CliError::Usage("give --values or --from/--to/--step".into()));
    };
    if !(step > 0.0) || to < from {
        return Err(CliError::Usage("need --step > 0 and --to >= --from".into()));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| from + k as f64 * step).collect())
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let base = a.model.resolve()?;
    let values = sweep_values(&a)?;
    let param = a.param;
    let point = |x: f64| -> harvest_delay::Result<(Inputs, Built)> {
        let i = param.apply(&base, x)?;
        let b = i.build()?;
        Ok((i, b))
    };
    let points: Vec<(Inputs, Built)> = values
        .iter()
        .map(|&x| point(x).map_err(|source| CliError::Point { param: param.name(), value: x, source }))
        .collect::<CliResult<_>>()?;

    // W sweeps through the grid share one table built for the largest window
    let base_built = &points[0].1;
    let shared = if param == SweepParam::Window && route(&base_built.cfg, &base.opts) == harvest_delay::analytic::Route::General {
        let max_w = points.iter().map(|(i, _)| i.window).max().unwrap();
        let p = base_built.cfg.params();
        Some(GeneralEngine::new(base_built.cfg.arrivals(), p.e_sen, p.e_tx, max_w, &base.opts)?)
    } else {
        None
    };
    let rows: Vec<harvest_delay::Result<AgeCycleSummary>> = points
        .par_iter()
        .map(|(i, b)| match &shared {
            Some(engine) => engine.summary(i.window, b.p_out),
            None => summarize(&b.cfg, b.p_out, &i.opts),
        })
        .collect();
    let mut summaries = Vec::with_capacity(rows.len());
    for (x, row) in values.iter().zip(rows) {
        summaries.push(row.map_err(|source| CliError::Point { param: param.name(), value: *x, source })?);
    }

    let text = if a.output.json {
        let rows: Vec<_> = values.iter().zip(&summaries).map(|(x, s)| json!({ "x": x, "summary": s })).collect();
        to_json(&json!({ "run": run_header(&base, base_built), "param": param.name(), "rows": rows }))?
    } else {
        let mut s = header(&base, base_built);
        s += &format!("# sweep: {} over {} values; other inputs as above\n", param.name(), values.len());
        s += &format!("x,{}\n", "mean_age,mean_cycle,p_suc,limit_age,limit_cycle");
        for (x, r) in values.iter().zip(&summaries) {
            s += &format!("{x},{},{},{},{},{}\n", r.mean_age, r.mean_cycle, r.p_suc, r.limit_age, r.limit_cycle);
        }
        s
    };
    emit(&a.output.out, &text)
}
