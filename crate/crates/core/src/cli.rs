//! Command-line surface: argument grammar, dispatch, and output formatting.
//!
//! Data goes to stdout (or `--output`); CSV runs echo their resolved config
//! as a `# config` JSON line on stderr so the data stream stays plain CSV.
//! JSON runs embed the config in the document.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{emit_curves, threshold_lower, threshold_upper, Curve, Grid};
use crate::ensemble::{SystemParams, TestFunction};
use crate::error::{Error, Result};
use crate::estimators::{DEFAULT_EPSILON, DEFAULT_MAX_N};
use crate::genfunc::{binary_direct_margin, general_converse, general_direct_margin, output_distribution};
use crate::montecarlo::{run_noiseless_trials, run_noisy_trials, GraphMode, TrialConfig};
use crate::numeric::format_sig;
use crate::verify::{run_suite, Suite, SuiteReport};

/// Significant digits of every float the CLI prints.
pub const SIG_DIGITS: usize = 12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pooltest",
    version,
    about = "Sparse pooled-testing ensembles: bounds, thresholds, simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveId {
    AlphaVsL,
    AlphaVsP,
    BetaVsP,
    ThetaVsZ,
    LambdaVsP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Noiseless,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphModeArg {
    Fresh,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Exact,
    Montecarlo,
    Identities,
    All,
}

#[derive(Debug, Clone, clap::Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write data here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a converse or direct bound curve.
    Bounds {
        #[arg(long, value_enum)]
        curve: CurveId,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long)]
        sigma: Option<f64>,
        /// Ratio r / l for `alpha-vs-l`.
        #[arg(long)]
        r_over_l: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        p_min: f64,
        #[arg(long, default_value_t = 0.5)]
        p_max: f64,
        #[arg(long, default_value_t = 0.01)]
        z_min: f64,
        #[arg(long, default_value_t = 1.0)]
        z_max: f64,
        #[arg(long, default_value_t = 1.0)]
        l_min: f64,
        #[arg(long, default_value_t = 20.0)]
        l_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Lower and upper noiseless thresholds for a list of degree pairs.
    Thresholds {
        /// Comma-separated `l:r` pairs, e.g. `3:6,4:8`.
        #[arg(long, required = true)]
        pairs: String,
        /// Decimals printed for each threshold.
        #[arg(long, default_value_t = 6)]
        precision: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo error rate of the typical-set estimator (JSON report).
    Simulate {
        #[arg(long, value_enum, default_value_t = Mode::Noiseless)]
        mode: Mode,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        eps2: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GraphModeArg::Fresh)]
        graph_mode: GraphModeArg,
        /// Largest n the estimator will enumerate.
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run self-checks; exit status 1 if any fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Converse value and direct margin for a test function read from JSON.
    General {
        /// Test-function file.
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        r: usize,
        /// Defect probability for binary-input functions.
        #[arg(long, conflicts_with = "probs")]
        p: Option<f64>,
        /// Comma-separated symbol probabilities.
        #[arg(long)]
        probs: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Maps a library error to the process exit status.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Guard(_) => EXIT_GUARD,
        _ => EXIT_USAGE,
    }
}

/// Float formatting shared by every output: 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format_sig(x, SIG_DIGITS)
}

/// JSON number rounded to 12 significant digits; non-finite values become `null`.
fn json_float(x: f64) -> Value {
    fmt_float(x)
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map_or(Value::Null, Value::from)
}

/// Rounds every float in a JSON tree to 12 significant digits.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json_float(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

fn to_json<T: Serialize>(value: &T) -> Value {
    round_floats(serde_json::to_value(value).expect("serializable"))
}

/// Output of one command: the data text and any diagnostics for stderr.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
    pub output: Option<PathBuf>,
}

impl Outcome {
    fn data(stdout: String, output: Option<PathBuf>) -> Self {
        Self {
            stdout,
            output,
            ..Self::default()
        }
    }
}

fn missing(flag: &str, curve: CurveId) -> Error {
    Error::Config(format!("--{flag} is required for curve {}", curve_name(curve)))
}

fn curve_name(id: CurveId) -> String {
    id.to_possible_value()
        .map_or_else(String::new, |v| v.get_name().to_string())
}

#[allow(clippy::too_many_arguments)]
fn build_curve(
    id: CurveId,
    l: Option<usize>,
    r: Option<usize>,
    p: Option<f64>,
    q: f64,
    sigma: Option<f64>,
    r_over_l: Option<usize>,
) -> Result<Curve> {
    let need_l = || l.ok_or_else(|| missing("l", id));
    let need_r = || r.ok_or_else(|| missing("r", id));
    Ok(match id {
        CurveId::AlphaVsL => Curve::AlphaVsL {
            p: p.ok_or_else(|| missing("p", id))?,
            r_over_l: r_over_l.ok_or_else(|| missing("r-over-l", id))?,
        },
        CurveId::AlphaVsP => Curve::AlphaVsP {
            l: need_l()?,
            r: need_r()?,
        },
        CurveId::BetaVsP => Curve::BetaVsP {
            l: need_l()?,
            r: need_r()?,
            q,
        },
        CurveId::ThetaVsZ => Curve::ThetaVsZ {
            l: need_l()?,
            r: need_r()?,
            p: p.ok_or_else(|| missing("p", id))?,
            sigma: sigma.ok_or_else(|| missing("sigma", id))?,
        },
        CurveId::LambdaVsP => Curve::LambdaVsP {
            l: need_l()?,
            r: need_r()?,
        },
    })
}

fn curve_columns(id: CurveId) -> (&'static str, &'static str) {
    match id {
        CurveId::AlphaVsL => ("l", "alpha"),
        CurveId::AlphaVsP => ("p", "alpha"),
        CurveId::BetaVsP => ("p", "beta"),
        CurveId::ThetaVsZ => ("z", "theta"),
        CurveId::LambdaVsP => ("p", "lambda"),
    }
}

/// Parses `l:r,l:r,...`.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (l, r) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("pair `{pair}` is not of the form l:r")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("pair `{pair}` has a non-integer degree")))
            };
            Ok((parse(l)?, parse(r)?))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|pairs| {
            if pairs.is_empty() {
                Err(Error::Config("no l:r pairs given".into()))
            } else {
                Ok(pairs)
            }
        })
}

fn parse_probs(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{s}` is not a probability")))
        })
        .collect()
}

fn config_line(config: &Value) -> String {
    format!("# config {config}\n")
}

fn run_bounds(command: &Command) -> Result<Outcome> {
    let Command::Bounds {
        curve,
        l,
        r,
        p,
        q,
        sigma,
        r_over_l,
        p_min,
        p_max,
        z_min,
        z_max,
        l_min,
        l_max,
        steps,
        out,
    } = command
    else {
        unreachable!("dispatched on variant")
    };
    let spec = build_curve(*curve, *l, *r, *p, *q, *sigma, *r_over_l)?;
    let grid = match curve {
        CurveId::AlphaVsL => Grid::new(*l_min, *l_max, *steps)?,
        CurveId::ThetaVsZ => Grid::new(*z_min, *z_max, *steps)?,
        _ => Grid::new(*p_min, *p_max, *steps)?,
    };
    let rows = emit_curves(&spec, &grid)?;
    let config = json!({ "command": "bounds", "curve": to_json(&spec), "grid": to_json(&grid), "format": out.format });
    let (xname, yname) = curve_columns(*curve);
    Ok(match out.format {
        Format::Csv => {
            let mut text = format!("{xname},{yname}\n");
            for (x, y) in &rows {
                text.push_str(&format!("{},{}\n", fmt_float(*x), fmt_float(*y)));
            }
            Outcome {
                stderr: config_line(&config),
                ..Outcome::data(text, out.output.clone())
            }
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(x, y)| json!({ xname: json_float(*x), yname: json_float(*y) }))
                .collect();
            Outcome::data(
                format!("{:#}\n", json!({ "config": config, "rows": rows })),
                out.output.clone(),
            )
        }
    })
}

/// One threshold row: `Ok((lower, upper))` or the per-row error text.
fn threshold_row(l: usize, r: usize) -> std::result::Result<(f64, f64), String> {
    let lower = threshold_lower(l, r).map_err(|e| e.to_string())?;
    let upper = threshold_upper(l, r).map_err(|e| e.to_string())?;
    Ok((lower, upper))
}

fn run_thresholds(pairs: &str, precision: usize, out: &OutputArgs) -> Result<Outcome> {
    let pairs = parse_pairs(pairs)?;
    let rows: Vec<_> = pairs.iter().map(|&(l, r)| (l, r, threshold_row(l, r))).collect();
    let config = json!({ "command": "thresholds", "pairs": pairs, "precision": precision, "format": out.format });
    let mut stderr = String::new();
    let stdout = match out.format {
        Format::Csv => {
            stderr.push_str(&config_line(&config));
            let mut text = String::from("l,r,p_lower,p_upper\n");
            for (l, r, row) in &rows {
                match row {
                    Ok((lo, hi)) => text.push_str(&format!("{l},{r},{lo:.precision$},{hi:.precision$}\n")),
                    Err(e) => {
                        text.push_str(&format!("{l},{r},,\n"));
                        stderr.push_str(&format!("({l},{r}): {e}\n"));
                    }
                }
            }
            text
        }
        Format::Json => {
            let round = |x: f64| {
                format!("{x:.precision$}")
                    .parse::<f64>()
                    .map_or(Value::Null, Value::from)
            };
            let rows: Vec<Value> = rows
                .iter()
                .map(|(l, r, row)| match row {
                    Ok((lo, hi)) => json!({ "l": l, "r": r, "p_lower": round(*lo), "p_upper": round(*hi) }),
                    Err(e) => json!({ "l": l, "r": r, "error": e }),
                })
                .collect();
            format!("{:#}\n", json!({ "config": config, "rows": rows }))
        }
    };
    Ok(Outcome {
        stdout,
        stderr,
        code: EXIT_OK,
        output: out.output.clone(),
    })
}

fn run_simulate(command: &Command) -> Result<Outcome> {
    let Command::Simulate {
        mode,
        l,
        r,
        n,
        p,
        q,
        eps,
        eps2,
        trials,
        seed,
        graph_mode,
        max_n,
        output,
    } = command
    else {
        unreachable!("dispatched on variant")
    };
    let q = if *mode == Mode::Noiseless { 0.0 } else { *q };
    let params = SystemParams::new(*l, *r, *n, *p, q)?;
    let config = TrialConfig {
        params,
        epsilon: *eps,
        epsilon_noise: *eps2,
        trials: *trials,
        seed: *seed,
        graph_mode: match graph_mode {
            GraphModeArg::Fresh => GraphMode::Fresh,
            GraphModeArg::Fixed => GraphMode::Fixed,
        },
        max_n: *max_n,
    };
    let report = match mode {
        Mode::Noiseless => run_noiseless_trials(&config),
        Mode::Noisy => run_noisy_trials(&config),
    }
    .map_err(|e| match e {
        Error::Guard(msg) => Error::Guard(format!("{msg}; lower --n or raise --max-n")),
        other => other,
    })?;
    let doc = json!({ "mode": mode, "report": to_json(&report) });
    Ok(Outcome::data(format!("{doc:#}\n"), output.clone()))
}

fn run_verify(suite: SuiteArg, trials: u64, seed: u64, format: Format) -> Result<Outcome> {
    let suites = match suite {
        SuiteArg::Exact => vec![Suite::Exact],
        SuiteArg::Montecarlo => vec![Suite::Montecarlo],
        SuiteArg::Identities => vec![Suite::Identities],
        SuiteArg::All => vec![Suite::Exact, Suite::Montecarlo, Suite::Identities],
    };
    let reports: Vec<SuiteReport> = suites
        .into_iter()
        .map(|s| run_suite(s, trials, seed))
        .collect::<Result<_>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let stdout = match format {
        Format::Csv => {
            let mut text = String::new();
            for report in &reports {
                for c in &report.checks {
                    let status = if c.pass { "PASS" } else { "FAIL" };
                    text.push_str(&format!("{status} {}: {}\n", c.name, c.detail));
                }
            }
            text.push_str(if pass {
                "all checks passed\n"
            } else {
                "some checks failed\n"
            });
            text
        }
        Format::Json => {
            let config = json!({ "command": "verify", "trials": trials, "seed": seed });
            format!(
                "{:#}\n",
                json!({ "config": config, "pass": pass, "suites": to_json(&reports) })
            )
        }
    };
    Ok(Outcome {
        stdout,
        code: if pass { EXIT_OK } else { EXIT_VERIFY_FAILED },
        ..Outcome::default()
    })
}

fn run_general(command: &Command) -> Result<Outcome> {
    let Command::General {
        function,
        l,
        r,
        p,
        probs,
        output,
    } = command
    else {
        unreachable!("dispatched on variant")
    };
    let text =
        fs::read_to_string(function).map_err(|e| Error::Config(format!("cannot read {}: {e}", function.display())))?;
    let f = TestFunction::from_json_str(&text)?;
    let probs = match (p, probs) {
        (Some(p), None) if f.is_binary_input() => vec![1.0 - p, *p],
        (Some(_), None) => return Err(Error::Config("--p needs a binary-input function; use --probs".into())),
        (None, Some(text)) => parse_probs(text)?,
        _ => return Err(Error::Config("give either --p or --probs".into())),
    };
    let converse = general_converse(&f, *l, *r, &probs)?;
    let margin = general_direct_margin(&f, *l, *r, &probs)?;
    let binary = if f.is_binary_input() {
        Some(to_json(&binary_direct_margin(&f, *l, *r, probs[1])?))
    } else {
        None
    };
    let alphas: Vec<Value> = output_distribution(&f, &probs).into_iter().map(json_float).collect();
    let totality = output_distribution(&f, &probs).iter().sum::<f64>();
    let config = json!({
        "command": "general",
        "function": function.display().to_string(),
        "l": l,
        "r": r,
        "probs": to_json(&probs),
    });
    let doc = json!({
        "config": config,
        "input_alphabet_size": f.input_size(),
        "output_alphabet_size": f.output_size(),
        "output_distribution": alphas,
        "output_distribution_total": json_float(totality),
        "converse": json_float(converse),
        "direct_margin": to_json(&margin),
        "binary_direct_margin": binary,
    });
    Ok(Outcome::data(format!("{doc:#}\n"), output.clone()))
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        c @ Command::Bounds { .. } => run_bounds(c),
        Command::Thresholds { pairs, precision, out } => run_thresholds(pairs, *precision, out),
        c @ Command::Simulate { .. } => run_simulate(c),
        Command::Verify {
            suite,
            trials,
            seed,
            format,
        } => run_verify(*suite, *trials, *seed, *format),
        c @ Command::General { .. } => run_general(c),
    }
}

/// Writes an outcome to its destinations and returns the exit status.
pub fn emit(outcome: Outcome, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let _ = stderr.write_all(outcome.stderr.as_bytes());
    match &outcome.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &outcome.stdout) {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => {
            let _ = stdout.write_all(outcome.stdout.as_bytes());
        }
    }
    outcome.code
}

/// Caps the global worker pool from `POOLTEST_THREADS` (unset or 0 = automatic).
pub fn configure_threads(value: Option<&str>) -> Result<()> {
    let Some(value) = value else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("POOLTEST_THREADS=`{value}` is not a non-negative integer")))?;
    if threads > 0 {
        // a pool that is already built keeps its size; that only happens in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Outcome {
        let cli = Cli::try_parse_from(std::iter::once("pooltest").chain(args.iter().copied())).unwrap();
        execute(&cli).unwrap()
    }

    #[test]
    fn pair_grammar() {
        assert_eq!(parse_pairs("3:6, 4:8").unwrap(), vec![(3, 6), (4, 8)]);
        assert!(parse_pairs("3-6").is_err());
        assert!(parse_pairs("").is_err());
        assert!(parse_pairs("a:6").is_err());
    }

    #[test]
    fn alpha_curve_row_count() {
        let out = run(&[
            "bounds",
            "--curve",
            "alpha-vs-p",
            "--l",
            "3",
            "--r",
            "6",
            "--p-min",
            "0",
            "--p-max",
            "0.3",
            "--steps",
            "300",
        ]);
        let lines: Vec<&str> = out.stdout.lines().collect();
        assert_eq!(lines[0], "p,alpha");
        assert_eq!(lines.len(), 302);
        assert!(out.stderr.starts_with("# config"));
    }

    #[test]
    fn unknown_curve_is_a_usage_error() {
        let err = Cli::try_parse_from(["pooltest", "bounds", "--curve", "gamma-vs-p"]).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn threshold_rows() {
        let out = run(&["thresholds", "--pairs", "3:6,4:2"]);
        let lines: Vec<&str> = out.stdout.lines().collect();
        assert_eq!(lines[1], "3,6,0.110022,0.110023");
        assert_eq!(lines[2], "4,2,,");
        assert!(out.stderr.contains("(4,2)"));
    }

    #[test]
    fn thread_variable() {
        assert!(configure_threads(None).is_ok());
        assert!(configure_threads(Some("0")).is_ok());
        assert!(configure_threads(Some("x")).is_err());
    }

    #[test]
    fn json_rounding() {
        assert_eq!(json_float(1.0 / 3.0), json!(0.333333333333));
        assert_eq!(json_float(f64::INFINITY), Value::Null);
    }
}
