use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use fourqubit::bell::{
    algebraic_max, builtin, classical_bound, evaluate, named_settings, BellExpression,
    ExpressionDocument, SettingsAssignment,
};
use fourqubit::optimize::{
    format_significant, linspace, max_violation, scan_upsilon, write_scan_csv, OptimizationConfig,
};
use fourqubit::qstate::QuantumState;
use fourqubit::report::reproduction_table;
use fourqubit::states::{chi, from_id};
use fourqubit::teleport::analyze;

/// Four-qubit Bell inequalities and teleportation through noisy channels.
#[derive(Parser, Debug)]
#[command(name = "fourqubit", version)]
struct Cli {
    /// Leave `elapsed_ms` out of the output so repeated runs print identical bytes.
    #[arg(long, global = true)]
    omit_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an expression on a state at fixed settings.
    Eval(EvalArgs),
    /// Maximize an expression over measurement settings.
    Optimize(OptimizeArgs),
    /// Violation landscape over the upsilon(θ₁₂, φ₁₂) family.
    Scan(ScanArgs),
    /// Teleportation figures of merit for one point or a (q, ε) sweep.
    Teleport(TeleportArgs),
    /// Recompute the reproduction table; exits nonzero on any failure.
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    /// Built-in expression name or a JSON expression document.
    #[arg(long)]
    expr: String,
    /// State identifier such as chi, w4 or upsilon:0.5:0.5.
    #[arg(long)]
    state: String,
    /// Built-in settings key or a JSON settings file.
    #[arg(long)]
    settings: String,
}

#[derive(Args, Debug, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    expr: String,
    #[arg(long)]
    state: String,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[arg(long, default_value = "bi1")]
    expr: String,
    /// Points per axis over [−π/2, π/2].
    #[arg(long)]
    grid: usize,
    /// Evaluate at these settings instead of optimizing each point.
    #[arg(long)]
    fixed_settings: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
}

#[derive(Args, Debug, Serialize)]
struct TeleportArgs {
    /// Channel visibility in [0, 1].
    #[arg(long, required_unless_present = "sweep")]
    q: Option<f64>,
    /// Input Schmidt angle in [0, π/2].
    #[arg(long, required_unless_present = "sweep")]
    epsilon: Option<f64>,
    /// Write a CSV over a (q, ε) grid instead of analyzing one point.
    #[arg(long, conflicts_with_all = ["q", "epsilon"], requires = "out")]
    sweep: bool,
    #[arg(long, default_value_t = 11)]
    q_points: usize,
    #[arg(long, default_value_t = 7)]
    epsilon_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// Four-qubit pure state used in place of chi.
    #[arg(long, default_value = "chi")]
    chi: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CommandResult {
    command: String,
    inputs: Value,
    outputs: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (name, inputs, outcome) = match &cli.command {
        Command::Eval(a) => ("eval", to_value(a), cmd_eval(a)),
        Command::Optimize(a) => ("optimize", to_value(a), cmd_optimize(a)),
        Command::Scan(a) => ("scan", to_value(a), cmd_scan(a)),
        Command::Teleport(a) => ("teleport", to_value(a), cmd_teleport(a)),
        Command::Report(a) => ("report", to_value(a), cmd_report(a)),
    };
    let (outputs, ok) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let mut result = CommandResult {
        command: name.to_string(),
        inputs,
        outputs,
        elapsed_ms: (!cli.omit_timing).then_some(round12(elapsed)),
    };
    round_numbers(&mut result.outputs);
    let printed = serde_json::to_string_pretty(&result)
        .map_err(anyhow::Error::from)
        .and_then(|s| Ok(writeln!(std::io::stdout().lock(), "{s}")?));
    if let Err(e) = printed {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Rounds every float to 12 significant digits; integers are untouched.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round12(x)))
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn load_expression(arg: &str) -> Result<BellExpression> {
    if Path::new(arg).is_file() {
        let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
        let doc: ExpressionDocument = serde_json::from_str(&text)
            .with_context(|| format!("parsing expression document {arg}"))?;
        return Ok(doc.expression()?);
    }
    Ok(builtin(arg)?)
}

/// A readable file takes precedence over a built-in key of the same name.
fn load_settings(arg: &str) -> Result<SettingsAssignment> {
    if Path::new(arg).is_file() {
        let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing settings file {arg}"));
    }
    Ok(named_settings(arg)?)
}

fn load_state(id: &str) -> Result<QuantumState> {
    Ok(from_id(id)?)
}

type Outcome = Result<(Value, bool)>;

fn cmd_eval(a: &EvalArgs) -> Outcome {
    let expr = load_expression(&a.expr)?;
    let state = load_state(&a.state)?;
    let settings = load_settings(&a.settings)?;
    let value = evaluate(&expr, &state, &settings)?;
    let bound = classical_bound(&expr)?;
    Ok((
        json!({
            "value": value,
            "classical_bound": bound,
            "algebraic_max": algebraic_max(&expr),
            "violated": value > bound + 1e-9,
        }),
        true,
    ))
}

fn cmd_optimize(a: &OptimizeArgs) -> Outcome {
    let expr = load_expression(&a.expr)?;
    let state = load_state(&a.state)?;
    let config = OptimizationConfig::default()
        .with_restarts(a.restarts)
        .with_seed(a.seed);
    let best = max_violation(&expr, &state, &config)?;
    let bound = classical_bound(&expr)?;
    Ok((
        json!({
            "value": best.value,
            "converged": best.converged,
            "restarts_used": best.restarts_used,
            "classical_bound": bound,
            "violated": best.value > bound + 1e-9,
            "settings": best.settings,
        }),
        true,
    ))
}

fn cmd_scan(a: &ScanArgs) -> Outcome {
    if a.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let expr = load_expression(&a.expr)?;
    let fixed = a.fixed_settings.as_deref().map(load_settings).transpose()?;
    let config = OptimizationConfig::default()
        .with_restarts(a.restarts)
        .with_seed(a.seed);
    let axis = linspace(-FRAC_PI_2, FRAC_PI_2, a.grid);
    let rows = scan_upsilon(&expr, &axis, &axis, &config, fixed.as_ref())?;

    let file = File::create(&a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    let mut w = BufWriter::new(file);
    write_scan_csv(&rows, &mut w)?;
    w.flush()?;

    let finite = rows.iter().map(|r| r.value).filter(|v| v.is_finite());
    let max = finite.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = finite.fold(f64::INFINITY, f64::min);
    Ok((
        json!({
            "out": a.out,
            "points": rows.len(),
            "max_value": max,
            "min_value": min,
            "all_converged": rows.iter().all(|r| r.converged),
            "mode": if fixed.is_some() { "fixed" } else { "optimized" },
            "expression": ExpressionDocument::new(&expr, fixed),
        }),
        true,
    ))
}

fn cmd_teleport(a: &TeleportArgs) -> Outcome {
    if !a.sweep {
        let (Some(q), Some(eps)) = (a.q, a.epsilon) else {
            bail!("--q and --epsilon are required without --sweep");
        };
        return Ok((serde_json::to_value(analyze(q, eps)?)?, true));
    }
    if a.q_points < 2 || a.epsilon_points < 2 {
        bail!("sweeps need at least 2 points per axis");
    }
    let out = a.out.as_ref().context("--sweep needs --out")?;
    let file = File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "q,epsilon,fidelity_proxy,negativity,chsh_max,violates_chsh"
    )?;
    let mut rows = 0usize;
    for q in linspace(0.0, 1.0, a.q_points) {
        for eps in linspace(0.0, PI / 2.0, a.epsilon_points) {
            let r = analyze(q, eps)?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                format_significant(q, 12),
                format_significant(eps, 12),
                format_significant(r.singlet_fraction, 12),
                format_significant(r.negativity, 12),
                format_significant(r.chsh_max, 12),
                r.violates_chsh
            )?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok((json!({ "out": out, "rows": rows }), true))
}

fn cmd_report(a: &ReportArgs) -> Outcome {
    let state = if a.chi == "chi" {
        chi()
    } else {
        match load_state(&a.chi)? {
            QuantumState::Pure(s) => s,
            QuantumState::Mixed(_) => bail!("--chi needs a pure four-qubit state"),
        }
    };
    let config = OptimizationConfig::default().with_seed(a.seed);
    let rows = reproduction_table(&state, &config)?;
    for r in &rows {
        eprintln!(
            "{} {:<32} expected {:<20} actual {:<20} tol {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            format_significant(r.expected, 12),
            format_significant(r.actual, 12),
            r.tolerance
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    Ok((
        json!({
            "rows": rows,
            "total": rows.len(),
            "failed": failed,
        }),
        failed == 0,
    ))
}
