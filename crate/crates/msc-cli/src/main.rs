//! Command line front end: scalar threshold evaluation, diagonal convexity
//! bounds, penalized least-squares solves, the iterative sparse driver, and
//! the deconvolution benchmark with its lambda sweep and denoising demos.
//!
//! Every subcommand exits 0 on success; failures print a one-object error
//! JSON to stderr and exit nonzero.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use msc::bench::{
    denoise_demo, lambda_sweep, run_benchmark, summary_csv, sweep_csv, trials_csv,
    AlgorithmId, ExperimentConfig, fmt_float,
};
use msc::bound::{diagonal_bound, BoundMethod};
use msc::error::{MscError, Result};
use msc::imsc::{run_imsc, ImscConfig};
use msc::io::{
    read_matrix_csv, read_vector_csv, write_json, write_scatter_csv, write_vector_csv,
    ProblemFile,
};
use msc::operators::GramMatrix;
use msc::penalty::{PenaltyKind, PenaltySpec};
use msc::solvers::{check_optimality, solve_penalized_ls, ProblemSpec, SolveOptions};

#[derive(Parser)]
#[command(name = "msc", version, about = "Sparse penalized least-squares toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scalar threshold (prox) rule at a point or over a grid.
    Prox(ProxArgs),
    /// Compute a diagonal convexity bound for a Gram matrix CSV.
    Bound(BoundArgs),
    /// Solve one penalized least-squares problem from a problem JSON.
    Solve(SolveArgs),
    /// Run the iterative maximally sparse driver on a problem JSON.
    Imsc(ImscArgs),
    /// Run the multi-algorithm sparse deconvolution benchmark.
    DeconvBench(BenchArgs),
    /// Re-run the benchmark over a grid of uniform penalty weights.
    LambdaSweep(SweepArgs),
    /// Add seeded noise to a clean signal and threshold it elementwise.
    DenoiseDemo(DenoiseArgs),
}

#[derive(Args)]
struct ProxArgs {
    /// Penalty kind: abs, log, atan, hard or lp.
    #[arg(long, default_value = "atan")]
    kind: String,
    #[arg(long)]
    lambda: f64,
    /// Non-convexity parameter (log/atan).
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Exponent for lp.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Single input value; prints a JSON record.
    #[arg(long, conflicts_with = "grid")]
    y: Option<f64>,
    /// Curve grid "lo:step:hi"; emits CSV (y, prox) rows.
    #[arg(long)]
    grid: Option<String>,
    /// Write the grid CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Gram matrix CSV (square, symmetric).
    #[arg(long)]
    gram: PathBuf,
    /// simple or sdp.
    #[arg(long, default_value = "sdp")]
    method: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the bound JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem description JSON.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    /// Skip the convexity gate (caller asserts the cost is convex).
    #[arg(long)]
    assume_convex: bool,
    /// Skip the exact coordinate polish pass.
    #[arg(long)]
    no_polish: bool,
    /// Write the solve report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the solution vector CSV here.
    #[arg(long)]
    x_out: Option<PathBuf>,
    /// Write the optimality scatter (a*x, g) CSV here.
    #[arg(long)]
    scatter: Option<PathBuf>,
}

#[derive(Args)]
struct ImscArgs {
    /// Problem description JSON; its penalty field seeds the config when
    /// it is log or atan, and its a field is ignored (the driver derives a).
    #[arg(long)]
    problem: PathBuf,
    /// Driver config JSON; flags below override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    /// log or atan.
    #[arg(long)]
    penalty: Option<String>,
    /// simple or sdp.
    #[arg(long)]
    bound_method: Option<String>,
    #[arg(long)]
    bound_tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    support_eps: Option<f64>,
    /// Write the run report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the solution vector CSV here.
    #[arg(long)]
    x_out: Option<PathBuf>,
    /// Write the full per-round trace JSON here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the terminal round's optimality scatter CSV here.
    #[arg(long)]
    scatter: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated algorithm ids (e.g. "l1,l1+debias,imsc_atan").
    #[arg(long)]
    algorithms: Option<String>,
    /// Output prefix: writes PREFIX_summary.csv, PREFIX_trials.csv, PREFIX.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated uniform penalty weights.
    #[arg(long, default_value = "0.5,1,1.5,2,3,4,6")]
    grid: String,
    /// Output prefix: writes PREFIX_sweep.csv and PREFIX.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DenoiseArgs {
    /// Clean signal CSV (one value per line); a built-in spike signal is
    /// used when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// abs, hard, log or atan.
    #[arg(long, default_value = "atan")]
    kind: String,
    /// Threshold T; defaults to 3 * sigma.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix: writes PREFIX.json and PREFIX.csv (clean,noisy,denoised).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": { "kind": error_kind(&err), "message": err.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn error_kind(err: &MscError) -> &'static str {
    match err {
        MscError::ParameterDomain(_) => "parameter_domain",
        MscError::ConvexityViolation(_) => "convexity_violation",
        MscError::Unsupported(_) => "unsupported",
        MscError::DimensionMismatch(_) => "dimension_mismatch",
        MscError::Unstable(_) => "unstable",
        MscError::InvalidInput(_) => "invalid_input",
        MscError::ConvergenceFailure { .. } => "convergence_failure",
        MscError::SizeLimit(_) => "size_limit",
        MscError::Io(_) => "io",
        MscError::Json(_) => "json",
        MscError::Parse(_) => "parse",
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Prox(a) => cmd_prox(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Imsc(a) => cmd_imsc(a),
        Command::DeconvBench(a) => cmd_bench(a),
        Command::LambdaSweep(a) => cmd_sweep(a),
        Command::DenoiseDemo(a) => cmd_denoise(a),
    }
}

fn parse_method(s: &str) -> Result<BoundMethod> {
    match s {
        "simple" => Ok(BoundMethod::Simple),
        "sdp" => Ok(BoundMethod::Sdp),
        other => Err(MscError::Parse(format!(
            "unknown bound method '{other}' (expected simple or sdp)"
        ))),
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| MscError::Parse(format!("expected a number, got '{t}'")))
        })
        .collect()
}

fn parse_algorithms(s: &str) -> Result<Vec<AlgorithmId>> {
    let list: Vec<AlgorithmId> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(AlgorithmId::from_str)
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(MscError::InvalidInput("algorithm list is empty".into()));
    }
    Ok(list)
}

/// Write to stdout, treating a closed pipe as success so `msc ... | head`
/// exits cleanly.
fn print_out(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text)?;
            Ok(())
        }
        None => print_out(text),
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            print_out(&s)
        }
    }
}

fn cmd_prox(args: ProxArgs) -> Result<()> {
    let kind: PenaltyKind = args.kind.parse()?;
    let pen = PenaltySpec::with_kind(kind, args.a, args.p)?;
    if let Some(grid) = &args.grid {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            return Err(MscError::Parse(format!(
                "grid must be lo:step:hi, got '{grid}'"
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| MscError::Parse(format!("bad grid start '{}'", parts[0])))?;
        let step: f64 = parts[1]
            .parse()
            .map_err(|_| MscError::Parse(format!("bad grid step '{}'", parts[1])))?;
        let hi: f64 = parts[2]
            .parse()
            .map_err(|_| MscError::Parse(format!("bad grid end '{}'", parts[2])))?;
        if !(step > 0.0 && step.is_finite()) || hi < lo {
            return Err(MscError::Parse(format!("degenerate grid '{grid}'")));
        }
        let mut csv = String::from("y,prox\n");
        let mut y = lo;
        while y <= hi + 1e-12 * step {
            csv.push_str(&format!("{},{}\n", fmt_float(y), fmt_float(pen.prox(y, args.lambda)?)));
            y += step;
        }
        return emit(args.out.as_deref(), &csv);
    }
    let y = args.y.ok_or_else(|| {
        MscError::InvalidInput("give --y VALUE or --grid lo:step:hi".into())
    })?;
    let value = pen.prox(y, args.lambda)?;
    let mut record = serde_json::json!({
        "kind": kind.as_str(),
        "lambda": args.lambda,
        "a": args.a,
        "y": y,
        "prox": value,
    });
    if matches!(kind, PenaltyKind::Log | PenaltyKind::Atan) {
        let props = pen.threshold_props(args.lambda)?;
        record["threshold"] = serde_json::json!(props.threshold);
        record["slope_at_threshold"] = serde_json::json!(props.slope);
        record["curvature_at_threshold"] = serde_json::json!(props.curvature);
    }
    emit_json(args.out.as_deref(), &record)
}

fn cmd_bound(args: BoundArgs) -> Result<()> {
    let g = read_matrix_csv(&args.gram)?;
    let gram = GramMatrix::from_matrix(g)?;
    let method = parse_method(&args.method)?;
    let bound = diagonal_bound(&gram, method, args.tol)?;
    let record = serde_json::json!({
        "r": bound.r,
        "sum": bound.sum(),
        "alpha_min": bound.alpha_min,
        "margin": bound.margin,
        "method": bound.method.as_str(),
        "iterations": bound.iterations,
    });
    emit_json(args.out.as_deref(), &record)
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let pf = ProblemFile::load(&args.problem)?;
    let base = args.problem.parent().unwrap_or(Path::new("."));
    let spec = pf.build(base)?;
    let opts = SolveOptions {
        max_iter: args.max_iter,
        rel_tol: args.rel_tol,
        assume_convex: args.assume_convex,
        polish: !args.no_polish,
        ..Default::default()
    };
    let report = solve_penalized_ls(&spec, &opts)?;
    if let Some(p) = &args.x_out {
        write_vector_csv(p, &DVector::from_vec(report.x.clone()))?;
    }
    if let Some(p) = &args.scatter {
        let (_, scatter) = check_optimality(&spec, &DVector::from_vec(report.x.clone()))?;
        write_scatter_csv(p, &scatter)?;
    }
    emit_json(args.out.as_deref(), &report)
}

fn cmd_imsc(args: ImscArgs) -> Result<()> {
    let pf = ProblemFile::load(&args.problem)?;
    let base = args.problem.parent().unwrap_or(Path::new("."));
    let spec = pf.build(base)?;

    let mut cfg = match &args.config {
        Some(p) => serde_json::from_str::<ImscConfig>(&fs::read_to_string(p)?)?,
        None => {
            let mut c = ImscConfig::default();
            if matches!(pf.penalty, PenaltyKind::Log | PenaltyKind::Atan) {
                c.penalty = pf.penalty;
            }
            c
        }
    };
    if let Some(b) = args.beta {
        cfg.beta = b;
    }
    if let Some(p) = &args.penalty {
        cfg.penalty = p.parse()?;
    }
    if let Some(m) = &args.bound_method {
        cfg.bound_method = parse_method(m)?;
    }
    if let Some(t) = args.bound_tol {
        cfg.bound_tol = t;
    }
    if let Some(m) = args.max_outer {
        cfg.max_outer = m;
    }
    if let Some(e) = args.support_eps {
        cfg.support_eps = e;
    }

    let (x, trace) = run_imsc(spec.op(), spec.y(), spec.lambda(), &cfg)?;

    if let Some(p) = &args.x_out {
        write_vector_csv(p, &x)?;
    }
    if let Some(p) = &args.trace {
        write_json(p, &trace)?;
    }
    if let Some(p) = &args.scatter {
        let last = trace.iterations.last().expect("trace is never empty");
        let scatter = if last.a.is_empty() {
            // Terminated on the first round: the solved problem was plain l1.
            let l1 = ProblemSpec::new(
                spec.op().clone(),
                spec.y().clone(),
                spec.lambda().to_vec(),
                PenaltyKind::Abs,
                vec![0.0; spec.size()],
            )?;
            check_optimality(&l1, &x)?.1
        } else {
            let sub_op = spec.op().subcolumns(&last.active)?;
            let sub_y = spec.y().clone();
            let sub_lambda: Vec<f64> =
                last.active.iter().map(|&i| spec.lambda()[i]).collect();
            let sub = ProblemSpec::new(
                sub_op,
                sub_y,
                sub_lambda,
                cfg.penalty,
                last.a.clone(),
            )?
            .with_certificate(last.r.clone())?;
            let x_sub = DVector::from_fn(last.active.len(), |i, _| x[last.active[i]]);
            check_optimality(&sub, &x_sub)?.1
        };
        write_scatter_csv(p, &scatter)?;
    }

    let report = serde_json::json!({
        "x": x.iter().copied().collect::<Vec<f64>>(),
        "outer_rounds": trace.iterations.len(),
        "support_sizes": trace.support_sizes(),
        "support": msc::imsc::support(&x, cfg.support_eps),
    });
    emit_json(args.out.as_deref(), &report)
}

fn load_bench_config(
    config: Option<&Path>,
    seed: Option<u64>,
    trials: Option<usize>,
    algorithms: Option<&str>,
) -> Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(p) => serde_json::from_str::<ExperimentConfig>(&fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(a) = algorithms {
        cfg.algorithms = parse_algorithms(a)?;
    }
    Ok(cfg)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let cfg = load_bench_config(
        args.config.as_deref(),
        args.seed,
        args.trials,
        args.algorithms.as_deref(),
    )?;
    let results = run_benchmark(&cfg)?;
    let summary = summary_csv(&results);
    if let Some(prefix) = &args.out {
        write_prefixed(prefix, "_summary.csv", &summary)?;
        write_prefixed(prefix, "_trials.csv", &trials_csv(&results))?;
        let mut json = serde_json::to_string_pretty(&results)?;
        json.push('\n');
        write_prefixed(prefix, ".json", &json)?;
    }
    print_out(&summary)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_bench_config(
        args.config.as_deref(),
        args.seed,
        args.trials,
        args.algorithms.as_deref(),
    )?;
    let grid = parse_f64_list(&args.grid)?;
    let results = lambda_sweep(&cfg, &grid)?;
    let csv = sweep_csv(&results);
    if let Some(prefix) = &args.out {
        write_prefixed(prefix, "_sweep.csv", &csv)?;
        let mut json = serde_json::to_string_pretty(&results)?;
        json.push('\n');
        write_prefixed(prefix, ".json", &json)?;
    }
    print_out(&csv)
}

/// Appends `suffix` to the prefix's file name (not its extension).
fn write_prefixed(prefix: &Path, suffix: &str, content: &str) -> Result<()> {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    fs::write(PathBuf::from(name), content)?;
    Ok(())
}

fn cmd_denoise(args: DenoiseArgs) -> Result<()> {
    let clean = match &args.input {
        Some(p) => read_vector_csv(p)?,
        None => builtin_spike_signal(),
    };
    let kind: PenaltyKind = args.kind.parse()?;
    let threshold = args.threshold.unwrap_or(3.0 * args.sigma);
    let report = denoise_demo(&clean, args.sigma, kind, threshold, args.seed)?;
    if let Some(prefix) = &args.out {
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        write_prefixed(prefix, ".json", &json)?;
        let mut csv = String::from("clean,noisy,denoised\n");
        for i in 0..clean.len() {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_float(clean[i]),
                fmt_float(report.noisy[i]),
                fmt_float(report.denoised[i])
            ));
        }
        write_prefixed(prefix, ".csv", &csv)?;
    }
    let line = serde_json::json!({
        "kind": kind.as_str(),
        "threshold": threshold,
        "sigma": args.sigma,
        "rmse_noisy": report.rmse_noisy,
        "rmse_denoised": report.rmse_denoised,
    });
    print_out(&format!("{line}\n"))
}

/// 64-sample spike train used when denoise-demo gets no input file.
fn builtin_spike_signal() -> DVector<f64> {
    let mut x = DVector::zeros(64);
    for (pos, amp) in [(8, 4.0), (20, -3.0), (33, 2.5), (47, 5.0), (55, -4.2)] {
        x[pos] = amp;
    }
    x
}
