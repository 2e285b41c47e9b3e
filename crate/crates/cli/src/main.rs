//! `orc`: edge curvature from the command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use orc_core::batch::{default_tolerance, reference_method, EdgeTrace};
use orc_core::{
    run, run_compare, CurvatureReport, EdgeSelection, Fixture, InputFormat, Instance, Method, NumericMode, QsimConfig,
    RunError, RunMeta, RunOptions, RunOutput,
};

const EXIT_COMPARE_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "orc", version, about = "Ollivier-Ricci curvature of graph edges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature of the selected edges by one method.
    Compute(ComputeArgs),
    /// Run a simulated method next to its classical reference and report the differences.
    Compare(ComputeArgs),
    /// Write a built-in sample input.
    Fixture {
        /// appendix_a, path4 or star
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ComputeArgs {
    #[arg(long)]
    input: PathBuf,
    /// edge_list, json or cost_matrix; guessed from the file when absent
    #[arg(long)]
    format: Option<String>,
    /// lp, tree, assignment, brute_force, qsim_tree, qsim_pq or compare
    #[arg(long)]
    method: Option<String>,
    /// Edge as `u,v`; repeat for several. Defaults to every edge.
    #[arg(long = "edge", value_parser = parse_edge)]
    edges: Vec<(usize, usize)>,
    #[arg(long, conflicts_with = "edges")]
    all_edges: bool,
    /// rational or float
    #[arg(long, default_value = "rational")]
    numeric: String,
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate tree-route overlaps from this many measurement shots.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    include_endpoints: bool,
    /// Largest permutation-register dimension p^p accepted by qsim_pq.
    #[arg(long, default_value_t = 1_000_000)]
    cap: usize,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv
    #[arg(long, default_value = "json")]
    out_format: String,
    /// compare: absolute tolerance, or standard errors in shot mode
    #[arg(long)]
    tol: Option<f64>,
    /// Write per-stage audit records of the simulated routes here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Record wall time in the report metadata (makes reports non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long, hide = true)]
    debug_corrupt_alpha_q: Option<f64>,
}

fn parse_edge(s: &str) -> Result<(usize, usize), String> {
    let (u, v) = s.split_once(',').ok_or_else(|| format!("expected u,v, got '{s}'"))?;
    let idx = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad vertex '{t}'"));
    Ok((idx(u)?, idx(v)?))
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl ToString) -> Self {
        Self { code: EXIT_CONFIG, msg: msg.to_string() }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Self { code: e.exit_code() as u8, msg: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(args) => compute(&args, false),
        Command::Compare(args) => compute(&args, true),
        Command::Fixture { name, out } => fixture(&name, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn fixture(name: &str, out: Option<&Path>) -> Result<u8, Failure> {
    let fx: Fixture = name.parse().map_err(|e| Failure::config(format!("UnknownFixture: {e}")))?;
    emit(out, &fx.contents())?;
    Ok(0)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::config(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::config(format!("stdout: {e}"))),
    }
}

fn guess_format(path: &Path, text: &str) -> InputFormat {
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if !is_json {
        return InputFormat::EdgeList;
    }
    match serde_json::from_str::<serde_json::Value>(text) {
        Ok(v) if v.get("cost").is_some() => InputFormat::CostMatrix,
        _ => InputFormat::Json,
    }
}

fn compute(args: &ComputeArgs, compare_cmd: bool) -> Result<u8, Failure> {
    let started = Instant::now();
    let text =
        fs::read_to_string(&args.input).map_err(|e| Failure::config(format!("{}: {e}", args.input.display())))?;
    let format = match &args.format {
        Some(f) => f.parse::<InputFormat>().map_err(Failure::config)?,
        None => guess_format(&args.input, &text),
    };
    let instance =
        Instance::parse(&text, format).map_err(|e| Failure::config(format!("{}: {e}", args.input.display())))?;
    let numeric: NumericMode = args.numeric.parse().map_err(Failure::config)?;
    if !matches!(args.out_format.as_str(), "json" | "csv") {
        return Err(Failure::config(format!("unknown output format '{}' (expected json or csv)", args.out_format)));
    }

    let method = match args.method.as_deref() {
        None | Some("compare") => None,
        Some(m) => Some(m.parse::<Method>().map_err(Failure::config)?),
    };
    let compare = compare_cmd || args.method.as_deref() == Some("compare");
    let simulated = match (compare, method) {
        (false, Some(m)) => m,
        (false, None) => return Err(Failure::config("--method is required")),
        (true, Some(m)) if reference_method(m).is_some() => m,
        (true, Some(m)) => {
            return Err(Failure::config(format!("compare needs qsim_tree or qsim_pq, got {m}")));
        }
        (true, None) => match &instance {
            Instance::Graph(g) if orc_core::graph::verify_tree(g) => Method::QsimTree,
            _ => Method::QsimPq,
        },
    };

    let opts = RunOptions {
        numeric,
        edges: if args.edges.is_empty() { EdgeSelection::All } else { EdgeSelection::Edges(args.edges.clone()) },
        qsim: QsimConfig {
            margin: args.margin,
            eps: args.eps,
            seed: args.seed,
            shots: args.shots,
            max_iter: args.max_iter,
            cap: args.cap,
            include_endpoints: args.include_endpoints,
            alpha_q_corruption: args.debug_corrupt_alpha_q,
            ..QsimConfig::default()
        },
        trace: args.trace.is_some(),
        parallel: true,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;

    let (output, summary) = if compare {
        let (out, summary) = pool.install(|| run_compare(&instance, simulated, &opts, args.tol))?;
        (out, Some(summary))
    } else {
        (pool.install(|| run(&instance, simulated, &opts))?, None)
    };

    let tol = summary.as_ref().map(|s| s.tol).or(args.tol);
    let config = serde_json::json!({
        "command": if compare { "compare" } else { "compute" },
        "input": args.input.display().to_string(),
        "format": format,
        "method": simulated,
        "edges": opts.edges,
        "numeric": numeric,
        "margin": args.margin,
        "eps": args.eps,
        "seed": args.seed,
        "shots": args.shots,
        "include_endpoints": args.include_endpoints,
        "cap": args.cap,
        "max_iter": args.max_iter,
        "tol": tol.or_else(|| compare.then(|| default_tolerance(args.shots.is_some()))),
        "alpha_q_corruption": args.debug_corrupt_alpha_q,
    });
    let RunOutput { records, skipped, traces, .. } = output;
    let report = CurvatureReport {
        records,
        skipped,
        summary: summary.clone(),
        meta: RunMeta {
            version: orc_core::VERSION.to_string(),
            config,
            wall_time_ms: args.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
        },
    };

    if let Some(path) = &args.trace {
        write_trace(path, &traces)?;
    }
    let text = match args.out_format.as_str() {
        "csv" => to_csv(&report)?,
        _ => report.to_json(),
    };
    emit(args.out.as_deref(), &text)?;

    match summary {
        Some(s) => {
            eprintln!(
                "max_abs_diff={:e} max_rel_diff={:e} tol={:e}{} {}",
                s.max_abs_diff,
                s.max_rel_diff,
                s.tol,
                if s.shot_mode { " (standard errors)" } else { "" },
                if s.passed { "PASS" } else { "FAIL" }
            );
            Ok(if s.passed { 0 } else { EXIT_COMPARE_FAILED })
        }
        None => Ok(0),
    }
}

fn write_trace(path: &Path, traces: &[EdgeTrace]) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(traces).expect("trace serializes");
    text.push('\n');
    emit(Some(path), &text)
}

fn to_csv(report: &CurvatureReport) -> Result<String, Failure> {
    let compare = report.summary.is_some();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x", "y", "p", "q", "method", "w1", "dxy", "curvature"];
    if compare {
        header.extend(["w1_classical", "w1_qsim", "abs_diff", "rel_diff"]);
    }
    let csv_err = |e: csv::Error| Failure::config(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in &report.records {
        let mut row = vec![
            r.x.to_string(),
            r.y.to_string(),
            r.p.to_string(),
            r.q.to_string(),
            r.method.to_string(),
            r.w1.to_string(),
            r.dxy.to_string(),
            r.curvature.to_string(),
        ];
        if compare {
            row.push(opt(r.w1_classical.as_ref().map(ToString::to_string)));
            row.push(opt(r.w1_qsim.as_ref().map(ToString::to_string)));
            row.push(opt(r.abs_diff.map(|v| v.to_string())));
            row.push(opt(r.rel_diff.map(|v| v.to_string())));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
