//! Batch curvature over the edges of one instance, shared by the CLI and the
//! Python bindings.
//!
//! A run has two phases. Preparation builds every selected neighborhood and
//! checks it against the method; failures there are configuration errors.
//! Execution then runs edge-parallel and keeps the input edge order.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    all_pairs_geodesic, json_number, neighborhood_on, parse_edge_list, parse_json_graph, verify_tree, GeodesicMatrix,
    Graph, GraphError, LocalNeighborhood, NeighborhoodOptions,
};
use crate::qorc::{checked_dim, cost_table, AuditRecord, DistanceTable, PqSimulator, QsimConfig, TreeSimulator};
use crate::report::{CompareSummary, EdgeRecord, SkippedEdge};
use crate::scalar::{Rational, Scalar, Value};
use crate::transport::{curvature, Method, TransportError, BRUTE_FORCE_MAX};

/// Input file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    EdgeList,
    Json,
    /// `{"cost": [[...]], "dxy": r}`; entries may be numbers or `"num/den"` strings.
    CostMatrix,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge_list" => Ok(Self::EdgeList),
            "json" => Ok(Self::Json),
            "cost_matrix" => Ok(Self::CostMatrix),
            _ => Err(format!("unknown input format '{s}' (expected edge_list, json or cost_matrix)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericMode {
    #[default]
    Rational,
    Float,
}

impl std::str::FromStr for NumericMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rational" => Ok(Self::Rational),
            "float" => Ok(Self::Float),
            _ => Err(format!("unknown numeric mode '{s}' (expected rational or float)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSelection {
    /// Every edge; edges with an empty side are skipped and listed.
    #[default]
    All,
    Edges(Vec<(usize, usize)>),
}

/// A graph, or a bare cost matrix with its edge length.
#[derive(Debug, Clone)]
pub enum Instance {
    Graph(Graph<Rational>),
    Cost { cost: Vec<Vec<Rational>>, dxy: Rational },
}

impl Instance {
    pub fn parse(text: &str, format: InputFormat) -> Result<Self, GraphError> {
        match format {
            InputFormat::EdgeList => parse_edge_list(text).map(Instance::Graph),
            InputFormat::Json => parse_json_graph(text).map(Instance::Graph),
            InputFormat::CostMatrix => {
                let (cost, dxy) = parse_cost_matrix(text)?;
                Ok(Instance::Cost { cost, dxy })
            }
        }
    }

    pub fn load(path: &Path, format: InputFormat) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, format)
    }
}

#[derive(Deserialize)]
struct CostDoc {
    cost: Vec<Vec<serde_json::Value>>,
    dxy: serde_json::Value,
}

/// Parses `{"cost": [[...]], "dxy": r}` exactly.
pub fn parse_cost_matrix(text: &str) -> Result<(Vec<Vec<Rational>>, Rational), GraphError> {
    let doc: CostDoc =
        serde_json::from_str(text).map_err(|e| GraphError::Parse { line: e.line(), msg: e.to_string() })?;
    let cost = doc
        .cost
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, v)| json_number(v).ok_or_else(|| GraphError::InvalidCost(format!("entry ({i},{j}) = {v}"))))
                .collect()
        })
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    let dxy = json_number(&doc.dxy).ok_or_else(|| GraphError::InvalidCost(format!("dxy = {}", doc.dxy)))?;
    LocalNeighborhood::from_cost(cost.clone(), dxy.clone())?;
    Ok((cost, dxy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub numeric: NumericMode,
    pub edges: EdgeSelection,
    /// Simulator settings; `include_endpoints` here also shapes classical neighborhoods.
    pub qsim: QsimConfig,
    /// Collect per-stage audit records for simulated routes.
    pub trace: bool,
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            numeric: NumericMode::Rational,
            edges: EdgeSelection::All,
            qsim: QsimConfig::default(),
            trace: false,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("config error{}: {cause}", at(*.edge))]
    Config { edge: Option<(usize, usize)>, cause: String },
    #[error("solver error{}: {cause}", at(*.edge))]
    Solver { edge: Option<(usize, usize)>, cause: String },
}

fn at(edge: Option<(usize, usize)>) -> String {
    edge.map_or_else(String::new, |(x, y)| format!(" on edge ({x},{y})"))
}

impl RunError {
    /// 2 for configuration errors, 3 for solver errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => 2,
            RunError::Solver { .. } => 3,
        }
    }

    fn config(edge: Option<(usize, usize)>, cause: impl ToString) -> Self {
        RunError::Config { edge, cause: cause.to_string() }
    }

    fn solver(edge: Option<(usize, usize)>, cause: impl ToString) -> Self {
        RunError::Solver { edge, cause: cause.to_string() }
    }
}

/// Audit records of one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTrace {
    pub x: usize,
    pub y: usize,
    pub stages: Vec<AuditRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<EdgeRecord>,
    pub skipped: Vec<SkippedEdge>,
    pub traces: Vec<EdgeTrace>,
    /// Propagated standard error of each record's W1 (shot mode only).
    pub std_errors: Vec<Option<f64>>,
}

struct Prepared<S> {
    neighborhoods: Vec<LocalNeighborhood<S>>,
    skipped: Vec<SkippedEdge>,
    /// All-pairs distances of a graph input.
    geodesic: Option<GeodesicMatrix<S>>,
    is_tree: Option<bool>,
}

impl<S: Scalar> Prepared<S> {
    /// Distance table indexed by the neighborhood labels, for the simulated routes.
    fn table(&self) -> Result<DistanceTable, RunError> {
        let table = match (&self.geodesic, self.neighborhoods.first()) {
            (Some(dg), _) => DistanceTable::from_geodesic(dg),
            (None, Some(nb)) => {
                let as_float = LocalNeighborhood {
                    cost: nb.cost.iter().map(|r| r.iter().map(S::to_f64).collect()).collect(),
                    dxy: nb.dxy.to_f64(),
                    xs: nb.xs.clone(),
                    ys: nb.ys.clone(),
                    x: nb.x,
                    y: nb.y,
                    radii: None,
                    on_tree: None,
                };
                DistanceTable::from_rows(&cost_table(&as_float))
            }
            (None, None) => return Err(RunError::config(None, "no edges selected")),
        };
        table.map_err(|e| RunError::solver(None, e))
    }
}

fn prepare<S: Scalar>(instance: &Instance, opts: &RunOptions) -> Result<Prepared<S>, RunError> {
    let nb_opts = NeighborhoodOptions { include_endpoints: opts.qsim.include_endpoints };
    match instance {
        Instance::Graph(g) => {
            let g: Graph<S> = g.to_scalar();
            let dg = all_pairs_geodesic(&g);
            let is_tree = verify_tree(&g);
            let mut neighborhoods = Vec::new();
            let mut skipped = Vec::new();
            match &opts.edges {
                EdgeSelection::All => {
                    for e in g.edges() {
                        match neighborhood_on(&g, &dg, e.u, e.v, nb_opts, is_tree) {
                            Ok(nb) => neighborhoods.push(nb),
                            Err(err @ GraphError::EmptyNeighborhood { .. }) => {
                                skipped.push(SkippedEdge { x: e.u, y: e.v, reason: err.to_string() })
                            }
                            Err(err) => return Err(RunError::config(Some((e.u, e.v)), err)),
                        }
                    }
                }
                EdgeSelection::Edges(list) => {
                    for &(x, y) in list {
                        let nb = neighborhood_on(&g, &dg, x, y, nb_opts, is_tree)
                            .map_err(|err| RunError::config(Some((x, y)), err))?;
                        neighborhoods.push(nb);
                    }
                }
            }
            Ok(Prepared { neighborhoods, skipped, geodesic: Some(dg), is_tree: Some(is_tree) })
        }
        Instance::Cost { cost, dxy } => {
            if let EdgeSelection::Edges(list) = &opts.edges {
                if let Some(&bad) = list.iter().find(|&&e| e != (0, 1)) {
                    return Err(RunError::config(Some(bad), "a cost-matrix instance has the single edge (0,1)"));
                }
            }
            if opts.qsim.include_endpoints {
                return Err(RunError::config(None, "include_endpoints needs a graph input"));
            }
            let cost: Vec<Vec<S>> = cost.iter().map(|row| row.iter().map(S::from_rational).collect()).collect();
            let nb = LocalNeighborhood::from_cost(cost, S::from_rational(dxy))
                .map_err(|e| RunError::config(Some((0, 1)), e))?;
            let count = match &opts.edges {
                EdgeSelection::All => 1,
                EdgeSelection::Edges(list) => list.len(),
            };
            Ok(Prepared { neighborhoods: vec![nb; count], skipped: Vec::new(), geodesic: None, is_tree: None })
        }
    }
}

/// Rejects method/instance combinations before any solver runs.
fn check_compatible<S: Scalar>(prep: &Prepared<S>, method: Method, cap: usize) -> Result<(), RunError> {
    let mismatch = |edge, reason: String| RunError::config(edge, TransportError::MethodMismatch { method, reason });
    match method {
        Method::Tree | Method::QsimTree if prep.is_tree != Some(true) => {
            let reason = match prep.is_tree {
                None => "requires a graph input that is a tree".to_string(),
                Some(_) => "the graph is not a tree".to_string(),
            };
            return Err(mismatch(None, reason));
        }
        _ => {}
    }
    for nb in &prep.neighborhoods {
        let edge = Some((nb.x, nb.y));
        let (p, q) = (nb.p(), nb.q());
        match method {
            Method::Assignment | Method::BruteForce if p != q => {
                return Err(mismatch(edge, format!("requires p = q, got p={p} q={q}")));
            }
            Method::BruteForce if p > BRUTE_FORCE_MAX => {
                return Err(RunError::config(edge, TransportError::TooLarge { size: p, limit: BRUTE_FORCE_MAX }));
            }
            Method::QsimPq if p != q => {
                return Err(RunError::config(edge, crate::qorc::PipelineError::NotSquare { p, q }));
            }
            Method::QsimPq => {
                checked_dim(p, cap).map_err(|e| RunError::config(edge, e))?;
            }
            _ => {}
        }
    }
    Ok(())
}

fn map_edges<T: Sync, R: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

struct EdgeOut {
    record: EdgeRecord,
    trace: Option<EdgeTrace>,
    std_error: Option<f64>,
}

fn classical_edges<S: Scalar>(prep: &Prepared<S>, method: Method, opts: &RunOptions) -> Result<Vec<EdgeOut>, RunError> {
    map_edges(&prep.neighborhoods, opts.parallel, |nb| {
        let res = curvature(nb, method).map_err(|e| RunError::solver(Some((nb.x, nb.y)), e))?;
        Ok(EdgeOut {
            record: EdgeRecord {
                x: res.x,
                y: res.y,
                p: nb.p(),
                q: nb.q(),
                w1: res.w1.to_value(),
                dxy: res.dxy.to_value(),
                curvature: res.curvature.to_value(),
                method,
                diagnostics: None,
                w1_classical: None,
                w1_qsim: None,
                abs_diff: None,
                rel_diff: None,
            },
            trace: None,
            std_error: None,
        })
    })
    .into_iter()
    .collect()
}

fn simulated_edges(prep: &Prepared<f64>, method: Method, opts: &RunOptions) -> Result<Vec<EdgeOut>, RunError> {
    let table = &prep.table()?;
    let record = |nb: &LocalNeighborhood<f64>, w1: f64, dxy: f64, curvature: f64, diagnostics| EdgeRecord {
        x: nb.x,
        y: nb.y,
        p: nb.p(),
        q: nb.q(),
        w1: Value::Float(w1),
        dxy: Value::Float(dxy),
        curvature: Value::Float(curvature),
        method,
        diagnostics: Some(diagnostics),
        w1_classical: None,
        w1_qsim: None,
        abs_diff: None,
        rel_diff: None,
    };
    match method {
        Method::QsimTree => {
            let sim = TreeSimulator::new(table, &opts.qsim).map_err(|e| RunError::solver(None, e))?;
            let alpha_q = sim.meta().alpha_q;
            map_edges(&prep.neighborhoods, opts.parallel, |nb| {
                let out = sim.edge(nb).map_err(|e| RunError::solver(Some((nb.x, nb.y)), e))?;
                let r = &out.result;
                let diag = serde_json::json!({
                    "alpha_q": alpha_q,
                    "x_overlap": out.x_sum.value,
                    "y_overlap": out.y_sum.value,
                    "dxy_overlap": out.dxy_overlap,
                    "std_error": out.std_error,
                });
                Ok(EdgeOut {
                    record: record(nb, r.w1, r.dxy, r.curvature, diag),
                    trace: opts.trace.then(|| EdgeTrace { x: nb.x, y: nb.y, stages: sim.audit().to_vec() }),
                    std_error: out.std_error,
                })
            })
            .into_iter()
            .collect()
        }
        Method::QsimPq => {
            let sim = PqSimulator::new(table, &opts.qsim).map_err(|e| RunError::solver(None, e))?;
            let alpha_q = sim.meta().alpha_q;
            map_edges(&prep.neighborhoods, opts.parallel, |nb| {
                let out = sim.edge(nb).map_err(|e| RunError::solver(Some((nb.x, nb.y)), e))?;
                let r = &out.result;
                let est = &out.estimate;
                let diag = serde_json::json!({
                    "alpha_q": alpha_q,
                    "kappa_a": out.kappa_a,
                    "min_eigenvalue": est.value,
                    "iterations": est.iterations,
                    "initial_overlap": est.initial_overlap,
                    "gap_proxy": if est.gap_proxy.is_finite() { Some(est.gap_proxy) } else { None },
                    "converged": est.converged,
                    "zero_on_range": est.zero_on_range,
                });
                Ok(EdgeOut {
                    record: record(nb, r.w1, r.dxy, r.curvature, diag),
                    trace: opts.trace.then(|| EdgeTrace { x: nb.x, y: nb.y, stages: out.audit.clone() }),
                    std_error: None,
                })
            })
            .into_iter()
            .collect()
        }
        _ => unreachable!("classical method routed to the simulator"),
    }
}

fn assemble(outs: Vec<EdgeOut>, skipped: Vec<SkippedEdge>) -> RunOutput {
    let mut out = RunOutput { records: Vec::new(), skipped, traces: Vec::new(), std_errors: Vec::new() };
    for e in outs {
        out.records.push(e.record);
        out.traces.extend(e.trace);
        out.std_errors.push(e.std_error);
    }
    out
}

fn run_typed<S: Scalar>(instance: &Instance, method: Method, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let prep = prepare::<S>(instance, opts)?;
    check_compatible(&prep, method, opts.qsim.cap)?;
    Ok(assemble(classical_edges(&prep, method, opts)?, prep.skipped))
}

/// Curvature of every selected edge by `method`.
///
/// Simulated routes always use floating point; `opts.numeric` picks the
/// arithmetic of the classical ones.
pub fn run(instance: &Instance, method: Method, opts: &RunOptions) -> Result<RunOutput, RunError> {
    if method.is_simulated() {
        let prep = prepare::<f64>(instance, opts)?;
        check_compatible(&prep, method, opts.qsim.cap)?;
        return Ok(assemble(simulated_edges(&prep, method, opts)?, prep.skipped));
    }
    match opts.numeric {
        NumericMode::Rational => run_typed::<Rational>(instance, method, opts),
        NumericMode::Float => run_typed::<f64>(instance, method, opts),
    }
}

/// Classical reference for a simulated route.
pub fn reference_method(simulated: Method) -> Option<Method> {
    match simulated {
        Method::QsimTree => Some(Method::Tree),
        Method::QsimPq => Some(Method::Assignment),
        _ => None,
    }
}

/// Default compare tolerance: absolute, or a count of standard errors in shot mode.
pub fn default_tolerance(shot_mode: bool) -> f64 {
    if shot_mode {
        5.0
    } else {
        1e-8
    }
}

/// Absolute slack added to the shot-mode bound so that exactly representable
/// overlaps (standard error zero) are not failed by rounding.
const SHOT_FLOOR: f64 = 1e-8;

/// Runs `simulated` and its classical reference on the same edges and records
/// their differences.
pub fn run_compare(
    instance: &Instance,
    simulated: Method,
    opts: &RunOptions,
    tol: Option<f64>,
) -> Result<(RunOutput, CompareSummary), RunError> {
    let classical = reference_method(simulated).ok_or_else(|| {
        RunError::config(None, format!("compare needs a simulated method (qsim_tree or qsim_pq), got {simulated}"))
    })?;
    // Validate both routes before running either.
    let probe = prepare::<f64>(instance, opts)?;
    check_compatible(&probe, classical, opts.qsim.cap)?;
    check_compatible(&probe, simulated, opts.qsim.cap)?;

    let reference = run(instance, classical, opts)?;
    let mut sim = run(instance, simulated, opts)?;
    let shot_mode = simulated == Method::QsimTree && opts.qsim.shots.is_some();
    let tol = tol.unwrap_or_else(|| default_tolerance(shot_mode));

    let mut max_abs_diff: f64 = 0.0;
    let mut max_rel_diff: f64 = 0.0;
    let mut passed = true;
    for ((rec, oracle), se) in sim.records.iter_mut().zip(&reference.records).zip(&sim.std_errors) {
        let c = oracle.w1.to_f64().expect("classical value");
        let s = rec.w1.to_f64().expect("simulated value");
        let abs = (c - s).abs();
        let rel = if c != 0.0 { abs / c.abs() } else { abs };
        max_abs_diff = max_abs_diff.max(abs);
        max_rel_diff = max_rel_diff.max(rel);
        let bound = if shot_mode { tol * se.unwrap_or(0.0) + SHOT_FLOOR } else { tol };
        if abs.is_nan() || abs > bound {
            passed = false;
        }
        rec.w1_classical = Some(oracle.w1.clone());
        rec.w1_qsim = Some(rec.w1.clone());
        rec.abs_diff = Some(abs);
        rec.rel_diff = Some(rel);
    }
    let summary = CompareSummary { classical, simulated, max_abs_diff, max_rel_diff, tol, shot_mode, passed };
    Ok((sim, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Fixture;

    fn opts(edges: EdgeSelection) -> RunOptions {
        RunOptions { edges, ..RunOptions::default() }
    }

    #[test]
    fn appendix_a_lp() {
        let inst = Instance::parse(&Fixture::AppendixA.contents(), InputFormat::CostMatrix).unwrap();
        let out = run(&inst, Method::Lp, &opts(EdgeSelection::All)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].w1, Value::Exact("25/12".into()));
        assert_eq!(out.records[0].curvature, Value::Exact("-13/12".into()));
    }

    #[test]
    fn leaf_edges_skipped_under_all_edges() {
        let inst = Instance::parse(&Fixture::Path4.contents(), InputFormat::EdgeList).unwrap();
        let out = run(&inst, Method::Tree, &opts(EdgeSelection::All)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].curvature, Value::Exact("-2".into()));
        assert_eq!(out.skipped.len(), 2);
        let err = run(&inst, Method::Tree, &opts(EdgeSelection::Edges(vec![(0, 1)]))).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_errors() {
        let a = Instance::parse(&Fixture::AppendixA.contents(), InputFormat::CostMatrix).unwrap();
        let err = run(&a, Method::QsimPq, &opts(EdgeSelection::All)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("NotSquare"), "{err}");
        assert_eq!(run(&a, Method::Tree, &RunOptions::default()).unwrap_err().exit_code(), 2);
        assert_eq!(run(&a, Method::Lp, &opts(EdgeSelection::Edges(vec![(1, 2)]))).unwrap_err().exit_code(), 2);
        let cyc = Instance::parse("0 1\n1 2\n2 0\n", InputFormat::EdgeList).unwrap();
        assert_eq!(run(&cyc, Method::QsimTree, &RunOptions::default()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn compare_tree_route() {
        let inst = Instance::parse("0 1\n1 2\n2 3\n1 4 2\n2 5 1/2\n", InputFormat::EdgeList).unwrap();
        let (out, summary) = run_compare(&inst, Method::QsimTree, &RunOptions::default(), None).unwrap();
        assert!(summary.passed, "{summary:?}");
        assert!(out.records.iter().all(|r| r.abs_diff.unwrap() < 1e-10));
    }

    #[test]
    fn corrupted_scale_fails_compare() {
        let inst = Instance::parse(&Fixture::Star.contents(), InputFormat::EdgeList).unwrap();
        let mut o = opts(EdgeSelection::All);
        o.qsim.include_endpoints = true;
        let (_, ok) = run_compare(&inst, Method::QsimTree, &o, None).unwrap();
        assert!(ok.passed);
        o.qsim.alpha_q_corruption = Some(1.01);
        let (_, bad) = run_compare(&inst, Method::QsimTree, &o, None).unwrap();
        assert!(!bad.passed && bad.max_abs_diff > 1e-3);
    }

    #[test]
    fn float_and_sequential_agree() {
        let inst = Instance::parse("0 1\n1 2\n2 3\n3 0\n0 2 3/2\n", InputFormat::EdgeList).unwrap();
        let exact = run(&inst, Method::Lp, &RunOptions::default()).unwrap();
        let float = run(
            &inst,
            Method::Lp,
            &RunOptions { numeric: NumericMode::Float, parallel: false, ..RunOptions::default() },
        )
        .unwrap();
        for (a, b) in exact.records.iter().zip(&float.records) {
            assert!((a.w1.to_f64().unwrap() - b.w1.to_f64().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_matrix_parsing() {
        let (cost, dxy) = parse_cost_matrix(r#"{"cost": [[1, "1/3"], [0.5, 2]], "dxy": 2}"#).unwrap();
        assert_eq!(cost[0][1], Rational::from_ratio(1, 3));
        assert_eq!(cost[1][0], Rational::from_ratio(1, 2));
        assert_eq!(dxy, Rational::from_i64(2));
        assert!(parse_cost_matrix(r#"{"cost": [[1, 2], [3]], "dxy": 1}"#).is_err());
        assert!(parse_cost_matrix(r#"{"cost": [[1]], "dxy": 0}"#).is_err());
    }
}
