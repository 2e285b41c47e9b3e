//! Weighted undirected graphs, exact all-pairs geodesics and edge neighborhoods.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::io::Read;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::scalar::{parse_rational, Rational, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid weight {weight} on edge ({u},{v}): weights must be finite and > 0")]
    InvalidWeight { u: usize, v: usize, weight: String },
    #[error("duplicate edge ({0},{1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("({0},{1}) is not an edge")]
    NotAnEdge(usize, usize),
    #[error("edge ({x},{y}) has an empty neighborhood (p={p}, q={q})")]
    EmptyNeighborhood { x: usize, y: usize, p: usize, q: usize },
    #[error("infinite geodesic distance between {0} and {1}")]
    InfiniteCost(usize, usize),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Input encoding accepted by [`load_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    /// `u v [w]` per line, `#` comments.
    EdgeList,
    /// `{"n": N, "edges": [[u, v, w], ...]}`.
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<S> {
    pub u: usize,
    pub v: usize,
    pub w: S,
}

/// Undirected graph with strictly positive weights, stored with `u < v`.
#[derive(Debug, Clone)]
pub struct Graph<S> {
    n: usize,
    edges: Vec<Edge<S>>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl<S: Scalar> Graph<S> {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, S)>) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        let mut stored = Vec::new();
        let mut adj = vec![Vec::new(); n];
        for (a, b, w) in edges {
            for vertex in [a, b] {
                if vertex >= n {
                    return Err(GraphError::VertexOutOfRange { vertex, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if w <= S::zero() {
                return Err(GraphError::InvalidWeight { u, v, weight: w.to_string() });
            }
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            let idx = stored.len();
            adj[u].push((v, idx));
            adj[v].push((u, idx));
            stored.push(Edge { u, v, w });
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { n, edges: stored, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(|&(u, _)| u)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<&S> {
        if a >= self.n {
            return None;
        }
        self.adj[a].binary_search_by(|&(u, _)| u.cmp(&b)).ok().map(|pos| &self.edges[self.adj[a][pos].1].w)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.weight(a, b).is_some()
    }

    pub fn map_weights<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Graph<T> {
        Graph {
            n: self.n,
            edges: self.edges.iter().map(|e| Edge { u: e.u, v: e.v, w: f(&e.w) }).collect(),
            adj: self.adj.clone(),
        }
    }

    fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components
    }
}

impl Graph<Rational> {
    pub fn to_scalar<T: Scalar>(&self) -> Graph<T> {
        self.map_weights(T::from_rational)
    }
}

/// True iff the graph is connected and has exactly `N - 1` edges.
pub fn verify_tree<S: Scalar>(g: &Graph<S>) -> bool {
    g.n > 0 && g.edges.len() + 1 == g.n && g.component_count() == 1
}

#[derive(Deserialize)]
struct JsonGraph {
    n: usize,
    edges: Vec<Vec<serde_json::Value>>,
}

pub(crate) fn json_number(v: &serde_json::Value) -> Option<Rational> {
    match v {
        // serde_json prints the shortest round-trip form, which reproduces the
        // decimal text for any literal with at most 15 significant digits.
        serde_json::Value::Number(n) => parse_rational(&n.to_string()),
        serde_json::Value::String(s) => parse_rational(s),
        _ => None,
    }
}

fn json_index(v: &serde_json::Value) -> Option<usize> {
    v.as_u64().map(|x| x as usize)
}

/// Reads a graph with exact rational weights. Missing weights default to 1.
pub fn load_graph(mut source: impl Read, format: GraphFormat) -> Result<Graph<Rational>, GraphError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| GraphError::Io(e.to_string()))?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text),
        GraphFormat::Json => parse_json_graph(&text),
    }
}

pub fn parse_edge_list(text: &str) -> Result<Graph<Rational>, GraphError> {
    let mut edges = Vec::new();
    let mut max_vertex = None::<usize>;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected 'u v [w]', got {} fields", fields.len()),
            });
        }
        let vertex = |s: &str| {
            s.parse::<usize>().map_err(|_| GraphError::Parse { line: line_no, msg: format!("bad vertex index '{s}'") })
        };
        let (u, v) = (vertex(fields[0])?, vertex(fields[1])?);
        let w = match fields.get(2) {
            Some(s) => parse_rational(s).ok_or_else(|| GraphError::InvalidWeight { u, v, weight: s.to_string() })?,
            None => Rational::from_i64(1),
        };
        max_vertex = Some(max_vertex.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    Graph::new(max_vertex.map_or(0, |m| m + 1), edges)
}

pub fn parse_json_graph(text: &str) -> Result<Graph<Rational>, GraphError> {
    let parsed: JsonGraph =
        serde_json::from_str(text).map_err(|e| GraphError::Parse { line: e.line(), msg: e.to_string() })?;
    let mut edges = Vec::with_capacity(parsed.edges.len());
    for (k, item) in parsed.edges.iter().enumerate() {
        let bad = |msg: &str| GraphError::Parse { line: 0, msg: format!("edge #{k}: {msg}") };
        if !(2..=3).contains(&item.len()) {
            return Err(bad("expected [u, v] or [u, v, w]"));
        }
        let u = json_index(&item[0]).ok_or_else(|| bad("bad vertex index"))?;
        let v = json_index(&item[1]).ok_or_else(|| bad("bad vertex index"))?;
        let w = match item.get(2) {
            Some(raw) => json_number(raw).ok_or_else(|| GraphError::InvalidWeight { u, v, weight: raw.to_string() })?,
            None => Rational::from_i64(1),
        };
        edges.push((u, v, w));
    }
    Graph::new(parsed.n, edges)
}

/// All-pairs geodesic distances; `None` marks disconnected pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicMatrix<S> {
    n: usize,
    d: Vec<Option<S>>,
}

impl<S: Scalar> GeodesicMatrix<S> {
    pub fn from_rows(rows: Vec<Vec<Option<S>>>) -> Self {
        let n = rows.len();
        Self { n, d: rows.into_iter().flatten().collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&S> {
        self.d[i * self.n + j].as_ref()
    }

    pub fn is_finite(&self, i: usize, j: usize) -> bool {
        self.d[i * self.n + j].is_some()
    }

    pub fn row(&self, i: usize) -> &[Option<S>] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn finite(&self, i: usize, j: usize) -> Result<&S, GraphError> {
        self.get(i, j).ok_or(GraphError::InfiniteCost(i, j))
    }
}

/// Shortest-path kernel choice. `Auto` uses Floyd-Warshall for dense graphs
/// with at most 512 vertices and per-source Dijkstra otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApspStrategy {
    Auto,
    Dijkstra,
    FloydWarshall,
}

const FLOYD_MAX_N: usize = 512;

pub fn all_pairs_geodesic<S: Scalar>(g: &Graph<S>) -> GeodesicMatrix<S> {
    all_pairs_geodesic_with(g, ApspStrategy::Auto, true)
}

pub fn all_pairs_geodesic_with<S: Scalar>(g: &Graph<S>, strategy: ApspStrategy, parallel: bool) -> GeodesicMatrix<S> {
    let n = g.n;
    let dense = n <= FLOYD_MAX_N && 4 * g.edges.len() >= n * n.saturating_sub(1);
    let use_floyd = match strategy {
        ApspStrategy::Auto => dense,
        ApspStrategy::Dijkstra => false,
        ApspStrategy::FloydWarshall => true,
    };
    if use_floyd {
        return floyd_warshall(g, parallel);
    }
    let rows: Vec<Vec<Option<S>>> = if parallel {
        (0..n).into_par_iter().map(|s| dijkstra(g, s)).collect()
    } else {
        (0..n).map(|s| dijkstra(g, s)).collect()
    };
    GeodesicMatrix::from_rows(rows)
}

struct HeapEntry<S> {
    dist: S,
    vertex: usize,
}

impl<S: PartialOrd> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: PartialOrd> Eq for HeapEntry<S> {}

impl<S: PartialOrd> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: PartialOrd> Ord for HeapEntry<S> {
    // Min-heap on distance, ties on vertex index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.partial_cmp(&self.dist).unwrap_or(Ordering::Equal).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

fn dijkstra<S: Scalar>(g: &Graph<S>, source: usize) -> Vec<Option<S>> {
    let mut dist: Vec<Option<S>> = vec![None; g.n];
    let mut done = vec![false; g.n];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(S::zero());
    heap.push(HeapEntry { dist: S::zero(), vertex: source });
    while let Some(HeapEntry { dist: du, vertex: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, e) in &g.adj[u] {
            if done[v] {
                continue;
            }
            let candidate = du.clone() + g.edges[e].w.clone();
            let better = match &dist[v] {
                Some(current) => candidate < *current,
                None => true,
            };
            if better {
                dist[v] = Some(candidate.clone());
                heap.push(HeapEntry { dist: candidate, vertex: v });
            }
        }
    }
    dist
}

fn floyd_warshall<S: Scalar>(g: &Graph<S>, parallel: bool) -> GeodesicMatrix<S> {
    let n = g.n;
    let mut rows: Vec<Vec<Option<S>>> = vec![vec![None; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = Some(S::zero());
    }
    for e in &g.edges {
        rows[e.u][e.v] = Some(e.w.clone());
        rows[e.v][e.u] = Some(e.w.clone());
    }
    for k in 0..n {
        let pivot = rows[k].clone();
        let relax = |row: &mut Vec<Option<S>>| {
            let Some(dik) = row[k].clone() else { return };
            for (j, dkj) in pivot.iter().enumerate() {
                if let Some(dkj) = dkj {
                    let through = dik.clone() + dkj.clone();
                    match &row[j] {
                        Some(dij) if *dij <= through => {}
                        _ => row[j] = Some(through),
                    }
                }
            }
        };
        if parallel {
            rows.par_iter_mut().for_each(relax);
        } else {
            rows.iter_mut().for_each(relax);
        }
    }
    GeodesicMatrix::from_rows(rows)
}

/// Distances from `x` to its neighbors and from `y` to its neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Radii<S> {
    pub from_x: Vec<S>,
    pub from_y: Vec<S>,
}

/// The local transport instance attached to an edge `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalNeighborhood<S> {
    pub x: usize,
    pub y: usize,
    /// Neighbors of `x` (excluding `y`), ascending.
    pub xs: Vec<usize>,
    /// Neighbors of `y` (excluding `x`), ascending.
    pub ys: Vec<usize>,
    /// `cost[i][j] = d_G(xs[i], ys[j])`.
    pub cost: Vec<Vec<S>>,
    pub dxy: S,
    /// Present when the instance came from a graph.
    pub radii: Option<Radii<S>>,
    /// Whether the source graph is a tree; unknown for bare cost matrices.
    pub on_tree: Option<bool>,
}

impl<S: Scalar> LocalNeighborhood<S> {
    pub fn p(&self) -> usize {
        self.xs.len()
    }

    pub fn q(&self) -> usize {
        self.ys.len()
    }

    /// Builds an instance from an explicit cost matrix, with synthetic labels
    /// `x = 0`, `y = 1`, `xs = 2..2+p`, `ys = 2+p..2+p+q`.
    pub fn from_cost(cost: Vec<Vec<S>>, dxy: S) -> Result<Self, GraphError> {
        let p = cost.len();
        let q = cost.first().map_or(0, Vec::len);
        if p == 0 || q == 0 {
            return Err(GraphError::EmptyNeighborhood { x: 0, y: 1, p, q });
        }
        if cost.iter().any(|row| row.len() != q) {
            return Err(GraphError::InvalidCost("rows have different lengths".into()));
        }
        if cost.iter().flatten().any(|c| *c < S::zero()) {
            return Err(GraphError::InvalidCost("negative cost entry".into()));
        }
        if dxy <= S::zero() {
            return Err(GraphError::InvalidCost("d(x,y) must be > 0".into()));
        }
        Ok(Self {
            x: 0,
            y: 1,
            xs: (2..2 + p).collect(),
            ys: (2 + p..2 + p + q).collect(),
            cost,
            dxy,
            radii: None,
            on_tree: None,
        })
    }

    /// Multiplies every length in the instance by `factor`.
    pub fn scaled(&self, factor: &S) -> Self {
        let mul = |v: &S| v.clone() * factor.clone();
        Self {
            cost: self.cost.iter().map(|row| row.iter().map(mul).collect()).collect(),
            dxy: mul(&self.dxy),
            radii: self.radii.as_ref().map(|r| Radii {
                from_x: r.from_x.iter().map(mul).collect(),
                from_y: r.from_y.iter().map(mul).collect(),
            }),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NeighborhoodOptions {
    /// Adds `x` to its own neighbor set and `y` to its own, re-splitting mass uniformly.
    pub include_endpoints: bool,
}

pub fn neighborhood<S: Scalar>(
    g: &Graph<S>,
    dg: &GeodesicMatrix<S>,
    x: usize,
    y: usize,
) -> Result<LocalNeighborhood<S>, GraphError> {
    neighborhood_with(g, dg, x, y, NeighborhoodOptions::default())
}

pub fn neighborhood_with<S: Scalar>(
    g: &Graph<S>,
    dg: &GeodesicMatrix<S>,
    x: usize,
    y: usize,
    opts: NeighborhoodOptions,
) -> Result<LocalNeighborhood<S>, GraphError> {
    neighborhood_on(g, dg, x, y, opts, verify_tree(g))
}

/// [`neighborhood_with`] with the tree flag supplied by the caller, for batch use.
pub fn neighborhood_on<S: Scalar>(
    g: &Graph<S>,
    dg: &GeodesicMatrix<S>,
    x: usize,
    y: usize,
    opts: NeighborhoodOptions,
    on_tree: bool,
) -> Result<LocalNeighborhood<S>, GraphError> {
    if x >= g.n || y >= g.n || !g.has_edge(x, y) {
        return Err(GraphError::NotAnEdge(x, y));
    }
    let mut xs: Vec<usize> = g.neighbors(x).filter(|&v| v != y).collect();
    let mut ys: Vec<usize> = g.neighbors(y).filter(|&v| v != x).collect();
    if opts.include_endpoints {
        xs.push(x);
        ys.push(y);
        xs.sort_unstable();
        ys.sort_unstable();
    }
    if xs.is_empty() || ys.is_empty() {
        return Err(GraphError::EmptyNeighborhood { x, y, p: xs.len(), q: ys.len() });
    }
    let mut cost = Vec::with_capacity(xs.len());
    for &xi in &xs {
        let row = ys.iter().map(|&yj| dg.finite(xi, yj).cloned()).collect::<Result<Vec<_>, _>>()?;
        cost.push(row);
    }
    let radii = Radii {
        from_x: xs.iter().map(|&v| dg.finite(x, v).cloned()).collect::<Result<_, _>>()?,
        from_y: ys.iter().map(|&v| dg.finite(y, v).cloned()).collect::<Result<_, _>>()?,
    };
    Ok(LocalNeighborhood {
        x,
        y,
        xs,
        ys,
        cost,
        dxy: dg.finite(x, y)?.clone(),
        radii: Some(radii),
        on_tree: Some(on_tree),
    })
}
