//! Sampled embedded graphs and the radial flow collapsing a tree.
//!
//! An embedded graph is a set of vertex positions and polyline edges whose
//! samples carry a parameter in `[-1, 1]`. For a tree `T` inside the unit
//! ball whose incident edges leave `B(0,3)` moving outward, the map
//! `φ_t(x) = x / g_t(|x|)` with `|φ_t(x)| = λ_t(|x|)` pulls the graph back
//! to `G_t = φ_t⁻¹(G)`. Along the way `T` shrinks to the origin, and at
//! `t ≥ 1/3` the preimage of the sphere of radius 2 is a radial segment.

use std::collections::BTreeSet;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::canon::canonical_form;
use crate::edgeset::EdgeSet;
use crate::graph::AbstractGraph;
use crate::morphism::collapse_forest;

pub type Point = [f64; 3];

const THIRD: f64 = 1.0 / 3.0;
const BISECT_TOL: f64 = 1e-12;
const GEOM_TOL: f64 = 1e-9;
const MIN_SAMPLES: usize = 9;
/// Target spacing of pulled-back samples.
const MAX_GAP: f64 = 0.05;

fn norm(x: &Point) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn lerp(a: &Point, b: &Point, u: f64) -> Point {
    [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])]
}

fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// The fixed profile `λ_{1/3}`.
///
/// Linear `3r/2` up to 1.3, a cubic Hermite join to the plateau value 2 on
/// `[1.3, 1.4]`, constant 2 up to 1.9, then on `[1.9, 2.5]` the function
/// `r·q(r)` with `q = λ/r` decreasing from `2/1.9` to 1 as
/// `ln q = ln(2/1.9) − L(1 − (1−u)^{p+1})/(p+1)`, `u = ln(r/1.9)/L`,
/// `L = ln(2.5/1.9)`. This makes `λ′ = q(1 − (1−u)^p)`, which is zero at 1.9,
/// one at 2.5 and never above `λ/r`. Identity from 2.5 on.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LambdaProfile;

impl LambdaProfile {
    fn outer_exponent() -> f64 {
        (2.5f64 / 1.9).ln() / (2.0f64 / 1.9).ln()
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 1.3 {
            1.5 * r
        } else if r < 1.4 {
            let s = (r - 1.3) / 0.1;
            let (h00, h10, h01) = (
                2.0 * s * s * s - 3.0 * s * s + 1.0,
                s * s * s - 2.0 * s * s + s,
                -2.0 * s * s * s + 3.0 * s * s,
            );
            h00 * 1.95 + h10 * 0.1 * 1.5 + h01 * 2.0
        } else if r <= 1.9 {
            2.0
        } else if r < 2.5 {
            let l = (2.5f64 / 1.9).ln();
            let p1 = Self::outer_exponent();
            let u = (r / 1.9).ln() / l;
            let lnq = (2.0f64 / 1.9).ln() - l * (1.0 - (1.0 - u).powf(p1)) / p1;
            r * lnq.exp()
        } else {
            r
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= 1.3 {
            1.5
        } else if r < 1.4 {
            let s = (r - 1.3) / 0.1;
            1.5 * (1.0 - s) * (1.0 - s)
        } else if r <= 1.9 {
            0.0
        } else if r < 2.5 {
            let l = (2.5f64 / 1.9).ln();
            let p = Self::outer_exponent() - 1.0;
            let u = (r / 1.9).ln() / l;
            self.value(r) / r * (1.0 - (1.0 - u).powf(p))
        } else {
            1.0
        }
    }

    /// Least `r` with `λ_{1/3}(r) = ρ` for `ρ ≠ 2`; for `ρ = 2` the plateau.
    fn inverse(&self, rho: f64) -> Preimage {
        if rho <= 1.95 {
            Preimage::Radius(rho / 1.5)
        } else if rho < 2.0 {
            Preimage::Radius(bisect(|r| self.value(r), rho, 1.3, 1.4))
        } else if rho == 2.0 {
            Preimage::Plateau(1.4, 1.9)
        } else if rho < 2.5 {
            Preimage::Radius(bisect(|r| self.value(r), rho, 1.9, 2.5))
        } else {
            Preimage::Radius(rho)
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Preimage radius of a radius under `λ_t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preimage {
    Radius(f64),
    /// Every radius in `[lo, hi]` maps to 2.
    Plateau(f64, f64),
    /// Radii below 2 have no preimage at `t = 1`.
    Empty,
}

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("flow time {0} outside [0, 1]")]
    TimeOutOfRange(f64),
    #[error("φ_1 is undefined at the origin")]
    UndefinedAtOrigin,
}

/// `λ_t`, `g_t` and `φ_t` at one flow time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub t: f64,
    pub profile: LambdaProfile,
}

impl FlowParams {
    pub fn new(t: f64) -> Result<Self, FlowError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(FlowError::TimeOutOfRange(t));
        }
        Ok(FlowParams { t, profile: LambdaProfile })
    }

    /// Radius where the plateau at value 2 begins, for `t ≥ 1/3`.
    pub fn plateau_start(&self) -> f64 {
        2.1 * (1.0 - self.t)
    }

    pub fn lambda(&self, r: f64) -> f64 {
        let t = self.t;
        if t < THIRD {
            (1.0 - 3.0 * t) * r + 3.0 * t * self.profile.value(r)
        } else if r <= self.plateau_start() {
            self.profile.value(2.0 * r / (3.0 * (1.0 - t)))
        } else if r <= 1.9 {
            2.0
        } else {
            self.profile.value(r)
        }
    }

    /// `g_t(r) = r / λ_t(r)`, extended continuously to `r = 0`.
    pub fn g(&self, r: f64) -> f64 {
        if r > 0.0 {
            return r / self.lambda(r);
        }
        if self.t < THIRD {
            1.0 / (1.0 + 1.5 * self.t)
        } else {
            1.0 - self.t
        }
    }

    pub fn phi(&self, x: &Point) -> Result<Point, FlowError> {
        let r = norm(x);
        if r == 0.0 {
            return if self.t == 1.0 { Err(FlowError::UndefinedAtOrigin) } else { Ok(*x) };
        }
        Ok(scale(x, 1.0 / self.g(r)))
    }

    /// Radii `r` with `λ_t(r) = ρ`.
    pub fn preimage(&self, rho: f64) -> Preimage {
        let t = self.t;
        if t == 0.0 || rho >= 2.5 {
            return Preimage::Radius(rho);
        }
        if t < THIRD {
            let k = 1.0 + 1.5 * t;
            if rho <= 1.3 * k {
                return Preimage::Radius(rho / k);
            }
            return Preimage::Radius(bisect(|r| self.lambda(r), rho, 1.3, 2.5));
        }
        if rho < 2.0 {
            if t == 1.0 {
                return Preimage::Empty;
            }
            return match self.profile.inverse(rho) {
                Preimage::Radius(a) => Preimage::Radius(1.5 * (1.0 - t) * a),
                other => other,
            };
        }
        if rho == 2.0 {
            return Preimage::Plateau(self.plateau_start(), 1.9);
        }
        self.profile.inverse(rho)
    }
}

/// Result of sampling the profile constraints.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileReport {
    pub samples: usize,
    pub monotone: bool,
    pub positive_off_plateau: bool,
    pub derivative_bound: bool,
    /// Largest `λ′ − λ/r` seen (nonpositive when the bound holds).
    pub worst_excess: f64,
    pub continuous: bool,
}

impl ProfileReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.positive_off_plateau && self.derivative_bound && self.continuous
    }
}

/// Checks `λ_{1/3}` at `samples` points of `(0, 3]`: nondecreasing,
/// `λ′ > 0` where `λ ≠ 2`, `λ′ ≤ λ/r`, and the piecewise definition has no
/// jumps.
pub fn check_profile(samples: usize) -> ProfileReport {
    let p = LambdaProfile;
    let rs: Vec<f64> = (1..=samples).map(|i| 3.0 * i as f64 / samples as f64).collect();
    let mut monotone = true;
    let mut positive = true;
    let mut worst = f64::NEG_INFINITY;
    let mut prev = 0.0;
    for &r in &rs {
        let (v, d) = (p.value(r), p.derivative(r));
        monotone &= v >= prev - 1e-15;
        prev = v;
        if (v - 2.0).abs() > 1e-12 {
            positive &= d > 0.0;
        }
        worst = worst.max(d - v / r);
    }
    let h = 1e-7;
    let continuous = [1.3, 1.4, 1.9, 2.5]
        .iter()
        .all(|&b| (p.value(b - h) - p.value(b + h)).abs() < 1e-5 && (p.derivative(b - h) - p.derivative(b + h)).abs() < 1e-4);
    ProfileReport {
        samples,
        monotone,
        positive_off_plateau: positive,
        derivative_bound: worst <= 1e-12,
        worst_excess: worst,
        continuous,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("point has {found} coordinates, expected {expected}")]
    Coordinates { found: usize, expected: usize },
    #[error("edge {edge}: {msg}")]
    Edge { edge: usize, msg: String },
    #[error("vertex {vertex}: {msg}")]
    Vertex { vertex: usize, msg: String },
    #[error("json: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedEdge {
    pub from: usize,
    pub to: usize,
    pub params: Vec<f64>,
    pub points: Vec<Point>,
}

/// Vertices, polyline edges and the designated leaves (labelled `1..` in
/// list order).
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedGraph {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub edges: Vec<EmbeddedEdge>,
    pub leaves: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    from: usize,
    to: usize,
    params: Vec<f64>,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    edges: Vec<EdgeJson>,
    #[serde(default)]
    leaves: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tree: Option<TreeSpec>,
}

/// Vertices and edges of the tree to collapse.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub vertices: Vec<usize>,
    #[serde(default)]
    pub edges: Vec<usize>,
}

fn to_point(v: &[f64], dim: usize) -> Result<Point, GeometryError> {
    if v.len() != dim {
        return Err(GeometryError::Coordinates { found: v.len(), expected: dim });
    }
    let mut p = [0.0; 3];
    p[..dim].copy_from_slice(v);
    Ok(p)
}

impl EmbeddedGraph {
    pub fn empty(dim: usize) -> Self {
        EmbeddedGraph { dim, vertices: Vec::new(), edges: Vec::new(), leaves: Vec::new() }
    }

    /// Parses the graph and the optional `tree` field.
    pub fn from_json(s: &str) -> Result<(Self, Option<TreeSpec>), GeometryError> {
        let f: GraphFile = serde_json::from_str(s).map_err(|e| GeometryError::Json(e.to_string()))?;
        if f.dim != 2 && f.dim != 3 {
            return Err(GeometryError::Dimension(f.dim));
        }
        let vertices = f.vertices.iter().map(|v| to_point(v, f.dim)).collect::<Result<_, _>>()?;
        let edges = f
            .edges
            .iter()
            .map(|e| {
                Ok(EmbeddedEdge {
                    from: e.from,
                    to: e.to,
                    params: e.params.clone(),
                    points: e.points.iter().map(|p| to_point(p, f.dim)).collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<_, GeometryError>>()?;
        let g = EmbeddedGraph { dim: f.dim, vertices, edges, leaves: f.leaves };
        g.validate()?;
        Ok((g, f.tree))
    }

    pub fn to_json(&self) -> String {
        let pt = |p: &Point| p[..self.dim].to_vec();
        let f = GraphFile {
            dim: self.dim,
            vertices: self.vertices.iter().map(pt).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    from: e.from,
                    to: e.to,
                    params: e.params.clone(),
                    points: e.points.iter().map(pt).collect(),
                })
                .collect(),
            leaves: self.leaves.clone(),
            tree: None,
        };
        serde_json::to_string(&f).expect("graph serialization")
    }

    pub fn valences(&self) -> Vec<usize> {
        let mut v = vec![0; self.vertices.len()];
        for e in &self.edges {
            v[e.from] += 1;
            v[e.to] += 1;
        }
        v
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let nv = self.vertices.len();
        for (i, e) in self.edges.iter().enumerate() {
            let bad = |msg: &str| GeometryError::Edge { edge: i, msg: msg.to_owned() };
            if e.from >= nv || e.to >= nv {
                return Err(bad("endpoint out of range"));
            }
            if e.params.len() != e.points.len() {
                return Err(bad("params and points differ in length"));
            }
            if e.points.len() < MIN_SAMPLES {
                return Err(bad("fewer than 9 samples"));
            }
            if e.params.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("parameters not strictly increasing"));
            }
            if (e.params[0] + 1.0).abs() > GEOM_TOL || (e.params[e.params.len() - 1] - 1.0).abs() > GEOM_TOL {
                return Err(bad("parameters must run from -1 to 1"));
            }
            if dist(&e.points[0], &self.vertices[e.from]) > GEOM_TOL
                || dist(&e.points[e.points.len() - 1], &self.vertices[e.to]) > GEOM_TOL
            {
                return Err(bad("end samples do not match vertex positions"));
            }
            if e.points.windows(2).any(|w| dist(&w[0], &w[1]) == 0.0) {
                return Err(bad("repeated consecutive sample"));
            }
        }
        let leaves: BTreeSet<usize> = self.leaves.iter().copied().collect();
        if leaves.len() != self.leaves.len() {
            return Err(GeometryError::Vertex { vertex: self.leaves[0], msg: "leaf listed twice".into() });
        }
        for (v, &val) in self.valences().iter().enumerate() {
            let ok = if leaves.contains(&v) { val == 1 } else { val >= 3 };
            if !ok {
                return Err(GeometryError::Vertex { vertex: v, msg: format!("valence {val}") });
            }
        }
        Ok(())
    }

    /// Underlying combinatorial graph; leaves get labels `1..` in list order.
    pub fn abstract_graph(&self) -> AbstractGraph {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.from, e.to)).collect();
        let labels: Vec<(usize, u32)> =
            self.leaves.iter().enumerate().map(|(i, &v)| (v, i as u32 + 1)).collect();
        AbstractGraph::from_edge_list(self.vertices.len(), &edges, &labels)
    }

    /// All sample points (vertices and edge samples).
    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.vertices.iter().chain(self.edges.iter().flat_map(|e| e.points.iter()))
    }
}

/// Builds a straight edge sampled at `samples` evenly spaced parameters.
pub fn straight_edge(from: usize, to: usize, a: Point, b: Point, samples: usize) -> EmbeddedEdge {
    let samples = samples.max(MIN_SAMPLES);
    let params: Vec<f64> = (0..samples).map(|i| -1.0 + 2.0 * i as f64 / (samples - 1) as f64).collect();
    let points = params.iter().map(|&p| lerp(&a, &b, (p + 1.0) / 2.0)).collect();
    EmbeddedEdge { from, to, params, points }
}

/// One incident edge: the edge, the end it leaves `T` from, and its exit.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidentEdge {
    pub edge: usize,
    /// Leaves `T` at the `from` end (parameter −1).
    pub at_start: bool,
    /// Distance-to-`T` value `τ` of the first sample outside `B(0,3)`.
    pub tau: f64,
}

impl IncidentEdge {
    /// Distance parameter `s ∈ [0, 2]` of an edge parameter.
    pub fn s_of(&self, param: f64) -> f64 {
        if self.at_start { param + 1.0 } else { 1.0 - param }
    }

    pub fn param_of(&self, s: f64) -> f64 {
        if self.at_start { s - 1.0 } else { 1.0 - s }
    }
}

/// A graph with a tree in collapsible position.
#[derive(Clone, Debug)]
pub struct CollapseScene {
    pub graph: EmbeddedGraph,
    pub tree: TreeSpec,
    pub incident: Vec<IncidentEdge>,
    /// `d` at each edge sample in `B(0,3)`: 0 on `T`, `s` on incident edges.
    pub d: Vec<Vec<Option<f64>>>,
}

/// A failed clause of collapsible position, with the offending sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub clause: &'static str,
    pub detail: String,
}

fn violation(clause: &'static str, detail: String) -> Violation {
    Violation { clause, detail }
}

pub fn check_collapsible(g: &EmbeddedGraph, tree: &TreeSpec) -> Result<CollapseScene, Vec<Violation>> {
    let mut out = Vec::new();
    if let Err(e) = g.validate() {
        return Err(vec![violation("graph", e.to_string())]);
    }
    let tv: BTreeSet<usize> = tree.vertices.iter().copied().collect();
    let te: BTreeSet<usize> = tree.edges.iter().copied().collect();
    if tv.is_empty() || tv.iter().any(|&v| v >= g.vertices.len()) || te.iter().any(|&e| e >= g.edges.len()) {
        return Err(vec![violation("tree", "tree vertices or edges out of range".into())]);
    }
    let spans = te.iter().all(|&e| tv.contains(&g.edges[e].from) && tv.contains(&g.edges[e].to));
    let mut uf = petgraph::unionfind::UnionFind::<usize>::new(g.vertices.len());
    let acyclic = te.iter().all(|&e| uf.union(g.edges[e].from, g.edges[e].to));
    let root = uf.find(*tv.iter().next().unwrap());
    let connected = tv.iter().all(|&v| uf.find(v) == root);
    if !(spans && acyclic && connected && te.len() + 1 == tv.len()) {
        return Err(vec![violation("tree", "selection is not a tree".into())]);
    }
    if tv.iter().any(|v| g.leaves.contains(v)) {
        return Err(vec![violation("tree", "tree contains a leaf".into())]);
    }
    for &v in &tv {
        if norm(&g.vertices[v]) >= 1.0 {
            out.push(violation("tree_in_unit_ball", format!("vertex {v}")));
        }
    }
    for &e in &te {
        if let Some(j) = g.edges[e].points.iter().position(|p| norm(p) >= 1.0) {
            out.push(violation("tree_in_unit_ball", format!("edge {e} sample {j}")));
        }
    }
    let mut incident = Vec::new();
    let mut d: Vec<Vec<Option<f64>>> = g.edges.iter().map(|e| vec![None; e.points.len()]).collect();
    for (i, e) in g.edges.iter().enumerate() {
        if te.contains(&i) {
            d[i].iter_mut().for_each(|x| *x = Some(0.0));
            continue;
        }
        for at_start in [true, false] {
            let end = if at_start { e.from } else { e.to };
            if !tv.contains(&end) {
                continue;
            }
            let n = e.points.len();
            let order: Vec<usize> = if at_start { (0..n).collect() } else { (0..n).rev().collect() };
            let Some(k) = order.iter().position(|&j| norm(&e.points[j]) > 3.0) else {
                out.push(violation("exit", format!("edge {i} never leaves B(0,3)")));
                continue;
            };
            let inc = IncidentEdge { edge: i, at_start, tau: 0.0 };
            let tau = inc.s_of(e.params[order[k]]);
            if tau >= 2.0 {
                out.push(violation("exit", format!("edge {i} leaves B(0,3) only at its far end")));
                continue;
            }
            for (pos, &j) in order[..=k].iter().enumerate() {
                let x = &e.points[j];
                let r = norm(x);
                if (1.0..=3.0).contains(&r) {
                    let prev = order[pos.saturating_sub(1)];
                    let next = order[(pos + 1).min(n - 1)];
                    let ds = inc.s_of(e.params[next]) - inc.s_of(e.params[prev]);
                    let deriv = scale(&sub(&e.points[next], &e.points[prev]), 1.0 / ds);
                    if dot(x, &deriv) < -GEOM_TOL {
                        out.push(violation("shell_inner_product", format!("edge {i} sample {j}")));
                    }
                }
                if r <= 3.0 {
                    d[i][j] = Some(inc.s_of(e.params[j]));
                }
            }
            incident.push(IncidentEdge { tau, ..inc });
        }
    }
    for (v, p) in g.vertices.iter().enumerate() {
        if !tv.contains(&v) && norm(p) <= 3.0 {
            out.push(violation("coverage", format!("vertex {v} lies in B(0,3)")));
        }
    }
    for (i, e) in g.edges.iter().enumerate() {
        for (j, p) in e.points.iter().enumerate() {
            let interior = j > 0 && j + 1 < e.points.len();
            if interior && norm(p) <= 3.0 && d[i][j].is_none() {
                out.push(violation("coverage", format!("edge {i} sample {j} lies in B(0,3)")));
            }
        }
    }
    if out.is_empty() {
        Ok(CollapseScene { graph: g.clone(), tree: TreeSpec { vertices: tv.into_iter().collect(), edges: te.into_iter().collect() }, incident, d })
    } else {
        Err(out)
    }
}

/// One time slice of the flow; `edge_source[i]` is the input edge that
/// frame edge `i` comes from.
#[derive(Clone, Debug)]
pub struct FlowFrame {
    pub t: f64,
    pub graph: EmbeddedGraph,
    pub edge_source: Vec<usize>,
}

struct Pulled {
    point: Point,
    param: f64,
}

impl CollapseScene {
    fn in_tree_vertex(&self, v: usize) -> bool {
        self.tree.vertices.binary_search(&v).is_ok()
    }

    fn in_tree_edge(&self, e: usize) -> bool {
        self.tree.edges.binary_search(&e).is_ok()
    }

    fn incident_at(&self, e: usize, at_start: bool) -> Option<&IncidentEdge> {
        self.incident.iter().find(|i| i.edge == e && i.at_start == at_start)
    }

    /// Output parameter of a point of an edge given its original parameter
    /// and the factor `g_t` at its pulled-back radius.
    fn param_after(&self, e: usize, param: f64, g: f64) -> f64 {
        for at_start in [true, false] {
            if let Some(inc) = self.incident_at(e, at_start) {
                let s = inc.s_of(param);
                if s <= inc.tau {
                    return inc.param_of(g * s);
                }
            }
        }
        param
    }
}

/// `G_t = φ_t⁻¹(G)` (with the origin adjoined at `t = 1`), parametrised so
/// that the parameter from the tree end is `d_t − 1`.
pub fn collapse_flow(scene: &CollapseScene, t: f64) -> Result<FlowFrame, FlowError> {
    let fp = FlowParams::new(t)?;
    let g = &scene.graph;
    if t == 0.0 {
        return Ok(FlowFrame { t, graph: g.clone(), edge_source: (0..g.edges.len()).collect() });
    }
    let at_end = t == 1.0;
    let pull_point = |x: &Point| -> Option<Point> {
        let rho = norm(x);
        if rho == 0.0 {
            return (!at_end).then_some(*x);
        }
        match fp.preimage(rho) {
            Preimage::Radius(r) => Some(scale(x, r / rho)),
            Preimage::Plateau(_, hi) => Some(scale(x, hi / rho)),
            Preimage::Empty => None,
        }
    };
    let mut vertices = Vec::new();
    let mut vmap = vec![usize::MAX; g.vertices.len()];
    for (v, p) in g.vertices.iter().enumerate() {
        if at_end && scene.in_tree_vertex(v) {
            continue;
        }
        vmap[v] = vertices.len();
        vertices.push(pull_point(p).expect("vertex has a preimage"));
    }
    let origin = if at_end {
        vertices.push([0.0; 3]);
        vertices.len() - 1
    } else {
        usize::MAX
    };
    let vmap_of = |v: usize| if at_end && scene.in_tree_vertex(v) { origin } else { vmap[v] };
    let mut edges = Vec::new();
    let mut edge_source = Vec::new();
    for (i, e) in g.edges.iter().enumerate() {
        if at_end && scene.in_tree_edge(i) {
            continue;
        }
        let mut samples: Vec<Pulled> = Vec::new();
        let mut crossed = false;
        for j in 0..e.points.len() {
            if j > 0 {
                pull_segment(scene, &fp, i, j, &mut crossed, &mut samples);
            } else if let Some(y) = pull_point(&e.points[0]) {
                samples.push(Pulled { point: y, param: scene.param_after(i, e.params[0], fp.g(norm(&y))) });
            }
        }
        let (from, to) = (vmap_of(e.from), vmap_of(e.to));
        if let Some(first) = samples.first_mut() {
            first.point = vertices[from];
        }
        if let Some(last) = samples.last_mut() {
            last.point = vertices[to];
        }
        samples.dedup_by(|b, a| dist(&a.point, &b.point) < 1e-12);
        let n = samples.len();
        samples[0].param = -1.0;
        samples[n - 1].param = 1.0;
        edges.push(EmbeddedEdge {
            from,
            to,
            params: samples.iter().map(|s| s.param).collect(),
            points: samples.iter().map(|s| s.point).collect(),
        });
        edge_source.push(i);
    }
    let leaves = g.leaves.iter().map(|&v| vmap_of(v)).collect();
    Ok(FlowFrame { t, graph: EmbeddedGraph { dim: g.dim, vertices, edges, leaves }, edge_source })
}

/// Pulls back the segment between samples `j − 1` and `j` of edge `i`,
/// appending samples after the start point. Inserts the radial plateau
/// segment at the first crossing of the sphere of radius 2.
fn pull_segment(
    scene: &CollapseScene,
    fp: &FlowParams,
    i: usize,
    j: usize,
    crossed: &mut bool,
    out: &mut Vec<Pulled>,
) {
    let e = &scene.graph.edges[i];
    let (a, b) = (e.points[j - 1], e.points[j]);
    let (pa, pb) = (e.params[j - 1], e.params[j]);
    let at_end = fp.t == 1.0;
    let plateau = fp.t >= THIRD;
    let pull = |x: &Point, param: f64, outer: bool| -> Option<Pulled> {
        let rho = norm(x);
        if rho == 0.0 {
            return (!at_end).then(|| Pulled { point: *x, param: scene.param_after(i, param, fp.g(0.0)) });
        }
        let r = if plateau && (rho - 2.0).abs() <= GEOM_TOL {
            if outer { 1.9 } else { fp.plateau_start() }
        } else {
            match fp.preimage(rho) {
                Preimage::Radius(r) => r,
                Preimage::Plateau(lo, hi) => if outer { hi } else { lo },
                Preimage::Empty => return None,
            }
        };
        let y = scale(x, r / rho);
        Some(Pulled { point: y, param: scene.param_after(i, param, fp.g(r)) })
    };
    let (ra, rb) = (norm(&a), norm(&b));
    // crossing of |x| = 2, entering from inside, in either direction of travel
    let cross = if plateau && !*crossed && ((ra < 2.0 && rb >= 2.0) || (ra >= 2.0 && rb < 2.0)) {
        let d = sub(&b, &a);
        let (qa, qb, qc) = (dot(&d, &d), 2.0 * dot(&a, &d), ra * ra - 4.0);
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        let roots = [(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)];
        roots.into_iter().find(|u| (0.0..=1.0).contains(u))
    } else {
        None
    };
    // pulls back lerp(a, b, u) for u in (u0, u1], or (u0, u1) when the end is a crossing
    let push_range = |u0: f64, u1: f64, outer: bool, with_end: bool, out: &mut Vec<Pulled>| {
        let at = |u: f64| pull(&lerp(&a, &b, u), pa + u * (pb - pa), outer);
        let span = match (at(u0), at(u1)) {
            (Some(y0), Some(y1)) => dist(&y0.point, &y1.point),
            _ => dist(&a, &b),
        };
        let pieces = ((span / MAX_GAP).ceil() as usize).clamp(1, 256);
        let last = if with_end { pieces } else { pieces - 1 };
        for k in 1..=last {
            if let Some(y) = at(u0 + (u1 - u0) * k as f64 / pieces as f64) {
                out.push(y);
            }
        }
    };
    match cross {
        None => {
            push_range(0.0, 1.0, ra + rb >= 4.0, true, out);
        }
        Some(u) => {
            let outward = ra < 2.0;
            let c = lerp(&a, &b, u);
            let dir = scale(&c, 0.5);
            let pc = pa + u * (pb - pa);
            let s_c = |g: f64| scene.param_after(i, pc, g);
            push_range(0.0, u, !outward, false, out);
            // radial segment from the plateau start to 1.9 (reversed when travelling inward)
            let (lo, hi) = (fp.plateau_start(), 1.9);
            let pieces = (((hi - lo) / MAX_GAP).ceil() as usize).max(8);
            for k in 0..=pieces {
                let frac = k as f64 / pieces as f64;
                let r = if outward { lo + (hi - lo) * frac } else { hi - (hi - lo) * frac };
                if r == 0.0 {
                    out.push(Pulled { point: [0.0; 3], param: s_c(0.0) });
                } else {
                    out.push(Pulled { point: scale(&dir, r), param: s_c(r / 2.0) });
                }
            }
            push_range(u, 1.0, outward, true, out);
            *crossed = true;
        }
    }
}

/// `t = 0, 1/steps, …, 1`; `steps = 0` gives the single frame at `t = 0`.
pub fn flow_frames(scene: &CollapseScene, steps: usize) -> Vec<FlowFrame> {
    let times: Vec<f64> = if steps == 0 {
        vec![0.0]
    } else {
        (0..=steps).map(|k| k as f64 / steps as f64).collect()
    };
    times.into_iter().map(|t| collapse_flow(scene, t).expect("t in range")).collect()
}

/// CSV rows `t,edge_id,sample_index,param,x,y[,z]`, edge ids of the input.
pub fn write_frames_csv<W: Write>(frames: &[FlowFrame], w: W) -> io::Result<()> {
    let dim = frames.first().map_or(2, |f| f.graph.dim);
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t", "edge_id", "sample_index", "param", "x", "y"];
    if dim == 3 {
        header.push("z");
    }
    out.write_record(&header)?;
    for f in frames {
        for (e, edge) in f.graph.edges.iter().enumerate() {
            for (j, (p, x)) in edge.params.iter().zip(&edge.points).enumerate() {
                let mut row = vec![
                    f.t.to_string(),
                    f.edge_source[e].to_string(),
                    j.to_string(),
                    p.to_string(),
                ];
                row.extend(x[..dim].iter().map(f64::to_string));
                out.write_record(&row)?;
            }
        }
    }
    out.flush()
}

/// Outcome of the flow invariant suite.
#[derive(Clone, Debug, Serialize)]
pub struct FlowReport {
    pub frames: usize,
    /// Max of `||φ_t(x)| − λ_t(|x|)|` over the `(t, |x|)` grid.
    pub radial_identity_error: f64,
    /// Max `|φ_0(x) − x|` on the grid.
    pub identity_at_zero_error: f64,
    /// Max displacement of the `t = 0` frame from the input samples.
    pub frame_zero_error: f64,
    /// Max distance of `t = 1` samples with `|x| ≤ 1.9` from their radial line.
    pub radial_deviation: f64,
    pub d_increasing: bool,
    pub endpoint_matches_collapse: bool,
    /// Largest ratio of Hausdorff distance in `B(0,3)` to the time step.
    pub hausdorff_slope: f64,
}

/// Frozen bound on the measured Hausdorff slope between consecutive frames.
pub const HAUSDORFF_SLOPE_BOUND: f64 = 10.0;

impl FlowReport {
    pub fn passed(&self) -> bool {
        self.radial_identity_error < 1e-9
            && self.identity_at_zero_error < 1e-12
            && self.frame_zero_error < 1e-9
            && self.radial_deviation < 1e-6
            && self.d_increasing
            && self.endpoint_matches_collapse
            && self.hausdorff_slope <= HAUSDORFF_SLOPE_BOUND
    }
}

/// Max `||φ_t(x)| − λ_t(|x|)|` over `nt × nr` samples of `[0,1] × [0,4]`,
/// and max `|φ_0(x) − x|`, along a fixed unit direction.
pub fn radial_identity_error(nt: usize, nr: usize) -> (f64, f64) {
    let dir = [0.6, 0.8, 0.0];
    let mut worst = 0.0f64;
    let mut worst_id = 0.0f64;
    for i in 0..nt {
        let t = i as f64 / (nt - 1) as f64;
        let fp = FlowParams::new(t).unwrap();
        for k in 0..nr {
            let r = 4.0 * k as f64 / (nr - 1) as f64;
            let x = scale(&dir, r);
            let Ok(y) = fp.phi(&x) else { continue };
            worst = worst.max((norm(&y) - fp.lambda(r)).abs());
            if t == 0.0 {
                worst_id = worst_id.max(dist(&y, &x));
            }
        }
    }
    (worst, worst_id)
}

fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = sub(b, a);
    let len2 = dot(&d, &d);
    let u = if len2 == 0.0 { 0.0 } else { (dot(&sub(p, a), &d) / len2).clamp(0.0, 1.0) };
    dist(p, &lerp(a, b, u))
}

fn distance_to_graph(p: &Point, g: &EmbeddedGraph) -> f64 {
    let mut best = g.vertices.iter().map(|v| dist(p, v)).fold(f64::INFINITY, f64::min);
    for e in &g.edges {
        for w in e.points.windows(2) {
            best = best.min(point_segment_distance(p, &w[0], &w[1]));
        }
    }
    best
}

/// Symmetric Hausdorff distance between the polylines of `a` and `b`,
/// measured from samples inside `B(0, radius)`.
pub fn hausdorff_within(a: &EmbeddedGraph, b: &EmbeddedGraph, radius: f64) -> f64 {
    let one_way = |x: &EmbeddedGraph, y: &EmbeddedGraph| {
        x.points()
            .filter(|p| norm(p) <= radius)
            .map(|p| distance_to_graph(p, y))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Recovers `d(φ_t(y))` for a frame sample on an incident edge by projecting
/// `φ_t(y)` onto the input edge.
fn d_of_image(scene: &CollapseScene, inc: &IncidentEdge, x: &Point) -> f64 {
    let e = &scene.graph.edges[inc.edge];
    let mut best = (f64::INFINITY, 0.0);
    for j in 1..e.points.len() {
        let (a, b) = (&e.points[j - 1], &e.points[j]);
        let d = sub(b, a);
        let len2 = dot(&d, &d);
        let u = (dot(&sub(x, a), &d) / len2).clamp(0.0, 1.0);
        let dd = dist(x, &lerp(a, b, u));
        if dd < best.0 {
            best = (dd, e.params[j - 1] + u * (e.params[j] - e.params[j - 1]));
        }
    }
    inc.s_of(best.1)
}

/// Runs the invariant suite over `steps + 1` frames.
pub fn check_flow(scene: &CollapseScene, steps: usize) -> FlowReport {
    let steps = steps.max(1);
    let frames = flow_frames(scene, steps);
    let (radial_identity_error, identity_at_zero_error) = radial_identity_error(101, 401);
    let g = &scene.graph;
    let frame_zero_error = frames[0]
        .graph
        .edges
        .iter()
        .zip(&frames[0].edge_source)
        .map(|(e, &src)| e.points.iter().map(|p| distance_to_graph_edge(p, &g.edges[src])).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let last = frames.last().unwrap();
    let mut radial_deviation = 0.0f64;
    for e in &last.graph.edges {
        // every sample with |x| <= 1.9 should be on the ray through the 1.9 crossing
        let Some(anchor) = e.points.iter().find(|p| (norm(p) - 1.9).abs() < 1e-9) else { continue };
        let u = scale(anchor, 1.0 / norm(anchor));
        for p in e.points.iter().filter(|p| norm(p) <= 1.9) {
            let along = dot(p, &u);
            radial_deviation = radial_deviation.max(dist(p, &scale(&u, along)).max((-along).max(0.0)));
        }
    }
    let mut d_increasing = true;
    for f in &frames {
        let fp = FlowParams::new(f.t).unwrap();
        for (e, &src) in f.graph.edges.iter().zip(&f.edge_source) {
            for inc in scene.incident.iter().filter(|i| i.edge == src) {
                let idx: Vec<usize> = if inc.at_start {
                    (0..e.points.len()).collect()
                } else {
                    (0..e.points.len()).rev().collect()
                };
                let mut dt: Vec<f64> = Vec::new();
                for &j in &idx {
                    let y = e.points[j];
                    let r = norm(&y);
                    let Ok(x) = fp.phi(&y) else {
                        dt.push(0.0);
                        continue;
                    };
                    if norm(&x) >= 3.0 {
                        break;
                    }
                    let dv = if r == 0.0 { 0.0 } else { fp.g(r) * d_of_image(scene, inc, &x) };
                    dt.push(dv);
                    let expected = inc.param_of(dv);
                    if (e.params[j] - expected).abs() > 1e-6 {
                        d_increasing = false;
                    }
                }
                d_increasing &= dt.windows(2).all(|w| w[1] > w[0]);
                let par: Vec<f64> = idx.iter().map(|&j| inc.s_of(e.params[j])).collect();
                d_increasing &= par.windows(2).all(|w| w[1] > w[0]);
            }
        }
    }
    let endpoint_matches_collapse = {
        let forest: EdgeSet = scene.tree.edges.iter().copied().collect();
        collapse_forest(&g.abstract_graph(), forest).is_ok_and(|(q, _)| {
            canonical_form(&q).string() == canonical_form(&last.graph.abstract_graph()).string()
        })
    };
    let hausdorff_slope = frames
        .windows(2)
        .map(|w| hausdorff_within(&w[0].graph, &w[1].graph, 3.0) / (w[1].t - w[0].t))
        .fold(0.0, f64::max);
    FlowReport {
        frames: frames.len(),
        radial_identity_error,
        identity_at_zero_error,
        frame_zero_error,
        radial_deviation,
        d_increasing,
        endpoint_matches_collapse,
        hausdorff_slope,
    }
}

fn distance_to_graph_edge(p: &Point, e: &EmbeddedEdge) -> f64 {
    e.points
        .windows(2)
        .map(|w| point_segment_distance(p, &w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// A sample of an embedded graph: a vertex, or sample `index` of `edge`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleRef {
    Vertex { vertex: usize },
    Edge { edge: usize, index: usize },
}

/// Sampled partial map `G′ ⇢ G` as pairs of samples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub pairs: Vec<(SampleRef, SampleRef)>,
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoxRegion {
    pub fn contains(&self, p: &Point, dim: usize) -> bool {
        (0..dim).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    /// `{k ∈ K : dist(k, ℝᴺ − K) ≥ ε}`.
    pub fn eroded(&self, eps: f64) -> BoxRegion {
        BoxRegion {
            min: [self.min[0] + eps, self.min[1] + eps, self.min[2] + eps],
            max: [self.max[0] - eps, self.max[1] - eps, self.max[2] - eps],
        }
    }

    pub fn is_within(&self, other: &BoxRegion, dim: usize) -> bool {
        (0..dim).all(|i| other.min[i] <= self.min[i] && self.max[i] <= other.max[i])
    }
}

#[derive(Clone, Debug)]
pub struct SmallnessSpec {
    pub epsilon: f64,
    pub k: BoxRegion,
    pub q: Option<BoxRegion>,
    pub correspondence: Correspondence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallnessFailure {
    Coverage,
    Containment,
    Pointwise,
    Derivative,
    UndefinedCorrespondence,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallnessVerdict {
    pub small: bool,
    pub coverage: bool,
    pub containment: bool,
    pub pointwise: bool,
    pub derivative: Option<bool>,
    pub failure: Option<SmallnessFailure>,
    pub max_displacement: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum SmallnessError {
    #[error("sample {0:?} does not exist")]
    NoSuchSample(SampleRef),
    #[error("sample {0:?} of the domain is mapped twice")]
    NotAFunction(SampleRef),
    #[error("epsilon must be positive")]
    Epsilon,
    #[error("Q must lie inside K")]
    QOutsideK,
    #[error("graphs have different dimensions")]
    Dimension,
}

fn sample(g: &EmbeddedGraph, s: SampleRef) -> Option<Point> {
    match s {
        SampleRef::Vertex { vertex } => g.vertices.get(vertex).copied(),
        SampleRef::Edge { edge, index } => g.edges.get(edge).and_then(|e| e.points.get(index)).copied(),
    }
}

fn all_samples(g: &EmbeddedGraph) -> Vec<SampleRef> {
    let mut out: Vec<SampleRef> = (0..g.vertices.len()).map(|vertex| SampleRef::Vertex { vertex }).collect();
    for (edge, e) in g.edges.iter().enumerate() {
        // end samples coincide with vertices
        out.extend((1..e.points.len() - 1).map(|index| SampleRef::Edge { edge, index }));
    }
    out
}

/// `(ε, K)`- or `(ε, K, Q)`-smallness of the sampled map `G′ ⇢ G`.
pub fn check_smallness(
    g: &EmbeddedGraph,
    gprime: &EmbeddedGraph,
    spec: &SmallnessSpec,
) -> Result<SmallnessVerdict, SmallnessError> {
    if spec.epsilon <= 0.0 {
        return Err(SmallnessError::Epsilon);
    }
    if g.dim != gprime.dim && !(g.vertices.is_empty() || gprime.vertices.is_empty()) {
        return Err(SmallnessError::Dimension);
    }
    let dim = gprime.dim.max(g.dim);
    if let Some(q) = &spec.q {
        if !q.is_within(&spec.k, dim) {
            return Err(SmallnessError::QOutsideK);
        }
    }
    let mut map = std::collections::BTreeMap::new();
    for &(a, b) in &spec.correspondence.pairs {
        sample(gprime, a).ok_or(SmallnessError::NoSuchSample(a))?;
        sample(g, b).ok_or(SmallnessError::NoSuchSample(b))?;
        if map.insert(normalize(gprime, a), normalize(g, b)).is_some() {
            return Err(SmallnessError::NotAFunction(a));
        }
    }
    let image: BTreeSet<SampleRef> = map.values().copied().collect();
    let coverage = all_samples(g)
        .into_iter()
        .filter(|&s| spec.k.contains(&sample(g, s).unwrap(), dim))
        .all(|s| image.contains(&s));
    let inner = spec.k.eroded(spec.epsilon);
    let containment = all_samples(gprime)
        .into_iter()
        .filter(|&s| inner.contains(&sample(gprime, s).unwrap(), dim))
        .all(|s| map.get(&s).is_some_and(|&b| spec.k.contains(&sample(g, b).unwrap(), dim)));
    let mut max_displacement = 0.0f64;
    for (&a, &b) in &map {
        let y = sample(g, b).unwrap();
        if spec.k.contains(&y, dim) {
            max_displacement = max_displacement.max(dist(&sample(gprime, a).unwrap(), &y));
        }
    }
    let pointwise = max_displacement < spec.epsilon;
    let mut undefined = false;
    let derivative = spec.q.map(|q| {
        let inverse: std::collections::BTreeMap<SampleRef, SampleRef> = map.iter().map(|(&a, &b)| (b, a)).collect();
        let mut ok = true;
        for (edge, e) in g.edges.iter().enumerate() {
            for j in 1..e.points.len() - 1 {
                if !q.contains(&e.points[j], dim) {
                    continue;
                }
                let pre = |index: usize| {
                    inverse.get(&normalize(g, SampleRef::Edge { edge, index })).map(|&a| sample(gprime, a).unwrap())
                };
                let (Some(ya), Some(yb)) = (pre(j - 1), pre(j + 1)) else {
                    undefined = true;
                    continue;
                };
                let dt = e.params[j + 1] - e.params[j - 1];
                let dg = scale(&sub(&e.points[j + 1], &e.points[j - 1]), 1.0 / dt);
                let dpre = scale(&sub(&yb, &ya), 1.0 / dt);
                ok &= dist(&dg, &dpre) < spec.epsilon;
            }
        }
        ok
    });
    let failure = if undefined {
        Some(SmallnessFailure::UndefinedCorrespondence)
    } else if !coverage {
        Some(SmallnessFailure::Coverage)
    } else if !containment {
        Some(SmallnessFailure::Containment)
    } else if !pointwise {
        Some(SmallnessFailure::Pointwise)
    } else if derivative == Some(false) {
        Some(SmallnessFailure::Derivative)
    } else {
        None
    };
    Ok(SmallnessVerdict {
        small: failure.is_none(),
        coverage,
        containment,
        pointwise,
        derivative: if undefined { None } else { derivative },
        failure,
        max_displacement,
    })
}

/// End samples of an edge are the same points as its vertices.
fn normalize(g: &EmbeddedGraph, s: SampleRef) -> SampleRef {
    match s {
        SampleRef::Edge { edge, index } if index == 0 => SampleRef::Vertex { vertex: g.edges[edge].from },
        SampleRef::Edge { edge, index } if index + 1 == g.edges[edge].points.len() => {
            SampleRef::Vertex { vertex: g.edges[edge].to }
        }
        other => other,
    }
}

/// The identity correspondence of a graph onto a same-shaped graph.
pub fn identity_correspondence(g: &EmbeddedGraph) -> Correspondence {
    Correspondence { pairs: all_samples(g).into_iter().map(|s| (s, s)).collect() }
}

/// A star: `arms` radial edges from a center vertex at the origin to leaves
/// at radius `reach`.
pub fn radial_star(arms: usize, reach: f64, samples: usize) -> EmbeddedGraph {
    let mut vertices = vec![[0.0; 3]];
    let mut edges = Vec::new();
    for k in 0..arms {
        let a = std::f64::consts::TAU * k as f64 / arms as f64 + 0.3;
        vertices.push([reach * a.cos(), reach * a.sin(), 0.0]);
        edges.push(straight_edge(0, k + 1, [0.0; 3], vertices[k + 1], samples));
    }
    EmbeddedGraph { dim: 2, vertices, edges, leaves: (1..=arms).collect() }
}

/// Two trivalent vertices joined by a short edge inside the unit ball,
/// each with two arms bent outward to leaves at radius 4.
pub fn bent_tree_scene() -> (EmbeddedGraph, TreeSpec) {
    let a = [-0.3, 0.1, 0.0];
    let b = [0.35, -0.05, 0.0];
    let mut vertices = vec![a, b];
    let mut edges = vec![straight_edge(0, 1, a, b, 11)];
    let arms = [(0usize, 2.2f64), (0, 3.6), (1, -0.5), (1, 0.9)];
    for (k, &(root, angle)) in arms.iter().enumerate() {
        let start = vertices[root];
        let end = [4.0 * angle.cos(), 4.0 * angle.sin(), 0.0];
        vertices.push(end);
        // a radial path with a gentle angular drift
        let n = 41;
        let params: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let points = params
            .iter()
            .map(|&p| {
                let u = (p + 1.0) / 2.0;
                let r = norm(&start) * (1.0 - u) + 4.0 * u;
                let base = start[1].atan2(start[0]);
                let th = base + (angle - base) * u.powf(0.3);
                let q = [r * th.cos(), r * th.sin(), 0.0];
                if u == 0.0 { start } else if u == 1.0 { end } else { q }
            })
            .collect();
        edges.push(EmbeddedEdge { from: root, to: k + 2, params, points });
    }
    let g = EmbeddedGraph { dim: 2, vertices, edges, leaves: (2..6).collect() };
    (g, TreeSpec { vertices: vec![0, 1], edges: vec![0] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        let p = LambdaProfile;
        assert_eq!(p.value(1.0), 1.5);
        assert_eq!(p.value(1.6), 2.0);
        assert_eq!(p.value(3.0), 3.0);
        assert!((p.value(1.4 - 1e-12) - 2.0).abs() < 1e-9);
        assert!((p.value(2.5 - 1e-12) - 2.5).abs() < 1e-9);
        assert!(check_profile(10_000).passed());
    }

    #[test]
    fn lambda_t_is_continuous_in_t_and_r() {
        let a = FlowParams::new(THIRD - 1e-12).unwrap();
        let b = FlowParams::new(THIRD).unwrap();
        for i in 0..400 {
            let r = 4.0 * i as f64 / 399.0;
            assert!((a.lambda(r) - b.lambda(r)).abs() < 1e-9);
        }
        let h = FlowParams::new(0.5).unwrap();
        let cut = h.plateau_start();
        assert!((h.lambda(cut - 1e-12) - 2.0).abs() < 1e-9);
        assert_eq!(h.lambda(1.0), LambdaProfile.value(4.0 / 3.0));
    }

    #[test]
    fn preimage_inverts_lambda() {
        for &t in &[0.0, 0.1, 0.3, THIRD, 0.5, 0.9, 1.0] {
            let fp = FlowParams::new(t).unwrap();
            for i in 1..200 {
                let r = 4.0 * i as f64 / 200.0;
                let rho = fp.lambda(r);
                match fp.preimage(rho) {
                    Preimage::Radius(back) => assert!((fp.lambda(back) - rho).abs() < 1e-9, "t={t} r={r}"),
                    Preimage::Plateau(lo, hi) => assert!(rho == 2.0 && lo <= r + 1e-12 && r <= hi + 1e-12),
                    Preimage::Empty => assert!(t == 1.0 && rho < 2.0),
                }
            }
        }
    }

    #[test]
    fn phi_rejects_origin_at_time_one() {
        let fp = FlowParams::new(1.0).unwrap();
        assert_eq!(fp.phi(&[0.0; 3]), Err(FlowError::UndefinedAtOrigin));
        assert!(FlowParams::new(1.5).is_err());
        assert_eq!(FlowParams::new(0.0).unwrap().g(0.0), 1.0);
        assert_eq!(FlowParams::new(0.5).unwrap().g(0.0), 0.5);
    }

    #[test]
    fn star_scene_passes() {
        let g = radial_star(3, 4.0, 41);
        let scene = check_collapsible(&g, &TreeSpec { vertices: vec![0], edges: vec![] }).unwrap();
        assert_eq!(scene.incident.len(), 3);
        let report = check_flow(&scene, 10);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn bent_scene_passes() {
        let (g, tree) = bent_tree_scene();
        let scene = check_collapsible(&g, &tree).unwrap();
        let report = check_flow(&scene, 12);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn tree_on_sphere_fails() {
        let mut g = radial_star(3, 4.0, 41);
        let shift = [1.0, 0.0, 0.0];
        g.vertices[0] = shift;
        for e in &mut g.edges {
            e.points[0] = shift;
        }
        let err = check_collapsible(&g, &TreeSpec { vertices: vec![0], edges: vec![] }).unwrap_err();
        assert!(err.iter().any(|v| v.clause == "tree_in_unit_ball"));
    }

    #[test]
    fn inward_shell_segment_fails() {
        let mut g = radial_star(3, 4.0, 41);
        // push one arm back towards the origin inside the shell
        let e = &mut g.edges[0];
        let j = 20;
        e.points[j] = scale(&e.points[j], 0.6);
        let err = check_collapsible(&g, &TreeSpec { vertices: vec![0], edges: vec![] }).unwrap_err();
        assert!(err.iter().any(|v| v.clause == "shell_inner_product"));
    }

    #[test]
    fn json_roundtrip() {
        let (g, tree) = bent_tree_scene();
        let (back, none) = EmbeddedGraph::from_json(&g.to_json()).unwrap();
        assert!(none.is_none());
        assert_eq!(back.edges.len(), g.edges.len());
        assert!(back.points().zip(g.points()).all(|(a, b)| dist(a, b) < 1e-12));
        let _ = tree;
    }
}
