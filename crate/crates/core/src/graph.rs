//! Finite abstract graphs in the half-edge formalism.
//!
//! A graph is a finite set of elements `0..m` together with an involution
//! `sigma` and a retraction `t` onto the fixed points of `sigma`. Fixed
//! points are vertices; the remaining elements are half-edges, paired into
//! edges by `sigma`, and `t` sends a half-edge to the vertex it is attached
//! to. Valence-1 vertices are leaves and carry labels `1..=s`.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::edgeset::EdgeSet;

/// A finite abstract graph `(G, sigma, t)` with labelled leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbstractGraph {
    sigma: Vec<usize>,
    t: Vec<usize>,
    leaf_labels: BTreeMap<usize, u32>,
}

/// Counts attached to a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInvariants {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_components: usize,
    /// First Betti number `E - V + components`.
    pub betti: usize,
    pub leaf_count: usize,
}

/// Malformations of the underlying `(sigma, t)` data. A graph with any of
/// these is not a graph at all; the remaining checks are skipped.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StructuralError {
    #[error("sigma has length {sigma} but t has length {t}")]
    LengthMismatch { sigma: usize, t: usize },
    #[error("element {element} maps outside 0..{m}")]
    OutOfRange { element: usize, m: usize },
    #[error("sigma is not a permutation")]
    SigmaNotPermutation,
    #[error("sigma is not an involution at element {element}")]
    SigmaNotInvolution { element: usize },
    #[error("t({element}) = {image} is not a fixed point of sigma")]
    RetractionNotIntoVertices { element: usize, image: usize },
    #[error("t moves the vertex {vertex}")]
    RetractionMovesVertex { vertex: usize },
    #[error("leaf label attached to non-vertex element {element}")]
    LabelOnHalfEdge { element: usize },
}

/// Violations of the valence and leaf-labelling conditions.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("vertex {vertex} has valence 0")]
    ValenceZero { vertex: usize },
    #[error("vertex {vertex} has valence 2")]
    ValenceTwo { vertex: usize },
    #[error("leaf {vertex} carries no label")]
    UnlabelledLeaf { vertex: usize },
    #[error("vertex {vertex} of valence {valence} carries a leaf label")]
    LabelOnNonLeaf { vertex: usize, valence: usize },
    #[error("leaf labels are not exactly 1..={expected}")]
    LabelsNotContiguous { expected: usize },
}

/// Outcome of [`AbstractGraph::validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub structural: Vec<StructuralError>,
    pub violations: Vec<Violation>,
    /// Connectivity is reported but not required; catalogs reject
    /// disconnected graphs separately.
    pub connected: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.structural.is_empty() && self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        let msgs: Vec<String> = self
            .structural
            .iter()
            .map(|e| format!("structural: {e}"))
            .chain(self.violations.iter().map(|v| v.to_string()))
            .collect();
        write!(f, "{}", msgs.join("; "))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(ValidationReport),
    #[error("malformed graph json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph json field m = {m} disagrees with array lengths {sigma}/{t}")]
    SizeField { m: usize, sigma: usize, t: usize },
    #[error("leaf label key {0:?} is not a vertex id")]
    BadLabelKey(String),
}

impl AbstractGraph {
    /// Assembles a graph without checking anything; see [`Self::validate`].
    pub fn from_parts(sigma: Vec<usize>, t: Vec<usize>, leaf_labels: BTreeMap<usize, u32>) -> Self {
        AbstractGraph {
            sigma,
            t,
            leaf_labels,
        }
    }

    /// Assembles a graph and rejects it unless [`Self::validate`] passes.
    pub fn new(
        sigma: Vec<usize>,
        t: Vec<usize>,
        leaf_labels: BTreeMap<usize, u32>,
    ) -> Result<Self, GraphError> {
        let g = Self::from_parts(sigma, t, leaf_labels);
        let report = g.validate();
        if report.is_valid() {
            Ok(g)
        } else {
            Err(GraphError::Invalid(report))
        }
    }

    /// Builds a graph from `num_vertices` vertices and a list of edges given
    /// as vertex-index pairs. Vertices get element ids `0..num_vertices`,
    /// edge `i` gets half-edges `num_vertices + 2i` (at the first endpoint)
    /// and `num_vertices + 2i + 1`.
    pub fn from_edge_list(
        num_vertices: usize,
        edges: &[(usize, usize)],
        leaf_labels: &[(usize, u32)],
    ) -> Self {
        let m = num_vertices + 2 * edges.len();
        let mut sigma: Vec<usize> = (0..m).collect();
        let mut t: Vec<usize> = (0..m).collect();
        for (i, &(u, v)) in edges.iter().enumerate() {
            let a = num_vertices + 2 * i;
            let b = a + 1;
            sigma[a] = b;
            sigma[b] = a;
            t[a] = u;
            t[b] = v;
        }
        Self::from_parts(sigma, t, leaf_labels.iter().copied().collect())
    }

    pub fn num_elements(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self, x: usize) -> usize {
        self.sigma[x]
    }

    pub fn t(&self, x: usize) -> usize {
        self.t[x]
    }

    pub fn sigma_slice(&self) -> &[usize] {
        &self.sigma
    }

    pub fn t_slice(&self) -> &[usize] {
        &self.t
    }

    pub fn leaf_labels(&self) -> &BTreeMap<usize, u32> {
        &self.leaf_labels
    }

    pub fn leaf_label(&self, v: usize) -> Option<u32> {
        self.leaf_labels.get(&v).copied()
    }

    pub fn is_vertex(&self, x: usize) -> bool {
        self.sigma[x] == x
    }

    pub fn vertices(&self) -> Vec<usize> {
        (0..self.num_elements()).filter(|&x| self.is_vertex(x)).collect()
    }

    pub fn half_edges(&self) -> Vec<usize> {
        (0..self.num_elements()).filter(|&x| !self.is_vertex(x)).collect()
    }

    /// Edges as half-edge pairs `(x, sigma x)` with `x < sigma x`, ordered by
    /// `x`. The position in this list is the edge id.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_elements())
            .filter(|&x| self.sigma[x] > x)
            .map(|x| (x, self.sigma[x]))
            .collect()
    }

    pub fn num_edges(&self) -> usize {
        (0..self.num_elements()).filter(|&x| self.sigma[x] > x).count()
    }

    /// Edge id of every half-edge; `None` for vertices.
    pub fn edge_index(&self) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.num_elements()];
        for (e, (a, b)) in self.edges().into_iter().enumerate() {
            idx[a] = Some(e);
            idx[b] = Some(e);
        }
        idx
    }

    /// Endpoint vertices of each edge, in half-edge order.
    pub fn edge_endpoints(&self) -> Vec<(usize, usize)> {
        self.edges()
            .into_iter()
            .map(|(a, b)| (self.t[a], self.t[b]))
            .collect()
    }

    pub fn valence(&self, v: usize) -> usize {
        (0..self.num_elements())
            .filter(|&x| x != v && self.t[x] == v)
            .count()
    }

    pub fn valences(&self) -> Vec<usize> {
        let mut val = vec![0; self.num_elements()];
        for x in 0..self.num_elements() {
            if !self.is_vertex(x) {
                val[self.t[x]] += 1;
            }
        }
        val
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.is_vertex(v) && self.valence(v) == 1
    }

    /// Whether edge `e` is a loop.
    pub fn is_loop(&self, e: usize) -> bool {
        let (a, b) = self.edges()[e];
        self.t[a] == self.t[b]
    }

    /// Edges that may appear in a forest: neither loops nor incident to a
    /// valence-1 vertex.
    pub fn collapsible_edges(&self) -> EdgeSet {
        let val = self.valences();
        self.edge_endpoints()
            .into_iter()
            .enumerate()
            .filter(|&(_, (u, v))| u != v && val[u] != 1 && val[v] != 1)
            .map(|(e, _)| e)
            .collect()
    }

    /// Runs every structural and combinatorial check.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let m = self.sigma.len();
        if self.t.len() != m {
            report.structural.push(StructuralError::LengthMismatch {
                sigma: m,
                t: self.t.len(),
            });
            return report;
        }
        for x in 0..m {
            for image in [self.sigma[x], self.t[x]] {
                if image >= m {
                    report
                        .structural
                        .push(StructuralError::OutOfRange { element: x, m });
                }
            }
        }
        if !report.structural.is_empty() {
            return report;
        }
        let mut seen = vec![false; m];
        for &y in &self.sigma {
            seen[y] = true;
        }
        if seen.iter().any(|s| !s) {
            report.structural.push(StructuralError::SigmaNotPermutation);
            return report;
        }
        for x in 0..m {
            if self.sigma[self.sigma[x]] != x {
                report
                    .structural
                    .push(StructuralError::SigmaNotInvolution { element: x });
            }
        }
        for x in 0..m {
            let image = self.t[x];
            if self.sigma[image] != image {
                report
                    .structural
                    .push(StructuralError::RetractionNotIntoVertices { element: x, image });
            } else if self.sigma[x] == x && image != x {
                report
                    .structural
                    .push(StructuralError::RetractionMovesVertex { vertex: x });
            }
        }
        for &v in self.leaf_labels.keys() {
            if v >= m || self.sigma[v] != v {
                report
                    .structural
                    .push(StructuralError::LabelOnHalfEdge { element: v });
            }
        }
        if !report.structural.is_empty() {
            return report;
        }

        let val = self.valences();
        let mut leaves = 0;
        for v in self.vertices() {
            match val[v] {
                0 => report.violations.push(Violation::ValenceZero { vertex: v }),
                2 => report.violations.push(Violation::ValenceTwo { vertex: v }),
                1 => {
                    leaves += 1;
                    if !self.leaf_labels.contains_key(&v) {
                        report
                            .violations
                            .push(Violation::UnlabelledLeaf { vertex: v });
                    }
                }
                _ => {}
            }
            if val[v] != 1 && self.leaf_labels.contains_key(&v) {
                report.violations.push(Violation::LabelOnNonLeaf {
                    vertex: v,
                    valence: val[v],
                });
            }
        }
        let mut labels: Vec<u32> = self.leaf_labels.values().copied().collect();
        labels.sort_unstable();
        let contiguous = labels
            .iter()
            .enumerate()
            .all(|(i, &l)| l as usize == i + 1);
        if !contiguous || labels.len() != leaves {
            report
                .violations
                .push(Violation::LabelsNotContiguous { expected: leaves });
        }
        report.connected = self.num_components() <= 1;
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_valid()
    }

    pub fn num_components(&self) -> usize {
        let m = self.num_elements();
        let mut uf = UnionFind::<usize>::new(m);
        for x in 0..m {
            uf.union(x, self.t[x]);
            uf.union(x, self.sigma[x]);
        }
        let mut roots: Vec<usize> = self.vertices().into_iter().map(|v| uf.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() == 1
    }

    pub fn invariants(&self) -> GraphInvariants {
        let num_vertices = self.vertices().len();
        let num_edges = self.num_edges();
        let num_components = self.num_components();
        GraphInvariants {
            num_vertices,
            num_edges,
            num_components,
            betti: num_edges + num_components - num_vertices,
            leaf_count: self.leaf_labels.len(),
        }
    }

    /// Whether the given edges span a nonempty tree.
    pub fn subgraph_is_tree(&self, edges: EdgeSet) -> bool {
        if edges.is_empty() {
            return false;
        }
        let ends = self.edge_endpoints();
        let mut uf = UnionFind::<usize>::new(self.num_elements());
        let mut touched = Vec::new();
        for e in edges.iter() {
            let Some(&(u, v)) = ends.get(e) else {
                return false;
            };
            if !uf.union(u, v) {
                return false;
            }
            touched.push(u);
            touched.push(v);
        }
        let root = uf.find(touched[0]);
        touched.iter().all(|&v| uf.find(v) == root)
    }

    /// Whether the given edges contain no cycle (loops count as cycles).
    pub fn is_acyclic(&self, edges: EdgeSet) -> bool {
        let ends = self.edge_endpoints();
        let mut uf = UnionFind::<usize>::new(self.num_elements());
        edges.iter().all(|e| {
            let (u, v) = ends[e];
            uf.union(u, v)
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphJson::from(self)).expect("graph serialization")
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        let raw: GraphJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

/// Wire format: `{"m": int, "sigma": [...], "t": [...], "leaf_labels": {"<vertex id>": int}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub m: usize,
    pub sigma: Vec<usize>,
    pub t: Vec<usize>,
    pub leaf_labels: BTreeMap<String, u32>,
}

impl From<&AbstractGraph> for GraphJson {
    fn from(g: &AbstractGraph) -> Self {
        GraphJson {
            m: g.num_elements(),
            sigma: g.sigma.clone(),
            t: g.t.clone(),
            leaf_labels: g
                .leaf_labels
                .iter()
                .map(|(&v, &l)| (v.to_string(), l))
                .collect(),
        }
    }
}

impl TryFrom<GraphJson> for AbstractGraph {
    type Error = GraphError;

    /// Parses the wire format. Only the shape is checked here; call
    /// [`AbstractGraph::validate`] for the graph axioms.
    fn try_from(raw: GraphJson) -> Result<Self, GraphError> {
        if raw.sigma.len() != raw.m || raw.t.len() != raw.m {
            return Err(GraphError::SizeField {
                m: raw.m,
                sigma: raw.sigma.len(),
                t: raw.t.len(),
            });
        }
        let mut labels = BTreeMap::new();
        for (k, l) in raw.leaf_labels {
            let v: usize = k.parse().map_err(|_| GraphError::BadLabelKey(k.clone()))?;
            labels.insert(v, l);
        }
        Ok(AbstractGraph::from_parts(raw.sigma, raw.t, labels))
    }
}

impl Serialize for AbstractGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AbstractGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = GraphJson::deserialize(deserializer)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

/// Small named graphs used throughout the tests and examples.
pub mod named {
    use super::AbstractGraph;

    /// One vertex with `n` loops.
    pub fn rose(n: usize) -> AbstractGraph {
        AbstractGraph::from_edge_list(1, &vec![(0, 0); n], &[])
    }

    /// Two vertices joined by three parallel edges.
    pub fn theta() -> AbstractGraph {
        AbstractGraph::from_edge_list(2, &[(0, 1), (0, 1), (0, 1)], &[])
    }

    /// Two loops joined by a bridge; the bridge is edge 2.
    pub fn dumbbell() -> AbstractGraph {
        AbstractGraph::from_edge_list(2, &[(0, 0), (1, 1), (0, 1)], &[])
    }

    /// A single edge whose endpoints are leaves labelled 1 and 2.
    pub fn segment() -> AbstractGraph {
        AbstractGraph::from_edge_list(2, &[(0, 1)], &[(0, 1), (1, 2)])
    }

    /// A loop at a trivalent vertex carrying a whisker to leaf 1.
    pub fn lollipop() -> AbstractGraph {
        AbstractGraph::from_edge_list(2, &[(0, 0), (0, 1)], &[(1, 1)])
    }

    /// One vertex with a single loop (invalid: valence 2).
    pub fn single_loop() -> AbstractGraph {
        rose(1)
    }
}

#[cfg(test)]
mod tests {
    use super::named::*;
    use super::*;

    #[test]
    fn single_loop_fails_on_valence_two() {
        let r = single_loop().validate();
        assert!(r.structural.is_empty());
        assert_eq!(r.violations, vec![Violation::ValenceTwo { vertex: 0 }]);
    }

    #[test]
    fn theta_and_segment_pass() {
        assert!(theta().validate().is_valid());
        let seg = segment();
        assert!(seg.validate().is_valid());
        let inv = seg.invariants();
        assert_eq!((inv.betti, inv.leaf_count), (0, 2));
    }

    #[test]
    fn structural_errors_are_distinct() {
        let g = AbstractGraph::from_parts(vec![1, 2, 0], vec![0, 1, 2], BTreeMap::new());
        let r = g.validate();
        assert!(r.violations.is_empty());
        assert!(!r.structural.is_empty());

        let g = AbstractGraph::from_parts(vec![0, 2, 1], vec![0, 1, 0], BTreeMap::new());
        let r = g.validate();
        assert!(matches!(
            r.structural[0],
            StructuralError::RetractionNotIntoVertices { element: 1, image: 1 }
        ));

        let g = AbstractGraph::from_parts(vec![0, 3, 5, 1], vec![0, 0, 0, 0], BTreeMap::new());
        assert!(matches!(
            g.validate().structural[0],
            StructuralError::OutOfRange { .. }
        ));
    }

    #[test]
    fn unlabelled_and_mislabelled_leaves() {
        let g = AbstractGraph::from_edge_list(2, &[(0, 0), (0, 1)], &[]);
        assert!(g
            .validate()
            .violations
            .contains(&Violation::UnlabelledLeaf { vertex: 1 }));
        let g = AbstractGraph::from_edge_list(2, &[(0, 0), (0, 1)], &[(1, 2)]);
        assert!(g
            .validate()
            .violations
            .contains(&Violation::LabelsNotContiguous { expected: 1 }));
        let g = AbstractGraph::from_edge_list(2, &[(0, 0), (0, 1)], &[(0, 1), (1, 2)]);
        assert!(g.validate().violations.contains(&Violation::LabelOnNonLeaf {
            vertex: 0,
            valence: 3
        }));
    }

    #[test]
    fn disconnected_graphs_validate_but_report_it() {
        let g = AbstractGraph::from_edge_list(4, &[(0, 1), (0, 1), (0, 1), (2, 3), (2, 3), (2, 3)], &[]);
        let r = g.validate();
        assert!(r.is_valid());
        assert!(!r.connected);
        let inv = g.invariants();
        assert_eq!((inv.num_components, inv.betti), (2, 4));
    }

    #[test]
    fn invariants_of_small_graphs() {
        let r = rose(2).invariants();
        assert_eq!((r.betti, r.num_vertices, r.num_edges), (2, 1, 2));
        assert_eq!(theta().invariants().betti, 2);
        let d = dumbbell().invariants();
        assert_eq!((d.betti, d.num_vertices, d.num_edges), (2, 2, 3));
        for g in [rose(2), theta(), dumbbell(), lollipop()] {
            let inv = g.invariants();
            let total: usize = g.vertices().iter().map(|&v| g.valence(v)).sum();
            assert_eq!(total, 2 * inv.num_edges);
        }
    }

    #[test]
    fn tree_subgraphs() {
        let th = theta();
        assert!(!th.subgraph_is_tree(EdgeSet::from_iter([0, 1])));
        assert!(th.subgraph_is_tree(EdgeSet::from_iter([0])));
        assert!(dumbbell().subgraph_is_tree(EdgeSet::from_iter([2])));
        assert!(!dumbbell().subgraph_is_tree(EdgeSet::from_iter([0])));
        assert!(!th.subgraph_is_tree(EdgeSet::empty()));
    }

    #[test]
    fn json_shape() {
        let g = lollipop();
        let s = g.to_json();
        assert_eq!(
            s,
            r#"{"m":6,"sigma":[0,1,3,2,5,4],"t":[0,1,0,0,0,1],"leaf_labels":{"1":1}}"#
        );
        assert_eq!(AbstractGraph::from_json(&s).unwrap(), g);
        assert!(matches!(
            AbstractGraph::from_json(r#"{"m":3,"sigma":[0],"t":[0],"leaf_labels":{}}"#),
            Err(GraphError::SizeField { .. })
        ));
    }
}
