//! Cellular maps, graph epimorphisms and forest collapses.

use serde::{Deserialize, Serialize};

use crate::edgeset::EdgeSet;
use crate::graph::AbstractGraph;

/// A set map between the elements of two graphs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellularMap {
    pub domain: AbstractGraph,
    pub codomain: AbstractGraph,
    pub f: Vec<usize>,
}

/// Why a map fails to be a graph epimorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EpiFailure {
    #[error("not a cellular map (does not commute with sigma and t)")]
    NotCellular,
    #[error("half-edge {0} of the codomain does not have exactly one half-edge preimage")]
    HalfEdgePreimage(usize),
    #[error("preimage of vertex {0} is not a tree")]
    VertexPreimageNotTree(usize),
    #[error("leaf {0} is collapsed, unlabelled, or mapped to a different label")]
    LeafViolation(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum MorphismError {
    #[error("edge {0} is a loop")]
    LoopInForest(usize),
    #[error("edge {0} meets a leaf")]
    LeafEdgeInForest(usize),
    #[error("edge set contains a cycle")]
    NotAcyclic,
    #[error("edge id {0} out of range")]
    NoSuchEdge(usize),
    #[error("forest {0} of the chain is empty or not a strict superset of its predecessor")]
    NotNested(usize),
    #[error("codomain of the first map is not the domain of the second")]
    Mismatch,
    #[error("not an epimorphism: {0}")]
    NotEpimorphism(#[from] EpiFailure),
}

impl CellularMap {
    pub fn identity(g: &AbstractGraph) -> Self {
        CellularMap {
            domain: g.clone(),
            codomain: g.clone(),
            f: (0..g.num_elements()).collect(),
        }
    }

    pub fn is_cellular(&self) -> bool {
        let (d, c) = (&self.domain, &self.codomain);
        self.f.len() == d.num_elements()
            && self.f.iter().all(|&y| y < c.num_elements())
            && (0..d.num_elements()).all(|x| {
                self.f[d.sigma(x)] == c.sigma(self.f[x]) && self.f[d.t(x)] == c.t(self.f[x])
            })
    }

    /// Checks the epimorphism conditions, returning the first failure.
    ///
    /// Vertex preimages must be trees. A tree containing a labelled leaf
    /// must be that leaf alone, and it must land on the leaf with the same
    /// label; this keeps identities of leaved graphs epimorphisms.
    pub fn check_epimorphism(&self) -> Result<(), EpiFailure> {
        if !self.is_cellular() {
            return Err(EpiFailure::NotCellular);
        }
        let (d, c) = (&self.domain, &self.codomain);
        let mut count = vec![0usize; c.num_elements()];
        for x in d.half_edges() {
            count[self.f[x]] += 1;
        }
        for y in c.half_edges() {
            if count[y] != 1 {
                return Err(EpiFailure::HalfEdgePreimage(y));
            }
        }
        let d_vertices = d.vertices();
        let d_edges = d.edges();
        for w in c.vertices() {
            let verts: Vec<usize> = d_vertices.iter().copied().filter(|&v| self.f[v] == w).collect();
            let edges: EdgeSet = d_edges
                .iter()
                .enumerate()
                .filter(|(_, &(a, _))| self.f[a] == w)
                .map(|(e, _)| e)
                .collect();
            let is_tree = match verts.len() {
                0 => false,
                1 => edges.is_empty(),
                n => edges.len() == n - 1 && d.subgraph_is_tree(edges),
            };
            if !is_tree {
                return Err(EpiFailure::VertexPreimageNotTree(w));
            }
            let leaves: Vec<usize> = verts.iter().copied().filter(|&v| d.is_leaf(v)).collect();
            if let Some(&leaf) = leaves.first() {
                let ok = verts.len() == 1
                    && c.is_leaf(w)
                    && d.leaf_label(leaf).is_some()
                    && d.leaf_label(leaf) == c.leaf_label(w);
                if !ok {
                    return Err(EpiFailure::LeafViolation(leaf));
                }
            }
        }
        for (&v, &l) in d.leaf_labels() {
            if c.leaf_label(self.f[v]) != Some(l) {
                return Err(EpiFailure::LeafViolation(v));
            }
        }
        Ok(())
    }

    pub fn is_graph_epimorphism(&self) -> bool {
        self.check_epimorphism().is_ok()
    }

    /// Edges of the domain sent to a vertex.
    pub fn collapsed_edges(&self) -> EdgeSet {
        self.domain
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &(a, _))| self.codomain.is_vertex(self.f[a]))
            .map(|(e, _)| e)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serialization")
    }
}

/// A cellular map known to satisfy the epimorphism conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEpimorphism(CellularMap);

impl GraphEpimorphism {
    pub fn new(map: CellularMap) -> Result<Self, EpiFailure> {
        map.check_epimorphism()?;
        Ok(GraphEpimorphism(map))
    }

    pub fn identity(g: &AbstractGraph) -> Self {
        GraphEpimorphism(CellularMap::identity(g))
    }

    pub fn map(&self) -> &CellularMap {
        &self.0
    }

    pub fn domain(&self) -> &AbstractGraph {
        &self.0.domain
    }

    pub fn codomain(&self) -> &AbstractGraph {
        &self.0.codomain
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0.f[x]
    }

    pub fn into_map(self) -> CellularMap {
        self.0
    }
}

/// A set of edges forming a forest in its host: no loops, no edges at a
/// leaf, no cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Forest(EdgeSet);

impl Forest {
    pub fn new(host: &AbstractGraph, edges: EdgeSet) -> Result<Self, MorphismError> {
        let ends = host.edge_endpoints();
        let val = host.valences();
        for e in edges.iter() {
            let &(u, v) = ends.get(e).ok_or(MorphismError::NoSuchEdge(e))?;
            if u == v {
                return Err(MorphismError::LoopInForest(e));
            }
            if val[u] == 1 || val[v] == 1 {
                return Err(MorphismError::LeafEdgeInForest(e));
            }
        }
        if !host.is_acyclic(edges) {
            return Err(MorphismError::NotAcyclic);
        }
        Ok(Forest(edges))
    }

    /// Wraps an edge set already known to be a forest of its host.
    pub fn new_unchecked(edges: EdgeSet) -> Self {
        Forest(edges)
    }

    pub fn edges(self) -> EdgeSet {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.len()
    }

    pub fn is_empty(self) -> bool {
        self.0.is_empty()
    }
}

/// Strictly nested nonempty forests `F_1 < F_2 < ... < F_k` of one host.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ForestChain(Vec<Forest>);

impl ForestChain {
    pub fn new(host: &AbstractGraph, forests: Vec<EdgeSet>) -> Result<Self, MorphismError> {
        let mut out = Vec::with_capacity(forests.len());
        for (i, &f) in forests.iter().enumerate() {
            let forest = Forest::new(host, f)?;
            let nested = if i == 0 {
                !f.is_empty()
            } else {
                forests[i - 1].is_strict_subset(f)
            };
            if !nested {
                return Err(MorphismError::NotNested(i));
            }
            out.push(forest);
        }
        Ok(ForestChain(out))
    }

    pub fn new_unchecked(forests: Vec<Forest>) -> Self {
        ForestChain(forests)
    }

    pub fn forests(&self) -> &[Forest] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Edge colouring by least chain index containing the edge (1-based; 0
    /// for edges in no forest).
    pub fn levels(&self, num_edges: usize) -> Vec<u32> {
        let mut lv = vec![0u32; num_edges];
        for (i, f) in self.0.iter().enumerate().rev() {
            for e in f.edges().iter() {
                lv[e] = i as u32 + 1;
            }
        }
        lv
    }
}

/// Collapses every tree of `forest` to a point.
///
/// Surviving elements keep their relative order; each tree is replaced by
/// its least vertex.
pub fn collapse_forest(
    g: &AbstractGraph,
    forest: EdgeSet,
) -> Result<(AbstractGraph, GraphEpimorphism), MorphismError> {
    Forest::new(g, forest)?;
    let m = g.num_elements();
    let edges = g.edges();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut dropped = vec![false; m];
    for e in forest.iter() {
        let (a, b) = edges[e];
        dropped[a] = true;
        dropped[b] = true;
        let (ra, rb) = (find(&mut parent, g.t(a)), find(&mut parent, g.t(b)));
        // keep the least vertex as representative
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
    // representative vertex for every element
    let mut rep = vec![0; m];
    for x in 0..m {
        rep[x] = if g.is_vertex(x) {
            find(&mut parent, x)
        } else {
            x
        };
    }
    let mut new_id = vec![usize::MAX; m];
    let mut next = 0;
    for x in 0..m {
        let survives = if g.is_vertex(x) { rep[x] == x } else { !dropped[x] };
        if survives {
            new_id[x] = next;
            next += 1;
        }
    }
    let n = next;
    let mut f = vec![0; m];
    for x in 0..m {
        f[x] = if g.is_vertex(x) {
            new_id[rep[x]]
        } else if dropped[x] {
            new_id[find(&mut parent, g.t(x))]
        } else {
            new_id[x]
        };
    }
    let mut sigma = vec![0; n];
    let mut t = vec![0; n];
    for x in 0..m {
        if new_id[x] != usize::MAX {
            sigma[new_id[x]] = f[g.sigma(x)];
            t[new_id[x]] = f[g.t(x)];
        }
    }
    let labels = g
        .leaf_labels()
        .iter()
        .map(|(&v, &l)| (f[v], l))
        .collect();
    let quotient = AbstractGraph::from_parts(sigma, t, labels);
    let map = CellularMap {
        domain: g.clone(),
        codomain: quotient.clone(),
        f,
    };
    debug_assert!(map.is_graph_epimorphism());
    Ok((quotient, GraphEpimorphism(map)))
}

/// Image of an edge set of the domain under an epimorphism, as edge ids of
/// the codomain (edges that collapse are dropped).
pub fn image_edges(map: &GraphEpimorphism, edges: EdgeSet) -> EdgeSet {
    let dom = map.domain().edges();
    let cod_idx = map.codomain().edge_index();
    edges
        .iter()
        .filter_map(|e| cod_idx[map.apply(dom[e].0)])
        .collect()
}

/// `second` after `first`.
pub fn compose(
    first: &GraphEpimorphism,
    second: &GraphEpimorphism,
) -> Result<GraphEpimorphism, MorphismError> {
    if first.codomain() != second.domain() {
        return Err(MorphismError::Mismatch);
    }
    let f = first.0.f.iter().map(|&y| second.0.f[y]).collect();
    let map = CellularMap {
        domain: first.domain().clone(),
        codomain: second.codomain().clone(),
        f,
    };
    Ok(GraphEpimorphism::new(map)?)
}

/// One step of a factorisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    /// Collapse of a single non-loop, non-leaf edge (edge id in the step's
    /// domain).
    Collapse { edge: usize, map: GraphEpimorphism },
    Isomorphism(GraphEpimorphism),
}

impl Factor {
    pub fn map(&self) -> &GraphEpimorphism {
        match self {
            Factor::Collapse { map, .. } | Factor::Isomorphism(map) => map,
        }
    }
}

/// Writes an epimorphism as elementary collapses (in increasing edge order
/// of the original domain) followed by one isomorphism.
pub fn factor_as_collapses(m: &GraphEpimorphism) -> Result<Vec<Factor>, MorphismError> {
    let collapsed = m.map().collapsed_edges();
    let original_edges = m.domain().edges();
    let mut steps = Vec::new();
    let mut current = GraphEpimorphism::identity(m.domain());
    for e in collapsed.iter() {
        let (a, _) = original_edges[e];
        let here = current.apply(a);
        let idx = current.codomain().edge_index()[here].expect("uncollapsed half-edge");
        let (_, step) = collapse_forest(current.codomain(), EdgeSet::singleton(idx))?;
        current = compose(&current, &step)?;
        steps.push(Factor::Collapse {
            edge: idx,
            map: step,
        });
    }
    // current: domain -> domain/F is surjective; m factors through it
    let mid = current.codomain().clone();
    let mut iso = vec![usize::MAX; mid.num_elements()];
    for x in 0..m.domain().num_elements() {
        iso[current.apply(x)] = m.apply(x);
    }
    let iso = GraphEpimorphism::new(CellularMap {
        domain: mid,
        codomain: m.codomain().clone(),
        f: iso,
    })?;
    steps.push(Factor::Isomorphism(iso));
    Ok(steps)
}

/// Composes a factorisation back into a single map.
pub fn compose_all(steps: &[Factor]) -> Result<GraphEpimorphism, MorphismError> {
    let mut it = steps.iter();
    let first = it.next().ok_or(MorphismError::Mismatch)?.map().clone();
    it.try_fold(first, |acc, s| compose(&acc, s.map()))
}
