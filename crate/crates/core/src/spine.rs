//! The rational chain complex of the quotient spine.
//!
//! A `k`-cell is an isomorphism class of pairs `(G, F_1 ⊊ … ⊊ F_k)` of a
//! catalog graph and a chain of nonempty forests. A chain is stored as its
//! level vector (each edge gets the least `i` with the edge in `F_i`, or 0),
//! packed four bits per edge. Since catalog graphs are canonical
//! representatives, the class of the pair is the graph index together with
//! the least packed level vector over the edge automorphisms of `G`.

use std::collections::HashMap;
use std::io::{self, Write};
use std::path::Path;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::canon::{canonical_form, colored_canonical_form, edge_automorphisms};
use crate::edgeset::EdgeSet;
use crate::enumeration::{enumerate_forests, Catalog};
use crate::linalg::{self, RankMode, RankResult, SparseIntMatrix};
use crate::morphism::{collapse_forest, compose, image_edges, Forest, ForestChain, GraphEpimorphism};
use crate::par::Executor;

const LEVEL_BITS: usize = 4;
const MAX_PACKED_EDGES: usize = 64 / LEVEL_BITS;
const MAX_LEVEL: usize = (1 << LEVEL_BITS) - 1;

#[derive(Debug, thiserror::Error)]
pub enum SpineError {
    #[error("catalog for rank {n} with {s} leaves is empty or missing")]
    MissingCatalog { n: usize, s: usize },
    #[error("graph {0} has more than {MAX_PACKED_EDGES} edges")]
    TooManyEdges(usize),
    #[error("quotient of catalog graph {graph} is missing from the catalog")]
    QuotientNotInCatalog { graph: usize },
    #[error("face {face} of {dim}-cell {cell} is not a cell of the complex")]
    MissingFace { dim: usize, cell: usize, face: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A cell as a catalog graph plus a forest chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpineCell {
    pub graph: usize,
    pub chain: ForestChain,
}

impl SpineCell {
    pub fn dimension(&self) -> usize {
        self.chain.len()
    }
}

/// Compact cell identity: catalog index and canonical packed levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CellKey {
    pub graph: u32,
    pub levels: u64,
}

fn level_of(packed: u64, e: usize) -> usize {
    (packed >> (LEVEL_BITS * e)) as usize & MAX_LEVEL
}

fn pack(levels: &[usize]) -> u64 {
    levels
        .iter()
        .enumerate()
        .fold(0, |acc, (e, &l)| acc | (l as u64) << (LEVEL_BITS * e))
}

fn unpack(packed: u64, num_edges: usize) -> Vec<usize> {
    (0..num_edges).map(|e| level_of(packed, e)).collect()
}

fn mask_at_most(packed: u64, num_edges: usize, i: usize) -> EdgeSet {
    (0..num_edges)
        .filter(|&e| (1..=i).contains(&level_of(packed, e)))
        .collect()
}

#[derive(Clone, Debug)]
struct ForestData {
    quotient: u32,
    /// Edge id in the quotient for each surviving edge of the host.
    edge_map: Vec<u8>,
}

#[derive(Clone, Debug)]
struct GraphData {
    num_edges: usize,
    forests: Vec<EdgeSet>,
    by_mask: HashMap<u64, ForestData>,
    edge_auts: Vec<Vec<u8>>,
}

impl GraphData {
    fn canonical(&self, packed: u64) -> u64 {
        let mut best = packed;
        for perm in &self.edge_auts {
            let mut image = 0u64;
            for (e, &pe) in perm.iter().enumerate() {
                image |= ((packed >> (LEVEL_BITS * e)) & MAX_LEVEL as u64) << (LEVEL_BITS * pe as usize);
            }
            best = best.min(image);
        }
        best
    }
}

/// Per-graph data shared by cell enumeration and boundary assembly.
#[derive(Clone, Debug)]
pub struct SpinePlan {
    catalog: Catalog,
    graphs: Vec<GraphData>,
}

impl SpinePlan {
    pub fn new(catalog: &Catalog, exec: &Executor) -> Result<Self, SpineError> {
        if catalog.is_empty() {
            return Err(SpineError::MissingCatalog { n: catalog.rank, s: catalog.leaves });
        }
        let graphs = exec
            .map_range(catalog.len(), |i| graph_data(catalog, i))
            .into_iter()
            .collect::<Result<_, _>>()?;
        Ok(SpinePlan { catalog: catalog.clone(), graphs })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Longest possible chain, which is the largest forest size.
    pub fn natural_dimension(&self) -> usize {
        self.graphs
            .iter()
            .flat_map(|g| g.forests.iter().map(|f| f.len()))
            .max()
            .unwrap_or(0)
    }

    /// Canonical cells of graph `g` up to dimension `max_dim`, by dimension.
    fn cells_of(&self, g: usize, max_dim: usize) -> Vec<Vec<u64>> {
        let data = &self.graphs[g];
        let mut out = vec![Vec::new(); max_dim + 1];
        let mut levels = vec![0usize; data.num_edges];
        fn rec(
            data: &GraphData,
            current: EdgeSet,
            depth: usize,
            max_dim: usize,
            levels: &mut [usize],
            out: &mut [Vec<u64>],
        ) {
            let packed = pack(levels);
            if data.canonical(packed) == packed {
                out[depth].push(packed);
            }
            if depth == max_dim {
                return;
            }
            for &f in &data.forests {
                if current.is_strict_subset(f) {
                    let new = f.difference(current);
                    for e in new.iter() {
                        levels[e] = depth + 1;
                    }
                    rec(data, f, depth + 1, max_dim, levels, out);
                    for e in new.iter() {
                        levels[e] = 0;
                    }
                }
            }
        }
        rec(data, EdgeSet::empty(), 0, max_dim, &mut levels, &mut out);
        for v in &mut out {
            v.sort_unstable();
        }
        out
    }

    /// The `k + 1` signed faces of a `k`-cell, canonicalised, in face order.
    pub fn faces(&self, cell: CellKey, k: usize) -> Vec<(i64, CellKey)> {
        let g = cell.graph as usize;
        let data = &self.graphs[g];
        let levels = unpack(cell.levels, data.num_edges);
        let mut out = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let sign = if i % 2 == 0 { 1 } else { -1 };
            let face = if i == 0 {
                let f1: EdgeSet = (0..data.num_edges).filter(|&e| levels[e] == 1).collect();
                let fd = &data.by_mask[&f1.bits()];
                let q = fd.quotient as usize;
                let qdata = &self.graphs[q];
                let mut ql = vec![0usize; qdata.num_edges];
                for e in 0..data.num_edges {
                    if levels[e] >= 2 {
                        ql[fd.edge_map[e] as usize] = levels[e] - 1;
                    }
                }
                CellKey { graph: fd.quotient, levels: qdata.canonical(pack(&ql)) }
            } else {
                let fl: Vec<usize> = levels
                    .iter()
                    .map(|&l| match l {
                        l if i == k && l == k => 0,
                        l if l > i => l - 1,
                        l => l,
                    })
                    .collect();
                CellKey { graph: cell.graph, levels: data.canonical(pack(&fl)) }
            };
            out.push((sign, face));
        }
        out
    }

    pub fn decode(&self, cell: CellKey, k: usize) -> SpineCell {
        let n = self.graphs[cell.graph as usize].num_edges;
        let forests = (1..=k)
            .map(|i| Forest::new_unchecked(mask_at_most(cell.levels, n, i)))
            .collect();
        SpineCell { graph: cell.graph as usize, chain: ForestChain::new_unchecked(forests) }
    }

    /// Level vector of a cell, indexed by edge id.
    pub fn levels(&self, cell: CellKey) -> Vec<usize> {
        unpack(cell.levels, self.graphs[cell.graph as usize].num_edges)
    }

    /// Edge permutations of catalog graph `g`.
    pub fn edge_automorphisms(&self, g: usize) -> &[Vec<u8>] {
        &self.graphs[g].edge_auts
    }
}

fn graph_data(catalog: &Catalog, i: usize) -> Result<GraphData, SpineError> {
    let g = &catalog.graphs[i];
    let num_edges = g.num_edges();
    if num_edges > MAX_PACKED_EDGES {
        return Err(SpineError::TooManyEdges(i));
    }
    let forests: Vec<EdgeSet> = enumerate_forests(g).into_iter().map(Forest::edges).collect();
    let mut by_mask = HashMap::with_capacity(forests.len());
    let edges = g.edges();
    for &f in &forests {
        let (q, epi) = collapse_forest(g, f).expect("enumerated forest");
        let cf = canonical_form(&q);
        let quotient = catalog
            .index_of(&cf.string())
            .ok_or(SpineError::QuotientNotInCatalog { graph: i })?;
        let qidx = cf.graph.edge_index();
        let edge_map = (0..num_edges)
            .map(|e| {
                if f.contains(e) {
                    u8::MAX
                } else {
                    qidx[cf.relabelling[epi.apply(edges[e].0)]].expect("surviving edge") as u8
                }
            })
            .collect();
        by_mask.insert(f.bits(), ForestData { quotient: quotient as u32, edge_map });
    }
    let edge_auts = edge_automorphisms(g)
        .into_iter()
        .filter(|p| p.iter().enumerate().any(|(e, &pe)| e != pe))
        .map(|p| p.into_iter().map(|e| e as u8).collect())
        .collect();
    Ok(GraphData { num_edges, forests, by_mask, edge_auts })
}

/// Cells and integer boundary matrices of the quotient spine.
#[derive(Clone, Debug)]
pub struct SparseIntChainComplex {
    pub n: usize,
    pub s: usize,
    /// Sorted cell keys per dimension; the position is the basis index.
    pub cells: Vec<Vec<CellKey>>,
    /// `boundaries[k]` is `∂_k : C_k → C_{k-1}`; `boundaries[0]` is `0 × C_0`.
    pub boundaries: Vec<SparseIntMatrix>,
    /// Dimension of the full complex before any truncation.
    pub natural_dim: usize,
    /// Cells above `max_dim` exist but were not built.
    pub truncated: bool,
}

pub fn build_spine_complex(
    catalog: &Catalog,
    max_dim: Option<usize>,
    exec: &Executor,
) -> Result<(SpinePlan, SparseIntChainComplex), SpineError> {
    let plan = SpinePlan::new(catalog, exec)?;
    let cx = build_from_plan(&plan, max_dim, exec)?;
    Ok((plan, cx))
}

pub fn build_from_plan(
    plan: &SpinePlan,
    max_dim: Option<usize>,
    exec: &Executor,
) -> Result<SparseIntChainComplex, SpineError> {
    let natural = plan.natural_dimension();
    if natural > MAX_LEVEL {
        return Err(SpineError::TooManyEdges(natural));
    }
    let d = max_dim.map_or(natural, |m| m.min(natural));
    let per_graph = exec.map_range(plan.graphs.len(), |g| plan.cells_of(g, d));
    let mut cells: Vec<Vec<CellKey>> = vec![Vec::new(); d + 1];
    for (g, by_dim) in per_graph.into_iter().enumerate() {
        for (k, list) in by_dim.into_iter().enumerate() {
            cells[k].extend(list.into_iter().map(|levels| CellKey { graph: g as u32, levels }));
        }
    }
    let mut boundaries = vec![SparseIntMatrix::zero(0, cells[0].len())];
    for k in 1..=d {
        let lower = &cells[k - 1];
        let cols = exec.map(&cells[k], |&c| {
            plan.faces(c, k)
                .into_iter()
                .map(|(sign, f)| lower.binary_search(&f).map(|row| (row, sign)).map_err(|_| f))
                .collect::<Result<Vec<_>, _>>()
        });
        let mut trips = Vec::with_capacity(cols.len() * (k + 1));
        for (j, col) in cols.into_iter().enumerate() {
            let col = col.map_err(|_| SpineError::MissingFace { dim: k, cell: j, face: 0 })?;
            trips.extend(col.into_iter().map(|(row, v)| (row, j, v)));
        }
        boundaries.push(
            SparseIntMatrix::from_triplets(lower.len(), cells[k].len(), trips).expect("indices in range"),
        );
    }
    Ok(SparseIntChainComplex {
        n: plan.catalog.rank,
        s: plan.catalog.leaves,
        cells,
        boundaries,
        natural_dim: natural,
        truncated: d < natural,
    })
}

impl SparseIntChainComplex {
    pub fn empty(n: usize, s: usize) -> Self {
        SparseIntChainComplex {
            n,
            s,
            cells: Vec::new(),
            boundaries: Vec::new(),
            natural_dim: 0,
            truncated: false,
        }
    }

    /// Highest built dimension, `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        self.cells.len().checked_sub(1)
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.cells.iter().map(Vec::len).collect()
    }

    pub fn boundary(&self, k: usize) -> &SparseIntMatrix {
        &self.boundaries[k]
    }

    /// First `k` with `∂_k ∘ ∂_{k+1} ≠ 0`, if any.
    pub fn check_boundary_squared(&self) -> Result<(), usize> {
        for k in 1..self.boundaries.len().saturating_sub(1) {
            if !self.boundaries[k].mul(&self.boundaries[k + 1]).is_zero() {
                return Err(k);
            }
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) })
            .sum()
    }

    /// Connectivity of the 1-skeleton.
    pub fn is_connected(&self) -> bool {
        let Some(c0) = self.cells.first() else { return false };
        if c0.is_empty() {
            return false;
        }
        let mut uf = UnionFind::<usize>::new(c0.len());
        if let Some(d1) = self.boundaries.get(1) {
            let mut ends: HashMap<usize, usize> = HashMap::new();
            for &(r, c, _) in d1.entries() {
                if let Some(&other) = ends.get(&c) {
                    uf.union(other, r);
                } else {
                    ends.insert(c, r);
                }
            }
        }
        let root = uf.find(0);
        (0..c0.len()).all(|v| uf.find(v) == root)
    }

    /// One file per dimension, `boundary_<k>.txt`, in the triplet text format.
    pub fn write_text(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (k, m) in self.boundaries.iter().enumerate() {
            let f = std::fs::File::create(dir.join(format!("boundary_{k}.txt")))?;
            let mut w = io::BufWriter::new(f);
            m.write_text(k, &mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BettiReport {
    pub n: usize,
    pub s: usize,
    pub betti: Vec<usize>,
    pub cells: Vec<usize>,
    pub euler: i64,
    /// `ranks[k]` is the rank of `∂_k`.
    pub ranks: Vec<RankResult>,
    /// Every rank was certified exactly.
    pub exact: bool,
    /// Every modular rank agreed across primes and with the exact rank.
    pub consistent: bool,
    pub truncated: bool,
}

impl BettiReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization")
    }

    pub fn table(&self) -> String {
        let mut out = format!("rank {} leaves {}\n  k  cells  rank∂k  betti\n", self.n, self.s);
        for k in 0..self.betti.len() {
            out.push_str(&format!(
                "{:>3} {:>6} {:>7} {:>6}{}\n",
                k,
                self.cells[k],
                self.ranks[k].rank,
                self.betti[k],
                if self.ranks[k].exact { "" } else { "  (modular)" }
            ));
        }
        out.push_str(&format!("euler {}\n", self.euler));
        if self.truncated {
            out.push_str("complex truncated: top Betti number is an upper bound\n");
        }
        out
    }
}

/// `b_k = dim C_k − rank ∂_k − rank ∂_{k+1}`, ranks over the rationals.
/// Dimensions run in order so each rank can skip rows cleared by the one
/// below; the modular primes run concurrently.
pub fn betti_numbers(
    c: &SparseIntChainComplex,
    mode: RankMode,
    primes: usize,
    exec: &Executor,
) -> BettiReport {
    let ranks = linalg::chain_ranks(&c.boundaries, mode, primes, exec);
    let counts = c.cell_counts();
    let betti = (0..counts.len())
        .map(|k| counts[k] - ranks[k].rank - ranks.get(k + 1).map_or(0, |r| r.rank))
        .collect();
    BettiReport {
        n: c.n,
        s: c.s,
        betti,
        cells: counts,
        euler: c.euler_characteristic(),
        exact: ranks.iter().all(|r| r.exact),
        consistent: ranks.iter().all(|r| r.agreement && !r.mismatch),
        ranks,
        truncated: c.truncated,
    }
}

pub fn euler_characteristic(c: &SparseIntChainComplex) -> i64 {
    c.euler_characteristic()
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
#[error("2-cell {cell}: face {face} disagrees with the composed collapse")]
pub struct FaceMismatch {
    pub cell: usize,
    pub face: usize,
}

fn colored_key_of(g: &crate::graph::AbstractGraph, levels: &[usize]) -> String {
    let colors: Vec<u32> = levels.iter().map(|&l| l as u32).collect();
    colored_canonical_form(g, &colors).colored_key()
}

/// Recomputes the faces of every 2-cell from forest collapses composed as
/// graph epimorphisms and compares them with the faces used for `∂_2`,
/// through edge-coloured canonical forms. Returns the number checked.
pub fn check_face_identity(
    plan: &SpinePlan,
    c: &SparseIntChainComplex,
    exec: &Executor,
) -> Result<usize, FaceMismatch> {
    let Some(two) = c.cells.get(2) else { return Ok(0) };
    let results = exec.map_range(two.len(), |j| {
        let cell = two[j];
        let g = &plan.catalog.graphs[cell.graph as usize];
        let ne = g.num_edges();
        let f1 = mask_at_most(cell.levels, ne, 1);
        let f2 = mask_at_most(cell.levels, ne, 2);
        let (_, phi1) = collapse_forest(g, f1).expect("forest");
        let f2_image = image_edges(&phi1, f2);
        let (_, phi2) = collapse_forest(phi1.codomain(), f2_image).expect("forest");
        let both: GraphEpimorphism = compose(&phi1, &phi2).expect("composable");
        let one_level = |host: &crate::graph::AbstractGraph, f: EdgeSet| -> Vec<usize> {
            (0..host.num_edges()).map(|e| usize::from(f.contains(e))).collect()
        };
        let expected = [
            colored_key_of(phi1.codomain(), &one_level(phi1.codomain(), f2_image)),
            colored_key_of(g, &one_level(g, both.map().collapsed_edges())),
            colored_key_of(g, &one_level(g, phi1.map().collapsed_edges())),
        ];
        for (i, (_, face)) in plan.faces(cell, 2).into_iter().enumerate() {
            let fg = &plan.catalog.graphs[face.graph as usize];
            if colored_key_of(fg, &plan.levels(face)) != expected[i] {
                return Err(FaceMismatch { cell: j, face: i });
            }
        }
        Ok(())
    });
    results.into_iter().collect::<Result<Vec<()>, _>>()?;
    Ok(two.len())
}

/// Every edge automorphism fixing a cell's level vector preserves each
/// forest of the chain, so no cell is identified with its own negative.
pub fn check_orientation(plan: &SpinePlan, c: &SparseIntChainComplex) -> bool {
    c.cells.iter().enumerate().all(|(k, cells)| {
        cells.iter().all(|&cell| {
            let data = &plan.graphs[cell.graph as usize];
            let levels = unpack(cell.levels, data.num_edges);
            data.edge_auts.iter().all(|perm| {
                let mut image = vec![0; data.num_edges];
                for (e, &pe) in perm.iter().enumerate() {
                    image[pe as usize] = levels[e];
                }
                image != levels
                    || (1..=k).all(|i| {
                        let f = mask_at_most(cell.levels, data.num_edges, i);
                        f.iter().all(|e| f.contains(perm[e] as usize))
                    })
            })
        })
    })
}

/// Writes the Betti report JSON to `w`.
pub fn write_report<W: Write>(r: &BettiReport, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", r.to_json())
}
