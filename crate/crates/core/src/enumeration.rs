//! Exhaustive, duplicate-free catalogs of connected graphs of given rank and
//! leaf count, and the forests and forest chains inside a graph.
//!
//! A connected graph with `s` leaves, rank `n` and `V` internal vertices
//! (all of valence at least 3) has `E = V + s + n - 1` edges, and
//! `2E = sum of valences >= 3V + s` bounds `V <= 2n + s - 2`. For each `V`
//! we run over valence sequences, placements of the labelled whiskers, and
//! loop/multi-edge adjacency matrices realising the remaining degrees, then
//! deduplicate by canonical form.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canon::canonical_form;
use crate::edgeset::EdgeSet;
use crate::graph::AbstractGraph;
use crate::morphism::{Forest, ForestChain};
use crate::par::Executor;

/// Bumped whenever generation output could change.
pub const GENERATOR_VERSION: &str = "outspine-gen-1";

#[derive(Debug, thiserror::Error)]
pub enum EnumerationError {
    #[error("rank {n} with {s} leaves is outside the supported range (rank 0 needs at least 2 leaves)")]
    ExcludedRange { n: usize, s: usize },
    #[error("catalog io: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog parse: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Number of classes per internal-vertex count.
    pub counts_by_internal_vertices: BTreeMap<usize, usize>,
}

/// Isomorphism classes of connected graphs with rank `n` and `s` leaves,
/// each stored as its canonical representative, sorted by canonical string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalog {
    pub rank: usize,
    pub leaves: usize,
    pub graphs: Vec<AbstractGraph>,
    pub keys: Vec<String>,
    pub provenance: Provenance,
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.keys.binary_search_by(|k| k.as_str().cmp(key)).ok()
    }

    fn from_map(n: usize, s: usize, classes: BTreeMap<String, (usize, AbstractGraph)>) -> Self {
        let mut counts = BTreeMap::new();
        let mut keys = Vec::with_capacity(classes.len());
        let mut graphs = Vec::with_capacity(classes.len());
        for (k, (v_int, g)) in classes {
            *counts.entry(v_int).or_insert(0) += 1;
            keys.push(k);
            graphs.push(g);
        }
        Catalog {
            rank: n,
            leaves: s,
            graphs,
            keys,
            provenance: Provenance {
                version: GENERATOR_VERSION.to_owned(),
                counts_by_internal_vertices: counts,
            },
        }
    }

    /// JSON lines: a header `{"n","s","count","version",...}` then one graph
    /// per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = CatalogHeader {
            n: self.rank,
            s: self.leaves,
            count: self.len(),
            version: self.provenance.version.clone(),
            counts_by_internal_vertices: self.provenance.counts_by_internal_vertices.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for g in &self.graphs {
            writeln!(w, "{}", g.to_json())?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, EnumerationError> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| EnumerationError::Parse("empty catalog file".into()))??;
        let header: CatalogHeader = serde_json::from_str(&header_line)
            .map_err(|e| EnumerationError::Parse(e.to_string()))?;
        let mut graphs = Vec::with_capacity(header.count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let g = AbstractGraph::from_json(&line).map_err(|e| EnumerationError::Parse(e.to_string()))?;
            graphs.push(g);
        }
        if graphs.len() != header.count {
            return Err(EnumerationError::Parse(format!(
                "header says {} graphs, found {}",
                header.count,
                graphs.len()
            )));
        }
        let keys: Vec<String> = graphs.iter().map(|g| canonical_form(g).string()).collect();
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EnumerationError::Parse("catalog entries not in canonical order".into()));
        }
        Ok(Catalog {
            rank: header.n,
            leaves: header.s,
            graphs,
            keys,
            provenance: Provenance {
                version: header.version,
                counts_by_internal_vertices: header.counts_by_internal_vertices,
            },
        })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()
    }

    pub fn load(path: &Path) -> Result<Self, EnumerationError> {
        Self::read_jsonl(BufReader::new(fs::File::open(path)?))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogHeader {
    n: usize,
    s: usize,
    count: usize,
    version: String,
    #[serde(default)]
    counts_by_internal_vertices: BTreeMap<usize, usize>,
}

/// File name of the cached catalog for `(n, s)` under the current generator.
pub fn cache_path(dir: &Path, n: usize, s: usize) -> PathBuf {
    dir.join(format!("catalog-n{n}-s{s}-{GENERATOR_VERSION}.jsonl"))
}

/// Loads the cached catalog if present and current, otherwise builds and
/// caches it.
pub fn load_or_build(
    dir: &Path,
    n: usize,
    s: usize,
    exec: &Executor,
) -> Result<Catalog, EnumerationError> {
    let path = cache_path(dir, n, s);
    if path.exists() {
        if let Ok(c) = Catalog::load(&path) {
            if c.rank == n && c.leaves == s && c.provenance.version == GENERATOR_VERSION {
                return Ok(c);
            }
        }
    }
    let c = enumerate_graphs_with(n, s, exec)?;
    c.save(&path)?;
    Ok(c)
}

/// Largest internal-vertex count for rank `n` and `s` leaves.
pub fn max_internal_vertices(n: usize, s: usize) -> usize {
    (2 * n + s).saturating_sub(2)
}

pub fn enumerate_graphs(n: usize, s: usize) -> Result<Catalog, EnumerationError> {
    enumerate_graphs_with(n, s, &Executor::default())
}

#[derive(Clone, Debug)]
struct Stratum {
    v_int: usize,
    valences: Vec<usize>,
    /// Internal vertex carrying each leaf label `1..=s`.
    whiskers: Vec<usize>,
}

pub fn enumerate_graphs_with(
    n: usize,
    s: usize,
    exec: &Executor,
) -> Result<Catalog, EnumerationError> {
    if n == 0 && s < 2 {
        return Err(EnumerationError::ExcludedRange { n, s });
    }
    let mut classes: BTreeMap<String, (usize, AbstractGraph)> = BTreeMap::new();
    if n == 0 && s == 2 {
        let g = AbstractGraph::from_edge_list(2, &[(0, 1)], &[(0, 1), (1, 2)]);
        let cf = canonical_form(&g);
        classes.insert(cf.string(), (0, cf.graph));
    }
    let strata: Vec<Stratum> = (1..=max_internal_vertices(n, s))
        .flat_map(|v| strata_for(n, s, v))
        .collect();
    let found = exec.map(&strata, |st| graphs_in_stratum(st, s));
    for batch in found {
        for (key, v_int, g) in batch {
            classes.entry(key).or_insert((v_int, g));
        }
    }
    Ok(Catalog::from_map(n, s, classes))
}

fn strata_for(n: usize, s: usize, v_int: usize) -> Vec<Stratum> {
    let edges = v_int + s + n - 1;
    let total = 2 * edges - s;
    let mut out = Vec::new();
    for valences in valence_sequences(total, v_int) {
        for whiskers in whisker_placements(&valences, s) {
            out.push(Stratum {
                v_int,
                valences: valences.clone(),
                whiskers,
            });
        }
    }
    out
}

/// Nonincreasing sequences of `parts` integers, each at least 3, summing to `total`.
fn valence_sequences(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if total == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if total < 3 * parts {
            return;
        }
        let hi = max.min(total - 3 * (parts - 1));
        for d in (3..=hi).rev() {
            cur.push(d);
            rec(total - d, parts - 1, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, total, &mut Vec::new(), &mut out);
    out
}

/// Placements of leaf labels on internal vertices, one representative per
/// relabelling of equal-valence vertices.
fn whisker_placements(valences: &[usize], s: usize) -> Vec<Vec<usize>> {
    let v = valences.len();
    let mut out = Vec::new();
    let mut cur = vec![0; s];
    loop {
        let mut at: Vec<Vec<u32>> = vec![Vec::new(); v];
        for (label, &vx) in cur.iter().enumerate() {
            at[vx].push(label as u32 + 1);
        }
        let fits = (0..v).all(|i| at[i].len() < valences[i] || (v == 1 && at[i].len() == valences[i]));
        let sorted_blocks = (1..v).all(|i| valences[i] != valences[i - 1] || at[i - 1] >= at[i]);
        if fits && sorted_blocks {
            out.push(cur.clone());
        }
        // next assignment in base v
        let mut k = 0;
        loop {
            if k == s {
                return out;
            }
            cur[k] += 1;
            if cur[k] < v {
                break;
            }
            cur[k] = 0;
            k += 1;
        }
    }
}

fn graphs_in_stratum(st: &Stratum, s: usize) -> Vec<(String, usize, AbstractGraph)> {
    let v = st.v_int;
    let mut core: Vec<usize> = st.valences.clone();
    for &w in &st.whiskers {
        core[w] -= 1;
    }
    let mut out = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    adjacency_rec(0, 0, &mut core, &mut edges, &mut |edges| {
        let mut all = edges.to_vec();
        for (i, &w) in st.whiskers.iter().enumerate() {
            all.push((w, v + i));
        }
        let labels: Vec<(usize, u32)> = (0..s).map(|i| (v + i, i as u32 + 1)).collect();
        let g = AbstractGraph::from_edge_list(v + s, &all, &labels);
        if g.is_connected() {
            let cf = canonical_form(&g);
            out.push((cf.string(), v, cf.graph));
        }
    });
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.dedup_by(|a, b| a.0 == b.0);
    out
}

/// Enumerates loop/multi-edge multigraphs realising the degrees in `rem`,
/// filling pair `(i, j)` with `j >= i` in row-major order.
fn adjacency_rec(
    i: usize,
    j: usize,
    rem: &mut [usize],
    edges: &mut Vec<(usize, usize)>,
    emit: &mut dyn FnMut(&[(usize, usize)]),
) {
    let v = rem.len();
    if i == v {
        emit(edges);
        return;
    }
    if j == v {
        if rem[i] == 0 {
            adjacency_rec(i + 1, i + 1, rem, edges, emit);
        }
        return;
    }
    let capacity: usize = rem[j..].iter().skip(usize::from(j == i)).sum();
    if j > i && rem[i] > capacity {
        return;
    }
    if j == i {
        for loops in (0..=rem[i] / 2).rev() {
            rem[i] -= 2 * loops;
            let before = edges.len();
            edges.extend(std::iter::repeat_n((i, i), loops));
            adjacency_rec(i, j + 1, rem, edges, emit);
            edges.truncate(before);
            rem[i] += 2 * loops;
        }
    } else {
        let max = rem[i].min(rem[j]);
        for mult in (0..=max).rev() {
            rem[i] -= mult;
            rem[j] -= mult;
            let before = edges.len();
            edges.extend(std::iter::repeat_n((i, j), mult));
            adjacency_rec(i, j + 1, rem, edges, emit);
            edges.truncate(before);
            rem[i] += mult;
            rem[j] += mult;
        }
    }
}

/// All nonempty forests of `g`, ordered by size then by edge bitmask.
pub fn enumerate_forests(g: &AbstractGraph) -> Vec<Forest> {
    let candidates = g.collapsible_edges();
    let mut out: Vec<Forest> = candidates
        .subsets()
        .filter(|f| !f.is_empty() && g.is_acyclic(*f))
        .map(Forest::new_unchecked)
        .collect();
    out.sort_by_key(|f| (f.len(), f.edges().bits()));
    out
}

/// Every chain of strictly nested nonempty forests of length `1..=max_len`,
/// ordered by length, then lexicographically by forest order.
pub fn enumerate_forest_chains(g: &AbstractGraph, max_len: usize) -> Vec<ForestChain> {
    let forests = enumerate_forests(g);
    let mut out: Vec<Vec<usize>> = Vec::new();
    fn rec(forests: &[Forest], cur: &mut Vec<usize>, max_len: usize, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if cur.len() == max_len {
            return;
        }
        let last = forests[*cur.last().expect("nonempty")].edges();
        for (i, f) in forests.iter().enumerate() {
            if last.is_strict_subset(f.edges()) {
                cur.push(i);
                rec(forests, cur, max_len, out);
                cur.pop();
            }
        }
    }
    if max_len > 0 {
        for i in 0..forests.len() {
            rec(&forests, &mut vec![i], max_len, &mut out);
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out.into_iter()
        .map(|idx| ForestChain::new_unchecked(idx.into_iter().map(|i| forests[i]).collect()))
        .collect()
}

/// Edge sets of all forests, for callers that only need bitmasks.
pub fn forest_masks(g: &AbstractGraph) -> Vec<EdgeSet> {
    enumerate_forests(g).into_iter().map(Forest::edges).collect()
}
