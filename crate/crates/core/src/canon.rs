//! Canonical labelling and automorphism groups of abstract graphs.
//!
//! Isomorphism of half-edge graphs reduces to isomorphism of the underlying
//! vertex-coloured multigraph (colour = leaf label) where parallel edges,
//! loops and their orientations are interchangeable. We canonise the vertex
//! order by colour refinement plus individualisation, keeping the
//! lexicographically least adjacency code over every leaf of the search
//! tree, then lay out half-edges deterministically from the vertex order.
//!
//! Edges may carry colours (used for forest chains); isomorphisms must then
//! preserve edge colours.

use std::collections::{BTreeMap, HashMap};

use crate::graph::AbstractGraph;

#[derive(Clone, Copy, Debug)]
struct ViewEdge {
    u: usize,
    v: usize,
    hu: usize,
    hv: usize,
    color: u32,
}

/// Multigraph view of an abstract graph with vertices renumbered `0..nv`.
struct View {
    vert_elem: Vec<usize>,
    label: Vec<u32>,
    edges: Vec<ViewEdge>,
    nbrs: Vec<Vec<(usize, u32)>>,
    loops: Vec<Vec<u32>>,
}

impl View {
    fn new(g: &AbstractGraph, colors: &[u32]) -> Self {
        let vert_elem = g.vertices();
        let mut vidx = vec![usize::MAX; g.num_elements()];
        for (i, &x) in vert_elem.iter().enumerate() {
            vidx[x] = i;
        }
        let nv = vert_elem.len();
        let label = vert_elem
            .iter()
            .map(|&x| g.leaf_label(x).unwrap_or(0))
            .collect();
        let mut nbrs = vec![Vec::new(); nv];
        let mut loops = vec![Vec::new(); nv];
        let edges: Vec<ViewEdge> = g
            .edges()
            .into_iter()
            .enumerate()
            .map(|(e, (a, b))| {
                let color = colors.get(e).copied().unwrap_or(0);
                let (u, v) = (vidx[g.t(a)], vidx[g.t(b)]);
                if u == v {
                    loops[u].push(color);
                } else {
                    nbrs[u].push((v, color));
                    nbrs[v].push((u, color));
                }
                ViewEdge {
                    u,
                    v,
                    hu: a,
                    hv: b,
                    color,
                }
            })
            .collect();
        for l in &mut loops {
            l.sort_unstable();
        }
        View {
            vert_elem,
            label,
            edges,
            nbrs,
            loops,
        }
    }

    fn nv(&self) -> usize {
        self.vert_elem.len()
    }

    fn initial_colors(&self) -> Vec<u32> {
        let sigs: Vec<(u32, usize, &[u32])> = (0..self.nv())
            .map(|v| {
                (
                    self.label[v],
                    self.nbrs[v].len() + 2 * self.loops[v].len(),
                    self.loops[v].as_slice(),
                )
            })
            .collect();
        rank(&sigs)
    }

    /// Colour refinement to the coarsest equitable partition refining `colors`.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let mut cells = count_distinct(&colors);
        loop {
            let sigs: Vec<(u32, Vec<(u32, u32)>)> = (0..self.nv())
                .map(|v| {
                    let mut s: Vec<(u32, u32)> =
                        self.nbrs[v].iter().map(|&(w, c)| (colors[w], c)).collect();
                    s.sort_unstable();
                    (colors[v], s)
                })
                .collect();
            let next = rank(&sigs);
            let next_cells = count_distinct(&next);
            colors = next;
            if next_cells == cells {
                return colors;
            }
            cells = next_cells;
        }
    }

    /// Adjacency code of the vertex order `order[pos] = vertex`.
    fn code(&self, order: &[usize]) -> Vec<u32> {
        let mut pos = vec![0; self.nv()];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let mut edges: Vec<(u32, u32, u32)> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (pos[e.u] as u32, pos[e.v] as u32);
                (a.min(b), a.max(b), e.color)
            })
            .collect();
        edges.sort_unstable();
        let mut code = Vec::with_capacity(1 + self.nv() + 3 * edges.len());
        code.push(self.nv() as u32);
        code.extend(order.iter().map(|&v| self.label[v]));
        for (a, b, c) in edges {
            code.extend([a, b, c]);
        }
        code
    }

    fn search(&self, colors: Vec<u32>, best: &mut Best) {
        let colors = self.refine(colors);
        let nv = self.nv();
        if count_distinct(&colors) == nv {
            let mut order = vec![0; nv];
            for v in 0..nv {
                order[colors[v] as usize] = v;
            }
            best.offer(self.code(&order), order);
            return;
        }
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &colors {
            *sizes.entry(c).or_default() += 1;
        }
        let target = sizes
            .iter()
            .find(|&(_, &n)| n > 1)
            .map(|(&c, _)| c)
            .expect("non-discrete partition has a nontrivial cell");
        for v in 0..nv {
            if colors[v] != target {
                continue;
            }
            let split: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| 2 * c + u32::from(u != v))
                .collect();
            self.search(rank(&split), best);
        }
    }

    fn canonical_orders(&self) -> Best {
        let mut best = Best::default();
        if self.nv() == 0 {
            best.offer(self.code(&[]), Vec::new());
        } else {
            self.search(self.initial_colors(), &mut best);
        }
        best
    }
}

#[derive(Default)]
struct Best {
    code: Option<Vec<u32>>,
    /// Every leaf order achieving `code`, in discovery order.
    orders: Vec<Vec<usize>>,
}

impl Best {
    fn offer(&mut self, code: Vec<u32>, order: Vec<usize>) {
        match &self.code {
            Some(c) if *c < code => {}
            Some(c) if *c == code => self.orders.push(order),
            _ => {
                self.code = Some(code);
                self.orders = vec![order];
            }
        }
    }

    /// The lexicographically least order among those achieving the code.
    fn least_order(&self) -> &[usize] {
        self.orders.iter().min().expect("at least one leaf")
    }
}

fn rank<T: Ord>(sigs: &[T]) -> Vec<u32> {
    let mut sorted: Vec<&T> = sigs.iter().collect();
    sorted.sort_unstable();
    sorted.dedup();
    sigs.iter()
        .map(|s| sorted.binary_search(&s).expect("present") as u32)
        .collect()
}

fn count_distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Canonical representative of an isomorphism class together with the map
/// carrying the input onto it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    /// The canonical representative: vertices first in canonical order, then
    /// one half-edge pair per edge in sorted edge order.
    pub graph: AbstractGraph,
    /// `relabelling[x]` is the element of `graph` that input element `x`
    /// maps to. This is an isomorphism input -> `graph`.
    pub relabelling: Vec<usize>,
    /// Edge colours of `graph`, by edge id (all zero when uncoloured).
    pub edge_colors: Vec<u32>,
    code: Vec<u32>,
}

impl CanonicalForm {
    /// Serialised `(sigma, t, leaf labels)` arrays of the representative as
    /// lowercase hex (big-endian `u32` words, label 0 meaning unlabelled).
    pub fn string(&self) -> String {
        let g = &self.graph;
        let m = g.num_elements();
        let mut bytes = Vec::with_capacity(4 * (1 + 3 * m));
        bytes.extend_from_slice(&(m as u32).to_be_bytes());
        for &x in g.sigma_slice() {
            bytes.extend_from_slice(&(x as u32).to_be_bytes());
        }
        for &x in g.t_slice() {
            bytes.extend_from_slice(&(x as u32).to_be_bytes());
        }
        for x in 0..m {
            bytes.extend_from_slice(&g.leaf_label(x).unwrap_or(0).to_be_bytes());
        }
        hex::encode(bytes)
    }

    /// Hex key that also distinguishes edge colourings.
    pub fn colored_key(&self) -> String {
        let mut s = self.string();
        let bytes: Vec<u8> = self
            .edge_colors
            .iter()
            .flat_map(|c| c.to_be_bytes())
            .collect();
        s.push(':');
        s.push_str(&hex::encode(bytes));
        s
    }

    /// The raw adjacency code the representative was selected by.
    pub fn code(&self) -> &[u32] {
        &self.code
    }
}

/// Canonical form of an uncoloured graph.
pub fn canonical_form(g: &AbstractGraph) -> CanonicalForm {
    colored_canonical_form(g, &[])
}

/// Canonical form where isomorphisms must preserve the given edge colours
/// (indexed by edge id; missing entries are colour 0).
pub fn colored_canonical_form(g: &AbstractGraph, edge_colors: &[u32]) -> CanonicalForm {
    let view = View::new(g, edge_colors);
    let best = view.canonical_orders();
    let order = best.least_order();
    let code = best.code.clone().expect("code");
    build_representative(&view, order, g.num_elements(), code)
}

fn build_representative(
    view: &View,
    order: &[usize],
    m: usize,
    code: Vec<u32>,
) -> CanonicalForm {
    let nv = view.nv();
    let mut pos = vec![0; nv];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    // (pos of first end, pos of second end, colour, first half-edge, second half-edge)
    let mut keyed: Vec<(usize, usize, u32, usize, usize)> = view
        .edges
        .iter()
        .map(|e| {
            let (pu, pv) = (pos[e.u], pos[e.v]);
            if pu < pv || (pu == pv && e.hu < e.hv) {
                (pu, pv, e.color, e.hu, e.hv)
            } else {
                (pv, pu, e.color, e.hv, e.hu)
            }
        })
        .collect();
    keyed.sort_unstable();

    let mut relabelling = vec![usize::MAX; m];
    let mut sigma: Vec<usize> = (0..m).collect();
    let mut t: Vec<usize> = (0..m).collect();
    let mut labels = BTreeMap::new();
    for (p, &v) in order.iter().enumerate() {
        relabelling[view.vert_elem[v]] = p;
        if view.label[v] != 0 {
            labels.insert(p, view.label[v]);
        }
    }
    let mut edge_colors = Vec::with_capacity(keyed.len());
    for (i, &(pu, pv, color, ha, hb)) in keyed.iter().enumerate() {
        let a = nv + 2 * i;
        let b = a + 1;
        relabelling[ha] = a;
        relabelling[hb] = b;
        sigma[a] = b;
        sigma[b] = a;
        t[a] = pu;
        t[b] = pv;
        edge_colors.push(color);
    }
    CanonicalForm {
        graph: AbstractGraph::from_parts(sigma, t, labels),
        relabelling,
        edge_colors,
        code,
    }
}

/// Whether two graphs are isomorphic (label-preserving).
pub fn is_isomorphic(a: &AbstractGraph, b: &AbstractGraph) -> bool {
    a.num_elements() == b.num_elements() && canonical_form(a).code == canonical_form(b).code
}

/// Vertex automorphisms as permutations of vertex *indices* (positions in
/// `g.vertices()`), preserving leaf labels, edge multiplicities and colours.
fn vertex_automorphisms(view: &View) -> Vec<Vec<usize>> {
    let best = view.canonical_orders();
    let base = &best.orders[0];
    let mut base_pos = vec![0; view.nv()];
    for (p, &v) in base.iter().enumerate() {
        base_pos[v] = p;
    }
    let mut auts: Vec<Vec<usize>> = best
        .orders
        .iter()
        .map(|ord| (0..view.nv()).map(|v| ord[base_pos[v]]).collect())
        .collect();
    auts.sort();
    auts
}

type GroupKey = (usize, usize, u32);

fn edge_groups(view: &View) -> BTreeMap<GroupKey, Vec<usize>> {
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for (e, ed) in view.edges.iter().enumerate() {
        groups
            .entry((ed.u.min(ed.v), ed.u.max(ed.v), ed.color))
            .or_default()
            .push(e);
    }
    groups
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn rec(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, &mut out);
    out
}

/// For one vertex automorphism, every way of matching each edge group to
/// its image group: returns edge maps `e -> e'` (no orientation data).
fn edge_matchings(
    groups: &BTreeMap<GroupKey, Vec<usize>>,
    alpha: &[usize],
    n_edges: usize,
) -> Vec<Vec<usize>> {
    let mut partial: Vec<Vec<usize>> = vec![vec![usize::MAX; n_edges]];
    for (&(u, v, c), members) in groups {
        let (au, av) = (alpha[u], alpha[v]);
        let target = &groups[&(au.min(av), au.max(av), c)];
        debug_assert_eq!(target.len(), members.len());
        let perms = permutations(members.len());
        let mut next = Vec::with_capacity(partial.len() * perms.len());
        for p in &partial {
            for perm in &perms {
                let mut q = p.clone();
                for (i, &e) in members.iter().enumerate() {
                    q[e] = target[perm[i]];
                }
                next.push(q);
            }
        }
        partial = next;
    }
    partial
}

/// All label-preserving automorphisms of `g` as element permutations.
/// Includes the identity; closed under composition and inverse.
pub fn automorphism_group(g: &AbstractGraph) -> Vec<Vec<usize>> {
    colored_automorphism_group(g, &[])
}

/// Automorphisms that also preserve the given edge colours.
pub fn colored_automorphism_group(g: &AbstractGraph, edge_colors: &[u32]) -> Vec<Vec<usize>> {
    let view = View::new(g, edge_colors);
    let groups = edge_groups(&view);
    let m = g.num_elements();
    let mut out = Vec::new();
    for alpha in vertex_automorphisms(&view) {
        let mut base = vec![usize::MAX; m];
        for (v, &w) in alpha.iter().enumerate() {
            base[view.vert_elem[v]] = view.vert_elem[w];
        }
        for emap in edge_matchings(&groups, &alpha, view.edges.len()) {
            // loops may additionally be flipped
            let loops: Vec<usize> = (0..view.edges.len())
                .filter(|&e| view.edges[e].u == view.edges[e].v)
                .collect();
            for flips in 0u64..(1u64 << loops.len()) {
                let mut perm = base.clone();
                for (e, ed) in view.edges.iter().enumerate() {
                    let te = view.edges[emap[e]];
                    if ed.u == ed.v {
                        let k = loops.iter().position(|&l| l == e).expect("loop");
                        let flip = flips >> k & 1 == 1;
                        let (a, b) = if flip { (te.hv, te.hu) } else { (te.hu, te.hv) };
                        perm[ed.hu] = a;
                        perm[ed.hv] = b;
                    } else if te.u == alpha[ed.u] {
                        perm[ed.hu] = te.hu;
                        perm[ed.hv] = te.hv;
                    } else {
                        perm[ed.hu] = te.hv;
                        perm[ed.hv] = te.hu;
                    }
                }
                out.push(perm);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// The automorphism group acting on edge ids, deduplicated and sorted. This
/// is the action relevant to forests and forest chains.
pub fn edge_automorphisms(g: &AbstractGraph) -> Vec<Vec<usize>> {
    let view = View::new(g, &[]);
    let groups = edge_groups(&view);
    let mut out: Vec<Vec<usize>> = vertex_automorphisms(&view)
        .into_iter()
        .flat_map(|alpha| edge_matchings(&groups, &alpha, view.edges.len()))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Index from canonical string to position, for catalog lookups.
pub fn index_by_string<'a>(strings: impl IntoIterator<Item = &'a str>) -> HashMap<String, usize> {
    strings
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s.to_owned(), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named::*;

    fn relabel(g: &AbstractGraph, p: &[usize]) -> AbstractGraph {
        // p: old element -> new element
        let m = g.num_elements();
        let mut sigma = vec![0; m];
        let mut t = vec![0; m];
        for x in 0..m {
            sigma[p[x]] = p[g.sigma(x)];
            t[p[x]] = p[g.t(x)];
        }
        let labels = g.leaf_labels().iter().map(|(&v, &l)| (p[v], l)).collect();
        AbstractGraph::from_parts(sigma, t, labels)
    }

    fn is_iso_map(a: &AbstractGraph, b: &AbstractGraph, f: &[usize]) -> bool {
        (0..a.num_elements()).all(|x| f[a.sigma(x)] == b.sigma(f[x]) && f[a.t(x)] == b.t(f[x]))
            && a.leaf_labels()
                .iter()
                .all(|(&v, &l)| b.leaf_label(f[v]) == Some(l))
    }

    #[test]
    fn theta_orderings_agree() {
        let th = theta();
        let shuffled = relabel(&th, &[7, 3, 0, 5, 1, 6, 2, 4]);
        assert!(shuffled.is_valid());
        assert_eq!(canonical_form(&th).string(), canonical_form(&shuffled).string());
    }

    #[test]
    fn theta_and_dumbbell_differ() {
        assert_ne!(canonical_form(&theta()).string(), canonical_form(&dumbbell()).string());
        assert!(!is_isomorphic(&theta(), &dumbbell()));
    }

    #[test]
    fn relabelling_is_an_isomorphism() {
        for g in [rose(2), theta(), dumbbell(), lollipop(), segment()] {
            let cf = canonical_form(&g);
            assert!(is_iso_map(&g, &cf.graph, &cf.relabelling));
            assert!(cf.graph.is_valid());
        }
    }

    #[test]
    fn canonical_form_is_idempotent() {
        for g in [rose(3), theta(), dumbbell(), lollipop(), segment()] {
            let rep = canonical_form(&g).graph;
            let again = canonical_form(&rep);
            assert_eq!(again.graph, rep);
            assert_eq!(again.relabelling, (0..rep.num_elements()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn group_orders() {
        assert_eq!(automorphism_group(&rose(2)).len(), 8);
        assert_eq!(automorphism_group(&theta()).len(), 12);
        assert_eq!(automorphism_group(&segment()).len(), 1);
        assert_eq!(automorphism_group(&dumbbell()).len(), 8);
        assert_eq!(edge_automorphisms(&theta()).len(), 6);
        assert_eq!(edge_automorphisms(&rose(3)).len(), 6);
    }

    #[test]
    fn automorphisms_are_automorphisms() {
        for g in [rose(2), theta(), dumbbell(), lollipop()] {
            for a in automorphism_group(&g) {
                assert!(is_iso_map(&g, &g, &a));
            }
        }
    }

    #[test]
    fn edge_colours_break_symmetry() {
        let th = theta();
        let a = colored_canonical_form(&th, &[1, 0, 0]);
        let b = colored_canonical_form(&th, &[0, 0, 1]);
        assert_eq!(a.colored_key(), b.colored_key());
        let c = colored_canonical_form(&th, &[1, 2, 0]);
        assert_ne!(a.colored_key(), c.colored_key());
        assert_eq!(colored_automorphism_group(&th, &[1, 0, 0]).len(), 4);
    }
}
