//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's canonical forms, enumerator or
//! elimination code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use outspine::AbstractGraph;

/// A graph as a vertex count, a sorted edge multiset and leaf labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlainGraph {
    pub nv: usize,
    pub edges: Vec<(usize, usize)>,
    pub labels: Vec<Option<u32>>,
}

impl PlainGraph {
    pub fn from_abstract(g: &AbstractGraph) -> Self {
        let verts = g.vertices();
        let pos = |x: usize| verts.iter().position(|&v| v == x).unwrap();
        let mut edges: Vec<(usize, usize)> = g
            .edge_endpoints()
            .into_iter()
            .map(|(a, b)| {
                let (a, b) = (pos(a), pos(b));
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort();
        let labels = verts.iter().map(|&v| g.leaf_label(v)).collect();
        PlainGraph { nv: verts.len(), edges, labels }
    }

    fn valences(&self) -> Vec<usize> {
        let mut val = vec![0; self.nv];
        for &(a, b) in &self.edges {
            val[a] += 1;
            val[b] += 1;
        }
        val
    }

    fn connected(&self) -> bool {
        let mut seen = vec![false; self.nv];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Least relabelled edge list over all label-preserving vertex
    /// permutations. Two graphs are isomorphic iff their keys agree.
    pub fn key(&self) -> (Vec<Option<u32>>, Vec<(usize, usize)>) {
        let mut best: Option<(Vec<Option<u32>>, Vec<(usize, usize)>)> = None;
        for perm in permutations(self.nv) {
            let mut labels = vec![None; self.nv];
            for v in 0..self.nv {
                labels[perm[v]] = self.labels[v];
            }
            let mut edges: Vec<(usize, usize)> = self
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (a, b) = (perm[a], perm[b]);
                    (a.min(b), a.max(b))
                })
                .collect();
            edges.sort();
            let cand = (labels, edges);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        best.unwrap_or_default()
    }
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Every connected graph of rank `n` with leaves labelled `1..=s` and all
/// other vertices of valence at least 3, one per isomorphism class, found by
/// listing edge multisets.
pub fn brute_force_catalog(n: usize, s: usize) -> Vec<PlainGraph> {
    let mut classes = BTreeSet::new();
    let mut out = Vec::new();
    for internal in 0..=(2 * n + s).saturating_sub(2) {
        let nv = internal + s;
        if nv == 0 {
            continue;
        }
        let ne = n + nv - 1;
        let pairs: Vec<(usize, usize)> = (0..nv).flat_map(|a| (a..nv).map(move |b| (a, b))).collect();
        let mut labels = vec![None; nv];
        for (i, l) in labels.iter_mut().take(s).enumerate() {
            *l = Some(i as u32 + 1);
        }
        let mut chosen = Vec::new();
        multisets(&pairs, 0, ne, &mut chosen, &mut |edges| {
            let g = PlainGraph { nv, edges: edges.to_vec(), labels: labels.clone() };
            let val = g.valences();
            let ok = (0..nv).all(|v| if v < s { val[v] == 1 } else { val[v] >= 3 });
            if ok && g.connected() && classes.insert(g.key()) {
                out.push(g);
            }
        });
    }
    out
}

fn multisets(
    pairs: &[(usize, usize)],
    from: usize,
    left: usize,
    chosen: &mut Vec<(usize, usize)>,
    f: &mut dyn FnMut(&[(usize, usize)]),
) {
    if left == 0 {
        f(chosen);
        return;
    }
    for i in from..pairs.len() {
        chosen.push(pairs[i]);
        multisets(pairs, i, left - 1, chosen, f);
        chosen.pop();
    }
}

/// All permutations of the element set commuting with `sigma` and `t` and
/// fixing leaf labels, by backtracking over elements in order.
pub fn brute_force_automorphisms(g: &AbstractGraph) -> Vec<Vec<usize>> {
    let m = g.num_elements();
    let mut out = Vec::new();
    let mut f = vec![usize::MAX; m];
    let mut used = vec![false; m];
    fn consistent(g: &AbstractGraph, f: &[usize], x: usize) -> bool {
        let (sigma, t) = (g.sigma_slice(), g.t_slice());
        let y = f[x];
        if (sigma[x] == x) != (sigma[y] == y) || g.leaf_label(x) != g.leaf_label(y) {
            return false;
        }
        let checks = [(sigma[x], sigma[y]), (t[x], t[y])];
        checks.iter().all(|&(a, b)| f[a] == usize::MAX || f[a] == b)
            && (0..f.len()).all(|z| f[z] == usize::MAX || (sigma[z] != x || sigma[y] == f[z]) && (t[z] != x || t[f[z]] == y))
    }
    fn rec(g: &AbstractGraph, x: usize, f: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if x == f.len() {
            out.push(f.clone());
            return;
        }
        for y in 0..f.len() {
            if used[y] {
                continue;
            }
            f[x] = y;
            if consistent(g, f, x) {
                used[y] = true;
                rec(g, x + 1, f, used, out);
                used[y] = false;
            }
            f[x] = usize::MAX;
        }
    }
    rec(g, 0, &mut f, &mut used, &mut out);
    out.sort();
    out
}

/// The same graph with its elements renamed by `perm` (old id -> new id).
pub fn relabel(g: &AbstractGraph, perm: &[usize]) -> AbstractGraph {
    let m = g.num_elements();
    let mut sigma = vec![0; m];
    let mut t = vec![0; m];
    for x in 0..m {
        sigma[perm[x]] = perm[g.sigma(x)];
        t[perm[x]] = perm[g.t(x)];
    }
    let labels = g.leaf_labels().iter().map(|(&v, &l)| (perm[v], l)).collect();
    AbstractGraph::from_parts(sigma, t, labels)
}

/// Rank over the rationals of a small dense matrix, by elimination on
/// exact fractions held as `i128` numerator/denominator pairs.
pub fn dense_rank(rows: &[Vec<i64>]) -> usize {
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }
    let mut a: Vec<Vec<(i128, i128)>> =
        rows.iter().map(|r| r.iter().map(|&v| (v as i128, 1)).collect()).collect();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..ncols {
        let Some(p) = (rank..a.len()).find(|&r| a[r][c].0 != 0) else { continue };
        a.swap(rank, p);
        for r in 0..a.len() {
            if r == rank || a[r][c].0 == 0 {
                continue;
            }
            let (fn_, fd) = (a[r][c].0 * a[rank][c].1, a[r][c].1 * a[rank][c].0);
            for k in 0..ncols {
                let (pn, pd) = a[rank][k];
                let (sn, sd) = (fn_ * pn, fd * pd);
                let (xn, xd) = a[r][k];
                let mut num = xn * sd - sn * xd;
                let mut den = xd * sd;
                let g = gcd(num, den).max(1);
                num /= g;
                den /= g;
                if den < 0 {
                    num = -num;
                    den = -den;
                }
                a[r][k] = (num, den);
            }
        }
        rank += 1;
    }
    rank
}

/// Edge permutations induced by automorphisms of a plain multigraph.
pub fn plain_edge_automorphisms(g: &PlainGraph) -> Vec<Vec<usize>> {
    let mut out = BTreeSet::new();
    for perm in permutations(g.nv) {
        if (0..g.nv).any(|v| g.labels[perm[v]] != g.labels[v]) {
            continue;
        }
        let image = |e: usize| {
            let (a, b) = g.edges[e];
            let (a, b) = (perm[a], perm[b]);
            (a.min(b), a.max(b))
        };
        // match edges to equal endpoint pairs in every possible way
        let mut partial = vec![Vec::new()];
        for e in 0..g.edges.len() {
            let mut next = Vec::new();
            for p in &partial {
                for f in 0..g.edges.len() {
                    if g.edges[f] == image(e) && !p.contains(&f) {
                        let mut q = p.clone();
                        q.push(f);
                        next.push(q);
                    }
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    out.into_iter().collect()
}

/// Edges that may lie in a forest: not loops, not attached to a leaf.
fn forest_candidates(g: &PlainGraph) -> Vec<usize> {
    (0..g.edges.len())
        .filter(|&e| {
            let (a, b) = g.edges[e];
            a != b && g.labels[a].is_none() && g.labels[b].is_none()
        })
        .collect()
}

fn acyclic(g: &PlainGraph, mask: u64) -> bool {
    let mut parent: Vec<usize> = (0..g.nv).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] == x { x } else { let r = find(p, p[x]); p[x] = r; r }
    }
    for e in 0..g.edges.len() {
        if mask >> e & 1 == 1 {
            let (a, b) = g.edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
    }
    true
}

/// Number of isomorphism classes of (graph, strictly increasing chain of
/// nonempty forests) per chain length, computed from the brute-force
/// catalog and brute-force edge automorphisms.
pub fn brute_force_cell_counts(n: usize, s: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = Vec::new();
    for g in brute_force_catalog(n, s) {
        let cand = forest_candidates(&g);
        let forests: Vec<u64> = (1u64..1 << cand.len())
            .map(|bits| cand.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).fold(0u64, |m, (_, &e)| m | 1 << e))
            .filter(|&m| acyclic(&g, m))
            .collect();
        let auts = plain_edge_automorphisms(&g);
        let mut seen: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
        let mut chain = Vec::new();
        fn grow(
            g: &PlainGraph,
            forests: &[u64],
            auts: &[Vec<usize>],
            chain: &mut Vec<u64>,
            seen: &mut BTreeSet<(usize, Vec<usize>)>,
        ) {
            let ne = g.edges.len();
            let mut levels = vec![0usize; ne];
            for e in 0..ne {
                if let Some(i) = chain.iter().position(|&f| f >> e & 1 == 1) {
                    levels[e] = i + 1;
                }
            }
            let canon = auts
                .iter()
                .map(|a| {
                    let mut l = vec![0; ne];
                    for e in 0..ne {
                        l[a[e]] = levels[e];
                    }
                    l
                })
                .min()
                .unwrap();
            seen.insert((chain.len(), canon));
            let last = chain.last().copied().unwrap_or(0);
            for &f in forests {
                if f & last == last && f != last {
                    chain.push(f);
                    grow(g, forests, auts, chain, seen);
                    chain.pop();
                }
            }
        }
        grow(&g, &forests, &auts, &mut chain, &mut seen);
        for (k, _) in seen {
            if counts.len() <= k {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
    }
    counts
}
