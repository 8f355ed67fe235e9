//! Ranks of sparse integer matrices over the rationals.
//!
//! [`rank_exact`] runs fraction-free elimination on arbitrary-precision
//! integers. [`rank_modular`] reduces modulo a few random primes above 2^30
//! and reports the largest rank seen, which is a lower bound on the rational
//! rank.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::par::Executor;

mod markowitz;

pub const DEFAULT_PRIMES: usize = 3;
/// Matrices with at most this many columns are also ranked exactly.
pub const EXACT_COLUMN_LIMIT: usize = 20_000;
const PRIME_SEED: u64 = 0x5eed_0f_c011_a95e;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Triplet matrix, entries sorted by (col, row), no duplicates, no zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseIntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, i64)>,
}

impl SparseIntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseIntMatrix { rows, cols, entries: Vec::new() }
    }

    /// Duplicate positions are summed and zero results dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, i64)>,
    ) -> Result<Self, MatrixError> {
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for (row, col, v) in triplets {
            if row >= rows || col >= cols {
                return Err(MatrixError::OutOfRange { row, col, rows, cols });
            }
            *acc.entry((col, row)).or_insert(0) += v;
        }
        let entries = acc
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .map(|((c, r), v)| (r, c, v))
            .collect();
        Ok(SparseIntMatrix { rows, cols, entries })
    }

    pub fn from_dense(dense: &[Vec<i64>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let trips = dense
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v)));
        Self::from_triplets(rows, cols, trips).expect("dense input is in range")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1))).unwrap()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, i64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries
            .binary_search_by_key(&(col, row), |&(r, c, _)| (c, r))
            .map_or(0, |i| self.entries[i].2)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.entries.iter().map(|&(r, c, v)| (c, r, v)))
            .unwrap()
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut d = vec![vec![0; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            d[r][c] = v;
        }
        d
    }

    /// Row-major sparse rows, columns ascending.
    fn sparse_rows(&self) -> Vec<Vec<(usize, i64)>> {
        let mut out = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.entries {
            out[r].push((c, v));
        }
        out
    }

    /// Product `self * other`, used to check `∂∘∂ = 0`.
    pub fn mul(&self, other: &SparseIntMatrix) -> SparseIntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let left_rows = self.sparse_rows();
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); other.rows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut trips = Vec::new();
        for (i, row) in left_rows.iter().enumerate() {
            let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
            for &(k, a) in row {
                for &(j, b) in &by_row[k] {
                    let e = acc.entry(j).or_insert(0);
                    *e = e.checked_add(a.checked_mul(b).expect("overflow")).expect("overflow");
                }
            }
            trips.extend(acc.into_iter().map(|(j, v)| (i, j, v)));
        }
        Self::from_triplets(self.rows, other.cols, trips).unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Header `k rows cols nnz`, then `row col value` lines.
    pub fn write_text<W: Write>(&self, k: usize, mut w: W) -> io::Result<()> {
        writeln!(w, "{k} {} {} {}", self.rows, self.cols, self.entries.len())?;
        for &(r, c, v) in &self.entries {
            writeln!(w, "{r} {c} {v}")?;
        }
        Ok(())
    }

    /// Inverse of [`SparseIntMatrix::write_text`]; returns `(k, matrix)`.
    pub fn read_text<R: BufRead>(r: R) -> Result<(usize, Self), MatrixError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(MatrixError::Parse { line: 1, msg: "missing header".into() })?;
        let h = parse_fields(&header?, 4, 1)?;
        let (k, rows, cols, nnz) = (h[0] as usize, h[1] as usize, h[2] as usize, h[3] as usize);
        let mut trips = Vec::with_capacity(nnz);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f = parse_fields(&line, 3, i + 1)?;
            if f[0] < 0 || f[1] < 0 {
                return Err(MatrixError::Parse { line: i + 1, msg: "negative index".into() });
            }
            trips.push((f[0] as usize, f[1] as usize, f[2]));
        }
        if trips.len() != nnz {
            return Err(MatrixError::Parse {
                line: 1,
                msg: format!("header declares {nnz} entries, found {}", trips.len()),
            });
        }
        Ok((k, Self::from_triplets(rows, cols, trips)?))
    }
}

fn parse_fields(line: &str, n: usize, lineno: usize) -> Result<Vec<i64>, MatrixError> {
    let f: Vec<i64> = line
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|e| MatrixError::Parse { line: lineno, msg: format!("{e}") })?;
    if f.len() != n {
        return Err(MatrixError::Parse { line: lineno, msg: format!("expected {n} fields") });
    }
    Ok(f)
}

/// Column relabelling placing light columns first, and the rows ordered by
/// ascending weight. Both are deterministic.
/// Rank of a matrix together with `rank` linearly independent columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elimination {
    pub rank: usize,
    pub pivot_columns: Vec<usize>,
}

fn check_skip(m: &SparseIntMatrix, skip_rows: Option<&[bool]>) {
    if let Some(s) = skip_rows {
        assert_eq!(s.len(), m.rows, "row mask length");
    }
}

/// Fraction-free elimination over the integers, leaving out the rows flagged
/// in `skip_rows`.
pub fn eliminate_exact(m: &SparseIntMatrix, skip_rows: Option<&[bool]>) -> Elimination {
    check_skip(m, skip_rows);
    let (rank, pivot_columns) = markowitz::eliminate(&markowitz::Integers, m.rows, m.cols, &m.entries, skip_rows);
    Elimination { rank, pivot_columns }
}

/// Elimination modulo a prime `p < 2^31`. Pivot columns are independent
/// modulo `p`, hence also over the rationals.
pub fn eliminate_mod_p(m: &SparseIntMatrix, p: u64, skip_rows: Option<&[bool]>) -> Elimination {
    assert!(p < 1 << 31, "modulus too large");
    check_skip(m, skip_rows);
    let (rank, pivot_columns) = markowitz::eliminate(&markowitz::ModP(p), m.rows, m.cols, &m.entries, skip_rows);
    Elimination { rank, pivot_columns }
}

/// Rank over the rationals by fraction-free elimination.
pub fn rank_exact(m: &SparseIntMatrix) -> usize {
    eliminate_exact(m, None).rank
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModularRank {
    pub rank: usize,
    /// All primes gave the same rank.
    pub agreement: bool,
}

/// Largest rank modulo `primes` random primes in (2^30, 2^31). The primes are
/// drawn from a fixed seed, so the result is reproducible.
pub fn rank_modular(m: &SparseIntMatrix, primes: usize) -> ModularRank {
    assert!(primes >= 1, "need at least one prime");
    let ranks: Vec<usize> = random_primes(primes).into_iter().map(|p| rank_mod_p(m, p)).collect();
    let rank = *ranks.iter().max().unwrap();
    ModularRank { rank, agreement: ranks.iter().all(|&r| r == rank) }
}

pub fn random_primes(count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PRIME_SEED);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = rng.gen_range((1u64 << 30) + 1..1u64 << 31) | 1;
        if is_prime(c) && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Deterministic Miller-Rabin, valid for all `n < 3.4e14`.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17] {
        if n % p == 0 {
            return n == p;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Rank modulo a prime `p < 2^31`.
pub fn rank_mod_p(m: &SparseIntMatrix, p: u64) -> usize {
    eliminate_mod_p(m, p, None).rank
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Modular,
    Exact,
    Both,
}

/// Outcome of ranking one matrix under a [`RankMode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct RankResult {
    pub rank: usize,
    /// Rank is certified over the rationals.
    pub exact: bool,
    /// All primes agreed (true when no modular rank was taken).
    pub agreement: bool,
    /// Modular and exact ranks both ran and disagree.
    pub mismatch: bool,
}

pub fn rank(m: &SparseIntMatrix, mode: RankMode, primes: usize) -> RankResult {
    let do_exact = match mode {
        RankMode::Exact => true,
        RankMode::Modular => false,
        RankMode::Both => m.cols <= EXACT_COLUMN_LIMIT,
    };
    let modular = (mode != RankMode::Exact).then(|| rank_modular(m, primes));
    combine(modular, do_exact.then(|| rank_exact(m)))
}

fn row_mask(rows: usize, pivots: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; rows];
    for &r in pivots {
        mask[r] = true;
    }
    mask
}

/// Ranks of the maps `∂_0, ∂_1, …` of a chain complex, where `∂_k` has the
/// `(k-1)`-cells as rows and `∂_{k-1} ∂_k = 0`.
///
/// Before `∂_k` is reduced, the rows indexed by the pivot columns of
/// `∂_{k-1}` are dropped. Those columns are independent, so `∂_{k-1} ∂_k = 0`
/// writes the dropped rows as combinations of the others and the rank is
/// unchanged. Primes run concurrently; each follows its own pivots. Exact
/// passes reuse the pivots of the exact pass below them when there is one and
/// those of the first prime otherwise.
pub fn chain_ranks(boundaries: &[SparseIntMatrix], mode: RankMode, primes: usize, exec: &Executor) -> Vec<RankResult> {
    let modular: Vec<Vec<Elimination>> = if mode == RankMode::Exact {
        Vec::new()
    } else {
        assert!(primes >= 1, "need at least one prime");
        exec.map(&random_primes(primes), |&p| {
            let mut out: Vec<Elimination> = Vec::with_capacity(boundaries.len());
            for m in boundaries {
                let skip = out.last().map(|e| row_mask(m.rows, &e.pivot_columns));
                out.push(eliminate_mod_p(m, p, skip.as_deref()));
            }
            out
        })
    };
    let mut exact: Vec<Option<Elimination>> = Vec::with_capacity(boundaries.len());
    for (k, m) in boundaries.iter().enumerate() {
        let wanted = match mode {
            RankMode::Exact => true,
            RankMode::Modular => false,
            RankMode::Both => m.cols <= EXACT_COLUMN_LIMIT,
        };
        let e = wanted.then(|| {
            let below = k.checked_sub(1).and_then(|j| exact[j].as_ref().or_else(|| modular.first().map(|v| &v[j])));
            let skip = below.map(|e| row_mask(m.rows, &e.pivot_columns));
            eliminate_exact(m, skip.as_deref())
        });
        exact.push(e);
    }
    (0..boundaries.len())
        .map(|k| {
            let md = (!modular.is_empty()).then(|| {
                let ranks: Vec<usize> = modular.iter().map(|v| v[k].rank).collect();
                let rank = *ranks.iter().max().unwrap();
                ModularRank { rank, agreement: ranks.iter().all(|&r| r == rank) }
            });
            combine(md, exact[k].as_ref().map(|e| e.rank))
        })
        .collect()
}

fn combine(modular: Option<ModularRank>, exact: Option<usize>) -> RankResult {
    match (modular, exact) {
        (Some(md), Some(ex)) => RankResult { rank: ex, exact: true, agreement: md.agreement, mismatch: md.rank != ex },
        (None, Some(ex)) => RankResult { rank: ex, exact: true, agreement: true, mismatch: false },
        (Some(md), None) => RankResult { rank: md.rank, exact: false, agreement: md.agreement, mismatch: false },
        (None, None) => unreachable!("no rank requested"),
    }
}
