//! Sparse Gaussian elimination with Markowitz-style pivot selection.
//!
//! The next pivot column is the live column with the fewest nonzeros and,
//! within it, the shortest row (unit entries first). Columns whose count grew
//! since they were queued are re-queued when popped, so the queue only has to
//! be told about decreases.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub(super) trait Arith {
    type V: Clone;
    fn lift(&self, v: i64) -> Self::V;
    fn is_zero(&self, v: &Self::V) -> bool;
    fn is_unit(&self, v: &Self::V) -> bool;
    /// Normalise a pivot row whose pivot entry sits at `at`.
    fn prepare(&self, _row: &mut [(u32, Self::V)], _at: usize) {}
    /// `(a, b)` such that `a * row - b * pivot` kills the pivot column.
    fn coeffs(&self, row_c: &Self::V, piv_c: &Self::V) -> (Self::V, Self::V);
    fn scale(&self, a: &Self::V, x: &Self::V) -> Self::V;
    fn neg_scale(&self, b: &Self::V, y: &Self::V) -> Self::V;
    fn lin(&self, a: &Self::V, x: &Self::V, b: &Self::V, y: &Self::V) -> Self::V;
    fn finish(&self, _row: &mut [(u32, Self::V)]) {}
}

pub(super) struct ModP(pub u64);

impl Arith for ModP {
    type V = u32;
    fn lift(&self, v: i64) -> u32 {
        v.rem_euclid(self.0 as i64) as u32
    }
    fn is_zero(&self, v: &u32) -> bool {
        *v == 0
    }
    fn is_unit(&self, v: &u32) -> bool {
        *v != 0
    }
    fn prepare(&self, row: &mut [(u32, u32)], at: usize) {
        let inv = super::inv_mod(row[at].1 as u64, self.0);
        for e in row.iter_mut() {
            e.1 = super::mul_mod(e.1 as u64, inv, self.0) as u32;
        }
    }
    fn coeffs(&self, row_c: &u32, _piv_c: &u32) -> (u32, u32) {
        (1, *row_c)
    }
    fn scale(&self, _a: &u32, x: &u32) -> u32 {
        *x
    }
    fn neg_scale(&self, b: &u32, y: &u32) -> u32 {
        let p = self.0;
        ((p - (*b as u64 * *y as u64) % p) % p) as u32
    }
    fn lin(&self, _a: &u32, x: &u32, b: &u32, y: &u32) -> u32 {
        let p = self.0;
        ((*x as u64 + p - (*b as u64 * *y as u64) % p) % p) as u32
    }
}

/// Fraction-free integer elimination; rows are kept primitive.
pub(super) struct Integers;

impl Arith for Integers {
    type V = BigInt;
    fn lift(&self, v: i64) -> BigInt {
        BigInt::from(v)
    }
    fn is_zero(&self, v: &BigInt) -> bool {
        v.is_zero()
    }
    fn is_unit(&self, v: &BigInt) -> bool {
        v.abs().is_one()
    }
    fn coeffs(&self, row_c: &BigInt, piv_c: &BigInt) -> (BigInt, BigInt) {
        let g = row_c.gcd(piv_c);
        (piv_c / &g, row_c / &g)
    }
    fn scale(&self, a: &BigInt, x: &BigInt) -> BigInt {
        a * x
    }
    fn neg_scale(&self, b: &BigInt, y: &BigInt) -> BigInt {
        -(b * y)
    }
    fn lin(&self, a: &BigInt, x: &BigInt, b: &BigInt, y: &BigInt) -> BigInt {
        a * x - b * y
    }
    fn finish(&self, row: &mut [(u32, BigInt)]) {
        let content = row.iter().fold(BigInt::zero(), |g, (_, v)| g.gcd(v));
        if !content.is_zero() && !content.is_one() {
            for (_, v) in row.iter_mut() {
                *v /= &content;
            }
        }
    }
}

/// Rank and the pivot columns, which are linearly independent. Rows flagged
/// in `skip` are left out.
pub(super) fn eliminate<A: Arith>(
    ar: &A,
    rows: usize,
    cols: usize,
    entries: &[(usize, usize, i64)],
    skip: Option<&[bool]>,
) -> (usize, Vec<usize>) {
    let mut m: Vec<Vec<(u32, A::V)>> = vec![Vec::new(); rows];
    for &(r, c, v) in entries {
        if skip.is_some_and(|s| s[r]) {
            continue;
        }
        let v = ar.lift(v);
        if !ar.is_zero(&v) {
            m[r].push((c as u32, v));
        }
    }
    let mut count = vec![0u32; cols];
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); cols];
    for (r, row) in m.iter_mut().enumerate() {
        row.sort_unstable_by_key(|e| e.0);
        for &(c, _) in row.iter() {
            count[c as usize] += 1;
            col_rows[c as usize].push(r as u32);
        }
    }
    let mut heap: BinaryHeap<Reverse<(u32, u32)>> =
        (0..cols).filter(|&c| count[c] > 0).map(|c| Reverse((count[c], c as u32))).collect();
    let mut done = vec![false; cols];
    let mut alive = vec![true; rows];
    let mut pivots = Vec::new();
    let mut candidates: Vec<u32> = Vec::new();
    let mut scratch: Vec<(u32, A::V)> = Vec::new();

    while let Some(Reverse((cnt, c))) = heap.pop() {
        let ci = c as usize;
        if done[ci] {
            continue;
        }
        if count[ci] != cnt {
            if count[ci] > 0 {
                heap.push(Reverse((count[ci], c)));
            }
            continue;
        }
        candidates.clear();
        candidates.extend(col_rows[ci].iter().copied().filter(|&r| {
            alive[r as usize] && m[r as usize].binary_search_by_key(&c, |e| e.0).is_ok()
        }));
        candidates.sort_unstable();
        candidates.dedup();
        col_rows[ci] = Vec::new();
        done[ci] = true;
        debug_assert_eq!(candidates.len(), cnt as usize);
        let Some(&pr) = candidates.iter().min_by_key(|&&r| {
            let row = &m[r as usize];
            let at = row.binary_search_by_key(&c, |e| e.0).unwrap();
            (!ar.is_unit(&row[at].1), row.len(), r)
        }) else {
            continue;
        };
        let mut piv = std::mem::take(&mut m[pr as usize]);
        alive[pr as usize] = false;
        let pat = piv.binary_search_by_key(&c, |e| e.0).unwrap();
        ar.prepare(&mut piv, pat);
        for &(pc, _) in &piv {
            if pc != c {
                count[pc as usize] -= 1;
                heap.push(Reverse((count[pc as usize], pc)));
            }
        }
        for &r in &candidates {
            if r == pr {
                continue;
            }
            let row = &m[r as usize];
            let rat = row.binary_search_by_key(&c, |e| e.0).unwrap();
            let (a, b) = ar.coeffs(&row[rat].1, &piv[pat].1);
            scratch.clear();
            let (mut i, mut j) = (0, 0);
            while i < row.len() || j < piv.len() {
                let cr = row.get(i).map_or(u32::MAX, |e| e.0);
                let cp = piv.get(j).map_or(u32::MAX, |e| e.0);
                if cr < cp {
                    scratch.push((cr, ar.scale(&a, &row[i].1)));
                    i += 1;
                } else if cp < cr {
                    // fill-in
                    scratch.push((cp, ar.neg_scale(&b, &piv[j].1)));
                    count[cp as usize] += 1;
                    col_rows[cp as usize].push(r);
                    j += 1;
                } else {
                    let v = ar.lin(&a, &row[i].1, &b, &piv[j].1);
                    if ar.is_zero(&v) {
                        if cr != c {
                            count[cr as usize] -= 1;
                            heap.push(Reverse((count[cr as usize], cr)));
                        }
                    } else {
                        scratch.push((cr, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
            ar.finish(&mut scratch);
            std::mem::swap(&mut m[r as usize], &mut scratch);
        }
        pivots.push(ci);
    }
    (pivots.len(), pivots)
}
