//! Boundary matrices, rational Betti numbers and integral homology.
//!
//! Rational ranks come from a fraction-free column reduction; integral
//! homology comes from a Smith normal form computed by a sparse unit-pivot
//! pass followed by dense elimination over arbitrary-precision integers.
//! `H_0` is unreduced unless the `reduced_*` variants are used.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::complex::Complex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("dimension {k} outside 1..={max_dim}")]
    DimensionOutOfRange { k: usize, max_dim: usize },
    #[error("upper-boundary-truncated: H_{k} needs faces of dimension {} but the complex stops at {max_dim}", k + 1)]
    Truncated { k: usize, max_dim: usize },
}

pub type Result<T> = std::result::Result<T, HomologyError>;

/// Sparse signed incidence matrix of `∂_k`, stored by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    rows: usize,
    columns: Vec<Vec<(usize, i8)>>,
}

impl BoundaryMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Nonzeros of column `j`, sorted by row.
    pub fn column(&self, j: usize) -> &[(usize, i8)] {
        &self.columns[j]
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.cols()]; self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m[i][j] = i64::from(v);
            }
        }
        m
    }

    /// `self · rhs` has no nonzero entry (`self = ∂_{k-1}`, `rhs = ∂_k`).
    pub fn composes_to_zero(&self, rhs: &BoundaryMatrix) -> bool {
        assert_eq!(self.cols(), rhs.rows(), "shape mismatch");
        rhs.columns.iter().all(|col| {
            let mut acc: HashMap<usize, i64> = HashMap::new();
            for &(mid, b) in col {
                for &(i, a) in &self.columns[mid] {
                    *acc.entry(i).or_insert(0) += i64::from(a) * i64::from(b);
                }
            }
            acc.values().all(|&v| v == 0)
        })
    }

    /// Coordinate format: `rows cols nnz`, then one `i j v` line per nonzero.
    pub fn to_triplets(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.rows, self.cols(), self.nnz());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                let _ = writeln!(out, "{i} {j} {v}");
            }
        }
        out
    }
}

/// `∂_k` with rows indexed by `(k-1)`-faces and columns by `k`-faces in the
/// complex's lexicographic order; deleting position `j` carries sign `(-1)^j`.
pub fn boundary_matrix(c: &Complex, k: usize) -> Result<BoundaryMatrix> {
    if k == 0 || k > c.max_dim() {
        return Err(HomologyError::DimensionOutOfRange { k, max_dim: c.max_dim() });
    }
    let mut sub = Vec::with_capacity(k);
    let columns = c
        .faces(k)
        .iter()
        .map(|f| {
            let vs = f.vertices();
            let mut col: Vec<(usize, i8)> = (0..vs.len())
                .map(|j| {
                    sub.clear();
                    sub.extend(vs.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v));
                    let row = c.index_of(&sub).expect("complex is closed under faces");
                    (row, if j % 2 == 0 { 1 } else { -1 })
                })
                .collect();
            col.sort_unstable();
            col
        })
        .collect();
    Ok(BoundaryMatrix { rows: c.count(k - 1), columns })
}

// ---------------------------------------------------------------------------
// rational rank

trait Coef: Clone + std::fmt::Debug {
    fn from_i64(v: i64) -> Self;
    fn is_nil(&self) -> bool;
    /// `a*x - b*y`, `None` on overflow.
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self>;
    fn content_gcd(&self, other: &Self) -> Self;
    fn div_exact(&self, d: &Self) -> Self;
    fn is_unit(&self) -> bool;
}

impl Coef for i64 {
    fn from_i64(v: i64) -> Self {
        v
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        a.checked_mul(*x)?.checked_sub(b.checked_mul(*y)?)
    }
    fn content_gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }
    fn is_unit(&self) -> bool {
        self.abs() == 1
    }
}

impl Coef for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        Some(a * x - b * y)
    }
    fn content_gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }
    fn is_unit(&self) -> bool {
        self.abs().is_one()
    }
}

type SparseCol<T> = Vec<(usize, T)>;

/// `b*x - a*y` on sorted sparse columns, then divided by the content gcd.
fn combine<T: Coef>(b: &T, x: &SparseCol<T>, a: &T, y: &SparseCol<T>) -> Option<SparseCol<T>> {
    let zero = T::from_i64(0);
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let (row, v) = match (x.get(i), y.get(j)) {
            (Some(p), Some(q)) if p.0 == q.0 => {
                i += 1;
                j += 1;
                (p.0, T::mul_sub(b, &p.1, a, &q.1)?)
            }
            (Some(p), q) if q.is_none_or(|q| p.0 < q.0) => {
                i += 1;
                (p.0, T::mul_sub(b, &p.1, &zero, &zero)?)
            }
            (_, Some(q)) => {
                j += 1;
                (q.0, T::mul_sub(&zero, &zero, a, &q.1)?)
            }
            _ => unreachable!(),
        };
        if !v.is_nil() {
            out.push((row, v));
        }
    }
    let mut g = T::from_i64(0);
    for (_, v) in &out {
        g = g.content_gcd(v);
        if g.is_unit() {
            return Some(out);
        }
    }
    if !g.is_nil() {
        for (_, v) in &mut out {
            *v = v.div_exact(&g);
        }
    }
    Some(out)
}

/// Rank by lowest-row column reduction with fraction-free updates; `None` on overflow.
fn column_rank<T: Coef>(columns: Vec<SparseCol<T>>) -> Option<usize> {
    let mut pivots: HashMap<usize, usize> = HashMap::new();
    let mut reduced: Vec<SparseCol<T>> = Vec::with_capacity(columns.len());
    for mut col in columns {
        while let Some((low, a)) = col.last().cloned() {
            match pivots.get(&low) {
                Some(&p) => {
                    let piv = &reduced[p];
                    let b = piv.last().expect("pivot column is nonzero").1.clone();
                    col = combine(&b, &col, &a, piv)?;
                }
                None => {
                    pivots.insert(low, reduced.len());
                    break;
                }
            }
        }
        reduced.push(col);
    }
    Some(pivots.len())
}

/// Exact rank over `Q`.
pub fn rank_q(m: &BoundaryMatrix) -> usize {
    let small: Vec<SparseCol<i64>> =
        m.columns.iter().map(|c| c.iter().map(|&(r, v)| (r, i64::from(v))).collect()).collect();
    if let Some(r) = column_rank(small) {
        return r;
    }
    let big: Vec<SparseCol<BigInt>> =
        m.columns.iter().map(|c| c.iter().map(|&(r, v)| (r, BigInt::from(v))).collect()).collect();
    column_rank(big).expect("arbitrary precision never overflows")
}

fn check_range(c: &Complex, k: usize) -> Result<()> {
    if k >= c.max_dim() {
        return Err(HomologyError::Truncated { k, max_dim: c.max_dim() });
    }
    Ok(())
}

fn rank_of(c: &Complex, k: usize, rank: impl Fn(&BoundaryMatrix) -> usize) -> usize {
    if k == 0 || k > c.max_dim() {
        0
    } else {
        rank(&boundary_matrix(c, k).expect("k in range"))
    }
}

/// `β_k = f_k - rank ∂_k - rank ∂_{k+1}` over `Q`, with unreduced `β_0`.
pub fn betti_q(c: &Complex, k: usize) -> Result<usize> {
    check_range(c, k)?;
    Ok(c.count(k) - rank_of(c, k, rank_q) - rank_of(c, k + 1, rank_q))
}

/// Reduced Betti number: `β_0` minus one on a nonempty complex.
pub fn reduced_betti_q(c: &Complex, k: usize) -> Result<usize> {
    let b = betti_q(c, k)?;
    Ok(if k == 0 && c.count(0) > 0 { b - 1 } else { b })
}

// ---------------------------------------------------------------------------
// Smith normal form

/// Rank and invariant factors `d_1 | d_2 | ...` (all positive, units included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.diagonal.len()
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diagonal.iter().filter(|d| !d.is_one()).cloned().collect()
    }
}

/// Rows of a sparse matrix with a column index kept in sync.
struct SparseRows {
    rows: Vec<std::collections::BTreeMap<usize, i64>>,
    col_rows: Vec<BTreeSet<usize>>,
}

impl SparseRows {
    fn from_boundary(m: &BoundaryMatrix) -> SparseRows {
        let mut rows = vec![std::collections::BTreeMap::new(); m.rows()];
        let mut col_rows = vec![BTreeSet::new(); m.cols()];
        for (j, col) in m.columns.iter().enumerate() {
            for &(i, v) in col {
                rows[i].insert(j, i64::from(v));
                col_rows[j].insert(i);
            }
        }
        SparseRows { rows, col_rows }
    }

    /// Unit entry minimising the fill-in estimate `(row len - 1) * (col len - 1)`.
    fn best_unit_pivot(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, &v) in row {
                if v.abs() == 1 {
                    let cost = (row.len() - 1) * (self.col_rows[j].len() - 1);
                    if best.is_none_or(|b| cost < b.0) {
                        best = Some((cost, i, j));
                        if cost == 0 {
                            return Some((i, j));
                        }
                    }
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }

    /// Clears column `pc` using the unit at `(pr, pc)`, then drops row `pr`.
    /// Returns `false` (leaving the matrix untouched) if an entry would overflow.
    fn eliminate(&mut self, pr: usize, pc: usize) -> bool {
        let pivot = self.rows[pr][&pc];
        let prow: Vec<(usize, i64)> = self.rows[pr].iter().map(|(&j, &v)| (j, v)).collect();
        let targets: Vec<usize> = self.col_rows[pc].iter().copied().filter(|&r| r != pr).collect();
        // dry run for overflow
        for &r in &targets {
            let f = self.rows[r][&pc] * pivot;
            for &(j, v) in &prow {
                let cur = self.rows[r].get(&j).copied().unwrap_or(0);
                if f.checked_mul(v).and_then(|fv| cur.checked_sub(fv)).is_none() {
                    return false;
                }
            }
        }
        for &r in &targets {
            let f = self.rows[r][&pc] * pivot;
            for &(j, v) in &prow {
                let cur = self.rows[r].get(&j).copied().unwrap_or(0);
                let nv = cur - f * v;
                if nv == 0 {
                    self.rows[r].remove(&j);
                    self.col_rows[j].remove(&r);
                } else {
                    self.rows[r].insert(j, nv);
                    self.col_rows[j].insert(r);
                }
            }
        }
        for &(j, _) in &prow {
            self.col_rows[j].remove(&pr);
        }
        self.rows[pr].clear();
        true
    }
}

/// Smith normal form of an integer matrix.
pub fn smith_normal_form(m: &BoundaryMatrix) -> SmithForm {
    let mut sparse = SparseRows::from_boundary(m);
    let mut units = 0usize;
    while let Some((r, c)) = sparse.best_unit_pivot() {
        if !sparse.eliminate(r, c) {
            break;
        }
        units += 1;
    }
    let live_rows: Vec<usize> = (0..sparse.rows.len()).filter(|&i| !sparse.rows[i].is_empty()).collect();
    let live_cols: Vec<usize> = (0..sparse.col_rows.len()).filter(|&j| !sparse.col_rows[j].is_empty()).collect();
    let col_pos: HashMap<usize, usize> = live_cols.iter().enumerate().map(|(p, &j)| (j, p)).collect();
    let mut dense = vec![vec![BigInt::zero(); live_cols.len()]; live_rows.len()];
    for (p, &i) in live_rows.iter().enumerate() {
        for (&j, &v) in &sparse.rows[i] {
            dense[p][col_pos[&j]] = BigInt::from(v);
        }
    }
    let mut diagonal = vec![BigInt::one(); units];
    diagonal.extend(dense_smith(dense));
    normalize_divisibility(&mut diagonal);
    SmithForm { diagonal }
}

/// Nonzero diagonal of the Smith form of a dense matrix.
fn dense_smith(mut a: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero magnitude in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(t) {
            for (j, v) in row.iter().enumerate().skip(t) {
                if !v.is_zero() && best.is_none_or(|(bi, bj)| v.abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                let (top, rest) = a.split_at_mut(i);
                for (x, y) in rest[0].iter_mut().zip(&top[t]).skip(t) {
                    *x -= &q * y;
                }
                if !a[i][t].is_zero() {
                    a.swap(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for row in a.iter_mut() {
                    let s = &q * &row[t];
                    row[j] -= s;
                }
                if !a[t][j].is_zero() {
                    for row in a.iter_mut() {
                        row.swap(t, j);
                    }
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // pivot must divide the whole trailing block
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !(&a[i][j] % &a[t][t]).is_zero()));
            match bad {
                Some(i) => {
                    let (top, rest) = a.split_at_mut(i);
                    for (x, y) in top[t].iter_mut().zip(&rest[0]).skip(t) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag
}

/// Enforces `d_i | d_{i+1}` by replacing adjacent pairs with (gcd, lcm).
fn normalize_divisibility(d: &mut [BigInt]) {
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            if !(&d[j] % &d[i]).is_zero() {
                let g = d[i].gcd(&d[j]);
                let l = d[i].lcm(&d[j]);
                d[i] = g;
                d[j] = l;
            }
        }
    }
}

/// `H_k(c; Z)` as rank plus torsion invariant factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomologyGroup {
    pub dim: usize,
    pub betti: usize,
    pub torsion: Vec<BigInt>,
}

impl HomologyGroup {
    pub fn is_trivial(&self) -> bool {
        self.betti == 0 && self.torsion.is_empty()
    }

    /// Torsion factors as small integers, saturating at `u64::MAX`.
    pub fn torsion_u64(&self) -> Vec<u64> {
        self.torsion.iter().map(|t| t.to_u64().unwrap_or(u64::MAX)).collect()
    }
}

impl std::fmt::Display for HomologyGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        match self.betti {
            0 => {}
            1 => parts.push("Z".into()),
            b => parts.push(format!("Z^{b}")),
        }
        parts.extend(self.torsion.iter().map(|t| format!("Z/{t}")));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn smith_of(c: &Complex, k: usize) -> Option<SmithForm> {
    (k >= 1 && k <= c.max_dim()).then(|| smith_normal_form(&boundary_matrix(c, k).expect("k in range")))
}

/// Integral homology in degree `k` (unreduced in degree 0).
pub fn homology_z(c: &Complex, k: usize) -> Result<HomologyGroup> {
    check_range(c, k)?;
    let rank_k = smith_of(c, k).map_or(0, |s| s.rank());
    let next = smith_of(c, k + 1).expect("k + 1 <= max_dim");
    Ok(HomologyGroup { dim: k, betti: c.count(k) - rank_k - next.rank(), torsion: next.torsion() })
}

/// Reduced integral homology: drops one copy of `Z` from a nonempty `H_0`.
pub fn reduced_homology_z(c: &Complex, k: usize) -> Result<HomologyGroup> {
    let mut h = homology_z(c, k)?;
    if k == 0 && c.count(0) > 0 {
        h.betti -= 1;
    }
    Ok(h)
}

/// Homology in degrees `0..=max_k` with the Euler and Morse checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiProfile {
    pub groups: Vec<HomologyGroup>,
    pub f: Vec<usize>,
    /// `Σ (-1)^k β_k` over the profile.
    pub euler_betti: i64,
    /// `Σ (-1)^k f_k` over the profile.
    pub euler_faces: i64,
    /// `rank ∂_{max_k + 1}`, the boundary term that closes the truncated identity.
    pub top_boundary_rank: usize,
    pub euler_holds: bool,
    /// Degrees where `β_k < f_k - f_{k+1} - f_{k-1}` (always empty for a correct computation).
    pub morse_violations: Vec<usize>,
}

impl BettiProfile {
    pub fn betti(&self, k: usize) -> Option<usize> {
        self.groups.get(k).map(|g| g.betti)
    }

    /// `f_k - f_{k+1} - f_{k-1}`, the lower bound for `β_k`.
    pub fn morse_bound(&self, k: usize) -> i64 {
        let f = |i: usize| self.f.get(i).copied().unwrap_or(0) as i64;
        f(k) - f(k + 1) - if k == 0 { 0 } else { f(k - 1) }
    }
}

pub fn betti_profile(c: &Complex, max_k: usize) -> Result<BettiProfile> {
    check_range(c, max_k)?;
    let smiths: Vec<Option<SmithForm>> = (0..=max_k + 1).map(|k| smith_of(c, k)).collect();
    let rank = |k: usize| smiths[k].as_ref().map_or(0, SmithForm::rank);
    let groups: Vec<HomologyGroup> = (0..=max_k)
        .map(|k| HomologyGroup {
            dim: k,
            betti: c.count(k) - rank(k) - rank(k + 1),
            torsion: smiths[k + 1].as_ref().map(SmithForm::torsion).unwrap_or_default(),
        })
        .collect();
    let f: Vec<usize> = (0..=max_k + 1).map(|k| c.count(k)).collect();
    let sign = |k: usize| if k.is_multiple_of(2) { 1i64 } else { -1 };
    let euler_betti = groups.iter().map(|g| sign(g.dim) * g.betti as i64).sum();
    let euler_faces = (0..=max_k).map(|k| sign(k) * f[k] as i64).sum();
    let top_boundary_rank = rank(max_k + 1);
    let euler_holds = euler_betti == euler_faces - sign(max_k) * top_boundary_rank as i64;
    let mut profile = BettiProfile {
        groups,
        f,
        euler_betti,
        euler_faces,
        top_boundary_rank,
        euler_holds,
        morse_violations: Vec::new(),
    };
    profile.morse_violations =
        (0..=max_k).filter(|&k| (profile.groups[k].betti as i64) < profile.morse_bound(k)).collect();
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{flag_complex, z_complex, Labels};
    use crate::graphs::{complement, sample_gnp, Graph, RngSeed};

    fn simplex(n: usize, max_dim: usize) -> Complex {
        Complex::from_faces(n, max_dim, vec![(0..n).collect()], Labels::Plain).unwrap()
    }

    fn rp2() -> Complex {
        let mut g = Graph::empty(6);
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5);
        }
        z_complex(&complement(&g), 4)
    }

    #[test]
    fn boundary_shape_and_signs() {
        let tri = simplex(3, 2).skeleton(1);
        let d1 = boundary_matrix(&tri, 1).unwrap();
        assert_eq!((d1.rows(), d1.cols()), (3, 3));
        assert_eq!(rank_q(&d1), 2);
        // {0,1}: delete 0 -> {1} with +1, delete 1 -> {0} with -1
        assert_eq!(d1.column(0), &[(0, -1), (1, 1)]);
        assert!(boundary_matrix(&tri, 0).is_err());
        assert!(boundary_matrix(&tri, 2).is_err());
    }

    #[test]
    fn boundary_squares_to_zero_on_tetrahedron() {
        let t = simplex(4, 3);
        for k in 2..=3 {
            assert!(boundary_matrix(&t, k - 1).unwrap().composes_to_zero(&boundary_matrix(&t, k).unwrap()));
        }
    }

    #[test]
    fn small_homology_examples() {
        let mobius = z_complex(&Graph::cycle(5), 4);
        assert_eq!((0..3).map(|k| betti_q(&mobius, k).unwrap()).collect::<Vec<_>>(), vec![1, 1, 0]);
        let h1 = homology_z(&mobius, 1).unwrap();
        assert_eq!((h1.betti, h1.torsion.len()), (1, 0));

        let p = rp2();
        assert_eq!((0..3).map(|k| betti_q(&p, k).unwrap()).collect::<Vec<_>>(), vec![1, 0, 0]);
        let h1 = homology_z(&p, 1).unwrap();
        assert_eq!(h1.betti, 0);
        assert_eq!(h1.torsion, vec![BigInt::from(2)]);
        assert_eq!(h1.to_string(), "Z/2");

        let sphere = simplex(4, 3).skeleton(2);
        let sphere = Complex::from_faces(4, 3, sphere.iter().map(|f| f.vertices().to_vec()), Labels::Plain).unwrap();
        assert_eq!((0..3).map(|k| betti_q(&sphere, k).unwrap()).collect::<Vec<_>>(), vec![1, 0, 1]);

        let full = simplex(5, 5);
        for k in 1..5 {
            assert!(homology_z(&full, k).unwrap().is_trivial());
        }
        assert_eq!(reduced_betti_q(&full, 0).unwrap(), 0);
    }

    #[test]
    fn truncation_is_flagged() {
        let mobius = z_complex(&Graph::cycle(5), 2);
        assert!(matches!(betti_q(&mobius, 2), Err(HomologyError::Truncated { .. })));
        assert!(homology_z(&mobius, 2).is_err());
        assert!(betti_profile(&mobius, 2).is_err());
    }

    #[test]
    fn profile_euler_and_morse() {
        for s in 0..30 {
            let g = sample_gnp(9, 0.4, RngSeed(s)).unwrap();
            let z = z_complex(&g, 5);
            let prof = betti_profile(&z, 3).unwrap();
            assert!(prof.euler_holds);
            assert!(prof.morse_violations.is_empty());
            for k in 0..=3 {
                assert_eq!(prof.groups[k].betti, betti_q(&z, k).unwrap());
            }
        }
    }

    #[test]
    fn smith_known_matrices() {
        // diag(2, 3) has Smith form diag(1, 6)
        let m = BoundaryMatrix { rows: 2, columns: vec![vec![(0, 2)], vec![(1, 3)]] };
        let s = smith_normal_form(&m);
        assert_eq!(s.diagonal, vec![BigInt::from(1), BigInt::from(6)]);
        let m = BoundaryMatrix { rows: 2, columns: vec![vec![(0, 2), (1, 2)], vec![(0, 2), (1, -2)]] };
        assert_eq!(smith_normal_form(&m).diagonal, vec![BigInt::from(2), BigInt::from(4)]);
    }

    #[test]
    fn triplet_export() {
        let d = boundary_matrix(&simplex(3, 1), 1).unwrap();
        let text = d.to_triplets();
        assert!(text.starts_with("3 3 6\n"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn flag_of_cycle_is_circle() {
        let c = flag_complex(&Graph::cycle(7), 3);
        let h = betti_profile(&c, 2).unwrap();
        assert_eq!(h.groups.iter().map(|g| g.betti).collect::<Vec<_>>(), vec![1, 1, 0]);
    }
}
