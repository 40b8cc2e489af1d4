//! Finite simplicial complexes stored as lexicographically sorted face lists
//! per dimension, and the constructions built on graphs: flag complexes, the
//! odd-triangle complex `Z(G)`, separated deleted joins with their sign-swap
//! involution, quotients, links and the `Π_{k,l}` subcomplexes.
//!
//! Every constructor takes a mandatory `max_dim` cutoff. A complex is closed
//! under taking nonempty subsets; the empty face is never stored, so f-vectors
//! start at `f_0`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graphs::{Graph, VertexSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("invalid face {0:?}: vertices must be distinct and the face nonempty")]
    InvalidFace(Vec<usize>),
    #[error("face {0:?} is not in the complex")]
    FaceNotFound(Vec<usize>),
    #[error("vertex {vertex} and its image {image} are at distance {distance} < 3")]
    Distance { vertex: usize, image: usize, distance: usize },
    #[error("involution does not map face {0:?} to a face")]
    NotSimplicial(Vec<usize>),
    #[error("not a fixed-point-free involution: {0}")]
    NotInvolution(String),
    #[error("complex carries no sign labels")]
    Unsigned,
    #[error("face cap of {0} exceeded")]
    FaceCapExceeded(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, ComplexError>;

/// A nonempty, strictly increasing list of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face(Vec<usize>);

impl Face {
    /// Sorts the vertices; rejects duplicates and the empty list.
    pub fn new(mut vertices: Vec<usize>) -> Result<Face> {
        vertices.sort_unstable();
        if vertices.is_empty() || vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(ComplexError::InvalidFace(vertices));
        }
        Ok(Face(vertices))
    }

    pub(crate) fn from_sorted(vertices: Vec<usize>) -> Face {
        debug_assert!(!vertices.is_empty() && vertices.windows(2).all(|w| w[0] < w[1]));
        Face(vertices)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset_of(&self, other: &[usize]) -> bool {
        is_sorted_subset(&self.0, other)
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl std::fmt::Display for Face {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

pub(crate) fn is_sorted_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.by_ref().any(|y| y == x))
}

/// Whether ground-set ids encode signed vertices `2v + s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labels {
    Plain,
    /// `(v, -) -> 2v`, `(v, +) -> 2v + 1`.
    Signed,
}

/// Sign of a vertex of a separated deleted join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

/// A base vertex with a sign, encoded as `2 * base + (sign == Plus) as usize`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedVertex {
    pub base: usize,
    pub sign: Sign,
}

impl SignedVertex {
    pub fn encode(self) -> usize {
        2 * self.base + usize::from(self.sign == Sign::Plus)
    }

    pub fn decode(id: usize) -> SignedVertex {
        let sign = if id.is_multiple_of(2) { Sign::Minus } else { Sign::Plus };
        SignedVertex { base: id / 2, sign }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Complex {
    n: usize,
    max_dim: usize,
    faces: Vec<Vec<Face>>,
    labels: Labels,
}

impl Complex {
    /// Builds from faces already closed under subsets; sorts and dedups each dimension.
    pub(crate) fn from_closed(n: usize, max_dim: usize, mut faces: Vec<Vec<Face>>, labels: Labels) -> Complex {
        faces.resize(max_dim + 1, Vec::new());
        faces.truncate(max_dim + 1);
        for layer in &mut faces {
            layer.sort_unstable();
            layer.dedup();
        }
        let c = Complex { n, max_dim, faces, labels };
        debug_assert!(c.is_closed());
        c
    }

    /// Downward closure of `generators`, truncated at `max_dim`.
    pub fn from_faces(
        n: usize,
        max_dim: usize,
        generators: impl IntoIterator<Item = Vec<usize>>,
        labels: Labels,
    ) -> Result<Complex> {
        let mut layers: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); max_dim + 1];
        for g in generators {
            let f = Face::new(g)?;
            if let Some(&v) = f.0.iter().find(|&&v| v >= n) {
                return Err(ComplexError::Parse { line: 0, msg: format!("vertex {v} outside ground set of size {n}") });
            }
            close_into(&f.0, max_dim, &mut layers);
        }
        let faces = layers
            .into_iter()
            .map(|l| l.into_iter().map(Face::from_sorted).collect())
            .collect();
        Ok(Complex { n, max_dim, faces, labels })
    }

    pub fn empty(n: usize, max_dim: usize, labels: Labels) -> Complex {
        Complex { n, max_dim, faces: vec![Vec::new(); max_dim + 1], labels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn labels(&self) -> Labels {
        self.labels
    }

    pub fn with_labels(mut self, labels: Labels) -> Complex {
        self.labels = labels;
        self
    }

    /// Faces of dimension `k`, lexicographically sorted; empty above `max_dim`.
    pub fn faces(&self, k: usize) -> &[Face] {
        self.faces.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, k: usize) -> usize {
        self.faces(k).len()
    }

    pub fn total_faces(&self) -> usize {
        self.faces.iter().map(Vec::len).sum()
    }

    /// Highest dimension with a face, `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        self.faces.iter().rposition(|l| !l.is_empty())
    }

    pub fn index_of(&self, vertices: &[usize]) -> Option<usize> {
        if vertices.is_empty() {
            return None;
        }
        let layer = self.faces.get(vertices.len() - 1)?;
        layer.binary_search_by(|f| f.0.as_slice().cmp(vertices)).ok()
    }

    pub fn contains(&self, vertices: &[usize]) -> bool {
        self.index_of(vertices).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().flatten()
    }

    /// Every stored k-face has all of its (k-1)-subfaces stored.
    pub fn is_closed(&self) -> bool {
        (1..self.faces.len()).all(|k| {
            self.faces[k].iter().all(|f| {
                (0..f.len()).all(|j| {
                    let sub: Vec<usize> = f.0.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
                    self.contains(&sub)
                })
            })
        })
    }

    /// The 1-skeleton as a graph on `0..n`.
    pub fn one_skeleton(&self) -> Graph {
        let mut g = Graph::empty(self.n);
        for e in self.faces(1) {
            g.add_edge(e.0[0], e.0[1]);
        }
        g
    }

    /// Faces up to dimension `k`.
    pub fn skeleton(&self, k: usize) -> Complex {
        let k = k.min(self.max_dim);
        Complex { n: self.n, max_dim: k, faces: self.faces[..=k].to_vec(), labels: self.labels }
    }

    /// Set of all faces, for face-set comparisons.
    pub fn face_set(&self) -> BTreeSet<Face> {
        self.iter().cloned().collect()
    }

    pub fn same_faces(&self, other: &Complex) -> bool {
        let top = self.faces.len().max(other.faces.len());
        (0..top).all(|k| self.faces(k) == other.faces(k))
    }

    /// Text format: `n maxDim`, then per dimension `dim k count` followed by faces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.max_dim);
        for (k, layer) in self.faces.iter().enumerate() {
            let _ = writeln!(out, "dim {k} {}", layer.len());
            for f in layer {
                let line: Vec<String> = f.0.iter().map(usize::to_string).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Complex> {
        let perr = |line: usize, msg: String| ComplexError::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let head: Vec<usize> = parse_nums(header, hl)?;
        let [n, max_dim] = head[..] else {
            return Err(perr(hl, "header must be `n maxDim`".into()));
        };
        let mut faces: Vec<Vec<Face>> = Vec::with_capacity(max_dim + 1);
        for k in 0..=max_dim {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, format!("missing `dim {k}` section")))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "dim" || parts[1] != k.to_string() {
                return Err(perr(ln, format!("expected `dim {k} count`")));
            }
            let count: usize = parts[2].parse().map_err(|e| perr(ln, format!("{e}")))?;
            let mut layer = Vec::with_capacity(count);
            for _ in 0..count {
                let (ln, l) = lines.next().ok_or_else(|| perr(0, format!("dimension {k} truncated")))?;
                let vs = parse_nums(l, ln)?;
                if vs.len() != k + 1 || vs.windows(2).any(|w| w[0] >= w[1]) || vs.iter().any(|&v| v >= n) {
                    return Err(perr(ln, format!("bad {k}-face {vs:?}")));
                }
                layer.push(Face(vs));
            }
            if layer.windows(2).any(|w| w[0] >= w[1]) {
                return Err(perr(ln, format!("dimension {k} faces not sorted and unique")));
            }
            faces.push(layer);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(perr(ln, "trailing content".into()));
        }
        let c = Complex { n, max_dim, faces, labels: Labels::Plain };
        if !c.is_closed() {
            return Err(perr(0, "face list is not closed under subsets".into()));
        }
        Ok(c)
    }
}

fn parse_nums(line: &str, ln: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|e| ComplexError::Parse { line: ln, msg: format!("`{t}`: {e}") }))
        .collect()
}

/// Adds every nonempty subset of `f` with at most `max_dim + 1` vertices.
fn close_into(f: &[usize], max_dim: usize, layers: &mut [BTreeSet<Vec<usize>>]) {
    let k = f.len();
    let mut stack: Vec<usize> = Vec::new();
    fn rec(f: &[usize], start: usize, max_len: usize, stack: &mut Vec<usize>, layers: &mut [BTreeSet<Vec<usize>>]) {
        for i in start..f.len() {
            stack.push(f[i]);
            layers[stack.len() - 1].insert(stack.clone());
            if stack.len() < max_len {
                rec(f, i + 1, max_len, stack, layers);
            }
            stack.pop();
        }
    }
    rec(f, 0, k.min(max_dim + 1), &mut stack, layers);
}

/// Sign-swapping involution on a ground set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Involution {
    map: Vec<usize>,
}

impl Involution {
    /// Validates `map ∘ map = id` with no fixed points.
    pub fn new(map: Vec<usize>) -> Result<Involution> {
        for (v, &w) in map.iter().enumerate() {
            if w >= map.len() {
                return Err(ComplexError::NotInvolution(format!("{v} maps outside the ground set")));
            }
            if w == v {
                return Err(ComplexError::NotInvolution(format!("{v} is fixed")));
            }
            if map[w] != v {
                return Err(ComplexError::NotInvolution(format!("{v} -> {w} -> {}", map[w])));
            }
        }
        Ok(Involution { map })
    }

    /// `2v <-> 2v + 1` on `2 * n_base` signed vertices.
    pub fn sign_swap(n_base: usize) -> Involution {
        Involution { map: (0..2 * n_base).map(|v| v ^ 1).collect() }
    }

    pub fn apply(&self, v: usize) -> usize {
        self.map[v]
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply_face(&self, f: &[usize]) -> Vec<usize> {
        let mut img: Vec<usize> = f.iter().map(|&v| self.map[v]).collect();
        img.sort_unstable();
        img
    }
}

// ---------------------------------------------------------------------------
// clique search

struct CliqueSink<'a> {
    by_size: &'a mut Vec<Vec<Vec<usize>>>,
    cap: Option<usize>,
    total: usize,
}

impl CliqueSink<'_> {
    fn push(&mut self, c: &[usize]) -> Result<()> {
        self.total += 1;
        if let Some(cap) = self.cap {
            if self.total > cap {
                return Err(ComplexError::FaceCapExceeded(cap));
            }
        }
        self.by_size[c.len() - 1].push(c.to_vec());
        Ok(())
    }
}

/// All cliques of `g` inside `allowed` with at most `max_size` vertices.
fn cliques_within(g: &Graph, allowed: &VertexSet, max_size: usize, sink: &mut CliqueSink<'_>) -> Result<()> {
    fn rec(g: &Graph, cur: &mut Vec<usize>, cand: &VertexSet, max_size: usize, sink: &mut CliqueSink<'_>) -> Result<()> {
        for v in cand.iter() {
            cur.push(v);
            sink.push(cur)?;
            if cur.len() < max_size {
                let mut next = cand.clone();
                next.retain_above(v);
                next.intersect_with(g.neighbors(v));
                if !next.is_empty() {
                    rec(g, cur, &next, max_size, sink)?;
                }
            }
            cur.pop();
        }
        Ok(())
    }
    if max_size == 0 {
        return Ok(());
    }
    rec(g, &mut Vec::new(), allowed, max_size, sink)
}

fn to_faces(by_size: Vec<Vec<Vec<usize>>>) -> Vec<Vec<Face>> {
    by_size.into_iter().map(|l| l.into_iter().map(Face::from_sorted).collect()).collect()
}

/// Flag (clique) complex of `g`: k-faces are the (k+1)-cliques, `k <= max_dim`.
pub fn flag_complex(g: &Graph, max_dim: usize) -> Complex {
    flag_complex_capped(g, max_dim, None).expect("uncapped construction")
}

pub fn flag_complex_capped(g: &Graph, max_dim: usize, cap: Option<usize>) -> Result<Complex> {
    let mut by_size = vec![Vec::new(); max_dim + 1];
    let mut sink = CliqueSink { by_size: &mut by_size, cap, total: 0 };
    cliques_within(g, &VertexSet::full(g.n()), max_dim + 1, &mut sink)?;
    Ok(Complex::from_closed(g.n(), max_dim, to_faces(by_size), Labels::Plain))
}

/// `Z(G)`: complete 1-skeleton, a triangle iff it spans an odd number of
/// `g`-edges, and a larger simplex iff all of its triangles are present.
pub fn z_complex(g: &Graph, max_dim: usize) -> Complex {
    z_complex_capped(g, max_dim, None).expect("uncapped construction")
}

pub fn z_complex_capped(g: &Graph, max_dim: usize, cap: Option<usize>) -> Result<Complex> {
    let n = g.n();
    // third vertices c making {x, w, c} odd: N(x) xor N(w), flipped when xw is an edge
    let odd_with = |x: usize, w: usize| -> VertexSet {
        let mut s = g.neighbors(x).clone();
        s.symmetric_difference_with(g.neighbors(w));
        if g.has_edge(x, w) {
            s.complement_in_place();
        }
        s
    };

    let max_size = max_dim + 1;
    let mut by_size: Vec<Vec<Vec<usize>>> = vec![Vec::new(); max_size];
    let mut sink = CliqueSink { by_size: &mut by_size, cap, total: 0 };

    fn rec(
        cur: &mut Vec<usize>,
        cand: &VertexSet,
        max_size: usize,
        odd_with: &dyn Fn(usize, usize) -> VertexSet,
        sink: &mut CliqueSink<'_>,
    ) -> Result<()> {
        for w in cand.iter() {
            sink.push(&[cur.as_slice(), &[w]].concat())?;
            if cur.len() + 1 < max_size {
                let mut next = cand.clone();
                next.retain_above(w);
                for &x in cur.iter() {
                    next.intersect_with(&odd_with(x, w));
                }
                if !next.is_empty() {
                    cur.push(w);
                    rec(cur, &next, max_size, odd_with, sink)?;
                    cur.pop();
                }
            }
        }
        Ok(())
    }
    if max_size > 0 {
        rec(&mut Vec::new(), &VertexSet::full(n), max_size, &odd_with, &mut sink)?;
    }
    Ok(Complex::from_closed(n, max_dim, to_faces(by_size), Labels::Plain))
}

/// Separated deleted join of the flag complex of `g`, on `2n` signed vertices,
/// with its sign-swap involution.
pub fn separated_deleted_join(g: &Graph, max_dim: usize) -> (Complex, Involution) {
    separated_deleted_join_capped(g, max_dim, None).expect("uncapped construction")
}

pub fn separated_deleted_join_capped(g: &Graph, max_dim: usize, cap: Option<usize>) -> Result<(Complex, Involution)> {
    let n = g.n();
    let max_size = max_dim + 1;
    // minus cliques, including the empty one
    let mut minus_by_size = vec![Vec::new(); max_size];
    let mut sink = CliqueSink { by_size: &mut minus_by_size, cap: None, total: 0 };
    cliques_within(g, &VertexSet::full(n), max_size, &mut sink)?;
    let mut minus: Vec<Vec<usize>> = vec![Vec::new()];
    minus.extend(minus_by_size.into_iter().flatten());

    let mut out: Vec<Vec<Face>> = vec![Vec::new(); max_size];
    let mut total = 0usize;
    for sigma in &minus {
        let mut region = VertexSet::full(n);
        for &v in sigma {
            region.remove(v);
            region.difference_with(g.neighbors(v));
        }
        let room = max_size - sigma.len();
        let mut taus = vec![Vec::new(); room.max(1)];
        if room > 0 {
            let mut sink = CliqueSink { by_size: &mut taus, cap: None, total: 0 };
            cliques_within(g, &region, room, &mut sink)?;
        }
        let with_empty = (!sigma.is_empty()).then(Vec::new);
        for tau in with_empty.iter().chain(taus.iter().flatten()) {
            let mut face: Vec<usize> = sigma
                .iter()
                .map(|&v| 2 * v)
                .chain(tau.iter().map(|&v| 2 * v + 1))
                .collect();
            face.sort_unstable();
            total += 1;
            if let Some(c) = cap {
                if total > c {
                    return Err(ComplexError::FaceCapExceeded(c));
                }
            }
            out[face.len() - 1].push(Face::from_sorted(face));
        }
    }
    let c = Complex::from_closed(2 * n, max_dim, out, Labels::Signed);
    Ok((c, Involution::sign_swap(n)))
}

/// Separated deleted join of an arbitrary complex `x` (faces `σ*τ` with
/// `σ, τ ∈ x` disjoint and no edge of `x` between them).
pub fn separated_deleted_join_of(x: &Complex, max_dim: usize) -> (Complex, Involution) {
    let n = x.n();
    let skel = x.one_skeleton();
    let mut base: Vec<&[usize]> = vec![&[]];
    base.extend(x.iter().map(Face::vertices));
    let mut out: Vec<Vec<Face>> = vec![Vec::new(); max_dim + 1];
    for sigma in &base {
        for tau in &base {
            let size = sigma.len() + tau.len();
            if size == 0 || size > max_dim + 1 {
                continue;
            }
            if sigma.iter().any(|v| tau.contains(v)) || !skel.separated(sigma, tau) {
                continue;
            }
            let mut face: Vec<usize> = sigma.iter().map(|&v| 2 * v).chain(tau.iter().map(|&v| 2 * v + 1)).collect();
            face.sort_unstable();
            out[size - 1].push(Face::from_sorted(face));
        }
    }
    (Complex::from_closed(2 * n, max_dim, out, Labels::Signed), Involution::sign_swap(n))
}

/// Checks that `inv` is simplicial on `c` and every vertex is at distance at
/// least three from its image in the 1-skeleton.
pub fn check_free_involution(c: &Complex, inv: &Involution) -> Result<()> {
    if inv.len() != c.n() {
        return Err(ComplexError::NotInvolution(format!(
            "involution acts on {} points, complex has ground set {}",
            inv.len(),
            c.n()
        )));
    }
    for f in c.iter() {
        if !c.contains(&inv.apply_face(f.vertices())) {
            return Err(ComplexError::NotSimplicial(f.0.clone()));
        }
    }
    let skel = c.one_skeleton();
    for v in 0..c.n() {
        let w = inv.apply(v);
        if skel.has_edge(v, w) {
            return Err(ComplexError::Distance { vertex: v, image: w, distance: 1 });
        }
        let mut common = skel.neighbors(v).clone();
        common.intersect_with(skel.neighbors(w));
        if !common.is_empty() {
            return Err(ComplexError::Distance { vertex: v, image: w, distance: 2 });
        }
    }
    Ok(())
}

/// Quotient by a free involution whose orbits are pairwise at distance >= 3.
///
/// Orbits are numbered in increasing order of their smallest element, so the
/// signed encoding `2v + s` maps to `v`.
pub fn quotient_by_free_involution(c: &Complex, inv: &Involution) -> Result<Complex> {
    check_free_involution(c, inv)?;
    let mut orbit = vec![usize::MAX; c.n()];
    let mut next = 0;
    for v in 0..c.n() {
        if orbit[v] == usize::MAX {
            orbit[v] = next;
            orbit[inv.apply(v)] = next;
            next += 1;
        }
    }
    let mut layers: Vec<Vec<Face>> = vec![Vec::new(); c.max_dim() + 1];
    for (k, layer) in c.faces.iter().enumerate() {
        for f in layer {
            let mut img: Vec<usize> = f.0.iter().map(|&v| orbit[v]).collect();
            img.sort_unstable();
            layers[k].push(Face::from_sorted(img));
        }
    }
    let q = Complex::from_closed(next, c.max_dim(), layers, Labels::Plain);
    for k in 0..=c.max_dim() {
        if 2 * q.count(k) != c.count(k) {
            return Err(ComplexError::NotInvolution(format!(
                "dimension {k}: {} faces map to {} orbits",
                c.count(k),
                q.count(k)
            )));
        }
    }
    Ok(q)
}

/// Whether `vs` splits into two disjoint cliques with no edge between them.
pub fn splits_into_separated_cliques(g: &Graph, vs: &[usize]) -> bool {
    let k = vs.len();
    if k > 63 {
        return false;
    }
    // the first vertex always goes to the first part
    (0u64..1 << k.saturating_sub(1)).any(|mask| {
        let mask = mask << 1;
        let (a, b): (Vec<usize>, Vec<usize>) = {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for (i, &v) in vs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    b.push(v);
                } else {
                    a.push(v);
                }
            }
            (a, b)
        };
        g.is_clique(&a) && g.is_clique(&b) && g.separated(&a, &b)
    })
}

/// Detailed outcome of [`check_z_equivalence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZEquivalence {
    pub quotient_matches: bool,
    pub every_face_splits: bool,
    pub double_cover_counts: bool,
}

impl ZEquivalence {
    pub fn holds(&self) -> bool {
        self.quotient_matches && self.every_face_splits && self.double_cover_counts
    }
}

pub fn z_equivalence(g: &Graph, max_dim: usize) -> ZEquivalence {
    let z = z_complex(g, max_dim);
    let (join, inv) = separated_deleted_join(g, max_dim);
    let (quotient_matches, double_cover_counts) = match quotient_by_free_involution(&join, &inv) {
        Ok(q) => (q.same_faces(&z), (0..=max_dim).all(|k| join.count(k) == 2 * z.count(k))),
        Err(_) => (false, false),
    };
    let every_face_splits = z.iter().all(|f| splits_into_separated_cliques(g, f.vertices()));
    ZEquivalence { quotient_matches, every_face_splits, double_cover_counts }
}

/// True iff the quotient of the separated deleted join equals `Z(g)` up to
/// `max_dim`, and every face of `Z(g)` splits into two separated cliques.
pub fn check_z_equivalence(g: &Graph, max_dim: usize) -> bool {
    z_equivalence(g, max_dim).holds()
}

/// Link of `f`: faces disjoint from `f` whose union with `f` is a face.
pub fn link(c: &Complex, f: &Face) -> Result<Complex> {
    if !c.contains(f.vertices()) {
        return Err(ComplexError::FaceNotFound(f.0.clone()));
    }
    let size = f.len();
    let max_dim = c.max_dim().saturating_sub(size);
    let mut layers: Vec<Vec<Face>> = vec![Vec::new(); max_dim + 1];
    for k in size..=c.max_dim() {
        for g in c.faces(k) {
            if f.is_subset_of(g.vertices()) {
                let rest: Vec<usize> = g.0.iter().copied().filter(|v| !f.contains(*v)).collect();
                layers[rest.len() - 1].push(Face::from_sorted(rest));
            }
        }
    }
    Ok(Complex::from_closed(c.n(), max_dim, layers, c.labels()))
}

/// Number of minus (even) and plus (odd) vertices of a signed face.
pub fn sign_counts(f: &[usize]) -> (usize, usize) {
    let minus = f.iter().filter(|&&v| v % 2 == 0).count();
    (minus, f.len() - minus)
}

/// `Π_{k,l}`: subcomplex generated by faces with exactly `k` minus and `l` plus vertices.
pub fn pi_subcomplex(c: &Complex, k: usize, l: usize) -> Result<Complex> {
    if c.labels() != Labels::Signed {
        return Err(ComplexError::Unsigned);
    }
    let gens: Vec<Vec<usize>> = if k + l == 0 {
        Vec::new()
    } else {
        c.faces(k + l - 1).iter().filter(|f| sign_counts(f.vertices()) == (k, l)).map(|f| f.0.clone()).collect()
    };
    Complex::from_faces(c.n(), c.max_dim(), gens, Labels::Signed)
}

/// Face counts per dimension (up to the top nonempty dimension) and
/// `euler = Σ (-1)^i f_i`, without the empty face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FVector {
    pub counts: Vec<usize>,
    pub euler: i64,
}

pub fn f_vector(c: &Complex) -> FVector {
    let top = c.dim().map_or(0, |d| d + 1);
    let counts: Vec<usize> = (0..top).map(|k| c.count(k)).collect();
    let euler = counts.iter().enumerate().map(|(i, &f)| if i % 2 == 0 { f as i64 } else { -(f as i64) }).sum();
    FVector { counts, euler }
}

/// Counts of `dim`-faces of a signed complex grouped by `(minus, plus)` vertex counts.
pub fn sign_class_counts(c: &Complex, dim: usize) -> BTreeMap<(usize, usize), usize> {
    let mut m = BTreeMap::new();
    for f in c.faces(dim) {
        *m.entry(sign_counts(f.vertices())).or_insert(0) += 1;
    }
    m
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn rat_pow(base: &BigRational, e: usize) -> BigRational {
    // 0^0 = 1
    num_traits::pow(base.clone(), e)
}

/// One `(k, l)` term of the expected face-count sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedTerm {
    pub k: usize,
    pub l: usize,
    pub value: f64,
}

/// Terms `2·C(n,k)·C(n-k,l)·p^{C(k,2)+C(l,2)}·(1-p)^{kl}` for `k + l = i + 1`,
/// evaluated exactly in rational arithmetic (the binary value of `p` is taken as exact).
pub fn expected_f_vector_terms(n: usize, p: f64, i: usize) -> Vec<ExpectedTerm> {
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    exact_terms(n, p, i).into_iter().map(|(k, l, v)| ExpectedTerm { k, l, value: v.to_f64().unwrap_or(f64::NAN) }).collect()
}

fn exact_terms(n: usize, p: f64, i: usize) -> Vec<(usize, usize, BigRational)> {
    let p = BigRational::from_float(p).expect("finite probability");
    let q = BigRational::one() - &p;
    let two = BigRational::from_integer(BigInt::from(2));
    (0..=i + 1)
        .map(|k| {
            let l = i + 1 - k;
            let count = binomial(n, k) * binomial(n.saturating_sub(k), l);
            let within = k * k.saturating_sub(1) / 2 + l * l.saturating_sub(1) / 2;
            let v = &two * BigRational::from_integer(count) * rat_pow(&p, within) * rat_pow(&q, k * l);
            (k, l, v)
        })
        .collect()
}

/// The expected number of `i`-faces of the separated deleted join, as the
/// printed sum including its leading factor 2.
pub fn expected_f_vector(n: usize, p: f64, i: usize) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    let total: BigRational = exact_terms(n, p, i).into_iter().map(|(_, _, v)| v).fold(BigRational::zero(), |a, b| a + b);
    total.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{complement, sample_gnp, RngSeed};

    fn c5() -> Graph {
        Graph::cycle(5)
    }

    fn c5_complement_in_k6() -> Graph {
        let mut g = Graph::empty(6);
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5);
        }
        complement(&g)
    }

    #[test]
    fn face_validation() {
        assert_eq!(Face::new(vec![3, 1, 2]).unwrap().vertices(), &[1, 2, 3]);
        assert!(Face::new(vec![]).is_err());
        assert!(Face::new(vec![1, 1]).is_err());
    }

    #[test]
    fn flag_small_cases() {
        assert_eq!(f_vector(&flag_complex(&Graph::complete(4), 3)).counts, vec![4, 6, 4, 1]);
        assert_eq!(f_vector(&flag_complex(&c5(), 2)).counts, vec![5, 5]);
    }

    #[test]
    fn flag_triangles_match_triple_loop() {
        let g = sample_gnp(50, 0.5, RngSeed(4)).unwrap();
        let mut t = 0;
        for a in 0..50 {
            for b in a + 1..50 {
                for c in b + 1..50 {
                    if g.has_edge(a, b) && g.has_edge(a, c) && g.has_edge(b, c) {
                        t += 1;
                    }
                }
            }
        }
        assert_eq!(flag_complex(&g, 2).count(2), t);
    }

    #[test]
    fn z_small_cases() {
        let z = z_complex(&c5(), 4);
        assert_eq!(f_vector(&z), FVector { counts: vec![5, 10, 5], euler: 0 });
        let z = z_complex(&c5_complement_in_k6(), 4);
        assert_eq!(f_vector(&z), FVector { counts: vec![6, 15, 10], euler: 1 });
        let z = z_complex(&Graph::empty(6), 4);
        assert_eq!(f_vector(&z).counts, vec![6, 15]);
        assert_eq!(f_vector(&z_complex(&Graph::complete(4), 3)).counts, vec![4, 6, 4, 1]);
    }

    #[test]
    fn z_triangles_follow_odd_rule() {
        let g = sample_gnp(12, 0.4, RngSeed(8)).unwrap();
        let z = z_complex(&g, 2);
        for a in 0..12 {
            for b in a + 1..12 {
                for c in b + 1..12 {
                    let e = [g.has_edge(a, b), g.has_edge(a, c), g.has_edge(b, c)].iter().filter(|&&x| x).count();
                    assert_eq!(z.contains(&[a, b, c]), e % 2 == 1);
                }
            }
        }
    }

    #[test]
    fn join_small_cases() {
        let (j, inv) = separated_deleted_join(&Graph::empty(1), 3);
        assert_eq!(f_vector(&j).counts, vec![2]);
        assert_eq!(inv.apply(0), 1);

        let (j, _) = separated_deleted_join(&Graph::complete(3), 5);
        let expected = Complex::from_faces(6, 5, vec![vec![0, 2, 4], vec![1, 3, 5]], Labels::Signed).unwrap();
        assert!(j.same_faces(&expected));

        let (j, _) = separated_deleted_join(&c5(), 4);
        let z = z_complex(&c5(), 4);
        for k in 0..=4 {
            assert_eq!(j.count(k), 2 * z.count(k));
        }
    }

    #[test]
    fn join_of_flag_matches_direct_join() {
        for s in 0..20 {
            let g = sample_gnp(8, 0.45, RngSeed(s)).unwrap();
            let (a, _) = separated_deleted_join(&g, 5);
            let (b, _) = separated_deleted_join_of(&flag_complex(&g, 5), 5);
            assert!(a.same_faces(&b));
        }
    }

    #[test]
    fn quotient_cases() {
        let (j, inv) = separated_deleted_join(&c5(), 4);
        let q = quotient_by_free_involution(&j, &inv).unwrap();
        assert!(q.same_faces(&z_complex(&c5(), 4)));

        let pts = Complex::from_faces(2, 0, vec![vec![0], vec![1]], Labels::Plain).unwrap();
        let q = quotient_by_free_involution(&pts, &Involution::new(vec![1, 0]).unwrap()).unwrap();
        assert_eq!(f_vector(&q).counts, vec![1]);

        let edge = Complex::from_faces(2, 1, vec![vec![0, 1]], Labels::Plain).unwrap();
        let err = quotient_by_free_involution(&edge, &Involution::new(vec![1, 0]).unwrap());
        assert!(matches!(err, Err(ComplexError::Distance { distance: 1, .. })));

        // 0 and 1 share the neighbour 2 (and 3 is isolated, so the map is not simplicial either)
        let path = Complex::from_faces(4, 1, vec![vec![0, 2], vec![2, 1], vec![3]], Labels::Plain).unwrap();
        let err = quotient_by_free_involution(&path, &Involution::new(vec![1, 0, 3, 2]).unwrap());
        assert!(matches!(err, Err(ComplexError::NotSimplicial(_))));
        let square = Complex::from_faces(4, 1, vec![vec![0, 2], vec![2, 1], vec![1, 3], vec![3, 0]], Labels::Plain).unwrap();
        let err = quotient_by_free_involution(&square, &Involution::new(vec![1, 0, 3, 2]).unwrap());
        assert!(matches!(err, Err(ComplexError::Distance { distance: 2, .. })));
    }

    #[test]
    fn involution_validation() {
        assert!(Involution::new(vec![0, 1]).is_err());
        assert!(Involution::new(vec![1, 2, 0]).is_err());
    }

    #[test]
    fn z_equivalence_examples() {
        assert!(check_z_equivalence(&c5(), 4));
        assert!(check_z_equivalence(&Graph::complete(4), 3));
        assert!(check_z_equivalence(&c5_complement_in_k6(), 5));
    }

    #[test]
    fn link_cases() {
        let simplex = Complex::from_faces(4, 3, vec![vec![0, 1, 2, 3]], Labels::Plain).unwrap();
        let lk = link(&simplex, &Face::new(vec![0]).unwrap()).unwrap();
        let expected = Complex::from_faces(4, 2, vec![vec![1, 2, 3]], Labels::Plain).unwrap();
        assert!(lk.same_faces(&expected));

        let boundary = simplex.skeleton(2);
        let lk = link(&boundary, &Face::new(vec![0, 1]).unwrap()).unwrap();
        assert_eq!(f_vector(&lk).counts, vec![2]);

        assert!(link(&boundary, &Face::new(vec![0, 1, 2, 3]).unwrap()).is_err());
    }

    #[test]
    fn pi_subcomplex_cases() {
        let g = sample_gnp(9, 0.4, RngSeed(21)).unwrap();
        let (j, _) = separated_deleted_join(&g, 5);
        let pi11 = pi_subcomplex(&j, 1, 1).unwrap();
        assert_eq!(pi11.dim(), Some(1));
        for u in 0..9 {
            for v in (0..9).filter(|&v| v != u) {
                let mut f = vec![2 * u, 2 * v + 1];
                f.sort_unstable();
                assert_eq!(pi11.contains(&f), !g.has_edge(u, v));
            }
        }
        let pi20 = pi_subcomplex(&j, 2, 0).unwrap();
        let minus_edges = flag_complex(&g, 1).count(1);
        assert_eq!(pi20.count(1), minus_edges);
        assert!(pi_subcomplex(&flag_complex(&g, 2), 1, 1).is_err());
        for (k, l) in [(1, 2), (2, 2), (3, 1), (0, 3)] {
            let pi = pi_subcomplex(&j, k, l).unwrap();
            assert!(pi.dim().is_none_or(|d| d < k + l));
        }
    }

    #[test]
    fn text_round_trip() {
        let g = sample_gnp(9, 0.4, RngSeed(2)).unwrap();
        let z = z_complex(&g, 3);
        assert_eq!(Complex::from_text(&z.to_text()).unwrap(), z);
        assert!(Complex::from_text("3 1\ndim 0 3\n0\n1\n2\ndim 1 1\n0 5\n").is_err());
        assert!(Complex::from_text("3 1\ndim 0 1\n0\ndim 1 1\n0 1\n").is_err());
    }

    #[test]
    fn expected_f_vector_edge_cases() {
        // p = 1, i = 2: only (3,0) and (0,3) survive, each 2*C(n,3)
        let n = 9;
        let v = expected_f_vector(n, 1.0, 2);
        assert!((v - 4.0 * 84.0).abs() < 1e-9);
        // p = 0, i = 1: only k = l = 1 survives: 2 * n * (n-1)
        let v = expected_f_vector(n, 0.0, 1);
        assert!((v - 2.0 * 72.0).abs() < 1e-9);
        // p = 0, i >= 2: a clique of size 2 on either side is impossible
        assert_eq!(expected_f_vector(n, 0.0, 2), 0.0);
    }

    #[test]
    fn skeleton_monotone() {
        let g = sample_gnp(10, 0.5, RngSeed(9)).unwrap();
        let small = z_complex(&g, 2);
        let big = z_complex(&g, 4);
        for k in 0..=2 {
            assert_eq!(small.faces(k), big.faces(k));
        }
    }
}
