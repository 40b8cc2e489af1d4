//! Simple undirected graphs, the random models used throughout the crate,
//! and the common-neighbour construction that describes links in the
//! separated deleted join.
//!
//! All samplers are pure functions of their parameters and a [`RngSeed`].
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), which
//! is portable across platforms. Vertices are drawn in increasing order, then
//! edges in lexicographic order `(u, v)` with `u < v`, one uniform `f64` per
//! candidate, so a seed describes the same sample everywhere.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Seed for the crate's samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// A seed derived from this one for an independent sub-stream.
    pub fn derive(self, stream: u64) -> RngSeed {
        // splitmix64 finaliser
        let mut z = self.0 ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

/// Fixed-width bitset over `0..n`, used for adjacency rows and candidate sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    words: Vec<u64>,
    n: usize,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet { words: vec![0; n.div_ceil(64)], n }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n {
            s.insert(v);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        v < self.n && (self.words[v >> 6] >> (v & 63)) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, v: usize) {
        self.words[v >> 6] |= 1 << (v & 63);
    }

    #[inline]
    pub fn remove(&mut self, v: usize) {
        self.words[v >> 6] &= !(1 << (v & 63));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersect_with(&mut self, other: &VertexSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn difference_with(&mut self, other: &VertexSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn symmetric_difference_with(&mut self, other: &VertexSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    /// Replaces the set by its complement in `0..n`.
    pub fn complement_in_place(&mut self) {
        for w in &mut self.words {
            *w = !*w;
        }
        let tail = self.n & 63;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    /// Keeps only elements strictly greater than `v`.
    pub fn retain_above(&mut self, v: usize) {
        let w = v >> 6;
        for word in self.words.iter_mut().take(w) {
            *word = 0;
        }
        if w < self.words.len() {
            let bit = v & 63;
            let mask = if bit == 63 { 0 } else { !0u64 << (bit + 1) };
            self.words[w] &= mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * 64 + t)
                }
            })
        })
    }
}

/// Simple undirected graph on `0..n` with O(1) adjacency queries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    rows: Vec<VertexSet>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { n, rows: vec![VertexSet::empty(n); n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn cycle(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            g.add_edge(u, (u + 1) % n);
        }
        g
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let mut g = Self::empty(a + b);
        for u in 0..a {
            for v in a..a + b {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::Parameter(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(GraphError::Parameter(format!("self-loop at {u}")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Inserts `{u, v}`; ignores self-loops.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.rows[u].insert(v);
            self.rows[v].insert(u);
        }
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.rows[u].remove(v);
        self.rows[v].remove(u);
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> &VertexSet {
        &self.rows[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(VertexSet::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            let mut row = self.rows[u].clone();
            row.retain_above(u);
            row.iter().map(move |v| (u, v)).collect::<Vec<_>>()
        })
    }

    pub fn is_clique(&self, vs: &[usize]) -> bool {
        vs.iter()
            .enumerate()
            .all(|(i, &u)| vs[i + 1..].iter().all(|&v| self.has_edge(u, v)))
    }

    /// True when no vertex of `a` is adjacent to a vertex of `b`.
    pub fn separated(&self, a: &[usize], b: &[usize]) -> bool {
        a.iter().all(|&u| b.iter().all(|&v| !self.has_edge(u, v)))
    }

    /// Subgraph induced on `vertices` (in the given order), relabelled `0..k`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::empty(vertices.len());
        for (i, &u) in vertices.iter().enumerate() {
            for (j, &v) in vertices.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Number of connected components, by union-find.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut comps = self.n;
        for (u, v) in self.edges() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a] = b;
                comps -= 1;
            }
        }
        comps
    }

    /// Writes the `n m` / `u v` text format, edges sorted lexicographically.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or(GraphError::Parse { line: 1, msg: "missing header".into() })?;
        let nums = parse_usizes(header, hl)?;
        let [n, m] = nums[..] else {
            return Err(GraphError::Parse { line: hl, msg: "header must be `n m`".into() });
        };
        let mut g = Graph::empty(n);
        let mut seen = 0;
        for (ln, line) in lines {
            let nums = parse_usizes(line, ln)?;
            let [u, v] = nums[..] else {
                return Err(GraphError::Parse { line: ln, msg: "edge line must be `u v`".into() });
            };
            if u >= n || v >= n {
                return Err(GraphError::Parse { line: ln, msg: format!("edge ({u},{v}) out of range") });
            }
            if u == v {
                return Err(GraphError::Parse { line: ln, msg: "self-loop".into() });
            }
            if g.has_edge(u, v) {
                return Err(GraphError::Parse { line: ln, msg: format!("duplicate edge ({u},{v})") });
            }
            g.add_edge(u, v);
            seen += 1;
        }
        if seen != m {
            return Err(GraphError::Parse { line: hl, msg: format!("header declares {m} edges, found {seen}") });
        }
        Ok(g)
    }
}

fn parse_usizes(line: &str, ln: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| GraphError::Parse { line: ln, msg: format!("`{t}`: {e}") }))
        .collect()
}

/// Graph whose vertices were sampled from a larger ground set and relabelled densely.
#[derive(Debug, Clone, PartialEq)]
pub struct RelabeledGraph {
    pub graph: Graph,
    /// `original[i]` is the ground-set id of vertex `i`.
    pub original: Vec<usize>,
}

/// Graph with two disjoint labelled vertex classes.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitionedGraph {
    pub graph: Graph,
    pub part_a: Vec<usize>,
    pub part_b: Vec<usize>,
    /// Ground-set id of each vertex of `graph`.
    pub original: Vec<usize>,
}

impl BipartitionedGraph {
    /// Number of edges with one endpoint in each class.
    pub fn crossing_edges(&self) -> usize {
        self.part_a
            .iter()
            .map(|&a| self.part_b.iter().filter(|&&b| self.graph.has_edge(a, b)).count())
            .sum()
    }

    /// Edges inside `part_a` and inside `part_b`.
    pub fn internal_edges(&self) -> (usize, usize) {
        let count = |part: &[usize]| {
            let mut c = 0;
            for (i, &u) in part.iter().enumerate() {
                for &v in &part[i + 1..] {
                    if self.graph.has_edge(u, v) {
                        c += 1;
                    }
                }
            }
            c
        };
        (count(&self.part_a), count(&self.part_b))
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::Parameter(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(GraphError::Parameter("n must be positive".into()));
    }
    Ok(())
}

/// Erdős–Rényi `G(n, p)`.
pub fn sample_gnp(n: usize, p: f64, seed: RngSeed) -> Result<Graph> {
    check_n(n)?;
    check_prob("p", p)?;
    let mut rng = seed.rng();
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                g.add_edge(u, v);
            }
        }
    }
    Ok(g)
}

/// Two-parameter model: keep each vertex with probability `p0`, then each
/// edge between kept vertices with probability `p1`.
pub fn sample_two_param(n: usize, p0: f64, p1: f64, seed: RngSeed) -> Result<RelabeledGraph> {
    check_n(n)?;
    check_prob("p0", p0)?;
    check_prob("p1", p1)?;
    let mut rng = seed.rng();
    let original: Vec<usize> = (0..n).filter(|_| rng.gen::<f64>() < p0).collect();
    let k = original.len();
    let mut graph = Graph::empty(k);
    for u in 0..k {
        for v in u + 1..k {
            if rng.gen::<f64>() < p1 {
                graph.add_edge(u, v);
            }
        }
    }
    Ok(RelabeledGraph { graph, original })
}

/// Parameters of the bipartitioned model `H(n, pA, pB, peA, peB, peAB)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HParams {
    pub n: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub pe_a: f64,
    pub pe_b: f64,
    pub pe_ab: f64,
}

impl HParams {
    /// Shorthand `H(n, pA, pB, q) = H(n, pA, pB, q, q, 1 - q)`.
    pub fn symmetric_q(n: usize, p_a: f64, p_b: f64, q: f64) -> Self {
        HParams { n, p_a, p_b, pe_a: q, pe_b: q, pe_ab: 1.0 - q }
    }
}

/// Samples `H(n, pA, pB, peA, peB, peAB)`: each vertex joins `A` with
/// probability `pA`, `B` with probability `pB`, and is dropped otherwise.
pub fn sample_h(params: HParams, seed: RngSeed) -> Result<BipartitionedGraph> {
    let HParams { n, p_a, p_b, pe_a, pe_b, pe_ab } = params;
    check_n(n)?;
    for (name, p) in [("pA", p_a), ("pB", p_b), ("peA", pe_a), ("peB", pe_b), ("peAB", pe_ab)] {
        check_prob(name, p)?;
    }
    if p_a + p_b > 1.0 + 4.0 * f64::EPSILON {
        return Err(GraphError::Parameter(format!("pA + pB = {} exceeds 1", p_a + p_b)));
    }
    let mut rng = seed.rng();
    // side: true = A
    let mut original = Vec::new();
    let mut side = Vec::new();
    for v in 0..n {
        let u: f64 = rng.gen();
        if u < p_a {
            original.push(v);
            side.push(true);
        } else if u < p_a + p_b {
            original.push(v);
            side.push(false);
        }
    }
    let k = original.len();
    let mut graph = Graph::empty(k);
    for u in 0..k {
        for v in u + 1..k {
            let p = match (side[u], side[v]) {
                (true, true) => pe_a,
                (false, false) => pe_b,
                _ => pe_ab,
            };
            if rng.gen::<f64>() < p {
                graph.add_edge(u, v);
            }
        }
    }
    let part_a = (0..k).filter(|&i| side[i]).collect();
    let part_b = (0..k).filter(|&i| !side[i]).collect();
    Ok(BipartitionedGraph { graph, part_a, part_b, original })
}

/// Complement on the same vertex set.
pub fn complement(g: &Graph) -> Graph {
    let mut c = Graph::empty(g.n());
    for u in 0..g.n() {
        for v in u + 1..g.n() {
            if !g.has_edge(u, v) {
                c.add_edge(u, v);
            }
        }
    }
    c
}

/// Graph induced on the common neighbours of `{+v : v in plus} ∪ {-u : u in minus}`
/// in the separated deleted join of the flag complex of `g`.
///
/// `A` (plus copies) are the common neighbours of `plus` that are neither in
/// `minus` nor adjacent to it; `B` (minus copies) symmetrically. Edges inside
/// a class are copied from `g`, and an `A`–`B` pair is joined iff it is a
/// non-edge of `g`.
pub fn common_neighbor_graph(g: &Graph, plus: &[usize], minus: &[usize]) -> Result<BipartitionedGraph> {
    let n = g.n();
    if plus.is_empty() && minus.is_empty() {
        return Err(GraphError::Precondition("plus and minus are both empty".into()));
    }
    for &v in plus.iter().chain(minus) {
        if v >= n {
            return Err(GraphError::Precondition(format!("vertex {v} out of range")));
        }
    }
    if let Some(v) = plus.iter().find(|v| minus.contains(v)) {
        return Err(GraphError::Precondition(format!("vertex {v} appears with both signs")));
    }
    let side_set = |same: &[usize], other: &[usize]| {
        let mut s = VertexSet::full(n);
        for &v in same {
            s.intersect_with(g.neighbors(v));
        }
        for &u in other {
            s.remove(u);
            s.difference_with(g.neighbors(u));
        }
        s
    };
    let a_set = side_set(plus, minus);
    let b_set = side_set(minus, plus);

    let mut original = Vec::new();
    let mut in_a = Vec::new();
    for v in 0..n {
        if a_set.contains(v) {
            original.push(v);
            in_a.push(true);
        } else if b_set.contains(v) {
            original.push(v);
            in_a.push(false);
        }
    }
    let k = original.len();
    let mut graph = Graph::empty(k);
    for i in 0..k {
        for j in i + 1..k {
            let e = g.has_edge(original[i], original[j]);
            if (in_a[i] == in_a[j]) == e {
                graph.add_edge(i, j);
            }
        }
    }
    let part_a = (0..k).filter(|&i| in_a[i]).collect();
    let part_b = (0..k).filter(|&i| !in_a[i]).collect();
    Ok(BipartitionedGraph { graph, part_a, part_b, original })
}

/// `p = n^{-alpha}`.
pub fn p_from_alpha(n: usize, alpha: f64) -> f64 {
    (n as f64).powf(-alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_extremes() {
        let g = sample_gnp(5, 0.0, RngSeed(1)).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = sample_gnp(5, 1.0, RngSeed(1)).unwrap();
        assert_eq!(g, Graph::complete(5));
    }

    #[test]
    fn gnp_rejects_bad_parameters() {
        assert!(sample_gnp(0, 0.5, RngSeed(0)).is_err());
        assert!(sample_gnp(5, 1.5, RngSeed(0)).is_err());
        assert!(sample_gnp(5, -0.1, RngSeed(0)).is_err());
        assert!(sample_gnp(5, f64::NAN, RngSeed(0)).is_err());
    }

    #[test]
    fn gnp_is_deterministic() {
        let a = sample_gnp(40, 0.3, RngSeed(99)).unwrap();
        let b = sample_gnp(40, 0.3, RngSeed(99)).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = sample_gnp(40, 0.3, RngSeed(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn two_param_extremes() {
        let r = sample_two_param(10, 1.0, 1.0, RngSeed(3)).unwrap();
        assert_eq!(r.graph, Graph::complete(10));
        assert_eq!(r.original, (0..10).collect::<Vec<_>>());
        let r = sample_two_param(10, 0.0, 0.5, RngSeed(3)).unwrap();
        assert_eq!(r.graph.n(), 0);
    }

    #[test]
    fn h_extremes_and_errors() {
        let h = sample_h(HParams { n: 6, p_a: 1.0, p_b: 0.0, pe_a: 1.0, pe_b: 0.3, pe_ab: 0.3 }, RngSeed(5)).unwrap();
        assert_eq!(h.graph, Graph::complete(6));
        assert!(h.part_b.is_empty());
        let err = sample_h(HParams { n: 6, p_a: 0.5, p_b: 0.6, pe_a: 0.5, pe_b: 0.5, pe_ab: 0.5 }, RngSeed(5));
        assert!(matches!(err, Err(GraphError::Parameter(_))));
    }

    #[test]
    fn h_sure_crossing_edges() {
        for s in 0..50 {
            let h = sample_h(HParams { n: 400, p_a: 0.5, p_b: 0.5, pe_a: 0.0, pe_b: 0.0, pe_ab: 1.0 }, RngSeed(s)).unwrap();
            assert_eq!(h.part_a.len() + h.part_b.len(), 400);
            assert_eq!(h.crossing_edges(), h.part_a.len() * h.part_b.len());
            assert_eq!(h.graph.edge_count(), h.crossing_edges());
        }
    }

    #[test]
    fn complement_basics() {
        assert_eq!(complement(&Graph::complete(5)).edge_count(), 0);
        let g = sample_gnp(12, 0.4, RngSeed(7)).unwrap();
        assert_eq!(complement(&complement(&g)), g);
        let mut c5 = Graph::empty(6);
        for i in 0..5 {
            c5.add_edge(i, (i + 1) % 5);
        }
        assert_eq!(complement(&c5).edge_count(), 10);
    }

    #[test]
    fn common_neighbors_small_cases() {
        let h = common_neighbor_graph(&Graph::complete(4), &[0], &[1]).unwrap();
        assert!(h.part_a.is_empty() && h.part_b.is_empty());
        let h = common_neighbor_graph(&Graph::empty(4), &[0], &[1]).unwrap();
        assert!(h.part_a.is_empty() && h.part_b.is_empty());
        assert!(common_neighbor_graph(&Graph::empty(4), &[0], &[0]).is_err());
        assert!(common_neighbor_graph(&Graph::empty(4), &[], &[]).is_err());
    }

    #[test]
    fn common_neighbors_path() {
        // 0 - 1 - 2 - 3 - 4, plus = {1}: A = N(1) \ (minus ∪ N(minus))
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let h = common_neighbor_graph(&g, &[1], &[4]).unwrap();
        let a: Vec<_> = h.part_a.iter().map(|&i| h.original[i]).collect();
        let b: Vec<_> = h.part_b.iter().map(|&i| h.original[i]).collect();
        assert_eq!(a, vec![0, 2]);
        // B = N(4) \ ({1} ∪ N(1)) = {3}
        assert_eq!(b, vec![3]);
        // 0 and 2 are not adjacent in g; 0-3 is a non-edge (crossing edge), 2-3 is an edge (no crossing edge)
        let idx = |v: usize| h.original.iter().position(|&x| x == v).unwrap();
        assert!(!h.graph.has_edge(idx(0), idx(2)));
        assert!(h.graph.has_edge(idx(0), idx(3)));
        assert!(!h.graph.has_edge(idx(2), idx(3)));
    }

    #[test]
    fn text_round_trip_and_rejections() {
        let g = sample_gnp(15, 0.3, RngSeed(11)).unwrap();
        assert_eq!(Graph::from_text(&g.to_text()).unwrap(), g);
        assert!(Graph::from_text("3 2\n0 1\n0 1\n").is_err());
        assert!(Graph::from_text("3 1\n0 3\n").is_err());
        assert!(Graph::from_text("3 2\n0 1\n").is_err());
    }

    #[test]
    fn vertex_set_retain_above() {
        let mut s = VertexSet::full(130);
        s.retain_above(63);
        assert_eq!(s.iter().next(), Some(64));
        assert_eq!(s.len(), 66);
        s.retain_above(129);
        assert!(s.is_empty());
    }
}
