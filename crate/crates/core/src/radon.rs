//! Exact search for pairs of non-adjacent cliques whose images under a vertex
//! embedding have intersecting convex hulls.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::complex::flag_complex;
use crate::graphs::{Graph, RngSeed};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RadonError {
    #[error("point sets must be nonempty")]
    EmptyPointSet,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding has {points} points but the graph has {vertices} vertices")]
    Coverage { points: usize, vertices: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, RadonError>;

pub type Point = Vec<BigRational>;

/// Exact rational coordinates for each vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    dim: usize,
    points: Vec<Point>,
}

impl Embedding {
    pub fn new(dim: usize, points: Vec<Point>) -> Result<Embedding> {
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(RadonError::DimensionMismatch(dim, p.len()));
        }
        Ok(Embedding { dim, points })
    }

    /// Coordinates `k / denom` with `k` uniform in `0..=denom`.
    pub fn random(n: usize, dim: usize, denom: u64, seed: RngSeed) -> Result<Embedding> {
        if denom == 0 {
            return Err(RadonError::Parameter("denominator must be positive".into()));
        }
        let mut rng = seed.rng();
        let d = BigInt::from(denom);
        let points = (0..n)
            .map(|_| (0..dim).map(|_| BigRational::new(BigInt::from(rng.gen_range(0..=denom)), d.clone())).collect())
            .collect();
        Ok(Embedding { dim, points })
    }

    /// Every vertex at the origin.
    pub fn constant(n: usize, dim: usize) -> Embedding {
        Embedding { dim, points: vec![vec![BigRational::zero(); dim]; n] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, v: usize) -> &Point {
        &self.points[v]
    }

    /// `n d` header, then one line of `d` rationals `p/q` per vertex.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.points.len(), self.dim);
        for p in &self.points {
            let line: Vec<String> = p.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Embedding> {
        let perr = |line: usize, msg: String| RadonError::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| perr(hl, format!("`{t}`: {e}"))))
            .collect::<Result<_>>()?;
        let [n, dim] = head[..] else {
            return Err(perr(hl, "header must be `n d`".into()));
        };
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, format!("expected {n} points")))?;
            let p: Point = l
                .split_whitespace()
                .map(|t| t.parse::<BigRational>().map_err(|e| perr(ln, format!("`{t}`: {e}"))))
                .collect::<Result<_>>()?;
            if p.len() != dim {
                return Err(perr(ln, format!("expected {dim} coordinates")));
            }
            points.push(p);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(perr(ln, "trailing content".into()));
        }
        Ok(Embedding { dim, points })
    }
}

/// Unordered pairs `(A, B)` of disjoint non-adjacent cliques with `|A|, |B| <= max_size`,
/// in increasing order of `(|A| + |B|, A, B)` with `A < B` lexicographically.
pub struct NonadjacentPairs<'g> {
    g: &'g Graph,
    max_size: usize,
    cliques: Vec<Vec<Vec<usize>>>,
    total: usize,
    batch: VecDeque<(Vec<usize>, Vec<usize>)>,
}

impl<'g> NonadjacentPairs<'g> {
    fn next_batch(&mut self) -> Option<Vec<(Vec<usize>, Vec<usize>)>> {
        while self.total < 2 * self.max_size {
            self.total += 1;
            let s = self.total;
            let mut batch = Vec::new();
            for a in 1..s {
                let b = s - a;
                if a > self.max_size || b > self.max_size || a > b {
                    continue;
                }
                for ca in &self.cliques[a - 1] {
                    for cb in &self.cliques[b - 1] {
                        if a == b && ca >= cb {
                            continue;
                        }
                        if ca.iter().all(|x| !cb.contains(x)) && self.g.separated(ca, cb) {
                            let pair = if ca < cb { (ca.clone(), cb.clone()) } else { (cb.clone(), ca.clone()) };
                            batch.push(pair);
                        }
                    }
                }
            }
            if !batch.is_empty() {
                batch.sort();
                return Some(batch);
            }
        }
        None
    }
}

impl Iterator for NonadjacentPairs<'_> {
    type Item = (Vec<usize>, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.batch.is_empty() {
            self.batch = self.next_batch()?.into();
        }
        self.batch.pop_front()
    }
}

pub fn nonadjacent_clique_pairs(g: &Graph, max_size: usize) -> NonadjacentPairs<'_> {
    let cliques: Vec<Vec<Vec<usize>>> = if max_size == 0 {
        Vec::new()
    } else {
        let c = flag_complex(g, max_size - 1);
        (0..max_size).map(|k| c.faces(k).iter().map(|f| f.vertices().to_vec()).collect()).collect()
    };
    NonadjacentPairs { g, max_size, cliques, total: 1, batch: VecDeque::new() }
}

/// A common point of two hulls with the convex weights that produce it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullIntersection {
    pub point: Point,
    pub weights_p: Vec<BigRational>,
    pub weights_q: Vec<BigRational>,
}

/// Decides whether `conv(P)` meets `conv(Q)` by an exact phase-1 simplex with Bland's rule.
pub fn hulls_intersect(p: &[Point], q: &[Point]) -> Result<Option<HullIntersection>> {
    if p.is_empty() || q.is_empty() {
        return Err(RadonError::EmptyPointSet);
    }
    let dim = p[0].len();
    if let Some(x) = p.iter().chain(q).find(|x| x.len() != dim) {
        return Err(RadonError::DimensionMismatch(dim, x.len()));
    }
    let (np, nq) = (p.len(), q.len());
    let nvars = np + nq;
    let rows = dim + 2;
    // Σλ p - Σμ q = 0 (dim rows), Σλ = 1, Σμ = 1; one artificial per row
    let mut a = vec![vec![BigRational::zero(); nvars + rows + 1]; rows];
    for r in 0..dim {
        for (j, x) in p.iter().enumerate() {
            a[r][j] = x[r].clone();
        }
        for (j, x) in q.iter().enumerate() {
            a[r][np + j] = -x[r].clone();
        }
    }
    for j in 0..np {
        a[dim][j] = BigRational::one();
    }
    for j in 0..nq {
        a[dim + 1][np + j] = BigRational::one();
    }
    a[dim][nvars + rows] = BigRational::one();
    a[dim + 1][nvars + rows] = BigRational::one();
    for (r, row) in a.iter_mut().enumerate() {
        // rhs is 0 or 1, already nonnegative
        row[nvars + r] = BigRational::one();
    }
    let rhs = nvars + rows;
    let mut basis: Vec<usize> = (nvars..nvars + rows).collect();
    // reduced costs of the phase-1 objective (sum of artificials)
    let mut cost: Vec<BigRational> = (0..=rhs)
        .map(|j| if (nvars..nvars + rows).contains(&j) { BigRational::zero() } else { -a.iter().map(|row| row[j].clone()).sum::<BigRational>() })
        .collect();
    loop {
        let Some(enter) = (0..rhs).find(|&j| cost[j].is_negative()) else { break };
        let mut leave: Option<(usize, BigRational)> = None;
        for (r, row) in a.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[rhs] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let (pr, _) = leave.expect("phase-1 objective is bounded below");
        let piv = a[pr][enter].clone();
        for x in a[pr].iter_mut() {
            *x /= &piv;
        }
        let prow = a[pr].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != pr && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
        let f = cost[enter].clone();
        for (x, y) in cost.iter_mut().zip(&prow) {
            *x -= &f * y;
        }
        basis[pr] = enter;
    }
    // optimum of Σ artificials is -cost[rhs]
    if !cost[rhs].is_zero() {
        return Ok(None);
    }
    let mut x = vec![BigRational::zero(); nvars];
    for (r, &b) in basis.iter().enumerate() {
        if b < nvars {
            x[b] = a[r][rhs].clone();
        }
    }
    let weights_q = x.split_off(np);
    let weights_p = x;
    let point = combination(p, &weights_p);
    Ok(Some(HullIntersection { point, weights_p, weights_q }))
}

fn combination(points: &[Point], weights: &[BigRational]) -> Point {
    let dim = points[0].len();
    (0..dim).map(|r| points.iter().zip(weights).map(|(x, w)| &x[r] * w).sum()).collect()
}

fn is_convex(weights: &[BigRational]) -> bool {
    weights.iter().all(|w| !w.is_negative()) && weights.iter().sum::<BigRational>().is_one()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadonWitness {
    pub clique_a: Vec<usize>,
    pub clique_b: Vec<usize>,
    pub common_point: Point,
    pub weights_a: Vec<BigRational>,
    pub weights_b: Vec<BigRational>,
}

impl RadonWitness {
    /// Re-checks every certificate condition in exact arithmetic.
    pub fn verify(&self, g: &Graph, emb: &Embedding) -> std::result::Result<(), String> {
        let (a, b) = (&self.clique_a, &self.clique_b);
        if a.is_empty() || b.is_empty() {
            return Err("empty clique".into());
        }
        if a.iter().chain(b).any(|&v| v >= g.n() || v >= emb.len()) {
            return Err("vertex out of range".into());
        }
        if !g.is_clique(a) || !g.is_clique(b) {
            return Err("not a clique".into());
        }
        if a.iter().any(|v| b.contains(v)) {
            return Err("cliques intersect".into());
        }
        if !g.separated(a, b) {
            return Err("edge between the cliques".into());
        }
        if self.weights_a.len() != a.len() || self.weights_b.len() != b.len() {
            return Err("weight count mismatch".into());
        }
        if !is_convex(&self.weights_a) || !is_convex(&self.weights_b) {
            return Err("weights are not convex".into());
        }
        let pa: Vec<Point> = a.iter().map(|&v| emb.point(v).clone()).collect();
        let pb: Vec<Point> = b.iter().map(|&v| emb.point(v).clone()).collect();
        let ca = combination(&pa, &self.weights_a);
        if ca != combination(&pb, &self.weights_b) || ca != self.common_point {
            return Err("combinations differ".into());
        }
        Ok(())
    }

    pub fn to_record(&self) -> serde_json::Value {
        let s = |v: &[BigRational]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        serde_json::json!({
            "clique_a": self.clique_a,
            "clique_b": self.clique_b,
            "common_point": s(&self.common_point),
            "weights_a": s(&self.weights_a),
            "weights_b": s(&self.weights_b),
        })
    }
}

/// First witness in stream order (cliques of size at most `max_clique_size`),
/// or `None` after exhausting the stream. Each total-size batch is searched in
/// parallel, keeping the earliest hit so the answer is schedule-independent.
pub fn radon_witness(g: &Graph, emb: &Embedding, max_clique_size: usize) -> Result<Option<RadonWitness>> {
    if emb.len() != g.n() {
        return Err(RadonError::Coverage { points: emb.len(), vertices: g.n() });
    }
    let mut stream = nonadjacent_clique_pairs(g, max_clique_size);
    while let Some(batch) = stream.next_batch() {
        let hit = batch.par_iter().map(|(a, b)| witness_for(emb, a, b)).find_map_first(|r| r.transpose());
        if let Some(w) = hit.transpose()? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn witness_for(emb: &Embedding, a: &[usize], b: &[usize]) -> Result<Option<RadonWitness>> {
    let pa: Vec<Point> = a.iter().map(|&v| emb.point(v).clone()).collect();
    let pb: Vec<Point> = b.iter().map(|&v| emb.point(v).clone()).collect();
    Ok(hulls_intersect(&pa, &pb)?.map(|h| RadonWitness {
        clique_a: a.to_vec(),
        clique_b: b.to_vec(),
        common_point: h.point,
        weights_a: h.weights_p,
        weights_b: h.weights_q,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::sample_gnp;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn pt(xs: &[i64]) -> Point {
        xs.iter().map(|&x| r(x, 1)).collect()
    }

    #[test]
    fn pair_stream_small_cases() {
        assert_eq!(nonadjacent_clique_pairs(&Graph::complete(4), 4).count(), 0);
        let pairs: Vec<_> = nonadjacent_clique_pairs(&Graph::empty(3), 1).collect();
        assert_eq!(pairs, vec![(vec![0], vec![1]), (vec![0], vec![2]), (vec![1], vec![2])]);
    }

    #[test]
    fn pair_stream_order_is_total_size_then_lex() {
        let g = sample_gnp(9, 0.4, RngSeed(3)).unwrap();
        let pairs: Vec<_> = nonadjacent_clique_pairs(&g, 3).collect();
        let key = |p: &(Vec<usize>, Vec<usize>)| (p.0.len() + p.1.len(), p.0.clone(), p.1.clone());
        assert!(pairs.windows(2).all(|w| key(&w[0]) < key(&w[1])));
    }

    #[test]
    fn hull_examples() {
        let hit = hulls_intersect(&[pt(&[0])], &[pt(&[0])]).unwrap().unwrap();
        assert_eq!(hit.point, pt(&[0]));
        assert!(hulls_intersect(&[pt(&[0])], &[pt(&[1])]).unwrap().is_none());
        let hit = hulls_intersect(&[pt(&[0, 0]), pt(&[2, 0])], &[pt(&[1, -1]), pt(&[1, 1])]).unwrap().unwrap();
        assert_eq!(hit.point, pt(&[1, 0]));
        assert_eq!(hit.weights_p, vec![r(1, 2), r(1, 2)]);
        assert!(hulls_intersect(&[pt(&[0])], &[pt(&[0, 1])]).is_err());
        assert!(hulls_intersect(&[], &[pt(&[0])]).is_err());
    }

    #[test]
    fn hull_interval_oracle() {
        let mut rng = RngSeed(17).rng();
        for _ in 0..300 {
            let np = rng.gen_range(1..4);
            let nq = rng.gen_range(1..4);
            let p: Vec<Point> = (0..np).map(|_| vec![r(rng.gen_range(-6..7), rng.gen_range(1..4))]).collect();
            let q: Vec<Point> = (0..nq).map(|_| vec![r(rng.gen_range(-6..7), rng.gen_range(1..4))]).collect();
            let (pl, ph) = (p.iter().map(|x| &x[0]).min().unwrap(), p.iter().map(|x| &x[0]).max().unwrap());
            let (ql, qh) = (q.iter().map(|x| &x[0]).min().unwrap(), q.iter().map(|x| &x[0]).max().unwrap());
            let overlap = pl <= qh && ql <= ph;
            let hit = hulls_intersect(&p, &q).unwrap();
            assert_eq!(hit.is_some(), overlap);
            if let Some(h) = hit {
                assert!(is_convex(&h.weights_p) && is_convex(&h.weights_q));
                assert_eq!(combination(&p, &h.weights_p), combination(&q, &h.weights_q));
            }
        }
    }

    #[test]
    fn witness_cases() {
        let g = Graph::cycle(5);
        let w = radon_witness(&g, &Embedding::constant(5, 2), 2).unwrap().unwrap();
        assert_eq!((w.clique_a.clone(), w.clique_b.clone()), (vec![0], vec![2]));
        w.verify(&g, &Embedding::constant(5, 2)).unwrap();

        let k = Graph::complete(6);
        let emb = Embedding::random(6, 2, 10_000, RngSeed(1)).unwrap();
        assert!(radon_witness(&k, &emb, 3).unwrap().is_none());
        assert!(radon_witness(&k, &Embedding::constant(5, 2), 3).is_err());
    }

    #[test]
    fn witness_verification_catches_tampering() {
        let g = sample_gnp(20, 0.3, RngSeed(5)).unwrap();
        let emb = Embedding::random(20, 1, 10_000, RngSeed(6)).unwrap();
        let mut w = radon_witness(&g, &emb, 3).unwrap().unwrap();
        w.verify(&g, &emb).unwrap();
        w.weights_a[0] += r(1, 7);
        assert!(w.verify(&g, &emb).is_err());
    }

    #[test]
    fn embedding_text_round_trip() {
        let emb = Embedding::random(7, 3, 100, RngSeed(2)).unwrap();
        assert_eq!(Embedding::from_text(&emb.to_text()).unwrap(), emb);
        assert!(Embedding::from_text("2 1\n1/2\n").is_err());
        assert!(Embedding::from_text("1 2\n1/2\n").is_err());
    }
}
