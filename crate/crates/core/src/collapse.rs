//! Elementary collapses: randomized greedy collapsing with replayable traces,
//! and the sign-by-sign lift of a base collapse pair to the separated deleted join.
//!
//! A face `σ` is free when the faces strictly containing it have a unique
//! maximal element `τ`; the elementary collapse removes every face between
//! `σ` and `τ`.

use std::collections::HashSet;

use indexmap::IndexSet;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{separated_deleted_join_of, Complex, Face, Involution, Labels};
use crate::graphs::RngSeed;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CollapseError {
    #[error("step {index}: {reason}")]
    InvalidStep { index: usize, reason: String },
    #[error("replayed complex differs from the recorded result")]
    ReplayMismatch,
    #[error("({free:?}, {coface:?}) is not an elementary collapse of the base complex: {reason}")]
    NotCollapsePair { free: Vec<usize>, coface: Vec<usize>, reason: String },
    #[error("input is not the separated deleted join of its minus-side base: {0}")]
    NotAJoin(String),
    #[error("lifted step {index} blocked: {face:?} is not free with coface {coface:?}")]
    LiftBlocked { index: usize, face: Vec<usize>, coface: Vec<usize> },
}

pub type Result<T> = std::result::Result<T, CollapseError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseStep {
    pub free: Vec<usize>,
    pub coface: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseTrace {
    pub steps: Vec<CollapseStep>,
    /// Dimension of the residual complex, `None` if it is empty.
    pub final_dim: Option<usize>,
    /// No free face is left but faces of dimension at least `max(max_free_dim, 1)` remain.
    pub stuck: bool,
}

/// Mutable face set with coface queries.
#[derive(Debug, Clone)]
struct Working {
    n: usize,
    max_dim: usize,
    labels: Labels,
    faces: HashSet<Vec<usize>>,
}

impl Working {
    fn new(c: &Complex) -> Working {
        Working {
            n: c.n(),
            max_dim: c.max_dim(),
            labels: c.labels(),
            faces: c.iter().map(|f| f.vertices().to_vec()).collect(),
        }
    }

    fn with_vertex(f: &[usize], w: usize) -> Vec<usize> {
        let mut g = f.to_vec();
        let pos = g.binary_search(&w).unwrap_or_else(|p| p);
        g.insert(pos, w);
        g
    }

    /// `{w : f ∪ {w}}` present.
    fn extensions(&self, f: &[usize]) -> Vec<usize> {
        (0..self.n)
            .filter(|&w| f.binary_search(&w).is_err() && self.faces.contains(&Self::with_vertex(f, w)))
            .collect()
    }

    /// The unique maximal proper coface of a present face, if it has one.
    fn free_coface(&self, f: &[usize]) -> Option<Vec<usize>> {
        if !self.faces.contains(f) {
            return None;
        }
        let ext = self.extensions(f);
        if ext.is_empty() {
            return None;
        }
        let mut top = f.to_vec();
        top.extend(ext);
        top.sort_unstable();
        self.faces.contains(&top).then_some(top)
    }

    /// Removes every face between `free` and `coface`; returns the removed faces.
    fn remove_interval(&mut self, free: &[usize], coface: &[usize]) -> Vec<Vec<usize>> {
        let extra: Vec<usize> = coface.iter().copied().filter(|v| free.binary_search(v).is_err()).collect();
        let mut removed = Vec::with_capacity(1 << extra.len());
        for mask in 0u64..1 << extra.len() {
            let mut f = free.to_vec();
            f.extend(extra.iter().enumerate().filter(|&(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v));
            f.sort_unstable();
            if self.faces.remove(&f) {
                removed.push(f);
            }
        }
        removed
    }

    fn to_complex(&self) -> Complex {
        let mut layers: Vec<Vec<Face>> = vec![Vec::new(); self.max_dim + 1];
        for f in &self.faces {
            layers[f.len() - 1].push(Face::new(f.clone()).expect("stored faces are valid"));
        }
        Complex::from_closed(self.n, self.max_dim, layers, self.labels)
    }
}

/// Every nonempty subset of `f` (in a fixed order).
fn subsets(f: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1u64..1 << f.len()).map(move |mask| f.iter().enumerate().filter(|&(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect())
}

/// Greedy collapsing through free faces of dimension at most `max_free_dim`,
/// choosing uniformly among the current free faces with a seeded generator.
pub fn collapse_greedy(c: &Complex, max_free_dim: usize, seed: RngSeed) -> (Complex, CollapseTrace) {
    let mut w = Working::new(c);
    let mut rng = seed.rng();
    let mut free: IndexSet<Vec<usize>> = IndexSet::new();
    for k in 0..=max_free_dim.min(c.max_dim()) {
        for f in c.faces(k) {
            if w.free_coface(f.vertices()).is_some() {
                free.insert(f.vertices().to_vec());
            }
        }
    }
    let mut steps = Vec::new();
    while !free.is_empty() {
        let i = rng.gen_range(0..free.len());
        let f = free.swap_remove_index(i).expect("index in range");
        let Some(coface) = w.free_coface(&f) else { continue };
        w.remove_interval(&f, &coface);
        for sub in subsets(&coface) {
            if sub.len() > max_free_dim + 1 {
                continue;
            }
            if w.free_coface(&sub).is_some() {
                free.insert(sub);
            } else {
                free.swap_remove(&sub);
            }
        }
        steps.push(CollapseStep { free: f, coface });
    }
    let out = w.to_complex();
    let final_dim = out.dim();
    let stuck = final_dim.is_some_and(|d| d >= max_free_dim.max(1));
    (out, CollapseTrace { steps, final_dim, stuck })
}

/// Re-applies a trace, checking each step is an elementary collapse at its time.
pub fn replay(c: &Complex, trace: &CollapseTrace) -> Result<Complex> {
    let mut w = Working::new(c);
    for (index, step) in trace.steps.iter().enumerate() {
        match w.free_coface(&step.free) {
            Some(top) if top == step.coface => {
                w.remove_interval(&step.free, &step.coface);
            }
            Some(top) => {
                return Err(CollapseError::InvalidStep {
                    index,
                    reason: format!("{:?} has maximal coface {top:?}, not {:?}", step.free, step.coface),
                })
            }
            None => {
                return Err(CollapseError::InvalidStep { index, reason: format!("{:?} is not free", step.free) })
            }
        }
    }
    Ok(w.to_complex())
}

/// Replays and compares with an expected result.
pub fn verify_trace(input: &Complex, trace: &CollapseTrace, output: &Complex) -> Result<()> {
    let replayed = replay(input, trace)?;
    if replayed.same_faces(output) && replayed.dim() == trace.final_dim {
        Ok(())
    } else {
        Err(CollapseError::ReplayMismatch)
    }
}

/// Base complex of a separated deleted join: its minus-only faces, decoded.
pub fn join_base(join: &Complex) -> Complex {
    let gens = join
        .iter()
        .filter(|f| f.vertices().iter().all(|v| v % 2 == 0))
        .map(|f| f.vertices().iter().map(|v| v / 2).collect::<Vec<usize>>());
    Complex::from_faces(join.n() / 2, join.max_dim(), gens, Labels::Plain).expect("decoded faces are valid")
}

/// Checks that `(f, f ∪ {v})` is an elementary collapse pair of `x`: the only
/// face strictly containing `f` is `f ∪ {v}`.
pub fn check_collapse_pair(x: &Complex, f: &Face, v: usize) -> Result<Vec<usize>> {
    let coface = Working::with_vertex(f.vertices(), v);
    let err = |reason: String| CollapseError::NotCollapsePair { free: f.vertices().to_vec(), coface: coface.clone(), reason };
    if f.contains(v) {
        return Err(err("v already lies in f".into()));
    }
    if !x.contains(f.vertices()) || !x.contains(&coface) {
        return Err(err("a face of the pair is missing".into()));
    }
    let w = Working::new(x);
    let ext = w.extensions(f.vertices());
    if ext != [v] {
        return Err(err(format!("f extends by {ext:?}")));
    }
    Ok(coface)
}

/// Base-level reason why the lifted sequence cannot reach the join of the reduced base.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LiftObstruction {
    /// Removing the edge `f` makes its endpoints non-adjacent, so the join of
    /// the reduced base gains faces that no collapse can create.
    EdgeRemoved { edge: Vec<usize> },
    /// `a` is adjacent to `v` but separated from `f`: the face `{a}⁻ ∪ f⁺`
    /// has no coface `{a}⁻ ∪ (f ∪ {v})⁺` to collapse into.
    AdjacentToApex { a: usize },
}

/// The obstructions of a base collapse pair (empty when the lift goes through).
pub fn lift_obstructions(x: &Complex, f: &Face, v: usize) -> Vec<LiftObstruction> {
    let g = x.one_skeleton();
    let mut out = Vec::new();
    if f.len() == 2 {
        out.push(LiftObstruction::EdgeRemoved { edge: f.vertices().to_vec() });
    }
    for a in 0..x.n() {
        if a != v && !f.contains(a) && x.contains(&[a]) && g.has_edge(a, v) && g.separated(&[a], f.vertices()) {
            out.push(LiftObstruction::AdjacentToApex { a });
        }
    }
    out
}

/// Lifts the base collapse `(f, f ∪ {v})` to the separated deleted join
/// `join` (with its sign-swap involution): for every `σ` with `σ⁻ ∪ f⁺` in
/// the join, taken in decreasing size, collapse `σ⁻ ∪ f⁺` into
/// `σ⁻ ∪ (f ∪ {v})⁺`, ending with `f⁺` into `(f ∪ {v})⁺`; then the mirror image.
/// Each step must be an elementary collapse at its time.
pub fn lifted_collapse(join: &Complex, inv: &Involution, f: &Face, v: usize) -> Result<(Complex, CollapseTrace)> {
    if join.labels() != Labels::Signed || !join.n().is_multiple_of(2) || *inv != Involution::sign_swap(join.n() / 2) {
        return Err(CollapseError::NotAJoin("expected signed labels and the sign-swap involution".into()));
    }
    let base = join_base(join);
    let (rebuilt, _) = separated_deleted_join_of(&base, join.max_dim());
    if !rebuilt.same_faces(join) {
        return Err(CollapseError::NotAJoin("faces differ from the join rebuilt from the minus side".into()));
    }
    check_collapse_pair(&base, f, v)?;

    let mut w = Working::new(join);
    let mut steps = Vec::new();
    for plus in [1usize, 0] {
        let other = 1 - plus;
        let f_signed: Vec<usize> = f.vertices().iter().map(|&u| 2 * u + plus).collect();
        let apex = 2 * v + plus;
        // σ ranges over the other-signed parts of faces containing f on this side
        let mut sigmas: Vec<Vec<usize>> = w
            .faces
            .iter()
            .filter(|g| crate::complex::is_sorted_subset(&f_signed, g))
            .filter(|g| g.iter().all(|u| u % 2 == other || f_signed.binary_search(u).is_ok()))
            .map(|g| g.iter().copied().filter(|u| u % 2 == other).collect())
            .collect();
        sigmas.sort_by(|a: &Vec<usize>, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        for sigma in sigmas {
            let mut face: Vec<usize> = sigma.iter().chain(&f_signed).copied().collect();
            face.sort_unstable();
            let coface = Working::with_vertex(&face, apex);
            if w.free_coface(&face).as_ref() != Some(&coface) {
                return Err(CollapseError::LiftBlocked { index: steps.len(), face, coface });
            }
            w.remove_interval(&face, &coface);
            steps.push(CollapseStep { free: face, coface });
        }
    }
    let out = w.to_complex();
    let final_dim = out.dim();
    Ok((out, CollapseTrace { steps, final_dim, stuck: false }))
}

/// `x` with the faces `f` and `f ∪ {v}` removed.
pub fn remove_pair(x: &Complex, f: &Face, v: usize) -> Complex {
    let mut w = Working::new(x);
    w.faces.remove(f.vertices());
    w.faces.remove(&Working::with_vertex(f.vertices(), v));
    w.to_complex()
}

/// All elementary collapse pairs `(f, v)` of `x` with `f ∪ {v}` a face.
pub fn collapse_pairs(x: &Complex) -> Vec<(Face, usize)> {
    let w = Working::new(x);
    let mut out = Vec::new();
    for f in x.iter() {
        if let [v] = w.extensions(f.vertices())[..] {
            out.push((f.clone(), v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{f_vector, flag_complex, separated_deleted_join};
    use crate::graphs::{sample_gnp, Graph};
    use crate::homology::betti_profile;

    fn simplex(m: usize) -> Complex {
        Complex::from_faces(m, m - 1, vec![(0..m).collect()], Labels::Plain).unwrap()
    }

    #[test]
    fn simplex_collapses_to_point() {
        for s in 0..10 {
            let (out, trace) = collapse_greedy(&simplex(5), 0, RngSeed(s));
            assert_eq!(f_vector(&out).counts, vec![1]);
            assert!(!trace.stuck);
            assert_eq!(trace.final_dim, Some(0));
            verify_trace(&simplex(5), &trace, &out).unwrap();
        }
    }

    #[test]
    fn sphere_is_stuck() {
        let s = simplex(4);
        let sphere = Complex::from_faces(4, 3, s.skeleton(2).iter().map(|f| f.vertices().to_vec()), Labels::Plain).unwrap();
        for d in 0..3 {
            let (out, trace) = collapse_greedy(&sphere, d, RngSeed(1));
            assert!(trace.steps.is_empty());
            assert!(trace.stuck);
            assert!(out.same_faces(&sphere));
        }
    }

    #[test]
    fn replay_rejects_tampered_traces() {
        let c = simplex(4);
        let (out, mut trace) = collapse_greedy(&c, 1, RngSeed(3));
        verify_trace(&c, &trace, &out).unwrap();
        trace.final_dim = Some(3);
        assert_eq!(verify_trace(&c, &trace, &out), Err(CollapseError::ReplayMismatch));
        let bogus = CollapseTrace { steps: vec![CollapseStep { free: vec![0, 1], coface: vec![0, 1, 2] }], final_dim: None, stuck: false };
        assert!(matches!(replay(&c, &bogus), Err(CollapseError::InvalidStep { index: 0, .. })));
    }

    #[test]
    fn collapses_preserve_homology() {
        for s in 0..15 {
            let g = sample_gnp(10, 0.5, RngSeed(s)).unwrap();
            let c = flag_complex(&g, 5);
            let (out, trace) = collapse_greedy(&c, 2, RngSeed(s + 100));
            verify_trace(&c, &trace, &out).unwrap();
            let before = betti_profile(&c, 3).unwrap();
            let after = betti_profile(&out, 3).unwrap();
            assert_eq!(before.groups, after.groups);
        }
    }

    #[test]
    fn pair_validation() {
        let tri = simplex(3);
        let edge = Face::new(vec![0, 1]).unwrap();
        assert_eq!(check_collapse_pair(&tri, &edge, 2).unwrap(), vec![0, 1, 2]);
        let vertex = Face::new(vec![0]).unwrap();
        assert!(check_collapse_pair(&tri, &vertex, 1).is_err());
        assert_eq!(collapse_pairs(&tri).len(), 3);
    }

    #[test]
    fn lift_on_edge_with_free_vertex() {
        // X = edge {0,1}, pair ({1}, {0,1}): the lift goes through
        let x = Complex::from_faces(2, 1, vec![vec![0, 1]], Labels::Plain).unwrap();
        let f = Face::new(vec![1]).unwrap();
        assert!(lift_obstructions(&x, &f, 0).is_empty());
        let (join, inv) = separated_deleted_join_of(&x, 3);
        let (out, trace) = lifted_collapse(&join, &inv, &f, 0).unwrap();
        let (want, _) = separated_deleted_join_of(&remove_pair(&x, &f, 0), 3);
        assert!(out.same_faces(&want));
        verify_trace(&join, &trace, &out).unwrap();
    }

    #[test]
    fn lift_blocked_on_path() {
        // path a - v - b with pair ({b}, {v, b}): the join is a hexagon
        let x = Complex::from_faces(3, 1, vec![vec![0, 1], vec![1, 2]], Labels::Plain).unwrap();
        let f = Face::new(vec![2]).unwrap();
        assert_eq!(lift_obstructions(&x, &f, 1), vec![LiftObstruction::AdjacentToApex { a: 0 }]);
        let (join, inv) = separated_deleted_join_of(&x, 3);
        assert_eq!(f_vector(&join).counts, vec![6, 6]);
        assert!(matches!(lifted_collapse(&join, &inv, &f, 1), Err(CollapseError::LiftBlocked { .. })));
    }

    #[test]
    fn lift_rejects_invalid_input() {
        let g = Graph::complete(3);
        let (join, inv) = separated_deleted_join(&g, 3);
        let vertex = Face::new(vec![0]).unwrap();
        assert!(matches!(lifted_collapse(&join, &inv, &vertex, 1), Err(CollapseError::NotCollapsePair { .. })));
        let plain = flag_complex(&g, 2);
        assert!(matches!(lifted_collapse(&plain, &inv, &vertex, 1), Err(CollapseError::NotAJoin(_))));
    }
}
