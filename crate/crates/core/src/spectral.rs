//! Normalized Laplacian spectra, Garland-style link certificates and the
//! bipartite spectral-gap bound with its edge-discrepancy hypothesis.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::complex::{Complex, Face};
use crate::graphs::{BipartitionedGraph, Graph, RngSeed};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("not bipartite between the given parts: {0}")]
    NotBipartite(String),
    #[error("discrepancy needs nonempty U and V")]
    EmptySet,
    #[error("vertex {0} is not in the required part")]
    WrongPart(usize),
    #[error("dimension {d} must lie in 1..={max_dim}")]
    Dimension { d: usize, max_dim: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Spectrum of the normalized Laplacian of a graph with isolated vertices removed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub gap: f64,
    pub connected: bool,
    pub bipartite_top: bool,
    pub isolated_dropped: usize,
    /// Eigenvalues within `tol` of zero, one per connected component.
    pub kernel_dim: usize,
}

impl SpectralReport {
    /// Record with at most 32 extremal eigenvalues plus summary statistics.
    pub fn to_record(&self) -> serde_json::Value {
        let ev = &self.eigenvalues;
        let shown: Vec<f64> = if ev.len() <= 32 {
            ev.clone()
        } else {
            ev[..16].iter().chain(&ev[ev.len() - 16..]).copied().collect()
        };
        let mean = ev.iter().sum::<f64>() / ev.len() as f64;
        serde_json::json!({
            "count": ev.len(),
            "eigenvalues": shown,
            "truncated": ev.len() > 32,
            "gap": self.gap,
            "max": ev.last(),
            "mean": mean,
            "connected": self.connected,
            "bipartite_top": self.bipartite_top,
            "kernel_dim": self.kernel_dim,
            "isolated_dropped": self.isolated_dropped,
        })
    }
}

/// Dense `I - D^{-1/2} A D^{-1/2}` over the non-isolated vertices, and how many were dropped.
pub fn normalized_laplacian(g: &Graph) -> (DMatrix<f64>, usize) {
    let keep: Vec<usize> = (0..g.n()).filter(|&v| g.degree(v) > 0).collect();
    let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let m = keep.len();
    let inv_sqrt: Vec<f64> = keep.iter().map(|&v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
    let mut l = DMatrix::<f64>::identity(m, m);
    for (u, v) in g.edges() {
        let (i, j) = (pos[&u], pos[&v]);
        let w = -inv_sqrt[i] * inv_sqrt[j];
        l[(i, j)] = w;
        l[(j, i)] = w;
    }
    (l, g.n() - m)
}

pub fn spectral_report(g: &Graph, tol: f64) -> Result<SpectralReport> {
    let (l, isolated_dropped) = normalized_laplacian(g);
    if l.nrows() == 0 {
        return Err(SpectralError::EmptyGraph);
    }
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let kernel_dim = eigenvalues.iter().take_while(|&&x| x <= tol).count();
    let top = *eigenvalues.last().expect("nonempty");
    Ok(SpectralReport {
        gap: eigenvalues.get(1).copied().unwrap_or(0.0),
        connected: kernel_dim == 1,
        bipartite_top: (top - 2.0).abs() <= tol,
        isolated_dropped,
        kernel_dim,
        eigenvalues,
    })
}

/// Second-smallest normalized Laplacian eigenvalue (isolated vertices dropped).
pub fn spectral_gap(g: &Graph) -> Result<f64> {
    Ok(spectral_report(g, 1e-9)?.gap)
}

/// Connectivity and gap of the 1-skeleton of one link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkReport {
    /// `None` for the empty face (used when the target dimension is 1).
    pub face: Option<Vec<usize>>,
    pub vertices: usize,
    pub connected: bool,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GarlandCertificate {
    pub target_dim: usize,
    pub pure: bool,
    /// A face of dimension below `target_dim` with no coface one dimension up.
    pub purity_witness: Option<Vec<usize>>,
    pub threshold: f64,
    pub links: Vec<LinkReport>,
    pub verdict: bool,
}

impl GarlandCertificate {
    pub fn min_gap(&self) -> Option<f64> {
        self.links.iter().map(|l| l.gap).min_by(f64::total_cmp)
    }
}

/// Checks purity up to dimension `d` and that the 1-skeleton of the link of
/// every `(d-2)`-face is connected with normalized gap above `1 - 1/d` (by at
/// least `tol`). A true verdict certifies `H_{d-1}(c; Q) = 0`.
pub fn garland_check(c: &Complex, d: usize, tol: f64) -> Result<GarlandCertificate> {
    if d == 0 || d > c.max_dim() {
        return Err(SpectralError::Dimension { d, max_dim: c.max_dim() });
    }
    let threshold = 1.0 - 1.0 / d as f64;
    let purity_witness = (0..d).find_map(|j| {
        let mut covered = vec![false; c.count(j)];
        for f in c.faces(j + 1) {
            for drop in 0..f.len() {
                let sub = without(f.vertices(), drop);
                covered[c.index_of(&sub).expect("closed")] = true;
            }
        }
        covered.iter().position(|&x| !x).map(|i| c.faces(j)[i].vertices().to_vec())
    });
    let pure = purity_witness.is_none();

    // (d-2)-face -> (link vertices, link edges); key is empty for d = 1
    let mut links: HashMap<Vec<usize>, (Vec<usize>, Vec<(usize, usize)>)> = HashMap::new();
    if d >= 2 {
        for f in c.faces(d - 2) {
            links.entry(f.vertices().to_vec()).or_default();
        }
    } else {
        links.entry(Vec::new()).or_default();
    }
    for f in c.faces(d - 1) {
        for drop in 0..f.len() {
            let key = without(f.vertices(), drop);
            links.get_mut(&key).expect("closed").0.push(f.vertices()[drop]);
        }
    }
    for f in c.faces(d) {
        let vs = f.vertices();
        for a in 0..vs.len() {
            for b in a + 1..vs.len() {
                let key: Vec<usize> = vs.iter().enumerate().filter(|&(i, _)| i != a && i != b).map(|(_, &v)| v).collect();
                links.get_mut(&key).expect("closed").1.push((vs[a], vs[b]));
            }
        }
    }
    let mut entries: Vec<(Vec<usize>, (Vec<usize>, Vec<(usize, usize)>))> = links.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let reports: Vec<LinkReport> = entries
        .into_par_iter()
        .map(|(face, (mut verts, edges))| {
            verts.sort_unstable();
            let pos: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let g = Graph::from_edges(verts.len(), edges.iter().map(|(u, v)| (pos[u], pos[v])))
                .expect("link edges join link vertices");
            let (connected, gap) = match spectral_report(&g, tol) {
                Ok(r) => (r.connected && r.isolated_dropped == 0, r.gap),
                Err(_) => (false, 0.0),
            };
            LinkReport { face: (d >= 2).then_some(face), vertices: verts.len(), connected, gap }
        })
        .collect();
    let verdict = pure && !reports.is_empty() && reports.iter().all(|r| r.connected && r.gap > threshold + tol);
    Ok(GarlandCertificate { target_dim: d, pure, purity_witness, threshold, links: reports, verdict })
}

fn without(vs: &[usize], drop: usize) -> Vec<usize> {
    vs.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &v)| v).collect()
}

/// Degree statistics entering the bipartite bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipartiteStats {
    pub max_degree: usize,
    pub min_degree: usize,
    pub min_degree_a: usize,
    pub min_degree_b: usize,
    /// Average degree over part A.
    pub avg_a: f64,
    /// Average degree over part B.
    pub avg_b: f64,
    /// Population standard deviations of the degrees in each part.
    pub std_a: f64,
    pub std_b: f64,
}

pub fn bipartite_stats(bg: &BipartitionedGraph) -> Result<BipartiteStats> {
    let g = &bg.graph;
    if bg.part_a.is_empty() || bg.part_b.is_empty() {
        return Err(SpectralError::NotBipartite("a part is empty".into()));
    }
    let (ia, ib) = bg.internal_edges();
    if ia + ib > 0 {
        return Err(SpectralError::NotBipartite(format!("{} edges inside a part", ia + ib)));
    }
    if g.component_count() != 1 {
        return Err(SpectralError::Disconnected);
    }
    let side = |part: &[usize]| {
        let degs: Vec<f64> = part.iter().map(|&v| g.degree(v) as f64).collect();
        let mean = degs.iter().sum::<f64>() / degs.len() as f64;
        let var = degs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / degs.len() as f64;
        let min = part.iter().map(|&v| g.degree(v)).min().unwrap_or(0);
        (mean, var.sqrt(), min)
    };
    let (avg_a, std_a, min_degree_a) = side(&bg.part_a);
    let (avg_b, std_b, min_degree_b) = side(&bg.part_b);
    let degrees = (0..g.n()).map(|v| g.degree(v));
    Ok(BipartiteStats {
        max_degree: degrees.clone().max().unwrap_or(0),
        min_degree: degrees.min().unwrap_or(0),
        min_degree_a,
        min_degree_b,
        avg_a,
        avg_b,
        std_a,
        std_b,
    })
}

/// `1 - (C·ε·ln((Δ + d̄ + c̄)/ε) + C)/δ(G) - 2σ_Aσ_B/(δ(A)δ(B))`, with parts
/// A (average degree `d̄`) and B (average degree `c̄`). The `ε ln(K/ε)` term is
/// taken as 0 at `ε = 0`.
pub fn bipartite_gap_lower_bound(bg: &BipartitionedGraph, eps: f64, c_const: f64) -> Result<f64> {
    if !(eps >= 0.0) || !(c_const >= 0.0) {
        return Err(SpectralError::Parameter("eps and cConst must be nonnegative".into()));
    }
    let s = bipartite_stats(bg)?;
    let k = s.max_degree as f64 + s.avg_a + s.avg_b;
    let log_term = if eps == 0.0 { 0.0 } else { eps * (k / eps).ln() };
    let variance_term = 2.0 * s.std_a * s.std_b / (s.min_degree_a as f64 * s.min_degree_b as f64);
    Ok(1.0 - (c_const * log_term + c_const) / s.min_degree as f64 - variance_term)
}

/// `|e(U,V) - |U||V| c̄/|A|| / sqrt(|U||V|)` for `U ⊆ A`, `V ⊆ B`, `c̄` the average degree over B.
pub fn edge_discrepancy(bg: &BipartitionedGraph, u: &[usize], v: &[usize]) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(SpectralError::EmptySet);
    }
    let in_a = membership(bg.graph.n(), &bg.part_a);
    let in_b = membership(bg.graph.n(), &bg.part_b);
    if let Some(&x) = u.iter().find(|&&x| !in_a.get(x).copied().unwrap_or(false)) {
        return Err(SpectralError::WrongPart(x));
    }
    if let Some(&x) = v.iter().find(|&&x| !in_b.get(x).copied().unwrap_or(false)) {
        return Err(SpectralError::WrongPart(x));
    }
    Ok(discrepancy_unchecked(bg, u, v, avg_degree(&bg.graph, &bg.part_b)))
}

fn membership(n: usize, part: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in part {
        m[v] = true;
    }
    m
}

fn avg_degree(g: &Graph, part: &[usize]) -> f64 {
    part.iter().map(|&v| g.degree(v)).sum::<usize>() as f64 / part.len().max(1) as f64
}

fn discrepancy_unchecked(bg: &BipartitionedGraph, u: &[usize], v: &[usize], c_bar: f64) -> f64 {
    let e = edges_between(&bg.graph, u, v) as f64;
    let (nu, nv) = (u.len() as f64, v.len() as f64);
    (e - nu * nv * c_bar / bg.part_a.len() as f64).abs() / (nu * nv).sqrt()
}

fn edges_between(g: &Graph, u: &[usize], v: &[usize]) -> usize {
    u.iter().map(|&x| v.iter().filter(|&&y| g.has_edge(x, y)).count()).sum()
}

fn random_subset(rng: &mut impl Rng, part: &[usize]) -> Vec<usize> {
    loop {
        let s: Vec<usize> = part.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

/// Running maximum of the edge discrepancy over `trials` random pairs
/// `(U, V)`, each vertex kept with probability 1/2 (empty draws are redrawn).
pub fn discrepancy_probe(bg: &BipartitionedGraph, trials: usize, seed: RngSeed) -> Result<f64> {
    Ok(discrepancy_trace(bg, trials, seed)?.last().copied().unwrap_or(0.0))
}

/// The running maxima after each trial of [`discrepancy_probe`].
pub fn discrepancy_trace(bg: &BipartitionedGraph, trials: usize, seed: RngSeed) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(SpectralError::Parameter("trials must be at least 1".into()));
    }
    if bg.part_a.is_empty() || bg.part_b.is_empty() {
        return Err(SpectralError::EmptySet);
    }
    let c_bar = avg_degree(&bg.graph, &bg.part_b);
    let mut rng = seed.rng();
    let mut best = 0.0f64;
    Ok((0..trials)
        .map(|_| {
            let u = random_subset(&mut rng, &bg.part_a);
            let v = random_subset(&mut rng, &bg.part_b);
            best = best.max(discrepancy_unchecked(bg, &u, &v, c_bar));
            best
        })
        .collect())
}

/// Outcome of sampling small fixed-size blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBlockProbe {
    pub trials: usize,
    pub zero_edge_events: usize,
    pub max_discrepancy: f64,
}

/// Samples `trials` uniform pairs with `|U| = u_size ⊆ A`, `|V| = v_size ⊆ B`
/// and counts pairs spanning no edge.
pub fn small_block_probe(
    bg: &BipartitionedGraph,
    u_size: usize,
    v_size: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<SmallBlockProbe> {
    if u_size == 0 || v_size == 0 || u_size > bg.part_a.len() || v_size > bg.part_b.len() {
        return Err(SpectralError::Parameter(format!(
            "block sizes {u_size}x{v_size} must be positive and fit parts {}x{}",
            bg.part_a.len(),
            bg.part_b.len()
        )));
    }
    let c_bar = avg_degree(&bg.graph, &bg.part_b);
    let mut rng = seed.rng();
    let mut zero_edge_events = 0;
    let mut max_discrepancy = 0.0f64;
    for _ in 0..trials {
        let u: Vec<usize> = sample(&mut rng, bg.part_a.len(), u_size).iter().map(|i| bg.part_a[i]).collect();
        let v: Vec<usize> = sample(&mut rng, bg.part_b.len(), v_size).iter().map(|i| bg.part_b[i]).collect();
        if edges_between(&bg.graph, &u, &v) == 0 {
            zero_edge_events += 1;
        }
        max_discrepancy = max_discrepancy.max(discrepancy_unchecked(bg, &u, &v, c_bar));
    }
    Ok(SmallBlockProbe { trials, zero_edge_events, max_discrepancy })
}

/// Link 1-skeleton of a face as a standalone graph (vertices relabelled in increasing order).
pub fn link_graph(c: &Complex, f: &Face) -> Graph {
    let lk = crate::complex::link(c, f).expect("face in complex");
    let verts: Vec<usize> = lk.faces(0).iter().map(|v| v.vertices()[0]).collect();
    let pos: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    Graph::from_edges(verts.len(), lk.faces(1).iter().map(|e| (pos[&e.vertices()[0]], pos[&e.vertices()[1]])))
        .expect("valid link graph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{flag_complex, Labels};
    use crate::graphs::{sample_gnp, sample_h, HParams};

    #[test]
    fn complete_graph_closed_form() {
        for m in [2, 3, 7, 20] {
            let r = spectral_report(&Graph::complete(m), 1e-9).unwrap();
            let want = m as f64 / (m as f64 - 1.0);
            assert!((r.gap - want).abs() < 1e-9);
            assert!(r.connected);
            assert_eq!(r.bipartite_top, m == 2);
        }
    }

    #[test]
    fn complete_bipartite_closed_form() {
        let r = spectral_report(&Graph::complete_bipartite(3, 5), 1e-9).unwrap();
        assert!((r.gap - 1.0).abs() < 1e-9);
        assert!(r.bipartite_top);
    }

    #[test]
    fn disconnected_and_isolated() {
        let mut g = Graph::empty(7);
        g.add_edge(0, 1);
        g.add_edge(2, 3);
        let r = spectral_report(&g, 1e-9).unwrap();
        assert!(r.gap <= 1e-9 && !r.connected);
        assert_eq!(r.isolated_dropped, 3);
        assert_eq!(r.kernel_dim, 2);
        assert_eq!(spectral_report(&Graph::empty(4), 1e-9), Err(SpectralError::EmptyGraph));
    }

    #[test]
    fn record_truncates_to_32() {
        let r = spectral_report(&Graph::cycle(50), 1e-9).unwrap();
        let rec = r.to_record();
        assert_eq!(rec["eigenvalues"].as_array().unwrap().len(), 32);
        assert_eq!(rec["count"], 50);
    }

    #[test]
    fn garland_on_simplex_boundary_and_impure() {
        let four = Complex::from_faces(5, 4, vec![(0..5).collect()], Labels::Plain).unwrap();
        let sphere = Complex::from_faces(5, 4, four.skeleton(3).iter().map(|f| f.vertices().to_vec()), Labels::Plain).unwrap();
        let cert = garland_check(&sphere, 2, 1e-9).unwrap();
        assert!(cert.pure);
        // vertex links are boundaries of tetrahedra: 1-skeleton K4, gap 4/3
        assert!(cert.links.iter().all(|l| (l.gap - 4.0 / 3.0).abs() < 1e-9));
        assert!(cert.verdict);

        let mut faces = vec![vec![0, 1, 2]];
        faces.push(vec![3, 4]);
        let impure = Complex::from_faces(5, 2, faces, Labels::Plain).unwrap();
        let cert = garland_check(&impure, 2, 1e-9).unwrap();
        assert!(!cert.pure && !cert.verdict);
        assert_eq!(cert.purity_witness, Some(vec![3, 4]));
        assert!(garland_check(&impure, 3, 1e-9).is_err());
        assert!(garland_check(&impure, 0, 1e-9).is_err());
    }

    #[test]
    fn garland_d1_is_connectivity() {
        let c = flag_complex(&Graph::cycle(6), 2);
        let cert = garland_check(&c, 1, 1e-9).unwrap();
        assert!(cert.verdict);
        assert_eq!(cert.links.len(), 1);
        assert_eq!(cert.links[0].face, None);
    }

    #[test]
    fn garland_links_match_link_graph() {
        let g = sample_gnp(14, 0.6, RngSeed(3)).unwrap();
        let c = flag_complex(&g, 2);
        let cert = garland_check(&c, 2, 1e-9).unwrap();
        for lr in &cert.links {
            let f = Face::new(lr.face.clone().unwrap()).unwrap();
            let lg = link_graph(&c, &f);
            assert_eq!(lg.n(), lr.vertices);
            if let Ok(r) = spectral_report(&lg, 1e-9) {
                assert!((r.gap - lr.gap).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bound_on_balanced_complete_bipartite() {
        let a = 12;
        let g = Graph::complete_bipartite(a, a);
        let bg = BipartitionedGraph { graph: g, part_a: (0..a).collect(), part_b: (a..2 * a).collect(), original: (0..2 * a).collect() };
        let (eps, c) = (0.5, 0.3);
        let want = 1.0 - (c * eps * (3.0 * a as f64 / eps).ln() + c) / a as f64;
        assert!((bipartite_gap_lower_bound(&bg, eps, c).unwrap() - want).abs() < 1e-12);
        assert_eq!(bipartite_gap_lower_bound(&bg, 0.0, 0.0).unwrap(), 1.0);
        let u: Vec<usize> = (0..5).collect();
        let v: Vec<usize> = (a..a + 3).collect();
        assert!(edge_discrepancy(&bg, &u, &v).unwrap().abs() < 1e-12);
        assert_eq!(discrepancy_probe(&bg, 50, RngSeed(1)).unwrap(), 0.0);
        assert!(edge_discrepancy(&bg, &[], &v).is_err());
        assert!(edge_discrepancy(&bg, &v, &u).is_err());
    }

    #[test]
    fn bound_rejects_internal_edges() {
        let bg = sample_h(HParams { n: 30, p_a: 0.5, p_b: 0.5, pe_a: 0.5, pe_b: 0.5, pe_ab: 0.9 }, RngSeed(2)).unwrap();
        assert!(matches!(bipartite_gap_lower_bound(&bg, 1.0, 1.0), Err(SpectralError::NotBipartite(_))));
    }

    #[test]
    fn probe_is_running_max() {
        let bg = sample_h(HParams::symmetric_q(80, 0.5, 0.5, 0.6), RngSeed(5)).unwrap();
        let trace = discrepancy_trace(&bg, 200, RngSeed(9)).unwrap();
        assert!(trace.windows(2).all(|w| w[0] <= w[1]));
        let short = discrepancy_probe(&bg, 50, RngSeed(9)).unwrap();
        assert_eq!(short, trace[49]);
    }

    #[test]
    fn small_blocks_find_empty_pairs_in_sparse_graphs() {
        let bg = sample_h(HParams { n: 200, p_a: 0.5, p_b: 0.5, pe_a: 0.0, pe_b: 0.0, pe_ab: 0.02 }, RngSeed(4)).unwrap();
        let probe = small_block_probe(&bg, 2, 2, 500, RngSeed(1)).unwrap();
        assert!(probe.zero_edge_events > 400);
        assert!(small_block_probe(&bg, 0, 2, 5, RngSeed(1)).is_err());
    }
}
