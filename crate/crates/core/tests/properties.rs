use std::collections::BTreeSet;

use num_rational::BigRational;
use proptest::prelude::*;

use zlab::collapse::{collapse_greedy, verify_trace};
use zlab::complex::{
    check_free_involution, flag_complex, quotient_by_free_involution, separated_deleted_join, z_complex, Complex,
    Labels,
};
use zlab::experiment::{summarize, wilson_interval, Experiment, TrialRecord, Z95};
use zlab::graphs::{Graph, RngSeed};
use zlab::homology::{betti_profile, betti_q, homology_z};
use zlab::radon::{nonadjacent_clique_pairs, radon_witness, Embedding};
use zlab::spectral::spectral_report;

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = Graph::empty(n);
            let mut it = bits.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if it.next().unwrap() {
                        g.add_edge(u, v);
                    }
                }
            }
            g
        })
    })
}

fn complex() -> impl Strategy<Value = Complex> {
    (2usize..=8).prop_flat_map(|n| {
        let face = proptest::collection::btree_set(0..n, 1..=n.min(5));
        (proptest::collection::vec(face, 1..6), 1..n).prop_map(move |(gens, max_dim)| {
            Complex::from_faces(n, max_dim, gens.into_iter().map(|f| f.into_iter().collect()), Labels::Plain).unwrap()
        })
    })
}

/// Direct definition: vertex sets splitting into two separated cliques.
fn z_by_definition(g: &Graph) -> BTreeSet<Vec<usize>> {
    let n = g.n();
    let mut out = BTreeSet::new();
    for set in 1u32..1 << n {
        let vs: Vec<usize> = (0..n).filter(|&v| set >> v & 1 == 1).collect();
        let splits = (0u32..1 << vs.len()).any(|mask| {
            let a: Vec<usize> = vs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
            let b: Vec<usize> = vs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 0).map(|(_, &v)| v).collect();
            g.is_clique(&a) && g.is_clique(&b) && a.iter().all(|&x| b.iter().all(|&y| !g.has_edge(x, y)))
        });
        if splits {
            out.insert(vs);
        }
    }
    out
}

/// Brute-force pair list: disjoint cliques, no crossing edge, sizes <= max.
fn pairs_by_definition(g: &Graph, max: usize) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let n = g.n();
    let cliques: Vec<Vec<usize>> = (1u32..1 << n)
        .map(|s| (0..n).filter(|&v| s >> v & 1 == 1).collect::<Vec<_>>())
        .filter(|c| c.len() <= max && g.is_clique(c))
        .collect();
    let mut out = BTreeSet::new();
    for a in &cliques {
        for b in &cliques {
            if a < b && a.iter().all(|x| !b.contains(x)) && a.iter().all(|&x| b.iter().all(|&y| !g.has_edge(x, y))) {
                out.insert((a.clone(), b.clone()));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn z_matches_its_definition(g in graph(7)) {
        let z = z_complex(&g, g.n() - 1);
        let faces: BTreeSet<Vec<usize>> = z.iter().map(|f| f.vertices().to_vec()).collect();
        prop_assert_eq!(faces, z_by_definition(&g));
    }

    #[test]
    fn join_is_a_double_cover_of_z(g in graph(8)) {
        let top = g.n().min(5);
        let (join, inv) = separated_deleted_join(&g, top);
        let z = z_complex(&g, top);
        prop_assert!(check_free_involution(&join, &inv).is_ok());
        prop_assert!(quotient_by_free_involution(&join, &inv).unwrap().same_faces(&z));
        for k in 0..=top {
            prop_assert_eq!(join.count(k), 2 * z.count(k));
        }
    }

    #[test]
    fn flag_faces_are_cliques(g in graph(8)) {
        let c = flag_complex(&g, g.n() - 1);
        prop_assert!(c.is_closed());
        prop_assert!(c.iter().all(|f| g.is_clique(f.vertices())));
        prop_assert_eq!(c.count(1), g.edge_count());
    }

    #[test]
    fn rational_and_integral_betti_agree(c in complex()) {
        for k in 0..c.max_dim() {
            prop_assert_eq!(betti_q(&c, k).unwrap(), homology_z(&c, k).unwrap().betti);
        }
        prop_assert!(betti_profile(&c, c.max_dim() - 1).unwrap().euler_holds);
    }

    #[test]
    fn collapse_preserves_homology_and_replays(c in complex(), seed in any::<u64>()) {
        let (out, trace) = collapse_greedy(&c, c.max_dim(), RngSeed(seed));
        prop_assert!(verify_trace(&c, &trace, &out).is_ok());
        let top = c.max_dim() - 1;
        let before = betti_profile(&c, top).unwrap();
        let after = betti_profile(&out, top).unwrap();
        for k in 0..=top {
            prop_assert_eq!(&before.groups[k], &after.groups[k]);
        }
    }

    #[test]
    fn text_formats_round_trip(g in graph(9), c in complex()) {
        prop_assert_eq!(Graph::from_text(&g.to_text()).unwrap(), g.clone());
        prop_assert!(Complex::from_text(&c.to_text()).unwrap().same_faces(&c));
        let emb = Embedding::random(g.n(), 2, 97, RngSeed(g.edge_count() as u64)).unwrap();
        prop_assert_eq!(Embedding::from_text(&emb.to_text()).unwrap(), emb);
    }

    #[test]
    fn laplacian_spectrum_is_in_range(g in graph(12)) {
        if let Ok(r) = spectral_report(&g, 1e-9) {
            let m = r.eigenvalues.len();
            prop_assert_eq!(m + r.isolated_dropped, g.n());
            prop_assert!(r.eigenvalues.iter().all(|&x| (-1e-9..=2.0 + 1e-9).contains(&x)));
            prop_assert!((r.eigenvalues.iter().sum::<f64>() - m as f64).abs() <= 1e-9 * g.n() as f64);
            prop_assert_eq!(r.kernel_dim, Graph::induced(&g, &(0..g.n()).filter(|&v| g.degree(v) > 0).collect::<Vec<_>>()).component_count());
        }
    }

    #[test]
    fn pair_stream_matches_enumeration(g in graph(7), max in 1usize..=3) {
        let listed: Vec<(Vec<usize>, Vec<usize>)> = nonadjacent_clique_pairs(&g, max).collect();
        let set: BTreeSet<_> = listed.iter().cloned().collect();
        prop_assert_eq!(set.len(), listed.len());
        prop_assert_eq!(set, pairs_by_definition(&g, max));
        let keys: Vec<_> = listed.iter().map(|(a, b)| (a.len() + b.len(), a.clone(), b.clone())).collect();
        prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn radon_on_the_line_matches_interval_overlap(g in graph(8), seed in any::<u64>()) {
        let emb = Embedding::random(g.n(), 1, 50, RngSeed(seed)).unwrap();
        let x = |v: usize| emb.point(v)[0].clone();
        let span = |s: &[usize]| -> (BigRational, BigRational) {
            (s.iter().map(|&v| x(v)).min().unwrap(), s.iter().map(|&v| x(v)).max().unwrap())
        };
        let exists = pairs_by_definition(&g, 2).iter().any(|(a, b)| {
            let ((a0, a1), (b0, b1)) = (span(a), span(b));
            a0 <= b1 && b0 <= a1
        });
        let w = radon_witness(&g, &emb, 2).unwrap();
        prop_assert_eq!(w.is_some(), exists);
        if let Some(w) = w {
            prop_assert!(w.verify(&g, &emb).is_ok());
        }
    }

    #[test]
    fn wilson_interval_contains_estimate(k in 0usize..200, extra in 0usize..200) {
        let n = k + extra;
        let (lo, hi) = wilson_interval(k, n, Z95);
        prop_assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
        if n > 0 {
            let p = k as f64 / n as f64;
            prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        }
    }

    #[test]
    fn summary_ignores_record_order(flags in proptest::collection::vec(any::<bool>(), 0..30), rot in 0usize..30) {
        let records: Vec<TrialRecord> = flags.iter().enumerate().map(|(i, &ok)| TrialRecord {
            experiment: Experiment::DoubleCover,
            n: 5 + i % 3,
            seed: i as u64,
            p: Some(0.5),
            measured: [("x".to_string(), serde_json::json!(i as f64 * 0.5))].into_iter().collect(),
            pass: [("ok".to_string(), ok)].into_iter().collect(),
            aborted: None,
            wall_ms: 0,
        }).collect();
        let mut rotated = records.clone();
        if !rotated.is_empty() {
            let r = rot % rotated.len();
            rotated.rotate_left(r);
        }
        prop_assert_eq!(summarize(&records).unwrap(), summarize(&rotated).unwrap());
    }
}
