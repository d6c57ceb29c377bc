mod common;

use cyclestore::admit;
use cyclestore::binmat::{self, BinaryVector, CycleMatrix};
use cyclestore::learn;
use cyclestore::spectra;
use cyclestore::topo::{self, Polarity, TopoError};
use proptest::prelude::*;

use common::*;

const TOL: f64 = 1e-7;

#[test]
fn ring_graph_has_one_inhibitory_edge() {
    let j = learn::learn_j(&ring_7x14());
    let g = topo::extract_graph(&j, TOL, false);
    assert_eq!(g.edges.len(), 7);
    for i in 0..6 {
        assert!(g.has_edge(i + 1, i), "{} -> {}", i + 2, i + 1);
    }
    let inhibitory: Vec<(usize, usize)> = g.edges.iter().filter(|e| e.polarity == Polarity::Inhibitory).map(|e| (e.from, e.to)).collect();
    assert_eq!(inhibitory, vec![(0, 6)]);
}

#[test]
fn every_neuron_inhibits_the_last() {
    let j = learn::learn_j(&feedback_5x6());
    let g = topo::extract_graph(&j, TOL, false);
    let mut from: Vec<usize> = g.edges.iter().filter(|e| e.to == 4).map(|e| e.from).collect();
    from.sort_unstable();
    assert_eq!(from, vec![0, 1, 2, 3]);
    assert!(g.edges.iter().filter(|e| e.to == 4).all(|e| e.polarity == Polarity::Inhibitory));
    let with_self = topo::extract_graph(&j, TOL, true);
    assert!(with_self.has_edge(4, 4));
}

#[test]
fn companion_examples() {
    let c = topo::detect_companion(&learn::learn_j(&ring_7x14()), TOL).unwrap();
    assert!(c.is_ring);
    assert!((c.feedback[0] + 1.0).abs() < 1e-9);
    assert_eq!(c.superdiagonal, vec![1; 6]);

    let c = topo::detect_companion(&learn::learn_j(&feedback_5x6()), TOL).unwrap();
    assert!(!c.is_ring);
    assert!(c.feedback.iter().all(|a| (a + 1.0).abs() < 1e-9), "{:?}", c.feedback);

    assert!(topo::detect_companion(&learn::learn_j(&gapped_7x9()), TOL).is_none());
    assert!(topo::detect_companion(&learn::learn_j(&separable_7x8()), TOL).is_none());
}

#[test]
fn gapped_cycle_breaks_the_chain() {
    let j = learn::learn_j(&gapped_7x9());
    assert!(max_diff(&j, &gapped_j()) < 1e-9);
    let g = topo::extract_graph(&j, TOL, false);
    for (a, b) in [(3, 2), (2, 1), (1, 7), (7, 6), (6, 5), (5, 4)] {
        assert!(g.has_edge(a - 1, b - 1), "{a} -> {b}");
    }
    let multi: Vec<usize> = (0..7).filter(|&i| g.inputs(i).len() > 1).collect();
    assert_eq!(multi, vec![2, 5]);
}

#[test]
fn cluster_examples() {
    let s = separable_7x8();
    let cs = topo::cluster_structure(&s, &learn::learn_j(&s), TOL).unwrap();
    assert_eq!(cs.clusters, vec![vec![0, 1, 2, 3], vec![4, 5], vec![6]]);
    assert_eq!(cs.connected, vec![vec![0], vec![1], vec![2]]);
    assert!(cs.block_diagonal && cs.consistent);
    assert!(cs.max_inter_cluster < 1e-10, "{}", cs.max_inter_cluster);

    let s = clustered_10x12();
    let cs = topo::cluster_structure(&s, &learn::learn_j(&s), TOL).unwrap();
    assert_eq!(cs.clusters.len(), 3);
    assert!(cs.direct_from_matrix[0][1] && cs.direct_from_matrix[0][2] && !cs.direct_from_matrix[1][2]);
    assert_eq!(cs.connected, vec![vec![0, 1, 2]]);
    assert!(cs.consistent && !cs.block_diagonal);

    let s = ring_7x14();
    let cs = topo::cluster_structure(&s, &learn::learn_j(&s), TOL).unwrap();
    assert_eq!(cs.clusters.len(), 1);
    assert!(cs.block_diagonal);
}

#[test]
fn cluster_preconditions() {
    let s = m(&["++-", "+-+", "++-"]);
    let j = learn::learn_j(&s);
    assert!(matches!(topo::cluster_structure(&s, &j, TOL), Err(TopoError::DuplicateRows(_))));
    let s = ring_7x14().permute_rows(&[1, 0, 2, 3, 4, 5, 6]);
    assert_eq!(topo::cluster_structure(&s, &learn::learn_j(&s), TOL), Err(TopoError::NotStandardForm));
    let s = ring_7x14();
    assert!(matches!(topo::cluster_structure(&s, &learn::learn_j(&feedback_5x6()), TOL), Err(TopoError::Shape { .. })));
}

#[test]
fn direct_connections_follow_intersections() {
    for s in [separable_7x8(), clustered_10x12(), inseparable_10x18()] {
        let cs = topo::cluster_structure(&s, &learn::learn_j(&s), TOL).unwrap();
        let gens = binmat::decompose(&s).generators();
        for a in 0..gens.len() {
            for b in 0..gens.len() {
                let dim = admit::intersection_dim(s.row(gens[a]), s.row(gens[b])).unwrap();
                assert_eq!(cs.direct_from_matrix[a][b], a != b && dim > 0, "{a},{b}");
            }
        }
    }
}

#[test]
fn dot_export() {
    let j = learn::learn_j(&ring_7x14());
    let dot = topo::export_dot(&topo::extract_graph(&j, TOL, false));
    assert_eq!(dot.matches("->").count(), 7);
    assert_eq!(dot.matches("color=blue").count(), 1);
    assert_eq!(dot.matches("color=red").count(), 6);
    for i in 1..=7 {
        assert!(dot.contains(&format!("    n{i};")));
    }

    let s = separable_7x8();
    let labels = binmat::decompose(&s).labels(7);
    let mut g = topo::extract_graph(&learn::learn_j(&s), TOL, false).with_clusters(labels);
    let dot = topo::export_dot(&g);
    assert_eq!(dot.matches("subgraph cluster_").count(), 3);
    // No edge leaves its cluster.
    assert!(g.edges.iter().all(|e| g.clusters[e.from] == g.clusters[e.to]));

    topo::add_fixed_point_edges(&mut g, &learn::learn_j0(&extra_row_6x6()).resize(7, 7, 0.0), TOL, false);
    assert!(topo::export_dot(&g).contains("style=dashed"));

    let empty = topo::export_dot(&topo::extract_graph(&nalgebra::DMatrix::zeros(0, 0), TOL, false));
    assert_eq!(empty, "digraph network {\n}\n");
}

#[test]
fn antisymmetric_half_rank_cycles_are_rings() {
    let mut checked = 0;
    for p in (2..=16usize).step_by(2) {
        let n = p / 2;
        for bits in 0..1u64 << n {
            let sigma = BinaryVector::from_bits(bits, n);
            let eta = sigma.concat(&sigma.neg());
            if spectra::rank_of_vector(&eta) != n {
                continue;
            }
            let s = CycleMatrix::new(shifts(&eta, &(0..n as i64).collect::<Vec<_>>())).unwrap();
            let c = topo::detect_companion(&learn::learn_j(&s), TOL).unwrap_or_else(|| panic!("{eta}: not companion"));
            assert!(c.is_ring && (c.feedback[0] + 1.0).abs() < 1e-9, "{eta}: {:?}", c.feedback);
            checked += 1;
        }
    }
    assert!(checked > 256);
}

fn vector(p: usize) -> impl Strategy<Value = BinaryVector> {
    prop::collection::vec(prop::bool::ANY, p)
        .prop_map(|b| BinaryVector::new(b.into_iter().map(|x| if x { 1 } else { -1 }).collect()).unwrap())
}

proptest! {
    #[test]
    fn simple_cycles_have_companion_form(
        (eta, signs) in (2..=14usize).prop_flat_map(|p| (vector(p), prop::collection::vec(prop::bool::ANY, p)))
    ) {
        let r = spectra::rank_of_vector(&eta);
        let s: Vec<i8> = signs.iter().take(r).map(|&b| if b { 1 } else { -1 }).collect();
        let rows = (0..r).map(|k| if s[k] > 0 { eta.shift(k as i64) } else { eta.shift(k as i64).neg() }).collect();
        let sigma = CycleMatrix::new(rows).unwrap();
        let c = topo::detect_companion(&learn::learn_j(&sigma), TOL);
        prop_assert!(c.is_some(), "{}", sigma.to_text());
        let c = c.unwrap();
        let expected: Vec<i8> = (0..r.saturating_sub(1)).map(|k| s[k] * s[k + 1]).collect();
        prop_assert_eq!(c.superdiagonal, expected);
        prop_assert!(c.feedback[0].abs() > TOL);
    }
}
