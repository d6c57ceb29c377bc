mod common;

use cyclestore::admit;
use cyclestore::binmat::{BinaryVector, CycleMatrix};
use cyclestore::learn::{self, max_abs, LearnError};
use cyclestore::spectra::{self, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;

fn penrose_error(m: &DMatrix<f64>, mp: &DMatrix<f64>) -> f64 {
    let a = max_abs(&(m * mp * m - m));
    let b = max_abs(&(mp * m * mp - mp));
    let c = max_abs(&((m * mp).transpose() - m * mp));
    let d = max_abs(&((mp * m).transpose() - mp * m));
    a.max(b).max(c).max(d)
}

#[test]
fn pinv_of_full_row_rank_matches_normal_equations() {
    for s in [ring_7x14(), separable_7x8(), feedback_5x6(), square_3x3()] {
        let m = s.to_dmatrix();
        let direct = m.transpose() * (&m * m.transpose()).try_inverse().unwrap();
        assert!(max_diff(&learn::pinv(&m), &direct) < 1e-10);
    }
    let tall = separable_7x8().to_dmatrix().transpose();
    let mp = learn::pinv(&tall);
    assert_eq!(mp.shape(), (7, 8));
    assert!(penrose_error(&tall, &mp) < 1e-10);
    assert_eq!(learn::pinv(&DMatrix::zeros(3, 2)), DMatrix::zeros(2, 3));
}

#[test]
fn projector_examples() {
    for s in [ring_7x14(), separable_7x8(), feedback_5x6(), square_3x3()] {
        let j0 = learn::learn_j0(&s);
        assert!(max_diff(&j0, &DMatrix::identity(s.n_rows(), s.n_rows())) < 1e-10);
    }
    let j0 = learn::learn_j0(&extra_row_6x6()) * 4.0;
    assert!(max_diff(&j0, &extra_row_j0_times_4()) < 1e-9);
    let j = learn::learn_j(&extra_row_6x6()) * 4.0;
    assert!(max_diff(&j, &extra_row_j_times_4()) < 1e-9);
}

#[test]
fn golden_transition_matrices() {
    let j8 = learn::learn_j(&clustered_10x12()) * 8.0;
    let reference = clustered_j_times_8();
    let mismatches: Vec<(usize, usize)> =
        (0..10).flat_map(|i| (0..10).map(move |k| (i, k))).filter(|&(i, k)| (j8[(i, k)] - reference[(i, k)]).abs() > 1e-6).collect();
    // The reference matrix carries a single sign slip.
    assert_eq!(mismatches, vec![(6, 4)]);
    assert!((j8[(6, 4)] + reference[(6, 4)]).abs() < 1e-6);
    assert!(j8.iter().all(|x| (x - x.round()).abs() < 1e-6));

    assert!(max_diff(&learn::learn_j(&square_3x3()), &square_3x3_j()) < 1e-12);
}

#[test]
fn all_positive_simple_cycle_gives_transposed_permutation() {
    for p in 3..=12usize {
        let mut e = vec![1i8; p];
        e[0] = -1;
        let eta = BinaryVector::new(e).unwrap();
        let s = CycleMatrix::new(shifts(&eta, &(0..p as i64).collect::<Vec<_>>())).unwrap();
        let j = learn::learn_j(&s);
        assert!(max_diff(&j, &learn::transition_matrix(p).transpose()) < 1e-10, "p={p}");
    }
}

#[test]
fn combine_gain_for_unit_beta() {
    let s = hopfield_3x6();
    let (j0, j) = (learn::learn_j0(&s), learn::learn_j(&s));
    let b1 = learn::beta1_from_beta(4.0).unwrap();
    let (jt, bk) = learn::combine(&j0, &j, 0.6, 4.0, b1).unwrap();
    assert!((4.0 * bk - 4.0).abs() < 1e-10);
    assert!(max_diff(&jt, &(&j0 * (0.6 * bk) + &j * (0.4 * bk))) < 1e-12);
    let cs = learn::connectivity_set(&s, 0.6, 4.0, 4.0).unwrap();
    assert!((cs.beta_k - 1.0).abs() < 1e-15);
    assert!(max_diff(&cs.jt, &jt) < 1e-9);
    assert!(cs.residual_fp < 1e-10 && cs.residual_tr < 1e-10);
    assert!(matches!(learn::combine(&j0, &j, 0.6, 4.0, 0.0), Err(LearnError::Beta1OutOfRange(_))));
    assert!(matches!(learn::connectivity_set(&s, 0.6, -1.0, 4.0), Err(LearnError::LambdaNotPositive(_))));
}

#[test]
fn residual_exposes_inadmissible_cycle() {
    let s = m(&["++-"]);
    let cs = learn::connectivity_set(&s, 0.6, 4.0, 4.0).unwrap();
    assert!(cs.residual_tr > 0.1, "{}", cs.residual_tr);
    assert!(cs.residual_fp < 1e-12);
}

#[test]
fn group_structure_examples() {
    let s = separable_7x8();
    let (j0, j) = (learn::learn_j0(&s), learn::learn_j(&s));
    let rep = learn::verify_group_structure(&s, &j, &j0);
    assert!(rep.ok, "{rep:?}");
    let j8 = (0..7).fold(j.clone(), |acc, _| &acc * &j);
    assert!(max_diff(&j8, &DMatrix::identity(7, 7)) < 1e-9);

    let s = extra_row_6x6();
    let (j0, j) = (learn::learn_j0(&s), learn::learn_j(&s));
    assert!(learn::verify_group_structure(&s, &j, &j0).ok);
    let j6 = (0..5).fold(j.clone(), |acc, _| &acc * &j);
    assert!(max_diff(&j6, &j0) < 1e-9);
    assert!(max_diff(&j0, &DMatrix::identity(6, 6)) > 0.1);

    let s = clustered_10x12();
    let (j0, j) = (learn::learn_j0(&s), learn::learn_j(&s));
    assert!(learn::verify_group_structure(&s, &j, &j0).ok);
    let j12 = (0..11).fold(j.clone(), |acc, _| &acc * &j);
    assert!(max_diff(&j12, &j0) < 1e-8);
    assert!(max_diff(&j0, &DMatrix::identity(10, 10)) > 0.1);
}

#[test]
fn dft_construction_examples() {
    for s in [clustered_10x12(), separable_7x8(), ring_7x14(), extra_row_6x6(), reducible_4x6()] {
        let j = learn::construct_j_dft(&s).unwrap();
        let sm = s.to_dmatrix();
        let target = s.shifted(1).to_dmatrix();
        assert!(max_abs(&(&j * &sm - &target)) < 1e-7);
        assert!(max_abs(&(&j * &sm - learn::learn_j(&s) * &sm)) < 1e-7);
    }
    let s = separable_7x8();
    assert!(max_diff(&learn::construct_j_dft(&s).unwrap(), &learn::learn_j(&s)) < 1e-9);
    assert!(matches!(learn::construct_j_dft(&m(&["++-"])), Err(LearnError::NotAdmissible)));
}

#[test]
fn ranks_of_learned_matrices_coincide() {
    for s in [reducible_4x6(), degenerate_9x6(), extra_row_6x6(), clustered_10x12(), square_3x3()] {
        let r = admit::rank_of_cycle(&s);
        assert_eq!(learn::numerical_rank(&s.to_dmatrix()), r);
        assert_eq!(learn::numerical_rank(&learn::learn_j0(&s)), r);
        assert_eq!(learn::numerical_rank(&learn::learn_j(&s)), r);
    }
}

fn random_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1..=5usize)
        .prop_flat_map(|r| (prop::collection::vec(-3i64..=3, 6 * r), prop::collection::vec(-3i64..=3, r * 9), Just(r)))
        .prop_map(|(a, b, r)| int_matrix(6, &a) * int_matrix(r, &b))
}

fn vector(p: usize) -> impl Strategy<Value = BinaryVector> {
    prop::collection::vec(prop::bool::ANY, p)
        .prop_map(|b| BinaryVector::new(b.into_iter().map(|x| if x { 1 } else { -1 }).collect()).unwrap())
}

/// Unions of consecutive-shift blocks; most are admissible.
fn stacked_cycle() -> impl Strategy<Value = CycleMatrix> {
    (2..=12usize)
        .prop_flat_map(|p| prop::collection::vec((vector(p), 1..=4usize), 1..=3))
        .prop_map(|blocks| {
            let rows = blocks.into_iter().flat_map(|(eta, k)| (0..k as i64).map(move |j| eta.shift(j))).collect();
            CycleMatrix::new(rows).unwrap()
        })
}

proptest! {
    #[test]
    fn penrose_identities(mat in random_matrix()) {
        let mp = learn::pinv(&mat);
        let scale = max_abs(&mat).max(1.0);
        prop_assert!(penrose_error(&mat, &mp) < 1e-8 * scale, "{}", penrose_error(&mat, &mp));
    }

    #[test]
    fn learned_matrices_satisfy_the_cycle(s in stacked_cycle()) {
        let sm = s.to_dmatrix();
        let mp = learn::pinv(&sm);
        prop_assert!(max_abs(&(&sm * &mp * &sm - &sm)) < 1e-8);
        prop_assert!(max_abs(&(&mp * &sm * &mp - &mp)) < 1e-8);

        let j0 = learn::learn_j0(&s);
        prop_assert!(max_abs(&(&j0 - j0.transpose())) < 1e-8);
        prop_assert!(max_abs(&(&j0 * &j0 - &j0)) < 1e-8);

        let rep = admit::is_admissible(&s).unwrap();
        let j = learn::learn_j(&s);
        let p = s.period();
        let residual = max_abs(&(&j * &sm - s.shifted(1).to_dmatrix()));
        prop_assert_eq!(residual < 1e-8 * p as f64, rep.admissible, "residual {}", residual);
        if rep.admissible {
            prop_assert_eq!(learn::numerical_rank(&j), rep.rank_sigma);
            prop_assert_eq!(learn::numerical_rank(&j0), rep.rank_sigma);
            prop_assert!(learn::verify_group_structure(&s, &j, &j0).ok);
            let hat = spectra::dft(&s);
            let jc = j.map(|x| C64::new(x, 0.0));
            for &k in &rep.dft_nonzero_columns {
                let col = hat.column(k).into_owned();
                let lambda = spectra::root_of_unity(p, -(k as i64));
                let dev = (&jc * &col - &col * lambda).map(|z| z.norm()).max();
                prop_assert!(dev < 1e-7, "column {}: {}", k, dev);
            }
        }
    }
}
