#![allow(dead_code)]

use cyclestore::binmat::{BinaryVector, CycleMatrix};
use nalgebra::DMatrix;

pub fn v(s: &str) -> BinaryVector {
    BinaryVector::parse(s).unwrap()
}

pub fn m(rows: &[&str]) -> CycleMatrix {
    CycleMatrix::from_strs(rows).unwrap()
}

/// Rows `η P^k` for each listed exponent.
pub fn shifts(eta: &BinaryVector, exps: &[i64]) -> Vec<BinaryVector> {
    exps.iter().map(|&k| eta.shift(k)).collect()
}

pub fn stack(parts: Vec<Vec<BinaryVector>>) -> CycleMatrix {
    CycleMatrix::new(parts.into_iter().flatten().collect()).unwrap()
}

pub fn int_matrix(n: usize, entries: &[i64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, entries.len() / n, &entries.iter().map(|&x| x as f64).collect::<Vec<_>>())
}

pub fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// 4×6, generated by rows 1 and 4 with row 4 = row 1 − row 2 + row 3.
pub fn reducible_4x6() -> CycleMatrix {
    m(&["+++---", "++---+", "+---++", "+-+-+-"])
}

pub fn eta_pair() -> (BinaryVector, BinaryVector, BinaryVector) {
    let e1 = v("++-++-");
    (e1.clone(), e1.neg(), v("+++---"))
}

/// 9×6: three consecutive shifts each of η, −η and a third generator.
pub fn degenerate_9x6() -> CycleMatrix {
    let (a, b, c) = eta_pair();
    stack(vec![shifts(&a, &[0, 1, 2]), shifts(&b, &[0, 1, 2]), shifts(&c, &[0, 1, 2])])
}

/// 7×8 separable cycle with loop groups of sizes 4, 2, 1.
pub fn separable_7x8() -> CycleMatrix {
    m(&["++++----", "+++----+", "++----++", "+----+++", "++--++--", "+--++--+", "+-+-+-+-"])
}

pub fn eps1() -> BinaryVector {
    v("+++++++-+-------+-")
}

pub fn eps2() -> BinaryVector {
    v("+++---+++---+++---")
}

/// 10×18 genuinely inseparable cycle: ε1 P^0..6 and ε2 P^0..2.
pub fn inseparable_10x18() -> CycleMatrix {
    stack(vec![shifts(&eps1(), &[0, 1, 2, 3, 4, 5, 6]), shifts(&eps2(), &[0, 1, 2])])
}

/// 7×14 anti-symmetric simple MC-cycle `η P^0..6`.
pub fn ring_7x14() -> CycleMatrix {
    let eta = v("+++++++-------");
    CycleMatrix::new(shifts(&eta, &[0, 1, 2, 3, 4, 5, 6])).unwrap()
}

pub fn feedback_5x6() -> CycleMatrix {
    m(&["++-+--", "+-+--+", "-+--++", "+--++-", "--++-+"])
}

pub fn gapped_eta() -> BinaryVector {
    v("++++++---")
}

pub fn gapped_7x9() -> CycleMatrix {
    CycleMatrix::new(shifts(&gapped_eta(), &[0, 1, 2, 4, 5, 6, 8])).unwrap()
}

pub fn gapped_j() -> DMatrix<f64> {
    int_matrix(
        7,
        &[
            0, 1, 0, 0, 0, 0, 0, //
            0, 0, 1, 0, 0, 0, 0, //
            -1, 0, 1, 0, 1, -1, 1, //
            0, 0, 0, 0, 1, 0, 0, //
            0, 0, 0, 0, 0, 1, 0, //
            0, -1, 1, -1, 1, 0, 1, //
            1, 0, 0, 0, 0, 0, 0,
        ],
    )
}

pub fn clustered_generators() -> (BinaryVector, BinaryVector, BinaryVector) {
    (v("+++-+++-+++-"), v("-+++---+++--"), v("+--+--+--+--"))
}

/// 10×12 minimal genuinely inseparable cycle with three clusters.
pub fn clustered_10x12() -> CycleMatrix {
    let (a, b, c) = clustered_generators();
    stack(vec![shifts(&a, &[0, 1, 2, 3]), shifts(&b, &[0, 1, 2]), shifts(&c, &[0, 1, 2])])
}

/// `8 J` for [`clustered_10x12`].
pub fn clustered_j_times_8() -> DMatrix<f64> {
    int_matrix(
        10,
        &[
            0, 7, 0, -1, 1, -1, 1, -1, -1, -1, //
            -1, 0, 7, 0, -1, 1, -1, -1, -1, -1, //
            0, -1, 0, 7, 1, -1, 1, -1, -1, -1, //
            7, 0, -1, 0, -1, 1, -1, -1, -1, -1, //
            1, -1, 1, -1, 2, 6, 2, 0, 0, 0, //
            -1, 1, -1, 1, -2, 2, 6, 0, 0, 0, //
            1, -1, 1, -1, 6, -2, 2, 0, 0, 0, //
            -1, -1, -1, -1, 0, 0, 0, -2, 6, -2, //
            -1, -1, -1, -1, 0, 0, 0, -2, -2, 6, //
            -1, -1, -1, -1, 0, 0, 0, 6, -2, -2,
        ],
    )
}

/// 6×6 cycle whose last row is the sum of rows 1, 3, 5.
pub fn extra_row_6x6() -> CycleMatrix {
    m(&["++--+-", "+--+-+", "--+-++", "-+-++-", "+-++--", "+-+-+-"])
}

pub fn extra_row_j0_times_4() -> DMatrix<f64> {
    int_matrix(
        6,
        &[
            3, 0, -1, 0, -1, 1, //
            0, 4, 0, 0, 0, 0, //
            -1, 0, 3, 0, -1, 1, //
            0, 0, 0, 4, 0, 0, //
            -1, 0, -1, 0, 3, 1, //
            1, 0, 1, 0, 1, 3,
        ],
    )
}

pub fn extra_row_j_times_4() -> DMatrix<f64> {
    int_matrix(
        6,
        &[
            0, 4, 0, 0, 0, 0, //
            -1, 0, 3, 0, -1, 1, //
            0, 0, 0, 4, 0, 0, //
            -1, 0, -1, 0, 3, 1, //
            -1, -4, -1, -4, -1, -3, //
            -1, 0, -1, 0, -1, -3,
        ],
    )
}

/// Non-singular 3×3 cycle: neuron 1 on in phases 1–2, neuron 2 in phase 1, neuron 3 always.
pub fn square_3x3() -> CycleMatrix {
    m(&["++-", "+--", "+++"])
}

/// A singular variant of [`square_3x3`] with rows 1–2 garbled.
pub fn square_3x3_as_typeset() -> CycleMatrix {
    m(&["+-+", "-+-", "+++"])
}

pub fn square_3x3_j() -> DMatrix<f64> {
    int_matrix(3, &[-1, 1, 1, -1, 0, 0, 0, 0, 1])
}

/// Three neurons, six states: ξ1 = (+,+,+), ξ2 = (+,+,−), ξ3 = (+,−,−), then negatives.
pub fn hopfield_3x6() -> CycleMatrix {
    m(&["+++---", "++---+", "+---++"])
}

/// Six neurons, eight states: σ1 P^0..3 and σ2 P^0..1.
pub fn spiking_6x8() -> CycleMatrix {
    let s1 = v("++++----");
    let s2 = v("++--++--");
    stack(vec![shifts(&s1, &[0, 1, 2, 3]), shifts(&s2, &[0, 1])])
}

/// Attained non-repetition ranks for `p = 1..=20`.
pub fn rank_table() -> Vec<(usize, Vec<usize>)> {
    vec![
        (1, vec![1]),
        (2, vec![1]),
        (3, vec![3]),
        (4, vec![2, 4]),
        (5, vec![5]),
        (6, vec![3, 5, 6]),
        (7, vec![7]),
        (8, vec![4, 6, 7, 8]),
        (9, vec![7, 9]),
        (10, vec![5, 9, 10]),
        (11, vec![11]),
        (12, vec![6, 7, 8, 9, 10, 11, 12]),
        (13, vec![13]),
        (14, vec![7, 13, 14]),
        (15, vec![11, 13, 15]),
        (16, vec![8, 10, 11, 12, 13, 14, 15, 16]),
        (17, vec![17]),
        (18, vec![7, 9, 11, 12, 13, 14, 15, 16, 17, 18]),
        (19, vec![19]),
        (20, vec![10, 12, 13, 14, 15, 16, 17, 18, 19, 20]),
    ]
}

/// Rank over the rationals by plain Gaussian elimination.
pub fn rational_rank(rows: &[Vec<i64>]) -> usize {
    use num_rational::BigRational;
    use num_traits::Zero;
    let mut a: Vec<Vec<BigRational>> =
        rows.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(rank, piv);
        let pivot = a[rank][c].clone();
        for i in 0..a.len() {
            if i != rank && !a[i][c].is_zero() {
                let f = &a[i][c] / &pivot;
                for k in c..cols {
                    let t = &f * &a[rank][k];
                    a[i][k] -= t;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Shift-circulant of η over the integers, built independently of the library.
pub fn circulant(eta: &BinaryVector) -> Vec<Vec<i64>> {
    let e = eta.to_i64();
    let p = e.len();
    (0..p).map(|k| (0..p).map(|j| e[(j + p - k) % p]).collect()).collect()
}
