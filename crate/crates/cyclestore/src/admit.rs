//! Exact rank, admissibility criteria, classification and essential generators.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binmat::{decompose, BinaryVector, CycleMatrix, LoopDecomposition};
use crate::learn;
use crate::spectra::{self, CyclotomicTable, IntPolynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdmitError {
    #[error("admissibility criteria disagree: dft={dft}, rowspace={rowspace}, residual={residual} (residual {residual_value:e})")]
    CriteriaDisagree { dft: bool, rowspace: bool, residual: bool, residual_value: f64 },
    #[error("cycle is not admissible")]
    NotAdmissible,
    #[error("cycle has {0} loop groups; a simple cycle has exactly one")]
    NotSimple(usize),
    #[error("cycle has a single loop group; a composite cycle needs at least two")]
    NotComposite,
    #[error("vectors have different lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("intersection dimension mismatch: spectral {spectral}, exact {exact}")]
    IntersectionMismatch { spectral: usize, exact: usize },
    #[error("loop spans intersect trivially")]
    TrivialIntersection,
    #[error("intersection is not proper: one loop span contains the other")]
    NotProper,
    #[error("too many essential generators ({0}) for inclusion-exclusion")]
    TooManyGenerators(usize),
    #[error(transparent)]
    Spectra(#[from] spectra::SpectraError),
}

/// Result of fraction-free elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub rank: usize,
    /// Determinant, present for square input.
    pub determinant: Option<BigInt>,
}

fn bareiss_i128(m: &[Vec<i64>]) -> Option<Elimination> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut prev: i128 = 1;
    let mut rank = 0;
    let mut sign: i128 = 1;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| a[r][c] != 0) else { continue };
        if piv != rank {
            a.swap(piv, rank);
            sign = -sign;
        }
        for r in rank + 1..rows {
            for k in c + 1..cols {
                let num = a[rank][c].checked_mul(a[r][k])?.checked_sub(a[r][c].checked_mul(a[rank][k])?)?;
                a[r][k] = num / prev;
            }
            a[r][c] = 0;
        }
        prev = a[rank][c];
        rank += 1;
    }
    let determinant = (rows == cols).then(|| {
        if rank == rows {
            BigInt::from(sign * prev)
        } else {
            BigInt::zero()
        }
    });
    Some(Elimination { rank, determinant })
}

fn bareiss_big(m: &[Vec<i64>]) -> Elimination {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut negative = false;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        if piv != rank {
            a.swap(piv, rank);
            negative = !negative;
        }
        for r in rank + 1..rows {
            for k in c + 1..cols {
                let num = &a[rank][c] * &a[r][k] - &a[r][c] * &a[rank][k];
                a[r][k] = num / &prev;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
    }
    let determinant = (rows == cols).then(|| {
        if rank == rows {
            if negative {
                -prev.clone()
            } else {
                prev.clone()
            }
        } else {
            BigInt::zero()
        }
    });
    Elimination { rank, determinant }
}

/// Fraction-free (Bareiss) elimination; 128-bit with an arbitrary-precision fallback.
pub fn eliminate(m: &[Vec<i64>]) -> Elimination {
    bareiss_i128(m).unwrap_or_else(|| bareiss_big(m))
}

/// Rank over the rationals, no floating point.
pub fn exact_rank(m: &[Vec<i64>]) -> usize {
    eliminate(m).rank
}

pub fn exact_determinant(m: &[Vec<i64>]) -> Option<BigInt> {
    eliminate(m).determinant
}

pub fn rank_of_cycle(sigma: &CycleMatrix) -> usize {
    exact_rank(&sigma.to_i64())
}

/// The `p×p` matrix whose rows are `ηP^0, …, ηP^{p−1}`.
pub fn shift_circulant(eta: &BinaryVector) -> Vec<Vec<i64>> {
    (0..eta.len()).map(|k| eta.shift(k as i64).to_i64()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Simple,
    SeparableComposite,
    DegenerateInseparable,
    GenuinelyInseparable,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Simple => "Simple",
            Classification::SeparableComposite => "SeparableComposite",
            Classification::DegenerateInseparable => "DegenerateInseparable",
            Classification::GenuinelyInseparable => "GenuinelyInseparable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub n_rows: usize,
    pub period: usize,
    pub rank_sigma: usize,
    /// Indices `k` of the nonzero columns of `Σ̂`.
    pub dft_nonzero_columns: Vec<usize>,
    pub dft_nonzero_count: usize,
    pub criterion_dft: bool,
    pub criterion_rowspace: bool,
    pub criterion_residual: bool,
    pub residual: f64,
    pub admissible: bool,
    pub classification: Option<Classification>,
    /// Generator row of each loop group.
    pub generators: Vec<usize>,
    pub generator_ranks: Vec<usize>,
    /// Dimension of pairwise intersections of generator loop spans (diagonal = rank).
    pub pairwise_intersection_dims: Vec<Vec<usize>>,
    pub essential_generators: Vec<usize>,
    pub essential_non_unique: bool,
    /// Some generator's loop span is a proper subspace of the row space.
    pub reducible: Option<bool>,
    /// Some pair of generators has trivially intersecting loop spans.
    pub decomposable: Option<bool>,
    /// Generator pairs spanning the same loop space.
    pub equal_span_pairs: Vec<(usize, usize)>,
    pub duplicate_rows: Vec<(usize, usize)>,
}

/// Spectral data of the loop groups of one cycle.
#[derive(Debug, Clone)]
pub struct LoopSpectra {
    pub decomposition: LoopDecomposition,
    /// Exact support `K(η)` per group.
    pub supports: Vec<BTreeSet<usize>>,
}

impl LoopSpectra {
    pub fn new(sigma: &CycleMatrix) -> Self {
        let decomposition = decompose(sigma);
        let table = CyclotomicTable::new(sigma.period());
        let supports = decomposition.groups.iter().map(|g| table.support(sigma.row(g.generator))).collect();
        LoopSpectra { decomposition, supports }
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.supports.iter().map(|k| k.len()).collect()
    }

    pub fn intersection_dims(&self) -> Vec<Vec<usize>> {
        let r = self.supports.len();
        (0..r)
            .map(|i| (0..r).map(|j| self.supports[i].intersection(&self.supports[j]).count()).collect())
            .collect()
    }

    fn union_of(&self, idx: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        idx.into_iter().flat_map(|g| self.supports[g].iter().copied()).collect()
    }
}

fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// `‖ΣPΣ⁺Σ − ΣP‖_max`.
pub fn associating_residual(sigma: &CycleMatrix) -> f64 {
    let s = sigma.to_dmatrix();
    let sp = sigma.shifted(1).to_dmatrix();
    let j = &sp * learn::pinv(&s);
    max_abs(&(j * &s - sp))
}

/// Evaluates the DFT, row-space and residual criteria and classifies admissible cycles.
pub fn is_admissible(sigma: &CycleMatrix) -> Result<AdmissibilityReport, AdmitError> {
    let p = sigma.period();
    let rank_sigma = rank_of_cycle(sigma);
    let tol = spectra::zero_tolerance(p);

    let hat = spectra::dft(sigma);
    let dft_nonzero_columns: Vec<usize> =
        (0..p).filter(|&k| hat.column(k).iter().any(|c| c.norm() >= tol)).collect();
    let criterion_dft = dft_nonzero_columns.len() == rank_sigma;

    let stacked = sigma.vstack(&sigma.shifted(1)).expect("same period");
    let criterion_rowspace = rank_of_cycle(&stacked) == rank_sigma;

    let residual = associating_residual(sigma);
    let criterion_residual = residual < tol;

    if criterion_dft != criterion_rowspace || criterion_dft != criterion_residual {
        return Err(AdmitError::CriteriaDisagree {
            dft: criterion_dft,
            rowspace: criterion_rowspace,
            residual: criterion_residual,
            residual_value: residual,
        });
    }
    let admissible = criterion_dft;

    let ls = LoopSpectra::new(sigma);
    let generators = ls.decomposition.generators();
    let generator_ranks = ls.ranks();
    let dims = ls.intersection_dims();
    let eg = select_essential(&ls);
    let mut equal_span_pairs = Vec::new();
    for a in 0..generators.len() {
        for b in a + 1..generators.len() {
            if ls.supports[a] == ls.supports[b] {
                equal_span_pairs.push((generators[a], generators[b]));
            }
        }
    }

    let (classification, reducible, decomposable) = if admissible {
        let union = ls.union_of(0..generators.len());
        let reducible = ls.supports.iter().any(|k| k.len() < union.len());
        let r = generators.len();
        let decomposable = (0..r).any(|a| (a + 1..r).any(|b| dims[a][b] == 0));
        (Some(classify_spectra(&ls, rank_sigma, &eg)), Some(reducible), Some(decomposable))
    } else {
        (None, None, None)
    };

    Ok(AdmissibilityReport {
        n_rows: sigma.n_rows(),
        period: p,
        rank_sigma,
        dft_nonzero_count: dft_nonzero_columns.len(),
        dft_nonzero_columns,
        criterion_dft,
        criterion_rowspace,
        criterion_residual,
        residual,
        admissible,
        classification,
        essential_non_unique: eg.len() < generators.len(),
        essential_generators: eg.iter().map(|&g| generators[g]).collect(),
        generators,
        generator_ranks,
        pairwise_intersection_dims: dims,
        reducible,
        decomposable,
        equal_span_pairs,
        duplicate_rows: sigma.duplicate_rows(),
    })
}

fn classify_spectra(ls: &LoopSpectra, rank_sigma: usize, eg: &[usize]) -> Classification {
    let r = ls.supports.len();
    if r == 1 {
        return Classification::Simple;
    }
    let ranks = ls.ranks();
    let dims = ls.intersection_dims();
    let pairwise_trivial = |set: &[usize]| {
        set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| dims[a][b] == 0))
    };
    let all: Vec<usize> = (0..r).collect();
    if ranks.iter().sum::<usize>() == rank_sigma && pairwise_trivial(&all) {
        return Classification::SeparableComposite;
    }
    if eg.len() < r && pairwise_trivial(eg) {
        return Classification::DegenerateInseparable;
    }
    Classification::GenuinelyInseparable
}

pub fn classify(sigma: &CycleMatrix) -> Result<Classification, AdmitError> {
    is_admissible(sigma)?.classification.ok_or(AdmitError::NotAdmissible)
}

/// For a simple cycle: `rank(Σ) = rank(η)`.
pub fn check_simple(sigma: &CycleMatrix) -> Result<bool, AdmitError> {
    let dec = decompose(sigma);
    if dec.groups.len() != 1 {
        return Err(AdmitError::NotSimple(dec.groups.len()));
    }
    let g = sigma.row(dec.groups[0].generator);
    Ok(rank_of_cycle(sigma) == spectra::rank_of_vector_checked(g)?)
}

/// For a composite cycle: `rank(Σ) = Σ rank(η_i)` over generators.
pub fn check_separable(sigma: &CycleMatrix) -> Result<bool, AdmitError> {
    let dec = decompose(sigma);
    if dec.groups.len() < 2 {
        return Err(AdmitError::NotComposite);
    }
    let mut total = 0;
    for g in &dec.groups {
        total += spectra::rank_of_vector_checked(sigma.row(g.generator))?;
    }
    Ok(rank_of_cycle(sigma) == total)
}

/// `dim(span L_η ∩ span L_η′)` from spectral supports, cross-checked by exact ranks
/// of the stacked shift circulants.
pub fn intersection_dim(a: &BinaryVector, b: &BinaryVector) -> Result<usize, AdmitError> {
    if a.len() != b.len() {
        return Err(AdmitError::LengthMismatch(a.len(), b.len()));
    }
    let table = CyclotomicTable::new(a.len());
    let spectral = table.support(a).intersection(&table.support(b)).count();
    let ca = shift_circulant(a);
    let cb = shift_circulant(b);
    let mut stacked = ca.clone();
    stacked.extend(cb.iter().cloned());
    let exact = exact_rank(&ca) + exact_rank(&cb) - exact_rank(&stacked);
    if spectral != exact {
        return Err(AdmitError::IntersectionMismatch { spectral, exact });
    }
    Ok(spectral)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EssentialGenerators {
    /// Row indices of the chosen essential generators.
    pub rows: Vec<usize>,
    /// A non-essential generator exists, so other choices may be possible.
    pub non_unique: bool,
}

fn proper_pair(x: &BTreeSet<usize>, y: &BTreeSet<usize>) -> bool {
    !x.is_subset(y) && !y.is_subset(x)
}

fn satisfies_essential(ls: &LoopSpectra, set: &[usize], target: &BTreeSet<usize>) -> bool {
    ls.union_of(set.iter().copied()) == *target
        && set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| proper_pair(&ls.supports[a], &ls.supports[b])))
}

/// Group indices of an essential generator set: greedy by ascending index after the
/// mandatory generators, with an exhaustive search as fallback.
fn select_essential(ls: &LoopSpectra) -> Vec<usize> {
    let r = ls.supports.len();
    let target = ls.union_of(0..r);
    let mandatory: Vec<usize> = (0..r)
        .filter(|&g| {
            let others = ls.union_of((0..r).filter(|&h| h != g));
            !ls.supports[g].is_subset(&others)
        })
        .collect();
    let mut chosen = mandatory.clone();
    let mut covered = ls.union_of(chosen.iter().copied());
    for g in 0..r {
        if covered == target {
            break;
        }
        if chosen.contains(&g) || ls.supports[g].is_subset(&covered) {
            continue;
        }
        if chosen.iter().all(|&c| proper_pair(&ls.supports[c], &ls.supports[g])) {
            chosen.push(g);
            covered.extend(ls.supports[g].iter().copied());
        }
    }
    chosen.sort_unstable();
    if satisfies_essential(ls, &chosen, &target) {
        return chosen;
    }
    // Smallest subsets first, then lexicographic; always containing the mandatory ones.
    let optional: Vec<usize> = (0..r).filter(|g| !mandatory.contains(g)).collect();
    let mut best: Option<Vec<usize>> = None;
    if optional.len() <= 20 {
        for mask in 0u32..(1 << optional.len()) {
            let mut set = mandatory.clone();
            set.extend((0..optional.len()).filter(|i| mask >> i & 1 == 1).map(|i| optional[i]));
            set.sort_unstable();
            if satisfies_essential(ls, &set, &target) && best.as_ref().map_or(true, |b| set.len() < b.len() || (set.len() == b.len() && set < *b)) {
                best = Some(set);
            }
        }
    }
    best.unwrap_or(chosen)
}

pub fn essential_generators(sigma: &CycleMatrix) -> EssentialGenerators {
    let ls = LoopSpectra::new(sigma);
    let eg = select_essential(&ls);
    EssentialGenerators {
        rows: eg.iter().map(|&g| ls.decomposition.groups[g].generator).collect(),
        non_unique: eg.len() < ls.supports.len(),
    }
}

/// Alternating sum of intersection dimensions over all non-empty subsets of the
/// essential generators, compared with `rank(Σ)`.
pub fn check_inclusion_exclusion(sigma: &CycleMatrix) -> Result<bool, AdmitError> {
    let ls = LoopSpectra::new(sigma);
    let eg = select_essential(&ls);
    if eg.len() > 24 {
        return Err(AdmitError::TooManyGenerators(eg.len()));
    }
    let mut total: i64 = 0;
    for mask in 1u32..(1 << eg.len()) {
        let mut inter: Option<BTreeSet<usize>> = None;
        for (i, &g) in eg.iter().enumerate() {
            if mask >> i & 1 == 1 {
                inter = Some(match inter {
                    None => ls.supports[g].clone(),
                    Some(s) => s.intersection(&ls.supports[g]).copied().collect(),
                });
            }
        }
        let d = inter.map_or(0, |s| s.len()) as i64;
        total += if mask.count_ones() % 2 == 1 { d } else { -d };
    }
    Ok(total == rank_of_cycle(sigma) as i64)
}

/// An integer row vector whose loop spans `span L_ε ∩ span L_ε′`.
///
/// With `K = K(ε) ∩ K(ε′)`, `p₀(x)` is the product of `Φ_d` over the order classes absent
/// from `K`, multiplied by `x^m` to reach degree `p − 1`. The sign is fixed so that the
/// first nonzero coefficient is positive.
pub fn intersection_generator(a: &BinaryVector, b: &BinaryVector) -> Result<Vec<i64>, AdmitError> {
    if a.len() != b.len() {
        return Err(AdmitError::LengthMismatch(a.len(), b.len()));
    }
    let p = a.len();
    let table = CyclotomicTable::new(p);
    let ka = table.support(a);
    let kb = table.support(b);
    let k: BTreeSet<usize> = ka.intersection(&kb).copied().collect();
    if k.is_empty() {
        return Err(AdmitError::TrivialIntersection);
    }
    if k == ka || k == kb {
        return Err(AdmitError::NotProper);
    }
    let present: BTreeSet<usize> = k.iter().map(|&i| spectra::order_class(p, i)).collect();
    let mut poly = IntPolynomial::one();
    for (d, phi) in table.entries() {
        if !present.contains(d) {
            poly = poly.mul(phi);
        }
    }
    let deg = poly.degree().expect("nonzero product");
    poly = poly.mul(&IntPolynomial::monomial(p - 1 - deg));
    let mut coeffs = poly.coeffs().to_vec();
    coeffs.resize(p, 0);
    if coeffs.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
        coeffs.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(coeffs)
}

/// Minimal cycle: every generator is essential and each group holds `rank(η)` distinct rows.
pub fn is_minimal(sigma: &CycleMatrix) -> Result<bool, AdmitError> {
    if !is_admissible(sigma)?.admissible {
        return Err(AdmitError::NotAdmissible);
    }
    let ls = LoopSpectra::new(sigma);
    let eg = select_essential(&ls);
    if eg.len() != ls.supports.len() {
        return Ok(false);
    }
    Ok(ls.decomposition.groups.iter().zip(ls.ranks()).all(|(g, r)| {
        let distinct: BTreeSet<&BinaryVector> = g.members.iter().map(|m| sigma.row(m.row)).collect();
        distinct.len() == r
    }))
}

/// Real-valued rank of an integer vector's loop span (for non-binary vectors such as
/// intersection generators): exact rank of its shift circulant.
pub fn rank_of_int_vector(v: &[i64]) -> usize {
    let p = v.len();
    let rows: Vec<Vec<i64>> = (0..p).map(|k| (0..p).map(|j| v[(j + k) % p]).collect()).collect();
    exact_rank(&rows)
}

/// True if every shift of `v` lies in the row space of `m`.
pub fn loop_in_span(v: &[i64], m: &[Vec<i64>]) -> bool {
    let p = v.len();
    let base = exact_rank(m);
    let mut stacked = m.to_vec();
    stacked.extend((0..p).map(|k| (0..p).map(|j| v[(j + k) % p]).collect::<Vec<i64>>()));
    exact_rank(&stacked) == base
}
