//! DFT of cycles, annihilation sets, cyclotomic polynomials and the
//! `N_p` / `M_p` combinatorics.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Complex, DMatrix};
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binmat::{BinaryVector, CycleMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectraError {
    #[error("argument must be a positive integer, got {0}")]
    NonPositive(i64),
    #[error("division by a zero or non-monic polynomial")]
    BadDivisor,
    #[error("rank disagreement for {vector}: DFT gives {dft}, cyclotomic factorisation gives {exact}")]
    RankMismatch { vector: String, dft: usize, exact: usize },
    #[error("period {0} exceeds the enumeration budget (max 22)")]
    TooLarge(usize),
}

pub type C64 = Complex<f64>;

/// Zero threshold for DFT coefficients of ±1 vectors of length `p`.
pub fn zero_tolerance(p: usize) -> f64 {
    1e-8 * p as f64
}

/// `ρ^k` with `ρ = exp(2πi/p)`; the exponent is reduced mod `p` first.
pub fn root_of_unity(p: usize, k: i64) -> C64 {
    let k = k.rem_euclid(p as i64) as f64;
    let theta = 2.0 * PI * k / p as f64;
    C64::new(theta.cos(), theta.sin())
}

/// The DFT matrix `V` with columns `v^(k)_j = ρ^{jk}`.
#[derive(Debug, Clone)]
pub struct DftMatrix {
    p: usize,
    v: DMatrix<C64>,
}

impl DftMatrix {
    pub fn new(p: usize) -> Self {
        let v = DMatrix::from_fn(p, p, |j, k| root_of_unity(p, (j * k) as i64));
        DftMatrix { p, v }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.v
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        self.v.column(k).iter().copied().collect()
    }

    /// `V* / p`, the inverse of `V`.
    pub fn inverse(&self) -> DMatrix<C64> {
        self.v.adjoint() / C64::new(self.p as f64, 0.0)
    }
}

/// `Σ̂ = ΣV`.
pub fn dft(sigma: &CycleMatrix) -> DMatrix<C64> {
    let p = sigma.period();
    let v = DftMatrix::new(p);
    let s = sigma.to_dmatrix().map(|x| C64::new(x, 0.0));
    s * v.matrix()
}

/// `η·v^(k)` for all `k`.
pub fn dft_vector(eta: &BinaryVector) -> Vec<C64> {
    let p = eta.len();
    (0..p)
        .map(|k| {
            eta.entries()
                .iter()
                .enumerate()
                .map(|(j, &e)| root_of_unity(p, (j * k) as i64) * e as f64)
                .sum()
        })
        .collect()
}

/// Indices `k` with `|η·v^(k)| < tol`.
pub fn annihilation_set(eta: &BinaryVector, tol: f64) -> BTreeSet<usize> {
    dft_vector(eta)
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() < tol)
        .map(|(k, _)| k)
        .collect()
}

/// `p − |annihilation set|` at the default tolerance.
pub fn rank_of_vector(eta: &BinaryVector) -> usize {
    eta.len() - annihilation_set(eta, zero_tolerance(eta.len())).len()
}

/// [`rank_of_vector`], cross-checked against the exact cyclotomic computation.
pub fn rank_of_vector_checked(eta: &BinaryVector) -> Result<usize, SpectraError> {
    let dft = rank_of_vector(eta);
    let exact = rank_via_cyclotomic(eta).rank;
    if dft != exact {
        return Err(SpectraError::RankMismatch { vector: eta.to_string(), dft, exact });
    }
    Ok(dft)
}

/// Integer polynomial, coefficients in ascending degree. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<i64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: vec![] }
    }

    pub fn one() -> Self {
        IntPolynomial { coeffs: vec![1] }
    }

    pub fn monomial(deg: usize) -> Self {
        let mut c = vec![0; deg + 1];
        c[deg] = 1;
        IntPolynomial { coeffs: c }
    }

    /// `x^n − 1`.
    pub fn x_pow_minus_one(n: usize) -> Self {
        let mut c = vec![0; n + 1];
        c[0] = -1;
        c[n] = 1;
        IntPolynomial::new(c)
    }

    /// `p_η(x) = Σ η_j x^j`.
    pub fn from_binary(eta: &BinaryVector) -> Self {
        IntPolynomial::new(eta.to_i64())
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> i64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &IntPolynomial) -> IntPolynomial {
        if self.is_zero() || other.is_zero() {
            return IntPolynomial::zero();
        }
        let mut c = vec![0i64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        IntPolynomial::new(c)
    }

    /// Long division by a monic polynomial; exact over the integers.
    pub fn div_rem(&self, divisor: &IntPolynomial) -> Result<(IntPolynomial, IntPolynomial), SpectraError> {
        let dd = divisor.degree().ok_or(SpectraError::BadDivisor)?;
        if divisor.leading() != 1 {
            return Err(SpectraError::BadDivisor);
        }
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((IntPolynomial::zero(), self.clone()));
        }
        let mut quot = vec![0i64; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let q = rem[i + dd];
            quot[i] = q;
            if q != 0 {
                for (j, &d) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= q * d;
                }
            }
        }
        rem.truncate(dd);
        Ok((IntPolynomial::new(quot), IntPolynomial::new(rem)))
    }

    /// True iff the monic `divisor` divides `self` exactly.
    pub fn divisible_by(&self, divisor: &IntPolynomial) -> Result<bool, SpectraError> {
        Ok(self.div_rem(divisor)?.1.is_zero())
    }

    /// `q(x) = self(−x)`.
    pub fn negate_x(&self) -> IntPolynomial {
        IntPolynomial::new(
            self.coeffs.iter().enumerate().map(|(i, &c)| if i % 2 == 1 { -c } else { c }).collect(),
        )
    }

    pub fn eval(&self, x: i64) -> i64 {
        self.coeffs.iter().rev().fold(0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c as f64)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.abs();
            match (i, a) {
                (0, _) => write!(f, "{a}")?,
                (1, 1) => f.write_str("x")?,
                (1, _) => write!(f, "{a}x")?,
                (_, 1) => write!(f, "x^{i}")?,
                _ => write!(f, "{a}x^{i}")?,
            }
            first = false;
        }
        Ok(())
    }
}

fn positive(n: i64) -> Result<u64, SpectraError> {
    if n <= 0 {
        Err(SpectraError::NonPositive(n))
    } else {
        Ok(n as u64)
    }
}

pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Euler's totient `n Π (1 − 1/q)` over the distinct primes `q | n`.
pub fn totient(n: i64) -> Result<u64, SpectraError> {
    let n = positive(n)?;
    Ok(prime_factors(n).iter().fold(n, |acc, &q| acc / q * (q - 1)))
}

/// The `n`-th cyclotomic polynomial, by dividing `x^n − 1` by `Φ_d` for each proper divisor `d`.
pub fn cyclotomic(n: i64) -> Result<IntPolynomial, SpectraError> {
    let n = positive(n)? as usize;
    let mut poly = IntPolynomial::x_pow_minus_one(n);
    for d in divisors(n).into_iter().filter(|&d| d < n) {
        let (q, r) = poly.div_rem(&cyclotomic(d as i64)?)?;
        debug_assert!(r.is_zero());
        poly = q;
    }
    Ok(poly)
}

/// `Φ_d` for every divisor `d` of `p`, computed once.
#[derive(Debug, Clone)]
pub struct CyclotomicTable {
    p: usize,
    polys: Vec<(usize, IntPolynomial)>,
}

impl CyclotomicTable {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1);
        let mut polys: Vec<(usize, IntPolynomial)> = Vec::new();
        for d in divisors(p) {
            let mut poly = IntPolynomial::x_pow_minus_one(d);
            for (e, phi) in &polys {
                if d % e == 0 {
                    poly = poly.div_rem(phi).expect("monic").0;
                }
            }
            polys.push((d, poly));
        }
        CyclotomicTable { p, polys }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, d: usize) -> Option<&IntPolynomial> {
        self.polys.iter().find(|(e, _)| *e == d).map(|(_, q)| q)
    }

    pub fn entries(&self) -> &[(usize, IntPolynomial)] {
        &self.polys
    }

    /// Divisors `d | p` with `Φ_d | p_η`.
    pub fn dividing(&self, eta: &BinaryVector) -> Vec<usize> {
        assert_eq!(eta.len(), self.p);
        let p_eta = IntPolynomial::from_binary(eta);
        self.polys
            .iter()
            .filter(|(_, phi)| p_eta.divisible_by(phi).expect("monic"))
            .map(|(d, _)| *d)
            .collect()
    }

    pub fn rank(&self, eta: &BinaryVector) -> CyclotomicRank {
        let dividing = self.dividing(eta);
        let lost: u64 = dividing.iter().map(|&d| totient(d as i64).expect("d >= 1")).sum();
        CyclotomicRank { rank: self.p - lost as usize, dividing }
    }

    /// Exact non-annihilated index set: `k` survives iff `Φ_{p/gcd(k,p)}` does not divide `p_η`.
    pub fn support(&self, eta: &BinaryVector) -> BTreeSet<usize> {
        let dividing = self.dividing(eta);
        (0..self.p).filter(|&k| !dividing.contains(&order_class(self.p, k))).collect()
    }
}

/// Order of `ρ^k` in the group of `p`-th roots of unity, `p / gcd(k, p)`.
pub fn order_class(p: usize, k: usize) -> usize {
    p / k.gcd(&p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclotomicRank {
    pub rank: usize,
    /// Divisors `d` of `p` with `Φ_d | p_η`, ascending.
    pub dividing: Vec<usize>,
}

pub fn rank_via_cyclotomic(eta: &BinaryVector) -> CyclotomicRank {
    CyclotomicTable::new(eta.len()).rank(eta)
}

/// Exact spectral support `K(η)` (complement of the annihilation set).
pub fn spectral_support(eta: &BinaryVector) -> BTreeSet<usize> {
    CyclotomicTable::new(eta.len()).support(eta)
}

/// `M_p`, the number of binary vectors of length `p` with minimal period `p`.
pub fn count_min_period(p: u32) -> u128 {
    assert!(p >= 1 && p < 128);
    let primes = prime_factors(p as u64);
    let mut total: i128 = 0;
    for mask in 0u32..(1 << primes.len()) {
        let prod: u64 = (0..primes.len()).filter(|i| mask >> i & 1 == 1).map(|i| primes[i]).product();
        let term = 1i128 << (p as u64 / prod);
        if mask.count_ones() % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total as u128
}

/// True if `bits` is the smallest rotation in its loop and has minimal period `p`.
fn is_loop_representative(bits: u32, p: usize) -> bool {
    let mask = if p == 32 { u32::MAX } else { (1u32 << p) - 1 };
    let mut r = bits;
    for _ in 1..p {
        r = ((r >> 1) | (r << (p - 1))) & mask;
        if r <= bits {
            return false;
        }
    }
    true
}

/// Representatives (one per loop) of the vectors of length `p` that are not repetitions.
pub fn loop_representatives(p: usize) -> Vec<BinaryVector> {
    assert!(p >= 1 && p <= 24);
    if p == 1 {
        return vec![BinaryVector::from_bits(0, 1), BinaryVector::from_bits(1, 1)];
    }
    (0u32..1 << p)
        .filter(|&b| is_loop_representative(b, p))
        .map(|b| BinaryVector::from_bits(b as u64, p))
        .collect()
}

/// Attained ranks over non-repetition vectors of length `p`.
pub fn attained_ranks(p: usize) -> BTreeSet<usize> {
    let table = CyclotomicTable::new(p);
    let chunk = if p == 1 { 2 } else { 1u32 << p.saturating_sub(8) };
    let total: u32 = if p == 1 { 2 } else { 1 << p };
    let starts: Vec<u32> = (0..total).step_by(chunk as usize).collect();
    starts
        .par_iter()
        .map(|&start| {
            let mut set = BTreeSet::new();
            for b in start..(start + chunk).min(total) {
                let rep = if p == 1 { true } else { is_loop_representative(b, p) };
                if rep {
                    set.insert(table.rank(&BinaryVector::from_bits(b as u64, p)).rank);
                }
            }
            set
        })
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        })
}

/// `p ↦ N_p(X_p)` for `1 ≤ p ≤ p_max`.
pub fn np_table(p_max: usize) -> Result<BTreeMap<usize, BTreeSet<usize>>, SpectraError> {
    if p_max > 22 {
        return Err(SpectraError::TooLarge(p_max));
    }
    Ok((1..=p_max).map(|p| (p, attained_ranks(p))).collect())
}

/// Compresses a sorted set into `a–b` runs, e.g. `6–12` or `7,9,11`.
fn compress_runs(values: &BTreeSet<usize>) -> String {
    let v: Vec<usize> = values.iter().copied().collect();
    let mut parts = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[j] + 1 {
            j += 1;
        }
        if j >= i + 2 {
            parts.push(format!("{}–{}", v[i], v[j]));
        } else {
            for x in &v[i..=j] {
                parts.push(x.to_string());
            }
        }
        i = j + 1;
    }
    parts.join(",")
}

/// Human-readable table, one `p: values` line per row.
pub fn format_table(table: &BTreeMap<usize, BTreeSet<usize>>) -> String {
    table.iter().map(|(p, set)| format!("{p:>3}: {}\n", compress_runs(set))).collect()
}

/// Machine-readable rows `p,N1,N2,…`.
pub fn format_table_csv(table: &BTreeMap<usize, BTreeSet<usize>>) -> String {
    table
        .iter()
        .map(|(p, set)| {
            let mut row = p.to_string();
            for n in set {
                row.push(',');
                row.push_str(&n.to_string());
            }
            row.push('\n');
            row
        })
        .collect()
}
