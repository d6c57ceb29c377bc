//! Binary cycle matrices, the cyclic shift, loops and standard-form sorting.
//!
//! Rows are indexed from 0. A shift by `k` is the left rotation
//! `(η_1, …, η_p) ↦ (η_{1+k}, …, η_{p+k})`, i.e. right multiplication by `P^k`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BinmatError {
    #[error("binary vector must have at least one entry")]
    Empty,
    #[error("entry {value} at position {index} is not +1 or -1")]
    BadEntry { index: usize, value: i64 },
    #[error("cycle matrix needs at least one row")]
    NoRows,
    #[error("row {row} has length {found}, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("matrix is not in standard form")]
    NotStandardForm,
    #[error("expected {expected} group ranks, got {found}")]
    RankCount { expected: usize, found: usize },
}

/// A row vector with entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct BinaryVector {
    entries: Vec<i8>,
}

impl TryFrom<Vec<i8>> for BinaryVector {
    type Error = BinmatError;
    fn try_from(v: Vec<i8>) -> Result<Self, BinmatError> {
        BinaryVector::new(v)
    }
}

impl From<BinaryVector> for Vec<i8> {
    fn from(v: BinaryVector) -> Vec<i8> {
        v.entries
    }
}

impl BinaryVector {
    pub fn new(entries: Vec<i8>) -> Result<Self, BinmatError> {
        if entries.is_empty() {
            return Err(BinmatError::Empty);
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, &e)| e != 1 && e != -1) {
            return Err(BinmatError::BadEntry { index, value: value as i64 });
        }
        Ok(BinaryVector { entries })
    }

    pub fn from_i64(entries: &[i64]) -> Result<Self, BinmatError> {
        let mut out = Vec::with_capacity(entries.len());
        for (index, &value) in entries.iter().enumerate() {
            match value {
                1 => out.push(1),
                -1 => out.push(-1),
                _ => return Err(BinmatError::BadEntry { index, value }),
            }
        }
        BinaryVector::new(out)
    }

    /// Parses a sign string such as `"++-"`; whitespace is ignored and the
    /// Unicode minus sign is accepted.
    pub fn parse(s: &str) -> Result<Self, BinmatError> {
        let mut out = Vec::new();
        for (col, ch) in s.chars().enumerate() {
            match ch {
                '+' => out.push(1),
                '-' | '−' => out.push(-1),
                c if c.is_whitespace() || c == ',' => {}
                c => {
                    return Err(BinmatError::Parse {
                        line: 1,
                        msg: format!("illegal character {c:?} at column {}", col + 1),
                    })
                }
            }
        }
        BinaryVector::new(out)
    }

    /// Builds a vector from bits: bit `j` set means entry `j` is +1.
    pub fn from_bits(bits: u64, p: usize) -> Self {
        assert!(p >= 1 && p <= 64);
        let entries = (0..p).map(|j| if bits >> j & 1 == 1 { 1 } else { -1 }).collect();
        BinaryVector { entries }
    }

    pub fn constant(p: usize, sign: i8) -> Self {
        BinaryVector::new(vec![sign; p]).expect("p >= 1 and sign is ±1")
    }

    pub fn alternating(p: usize) -> Self {
        BinaryVector::new((0..p).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect())
            .expect("p >= 1")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn to_i64(&self) -> Vec<i64> {
        self.entries.iter().map(|&e| e as i64).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&e| e as f64).collect()
    }

    /// `ηP^k`, the left rotation by `k mod p`.
    pub fn shift(&self, k: i64) -> Self {
        let p = self.len() as i64;
        let k = k.rem_euclid(p) as usize;
        let mut entries = Vec::with_capacity(self.len());
        entries.extend_from_slice(&self.entries[k..]);
        entries.extend_from_slice(&self.entries[..k]);
        BinaryVector { entries }
    }

    pub fn neg(&self) -> Self {
        BinaryVector { entries: self.entries.iter().map(|e| -e).collect() }
    }

    pub fn concat(&self, other: &BinaryVector) -> Self {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        BinaryVector { entries }
    }

    /// The distinct shifts `{ηP^ν}` in order of first appearance.
    pub fn loop_of(&self) -> Vec<BinaryVector> {
        let period = self.minimal_period();
        (0..period).map(|k| self.shift(k as i64)).collect()
    }

    pub fn loop_size(&self) -> usize {
        self.minimal_period()
    }

    /// Smallest `m ≥ 1` with `ηP^m = η`; always divides `p`.
    pub fn minimal_period(&self) -> usize {
        let p = self.len();
        (1..=p)
            .filter(|m| p % m == 0)
            .find(|&m| (0..p).all(|j| self.entries[j] == self.entries[(j + m) % p]))
            .unwrap_or(p)
    }

    /// True when `η` is a concatenation of copies of a shorter block.
    pub fn is_repetition(&self) -> bool {
        self.minimal_period() < self.len()
    }

    /// Smallest `k ≥ 0` with `ηP^k = other`.
    pub fn exponent_to(&self, other: &BinaryVector) -> Option<usize> {
        if other.len() != self.len() {
            return None;
        }
        (0..self.minimal_period()).find(|&k| self.shift(k as i64) == *other)
    }

    pub fn in_loop_of(&self, generator: &BinaryVector) -> bool {
        generator.exponent_to(self).is_some()
    }

    /// `−η ∈ L_η`.
    pub fn is_antisymmetric_loop(&self) -> bool {
        self.neg().in_loop_of(self)
    }

    /// Lexicographically smallest rotation, with `-` ordered before `+`.
    pub fn canonical_rotation(&self) -> BinaryVector {
        self.loop_of().into_iter().min().expect("loop is non-empty")
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.entries {
            f.write_str(if e > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// The cycle Σ: `N` binary rows of common length `p`. Column `μ` is pattern ξ^(μ+1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleMatrix {
    rows: Vec<BinaryVector>,
}

impl CycleMatrix {
    pub fn new(rows: Vec<BinaryVector>) -> Result<Self, BinmatError> {
        let first = rows.first().ok_or(BinmatError::NoRows)?;
        let p = first.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(BinmatError::Ragged { row: i, expected: p, found: r.len() });
            }
        }
        Ok(CycleMatrix { rows })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self, BinmatError> {
        let rows = rows.iter().map(|r| BinaryVector::from_i64(r)).collect::<Result<Vec<_>, _>>()?;
        CycleMatrix::new(rows)
    }

    /// Convenience constructor from sign strings.
    pub fn from_strs(rows: &[&str]) -> Result<Self, BinmatError> {
        let rows = rows.iter().map(|r| BinaryVector::parse(r)).collect::<Result<Vec<_>, _>>()?;
        CycleMatrix::new(rows)
    }

    /// Parses the cycle text format: one row per line, `+` and `-`/`−`
    /// characters, optional whitespace, `#` comments, blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, BinmatError> {
        let mut rows: Vec<BinaryVector> = Vec::new();
        let mut expected: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let mut entries = Vec::new();
            for (col, ch) in raw.chars().enumerate() {
                match ch {
                    '+' => entries.push(1),
                    '-' | '−' => entries.push(-1),
                    c if c.is_whitespace() => {}
                    c => {
                        return Err(BinmatError::Parse {
                            line,
                            msg: format!("illegal character {c:?} at column {}", col + 1),
                        })
                    }
                }
            }
            match expected {
                None => expected = Some(entries.len()),
                Some(p) if p != entries.len() => {
                    return Err(BinmatError::Parse {
                        line,
                        msg: format!("row has length {}, expected {p}", entries.len()),
                    })
                }
                _ => {}
            }
            rows.push(BinaryVector { entries });
        }
        if rows.is_empty() {
            return Err(BinmatError::Parse { line: 0, msg: "no rows found".into() });
        }
        CycleMatrix::new(rows)
    }

    /// Text form accepted by [`CycleMatrix::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn period(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[BinaryVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BinaryVector {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.rows[i].entries[j]
    }

    /// Pattern ξ^(μ+1) as a column.
    pub fn column(&self, mu: usize) -> Vec<i8> {
        self.rows.iter().map(|r| r.entries[mu]).collect()
    }

    pub fn to_i64(&self) -> Vec<Vec<i64>> {
        self.rows.iter().map(|r| r.to_i64()).collect()
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n_rows(), self.period(), |i, j| self.get(i, j) as f64)
    }

    /// `ΣP^k`.
    pub fn shifted(&self, k: i64) -> CycleMatrix {
        CycleMatrix { rows: self.rows.iter().map(|r| r.shift(k)).collect() }
    }

    /// Row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> CycleMatrix {
        CycleMatrix { rows: perm.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    /// Stacks `self` on top of `other` (same period required).
    pub fn vstack(&self, other: &CycleMatrix) -> Result<CycleMatrix, BinmatError> {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        CycleMatrix::new(rows)
    }

    /// Pairs `(i, j)`, `i < j`, of identical rows.
    pub fn duplicate_rows(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_rows() {
            for j in i + 1..self.n_rows() {
                if self.rows[i] == self.rows[j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn has_duplicate_rows(&self) -> bool {
        !self.duplicate_rows().is_empty()
    }
}

/// Position of a row inside its loop group: `row = sign · generator·P^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub row: usize,
    pub exponent: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopGroup {
    pub generator: usize,
    /// Members in row order; the generator comes first.
    pub members: Vec<Placement>,
}

impl LoopGroup {
    pub fn rows(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.row).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopDecomposition {
    pub groups: Vec<LoopGroup>,
    pub duplicate_rows: Vec<(usize, usize)>,
}

impl LoopDecomposition {
    pub fn generators(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.generator).collect()
    }

    /// Group index of every row.
    pub fn labels(&self, n_rows: usize) -> Vec<usize> {
        let mut labels = vec![usize::MAX; n_rows];
        for (g, group) in self.groups.iter().enumerate() {
            for m in &group.members {
                labels[m.row] = g;
            }
        }
        labels
    }
}

/// Placement of `row` relative to `gen`, if it lies in the generator's group.
/// The smallest exponent wins; a negative sign is only used when `−gen ∈ L_gen`.
fn place(gen: &BinaryVector, row: &BinaryVector, antisym: bool) -> Option<(usize, i8)> {
    let plus = gen.exponent_to(row).map(|k| (k, 1i8));
    let minus = if antisym { gen.exponent_to(&row.neg()).map(|k| (k, -1i8)) } else { None };
    match (plus, minus) {
        (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Groups rows by loop membership; the generator of a group is its smallest row index.
pub fn decompose(sigma: &CycleMatrix) -> LoopDecomposition {
    let mut groups: Vec<LoopGroup> = Vec::new();
    let mut antisym: Vec<bool> = Vec::new();
    for (i, row) in sigma.rows().iter().enumerate() {
        let found = groups.iter().zip(&antisym).enumerate().find_map(|(g, (group, &a))| {
            place(sigma.row(group.generator), row, a).map(|pl| (g, pl))
        });
        match found {
            Some((g, (exponent, sign))) => {
                groups[g].members.push(Placement { row: i, exponent, sign })
            }
            None => {
                antisym.push(row.is_antisymmetric_loop());
                groups.push(LoopGroup {
                    generator: i,
                    members: vec![Placement { row: i, exponent: 0, sign: 1 }],
                });
            }
        }
    }
    LoopDecomposition { groups, duplicate_rows: sigma.duplicate_rows() }
}

/// Reorders rows so that groups are contiguous, in generator order, each sorted by
/// ascending shift exponent. Returns `(perm, sorted)` with `sorted.row(i) = sigma.row(perm[i])`.
pub fn standard_form(sigma: &CycleMatrix) -> (Vec<usize>, CycleMatrix) {
    let dec = decompose(sigma);
    let mut perm = Vec::with_capacity(sigma.n_rows());
    for g in &dec.groups {
        let mut members = g.members.clone();
        members.sort_by_key(|m| (m.exponent, m.row));
        perm.extend(members.iter().map(|m| m.row));
    }
    let sorted = sigma.permute_rows(&perm);
    (perm, sorted)
}

pub fn is_standard_form(sigma: &CycleMatrix) -> bool {
    let (perm, _) = standard_form(sigma);
    perm.iter().enumerate().all(|(i, &j)| i == j)
}

/// True iff within each group the shift exponents are exactly `0, 1, …, rank−1`.
/// `ranks[g]` is the rank of group `g`'s generator.
pub fn is_consecutive(sigma: &CycleMatrix, ranks: &[usize]) -> Result<bool, BinmatError> {
    if !is_standard_form(sigma) {
        return Err(BinmatError::NotStandardForm);
    }
    let dec = decompose(sigma);
    if ranks.len() != dec.groups.len() {
        return Err(BinmatError::RankCount { expected: dec.groups.len(), found: ranks.len() });
    }
    Ok(dec.groups.iter().zip(ranks).all(|(g, &r)| {
        let exps: BTreeSet<usize> = g.members.iter().map(|m| m.exponent).collect();
        g.members.len() == r && exps == (0..r).collect()
    }))
}
