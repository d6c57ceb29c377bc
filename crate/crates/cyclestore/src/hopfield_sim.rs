//! Graded-response network `u̇ = −u + J̃ tanh(λu)` and its delayed variant
//! `u̇ = −u + C0β_K J⁰ tanh(λu) + C1β_K J tanh(λu(t−τ))`, integrated with classical RK4.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admit;
use crate::binmat::CycleMatrix;
use crate::learn;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HopfieldError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initial state has length {found}, expected {expected}")]
    InitialLength { expected: usize, found: usize },
    #[error(transparent)]
    Learn(#[from] learn::LearnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfieldConfig {
    pub lambda: f64,
    pub c0: f64,
    /// `β = λβ_K`.
    pub beta: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Delay on the transition term; `0` gives the undelayed system.
    pub tau: f64,
    /// `u(0)`; when absent, `atanh(0.9 ξ^(1))/λ` plus seeded uniform noise.
    pub initial: Option<Vec<f64>>,
    pub seed: u64,
    pub noise: f64,
    /// Keep every `sample_every`-th step.
    pub sample_every: usize,
}

impl Default for HopfieldConfig {
    fn default() -> Self {
        HopfieldConfig {
            lambda: 4.0,
            c0: 0.6,
            beta: 4.0,
            dt: 0.01,
            t_max: 100.0,
            tau: 0.0,
            initial: None,
            seed: 0,
            noise: 0.01,
            sample_every: 1,
        }
    }
}

impl HopfieldConfig {
    pub fn validate(&self) -> Result<usize, HopfieldError> {
        let bad = |m: &str| Err(HopfieldError::Config(m.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive");
        }
        if !(self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        if !(0.0..=1.0).contains(&self.c0) {
            return bad("C0 must lie in [0, 1]");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if !(self.tau >= 0.0) {
            return bad("tau must be non-negative");
        }
        let lag = (self.tau / self.dt).round();
        if self.tau > 0.0 && ((lag * self.dt - self.tau).abs() > 1e-9 * self.tau.max(1.0) || lag < 1.0) {
            return bad("tau must be a positive integer multiple of dt");
        }
        Ok(lag as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub success: bool,
    pub cycles: usize,
    /// Mean time between entries into pattern 1.
    pub period: Option<f64>,
    /// Compressed sequence of dominant patterns after the transient.
    pub sequence: Vec<usize>,
    /// Time at which each sequence element was first dominant.
    pub entry_times: Vec<f64>,
    pub in_order: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// `m[t][ν]`.
    pub overlaps: Vec<Vec<f64>>,
    pub admissible: bool,
    pub retrieval: Option<Retrieval>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.u.last().map(|x| x.as_slice()).unwrap_or(&[])
    }
}

/// `u(0) = atanh(0.9 ξ^(1))/λ + U(−noise, noise)`.
pub fn default_initial_state(sigma: &CycleMatrix, lambda: f64, seed: u64, noise: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sigma
        .column(0)
        .iter()
        .map(|&x| {
            let base = (0.9 * x as f64).atanh() / lambda;
            if noise > 0.0 {
                base + rng.gen_range(-noise..noise)
            } else {
                base
            }
        })
        .collect()
}

/// `m^(ν) = (1/N) Σ_i v_i ξ_i^(ν)`.
pub fn overlaps(v: &[f64], sigma: &CycleMatrix) -> Vec<f64> {
    let n = sigma.n_rows();
    assert_eq!(v.len(), n, "state length must equal N");
    (0..sigma.period())
        .map(|nu| (0..n).map(|i| v[i] * sigma.get(i, nu) as f64).sum::<f64>() / n as f64)
        .collect()
}

fn gain(u: &DVector<f64>, lambda: f64) -> DVector<f64> {
    u.map(|x| (lambda * x).tanh())
}

/// Integrates with explicit `J⁰`, `J`; `J̃ = β_K(C0 J⁰ + (1−C0)J)` with `β_K = β/λ`.
pub fn simulate_matrices(
    sigma: &CycleMatrix,
    j0: &DMatrix<f64>,
    j: &DMatrix<f64>,
    cfg: &HopfieldConfig,
) -> Result<Trajectory, HopfieldError> {
    let lag = cfg.validate()?;
    let n = sigma.n_rows();
    let u0 = match &cfg.initial {
        Some(u) if u.len() != n => return Err(HopfieldError::InitialLength { expected: n, found: u.len() }),
        Some(u) => u.clone(),
        None => default_initial_state(sigma, cfg.lambda, cfg.seed, cfg.noise),
    };
    let beta_k = cfg.beta / cfg.lambda;
    let lambda = cfg.lambda;
    let steps = (cfg.t_max / cfg.dt).round() as usize;
    let dt = cfg.dt;

    let mut times = Vec::new();
    let mut us = Vec::new();
    let mut record = |k: usize, u: &DVector<f64>| {
        if k % cfg.sample_every == 0 || k == steps {
            times.push(k as f64 * dt);
            us.push(u.iter().copied().collect::<Vec<f64>>());
        }
    };

    let mut u = DVector::from_vec(u0);
    record(0, &u);
    if lag == 0 {
        let jt = learn::blend(j0, j, cfg.c0, beta_k)?;
        let f = |x: &DVector<f64>| -x + &jt * gain(x, lambda);
        for k in 0..steps {
            let k1 = f(&u);
            let k2 = f(&(&u + &k1 * (dt / 2.0)));
            let k3 = f(&(&u + &k2 * (dt / 2.0)));
            let k4 = f(&(&u + &k3 * dt));
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            record(k + 1, &u);
        }
    } else {
        let a = j0 * (cfg.c0 * beta_k);
        let b = j * ((1.0 - cfg.c0) * beta_k);
        // History u and u̇ on the grid; u(t) = u(0) for t ≤ 0.
        let mut hist_u: Vec<DVector<f64>> = vec![u.clone()];
        let mut hist_f: Vec<DVector<f64>> = Vec::new();
        let delayed = |hu: &[DVector<f64>], idx: isize| -> DVector<f64> {
            if idx <= 0 {
                hu[0].clone()
            } else {
                hu[idx as usize].clone()
            }
        };
        let delayed_f = |hf: &[DVector<f64>], idx: isize| -> DVector<f64> {
            if idx < 0 {
                DVector::zeros(n)
            } else {
                hf[idx as usize].clone()
            }
        };
        let rhs = |x: &DVector<f64>, xd: &DVector<f64>| -x + &a * gain(x, lambda) + &b * gain(xd, lambda);
        for k in 0..steps {
            let i0 = k as isize - lag as isize;
            let d0 = delayed(&hist_u, i0);
            let d1 = delayed(&hist_u, i0 + 1);
            let k1 = rhs(&u, &d0);
            hist_f.push(k1.clone());
            // Cubic Hermite at the half step between d0 and d1.
            let dmid = if i0 + 1 <= 0 {
                d0.clone()
            } else {
                let f0 = delayed_f(&hist_f, i0);
                let f1 = delayed_f(&hist_f, i0 + 1);
                (&d0 + &d1) * 0.5 + (f0 - f1) * (dt / 8.0)
            };
            let k2 = rhs(&(&u + &k1 * (dt / 2.0)), &dmid);
            let k3 = rhs(&(&u + &k2 * (dt / 2.0)), &dmid);
            let k4 = rhs(&(&u + &k3 * dt), &d1);
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            hist_u.push(u.clone());
            record(k + 1, &u);
        }
    }

    let v: Vec<Vec<f64>> = us.iter().map(|x| x.iter().map(|&y| (lambda * y).tanh()).collect()).collect();
    let m: Vec<Vec<f64>> = v.iter().map(|x| overlaps(x, sigma)).collect();
    let admissible = admit::is_admissible(sigma).map(|r| r.admissible).unwrap_or(false);
    Ok(Trajectory { times, u: us, v, overlaps: m, admissible, retrieval: None })
}

/// Learns `J⁰`, `J` from Σ and integrates. Inadmissible cycles are simulated anyway;
/// the trajectory's `admissible` flag records the verdict.
pub fn simulate(sigma: &CycleMatrix, cfg: &HopfieldConfig) -> Result<Trajectory, HopfieldError> {
    let j0 = learn::learn_j0(sigma);
    let j = learn::learn_j(sigma);
    simulate_matrices(sigma, &j0, &j, cfg)
}

/// Cyclic retrieval check on overlap samples; see [`Retrieval`].
///
/// The first 25% of samples are discarded. Samples whose largest overlap is below
/// `threshold` are skipped, consecutive repeats are merged, and the remaining sequence
/// must advance by one pattern (mod `p`) at every step for at least `min_cycles` cycles.
pub fn detect_retrieval(times: &[f64], overlaps: &[Vec<f64>], threshold: f64, min_cycles: usize) -> Retrieval {
    let p = overlaps.first().map_or(0, |m| m.len());
    let start = overlaps.len() / 4;
    let mut sequence: Vec<usize> = Vec::new();
    let mut entry_times = Vec::new();
    for (t, m) in times.iter().zip(overlaps).skip(start) {
        let (best, val) = m.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
        if val < threshold {
            continue;
        }
        if sequence.last() != Some(&best) {
            sequence.push(best);
            entry_times.push(*t);
        }
    }
    let in_order = p > 0 && sequence.windows(2).all(|w| w[1] == (w[0] + 1) % p);
    let transitions = sequence.len().saturating_sub(1);
    let cycles = if p > 0 { transitions / p } else { 0 };
    let returns: Vec<f64> = sequence.iter().zip(&entry_times).filter(|(&s, _)| s == 0).map(|(_, &t)| t).collect();
    let period = (returns.len() >= 2).then(|| (returns[returns.len() - 1] - returns[0]) / (returns.len() - 1) as f64);
    let visited_all = (0..p).all(|nu| sequence.contains(&nu));
    let success = p > 1 && in_order && visited_all && cycles >= min_cycles.max(1);
    Retrieval { success, cycles, period, sequence, entry_times, in_order }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_neuron() -> CycleMatrix {
        CycleMatrix::from_strs(&["+++---", "++---+", "+---++"]).unwrap()
    }

    #[test]
    fn overlap_extremes() {
        let s = three_neuron();
        let xi: Vec<f64> = s.column(2).iter().map(|&x| x as f64).collect();
        assert!((overlaps(&xi, &s)[2] - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        assert!((overlaps(&neg, &s)[2] + 1.0).abs() < 1e-15);
        assert!(overlaps(&[0.0; 3], &s).iter().all(|&m| m == 0.0));
    }

    #[test]
    fn zero_connectivity_decays() {
        let s = three_neuron();
        let z = DMatrix::zeros(3, 3);
        let cfg = HopfieldConfig { t_max: 5.0, initial: Some(vec![1.0, -2.0, 0.5]), ..Default::default() };
        let tr = simulate_matrices(&s, &z, &z, &cfg).unwrap();
        let e5 = (-5.0f64).exp();
        for (got, want) in tr.final_state().iter().zip([1.0, -2.0, 0.5]) {
            assert!((got - want * e5).abs() < 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let s = three_neuron();
        let cfg = HopfieldConfig { tau: 0.015, dt: 0.01, ..Default::default() };
        assert!(matches!(simulate(&s, &cfg), Err(HopfieldError::Config(_))));
        let cfg = HopfieldConfig { initial: Some(vec![0.0; 2]), ..Default::default() };
        assert!(matches!(simulate(&s, &cfg), Err(HopfieldError::InitialLength { .. })));
        let cfg = HopfieldConfig { dt: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_trajectory_is_not_retrieval() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let m = vec![vec![0.0; 6]; 100];
        assert!(!detect_retrieval(&times, &m, 0.8, 1).success);
    }

    #[test]
    fn synthetic_sequence_retrieved() {
        let p = 4;
        let times: Vec<f64> = (0..400).map(|k| k as f64).collect();
        let m: Vec<Vec<f64>> = (0..400).map(|k| (0..p).map(|nu| if (k / 10) % p == nu { 1.0 } else { 0.0 }).collect()).collect();
        let r = detect_retrieval(&times, &m, 0.8, 3);
        assert!(r.success);
        assert!((r.period.unwrap() - 40.0).abs() < 1e-12);
    }
}
