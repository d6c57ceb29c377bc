//! Passive integrate-and-fire neurons with a cubic plateau current and delayed,
//! sign-split synaptic gating.
//!
//! Units: mV, ms, nF/mm², µS/mm², nA/mm².

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binmat::CycleMatrix;
use crate::hopfield_sim::{self, Retrieval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpikingError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("connectivity is {rows}x{cols}; it must be square")]
    NotSquare { rows: usize, cols: usize },
    #[error("kick pattern has length {found}, expected {expected}")]
    KickLength { expected: usize, found: usize },
}

/// Sign convention of the gating equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GatingSigns {
    /// `ds/dt = α_E(s − 10D_E)`, `dx/dt = α_I(x − 10D_I)`, `dy/dt = β_I(y + 10D_I)`.
    Verbatim,
    /// The same right-hand sides negated, so each variable relaxes towards its drive.
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PifParams {
    pub c_m: f64,
    pub theta: f64,
    pub v_reset: f64,
    pub dt: f64,
    pub t_refr: f64,
    pub g_l: f64,
    pub e_l: f64,
    pub g_nl: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub delta: f64,
    pub g_syn_e: f64,
    pub e_syn_e: f64,
    pub alpha_e: f64,
    pub v_thr: f64,
    pub tau: f64,
    pub g_syn_i: f64,
    pub e_syn_i: f64,
    pub alpha_i: f64,
    pub beta_i: f64,
    pub signs: GatingSigns,
    /// Current injected into the kicked neurons at the start of the run.
    pub kick_amplitude: f64,
    pub kick_duration: f64,
    /// Keep every `record_every`-th step of the state samples.
    pub record_every: usize,
}

impl Default for PifParams {
    fn default() -> Self {
        PifParams {
            c_m: 20.0,
            theta: -45.0,
            v_reset: -55.0,
            dt: 0.005,
            t_refr: 1.0,
            g_l: 1.0,
            e_l: -68.0,
            g_nl: 0.03,
            e1: -72.0,
            e2: -58.0,
            e3: -44.0,
            delta: -31.685,
            g_syn_e: 68.0,
            e_syn_e: -120.0,
            alpha_e: 1.0,
            v_thr: -45.0,
            tau: 10.0,
            g_syn_i: 118.0,
            e_syn_i: -120.0,
            alpha_i: 2.0,
            beta_i: 0.08,
            signs: GatingSigns::Verbatim,
            kick_amplitude: 600.0,
            kick_duration: 2.0,
            record_every: 20,
        }
    }
}

impl PifParams {
    fn steps_of(&self, t: f64, what: &str, positive: bool) -> Result<usize, SpikingError> {
        let k = (t / self.dt).round();
        if (k * self.dt - t).abs() > 1e-9 * t.abs().max(1.0) || (positive && k < 1.0) {
            return Err(SpikingError::Params(format!("{what} must be a {}integer multiple of dt", if positive { "positive " } else { "" })));
        }
        Ok(k as usize)
    }

    /// Delay and refractory period in steps.
    pub fn validate(&self) -> Result<(usize, usize), SpikingError> {
        if !(self.dt > 0.0) {
            return Err(SpikingError::Params("dt must be positive".into()));
        }
        if !(self.t_refr >= 0.0) {
            return Err(SpikingError::Params("t_refr must be non-negative".into()));
        }
        if !(self.c_m > 0.0) {
            return Err(SpikingError::Params("c_m must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(SpikingError::Params("record_every must be at least 1".into()));
        }
        let lag = self.steps_of(self.tau, "tau", true)?;
        let refr = (self.t_refr / self.dt).round() as usize;
        Ok((lag, refr))
    }

    /// `I_L + I_nl` at membrane potential `v`.
    pub fn intrinsic_current(&self, v: f64) -> f64 {
        self.g_l * (v - self.e_l) + self.g_nl * (v - self.e1) * (v - self.e2) * (v - self.e3) - self.delta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    /// Ordered spike times per neuron.
    pub spike_times: Vec<Vec<f64>>,
    pub sample_times: Vec<f64>,
    /// `v_samples[t][i]`.
    pub v_samples: Vec<Vec<f64>>,
    pub s_samples: Vec<Vec<f64>>,
    pub z_samples: Vec<Vec<f64>>,
    pub t_max: f64,
    /// First time a state variable became non-finite; integration stops there.
    pub diverged_at: Option<f64>,
}

/// Forward-Euler integration. Neurons with `kick[i]` receive `kick_amplitude` for the
/// first `kick_duration` ms; all start at `E_L` with zero gating.
pub fn simulate_pif(j: &DMatrix<f64>, params: &PifParams, t_max: f64, kick: &[bool]) -> Result<SpikeRecord, SpikingError> {
    let n = j.nrows();
    if j.ncols() != n {
        return Err(SpikingError::NotSquare { rows: n, cols: j.ncols() });
    }
    if kick.len() != n {
        return Err(SpikingError::KickLength { expected: n, found: kick.len() });
    }
    if !(t_max > 0.0) {
        return Err(SpikingError::Params("t_max must be positive".into()));
    }
    let (lag, refr_steps) = params.validate()?;
    let pr = params;
    let dt = pr.dt;
    let steps = (t_max / dt).round() as usize;
    let kick_steps = (pr.kick_duration / dt).round() as usize;
    let jp = j.map(|w| if w > 0.0 { w } else { 0.0 });
    let jn = j.map(|w| if w < 0.0 { w } else { 0.0 });

    let mut v = vec![pr.e_l; n];
    let mut s = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    // 0: free, 1: spike sample (V = 0) pending reset, 2..: clamped at V_reset.
    let mut phase = vec![0usize; n];
    let mut clamp_left = vec![0usize; n];
    // Ring buffer of Θ(V_j − V_thr) for the last `lag` steps; history before 0 is at rest.
    let mut above = vec![vec![false; n]; lag];

    let mut rec = SpikeRecord {
        spike_times: vec![Vec::new(); n],
        sample_times: Vec::new(),
        v_samples: Vec::new(),
        s_samples: Vec::new(),
        z_samples: Vec::new(),
        t_max,
        diverged_at: None,
    };
    let sample = |rec: &mut SpikeRecord, t: f64, v: &[f64], s: &[f64], x: &[f64], y: &[f64]| {
        rec.sample_times.push(t);
        rec.v_samples.push(v.to_vec());
        rec.s_samples.push(s.to_vec());
        rec.z_samples.push(x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect());
    };

    let mut drive = vec![0.0f64; n];
    let mut de = vec![0.0f64; n];
    let mut di = vec![0.0f64; n];
    for step in 0..steps {
        let t = step as f64 * dt;
        if step % pr.record_every == 0 {
            sample(&mut rec, t, &v, &s, &x, &y);
        }
        let delayed = &above[step % lag];
        for (i, d) in drive.iter_mut().enumerate() {
            *d = if delayed[i] { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            de[i] = (0..n).map(|k| jp[(i, k)] * drive[k]).sum::<f64>() * 10.0;
            di[i] = (0..n).map(|k| jn[(i, k)] * drive[k]).sum::<f64>() * 10.0;
        }
        let now_above: Vec<bool> = v.iter().map(|&vi| vi >= pr.v_thr).collect();
        let mut next_v = v.clone();
        for i in 0..n {
            let z = 0.5 * (x[i] + y[i]);
            let i_syn_e = pr.g_syn_e * s[i] * (v[i] - pr.e_syn_e);
            let i_syn_i = pr.g_syn_i * z * (v[i] - pr.e_syn_i);
            let i_ext = if kick[i] && step < kick_steps { pr.kick_amplitude } else { 0.0 };
            let dv = (-pr.intrinsic_current(v[i]) + i_syn_e + i_syn_i + i_ext) / pr.c_m;
            let (ds, dx, dy) = match pr.signs {
                GatingSigns::Verbatim => (
                    pr.alpha_e * (s[i] - de[i]),
                    pr.alpha_i * (x[i] - di[i]),
                    pr.beta_i * (y[i] + di[i]),
                ),
                GatingSigns::Corrected => (
                    -pr.alpha_e * (s[i] - de[i]),
                    -pr.alpha_i * (x[i] - di[i]),
                    -pr.beta_i * (y[i] + di[i]),
                ),
            };
            s[i] += dt * ds;
            x[i] += dt * dx;
            y[i] += dt * dy;
            match phase[i] {
                1 => {
                    next_v[i] = pr.v_reset;
                    phase[i] = 2;
                    clamp_left[i] = refr_steps;
                }
                2 => {
                    next_v[i] = pr.v_reset;
                    if clamp_left[i] == 0 {
                        phase[i] = 0;
                    } else {
                        clamp_left[i] -= 1;
                        if clamp_left[i] == 0 {
                            phase[i] = 0;
                        }
                    }
                }
                _ => {
                    if v[i] >= pr.theta {
                        next_v[i] = 0.0;
                        phase[i] = 1;
                        rec.spike_times[i].push(t);
                    } else {
                        next_v[i] = v[i] + dt * dv;
                    }
                }
            }
        }
        above[step % lag] = now_above;
        v = next_v;
        if v.iter().chain(&s).chain(&x).chain(&y).any(|a| !a.is_finite()) {
            rec.diverged_at = Some(t + dt);
            break;
        }
    }
    if rec.diverged_at.is_none() {
        sample(&mut rec, steps as f64 * dt, &v, &s, &x, &y);
    }
    Ok(rec)
}

/// Resting potentials of an isolated neuron: real roots of `I_L + I_nl = 0`, ascending.
pub fn rest_roots(params: &PifParams) -> Vec<f64> {
    let f = |v: f64| params.intrinsic_current(v);
    let mut roots = Vec::new();
    let (lo, hi, n) = (-150.0, 50.0, 20000);
    let h = (hi - lo) / n as f64;
    for k in 0..n {
        let (mut a, mut b) = (lo + k as f64 * h, lo + (k + 1) as f64 * h);
        if f(a) == 0.0 {
            roots.push(a);
            continue;
        }
        if f(a) * f(b) < 0.0 {
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if f(a) * f(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots
}

/// Centred sliding-window count: `R_i(t) = #{t' : |t' − t| ≤ window/2} / window` (spikes per ms).
pub fn firing_rate(spikes: &SpikeRecord, window: f64, times: &[f64]) -> Vec<Vec<f64>> {
    assert!(window > 0.0, "window must be positive");
    times
        .iter()
        .map(|&t| {
            spikes
                .spike_times
                .iter()
                .map(|train| {
                    let lo = train.partition_point(|&s| s < t - window / 2.0);
                    let hi = train.partition_point(|&s| s <= t + window / 2.0);
                    (hi - lo) as f64 / window
                })
                .collect()
        })
        .collect()
}

/// `v_i = 2R_i/max R_i − 1` (or −1 for a silent neuron), and overlaps with Σ's patterns.
pub fn normalized_rates_and_overlaps(rates: &[Vec<f64>], sigma: &CycleMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = sigma.n_rows();
    let max: Vec<f64> = (0..n).map(|i| rates.iter().map(|r| r[i]).fold(0.0, f64::max)).collect();
    let v: Vec<Vec<f64>> = rates
        .iter()
        .map(|r| (0..n).map(|i| if max[i] > 0.0 { 2.0 * r[i] / max[i] - 1.0 } else { -1.0 }).collect())
        .collect();
    let m = v.iter().map(|vi| hopfield_sim::overlaps(vi, sigma)).collect();
    (v, m)
}

/// Mean length of the cyclic runs of `+` in a row.
pub fn mean_up_run(row: &[i8]) -> Option<f64> {
    let p = row.len();
    if row.iter().all(|&e| e > 0) {
        return Some(p as f64);
    }
    let start = row.iter().position(|&e| e < 0)?;
    let mut runs = Vec::new();
    let mut len = 0;
    for k in 1..=p {
        if row[(start + k) % p] > 0 {
            len += 1;
        } else if len > 0 {
            runs.push(len);
            len = 0;
        }
    }
    if runs.is_empty() {
        None
    } else {
        Some(runs.iter().sum::<usize>() as f64 / runs.len() as f64)
    }
}

/// Spike bursts: maximal groups with consecutive gaps at most `gap`.
pub fn bursts(train: &[f64], gap: f64) -> Vec<(f64, f64, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < train.len() {
        let mut k = i;
        while k + 1 < train.len() && train[k + 1] - train[k] <= gap {
            k += 1;
        }
        out.push((train[i], train[k], k - i + 1));
        i = k + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellSummary {
    /// Mean of burst span over the neuron's up-run length, over bursts of ≥ 2 spikes
    /// that start after `t_min`.
    pub burst_dwell: Option<f64>,
    pub bursts_used: usize,
    /// Retrieval period over `p` from the overlap sequence.
    pub sequence_dwell: Option<f64>,
    pub retrieval: Retrieval,
}

pub fn dwell_summary(
    rec: &SpikeRecord,
    sigma: &CycleMatrix,
    window: f64,
    burst_gap: f64,
    t_min: f64,
    threshold: f64,
    min_cycles: usize,
) -> DwellSummary {
    let mut spans = Vec::new();
    for (i, train) in rec.spike_times.iter().enumerate() {
        let Some(run) = mean_up_run(sigma.row(i).entries()) else { continue };
        for (a, b, count) in bursts(train, burst_gap) {
            if count >= 2 && a >= t_min {
                spans.push((b - a) / run);
            }
        }
    }
    let burst_dwell = (!spans.is_empty()).then(|| spans.iter().sum::<f64>() / spans.len() as f64);
    let times = &rec.sample_times;
    let rates = firing_rate(rec, window, times);
    let (_, m) = normalized_rates_and_overlaps(&rates, sigma);
    let retrieval = hopfield_sim::detect_retrieval(times, &m, threshold, min_cycles);
    let sequence_dwell = retrieval.period.map(|t| t / sigma.period() as f64);
    DwellSummary { burst_dwell, bursts_used: spans.len(), sequence_dwell, retrieval }
}
