//! Command-line driver.
//!
//! Exit codes: 0 success, 1 domain or I/O error, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::admit::{self, AdmissibilityReport, Classification};
use crate::binmat::{self, BinaryVector, CycleMatrix};
use crate::hopfield_sim::{self, HopfieldConfig, Retrieval};
use crate::learn;
use crate::spectra;
use crate::spiking_sim::{self, DwellSummary, GatingSigns, PifParams};
use crate::topo::{self, ClusterStructure, CompanionForm};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "cyclestore", version, about = "Store binary cycles in recurrent networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility report, classification and topology summary.
    Analyze(AnalyzeArgs),
    /// Print the classification label only.
    Classify(CommonArgs),
    /// Write J0, J and Jt as CSV and report residuals.
    Learn(LearnArgs),
    /// Write the network graph as GraphViz DOT.
    Topology(TopologyArgs),
    /// Integrate the graded-response network.
    Simulate(SimulateArgs),
    /// Integrate the spiking network built from J.
    Spiking(SpikingArgs),
    /// Attained ranks of non-repetition vectors for each period.
    Table(TableArgs),
    /// Rank and cyclotomic factors of one sign vector.
    Rank(RankArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Cycle file: one row per line of '+'/'-' characters.
    pub file: PathBuf,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Zero threshold for graph edges.
    #[arg(long, default_value_t = topo::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    pub c0: f64,
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 4.0)]
    pub lambda: f64,
    /// Output directory for J0.csv, J.csv, Jt.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = topo::DEFAULT_TOL)]
    pub tol: f64,
    /// Keep self-connections.
    #[arg(long = "self")]
    pub include_self: bool,
    /// Also draw the edges of J0 (dashed).
    #[arg(long)]
    pub include_j0: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    pub c0: f64,
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 4.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 100.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    #[arg(long, default_value_t = 3)]
    pub min_cycles: usize,
    #[arg(long, default_value_t = 1)]
    pub sample_every: usize,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the summary as JSON instead of CSV output.
    #[arg(long, conflicts_with = "out")]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SpikingArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 400.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 5.0)]
    pub window: f64,
    /// Use the relaxing sign convention for the gating equations.
    #[arg(long)]
    pub corrected_signs: bool,
    #[arg(long, default_value_t = 20.0)]
    pub c_m: f64,
    #[arg(long, default_value_t = -45.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = -55.0, allow_hyphen_values = true)]
    pub v_reset: f64,
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_refr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g_l: f64,
    #[arg(long, default_value_t = -68.0, allow_hyphen_values = true)]
    pub e_l: f64,
    #[arg(long, default_value_t = 0.03)]
    pub g_nl: f64,
    #[arg(long, default_value_t = -72.0, allow_hyphen_values = true)]
    pub e1: f64,
    #[arg(long, default_value_t = -58.0, allow_hyphen_values = true)]
    pub e2: f64,
    #[arg(long, default_value_t = -44.0, allow_hyphen_values = true)]
    pub e3: f64,
    #[arg(long, default_value_t = -31.685, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 68.0)]
    pub g_syn_e: f64,
    #[arg(long, default_value_t = -120.0, allow_hyphen_values = true)]
    pub e_syn_e: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_e: f64,
    #[arg(long, default_value_t = -45.0, allow_hyphen_values = true)]
    pub v_thr: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 118.0)]
    pub g_syn_i: f64,
    #[arg(long, default_value_t = -120.0, allow_hyphen_values = true)]
    pub e_syn_i: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha_i: f64,
    #[arg(long, default_value_t = 0.08)]
    pub beta_i: f64,
    #[arg(long, default_value_t = 600.0)]
    pub kick_amplitude: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kick_duration: f64,
    /// Steps between voltage samples.
    #[arg(long, default_value_t = 20)]
    pub record_every: usize,
    /// Largest inter-spike gap inside one up-state burst (ms).
    #[arg(long, default_value_t = 5.0)]
    pub burst_gap: f64,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub min_cycles: usize,
    /// Output directory for voltage.csv, spikes.csv, rates.csv, overlaps.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

impl SpikingArgs {
    pub fn params(&self) -> PifParams {
        PifParams {
            c_m: self.c_m,
            theta: self.theta,
            v_reset: self.v_reset,
            dt: self.dt,
            t_refr: self.t_refr,
            g_l: self.g_l,
            e_l: self.e_l,
            g_nl: self.g_nl,
            e1: self.e1,
            e2: self.e2,
            e3: self.e3,
            delta: self.delta,
            g_syn_e: self.g_syn_e,
            e_syn_e: self.e_syn_e,
            alpha_e: self.alpha_e,
            v_thr: self.v_thr,
            tau: self.tau,
            g_syn_i: self.g_syn_i,
            e_syn_i: self.e_syn_i,
            alpha_i: self.alpha_i,
            beta_i: self.beta_i,
            signs: if self.corrected_signs { GatingSigns::Corrected } else { GatingSigns::Verbatim },
            kick_amplitude: self.kick_amplitude,
            kick_duration: self.kick_duration,
            record_every: self.record_every,
        }
    }
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, default_value_t = 12)]
    pub pmax: usize,
    /// Machine-readable rows `p,N1,N2,...` only.
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Sign vector such as "++---+".
    #[arg(allow_hyphen_values = true)]
    pub vector: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySummary {
    /// Row permutation bringing Σ into standard form.
    pub permutation: Vec<usize>,
    pub edges: usize,
    pub excitatory: usize,
    pub inhibitory: usize,
    pub companion: Option<CompanionForm>,
    pub ring: bool,
    pub clusters: Option<ClusterStructure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDocument {
    /// SHA-256 of the canonical cycle text.
    pub input_digest: String,
    pub cycle: Vec<String>,
    pub report: AdmissibilityReport,
    pub generators: Vec<usize>,
    pub essential_generators: Vec<usize>,
    pub classification: Option<Classification>,
    pub generator_ranks: Vec<usize>,
    pub intersection_dims: Vec<Vec<usize>>,
    pub inclusion_exclusion: bool,
    pub standard_form: Vec<String>,
    pub in_standard_form: bool,
    pub minimal: Option<bool>,
    pub consecutive: Option<bool>,
    pub topology: Option<TopologySummary>,
}

pub fn digest(sigma: &CycleMatrix) -> String {
    hex::encode(Sha256::digest(sigma.to_text().as_bytes()))
}

pub fn parse_cycle_file(path: &Path) -> Result<CycleMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    CycleMatrix::parse(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

pub fn analyze(sigma: &CycleMatrix, tol: f64) -> Result<AnalysisDocument, CliError> {
    let report = admit::is_admissible(sigma).map_err(domain)?;
    let (perm, sorted) = binmat::standard_form(sigma);
    let mut minimal = None;
    let mut consecutive = None;
    let mut topology = None;
    if report.admissible {
        minimal = Some(admit::is_minimal(sigma).map_err(domain)?);
        let sorted_ranks = admit::LoopSpectra::new(&sorted).ranks();
        consecutive = Some(binmat::is_consecutive(&sorted, &sorted_ranks).map_err(domain)?);
        let j = learn::learn_j(&sorted);
        let g = topo::extract_graph(&j, tol, false);
        let companion = topo::detect_companion(&j, tol);
        let clusters = if sorted.has_duplicate_rows() { None } else { Some(topo::cluster_structure(&sorted, &j, tol).map_err(domain)?) };
        topology = Some(TopologySummary {
            permutation: perm.clone(),
            edges: g.edges.len(),
            excitatory: g.edges.iter().filter(|e| e.polarity == topo::Polarity::Excitatory).count(),
            inhibitory: g.edges.iter().filter(|e| e.polarity == topo::Polarity::Inhibitory).count(),
            ring: companion.as_ref().is_some_and(|c| c.is_ring),
            companion,
            clusters,
        });
    }
    Ok(AnalysisDocument {
        input_digest: digest(sigma),
        cycle: sigma.rows().iter().map(|r| r.to_string()).collect(),
        generators: report.generators.clone(),
        essential_generators: report.essential_generators.clone(),
        classification: report.classification,
        generator_ranks: report.generator_ranks.clone(),
        intersection_dims: report.pairwise_intersection_dims.clone(),
        inclusion_exclusion: admit::check_inclusion_exclusion(sigma).map_err(domain)?,
        standard_form: sorted.rows().iter().map(|r| r.to_string()).collect(),
        in_standard_form: binmat::is_standard_form(sigma),
        minimal,
        consecutive,
        topology,
        report,
    })
}

fn summary_text(doc: &AnalysisDocument) -> String {
    let r = &doc.report;
    let one = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
    let mut s = format!("cycle {}x{}  rank {}\n", r.n_rows, r.period, r.rank_sigma);
    s.push_str(&format!(
        "admissible: {} (dft {} nonzero columns, rowspace {}, residual {:.3e})\n",
        r.admissible, r.dft_nonzero_count, r.criterion_rowspace, r.residual
    ));
    s.push_str(&format!("generators (rows): {}  ranks: {:?}\n", one(&r.generators), r.generator_ranks));
    s.push_str(&format!(
        "essential generators (rows): {}{}\n",
        one(&r.essential_generators),
        if r.essential_non_unique { "  (not unique)" } else { "" }
    ));
    if let Some(c) = r.classification {
        s.push_str(&format!(
            "classification: {c}  reducible: {}  decomposable: {}\n",
            r.reducible.unwrap_or(false),
            r.decomposable.unwrap_or(false)
        ));
    }
    for (a, b) in &r.equal_span_pairs {
        s.push_str(&format!("rows {} and {} span the same loop space\n", a + 1, b + 1));
    }
    if let Some(m) = doc.minimal {
        s.push_str(&format!("minimal: {m}  consecutive: {}\n", doc.consecutive.unwrap_or(false)));
    }
    if let Some(t) = &doc.topology {
        s.push_str(&format!("edges: {} ({} excitatory, {} inhibitory)\n", t.edges, t.excitatory, t.inhibitory));
        if let Some(c) = &t.companion {
            s.push_str(&format!("companion form, ring: {}, feedback: {:?}\n", c.is_ring, c.feedback));
        }
        if let Some(cs) = &t.clusters {
            s.push_str(&format!("clusters: {}  connected components: {:?}\n", cs.clusters.len(), cs.connected));
        }
    }
    if !r.duplicate_rows.is_empty() {
        s.push_str(&format!("duplicate rows: {:?}\n", r.duplicate_rows));
    }
    s
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(domain)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Domain(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(domain),
    }
}

/// Row-major CSV with shortest round-trip float formatting.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|k| format!("{}", m[(i, k)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>, String> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string())).collect())
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err("ragged CSV".into());
    }
    Ok(DMatrix::from_fn(n, m, |i, k| rows[i][k]))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| CliError::Domain(format!("{}: {e}", p.display())))
}

#[derive(Debug, Serialize)]
struct LearnSummary {
    residual_fp: f64,
    residual_tr: f64,
    beta_k: f64,
    c0: f64,
    admissible: bool,
}

fn cmd_learn(a: &LearnArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sigma = parse_cycle_file(&a.file)?;
    let cs = learn::connectivity_set(&sigma, a.c0, a.lambda, a.beta).map_err(domain)?;
    let admissible = admit::is_admissible(&sigma).map_err(domain)?.admissible;
    let summary = LearnSummary { residual_fp: cs.residual_fp, residual_tr: cs.residual_tr, beta_k: cs.beta_k, c0: cs.c0, admissible };
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(domain)?;
        write_file(dir, "J0.csv", &matrix_csv(&cs.j0))?;
        write_file(dir, "J.csv", &matrix_csv(&cs.j))?;
        write_file(dir, "Jt.csv", &matrix_csv(&cs.jt))?;
    }
    if a.json {
        emit(&to_json(&summary)?, None, stdout)?;
    } else {
        let mut s = String::new();
        if a.out.is_none() {
            s.push_str(&format!("# J0\n{}# J\n{}# Jt\n{}", matrix_csv(&cs.j0), matrix_csv(&cs.j), matrix_csv(&cs.jt)));
        }
        s.push_str(&format!(
            "residual_fp={} residual_tr={} beta_k={} admissible={}\n",
            cs.residual_fp, cs.residual_tr, cs.beta_k, admissible
        ));
        emit(&s, None, stdout)?;
    }
    Ok(())
}

fn cmd_topology(a: &TopologyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sigma = parse_cycle_file(&a.file)?;
    if !admit::is_admissible(&sigma).map_err(domain)?.admissible {
        return Err(CliError::Domain("cycle is not admissible; no network topology".into()));
    }
    let dec = binmat::decompose(&sigma);
    let j = learn::learn_j(&sigma);
    let mut g = topo::extract_graph(&j, a.tol, a.include_self).with_clusters(dec.labels(sigma.n_rows()));
    if a.include_j0 {
        topo::add_fixed_point_edges(&mut g, &learn::learn_j0(&sigma), a.tol, a.include_self);
    }
    emit(&topo::export_dot(&g), a.out.as_deref(), stdout)
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    admissible: bool,
    retrieval: Retrieval,
    final_state: Vec<f64>,
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    if !(a.threshold > 0.5 && a.threshold < 1.0) {
        return Err(CliError::Usage("--threshold must lie in (0.5, 1)".into()));
    }
    let sigma = parse_cycle_file(&a.file)?;
    let cfg = HopfieldConfig {
        lambda: a.lambda,
        c0: a.c0,
        beta: a.beta,
        dt: a.dt,
        t_max: a.tmax,
        tau: a.tau,
        initial: None,
        seed: a.seed,
        noise: a.noise,
        sample_every: a.sample_every,
    };
    let mut tr = hopfield_sim::simulate(&sigma, &cfg).map_err(domain)?;
    if !tr.admissible {
        let _ = writeln!(stderr, "warning: cycle is not admissible; simulating anyway");
    }
    let ret = hopfield_sim::detect_retrieval(&tr.times, &tr.overlaps, a.threshold, a.min_cycles);
    tr.retrieval = Some(ret.clone());
    let summary_line = format!(
        "# verdict={} cycles={} period={}\n",
        if ret.success { "retrieved" } else { "not-retrieved" },
        ret.cycles,
        ret.period.map_or("none".to_string(), |p| p.to_string())
    );
    if a.json {
        let s = SimulateSummary { admissible: tr.admissible, retrieval: ret, final_state: tr.final_state().to_vec() };
        return emit(&to_json(&s)?, None, stdout);
    }
    let n = sigma.n_rows();
    let p = sigma.period();
    let mut csv = String::from("t");
    (1..=n).for_each(|i| csv.push_str(&format!(",u_{i}")));
    (1..=n).for_each(|i| csv.push_str(&format!(",v_{i}")));
    (1..=p).for_each(|k| csv.push_str(&format!(",m_{k}")));
    csv.push('\n');
    for k in 0..tr.times.len() {
        csv.push_str(&tr.times[k].to_string());
        for x in tr.u[k].iter().chain(&tr.v[k]).chain(&tr.overlaps[k]) {
            csv.push(',');
            csv.push_str(&x.to_string());
        }
        csv.push('\n');
    }
    match &a.out {
        Some(path) => {
            emit(&(csv + &summary_line), Some(path), stdout)?;
            emit(&summary_line, None, stdout)
        }
        None => emit(&(csv + &summary_line), None, stdout),
    }
}

#[derive(Debug, Serialize)]
struct SpikingSummary {
    signs: GatingSigns,
    diverged_at: Option<f64>,
    spike_counts: Vec<usize>,
    dwell: DwellSummary,
}

fn cmd_spiking(a: &SpikingArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sigma = parse_cycle_file(&a.file)?;
    let params = a.params();
    let j = learn::learn_j(&sigma);
    let kick: Vec<bool> = sigma.column(0).iter().map(|&x| x > 0).collect();
    let rec = spiking_sim::simulate_pif(&j, &params, a.tmax, &kick).map_err(domain)?;
    let dwell = spiking_sim::dwell_summary(&rec, &sigma, a.window, a.burst_gap, 0.0, a.threshold, a.min_cycles);
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(domain)?;
        let n = sigma.n_rows();
        let header = |prefix: &str, count: usize| {
            let mut h = String::from("t");
            (1..=count).for_each(|i| h.push_str(&format!(",{prefix}_{i}")));
            h.push('\n');
            h
        };
        let table = |rows: &[Vec<f64>], prefix: &str, count: usize| {
            let mut s = header(prefix, count);
            for (t, r) in rec.sample_times.iter().zip(rows) {
                s.push_str(&t.to_string());
                for x in r {
                    s.push(',');
                    s.push_str(&x.to_string());
                }
                s.push('\n');
            }
            s
        };
        write_file(dir, "voltage.csv", &table(&rec.v_samples, "V", n))?;
        let rates = spiking_sim::firing_rate(&rec, a.window, &rec.sample_times);
        let (_, m) = spiking_sim::normalized_rates_and_overlaps(&rates, &sigma);
        write_file(dir, "rates.csv", &table(&rates, "R", n))?;
        write_file(dir, "overlaps.csv", &table(&m, "m", sigma.period()))?;
        let mut spikes = String::from("neuron,t\n");
        for (i, train) in rec.spike_times.iter().enumerate() {
            for t in train {
                spikes.push_str(&format!("{},{}\n", i + 1, t));
            }
        }
        write_file(dir, "spikes.csv", &spikes)?;
    }
    let summary = SpikingSummary {
        signs: params.signs,
        diverged_at: rec.diverged_at,
        spike_counts: rec.spike_times.iter().map(|t| t.len()).collect(),
        dwell,
    };
    if a.json {
        emit(&to_json(&summary)?, None, stdout)
    } else {
        let d = &summary.dwell;
        let fmt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.3}"));
        let s = format!(
            "signs={:?} diverged_at={} spikes={:?}\nburst_dwell_ms={} (bursts {}) sequence_dwell_ms={} retrieved={} cycles={}\n",
            summary.signs,
            fmt(summary.diverged_at),
            summary.spike_counts,
            fmt(d.burst_dwell),
            d.bursts_used,
            fmt(d.sequence_dwell),
            d.retrieval.success,
            d.retrieval.cycles
        );
        emit(&s, None, stdout)
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CYCLESTORE_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("CYCLESTORE_THREADS={v:?} is not a count")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(domain)
}

fn cmd_table(a: &TableArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pool = thread_pool()?;
    let table = pool.install(|| spectra::np_table(a.pmax)).map_err(domain)?;
    let text = if a.json {
        to_json(&table)?
    } else if a.csv {
        spectra::format_table_csv(&table)
    } else {
        format!("{}\n{}", spectra::format_table(&table), spectra::format_table_csv(&table))
    };
    emit(&text, a.out.as_deref(), stdout)
}

#[derive(Debug, Serialize)]
struct RankOutput {
    vector: String,
    rank: usize,
    annihilated: Vec<usize>,
    dividing: Vec<usize>,
    factors: Vec<String>,
}

fn cmd_rank(a: &RankArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let eta = BinaryVector::parse(&a.vector).map_err(domain)?;
    let rank = spectra::rank_of_vector_checked(&eta).map_err(domain)?;
    let c = spectra::rank_via_cyclotomic(&eta);
    let out = RankOutput {
        vector: eta.to_string(),
        rank,
        annihilated: spectra::annihilation_set(&eta, spectra::zero_tolerance(eta.len())).into_iter().collect(),
        factors: c.dividing.iter().map(|d| format!("Phi_{d}")).collect(),
        dividing: c.dividing,
    };
    let text = if a.json {
        to_json(&out)?
    } else {
        format!(
            "{}: rank {}\nannihilated columns: {:?}\ndividing cyclotomic factors: {}\n",
            out.vector,
            out.rank,
            out.annihilated,
            if out.factors.is_empty() { "none".to_string() } else { out.factors.join(", ") }
        )
    };
    emit(&text, None, stdout)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(a) => {
            let sigma = parse_cycle_file(&a.common.file)?;
            let doc = analyze(&sigma, a.tol)?;
            let text = if a.common.json { to_json(&doc)? } else { summary_text(&doc) };
            emit(&text, a.common.out.as_deref(), stdout)
        }
        Command::Classify(a) => {
            let sigma = parse_cycle_file(&a.file)?;
            let label = admit::classify(&sigma).map_err(domain)?;
            let text = if a.json { to_json(&label)? } else { format!("{label}\n") };
            emit(&text, a.out.as_deref(), stdout)
        }
        Command::Learn(a) => cmd_learn(a, stdout),
        Command::Topology(a) => cmd_topology(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Spiking(a) => cmd_spiking(a, stdout),
        Command::Table(a) => cmd_table(a, stdout),
        Command::Rank(a) => cmd_rank(a, stdout),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Domain(m) => m,
            };
            let _ = writeln!(stderr, "error: {msg}");
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1 + 0.2, -1.0 / 3.0, 1e-300, 7.0]);
        assert_eq!(parse_matrix_csv(&matrix_csv(&m)).unwrap(), m);
    }

    #[test]
    fn usage_error_exit_code() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["cyclestore", "frobnicate"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(["cyclestore", "table", "--csv", "--json"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(["cyclestore", "rank", "++-", "--bogus"], &mut o, &mut e), EXIT_USAGE);
    }

    #[test]
    fn rank_command() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["cyclestore", "rank", "++−−−+"], &mut o, &mut e), EXIT_OK);
        let s = String::from_utf8(o).unwrap();
        assert!(s.contains("rank 3"));
        assert!(s.contains("Phi_1, Phi_3"));
    }
}
