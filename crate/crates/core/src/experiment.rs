//! Seeded Monte Carlo campaigns over the constructions in this crate.
//!
//! A campaign is an [`ExperimentConfig`]; each `(n, seed)` pair is one trial
//! producing a [`TrialRecord`] whose `measured` map is a pure function of the
//! config, `n` and the seed, so any record can be replayed. Trials for seeds
//! `seed..seed + trials` run on the rayon pool and are sorted by `(n, seed)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::collapse::collapse_greedy;
use crate::complex::{
    check_z_equivalence, f_vector, flag_complex_capped, quotient_by_free_involution, separated_deleted_join_capped,
    sign_class_counts, z_complex_capped, Complex, ComplexError,
};
use crate::graphs::{common_neighbor_graph, p_from_alpha, sample_gnp, sample_h, Graph, HParams, RngSeed};
use crate::homology::{betti_profile, betti_q, homology_z};
use crate::radon::{radon_witness, Embedding};
use crate::spectral::{bipartite_gap_lower_bound, discrepancy_probe, garland_check, spectral_report};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("records mix experiments `{0}` and `{1}`")]
    MixedExperiments(String, String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    H1Torsion,
    TopHomology,
    VanishAbove,
    DoubleCover,
    ZEquiv,
    Garland,
    GapConcentration,
    LinkConnectivity,
    Radon,
    #[serde(rename = "fvector")]
    FVector,
    Collapse,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::H1Torsion,
        Experiment::TopHomology,
        Experiment::VanishAbove,
        Experiment::DoubleCover,
        Experiment::ZEquiv,
        Experiment::Garland,
        Experiment::GapConcentration,
        Experiment::LinkConnectivity,
        Experiment::Radon,
        Experiment::FVector,
        Experiment::Collapse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::H1Torsion => "h1-torsion",
            Experiment::TopHomology => "top-homology",
            Experiment::VanishAbove => "vanish-above",
            Experiment::DoubleCover => "double-cover",
            Experiment::ZEquiv => "z-equiv",
            Experiment::Garland => "garland",
            Experiment::GapConcentration => "gap-concentration",
            Experiment::LinkConnectivity => "link-connectivity",
            Experiment::Radon => "radon",
            Experiment::FVector => "fvector",
            Experiment::Collapse => "collapse",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::UnknownExperiment(s.to_string()))
    }
}

/// Which complex a collapse campaign works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollapseTarget {
    /// `Z(G)`.
    Z,
    /// The separated deleted join of the flag complex of `G`.
    Join,
    /// The flag complex of `G`.
    Flag,
}

impl FromStr for CollapseTarget {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(CollapseTarget::Z),
            "zt" | "join" => Ok(CollapseTarget::Join),
            "flag" => Ok(CollapseTarget::Flag),
            _ => Err(ExperimentError::Parameter(format!("complex must be z, zt or flag, got `{s}`"))),
        }
    }
}

/// Link model sampled by `gap-concentration`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkModel {
    /// `H(n, q^d (1-q)^d, q^d (1-q)^d, 0, 0, 1-q)` with `q = n^-α`.
    Symmetric,
    /// `H(n, q^(d-1) (1-q)^d, q^d (1-q)^(d-1), 0, 0, 1-q)`.
    Asymmetric,
}

impl FromStr for LinkModel {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(LinkModel::Symmetric),
            "asymmetric" => Ok(LinkModel::Asymmetric),
            _ => Err(ExperimentError::Parameter(format!("link model must be symmetric or asymmetric, got `{s}`"))),
        }
    }
}

/// Campaign parameters. See [`ExperimentConfig::parse`] for the file grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub ns: Vec<usize>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    /// Face dimension cutoff; `None` picks the experiment's default.
    pub max_dim: Option<usize>,
    pub max_clique_size: Option<usize>,
    pub tol: f64,
    pub c_const: Vec<f64>,
    /// Gap threshold is `1 - delta`.
    pub delta: f64,
    pub max_free_dim: Option<usize>,
    pub complex: CollapseTarget,
    pub link_model: LinkModel,
    pub embed_dim: Option<usize>,
    pub denom: u64,
    pub probe_trials: usize,
    pub max_faces: usize,
    pub max_nnz: usize,
    pub max_wall_ms: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            ns: vec![10],
            alpha: None,
            p: None,
            d: 1,
            trials: 100,
            seed: 0,
            max_dim: None,
            max_clique_size: None,
            tol: 1e-9,
            c_const: vec![1.0],
            delta: 0.2,
            max_free_dim: None,
            complex: if experiment == Experiment::Collapse { CollapseTarget::Join } else { CollapseTarget::Z },
            link_model: LinkModel::Symmetric,
            embed_dim: None,
            denom: 10_000,
            probe_trials: 0,
            max_faces: 2_000_000,
            max_nnz: 20_000_000,
            max_wall_ms: 600_000,
            out: None,
        }
    }

    /// Sets one `key = value` entry; shared by the config file and CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn fmt::Display| ExperimentError::Parameter(format!("{key} = `{value}`: {e}"));
        match key {
            "experiment" => self.experiment = value.parse()?,
            "n" => self.ns = parse_n_list(value)?,
            "alpha" => self.alpha = Some(value.parse().map_err(|e| bad(&e))?),
            "p" => self.p = Some(value.parse().map_err(|e| bad(&e))?),
            "d" => self.d = value.parse().map_err(|e| bad(&e))?,
            "trials" => self.trials = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "max_dim" => self.max_dim = Some(value.parse().map_err(|e| bad(&e))?),
            "max_clique_size" => self.max_clique_size = Some(value.parse().map_err(|e| bad(&e))?),
            "tol" => self.tol = value.parse().map_err(|e| bad(&e))?,
            "c_const" => {
                self.c_const = value.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| bad(&e))).collect::<Result<_>>()?
            }
            "delta" => self.delta = value.parse().map_err(|e| bad(&e))?,
            "max_free_dim" => self.max_free_dim = Some(value.parse().map_err(|e| bad(&e))?),
            "complex" => self.complex = value.parse()?,
            "link_model" => self.link_model = value.parse()?,
            "embed_dim" => self.embed_dim = Some(value.parse().map_err(|e| bad(&e))?),
            "denom" => self.denom = value.parse().map_err(|e| bad(&e))?,
            "probe_trials" => self.probe_trials = value.parse().map_err(|e| bad(&e))?,
            "max_faces" => self.max_faces = value.parse().map_err(|e| bad(&e))?,
            "max_nnz" => self.max_nnz = value.parse().map_err(|e| bad(&e))?,
            "max_wall_ms" => self.max_wall_ms = value.parse().map_err(|e| bad(&e))?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(ExperimentError::Parameter(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a config file: one `key = value` per line, `#` starts a comment,
    /// blank lines ignored. `experiment` is required. Keys are those accepted
    /// by [`ExperimentConfig::set`]; `n` takes `10,14,18`, `10..18` or
    /// `10..18:4` (inclusive range with step).
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config { line: i + 1, msg: "expected `key = value`".into() })?;
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let (_, _, name) = entries
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .ok_or_else(|| ExperimentError::Config { line: 0, msg: "missing `experiment`".into() })?;
        let mut cfg = ExperimentConfig::new(name.parse()?);
        for (line, k, v) in &entries {
            cfg.set(k, v).map_err(|e| ExperimentError::Config { line: *line, msg: e.to_string() })?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(ExperimentError::Parameter(m));
        if self.ns.is_empty() || self.ns.contains(&0) {
            return err("n must list positive sizes".into());
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return err(format!("alpha = {a} must be positive"));
            }
        }
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("p = {p} is not a probability"));
            }
        }
        let needs_p = !matches!(self.experiment, Experiment::ZEquiv);
        if needs_p && self.alpha.is_none() && self.p.is_none() {
            return err(format!("{} needs --alpha or --p", self.experiment));
        }
        if self.experiment == Experiment::GapConcentration && self.alpha.is_none() {
            return err("gap-concentration is parameterized by --alpha".into());
        }
        if self.d == 0 {
            return err("d must be at least 1".into());
        }
        if !(self.tol >= 0.0) || !(0.0..=1.0).contains(&self.delta) {
            return err("tol must be nonnegative and delta in [0, 1]".into());
        }
        if self.c_const.iter().any(|c| !(*c >= 0.0)) {
            return err("c_const values must be nonnegative".into());
        }
        if self.denom == 0 {
            return err("denom must be positive".into());
        }
        if self.max_faces == 0 || self.max_nnz == 0 || self.max_wall_ms == 0 {
            return err("resource caps must be positive".into());
        }
        if self.experiment == Experiment::ZEquiv && self.ns.iter().any(|&n| n > 16) {
            return err("z-equiv enumerates face partitions; keep n <= 16".into());
        }
        Ok(())
    }

    /// Edge probability at size `n`: explicit `p`, else `n^-alpha`.
    pub fn p_at(&self, n: usize) -> Option<f64> {
        self.p.or_else(|| self.alpha.map(|a| p_from_alpha(n, a)))
    }

    fn max_free_dim(&self) -> usize {
        self.max_free_dim.unwrap_or(self.d + 1)
    }
}

/// `10,14,18`, `10..18` or `10..18:4`, or a mix separated by commas.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let bad = |m: String| ExperimentError::Parameter(format!("n list `{s}`: {m}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
            let lo: usize = lo.trim().parse().map_err(|e| bad(format!("{e}")))?;
            let hi: usize = hi.trim().parse().map_err(|e| bad(format!("{e}")))?;
            let step: usize = step.trim().parse().map_err(|e| bad(format!("{e}")))?;
            if step == 0 || lo > hi {
                return Err(bad("range must satisfy lo <= hi and step >= 1".into()));
            }
            out.extend((lo..=hi).step_by(step));
        } else {
            out.push(part.parse().map_err(|e| bad(format!("{e}")))?);
        }
    }
    if out.is_empty() {
        return Err(bad("empty".into()));
    }
    Ok(out)
}

/// One trial: `measured` depends only on `(config, n, seed)`; `wall_ms` does not replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub n: usize,
    pub seed: u64,
    pub p: Option<f64>,
    pub measured: BTreeMap<String, Value>,
    pub pass: BTreeMap<String, bool>,
    pub aborted: Option<String>,
    pub wall_ms: u64,
}

impl TrialRecord {
    /// Canonical bytes of the replayable part.
    pub fn measured_bytes(&self) -> String {
        serde_json::to_string(&(&self.measured, &self.pass, &self.aborted)).expect("serializable")
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.measured.get(key).and_then(Value::as_f64)
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.pass.get(key).copied()
    }
}

type Measured = BTreeMap<String, Value>;
type Flags = BTreeMap<String, bool>;

/// Stage-boundary resource checks for one trial.
struct Budget<'a> {
    cfg: &'a ExperimentConfig,
    start: Instant,
}

impl Budget<'_> {
    fn time(&self, stage: &str) -> std::result::Result<(), String> {
        let ms = self.start.elapsed().as_millis() as u64;
        if ms > self.cfg.max_wall_ms {
            return Err(format!("wall time {ms} ms exceeded {} ms after {stage}", self.cfg.max_wall_ms));
        }
        Ok(())
    }

    /// Boundary matrices up to `∂_{top}` stay within the nonzero cap.
    fn nnz(&self, c: &Complex, top: usize) -> std::result::Result<(), String> {
        let nnz: usize = (1..=top.min(c.max_dim())).map(|k| (k + 1) * c.count(k)).sum();
        if nnz > self.cfg.max_nnz {
            return Err(format!("{nnz} boundary nonzeros exceed cap {}", self.cfg.max_nnz));
        }
        Ok(())
    }
}

fn capped<T>(r: std::result::Result<T, ComplexError>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn graph_seed(seed: u64, n: usize) -> RngSeed {
    RngSeed(seed).derive(n as u64)
}

fn aux_seed(seed: u64, n: usize, stream: u64) -> RngSeed {
    graph_seed(seed, n).derive(stream + 1)
}

/// Runs every `(n, seed)` trial, records sorted by `(n, seed)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> =
        cfg.ns.iter().flat_map(|&n| (0..cfg.trials as u64).map(move |t| (n, cfg.seed + t))).collect();
    let mut records: Vec<TrialRecord> = jobs.into_par_iter().map(|(n, seed)| run_trial(cfg, n, seed)).collect();
    records.sort_by_key(|r| (r.n, r.seed));
    Ok(records)
}

/// Runs one trial; the basis of replay.
pub fn run_trial(cfg: &ExperimentConfig, n: usize, seed: u64) -> TrialRecord {
    let budget = Budget { cfg, start: Instant::now() };
    let mut measured = Measured::new();
    let mut pass = Flags::new();
    let p = cfg.p_at(n);
    let outcome = match cfg.experiment {
        Experiment::H1Torsion => h1_torsion(cfg, n, seed, &budget, &mut measured, &mut pass),
        Experiment::TopHomology => top_homology(cfg, n, seed, &budget, &mut measured, &mut pass),
        Experiment::VanishAbove => vanish_above(cfg, n, seed, &budget, &mut measured, &mut pass),
        Experiment::DoubleCover => double_cover(cfg, n, seed, &budget, &mut measured, &mut pass),
        Experiment::ZEquiv => z_equiv(cfg, n, seed, &mut measured, &mut pass),
        Experiment::Garland => garland(cfg, n, seed, &budget, &mut measured, &mut pass),
        Experiment::GapConcentration => gap_concentration(cfg, n, seed, &mut measured, &mut pass),
        Experiment::LinkConnectivity => link_connectivity(cfg, n, seed, &mut measured, &mut pass),
        Experiment::Radon => radon(cfg, n, seed, &budget, &mut measured, &mut pass),
        Experiment::FVector => fvector(cfg, n, seed, &budget, &mut measured, &mut pass),
        Experiment::Collapse => collapse(cfg, n, seed, &budget, &mut measured, &mut pass),
    };
    TrialRecord {
        experiment: cfg.experiment,
        n,
        seed,
        p,
        measured,
        pass,
        aborted: outcome.err(),
        wall_ms: budget.start.elapsed().as_millis() as u64,
    }
}

type Outcome = std::result::Result<(), String>;

fn sample(cfg: &ExperimentConfig, n: usize, seed: u64) -> std::result::Result<Graph, String> {
    let p = cfg.p_at(n).ok_or("no edge probability")?;
    sample_gnp(n, p, graph_seed(seed, n)).map_err(|e| e.to_string())
}

fn full_dim(n: usize) -> usize {
    n.saturating_sub(1)
}

fn h1_torsion(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let g = sample(cfg, n, seed)?;
    m.insert("edges".into(), json!(g.edge_count()));
    let z = capped(z_complex_capped(&g, cfg.max_dim.unwrap_or(2).max(2), Some(cfg.max_faces)))?;
    m.insert("f".into(), json!(f_vector(&z).counts));
    b.nnz(&z, 2)?;
    let h1 = homology_z(&z, 1).map_err(|e| e.to_string())?;
    let is_z2 = h1.betti == 0 && h1.torsion_u64() == [2];
    m.insert("h1_betti".into(), json!(h1.betti));
    m.insert("h1_torsion".into(), json!(h1.torsion_u64()));
    m.insert("h1".into(), json!(h1.to_string()));
    pass.insert("h1_is_z2".into(), is_z2);
    b.time("homology")
}

fn top_homology(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let d = cfg.d;
    let g = sample(cfg, n, seed)?;
    let k = 2 * d + 1;
    let z = capped(z_complex_capped(&g, cfg.max_dim.unwrap_or(full_dim(n)).max(k + 1), Some(cfg.max_faces)))?;
    let fv = f_vector(&z);
    m.insert("f".into(), json!(fv.counts));
    b.nnz(&z, k + 1)?;
    let prof = betti_profile(&z, k).map_err(|e| e.to_string())?;
    let beta = prof.groups[k].betti;
    m.insert("betti".into(), json!(prof.groups.iter().map(|g| g.betti).collect::<Vec<_>>()));
    m.insert("top_betti".into(), json!(beta));
    m.insert("top_lower_bound".into(), json!(prof.morse_bound(k)));
    pass.insert("top_nonzero".into(), beta > 0);
    pass.insert("lower_bound_holds".into(), beta as i64 >= prof.morse_bound(k));
    pass.insert("euler".into(), prof.euler_holds);
    b.time("homology")?;
    let (residual, trace) = collapse_greedy(&z, cfg.max_free_dim(), aux_seed(seed, n, 0));
    m.insert("residual_dim".into(), json!(residual.dim()));
    m.insert("collapse_steps".into(), json!(trace.steps.len()));
    pass.insert("residual_le_top".into(), residual.dim().is_none_or(|r| r <= k));
    b.time("collapse")
}

fn vanish_above(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let d = cfg.d;
    let g = sample(cfg, n, seed)?;
    let z = capped(z_complex_capped(&g, cfg.max_dim.unwrap_or(full_dim(n)), Some(cfg.max_faces)))?;
    let (residual, trace) = collapse_greedy(&z, cfg.max_free_dim(), aux_seed(seed, n, 0));
    b.time("collapse")?;
    m.insert("dim".into(), json!(z.dim()));
    m.insert("residual_dim".into(), json!(residual.dim()));
    m.insert("collapse_steps".into(), json!(trace.steps.len()));
    // homology above the residual dimension vanishes; compute the band in between exactly
    let from = 2 * d + 2;
    let mut above = Vec::new();
    let r = residual.dim().unwrap_or(0);
    if r >= from && r < residual.max_dim() {
        b.nnz(&residual, r + 1)?;
        for k in from..=r {
            above.push(betti_q(&residual, k).map_err(|e| e.to_string())?);
        }
    }
    m.insert("betti_above".into(), json!(above));
    pass.insert("vanishes_above".into(), above.iter().all(|&x| x == 0) && (r < residual.max_dim() || r < from));
    pass.insert("residual_le_top".into(), r <= 2 * d + 1);
    b.time("homology")
}

fn double_cover(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let g = sample(cfg, n, seed)?;
    let max_dim = cfg.max_dim.unwrap_or(2 * cfg.d + 2);
    let z = capped(z_complex_capped(&g, max_dim, Some(cfg.max_faces)))?;
    let (join, inv) = capped(separated_deleted_join_capped(&g, max_dim, Some(cfg.max_faces)))?;
    let fz: Vec<usize> = (0..=max_dim).map(|k| z.count(k)).collect();
    let fj: Vec<usize> = (0..=max_dim).map(|k| join.count(k)).collect();
    m.insert("f_z".into(), json!(fz));
    m.insert("f_join".into(), json!(fj));
    pass.insert("halving".into(), fz.iter().zip(&fj).all(|(a, b)| 2 * a == *b));
    let quotient_ok = quotient_by_free_involution(&join, &inv).map(|q| q.same_faces(&z)).unwrap_or(false);
    pass.insert("quotient_is_z".into(), quotient_ok);
    b.time("construction")
}

fn z_equiv(cfg: &ExperimentConfig, n: usize, seed: u64, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let p = match cfg.p_at(n) {
        Some(p) => p,
        None => aux_seed(seed, n, 7).rng().gen::<f64>(),
    };
    let g = sample_gnp(n, p, graph_seed(seed, n)).map_err(|e| e.to_string())?;
    m.insert("p_used".into(), json!(p));
    m.insert("edges".into(), json!(g.edge_count()));
    pass.insert("equivalent".into(), check_z_equivalence(&g, cfg.max_dim.unwrap_or(full_dim(n))));
    Ok(())
}

fn garland(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let d = cfg.d.max(1);
    let g = sample(cfg, n, seed)?;
    let c = capped(flag_complex_capped(&g, cfg.max_dim.unwrap_or(d).max(d), Some(cfg.max_faces)))?;
    let cert = garland_check(&c, d, cfg.tol).map_err(|e| e.to_string())?;
    b.time("certificate")?;
    b.nnz(&c, d)?;
    let beta = betti_q(&c, d - 1).map_err(|e| e.to_string())?;
    m.insert("f".into(), json!(f_vector(&c).counts));
    m.insert("pure".into(), json!(cert.pure));
    m.insert("links".into(), json!(cert.links.len()));
    m.insert("min_link_gap".into(), json!(cert.min_gap()));
    m.insert("verdict".into(), json!(cert.verdict));
    m.insert("betti_below".into(), json!(beta));
    pass.insert("verdict".into(), cert.verdict);
    pass.insert("sound".into(), !cert.verdict || beta == 0);
    b.time("homology")
}

fn link_params(cfg: &ExperimentConfig, n: usize) -> HParams {
    let q = p_from_alpha(n, cfg.alpha.expect("validated"));
    let d = cfg.d as i32;
    let (pa, pb) = match cfg.link_model {
        LinkModel::Symmetric => (q.powi(d) * (1.0 - q).powi(d), q.powi(d) * (1.0 - q).powi(d)),
        LinkModel::Asymmetric => (q.powi(d - 1) * (1.0 - q).powi(d), q.powi(d) * (1.0 - q).powi(d - 1)),
    };
    HParams { n, p_a: pa, p_b: pb, pe_a: 0.0, pe_b: 0.0, pe_ab: 1.0 - q }
}

fn gap_concentration(cfg: &ExperimentConfig, n: usize, seed: u64, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let params = link_params(cfg, n);
    let bg = sample_h(params, graph_seed(seed, n)).map_err(|e| e.to_string())?;
    m.insert("size_a".into(), json!(bg.part_a.len()));
    m.insert("size_b".into(), json!(bg.part_b.len()));
    m.insert("edges".into(), json!(bg.graph.edge_count()));
    let threshold = 1.0 - cfg.delta;
    match spectral_report(&bg.graph, cfg.tol) {
        Ok(r) => {
            // gap of the non-isolated part; the strict variant treats an isolated vertex as a second component
            let whole = r.connected && r.isolated_dropped == 0;
            let strict = if whole { r.gap } else { 0.0 };
            m.insert("gap".into(), json!(r.gap));
            m.insert("gap_strict".into(), json!(strict));
            m.insert("isolated".into(), json!(r.isolated_dropped));
            pass.insert("gap_above".into(), r.gap > threshold + cfg.tol);
            pass.insert("gap_above_strict".into(), strict > threshold + cfg.tol);
            pass.insert("connected".into(), whole);
            if cfg.probe_trials > 0 && r.connected && r.isolated_dropped == 0 {
                let eps = discrepancy_probe(&bg, cfg.probe_trials, aux_seed(seed, n, 1)).map_err(|e| e.to_string())?;
                m.insert("probe_eps".into(), json!(eps));
                let mut sound = true;
                let mut bounds = Vec::new();
                for &c in &cfg.c_const {
                    let bound = bipartite_gap_lower_bound(&bg, eps, c).map_err(|e| e.to_string())?;
                    sound &= r.gap >= bound - cfg.tol;
                    bounds.push(bound);
                }
                m.insert("bounds".into(), json!(bounds));
                pass.insert("bound_below_gap".into(), sound);
            }
        }
        Err(_) => {
            m.insert("gap".into(), json!(0.0));
            pass.insert("gap_above".into(), false);
            pass.insert("connected".into(), false);
        }
    }
    Ok(())
}

fn link_connectivity(cfg: &ExperimentConfig, n: usize, seed: u64, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let d = cfg.d;
    let g = sample(cfg, n, seed)?;
    if n < 2 * d + 1 {
        return Err(format!("n = {n} is too small for sets of size {}", 2 * d + 1));
    }
    let mut rng = aux_seed(seed, n, 2).rng();
    let mut nonempty_all = true;
    let mut connected_all = true;
    let mut detail = BTreeMap::new();
    for size in [2 * d + 1, 2 * d] {
        for k in 0..=size {
            let l = size - k;
            let chosen: Vec<usize> = sample_indices(&mut rng, n, size).into_vec();
            let (plus, minus) = chosen.split_at(k);
            let bg = common_neighbor_graph(&g, plus, minus).map_err(|e| e.to_string())?;
            let verts = bg.part_a.len() + bg.part_b.len();
            let key = format!("{k}+{l}-");
            if size == 2 * d + 1 {
                nonempty_all &= verts > 0;
                detail.insert(key, json!({ "common": verts }));
            } else {
                let sub: Vec<usize> = bg.part_a.iter().chain(&bg.part_b).copied().collect();
                let connected = verts > 0 && bg.graph.induced(&sub).component_count() == 1;
                connected_all &= connected;
                detail.insert(key, json!({ "common": verts, "connected": connected }));
            }
        }
    }
    m.insert("sets".into(), json!(detail));
    pass.insert("nonempty".into(), nonempty_all);
    pass.insert("connected".into(), connected_all);
    Ok(())
}

fn radon(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let g = sample(cfg, n, seed)?;
    let dim = cfg.embed_dim.unwrap_or(cfg.d);
    let emb = Embedding::random(n, dim, cfg.denom, aux_seed(seed, n, 3)).map_err(|e| e.to_string())?;
    let max_size = cfg.max_clique_size.unwrap_or(cfg.d + 1);
    let w = radon_witness(&g, &emb, max_size).map_err(|e| e.to_string())?;
    m.insert("edges".into(), json!(g.edge_count()));
    pass.insert("witness".into(), w.is_some());
    if let Some(w) = w {
        let verified = w.verify(&g, &emb).is_ok();
        m.insert("witness".into(), w.to_record());
        pass.insert("verified".into(), verified);
    }
    b.time("search")
}

fn fvector(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, _pass: &mut Flags) -> Outcome {
    let g = sample(cfg, n, seed)?;
    let max_dim = cfg.max_dim.unwrap_or(3);
    let (join, _) = capped(separated_deleted_join_capped(&g, max_dim, Some(cfg.max_faces)))?;
    m.insert("f".into(), json!((0..=max_dim).map(|k| join.count(k)).collect::<Vec<_>>()));
    let mut classes = BTreeMap::new();
    for i in 0..=max_dim {
        for ((k, l), c) in sign_class_counts(&join, i) {
            classes.insert(format!("{i}:{k},{l}"), c);
        }
    }
    m.insert("classes".into(), json!(classes));
    b.time("construction")
}

fn collapse(cfg: &ExperimentConfig, n: usize, seed: u64, b: &Budget, m: &mut Measured, pass: &mut Flags) -> Outcome {
    let g = sample(cfg, n, seed)?;
    let c = match cfg.complex {
        CollapseTarget::Z => capped(z_complex_capped(&g, cfg.max_dim.unwrap_or(full_dim(n)), Some(cfg.max_faces)))?,
        CollapseTarget::Join => {
            capped(separated_deleted_join_capped(&g, cfg.max_dim.unwrap_or(full_dim(2 * n)), Some(cfg.max_faces)))?.0
        }
        CollapseTarget::Flag => capped(flag_complex_capped(&g, cfg.max_dim.unwrap_or(full_dim(n)), Some(cfg.max_faces)))?,
    };
    let (residual, trace) = collapse_greedy(&c, cfg.max_free_dim(), aux_seed(seed, n, 0));
    m.insert("dim".into(), json!(c.dim()));
    m.insert("f".into(), json!(f_vector(&c).counts));
    m.insert("residual_dim".into(), json!(residual.dim()));
    m.insert("residual_f".into(), json!(f_vector(&residual).counts));
    m.insert("steps".into(), json!(trace.steps.len()));
    m.insert("stuck".into(), json!(trace.stuck));
    pass.insert("residual_le_top".into(), residual.dim().is_none_or(|r| r <= 2 * cfg.d + 1));
    b.time("collapse")
}

/// Exhaustively checks the construction equivalence on all labelled graphs
/// with `n` vertices; returns `(graphs checked, failing edge masks)`.
pub fn exhaustive_z_equivalence(n: usize) -> (u64, Vec<u64>) {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let total = 1u64 << pairs.len();
    let failures: Vec<u64> = (0..total)
        .into_par_iter()
        .filter(|&mask| {
            let mut g = Graph::empty(n);
            for (i, &(u, v)) in pairs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    g.add_edge(u, v);
                }
            }
            !check_z_equivalence(&g, full_dim(n))
        })
        .collect();
    (total, failures)
}

// ---------------------------------------------------------------------------
// summaries

/// `z` for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes / trials` at `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nt = trials as f64;
    let phat = successes as f64 / nt;
    let z2 = z * z;
    let denom = 1.0 + z2 / nt;
    let center = (phat + z2 / (2.0 * nt)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frequency {
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Frequency {
    pub fn new(successes: usize, trials: usize) -> Frequency {
        let (lo, hi) = wilson_interval(successes, trials, Z95);
        let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        Frequency { successes, trials, rate, lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub min_seed: u64,
    pub max_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub n: usize,
    pub trials: usize,
    pub aborted: usize,
    pub pass: BTreeMap<String, Frequency>,
    pub numeric: BTreeMap<String, Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outlier {
    pub n: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: Option<Experiment>,
    pub records: usize,
    pub groups: Vec<GroupSummary>,
    pub outliers: Vec<Outlier>,
}

/// Frequencies (with Wilson intervals) of every pass flag and statistics of
/// every numeric measurement, grouped by `n`; failures and aborts are listed
/// as outliers with their seeds. Independent of record order.
pub fn summarize(records: &[TrialRecord]) -> Result<Summary> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.experiment != first.experiment) {
            return Err(ExperimentError::MixedExperiments(first.experiment.to_string(), other.experiment.to_string()));
        }
    }
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.n, r.seed));
    let mut groups = Vec::new();
    let mut outliers = Vec::new();
    let ns: BTreeSet<usize> = sorted.iter().map(|r| r.n).collect();
    for n in ns {
        let group: Vec<&TrialRecord> = sorted.iter().copied().filter(|r| r.n == n).collect();
        let mut pass = BTreeMap::new();
        let flags: BTreeSet<&String> = group.iter().flat_map(|r| r.pass.keys()).collect();
        for flag in flags {
            let with: Vec<&&TrialRecord> = group.iter().filter(|r| r.pass.contains_key(flag)).collect();
            let ok = with.iter().filter(|r| r.pass[flag]).count();
            pass.insert(flag.clone(), Frequency::new(ok, with.len()));
            for r in with.iter().filter(|r| !r.pass[flag]) {
                outliers.push(Outlier { n, seed: r.seed, reason: format!("{flag} failed") });
            }
        }
        let mut numeric = BTreeMap::new();
        let keys: BTreeSet<&String> = group.iter().flat_map(|r| r.measured.keys()).collect();
        for key in keys {
            let vals: Vec<(f64, u64)> = group.iter().filter_map(|r| Some((r.measured.get(key)?.as_f64()?, r.seed))).collect();
            if !vals.is_empty() {
                numeric.insert(key.clone(), stat(&vals));
            }
        }
        let aborted = group.iter().filter(|r| r.aborted.is_some()).count();
        for r in group.iter().filter(|r| r.aborted.is_some()) {
            outliers.push(Outlier { n, seed: r.seed, reason: format!("aborted: {}", r.aborted.as_deref().unwrap_or("")) });
        }
        groups.push(GroupSummary { n, trials: group.len(), aborted, pass, numeric });
    }
    Ok(Summary { experiment: records.first().map(|r| r.experiment), records: records.len(), groups, outliers })
}

fn stat(vals: &[(f64, u64)]) -> Stat {
    let count = vals.len();
    let mean = vals.iter().map(|v| v.0).sum::<f64>() / count as f64;
    let var = if count > 1 { vals.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (count - 1) as f64 } else { 0.0 };
    let mut xs: Vec<f64> = vals.iter().map(|v| v.0).collect();
    xs.sort_by(f64::total_cmp);
    let median = if count % 2 == 1 { xs[count / 2] } else { (xs[count / 2 - 1] + xs[count / 2]) / 2.0 };
    // ties resolved towards the smallest seed
    let min = vals.iter().min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))).expect("nonempty");
    let max = vals.iter().max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1))).expect("nonempty");
    Stat { count, mean, std: var.sqrt(), min: min.0, median, max: max.0, min_seed: min.1, max_seed: max.1 }
}

/// One JSON object per line.
pub fn records_to_lines(records: &[TrialRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect()
}

pub fn records_from_lines(text: &str) -> std::result::Result<Vec<TrialRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// CSV with a header row: fixed columns, then `pass.<flag>` and measured keys
/// (non-scalar values as JSON text).
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let flags: BTreeSet<&String> = records.iter().flat_map(|r| r.pass.keys()).collect();
    let keys: BTreeSet<&String> = records.iter().flat_map(|r| r.measured.keys()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["experiment", "n", "seed", "p", "aborted", "wall_ms"].map(String::from).to_vec();
    header.extend(flags.iter().map(|f| format!("pass.{f}")));
    header.extend(keys.iter().map(|k| k.to_string()));
    w.write_record(&header).expect("in-memory write");
    for r in records {
        let mut row = vec![
            r.experiment.to_string(),
            r.n.to_string(),
            r.seed.to_string(),
            r.p.map(|p| p.to_string()).unwrap_or_default(),
            r.aborted.clone().unwrap_or_default(),
            r.wall_ms.to_string(),
        ];
        row.extend(flags.iter().map(|f| r.pass.get(*f).map(|b| b.to_string()).unwrap_or_default()));
        row.extend(keys.iter().map(|k| match r.measured.get(*k) {
            None => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        }));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
}
