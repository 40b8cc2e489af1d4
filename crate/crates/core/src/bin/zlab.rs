use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use zlab::collapse::{collapse_greedy, CollapseTrace};
use zlab::complex::{f_vector, flag_complex_capped, separated_deleted_join_capped, z_complex_capped, Complex};
use zlab::experiment::{
    records_from_lines, records_to_csv, records_to_lines, run_experiment, run_trial, summarize, Experiment,
    ExperimentConfig,
};
use zlab::graphs::{p_from_alpha, sample_gnp, Graph, RngSeed};
use zlab::homology::betti_profile;
use zlab::radon::{radon_witness, Embedding};
use zlab::spectral::garland_check;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parameter(String),
    #[error("{0}")]
    Failed(String),
    #[error("every trial was aborted by a resource cap")]
    AllAborted,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parameter(_) => 2,
            CliError::Failed(_) => 1,
            CliError::AllAborted => 3,
        }
    }
}

fn param(e: impl ToString) -> CliError {
    CliError::Parameter(e.to_string())
}

fn failed(e: impl ToString) -> CliError {
    CliError::Failed(e.to_string())
}

#[derive(Parser)]
#[command(name = "zlab", version, about = "Random two-clique complexes, double covers, homology and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Graph,
    /// Z(G)
    Z,
    /// separated deleted join of G
    Zt,
    /// flag complex of G
    Flag,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Records,
}

#[derive(Args)]
struct GraphSource {
    /// Read the graph from a file instead of sampling one
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GraphSource {
    fn load(&self) -> Result<Graph, CliError> {
        if let Some(path) = &self.graph {
            return Graph::from_text(&read(path)?).map_err(param);
        }
        let n = self.n.ok_or_else(|| param("give --graph or --n with --p/--alpha"))?;
        let p = match (self.p, self.alpha) {
            (Some(p), _) => p,
            (None, Some(a)) => p_from_alpha(n, a),
            (None, None) => return Err(param("sampling needs --p or --alpha")),
        };
        sample_gnp(n, p, RngSeed(self.seed)).map_err(param)
    }
}

#[derive(Args)]
struct ComplexSource {
    /// Read a complex file instead of building one from a graph
    #[arg(long)]
    complex: Option<PathBuf>,
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long, value_enum, default_value = "z")]
    kind: Kind,
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long, default_value_t = 2_000_000)]
    max_faces: usize,
}

impl ComplexSource {
    fn load(&self) -> Result<Complex, CliError> {
        if let Some(path) = &self.complex {
            return Complex::from_text(&read(path)?).map_err(param);
        }
        let g = self.graph.load()?;
        build(&g, self.kind, self.max_dim, self.max_faces)
    }
}

fn build(g: &Graph, kind: Kind, max_dim: Option<usize>, cap: usize) -> Result<Complex, CliError> {
    let top = max_dim.unwrap_or(g.n().saturating_sub(1));
    let c = match kind {
        Kind::Graph => return Err(param("--kind graph does not name a complex")),
        Kind::Z => z_complex_capped(g, top, Some(cap)),
        Kind::Zt => separated_deleted_join_capped(g, max_dim.unwrap_or((2 * g.n()).saturating_sub(1)), Some(cap)).map(|x| x.0),
        Kind::Flag => flag_complex_capped(g, top, Some(cap)),
    };
    c.map_err(failed)
}

#[derive(Args)]
struct McArgs {
    /// Flat `key = value` config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sizes: `10,14,18`, `10..18` or `10..18:4`
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Extra `key=value` settings (any config key), repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl McArgs {
    fn config(&self, experiment: Option<&str>) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, experiment) {
            (Some(path), _) => ExperimentConfig::parse(&read(path)?).map_err(param)?,
            (None, Some(name)) => ExperimentConfig::new(name.parse::<Experiment>().map_err(param)?),
            (None, None) => return Err(param("give an experiment name or --config")),
        };
        if let Some(name) = experiment {
            cfg.set("experiment", name).map_err(param)?;
        }
        let flags = [
            ("n", self.n.clone()),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("d", self.d.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("max_dim", self.max_dim.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(param)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| param(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim()).map_err(param)?;
        }
        cfg.validate().map_err(param)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emit a graph or complex file
    Gen {
        #[command(flatten)]
        graph: GraphSource,
        #[arg(long, value_enum, default_value = "graph")]
        kind: Kind,
        #[arg(long)]
        max_dim: Option<usize>,
        #[arg(long, default_value_t = 2_000_000)]
        max_faces: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integral homology of a complex, one group per line
    Homology {
        #[command(flatten)]
        source: ComplexSource,
        /// Highest degree to report (defaults to max_dim - 1)
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral certificate for vanishing of H_{d-1} of the flag complex
    Garland {
        #[command(flatten)]
        graph: GraphSource,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy seeded collapse; emits the step trace
    Collapse {
        #[command(flatten)]
        source: ComplexSource,
        #[arg(long, default_value_t = 2)]
        max_free_dim: usize,
        #[arg(long, default_value_t = 0)]
        collapse_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for two non-adjacent cliques whose hulls meet
    Radon {
        #[command(flatten)]
        graph: GraphSource,
        /// Embedding file; random if absent
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long)]
        max_clique_size: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        denom: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo campaign
    Mc {
        experiment: Option<String>,
        #[command(flatten)]
        args: McArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "records")]
        format: Format,
    },
    /// Re-run one trial; with --records, compare against the stored record
    Replay {
        #[arg(value_name = "SEED")]
        trial_seed: u64,
        #[arg(long)]
        experiment: Option<String>,
        #[command(flatten)]
        args: McArgs,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frequencies, intervals and outliers of a records file
    Summarize {
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| param(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| failed(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(failed),
    }
}

fn json_line(v: &serde_json::Value) -> String {
    serde_json::to_string(v).expect("serializable") + "\n"
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { graph, kind, max_dim, max_faces, out } => {
            let g = graph.load()?;
            let text = match kind {
                Kind::Graph => g.to_text(),
                _ => build(&g, kind, max_dim, max_faces)?.to_text(),
            };
            emit(&out, &text)
        }
        Command::Homology { source, top, out } => {
            let c = source.load()?;
            let top = top.unwrap_or(c.max_dim().saturating_sub(1));
            if top >= c.max_dim() && c.max_dim() > 0 {
                return Err(param(format!("--top {top} needs faces of dimension {}", top + 1)));
            }
            let prof = betti_profile(&c, top).map_err(failed)?;
            let mut text = String::new();
            for g in &prof.groups {
                text += &json_line(&json!({
                    "dim": g.dim, "betti": g.betti, "torsion": g.torsion_u64(), "group": g.to_string(),
                }));
            }
            text += &json_line(&json!({
                "f": f_vector(&c).counts, "euler_holds": prof.euler_holds, "morse_violations": prof.morse_violations,
            }));
            emit(&out, &text)
        }
        Command::Garland { graph, d, tol, out } => {
            let g = graph.load()?;
            let c = flag_complex_capped(&g, d, None).map_err(failed)?;
            let cert = garland_check(&c, d, tol).map_err(param)?;
            let links: Vec<_> = cert
                .links
                .iter()
                .map(|l| json!({ "face": l.face, "vertices": l.vertices, "connected": l.connected, "gap": l.gap }))
                .collect();
            let record = json!({
                "d": d, "pure": cert.pure, "threshold": cert.threshold, "verdict": cert.verdict,
                "min_gap": cert.min_gap(), "links": links,
            });
            emit(&out, &json_line(&record))
        }
        Command::Collapse { source, max_free_dim, collapse_seed, out } => {
            let c = source.load()?;
            let (residual, trace): (Complex, CollapseTrace) = collapse_greedy(&c, max_free_dim, RngSeed(collapse_seed));
            let record = json!({
                "residual_dim": residual.dim(), "residual_f": f_vector(&residual).counts, "trace": trace,
            });
            emit(&out, &json_line(&record))
        }
        Command::Radon { graph, embedding, d, max_clique_size, denom, out } => {
            let g = graph.load()?;
            let emb = match embedding {
                Some(path) => Embedding::from_text(&read(&path)?).map_err(param)?,
                None => Embedding::random(g.n(), d, denom, RngSeed(graph.seed).derive(1)).map_err(param)?,
            };
            let w = radon_witness(&g, &emb, max_clique_size.unwrap_or(d + 1)).map_err(param)?;
            let record = match w {
                Some(w) => {
                    w.verify(&g, &emb).map_err(failed)?;
                    json!({ "found": true, "witness": w.to_record() })
                }
                None => json!({ "found": false }),
            };
            emit(&out, &json_line(&record))
        }
        Command::Mc { experiment, args, out, format } => {
            let mut cfg = args.config(experiment.as_deref())?;
            if out.is_some() {
                cfg.out = out;
            }
            let records = run_experiment(&cfg).map_err(param)?;
            let text = match format {
                Format::Csv => records_to_csv(&records),
                Format::Records => records_to_lines(&records),
            };
            emit(&cfg.out, &text)?;
            if !records.is_empty() && records.iter().all(|r| r.aborted.is_some()) {
                return Err(CliError::AllAborted);
            }
            Ok(())
        }
        Command::Replay { trial_seed: seed, experiment, args, records, out } => {
            let cfg = args.config(experiment.as_deref())?;
            let stored = match &records {
                Some(path) => records_from_lines(&read(path)?).map_err(param)?,
                None => Vec::new(),
            };
            let n = match stored.iter().find(|r| r.seed == seed && r.experiment == cfg.experiment) {
                Some(r) if args.n.is_none() => r.n,
                _ if cfg.ns.len() == 1 => cfg.ns[0],
                _ => return Err(param("replay needs a single --n (or a records file naming the seed)")),
            };
            let fresh = run_trial(&cfg, n, seed);
            emit(&out, &records_to_lines(std::slice::from_ref(&fresh)))?;
            if records.is_some() {
                let old = stored
                    .iter()
                    .find(|r| r.seed == seed && r.n == n && r.experiment == cfg.experiment)
                    .ok_or_else(|| param(format!("no stored record for seed {seed} at n = {n}")))?;
                if old.measured_bytes() != fresh.measured_bytes() {
                    return Err(failed(format!("replay of seed {seed} differs from the stored record")));
                }
                eprintln!("replay of seed {seed} matches");
            }
            Ok(())
        }
        Command::Summarize { records, out } => {
            let records = records_from_lines(&read(&records)?).map_err(param)?;
            let summary = summarize(&records).map_err(param)?;
            emit(&out, &(serde_json::to_string_pretty(&summary).expect("serializable") + "\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zlab: {e}");
            ExitCode::from(e.code())
        }
    }
}
