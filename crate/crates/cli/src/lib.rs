//! Command-line front end: instance generation, balanced cut, hierarchical
//! clustering and evaluation. Every command prints one JSON document that
//! echoes the full configuration, so a run can be reproduced from its output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use semicut::balanced_cut::{estimate_alpha, solve_balanced_cut, DriverConfig};
use semicut::hierarchy::{dasgupta_cost, expected_cost, recursive_cluster, ClusterConfig, ClusterTree};
use semicut::instance::{
    generate_hsm, generate_semirandom, AdversaryAction, AdversaryScript, SemiRandomSpec, Side,
};
use semicut::io;
use semicut::{cut_value, Graph, Partition};

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "SEMICUT_SEED";

#[derive(Debug, Parser)]
#[command(name = "semicut", version, about = "Balanced cut and hierarchical clustering on semi-random graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a semi-random or hierarchical instance.
    Generate(GenerateArgs),
    /// Find a balanced cut of a graph.
    Solve(SolveArgs),
    /// Build a hierarchical clustering by recursive balanced cuts.
    Cluster(ClusterArgs),
    /// Score a partition or a tree on a graph.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Semirandom,
    Hsm,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "semirandom")]
    pub model: Model,
    /// Full `SemiRandomSpec` as JSON; overrides the model flags below.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.4)]
    pub a: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    /// Size of side A; `⌈n/2⌉` when unset.
    #[arg(long)]
    pub size_a: Option<usize>,
    /// Adversary script as JSON (`{"actions": [...]}`), applied after the flags below.
    #[arg(long)]
    pub adversary: Option<PathBuf>,
    /// Turn both sides into cliques.
    #[arg(long)]
    pub cliques: bool,
    /// Remove this fraction of the cut edges.
    #[arg(long)]
    pub remove_cut: Option<f64>,
    /// HSM generating tree in parent-array format.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// HSM level weights from the root down, for a balanced tree on `n` leaves.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<f64>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes `<out>.edges` and `<out>.json` (and `<out>.tree` for HSM).
    #[arg(long)]
    pub out: PathBuf,
}

/// Solver constants shared by `solve` and `cluster`; unset flags keep the
/// library defaults, and the resolved values are echoed in the output.
#[derive(Debug, Default, Args)]
pub struct DriverArgs {
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Final scale `delta`; sets the number of removal rounds.
    #[arg(long = "delta")]
    pub delta_final: Option<f64>,
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub taylor_tol: Option<f64>,
    #[arg(long)]
    pub taylor_max: Option<usize>,
    #[arg(long)]
    pub sketch_dim: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub cut_threshold: Option<f64>,
    #[arg(long)]
    pub norm_threshold: Option<f64>,
    #[arg(long)]
    pub c_pair: Option<f64>,
    #[arg(long)]
    pub c_star: Option<f64>,
    #[arg(long)]
    pub c_hat: Option<f64>,
    #[arg(long)]
    pub c_removal: Option<f64>,
    #[arg(long)]
    pub triangle_factor: Option<f64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub flatness_divisor: Option<f64>,
}

impl DriverArgs {
    pub fn apply(&self, cfg: &mut DriverConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(
            kappa, delta_final, delta0, max_rounds, gamma, epsilon, max_iters, taylor_tol, taylor_max, threads,
            cut_threshold, norm_threshold, c_pair, c_star, c_hat, c_removal, triangle_factor
        );
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    cfg.$field = self.$field;
                }
            )*};
        }
        set_opt!(sketch_dim, repetitions, sigma, flatness_divisor);
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Edge-list file.
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    pub a: f64,
    /// Target cut value in edges.
    #[arg(long, conflicts_with = "auto_alpha", required_unless_present = "auto_alpha")]
    pub alpha: Option<f64>,
    /// Search for the smallest workable alpha over `m, m/2, m/4, ...`.
    #[arg(long)]
    pub auto_alpha: bool,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub driver: DriverArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Write the partition (one label per vertex) here.
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Edge-list file.
    pub graph: PathBuf,
    /// Balance of every split.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub b: f64,
    /// Subsets at most this large get a balanced tree; `max(8, n^(2/3))` when unset.
    #[arg(long)]
    pub size_floor: Option<usize>,
    /// Depth constant `D`; `⌈ln n⌉` when unset.
    #[arg(long)]
    pub depth_constant: Option<usize>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub driver: DriverArgs,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Write the tree in parent-array format here.
    #[arg(long)]
    pub tree_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Edge-list file.
    pub graph: PathBuf,
    #[arg(long, conflicts_with = "tree", required_unless_present = "tree")]
    pub partition: Option<PathBuf>,
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Instance sidecar with the planted partition, for comparison.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

/// Result of a command: the JSON report and whether the run degraded.
#[derive(Debug)]
pub struct Report {
    pub json: Value,
    /// Set when the solver exhausted its budget or fell back to a default split.
    pub degraded: bool,
    pub json_out: Option<PathBuf>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.degraded {
            2
        } else {
            0
        }
    }

    /// Writes the report to `json_out`, or returns it for stdout.
    pub fn emit(&self) -> Result<Option<String>> {
        let text = format!("{}\n", serde_json::to_string_pretty(&self.json)?);
        match &self.json_out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
                Ok(None)
            }
            None => Ok(Some(text)),
        }
    }
}

pub fn run(cli: Cli) -> Result<Report> {
    match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Solve(args) => solve(&args),
        Command::Cluster(args) => cluster(&args),
        Command::Eval(args) => eval(&args),
    }
}

fn read_graph(path: &Path) -> Result<Graph> {
    io::load(path, io::read_edge_list).with_context(|| format!("reading graph {}", path.display()))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn generate(args: &GenerateArgs) -> Result<Report> {
    let edges_path = with_ext(&args.out, "edges");
    let meta_path = with_ext(&args.out, "json");
    match args.model {
        Model::Semirandom => {
            let spec = match &args.spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<SemiRandomSpec>(&text).context("parsing instance spec")?
                }
                None => {
                    let mut spec = SemiRandomSpec::balanced(args.n, args.a, args.eta, args.seed);
                    if let Some(size_a) = args.size_a {
                        if size_a > args.n {
                            bail!("size_a = {size_a} exceeds n = {}", args.n);
                        }
                        spec.size_a = size_a;
                        spec.size_b = args.n - size_a;
                    }
                    if args.cliques {
                        for side in [Side::A, Side::B] {
                            spec.adversary.actions.push(AdversaryAction::AddClique { side, vertices: None });
                        }
                    }
                    if let Some(fraction) = args.remove_cut {
                        spec.adversary.actions.push(AdversaryAction::RemoveCut { fraction: Some(fraction), edges: None });
                    }
                    if let Some(path) = &args.adversary {
                        let text =
                            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                        let script: AdversaryScript = serde_json::from_str(&text).context("parsing adversary script")?;
                        spec.adversary.actions.extend(script.actions);
                    }
                    spec
                }
            };
            let inst = generate_semirandom(&spec).context("generating instance")?;
            io::save(&edges_path, |w| io::write_edge_list(w, &inst.graph))?;
            let sidecar = inst.sidecar();
            io::save(&meta_path, |w| io::write_sidecar(w, &sidecar))?;
            Ok(Report {
                json: json!({
                    "command": "generate",
                    "model": Model::Semirandom,
                    "seed": inst.seed,
                    "n": inst.graph.n(),
                    "m": inst.graph.m(),
                    "planted_cut_value": inst.planted_cut_value,
                    "alpha_bound": inst.alpha_bound,
                    "spec": spec,
                    "files": { "edges": edges_path, "sidecar": meta_path },
                }),
                degraded: false,
                json_out: None,
            })
        }
        Model::Hsm => {
            let tree = match (&args.tree, args.levels.is_empty()) {
                (Some(path), _) => io::load(path, io::read_tree).with_context(|| format!("reading tree {}", path.display()))?,
                (None, false) => ClusterTree::leveled(args.n, &args.levels).context("building leveled tree")?,
                (None, true) => bail!("the hsm model needs --tree or --levels"),
            };
            let g = generate_hsm(&tree, args.seed).context("sampling HSM graph")?;
            let tree_path = with_ext(&args.out, "tree");
            io::save(&edges_path, |w| io::write_edge_list(w, &g))?;
            io::save(&tree_path, |w| io::write_tree(w, &tree))?;
            let reference = expected_cost(&tree)?;
            let json = json!({
                "command": "generate",
                "model": Model::Hsm,
                "seed": args.seed,
                "n": g.n(),
                "m": g.m(),
                "expected_cost": reference,
                "levels": args.levels,
                "files": { "edges": edges_path, "tree": tree_path },
            });
            std::fs::write(&meta_path, format!("{}\n", serde_json::to_string_pretty(&json)?))?;
            Ok(Report {
                json,
                degraded: false,
                json_out: None,
            })
        }
    }
}

fn solve(args: &SolveArgs) -> Result<Report> {
    let g = read_graph(&args.graph)?;
    let mut cfg = DriverConfig::new(args.a, args.alpha.unwrap_or(1.0), args.seed);
    args.driver.apply(&mut cfg);
    let (result, search) = if args.auto_alpha {
        let est = estimate_alpha(&g, &cfg)?;
        cfg.alpha = est.alpha;
        let trials: Vec<Value> = est.trials.iter().map(|&(alpha, value)| json!({"alpha": alpha, "value": value})).collect();
        (est.result, Some(json!({ "alpha": est.alpha, "trials": trials })))
    } else {
        (solve_balanced_cut(&g, &cfg)?, None)
    };
    if let Some(path) = &args.partition_out {
        io::save(path, |w| io::write_partition(w, &result.partition))?;
    }
    let degraded = result.exhausted || result.degraded.is_some();
    Ok(Report {
        json: json!({
            "command": "solve",
            "graph": { "n": g.n(), "m": g.m() },
            "config": cfg,
            "alpha_search": search,
            "value": result.value,
            "balance": result.balance,
            "sides": result.sides,
            "seed": result.seed,
            "result": result,
        }),
        degraded,
        json_out: args.json_out.clone(),
    })
}

fn cluster(args: &ClusterArgs) -> Result<Report> {
    let g = read_graph(&args.graph)?;
    let mut cfg = ClusterConfig::new(args.seed);
    cfg.b = args.b;
    cfg.size_floor = args.size_floor;
    cfg.depth_constant = args.depth_constant;
    args.driver.apply(&mut cfg.driver);
    let out = recursive_cluster(&g, &cfg)?;
    let cost = dasgupta_cost(&out.tree, &g, None)?;
    if let Some(path) = &args.tree_out {
        io::save(path, |w| io::write_tree(w, &out.tree))?;
    }
    let degraded = out.levels.iter().any(|l| l.fallback.is_some());
    let exhausted = out.levels.iter().filter(|l| l.exhausted).count();
    Ok(Report {
        json: json!({
            "command": "cluster",
            "graph": { "n": g.n(), "m": g.m() },
            "config": cfg,
            "size_floor": out.size_floor,
            "depth_constant": cfg.depth_constant(g.n()),
            "cost": cost,
            "exhausted_levels": exhausted,
            "levels": out.levels,
            "seed": args.seed,
        }),
        degraded,
        json_out: args.json_out.clone(),
    })
}

fn eval(args: &EvalArgs) -> Result<Report> {
    let g = read_graph(&args.graph)?;
    let sidecar = match &args.sidecar {
        Some(path) => Some(io::load(path, io::read_sidecar).with_context(|| format!("reading {}", path.display()))?),
        None => None,
    };
    if let Some(s) = &sidecar {
        if s.n != g.n() {
            bail!("sidecar describes {} vertices, graph has {}", s.n, g.n());
        }
    }
    let json = if let Some(path) = &args.partition {
        let p = io::load(path, io::read_partition).with_context(|| format!("reading {}", path.display()))?;
        if p.len() != g.n() {
            bail!("partition has {} labels, graph has {} vertices", p.len(), g.n());
        }
        if p.parts() != 2 {
            bail!("expected a bipartition, got {} parts", p.parts());
        }
        let value = cut_value(&g, &p)?;
        let planted = sidecar.as_ref().map(|s| -> Result<Value> {
            let planted = Partition::from_labels(s.planted.clone(), 2)?;
            let agree = (0..g.n()).filter(|&v| p.label(v) == planted.label(v)).count();
            let agreement = agree.max(g.n() - agree) as f64 / g.n().max(1) as f64;
            Ok(json!({
                "planted_cut_value": s.planted_cut_value,
                "ratio": value as f64 / s.planted_cut_value.max(1) as f64,
                "agreement": agreement,
            }))
        });
        json!({
            "command": "eval",
            "kind": "partition",
            "n": g.n(),
            "m": g.m(),
            "cut_value": value,
            "balance": p.min_side_fraction(),
            "sides": p.counts(),
            "planted": planted.transpose()?,
        })
    } else {
        let path = args.tree.as_ref().expect("clap requires --partition or --tree");
        let t = io::load(path, io::read_tree).with_context(|| format!("reading {}", path.display()))?;
        if t.n_leaves() != g.n() {
            bail!("tree has {} leaves, graph has {} vertices", t.n_leaves(), g.n());
        }
        let weighted = (0..t.n_nodes()).all(|v| t.children(v).is_none() || t.weight(v).is_some());
        json!({
            "command": "eval",
            "kind": "tree",
            "n": g.n(),
            "m": g.m(),
            "dasgupta_cost": dasgupta_cost(&t, &g, None)?,
            "expected_cost": if weighted { Some(expected_cost(&t)?) } else { None },
        })
    };
    Ok(Report {
        json,
        degraded: false,
        json_out: args.json_out.clone(),
    })
}
