//! `rwre`: seeded experiments on random walks in random environments.
//!
//! Every command prints a JSON report to stdout and, with `--out DIR`, also
//! writes the report and any CSV series into `DIR`. Exit codes: 0 complete or
//! PASS, 2 statistical FAIL, 3 input error, 4 capacity or non-termination.

mod inputs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rwre_core::construction::{
    build_staircase, verify_recurrence_bound, ChooseNConfig, ConstructionConfig, ConstructionError,
    ConstructionReport, GammaPolicy,
};
use rwre_core::environment::{sample_environment, SampledField};
use rwre_core::graph::GraphError;
use rwre_core::percolation::{cluster_report, percolate, ClusterReport};
use rwre_core::resistance::{
    expected_energy_bound, flow_energy, solve_voltages, unit_current_flow,
};
use rwre_core::tree::{
    branching_number, build_decay_flow, critical_probability, flow_energy_on_tree, TreeError,
    TreeSpec,
};
use rwre_core::walk::{first_return_time, run_coupled, run_walk, WalkError, WalkTrace};
use rwre_core::{seed, ResistanceDistribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use inputs::{DistArg, FloatList, GraphSpec, RadiusList};
use report::{OutDir, Report};

#[derive(Debug, Parser)]
#[command(
    name = "rwre",
    version,
    about = "Random walks in random environments on finite graph truncations"
)]
struct Cli {
    /// Base seed; every random quantity is derived from it.
    #[arg(long, global = true, env = "RWRE_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for Monte Carlo trials. Results do not depend on it.
    #[arg(long, global = true, env = "RWRE_THREADS")]
    threads: Option<usize>,
    /// Directory for the JSON report and CSV series.
    #[arg(long, global = true, env = "RWRE_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Effective resistance, unit current flow and its energy.
    Resist(ResistArgs),
    /// Bond percolation and the root cluster.
    Percolate(PercolateArgs),
    /// One walk, optionally coupled with its truncations.
    Walk(WalkArgs),
    /// Build the staircase distribution level by level.
    ConstructMu(ConstructArgs),
    /// Check the event bounds of one construction level.
    Verify(VerifyArgs),
    /// Branching number and critical probability of a tree.
    TreeDim(TreeDimArgs),
    /// Equal-splitting flow on a tree with its decay certificate.
    TreeFlow(TreeFlowArgs),
}

#[derive(Debug, Args, Serialize)]
struct GraphArgs {
    /// z1 | z2 | z3 | zD | tree:b=B | file:PATH
    #[arg(long, env = "RWRE_GRAPH")]
    graph: GraphSpec,
    /// Truncation radius (tree depth for tree graphs).
    #[arg(long, env = "RWRE_RADIUS")]
    radius: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct ResistArgs {
    /// z1 | z2 | z3 | zD | tree:b=B | file:PATH
    #[arg(long, env = "RWRE_GRAPH")]
    graph: GraphSpec,
    /// One radius, a list `2,4,8` or a range `2..6`.
    #[arg(long, env = "RWRE_RADIUS")]
    radius: Option<RadiusList>,
    /// `unit`, inline JSON or a JSON file.
    #[arg(long, env = "RWRE_DIST", default_value = "unit")]
    #[serde(skip)]
    dist: DistArg,
    /// Environments per radius.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
}

#[derive(Debug, Args, Serialize)]
struct PercolateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    samples: usize,
}

#[derive(Debug, Args, Serialize)]
struct WalkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    graph: GraphArgs,
    #[arg(long, env = "RWRE_DIST", default_value = "unit")]
    #[serde(skip)]
    dist: DistArg,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Start vertex; defaults to the root.
    #[arg(long)]
    start: Option<usize>,
    /// Truncation levels for a coupled run, e.g. `1,81,16201`.
    #[arg(long)]
    gammas: Option<FloatList>,
}

#[derive(Debug, Args, Serialize)]
struct ConstructArgs {
    #[command(flatten)]
    #[serde(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    levels: usize,
    /// Strictly increasing probabilities, e.g. `0.5,0.75,0.875`.
    #[arg(long)]
    p_seq: FloatList,
    /// Monte Carlo trials per horizon candidate.
    #[arg(long, env = "RWRE_TRIALS", default_value_t = 10_000)]
    trials: usize,
    /// dyadic | minimal
    #[arg(long, default_value = "dyadic")]
    gamma_policy: GammaPolicy,
    #[arg(long, default_value_t = 1 << 20)]
    max_n: usize,
    /// Accept a horizon once the upper bound is below target * safety.
    #[arg(long, default_value_t = 0.8)]
    safety: f64,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Report written by `construct-mu`.
    #[arg(long)]
    construction: PathBuf,
    /// Staircase distribution to test instead of the constructed one.
    #[arg(long)]
    #[serde(skip)]
    mu: Option<DistArg>,
    #[arg(long)]
    level: usize,
    #[arg(long, env = "RWRE_TRIALS", default_value_t = 10_000)]
    trials: usize,
    /// Override N_k, e.g. `--horizon 1` as a negative control.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct TreeDimArgs {
    /// `b=2`, `pattern=2,3` or `children=...` in breadth-first order.
    #[arg(long)]
    tree: TreeSpec,
    #[arg(long, default_value_t = 14)]
    depth: usize,
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct TreeFlowArgs {
    #[arg(long)]
    tree: TreeSpec,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 14)]
    depth: usize,
}

enum Status {
    Complete,
    Fail,
    Stalled,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let out = OutDir::new(cli.out.clone());
    let result = match &cli.command {
        Command::Resist(a) => resist(a, cli.seed, &out),
        Command::Percolate(a) => percolate_cmd(a, cli.seed, &out),
        Command::Walk(a) => walk(a, cli.seed, &out),
        Command::ConstructMu(a) => construct(a, cli.seed, &out),
        Command::Verify(a) => verify(a, cli.seed, &out),
        Command::TreeDim(a) => tree_dim(a, cli.seed, &out),
        Command::TreeFlow(a) => tree_flow(a, cli.seed, &out),
    };
    match result {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Ok(Status::Stalled) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let capacity = match e.downcast_ref::<GraphError>() {
        Some(GraphError::Capacity { .. }) => true,
        _ => {
            matches!(
                e.downcast_ref::<TreeError>(),
                Some(TreeError::Capacity { .. })
            ) || matches!(
                e.downcast_ref::<ConstructionError>(),
                Some(ConstructionError::Graph(GraphError::Capacity { .. }))
            )
        }
    };
    if capacity {
        4
    } else {
        3
    }
}

fn config<A: Serialize>(command: &str, seed: u64, args: &A, extra: Value) -> Value {
    let mut config = json!({ "command": command, "seed": seed, "args": args });
    if let (Value::Object(map), Value::Object(more)) = (&mut config, extra) {
        map.extend(more);
    }
    config
}

fn emit<R: Serialize>(out: &OutDir, name: &str, report: &Report<R>) -> Result<()> {
    let text = report.to_json()?;
    print!("{text}");
    out.write(&format!("{name}.json"), text.as_bytes())
}

#[derive(Debug, Serialize)]
struct ResistRow {
    radius: usize,
    seed: u64,
    #[serde(serialize_with = "report::resistance")]
    r_eff: f64,
    #[serde(serialize_with = "report::resistance")]
    energy: f64,
    /// Mean of the energy of this flow under a fresh environment.
    expected_energy: Option<f64>,
}

fn resist(a: &ResistArgs, base: u64, out: &OutDir) -> Result<Status> {
    let (dist, dist_bytes) = a.dist.load()?;
    let radii: Vec<Option<usize>> = match (&a.radius, &a.graph) {
        (Some(r), _) => r.0.iter().map(|&r| Some(r)).collect(),
        (None, GraphSpec::File(_)) => vec![None],
        (None, _) => bail!("--radius is required for this graph"),
    };
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let single = radii.len() == 1 && a.seeds == 1;
    let mut rows = Vec::new();
    for radius in radii {
        let g = a.graph.build(radius)?;
        for s in 0..a.seeds {
            let env_seed = seed::mix(base, s as u64);
            let env = sample_environment(&g, &dist, env_seed);
            let sol = solve_voltages(&g, &env, g.root, g.sink)?;
            let (energy, expected) = if sol.is_finite() {
                let flow = unit_current_flow(&g, &sol, &env)?;
                if single {
                    out.write_with("flow.csv", |w| Ok(flow.write_csv(&g, &env, w)?))?;
                }
                (
                    flow_energy(&flow, &env).energy,
                    Some(expected_energy_bound(&dist, &flow)),
                )
            } else {
                (f64::INFINITY, None)
            };
            if single {
                out.write_with("voltages.csv", |w| Ok(sol.write_csv(w)?))?;
                out.write_with("environment.csv", |w| Ok(env.write_csv(&g, w)?))?;
            }
            rows.push(ResistRow {
                radius: g.radius,
                seed: env_seed,
                r_eff: sol.effective_resistance,
                energy,
                expected_energy: expected,
            });
        }
    }
    out.write_with("resist.csv", |w| {
        let mut csv = String::from("radius,seed,r_eff,energy\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                r.radius,
                r.seed,
                report::format_resistance(r.r_eff),
                report::format_resistance(r.energy)
            ));
        }
        w.extend_from_slice(csv.as_bytes());
        Ok(())
    })?;
    let cfg = config("resist", base, a, json!({ "distribution": dist }));
    let inputs = [a.graph.input_bytes()?, dist_bytes];
    emit(
        out,
        "resist",
        &Report::new("resist", cfg, &inputs, json!({ "rows": rows }))?,
    )?;
    Ok(Status::Complete)
}

#[derive(Debug, Serialize)]
struct PercolationRow {
    sample: usize,
    seed: u64,
    open_edges: usize,
    open_fraction: f64,
    root_cluster: ClusterReport,
}

fn percolate_cmd(a: &PercolateArgs, base: u64, out: &OutDir) -> Result<Status> {
    if !(0.0..=1.0).contains(&a.p) {
        bail!("--p must lie in [0, 1], got {}", a.p);
    }
    let g = a.graph.graph.build(a.graph.radius)?;
    let mut rows = Vec::new();
    for i in 0..a.samples {
        let s = seed::mix(base, i as u64);
        let sample = percolate(&g, a.p, s);
        if a.samples == 1 {
            out.write_with("open_edges.csv", |w| Ok(sample.write_csv(w)?))?;
        }
        rows.push(PercolationRow {
            sample: i,
            seed: s,
            open_edges: sample.open.count(),
            open_fraction: sample.open_fraction(),
            root_cluster: cluster_report(&g, &sample, g.root)?,
        });
    }
    out.write_with("percolation.csv", |w| {
        let mut csv = String::from(
            "sample,seed,open_edges,open_fraction,cluster_size,touches_sink,resistance\n",
        );
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.sample,
                r.seed,
                r.open_edges,
                r.open_fraction,
                r.root_cluster.size,
                r.root_cluster.touches_sink,
                report::format_resistance(r.root_cluster.resistance)
            ));
        }
        w.extend_from_slice(csv.as_bytes());
        Ok(())
    })?;
    let cfg = config("percolate", base, a, json!({}));
    let report = Report::new(
        "percolate",
        cfg,
        &[a.graph.graph.input_bytes()?],
        json!({ "rows": rows }),
    )?;
    emit(out, "percolate", &report)?;
    Ok(Status::Complete)
}

#[derive(Debug, Serialize)]
struct TraceSummary {
    steps: usize,
    absorbed: bool,
    first_return: Option<usize>,
    end: usize,
}

impl TraceSummary {
    fn of(t: &WalkTrace) -> Self {
        Self {
            steps: t.steps(),
            absorbed: t.absorbed,
            first_return: first_return_time(t, t.start),
            end: *t.vertices.last().unwrap_or(&t.start),
        }
    }
}

fn walk(a: &WalkArgs, base: u64, out: &OutDir) -> Result<Status> {
    let (dist, dist_bytes) = a.dist.load()?;
    let g = a.graph.graph.build(a.graph.radius)?;
    let start = a.start.unwrap_or(g.root);
    if start >= g.vertex_count() {
        bail!("start vertex {start} out of range");
    }
    let (env_seed, walk_seed) = seed::trial_seeds(base, 0);
    let field = SampledField {
        distribution: &dist,
        seed: env_seed,
    };
    let result = match &a.gammas {
        None => match run_walk(&g, &field, start, a.steps, walk_seed) {
            Ok(trace) => {
                out.write_with("trace.csv", |w| Ok(trace.write_csv(w)?))?;
                json!({ "isolated": false, "walk": TraceSummary::of(&trace) })
            }
            Err(WalkError::IsolatedStart(_)) => json!({ "isolated": true }),
            Err(e) => return Err(e.into()),
        },
        Some(gammas) => match run_coupled(&g, &field, &gammas.0, start, a.steps, walk_seed) {
            Ok(run) => {
                out.write_with("trace.csv", |w| Ok(run.base.write_csv(w)?))?;
                for (k, level) in run.levels.iter().enumerate() {
                    out.write_with(&format!("trace_level{}.csv", k + 1), |w| {
                        Ok(level.trace.write_csv(w)?)
                    })?;
                }
                let levels: Vec<Value> = run
                    .levels
                    .iter()
                    .map(|l| json!({ "gamma": l.gamma, "stop_time": l.stop_time, "walk": TraceSummary::of(&l.trace) }))
                    .collect();
                json!({
                    "isolated": false,
                    "walk": TraceSummary::of(&run.base),
                    "levels": levels,
                    "coupling_holds": run.coupling_holds(),
                })
            }
            Err(WalkError::IsolatedStart(_)) => json!({ "isolated": true }),
            Err(e) => return Err(e.into()),
        },
    };
    let cfg = config(
        "walk",
        base,
        a,
        json!({ "distribution": dist, "start": start }),
    );
    let inputs = [a.graph.graph.input_bytes()?, dist_bytes];
    emit(out, "walk", &Report::new("walk", cfg, &inputs, result)?)?;
    Ok(Status::Complete)
}

fn construct(a: &ConstructArgs, base: u64, out: &OutDir) -> Result<Status> {
    let g = a.graph.graph.build(a.graph.radius)?;
    let config_core = ConstructionConfig {
        choose: ChooseNConfig {
            trials: a.trials,
            safety: a.safety,
            max_n: a.max_n,
        },
        policy: a.gamma_policy,
        seed: base,
    };
    let cfg = config("construct-mu", base, a, json!({}));
    let inputs = [a.graph.graph.input_bytes()?];
    match build_staircase(&g, g.root, &a.p_seq.0, a.levels, &config_core) {
        Ok((mu, report)) => {
            let descriptor =
                serde_json::to_string_pretty(&ResistanceDistribution::Staircase(mu))? + "\n";
            out.write("mu.json", descriptor.as_bytes())?;
            emit(
                out,
                "construction",
                &Report::new("construct-mu", cfg, &inputs, report)?,
            )?;
            Ok(Status::Complete)
        }
        Err(ConstructionError::NonTermination {
            level,
            max_n,
            target,
            last_upper,
            search,
        }) => {
            let result = json!({
                "non_termination": {
                    "level": level,
                    "max_n": max_n,
                    "target": target,
                    "last_upper": last_upper,
                    "search": search,
                }
            });
            emit(
                out,
                "construction",
                &Report::new("construct-mu", cfg, &inputs, result)?,
            )?;
            eprintln!("level {level}: no horizon up to {max_n} met the target {target}");
            Ok(Status::Stalled)
        }
        Err(e) => Err(e.into()),
    }
}

/// The parts of a stored `construct-mu` report that `verify` needs.
#[derive(Debug, Deserialize)]
struct StoredConstruction {
    config: StoredConfig,
    result: ConstructionReport,
}

#[derive(Debug, Deserialize)]
struct StoredConfig {
    args: StoredGraph,
}

#[derive(Debug, Deserialize)]
struct StoredGraph {
    graph: String,
    radius: Option<usize>,
}

fn verify(a: &VerifyArgs, base: u64, out: &OutDir) -> Result<Status> {
    let raw = std::fs::read(&a.construction)
        .with_context(|| format!("reading {}", a.construction.display()))?;
    let stored: StoredConstruction = serde_json::from_value(report::read_json(&a.construction)?)
        .with_context(|| format!("{} is not a construct-mu report", a.construction.display()))?;
    let spec: GraphSpec = stored
        .config
        .args
        .graph
        .parse()
        .map_err(anyhow::Error::msg)?;
    let g = spec.build(stored.config.args.radius)?;
    let mut bound = stored.result.level_bound(a.level).with_context(|| {
        format!(
            "level {} not in construction with {} levels",
            a.level,
            stored.result.levels.len()
        )
    })?;
    if let Some(n) = a.horizon {
        bound.n = n;
    }
    let (mu, mu_bytes) = match &a.mu {
        None => (stored.result.mu.clone(), Vec::new()),
        Some(arg) => match arg.load()? {
            (ResistanceDistribution::Staircase(mu), bytes) => (mu, bytes),
            _ => bail!("--mu must be a staircase distribution"),
        },
    };
    let report = verify_recurrence_bound(&g, &mu, bound, g.root, a.trials, base)?;
    eprint!("{}", report.table());
    let pass = report.pass;
    let cfg = config("verify", base, a, json!({ "mu": mu }));
    emit(
        out,
        "verify",
        &Report::new("verify", cfg, &[raw, mu_bytes], report)?,
    )?;
    Ok(if pass { Status::Complete } else { Status::Fail })
}

fn tree_dim(a: &TreeDimArgs, base: u64, out: &OutDir) -> Result<Status> {
    let estimate = branching_number(&a.tree, a.depth, a.tol)?;
    let p_c = critical_probability(estimate.dim)?;
    for w in &estimate.warnings {
        eprintln!("warning: {w}");
    }
    let cfg = config("tree-dim", base, a, json!({}));
    let result = json!({ "branching_number": estimate, "p_c": p_c });
    emit(out, "tree_dim", &Report::new("tree-dim", cfg, &[], result)?)?;
    Ok(Status::Complete)
}

fn tree_flow(a: &TreeFlowArgs, base: u64, out: &OutDir) -> Result<Status> {
    let flow = build_decay_flow(&a.tree, a.rho, a.depth)?;
    let energy = flow_energy_on_tree(&flow);
    out.write_with("tree_flow.csv", |w| Ok(flow.write_csv(w)?))?;
    let certificate = flow.certificate();
    let pass = certificate.pass;
    let cfg = config("tree-flow", base, a, json!({}));
    let result =
        json!({ "certificate": certificate, "decay_holds": flow.decay_holds(), "energy": energy });
    emit(
        out,
        "tree_flow",
        &Report::new("tree-flow", cfg, &[], result)?,
    )?;
    Ok(if pass { Status::Complete } else { Status::Fail })
}
