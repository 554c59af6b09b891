mod report;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use prophet_core::conflict::d_bound_intervals;
use prophet_core::exante::RowKind;
use prophet_core::instance::{
    gen_example1, gen_interval_instance, gen_random, parse_instance_with, serialize_instance, MatroidKind, ParseOptions,
};
use prophet_core::json::real;
use prophet_core::oracle::brute_force_opt;
use prophet_core::policy::{simulate, simulate_baseline, BaselineEvaluator, BaselineMode, MC_RESIDUAL_SAMPLES};
use prophet_core::xos::{gen_random_xos, parse_xos, serialize_xos, xos_simulate, XosGenParams};
use prophet_core::{solve_exante, AgentSet, ConflictGraph, Error, Estimate, InstanceF64, PricePlan, XosInstanceF64, XosPlan};

use report::{Field, Report};

#[derive(Parser)]
#[command(name = "prophet", version, about = "Threshold policies for online selection under a matroid and a conflict graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance.
    Gen(GenArgs),
    /// Solve the ex-ante LP and print the prices.
    Solve(SolveArgs),
    /// Monte Carlo estimate of the policy's welfare.
    Simulate(SimulateArgs),
    /// Run a verification suite and print its margin table.
    Verify(verify::VerifyArgs),
    /// Policy against the residual-difference baseline.
    CompareBaseline(CompareArgs),
    /// Monte Carlo estimate for an XOS instance.
    XosSimulate(XosSimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Free,
    Uniform,
    Partition,
    Laminar,
    Explicit,
}

impl From<Kind> for MatroidKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Free => MatroidKind::Free,
            Kind::Uniform => MatroidKind::Uniform,
            Kind::Partition => MatroidKind::Partition,
            Kind::Laminar => MatroidKind::Laminar,
            Kind::Explicit => MatroidKind::Explicit,
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("family").required(true).args(["example1", "random", "interval", "xos"])))]
struct GenArgs {
    /// The long-interval separation instance.
    #[arg(long)]
    example1: bool,
    /// Random valuations, random matroid, random edges.
    #[arg(long)]
    random: bool,
    /// Interval requests only, free matroid.
    #[arg(long)]
    interval: bool,
    /// Random XOS instance.
    #[arg(long)]
    xos: bool,
    #[arg(long = "T", default_value_t = 10)]
    agents: usize,
    #[arg(long = "C", default_value_t = 2.5)]
    c: f64,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Outcomes per agent.
    #[arg(long = "K", default_value_t = 3)]
    k: usize,
    #[arg(long, value_enum, default_value = "free")]
    kind: Kind,
    #[arg(long, default_value_t = 0.3)]
    edge_prob: f64,
    /// Interval resources.
    #[arg(long = "J", default_value_t = 2)]
    resources: usize,
    /// Interval requests per agent (or item), at most.
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    max_items: usize,
    #[arg(long, default_value_t = 2)]
    clauses: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArg {
    instance: PathBuf,
    /// Accept negative support values.
    #[arg(long)]
    allow_negative: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    /// Canonical JSON report instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Include the decomposition of x* into independent sets.
    #[arg(long)]
    emit_mixture: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[command(flatten)]
    sampling: SampleArgs,
    /// Also simulate the baseline with this γ.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[command(flatten)]
    sampling: SampleArgs,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
}

#[derive(Args)]
struct XosSimulateArgs {
    instance: PathBuf,
    #[command(flatten)]
    sampling: SampleArgs,
}

pub(crate) fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Why a command did not succeed, mapped onto the exit code.
pub(crate) enum Failure {
    Input(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(a: &InstanceArg) -> std::result::Result<InstanceF64, Failure> {
    let opts = ParseOptions { allow_negative: a.allow_negative };
    parse_instance_with(&read(&a.instance)?, opts).map_err(|e| Failure::Input(format!("{}: {e}", a.instance.display())))
}

fn emit(r: &Report, json: bool) {
    if json {
        print!("{}", r.to_json());
    } else {
        print!("{}", r.to_table());
    }
}

fn estimate_report(e: &Estimate) -> Report {
    let mut r = Report::new();
    r.real("mean", e.mean).real("std", e.std).real("radius_3sigma", e.radius);
    r
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b != 0.0 && a.is_finite() && b.is_finite()).then(|| a / b)
}

/// `d2` of the instance's graph, or the interval bound when the graph is too
/// large for the exact computation.
fn d2_with_source(inst: &InstanceF64, g: &ConflictGraph) -> (Option<usize>, &'static str) {
    match g.d2() {
        Ok(d) => (Some(d), "exact"),
        Err(_) => match d_bound_intervals(inst.conflicts(), inst.agents()) {
            Ok(d) => (Some(d), "interval-bound"),
            Err(_) => (None, "unavailable"),
        },
    }
}

fn header(r: &mut Report, command: &str, digest: String, metadata: &str) {
    r.str("command", command).str("digest", digest).str("metadata", metadata);
}

fn sampling(r: &mut Report, s: &SampleArgs) {
    r.int("seed", s.seed as usize).int("samples", s.samples).int("threads", s.threads);
}

fn agent_list(s: &AgentSet) -> String {
    format!("[{}]", s.iter().map(|t| (t + 1).to_string()).collect::<Vec<_>>().join(", "))
}

fn gen(a: GenArgs) -> Outcome {
    let text = if a.xos {
        let p = XosGenParams {
            agents: a.agents,
            max_items: a.max_items,
            k: a.k,
            max_clauses: a.clauses,
            kind: a.kind.into(),
            edge_prob: a.edge_prob,
            resources: if a.d > 0 { a.resources } else { 0 },
            d: a.d,
            seed: a.seed,
        };
        serialize_xos(&gen_random_xos::<f64>(&p)?)
    } else {
        let inst: InstanceF64 = if a.example1 {
            gen_example1(a.agents, a.c, a.eps)?
        } else if a.interval {
            gen_interval_instance(a.agents, a.resources, a.d, a.k, a.seed)?
        } else {
            gen_random(a.agents, a.k, a.kind.into(), a.edge_prob, a.seed)?
        };
        serialize_instance(&inst)
    };
    match a.output {
        Some(path) => std::fs::write(&path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn row_kind(k: RowKind) -> String {
    match k {
        RowKind::Rank => "rank".into(),
        RowKind::Interval { agent, resource } => format!("interval agent={} resource={}", agent + 1, resource + 1),
        RowKind::Clique => "clique".into(),
        RowKind::Neighborhood { agent } => format!("neighborhood agent={}", agent + 1),
    }
}

fn solve(a: SolveArgs) -> Outcome {
    let inst = load(&a.input)?;
    let ex = solve_exante(&inst)?;
    let plan = PricePlan::new(&inst, &ex)?;
    let (d2, source) = d2_with_source(&inst, &plan.graph);
    let mut r = Report::new();
    header(&mut r, "solve", inst.digest(), inst.metadata());
    r.int("agents", inst.agents())
        .real("lp_objective", ex.objective)
        .int("d1", plan.d1)
        .push("d2", d2.map_or(Field::Null, |d| Field::Int(d as u64)))
        .str("d2_source", source)
        .real("restricted_prophet", plan.restricted_prophet_value())
        .push("x_star", Field::Reals(ex.x_star.clone()))
        .push("y_star", Field::Reals(ex.y_star.clone()))
        .push("pi", Field::Reals(plan.pi.clone()));
    let rows = ex
        .rows
        .iter()
        .zip(&ex.slacks)
        .map(|(row, slack)| {
            let agents: Vec<String> = row.agents.iter().map(|t| (t + 1).to_string()).collect();
            format!(
                "{{\"kind\": {}, \"agents\": [{}], \"rhs\": {}, \"slack\": {}}}",
                serde_json::to_string(&row_kind(row.kind)).expect("string serializes"),
                agents.join(", "),
                real(row.rhs),
                real(*slack)
            )
        })
        .collect();
    r.push("rows", Field::Raw(rows));
    if a.emit_mixture {
        let atoms = plan
            .mixture
            .atoms()
            .iter()
            .map(|(s, w)| format!("{{\"agents\": {}, \"weight\": {}}}", agent_list(s), real(*w)))
            .collect();
        r.push("mixture", Field::Raw(atoms));
    }
    emit(&r, a.json);
    Ok(())
}

/// OPT and where it came from: brute force within its guard, otherwise the
/// exact unrestricted residual at `∅`.
fn prophet_opt(inst: &InstanceF64) -> (Option<f64>, &'static str) {
    if let Ok(o) = brute_force_opt(inst) {
        return (Some(o), "brute-force");
    }
    match BaselineEvaluator::new(inst, BaselineMode::Exact) {
        Ok(ev) => (Some(ev.residual(&AgentSet::new())), "exact-residual"),
        Err(_) => (None, "unavailable"),
    }
}

fn baseline_evaluator(inst: &InstanceF64, seed: u64) -> std::result::Result<BaselineEvaluator<f64>, Failure> {
    match BaselineEvaluator::new(inst, BaselineMode::Exact) {
        Ok(ev) => Ok(ev),
        Err(Error::Guard { .. }) => {
            Ok(BaselineEvaluator::new(inst, BaselineMode::MonteCarlo { samples: MC_RESIDUAL_SAMPLES, seed })?)
        }
        Err(e) => Err(e.into()),
    }
}

fn mode_name(m: BaselineMode) -> String {
    match m {
        BaselineMode::Exact => "exact".into(),
        BaselineMode::MonteCarlo { samples, .. } => format!("monte-carlo ({samples} draws per residual)"),
    }
}

fn policy_report(
    command: &str,
    inst: &InstanceF64,
    s: &SampleArgs,
    gamma: Option<f64>,
) -> std::result::Result<Report, Failure> {
    let ex = solve_exante(inst)?;
    let plan = PricePlan::new(inst, &ex)?;
    let (d2, source) = d2_with_source(inst, &plan.graph);
    let lp = ex.objective;
    let restricted = plan.restricted_prophet_value();
    let policy = simulate(&plan, inst.valuations(), s.samples, s.seed, s.threads)?;
    let (opt, opt_source) = prophet_opt(inst);
    let baseline = match gamma {
        Some(g) => {
            let ev = baseline_evaluator(inst, s.seed)?;
            let est = simulate_baseline(&ev, inst.valuations(), g, s.samples, s.seed, s.threads)?;
            Some((g, ev.mode(), est))
        }
        None => None,
    };

    let mut r = Report::new();
    header(&mut r, command, inst.digest(), inst.metadata());
    r.int("agents", inst.agents());
    sampling(&mut r, s);
    r.real("lp_objective", lp)
        .int("d1", plan.d1)
        .push("d2", d2.map_or(Field::Null, |d| Field::Int(d as u64)))
        .str("d2_source", source)
        .real("restricted_prophet", restricted)
        .opt_real("opt", opt)
        .str("opt_source", opt_source)
        .obj("policy", estimate_report(&policy));
    if let Some((g, mode, est)) = &baseline {
        let mut b = estimate_report(est);
        b.real("gamma", *g).str("residual", mode_name(*mode));
        r.obj("baseline", b);
    }
    let mut ratios = Report::new();
    ratios
        .opt_real("policy_over_lp", ratio(policy.mean, lp))
        .opt_real("policy_over_restricted", ratio(policy.mean, restricted))
        .opt_real("restricted_over_lp", ratio(restricted, lp))
        .opt_real("policy_over_opt", opt.and_then(|o| ratio(policy.mean, o)))
        .opt_real("lp_over_opt", opt.and_then(|o| ratio(lp, o)));
    if let Some((_, _, est)) = &baseline {
        ratios
            .opt_real("baseline_over_opt", opt.and_then(|o| ratio(est.mean, o)))
            .opt_real("baseline_over_policy", ratio(est.mean, policy.mean));
    }
    ratios.opt_real("guarantee", d2.map(|d| 1.0 / ((plan.d1 + 1) * (d + 1)) as f64));
    r.obj("ratios", ratios);
    Ok(r)
}

fn xos_simulate_cmd(a: XosSimulateArgs) -> Outcome {
    let text = read(&a.instance)?;
    let x: XosInstanceF64 =
        parse_xos(&text).map_err(|e| Failure::Input(format!("{}: {e}", a.instance.display())))?;
    let plan = XosPlan::new(&x)?;
    let d2 = x.d2()?;
    let s = &a.sampling;
    let est = xos_simulate(&x, &plan, s.samples, s.seed, s.threads)?;
    let opt = plan.stats.opt;
    let restricted = plan.restricted_prophet_value(&x);
    let mut r = Report::new();
    header(&mut r, "xos-simulate", x.digest(), x.metadata());
    r.int("agents", x.agents()).int("items", x.item_count());
    sampling(&mut r, s);
    r.str("prophet", "independent product of the per-agent outcome distributions")
        .real("opt", opt)
        .int("d1", plan.d1)
        .int("d2", d2)
        .str("d2_source", "exact")
        .real("restricted_prophet", restricted)
        .obj("policy", estimate_report(&est));
    let mut ratios = Report::new();
    ratios
        .opt_real("policy_over_opt", ratio(est.mean, opt))
        .opt_real("restricted_over_opt", ratio(restricted, opt))
        .real("guarantee", 1.0 / ((plan.d1 + 1) * (d2 + 1)) as f64);
    r.obj("ratios", ratios);
    emit(&r, s.json);
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Simulate(a) => {
            let inst = load(&a.input)?;
            emit(&policy_report("simulate", &inst, &a.sampling, a.gamma)?, a.sampling.json);
            Ok(())
        }
        Command::CompareBaseline(a) => {
            let inst = load(&a.input)?;
            emit(&policy_report("compare-baseline", &inst, &a.sampling, Some(a.gamma))?, a.sampling.json);
            Ok(())
        }
        Command::Verify(a) => verify::run(a),
        Command::XosSimulate(a) => xos_simulate_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let out = run(cli);
    eprintln!("wall time {:.3}s", start.elapsed().as_secs_f64());
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
