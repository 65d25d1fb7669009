use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use sndp_core::certify::certify_trace;
use sndp_core::connectivity::{edge_connectivity, element_connectivity, hyperedge_connectivity};
use sndp_core::instances::{
    generate, instance_to_json, parse_instance, serialize_instance, GenParams, Instance, Kind,
};
use sndp_core::oracle::{explore_problem1, OracleError};
use sndp_core::rational::{self, Rational};
use sndp_core::reductions::{elem_to_hyper, hyper_to_nw_elem, nw_elem_to_ew_elem, ReductionMap};
use sndp_core::requirements::{check_skew_supermodular, RequirementFn, MAX_PAIR_CHECK_VERTICES};
use sndp_core::rounding::{
    solution_report, solve_ecsndp, solve_elemsndp, solve_hypersndp, SndpSolution,
};

#[derive(Parser)]
#[command(
    name = "sndp",
    version,
    about = "Exact iterated rounding for survivable network design"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random feasible instance
    Gen(GenArgs),
    /// Solve an instance and print the solution report
    Solve(SolveArgs),
    /// Check a solution (or a fresh solve) and certify its LP vertices
    Verify(VerifyArgs),
    /// Apply one reduction and write the reduced instance
    Reduce(ReduceArgs),
    /// Solve every instance in a directory
    Bench(BenchArgs),
    /// Search hypergraph LPs for vertices with all coordinates below 1/d
    Explore(ExploreArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Maximum hyperedge size (hyper only)
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    rmax: u32,
    #[arg(long, default_value_t = 1)]
    cost_min: i64,
    #[arg(long, default_value_t = 10)]
    cost_max: i64,
    /// Number of requirement pairs (default: random in 1..=n)
    #[arg(long)]
    pairs: Option<usize>,
    /// Terminal count (elem only)
    #[arg(long)]
    terminals: Option<usize>,
    /// Put weights on non-terminals (elem only)
    #[arg(long)]
    node_weights: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse()
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// Certify every LP vertex and re-check the requirement function
    #[arg(long)]
    check_invariants: bool,
    /// Write the run report here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the solution report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Solution report to check; without it the instance is solved afresh
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reduction {
    ElemToHyper,
    HyperToNwElem,
    NwElemToEwElem,
}

#[derive(clap::Args)]
struct ReduceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    to: Reduction,
    #[arg(long)]
    out: PathBuf,
    /// Sidecar file for the solution map (default: OUT with .map.json)
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    dir: PathBuf,
    /// Write per-instance reports as JSON here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ExploreArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for summary.json and one file per candidate
    #[arg(long)]
    out_dir: PathBuf,
}

/// Exit status 1: the input was understood but a check failed.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn fail(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(CheckFailed(msg.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Explore(a) => cmd_explore(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON");
    s.push('\n');
    s
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    let params = GenParams {
        kind: a.kind,
        n: a.n,
        m: a.m,
        max_degree: a.d,
        rmax: a.rmax,
        cost_min: a.cost_min,
        cost_max: a.cost_max,
        pairs: a.pairs,
        terminals: a.terminals,
        node_weights: a.node_weights,
        seed: a.seed,
    };
    let inst = generate(&params)?;
    write_or_print(a.out.as_deref(), &serialize_instance(&inst))
}

fn solve(inst: &Instance) -> Result<SndpSolution, sndp_core::rounding::RoundingError> {
    match inst {
        Instance::Ec(i) => solve_ecsndp(&i.graph, &i.requirements),
        Instance::Elem(i) => solve_elemsndp(i),
        Instance::Hyper(i) => solve_hypersndp(&i.hypergraph, &i.requirements),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Check {
    Pass,
    Fail,
    Skipped,
}

impl From<bool> for Check {
    fn from(ok: bool) -> Self {
        if ok {
            Check::Pass
        } else {
            Check::Fail
        }
    }
}

/// Named checks on a solved instance, plus the certification JSON when `deep`.
fn run_checks(
    inst: &Instance,
    sol: &SndpSolution,
    deep: bool,
) -> (Vec<(&'static str, Check)>, Value) {
    let mut checks = vec![
        ("feasibility", Check::Pass),
        (
            "ratio_within_guarantee",
            Check::from(sol.cost <= &sol.guarantee.factor * &sol.lower_bound),
        ),
    ];
    if !deep {
        for name in [
            "vertex_certificates",
            "half_edge",
            "laminar",
            "counting_identities",
            "unique_child",
            "skew_supermodular",
        ] {
            checks.push((name, Check::Skipped));
        }
        return (checks, Value::Null);
    }
    let certs = match certify_trace(&sol.trace) {
        Ok(c) => c,
        Err(e) => {
            checks.push(("vertex_certificates", Check::Fail));
            return (checks, json!({ "error": e.to_string() }));
        }
    };
    let vertex_ok = sol
        .trace
        .iterations
        .iter()
        .all(|it| sndp_core::exactlp::certify_vertex(&it.vertex, &it.lp).is_ok())
        && certs.iter().all(|c| c.vertex_ok);
    checks.push(("vertex_certificates", vertex_ok.into()));
    checks.push(("half_edge", certs.iter().all(|c| c.half_edge_ok).into()));
    let full: Vec<_> = certs.iter().filter(|c| !c.partial).collect();
    let mark = |ok: bool| {
        if full.is_empty() {
            Check::Skipped
        } else {
            Check::from(ok)
        }
    };
    checks.push(("laminar", mark(full.iter().all(|c| c.family.is_some()))));
    checks.push((
        "counting_identities",
        mark(full.iter().all(|c| c.tight_rows && c.beta && c.alpha_root)),
    ));
    checks.push(("unique_child", mark(full.iter().all(|c| c.unique_child))));
    let n = inst.n();
    let skew = if n <= MAX_PAIR_CHECK_VERTICES {
        let f = RequirementFn::pairwise_max(n, inst.requirements().clone());
        check_skew_supermodular(&f)
            .map(|v| Check::from(v.passed()))
            .unwrap_or(Check::Skipped)
    } else {
        Check::Skipped
    };
    checks.push(("skew_supermodular", skew));
    (
        checks,
        Value::Array(certs.iter().map(|c| c.to_json()).collect()),
    )
}

fn ratio_fields(cost: &Rational, bound: &Rational) -> (Value, Value) {
    if bound == &Rational::from_integer(0.into()) {
        return (Value::Null, Value::Null);
    }
    let r = cost / bound;
    (json!(rational::format(&r)), json!(rational::approx(&r, 6)))
}

fn dump_path(report: Option<&Path>, input: &Path) -> PathBuf {
    match report {
        Some(r) => r.with_extension("dump.json"),
        None => input.with_extension("dump.json"),
    }
}

fn cmd_solve(a: SolveArgs) -> anyhow::Result<()> {
    let inst = read_instance(&a.input)?;
    let start = Instant::now();
    let result = solve(&inst);
    let wall = start.elapsed();
    let sol = match result {
        Ok(s) => s,
        Err(e) => {
            let dump = dump_path(a.report.as_deref(), &a.input);
            let body = json!({ "instance": instance_to_json(&inst), "error": e.to_string() });
            fs::write(&dump, pretty(&body))
                .with_context(|| format!("writing {}", dump.display()))?;
            return Err(fail(format!("{e} (dump: {})", dump.display())));
        }
    };
    let report_json = solution_report(&sol);
    write_or_print(a.out.as_deref(), &pretty(&report_json))?;
    let (checks, certs) = run_checks(&inst, &sol, a.check_invariants);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, c)| *c == Check::Fail)
        .map(|(n, _)| *n)
        .collect();
    let dump = (!failed.is_empty()).then(|| dump_path(a.report.as_deref(), &a.input));
    if let Some(p) = &dump {
        let body = json!({
            "instance": instance_to_json(&inst),
            "solution": report_json,
            "certifications": certs,
            "failed": failed,
        });
        fs::write(p, pretty(&body)).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(path) = &a.report {
        let (ratio, approx) = ratio_fields(&sol.cost, &sol.lower_bound);
        let checklist: serde_json::Map<String, Value> = checks
            .iter()
            .map(|(n, c)| (n.to_string(), json!(c)))
            .collect();
        let report = json!({
            "instance": a.input.display().to_string(),
            "variant": inst.kind().as_str(),
            "cost": rational::to_json(&sol.cost),
            "lp_lower_bound": rational::to_json(&sol.lower_bound),
            "ratio": ratio,
            "ratio_approx": approx,
            "wall_time_ms": wall.as_millis() as u64,
            "checks": checklist,
            "dump": dump.as_ref().map(|p| p.display().to_string()),
            "certifications": certs,
        });
        fs::write(path, pretty(&report)).with_context(|| format!("writing {}", path.display()))?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fail(format!(
            "failed checks: {} (dump: {})",
            failed.join(", "),
            dump.unwrap().display()
        )))
    }
}

fn pair_connectivity(
    inst: &Instance,
    edges: &[usize],
    u: usize,
    v: usize,
) -> anyhow::Result<usize> {
    Ok(match inst {
        Instance::Ec(i) => edge_connectivity(&i.graph, edges, u, v),
        Instance::Elem(i) => element_connectivity(i, edges, u, v)?,
        Instance::Hyper(i) => hyperedge_connectivity(&i.hypergraph, edges, u, v),
    })
}

fn cost_of(inst: &Instance, edges: &[usize], nodes: &[usize]) -> Rational {
    match inst {
        Instance::Ec(i) => rational::sum(edges.iter().map(|&e| &i.graph.edges[e].cost)),
        Instance::Elem(i) => {
            rational::sum(edges.iter().map(|&e| &i.graph.edges[e].cost))
                + rational::sum(nodes.iter().filter_map(|z| i.node_weights.get(z)))
        }
        Instance::Hyper(i) => {
            rational::sum(edges.iter().map(|&e| &i.hypergraph.hyperedges[e].cost))
        }
    }
}

fn id_list(v: &Value, field: &str) -> anyhow::Result<Vec<usize>> {
    match v.get(field) {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|x| {
                x.as_u64()
                    .map(|i| i as usize)
                    .ok_or_else(|| anyhow!("{field} must hold ids"))
            })
            .collect(),
        Some(_) => Err(anyhow!("{field} must be an array")),
    }
}

fn cmd_verify(a: VerifyArgs) -> anyhow::Result<()> {
    let inst = read_instance(&a.input)?;
    let sol = solve(&inst).map_err(|e| fail(e.to_string()))?;
    let mut checks: Vec<(String, bool)> = Vec::new();
    let (edges, nodes, claimed_cost, claimed_bound) = match &a.solution {
        None => (
            sol.edges.clone(),
            sol.nodes.clone(),
            Some(sol.cost.clone()),
            Some(sol.lower_bound.clone()),
        ),
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let v: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let edges = id_list(&v, "edges")?;
            let nodes = id_list(&v, "nodes")?;
            let cost = v
                .get("cost")
                .map(rational::from_json)
                .transpose()
                .context("cost")?;
            let bound = v
                .get("lp_lower_bound")
                .map(rational::from_json)
                .transpose()
                .context("lp_lower_bound")?;
            (edges, nodes, cost, bound)
        }
    };
    let m = inst.num_edges();
    let ids_ok = edges.iter().all(|&e| e < m);
    checks.push(("edge_ids".into(), ids_ok));
    if ids_ok {
        let mut feasible = true;
        for (u, v, r) in inst.requirements().iter() {
            feasible &= pair_connectivity(&inst, &edges, u, v)? >= r as usize;
        }
        checks.push(("feasibility".into(), feasible));
        let cost = cost_of(&inst, &edges, &nodes);
        if let Some(c) = &claimed_cost {
            checks.push(("cost_matches".into(), c == &cost));
        }
        if let Some(b) = &claimed_bound {
            checks.push(("lp_lower_bound_matches".into(), b == &sol.lower_bound));
        }
        checks.push((
            "ratio_within_guarantee".into(),
            cost <= &sol.guarantee.factor * &sol.lower_bound,
        ));
    }
    let certs = certify_trace(&sol.trace).map_err(|e| fail(e.to_string()))?;
    for (i, c) in certs.iter().enumerate() {
        checks.push((
            format!("vertex_{i}"),
            c.passed() || (c.partial && c.vertex_ok && c.half_edge_ok),
        ));
    }
    let body = json!({
        "instance": a.input.display().to_string(),
        "checks": checks.iter().map(|(n, ok)| (n.clone(), json!(ok))).collect::<serde_json::Map<_, _>>(),
        "certifications": certs.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
    });
    write_or_print(a.out.as_deref(), &pretty(&body))?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| n.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fail(format!("failed checks: {}", failed.join(", "))))
    }
}

fn cmd_reduce(a: ReduceArgs) -> anyhow::Result<()> {
    let inst = read_instance(&a.input)?;
    let (out, map) = match (a.to, inst) {
        (Reduction::ElemToHyper, Instance::Elem(i)) => {
            let (h, reqs, map) = elem_to_hyper(&i)?;
            let out = Instance::Hyper(sndp_core::instances::HyperInstance {
                hypergraph: h,
                requirements: reqs,
            });
            (out, ReductionMap::ElemToHyper(map))
        }
        (Reduction::HyperToNwElem, Instance::Hyper(i)) => {
            let (e, map) = hyper_to_nw_elem(&i.hypergraph, &i.requirements)?;
            (Instance::Elem(e), ReductionMap::HyperToNwElem(map))
        }
        (Reduction::NwElemToEwElem, Instance::Elem(i)) => {
            let (e, map, _) = nw_elem_to_ew_elem(&i)?;
            (Instance::Elem(e), ReductionMap::NwElemToEwElem(map))
        }
        (_, other) => {
            return Err(anyhow!(
                "reduction does not apply to a {} instance",
                other.kind()
            ))
        }
    };
    fs::write(&a.out, serialize_instance(&out))
        .with_context(|| format!("writing {}", a.out.display()))?;
    let map_path = a.map.unwrap_or_else(|| a.out.with_extension("map.json"));
    let text = pretty(&serde_json::to_value(&map)?);
    fs::write(&map_path, text).with_context(|| format!("writing {}", map_path.display()))
}

#[derive(Serialize)]
struct BenchRow {
    name: String,
    kind: String,
    n: usize,
    m: usize,
    cost: Option<String>,
    lp_lower_bound: Option<String>,
    ratio: Option<String>,
    iterations: usize,
    ok: bool,
    error: Option<String>,
    wall_time_ms: u64,
}

fn bench_one(path: &Path) -> BenchRow {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut row = BenchRow {
        name,
        kind: String::new(),
        n: 0,
        m: 0,
        cost: None,
        lp_lower_bound: None,
        ratio: None,
        iterations: 0,
        ok: false,
        error: None,
        wall_time_ms: 0,
    };
    let inst = match read_instance(path) {
        Ok(i) => i,
        Err(e) => {
            row.error = Some(format!("{e:#}"));
            return row;
        }
    };
    row.kind = inst.kind().as_str().into();
    row.n = inst.n();
    row.m = inst.num_edges();
    let start = Instant::now();
    match solve(&inst) {
        Ok(sol) => {
            row.wall_time_ms = start.elapsed().as_millis() as u64;
            let (checks, _) = run_checks(&inst, &sol, true);
            let failed: Vec<&str> = checks
                .iter()
                .filter(|(_, c)| *c == Check::Fail)
                .map(|(n, _)| *n)
                .collect();
            row.ok = failed.is_empty();
            if !row.ok {
                row.error = Some(format!("failed checks: {}", failed.join(", ")));
            }
            row.cost = Some(rational::format(&sol.cost));
            row.lp_lower_bound = Some(rational::format(&sol.lower_bound));
            row.ratio = ratio_fields(&sol.cost, &sol.lower_bound)
                .0
                .as_str()
                .map(String::from);
            row.iterations = sol.trace.iterations.len();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.dir)
        .with_context(|| format!("reading {}", a.dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let rows: Vec<BenchRow> = paths.par_iter().map(|p| bench_one(p)).collect();
    println!(
        "{:<28} {:<6} {:>4} {:>4} {:>10} {:>10} {:>8} {:>5} {:>8}  status",
        "instance", "kind", "n", "m", "cost", "lp", "ratio", "iters", "ms"
    );
    for r in &rows {
        println!(
            "{:<28} {:<6} {:>4} {:>4} {:>10} {:>10} {:>8} {:>5} {:>8}  {}",
            r.name,
            r.kind,
            r.n,
            r.m,
            r.cost.as_deref().unwrap_or("-"),
            r.lp_lower_bound.as_deref().unwrap_or("-"),
            r.ratio.as_deref().unwrap_or("-"),
            r.iterations,
            r.wall_time_ms,
            if r.ok {
                "ok".to_string()
            } else {
                r.error.clone().unwrap_or_default()
            }
        );
    }
    let worst = rows
        .iter()
        .filter_map(|r| r.ratio.as_deref().and_then(|s| rational::parse(s).ok()))
        .max();
    let failed = rows.iter().filter(|r| !r.ok).count();
    println!(
        "{} instances, {} failed, worst ratio {}",
        rows.len(),
        failed,
        worst.as_ref().map_or("-".into(), rational::format)
    );
    if let Some(out) = &a.out {
        fs::write(out, pretty(&serde_json::to_value(&rows)?))
            .with_context(|| format!("writing {}", out.display()))?;
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(fail(format!("{failed} instance(s) failed")))
    }
}

fn cmd_explore(a: ExploreArgs) -> anyhow::Result<()> {
    let summary = match explore_problem1(a.d, a.trials, a.seed) {
        Ok(s) => s,
        Err(e @ OracleError::Invalid(_)) => return Err(anyhow!(e)),
        Err(e) => return Err(fail(e.to_string())),
    };
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut body = summary.to_json();
    let mut files = Vec::new();
    for (i, rec) in summary.candidates.iter().enumerate() {
        let name = format!("candidate-{i:03}.json");
        fs::write(a.out_dir.join(&name), pretty(&rec.to_json()))?;
        files.push(name);
    }
    body["candidate_files"] = json!(files);
    fs::write(a.out_dir.join("summary.json"), pretty(&body))?;
    println!(
        "d = {}: {} vertices over {} trials, min max coordinate {}, {} candidate(s)",
        summary.d,
        summary.vertices,
        summary.trials,
        summary
            .min_max_coordinate
            .as_ref()
            .map_or("-".into(), rational::format),
        summary.candidates.len()
    );
    Ok(())
}
