//! Command-line front end: solve, verify, oracle, compare, gen, transform,
//! inspect and bench.
//!
//! Exit status is 0 on success, 2 when an instance is infeasible or a
//! placement has violations, and 1 on usage, I/O or internal errors.

use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use treeplace::document::{infeasible_to_value, parse_solution, render, solution_to_value};
use treeplace::dp::render_tables;
use treeplace::generator::generate_dual_role;
use treeplace::oracle::{oracle_to_value, DEFAULT_MAX_N};
use treeplace::transform::star_to_value;
use treeplace::verifier::report_to_value;
use treeplace::{
    brute_force_min, fictivize, generate, parse_instance, run_phase1, serialize_instance, solve, transform_to_star,
    verify_placement, DualRoleTree, GenConfig, Mode, NetworkInstance, Shape, SolveError,
};

const INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "treeplace", version, about = "Optimal replica placement on tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a minimum replica set and check it before writing it.
    Solve(SolveArgs),
    /// Check a replica set against an instance.
    Verify(VerifyArgs),
    /// Exhaustive minimum for small instances.
    Oracle(OracleArgs),
    /// Solver against oracle on seeded random instances.
    Compare(CompareArgs),
    /// Emit a random instance, or reduce a dual-role tree to one.
    Gen(GenArgs),
    /// Dump the computation tree.
    Transform(TransformArgs),
    /// Print the contribution tables.
    Inspect(InspectArgs),
    /// Time the solver over a sweep of sizes or QoS ranges.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance document, `-` for standard input.
    instance: PathBuf,
    #[arg(long, default_value = "paper-literal")]
    mode: Mode,
    /// Include every placement call in the output.
    #[arg(long)]
    trace: bool,
    /// Output path, standard output when absent or `-`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    /// Solution document, as written by `solve`.
    solution: PathBuf,
    #[arg(long, default_value = "paper-literal")]
    mode: Mode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value = "paper-literal")]
    mode: Mode,
    /// Refuse instances with more internal nodes than this.
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// First seed.
    #[arg(long, default_value_t = 1)]
    from: u64,
    /// Number of seeds.
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[arg(long, default_value = "paper-literal")]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the small-instance preset drawn from the seed; size and range
    /// flags are ignored.
    #[arg(long)]
    small: bool,
    #[arg(long)]
    internal: Option<usize>,
    #[arg(long)]
    clients: Option<usize>,
    /// Children per internal node, `LO..HI`.
    #[arg(long, value_parser = parse_range::<usize>)]
    branching: Option<(usize, usize)>,
    /// Server capacity `W`.
    #[arg(long)]
    capacity: Option<u64>,
    #[arg(long, value_parser = parse_range::<u64>)]
    bandwidth: Option<(u64, u64)>,
    #[arg(long, value_parser = parse_range::<u64>)]
    requests: Option<(u64, u64)>,
    #[arg(long, value_parser = parse_range::<u64>)]
    qos: Option<(u64, u64)>,
    #[arg(long)]
    shape: Option<Shape>,
    /// Read a dual-role tree document and emit its client-server reduction.
    #[arg(long, value_name = "DUAL_ROLE_DOC", conflicts_with_all = ["small", "dual_role"])]
    fictivize: Option<PathBuf>,
    /// Emit a random dual-role tree with this many nodes instead.
    #[arg(long, value_name = "NODES")]
    dual_role: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    instance: PathBuf,
    #[arg(long, default_value = "paper-literal")]
    mode: Mode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Node counts to time at `--qos`, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Largest QoS range used by the size sweep.
    #[arg(long, default_value_t = 8)]
    qos: u64,
    /// QoS ranges to time at `--fixed-nodes`, comma separated.
    #[arg(long, value_delimiter = ',')]
    ranges: Vec<u64>,
    #[arg(long, default_value_t = 20_000)]
    fixed_nodes: usize,
    /// Repetitions per row; the best time is reported.
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_range<T: std::str::FromStr + PartialOrd + Copy>(s: &str) -> Result<(T, T), String> {
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.strip_prefix('=').unwrap_or(hi)),
        None => (s, s),
    };
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("bad bound `{v}` in `{s}`"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok((lo, hi))
}

fn read_text(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).context("reading standard input")?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_instance(path: &PathBuf) -> Result<NetworkInstance> {
    let text = read_text(path)?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_text(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) if path.as_os_str() != "-" => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        _ => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn aggregate_notice(mode: Mode) {
    if mode == Mode::Aggregate {
        eprintln!("NOTICE: aggregate bandwidth mode is an extension; its optimality is not established");
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    aggregate_notice(args.mode);
    let sol = match solve(&inst, args.mode) {
        Ok(sol) => sol,
        Err(SolveError::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            write_text(args.out.as_ref(), &render(&infeasible_to_value(&why, args.mode)))?;
            return Ok(ExitCode::from(INFEASIBLE));
        }
        Err(e) => return Err(e.into()),
    };

    // Self-check against the verifier, which never looks at the tables.
    let mut modes = vec![Mode::PaperLiteral];
    if args.mode == Mode::Aggregate {
        modes.push(Mode::Aggregate);
    }
    for mode in modes {
        let report = verify_placement(&inst, &sol.placement.replicas_original, mode)?;
        if !report.is_feasible() {
            eprintln!("DEFECT: the solver's placement fails {mode} verification");
            for v in &report.violations {
                eprintln!("  {} at {}: {}", v.kind.as_str(), v.location, v.amount);
            }
            return Ok(ExitCode::FAILURE);
        }
    }
    write_text(args.out.as_ref(), &render(&solution_to_value(&sol, args.mode, args.trace)))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let doc = parse_solution(&read_text(&args.solution)?)
        .with_context(|| format!("parsing {}", args.solution.display()))?;
    let Some(replicas) = doc.replicas else {
        bail!("{} records no placement to verify", args.solution.display());
    };
    let report = verify_placement(&inst, &replicas, args.mode)?;
    write_text(args.out.as_ref(), &render(&report_to_value(&report)))?;
    Ok(if report.is_feasible() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INFEASIBLE)
    })
}

fn cmd_oracle(args: &OracleArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let result = brute_force_min(&inst, args.mode, args.max_n)?;
    write_text(args.out.as_ref(), &render(&oracle_to_value(&result)))?;
    Ok(if result.optimum.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INFEASIBLE)
    })
}

/// Seed, solver count and oracle count; `None` counts mean infeasible.
type CompareRow = (u64, Option<usize>, Option<usize>);

/// Replica count, `None` when infeasible.
fn solver_count(inst: &NetworkInstance, mode: Mode) -> Result<Option<usize>> {
    match solve(inst, mode) {
        Ok(sol) => Ok(Some(sol.placement.cardinality)),
        Err(SolveError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn show(count: Option<usize>) -> String {
    count.map_or_else(|| "infeasible".to_owned(), |c| c.to_string())
}

fn cmd_compare(args: &CompareArgs) -> Result<ExitCode> {
    aggregate_notice(args.mode);
    let seeds: Vec<u64> = (args.from..args.from.saturating_add(args.count)).collect();
    // collect keeps seed order whatever order the workers finish in
    let rows: Vec<Result<CompareRow>> = seeds
        .par_iter()
        .map(|&seed| {
            let inst = generate(&GenConfig::small(seed))?;
            let solver = solver_count(&inst, args.mode)?;
            let oracle = brute_force_min(&inst, args.mode, args.max_n)?.optimum.map(|o| o.cardinality);
            Ok((seed, solver, oracle))
        })
        .collect();

    let mut disagree = 0;
    let mut out = io::stdout().lock();
    for row in rows {
        let (seed, solver, oracle) = row?;
        if solver == oracle {
            writeln!(out, "seed {seed}: agree {}", show(solver))?;
        } else {
            disagree += 1;
            writeln!(out, "seed {seed}: DISAGREE solver {} oracle {}", show(solver), show(oracle))?;
        }
    }
    writeln!(
        out,
        "{} instances, {} agree, {disagree} disagree ({})",
        seeds.len(),
        seeds.len() - disagree,
        args.mode
    )?;
    Ok(if disagree == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INFEASIBLE)
    })
}

fn cmd_gen(args: &GenArgs) -> Result<ExitCode> {
    if let Some(path) = &args.fictivize {
        let tree = DualRoleTree::parse(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
        write_text(args.out.as_ref(), &serialize_instance(&fictivize(&tree)))?;
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(n) = args.dual_role {
        write_text(args.out.as_ref(), &generate_dual_role(args.seed, n).to_document())?;
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = if args.small {
        GenConfig::small(args.seed)
    } else {
        let d = GenConfig::default();
        GenConfig {
            seed: args.seed,
            internal_count: args.internal.unwrap_or(d.internal_count),
            client_count: args.clients.unwrap_or(d.client_count),
            branching: args.branching.unwrap_or(d.branching),
            capacity: args.capacity.unwrap_or(d.capacity),
            bandwidth: args.bandwidth.unwrap_or(d.bandwidth),
            requests: args.requests.unwrap_or(d.requests),
            qos: args.qos.unwrap_or(d.qos),
            shape: args.shape.unwrap_or(d.shape),
        }
    };
    write_text(args.out.as_ref(), &serialize_instance(&generate(&cfg)?))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_transform(args: &TransformArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    match transform_to_star(&inst) {
        Ok(star) => {
            write_text(args.out.as_ref(), &render(&star_to_value(&star)))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(SolveError::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            Ok(ExitCode::from(INFEASIBLE))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_inspect(args: &InspectArgs) -> Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    aggregate_notice(args.mode);
    let tables = transform_to_star(&inst).and_then(|star| run_phase1(&star, args.mode).map(|t| (star, t)));
    match tables {
        Ok((star, table)) => {
            write_text(args.out.as_ref(), &render_tables(&star, &table))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(SolveError::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            Ok(ExitCode::from(INFEASIBLE))
        }
        Err(e) => Err(e.into()),
    }
}

fn best_time(inst: &NetworkInstance, runs: usize) -> Result<Duration> {
    let mut best = Duration::MAX;
    for _ in 0..runs.max(1) {
        let start = Instant::now();
        solve(inst, Mode::PaperLiteral)?;
        best = best.min(start.elapsed());
    }
    Ok(best)
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    if args.sizes.is_empty() && args.ranges.is_empty() {
        bail!("empty sweep: pass --sizes and/or --ranges");
    }
    let rows = args
        .sizes
        .iter()
        .map(|&n| (n, args.qos))
        .chain(args.ranges.iter().map(|&l| (args.fixed_nodes, l)));
    let mut out = io::stdout().lock();
    writeln!(out, "nodes\tqos\tms")?;
    for (nodes, qos) in rows {
        let inst = generate(&GenConfig::bench(nodes, qos, args.seed))?;
        let t = best_time(&inst, args.runs)?;
        writeln!(out, "{}\t{qos}\t{:.3}", inst.nodes.len(), t.as_secs_f64() * 1e3)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses 2 for usage errors, which here means infeasible
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
