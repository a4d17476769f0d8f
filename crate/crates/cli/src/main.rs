use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use kdst_core::graph::parse_subgraph_instance;
use kdst_core::harness::{generate, run_experiment, summarize, ExperimentRow, ExperimentSpec, GeneratorSpec};
use kdst_core::lp::{build_lp_kdst_capped, build_lp_kdst_star_capped, mps};
use kdst_core::paths::enumerate_paths_capped;
use kdst_core::rounding::{
    iteration_rng, iterations_dst, iterations_kdst, relaxation_from_solution, round_relaxation, solve_relaxation,
};
use kdst_core::simplex::solve_with_stats;
use kdst_core::verify::{check_instance_feasible, verify_subgraph, ExactConfig};
use kdst_core::{
    baseline_t_approx, check_minimal_lemmas, exact_opt, minimalize, parse_instance_with, run_steiner_subgraph,
    verify, EdgeSetSolution, Error, KdstInstance, LpSolution, LpStatus, ParallelPolicy, ParseOptions,
    RoundingConfig,
};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "kdst", version, about = "k-edge-connected directed Steiner trees on depth-bounded instances")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for rounding and generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Abort when more rooted paths than this are enumerated.
    #[arg(long, global = true)]
    path_cap: Option<usize>,
    /// `c` in the round count `ceil(c·D·k·log2 n)`.
    #[arg(long, global = true)]
    repeat_constant: Option<f64>,
    /// Rounding attempts before giving up.
    #[arg(long, global = true)]
    max_restarts: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file, `-` for stdin.
    instance: PathBuf,
    /// Subdivide parallel edges instead of rejecting them.
    #[arg(long, conflicts_with = "collapse_parallel")]
    split_parallel: bool,
    /// Keep only the cheapest of parallel edges.
    #[arg(long)]
    collapse_parallel: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Variant {
    Kdst,
    Dst,
    Subgraph,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on one instance.
    Solve {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, value_enum, default_value_t = Variant::Kdst)]
        variant: Variant,
        /// Rounds per attempt instead of the default formula.
        #[arg(long)]
        iterations: Option<usize>,
        /// Drop redundant edges from the result.
        #[arg(long)]
        minimalize: bool,
        /// Write the rounding transcript as JSON.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Write the path tree in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Build and solve the LP relaxation.
    Lp {
        #[command(flatten)]
        input: InstanceArgs,
        /// The plain relaxation without prefix variables.
        #[arg(long)]
        plain: bool,
        /// Write the program in MPS format.
        #[arg(long)]
        mps: Option<PathBuf>,
        /// Write the LP solution as JSON (input for `round`).
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Round a previously solved relaxation.
    Round {
        #[command(flatten)]
        input: InstanceArgs,
        /// LP solution written by `lp --solution`.
        #[arg(long)]
        lp_solution: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Check a solution's connectivity. Exits 1 when it is infeasible.
    Verify {
        #[command(flatten)]
        input: InstanceArgs,
        /// JSON with an `edges` array of edge ids, or a plain list of ids.
        solution: PathBuf,
        /// Treat the instance as unrooted (every ordered terminal pair).
        #[arg(long)]
        subgraph: bool,
        /// Also check the structural properties of minimal solutions.
        #[arg(long)]
        lemmas: bool,
    },
    /// Exact optimum by branch and bound.
    Exact {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long)]
        max_edges: Option<usize>,
        #[arg(long)]
        node_budget: Option<usize>,
    },
    /// Union of per-terminal min-cost k-flows.
    Baseline {
        #[command(flatten)]
        input: InstanceArgs,
    },
    /// Generate an instance from a generator spec (file or inline JSON).
    Generate {
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment spec.
    Experiment {
        spec: PathBuf,
        /// Output directory (overrides the spec's).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit or summarize a results CSV.
    Report {
        results: PathBuf,
        #[arg(long)]
        summarize: bool,
    },
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return Ok(text);
    }
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)).into())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_options(args: &InstanceArgs) -> ParseOptions {
    let parallel = if args.split_parallel {
        ParallelPolicy::Split
    } else if args.collapse_parallel {
        ParallelPolicy::CollapseCheapest
    } else {
        ParallelPolicy::Reject
    };
    ParseOptions { parallel }
}

fn load_instance(args: &InstanceArgs) -> Result<KdstInstance> {
    let text = read_input(&args.instance)?;
    let parsed = parse_instance_with(&text, parse_options(args))?;
    if parsed.report.warning_count() > 0 {
        eprintln!("normalized input: {:?}", parsed.report);
    }
    Ok(parsed.instance)
}

fn rounding_config(global: &Global) -> RoundingConfig {
    let mut config = RoundingConfig {
        rng_seed: global.seed,
        keep_rounds: false,
        ..RoundingConfig::default()
    };
    if let Some(v) = global.path_cap {
        config.path_cap = v;
    }
    if let Some(v) = global.repeat_constant {
        config.repeat_constant = v;
    }
    if let Some(v) = global.max_restarts {
        config.max_restarts = v;
    }
    config
}

/// Flattens a record into one CSV row. Arrays become `;`-joined cells.
fn to_csv(record: &Map<String, Value>) -> Result<String> {
    fn cell(v: &Value) -> String {
        match v {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
            other => other.to_string(),
        }
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(record.keys())?;
    writer.write_record(record.values().map(cell))?;
    Ok(String::from_utf8(writer.into_inner()?)?)
}

fn emit(format: Format, record: Value) -> Result<()> {
    match (format, record) {
        (Format::Csv, Value::Object(map)) => stdout(&to_csv(&map)?)?,
        (_, value) => stdout(&format!("{}\n", serde_json::to_string_pretty(&value)?))?,
    }
    Ok(())
}

fn solution_record(inst: &KdstInstance, sol: &EdgeSetSolution) -> Map<String, Value> {
    let report = verify(sol, inst);
    let mut map = Map::new();
    map.insert("cost".into(), json!(report.cost));
    map.insert("edge_count".into(), json!(report.edge_count));
    map.insert("feasible".into(), json!(report.feasible));
    map.insert("min_lambda".into(), json!(report.min_lambda()));
    map.insert("edges".into(), json!(sol.edges));
    map.insert(
        "endpoints".into(),
        json!(sol.endpoints(&inst.graph).iter().map(|(t, h)| format!("{}->{}", t, h)).collect::<Vec<_>>()),
    );
    map
}

fn read_solution(path: &Path, edge_count: usize) -> Result<EdgeSetSolution> {
    let text = read_input(path)?;
    let ids: Vec<usize> = match serde_json::from_str::<Value>(&text) {
        Ok(value) if value.is_object() || value.is_array() => {
            let edges = value.get("edges").unwrap_or(&value);
            serde_json::from_value(edges.clone())
                .map_err(|e| Error::Config(format!("solution file: {}", e)))?
        }
        _ => text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::Config(format!("solution file: bad edge id `{}`", s))))
            .collect::<Result<_, _>>()?,
    };
    if let Some(&bad) = ids.iter().find(|&&e| e >= edge_count) {
        return Err(Error::UnknownEdge(bad).into());
    }
    Ok(EdgeSetSolution { edges: ids.into_iter().collect() })
}

fn minimalize_salted(sol: &EdgeSetSolution, inst: &KdstInstance, seed: u64) -> Result<EdgeSetSolution> {
    let mut rng = iteration_rng(seed ^ 0x6d69_6e69, 0, 0);
    Ok(minimalize(sol, inst, &mut rng)?)
}

fn cmd_solve(
    global: &Global,
    input: &InstanceArgs,
    variant: Variant,
    iterations: Option<usize>,
    minimal: bool,
    transcript_path: Option<&Path>,
    dot: Option<&Path>,
) -> Result<ExitCode> {
    let mut config = rounding_config(global);
    config.iteration_override = iterations;
    config.keep_rounds = transcript_path.is_some();

    if variant == Variant::Subgraph {
        let inst = parse_subgraph_instance(&read_input(&input.instance)?, parse_options(input))?;
        let run = run_steiner_subgraph(&inst, &config)?;
        let report = verify_subgraph(&run.solution, &inst);
        if let Some(path) = transcript_path {
            write_output(path, &serde_json::to_string_pretty(&run)?)?;
        }
        let mut map = Map::new();
        map.insert("cost".into(), json!(report.cost));
        map.insert("edge_count".into(), json!(run.solution.len()));
        map.insert("feasible".into(), json!(report.feasible));
        map.insert("out_lp_value".into(), json!(run.out_lp_value));
        map.insert("in_lp_value".into(), json!(run.in_lp_value));
        map.insert("edges".into(), json!(run.solution.edges));
        emit(global.format, Value::Object(map))?;
        return Ok(ExitCode::SUCCESS);
    }

    let inst = load_instance(input)?;
    if variant == Variant::Dst && inst.k != 1 {
        bail!(Error::Config(format!("the dst variant needs k = 1, got {}", inst.k)));
    }
    let relax = solve_relaxation(&inst, &config)?;
    if let Some(path) = dot {
        write_output(path, &relax.tree.to_dot(&relax.paths))?;
    }
    let default_rounds = match variant {
        Variant::Dst => iterations_dst(inst.terminal_count(), inst.depth_bound, config.repeat_constant),
        _ => iterations_kdst(inst.graph.vertex_count(), inst.k, inst.depth_bound, config.repeat_constant),
    };
    let rounds = config.iteration_override.unwrap_or(default_rounds);
    let (mut sol, transcript) = round_relaxation(&inst, &relax, rounds, &config)?;
    if let Some(path) = transcript_path {
        write_output(path, &transcript.to_json())?;
    }
    if minimal {
        sol = minimalize_salted(&sol, &inst, global.seed)?;
    }
    let mut map = solution_record(&inst, &sol);
    map.insert("lp_value".into(), json!(relax.lp_value()));
    map.insert("paths".into(), json!(relax.paths.len()));
    map.insert("iterations".into(), json!(rounds));
    map.insert("restarts".into(), json!(transcript.restarts));
    map.insert("union_cost".into(), json!(transcript.union_cost));
    emit(global.format, Value::Object(map))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_lp(
    global: &Global,
    input: &InstanceArgs,
    plain: bool,
    mps_path: Option<&Path>,
    solution_path: Option<&Path>,
) -> Result<ExitCode> {
    let inst = load_instance(input)?;
    let config = rounding_config(global);
    check_instance_feasible(&inst)?;
    let paths = enumerate_paths_capped(&inst, config.path_cap)?;
    let kdst = if plain {
        build_lp_kdst_capped(&inst, &paths, config.constraint_cap)?
    } else {
        build_lp_kdst_star_capped(&inst, &paths, config.constraint_cap)?
    };
    if let Some(path) = mps_path {
        write_output(path, &mps::write_mps(&kdst.lp))?;
    }
    let (solution, stats) = solve_with_stats(&kdst.lp, &config.solver)?;
    if let Some(path) = solution_path {
        write_output(path, &serde_json::to_string(&solution)?)?;
    }
    let status = match solution.status {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::Unbounded => "unbounded",
    };
    let record = json!({
        "status": status,
        "objective": solution.objective_value,
        "variables": kdst.lp.num_vars(),
        "constraints": kdst.lp.num_constraints(),
        "paths": paths.len(),
        "iterations": stats.iterations,
        "strengthened": !plain,
    });
    emit(global.format, record)?;
    Ok(match solution.status {
        LpStatus::Optimal => ExitCode::SUCCESS,
        LpStatus::Infeasible => ExitCode::from(2),
        LpStatus::Unbounded => ExitCode::from(1),
    })
}

fn cmd_round(
    global: &Global,
    input: &InstanceArgs,
    lp_solution: &Path,
    iterations: Option<usize>,
    transcript_path: Option<&Path>,
) -> Result<ExitCode> {
    let inst = load_instance(input)?;
    let mut config = rounding_config(global);
    config.iteration_override = iterations;
    config.keep_rounds = transcript_path.is_some();
    let solution: LpSolution = serde_json::from_str(&read_input(lp_solution)?)
        .map_err(|e| Error::Config(format!("LP solution file: {}", e)))?;
    let relax = relaxation_from_solution(&inst, solution, &config)?;
    let rounds = config.iteration_override.unwrap_or_else(|| {
        iterations_kdst(inst.graph.vertex_count(), inst.k, inst.depth_bound, config.repeat_constant)
    });
    let (sol, transcript) = round_relaxation(&inst, &relax, rounds, &config)?;
    if let Some(path) = transcript_path {
        write_output(path, &transcript.to_json())?;
    }
    let mut map = solution_record(&inst, &sol);
    map.insert("lp_value".into(), json!(relax.lp_value()));
    map.insert("iterations".into(), json!(rounds));
    map.insert("restarts".into(), json!(transcript.restarts));
    emit(global.format, Value::Object(map))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(global: &Global, input: &InstanceArgs, solution: &Path, subgraph: bool, lemmas: bool) -> Result<ExitCode> {
    let (feasible, mut map) = if subgraph {
        let inst = parse_subgraph_instance(&read_input(&input.instance)?, parse_options(input))?;
        let sol = read_solution(solution, inst.graph.edge_count())?;
        let report = verify_subgraph(&sol, &inst);
        let min_lambda = report.pairs.iter().map(|p| p.lambda).min().unwrap_or(0);
        let mut map = Map::new();
        map.insert("cost".into(), json!(report.cost));
        map.insert("feasible".into(), json!(report.feasible));
        map.insert("min_lambda".into(), json!(min_lambda));
        (report.feasible, map)
    } else {
        let inst = load_instance(input)?;
        let sol = read_solution(solution, inst.graph.edge_count())?;
        let mut map = solution_record(&inst, &sol);
        let report = verify(&sol, &inst);
        map.insert("lambda".into(), json!(report.lambda));
        if lemmas {
            let lemma_report = check_minimal_lemmas(&sol, &inst);
            map.insert("lemma_violations".into(), json!(lemma_report.violations.len()));
        }
        (report.feasible, map)
    };
    map.remove("endpoints");
    emit(global.format, Value::Object(map))?;
    Ok(if feasible { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_exact(global: &Global, input: &InstanceArgs, max_edges: Option<usize>, node_budget: Option<usize>) -> Result<ExitCode> {
    let inst = load_instance(input)?;
    let defaults = ExactConfig::default();
    let config = ExactConfig {
        max_edges: max_edges.unwrap_or(defaults.max_edges),
        node_budget: node_budget.unwrap_or(defaults.node_budget),
    };
    match exact_opt(&inst, &config)? {
        Some(result) => {
            let mut map = solution_record(&inst, &result.solution);
            map.insert("nodes".into(), json!(result.nodes));
            emit(global.format, Value::Object(map))?;
            Ok(ExitCode::SUCCESS)
        }
        None => {
            eprintln!("error: node budget of {} exhausted", config.node_budget);
            Ok(ExitCode::from(3))
        }
    }
}

fn cmd_baseline(global: &Global, input: &InstanceArgs) -> Result<ExitCode> {
    let inst = load_instance(input)?;
    let sol = baseline_t_approx(&inst)?;
    emit(global.format, Value::Object(solution_record(&inst, &sol)))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(global: &Global, spec: &str, out: Option<&Path>) -> Result<ExitCode> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        read_input(Path::new(spec))?
    };
    let spec: GeneratorSpec =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("generator spec: {}", e)))?;
    let instance = generate(&spec, global.seed)?.to_text();
    match out {
        Some(path) => write_output(path, &instance)?,
        None => stdout(&instance)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(global: &Global, spec_path: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let spec = ExperimentSpec::from_json(&read_input(spec_path)?)?;
    let output = run_experiment(&spec, &rounding_config(global), out)?;
    match global.format {
        Format::Csv => stdout(&output.csv)?,
        Format::Json => stdout(&format!("{}\n", serde_json::to_string_pretty(&output.rows)?))?,
    }
    if let Some(dir) = &output.directory {
        eprintln!("wrote {}", dir.join("results.csv").display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(global: &Global, results: &Path, summarize_rows: bool) -> Result<ExitCode> {
    let text = read_input(results)?;
    if summarize_rows {
        stdout(&summarize(&text)?)?;
        return Ok(ExitCode::SUCCESS);
    }
    match global.format {
        Format::Csv => stdout(&text)?,
        Format::Json => {
            let rows = csv::Reader::from_reader(text.as_bytes())
                .deserialize::<ExperimentRow>()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("results csv: {}", e)))?;
            stdout(&format!("{}\n", serde_json::to_string_pretty(&rows)?))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let global = &cli.global;
    if let Some(threads) = global.threads {
        if threads == 0 {
            bail!(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| anyhow!(Error::Config(e.to_string())))?;
    }
    rounding_config(global).validate()?;
    match &cli.command {
        Command::Solve {
            input,
            variant,
            iterations,
            minimalize,
            transcript,
            dot,
        } => cmd_solve(global, input, *variant, *iterations, *minimalize, transcript.as_deref(), dot.as_deref()),
        Command::Lp {
            input,
            plain,
            mps,
            solution,
        } => cmd_lp(global, input, *plain, mps.as_deref(), solution.as_deref()),
        Command::Round {
            input,
            lp_solution,
            iterations,
            transcript,
        } => cmd_round(global, input, lp_solution, *iterations, transcript.as_deref()),
        Command::Verify {
            input,
            solution,
            subgraph,
            lemmas,
        } => cmd_verify(global, input, solution, *subgraph, *lemmas),
        Command::Exact {
            input,
            max_edges,
            node_budget,
        } => cmd_exact(global, input, *max_edges, *node_budget),
        Command::Baseline { input } => cmd_baseline(global, input),
        Command::Generate { spec, out } => cmd_generate(global, spec, out.as_deref()),
        Command::Experiment { spec, out } => cmd_experiment(global, spec, out.as_deref()),
        Command::Report { results, summarize } => cmd_report(global, results, *summarize),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) => e.exit_code() as u8,
        None if err.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::from(exit_code(&err))
        }
    }
}
