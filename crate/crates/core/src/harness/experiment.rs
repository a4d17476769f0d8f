//! Batch experiments: one generator, many seeds, several algorithms. Results
//! go to an aggregate CSV and one JSON transcript per run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::harness::generate::{generate, GeneratedInstance, GeneratorSpec};
use crate::paths::enumerate_paths_capped;
use crate::rounding::{run_algorithm_dst, run_algorithm_kdst, run_steiner_subgraph, RoundingConfig};
use crate::verify::{baseline_t_approx, exact_opt, verify, verify_subgraph, ExactConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kdst,
    Dst,
    Subgraph,
    Baseline,
    Exact,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kdst => "kdst",
            Self::Dst => "dst",
            Self::Subgraph => "subgraph",
            Self::Baseline => "baseline",
            Self::Exact => "exact",
        }
    }
}

/// Rounding options an experiment may override; the seed comes from the
/// instance seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundingOptions {
    #[serde(default)]
    pub repeat_constant: Option<f64>,
    #[serde(default)]
    pub max_restarts: Option<usize>,
    #[serde(default)]
    pub iteration_override: Option<usize>,
    #[serde(default)]
    pub path_cap: Option<usize>,
}

impl RoundingOptions {
    pub fn apply(&self, base: &RoundingConfig) -> RoundingConfig {
        let mut c = base.clone();
        if let Some(v) = self.repeat_constant {
            c.repeat_constant = v;
        }
        if let Some(v) = self.max_restarts {
            c.max_restarts = v;
        }
        if self.iteration_override.is_some() {
            c.iteration_override = self.iteration_override;
        }
        if let Some(v) = self.path_cap {
            c.path_cap = v;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub generator: GeneratorSpec,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub rounding: RoundingOptions,
    #[serde(default)]
    pub exact: Option<ExactConfig>,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment spec: {}", e)))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("experiment needs at least one algorithm".into()));
        }
        self.generator.validate()?;
        let rooted = self.generator.is_rooted();
        for &a in &self.algorithms {
            if rooted == (a == Algorithm::Subgraph) {
                return Err(Error::Config(format!(
                    "algorithm `{}` does not apply to {} instances",
                    a.name(),
                    if rooted { "rooted" } else { "unrooted" }
                )));
            }
        }
        Ok(())
    }
}

/// One CSV row. Optional numbers are written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub seed: u64,
    pub algorithm: String,
    pub n: usize,
    pub h: usize,
    pub k: usize,
    #[serde(rename = "D")]
    pub depth_bound: usize,
    pub paths: Option<usize>,
    pub lp_value: Option<f64>,
    pub cost: Option<f64>,
    pub baseline_cost: Option<f64>,
    pub exact_opt: Option<f64>,
    pub ratio_lp: Option<f64>,
    pub ratio_opt: Option<f64>,
    pub iterations: Option<usize>,
    pub restarts: Option<usize>,
    pub feasible: Option<bool>,
    pub error: String,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub csv: String,
    pub transcripts: Vec<(String, serde_json::Value)>,
    pub directory: Option<PathBuf>,
}

struct SeedContext {
    instance: GeneratedInstance,
    paths: Option<usize>,
    baseline: Option<f64>,
    opt: Option<f64>,
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        (Some(a), Some(_)) if a == 0.0 => Some(1.0),
        _ => None,
    }
}

fn run_one(
    spec: &ExperimentSpec,
    seed: u64,
    ctx: &SeedContext,
    algorithm: Algorithm,
    base: &RoundingConfig,
) -> (ExperimentRow, serde_json::Value) {
    let config = RoundingConfig {
        rng_seed: seed,
        ..spec.rounding.apply(base)
    };
    let (n, h, k, d) = match &ctx.instance {
        GeneratedInstance::Rooted(i) => (i.graph.vertex_count(), i.terminal_count(), i.k, i.depth_bound),
        GeneratedInstance::Subgraph(i) => (i.graph.vertex_count(), i.terminals.len(), i.k, i.depth_bound),
    };
    let mut row = ExperimentRow {
        seed,
        algorithm: algorithm.name().to_string(),
        n,
        h,
        k,
        depth_bound: d,
        paths: ctx.paths,
        lp_value: None,
        cost: None,
        baseline_cost: ctx.baseline,
        exact_opt: ctx.opt,
        ratio_lp: None,
        ratio_opt: None,
        iterations: None,
        restarts: None,
        feasible: None,
        error: String::new(),
        wall_time_ms: 0.0,
    };
    let start = Instant::now();
    let detail: Result<serde_json::Value> = match (&ctx.instance, algorithm) {
        (GeneratedInstance::Rooted(inst), Algorithm::Kdst | Algorithm::Dst) => {
            let run = if algorithm == Algorithm::Kdst {
                run_algorithm_kdst(inst, &config)
            } else {
                run_algorithm_dst(inst, &config)
            };
            run.map(|(sol, transcript)| {
                let report = verify(&sol, inst);
                row.lp_value = Some(transcript.lp_value);
                row.cost = Some(report.cost);
                row.iterations = Some(transcript.iterations);
                row.restarts = Some(transcript.restarts);
                row.feasible = Some(report.feasible);
                row.paths = Some(transcript.path_count);
                json!({ "report": report, "transcript": transcript })
            })
        }
        (GeneratedInstance::Rooted(inst), Algorithm::Baseline) => baseline_t_approx(inst).map(|sol| {
            let report = verify(&sol, inst);
            row.cost = Some(report.cost);
            row.feasible = Some(report.feasible);
            json!({ "report": report, "edges": sol.edges })
        }),
        (GeneratedInstance::Rooted(_), Algorithm::Exact) => match ctx.opt {
            Some(opt) => {
                row.cost = Some(opt);
                row.feasible = Some(true);
                Ok(json!({ "cost": opt }))
            }
            None => Err(Error::Config("exact optimum unavailable (budget exhausted)".into())),
        },
        (GeneratedInstance::Subgraph(inst), Algorithm::Subgraph) => run_steiner_subgraph(inst, &config).map(|run| {
            let report = verify_subgraph(&run.solution, inst);
            row.lp_value = Some(run.out_lp_value.max(run.in_lp_value));
            row.cost = Some(report.cost);
            row.iterations = Some(run.out_transcript.iterations);
            row.restarts = Some(run.out_transcript.restarts + run.in_transcript.restarts);
            row.feasible = Some(report.feasible);
            json!({ "report": report, "run": run })
        }),
        _ => Err(Error::Config(format!("algorithm `{}` does not apply", algorithm.name()))),
    };
    row.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;
    row.ratio_lp = ratio(row.cost, row.lp_value);
    row.ratio_opt = ratio(row.cost, row.exact_opt);
    let detail = match detail {
        Ok(v) => v,
        Err(e) => {
            row.error = e.to_string();
            json!({ "error": row.error })
        }
    };
    let transcript = json!({
        "seed": seed,
        "algorithm": algorithm.name(),
        "instance": ctx.instance.to_text(),
        "result": detail,
    });
    (row, transcript)
}

fn seed_context(spec: &ExperimentSpec, seed: u64, base: &RoundingConfig) -> Result<SeedContext> {
    let instance = generate(&spec.generator, seed)?;
    let config = spec.rounding.apply(base);
    let mut ctx = SeedContext {
        paths: None,
        baseline: None,
        opt: None,
        instance,
    };
    if let GeneratedInstance::Rooted(inst) = &ctx.instance {
        ctx.paths = enumerate_paths_capped(inst, config.path_cap).ok().map(|p| p.len());
        ctx.baseline = baseline_t_approx(inst).ok().map(|s| s.cost(&inst.graph));
        if spec.algorithms.contains(&Algorithm::Exact) {
            let exact = spec.exact.clone().unwrap_or_default();
            ctx.opt = exact_opt(inst, &exact).ok().flatten().map(|r| r.cost);
        }
    }
    Ok(ctx)
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Io(format!("csv: {}", e)))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(format!("csv: {}", e)))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs every `(seed, algorithm)` pair. Seeds run in parallel; rows come out
/// in spec order. When `out_dir` (or the spec's output) is set, writes
/// `results.csv` and `runs/<seed>_<algorithm>.json` there.
pub fn run_experiment(
    spec: &ExperimentSpec,
    base: &RoundingConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentOutput> {
    spec.validate()?;
    let per_seed: Vec<Result<Vec<(ExperimentRow, serde_json::Value)>>> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let ctx = seed_context(spec, seed, base)?;
            Ok(spec
                .algorithms
                .iter()
                .map(|&a| run_one(spec, seed, &ctx, a, base))
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    let mut transcripts = Vec::new();
    for batch in per_seed {
        for (row, transcript) in batch? {
            transcripts.push((format!("{}_{}", row.seed, row.algorithm), transcript));
            rows.push(row);
        }
    }
    let csv = rows_to_csv(&rows)?;
    let directory = out_dir.map(Path::to_path_buf).or_else(|| spec.output.clone());
    if let Some(dir) = &directory {
        let runs = dir.join("runs");
        std::fs::create_dir_all(&runs)?;
        std::fs::write(dir.join("results.csv"), &csv)?;
        for (name, value) in &transcripts {
            let text = serde_json::to_string_pretty(value).expect("transcript serializes");
            std::fs::write(runs.join(format!("{}.json", name)), text)?;
        }
    }
    Ok(ExperimentOutput {
        rows,
        csv,
        transcripts,
        directory,
    })
}

/// Plain-text table per algorithm: runs, feasible runs, errors, mean and max
/// of both ratio columns, mean restarts.
pub fn summarize(csv_text: &str) -> Result<String> {
    #[derive(Default)]
    struct Acc {
        runs: usize,
        feasible: usize,
        errors: usize,
        ratio_lp: Vec<f64>,
        ratio_opt: Vec<f64>,
        restarts: Vec<f64>,
    }
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let mut by_alg: BTreeMap<String, Acc> = BTreeMap::new();
    for record in reader.deserialize::<ExperimentRow>() {
        let row = record.map_err(|e| Error::Config(format!("results csv: {}", e)))?;
        let acc = by_alg.entry(row.algorithm.clone()).or_default();
        acc.runs += 1;
        acc.feasible += usize::from(row.feasible == Some(true));
        acc.errors += usize::from(!row.error.is_empty());
        acc.ratio_lp.extend(row.ratio_lp);
        acc.ratio_opt.extend(row.ratio_opt);
        acc.restarts.extend(row.restarts.map(|r| r as f64));
    }
    let stat = |v: &[f64]| -> (String, String) {
        if v.is_empty() {
            ("-".into(), "-".into())
        } else {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (format!("{:.4}", mean), format!("{:.4}", max))
        }
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>5} {:>8} {:>6} {:>10} {:>10} {:>10} {:>10} {:>9}",
        "algorithm", "runs", "feasible", "errors", "mean/LP", "max/LP", "mean/OPT", "max/OPT", "restarts"
    );
    for (alg, acc) in &by_alg {
        let (ml, xl) = stat(&acc.ratio_lp);
        let (mo, xo) = stat(&acc.ratio_opt);
        let (mr, _) = stat(&acc.restarts);
        let _ = writeln!(
            out,
            "{:<10} {:>5} {:>8} {:>6} {:>10} {:>10} {:>10} {:>10} {:>9}",
            alg, acc.runs, acc.feasible, acc.errors, ml, xl, mo, xo, mr
        );
    }
    Ok(out)
}

/// The CSV with the wall-time column removed, for reproducibility checks.
pub fn deterministic_part(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|line| match line.rfind(',') {
            Some(i) => &line[..i],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
