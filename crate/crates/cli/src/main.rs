use std::fs;
use std::io::Write;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kdanon_core::constraints::{ConstraintSet, EpsPrivacy, TCloseness};
use kdanon_core::dataset::{Config, Dataset, SplitSet};
use kdanon_core::enumeration::{self, multi_enumerate_visit, MULTI_ENUMERATE_MAX_SPLITS};
use kdanon_core::metrics::{query_error_report, Metric, RangeQuery};
use kdanon_core::partition::PartitionExport;
use kdanon_core::search::{self, Mode, Priority, Progress, SearchConfig, SearchResult, SearchStats};
use kdanon_core::space::Space;
use kdanon_core::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "kdanon", version, about = "Optimal hierarchical generalization for data anonymization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Branch-and-bound search for the best partition.
    Search(SearchArgs),
    /// Greedy top-down partitioning, optionally improved by search.
    Greedy {
        #[command(flatten)]
        args: SearchArgs,
        /// Use the greedy result as the starting incumbent of a search.
        #[arg(long)]
        improve: bool,
    },
    /// Count the distinct partitions of the split set.
    EnumerateCount {
        #[command(flatten)]
        input: Input,
        /// Cross-check against brute-force enumeration (small split sets only).
        #[arg(long)]
        oracle: bool,
    },
    /// Estimate count queries on a saved partition and compare with the data.
    Query {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Use a seeded random sample of this many rows.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Dm,
    Cm,
    Vm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Optimal,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorityArg {
    Lb,
    Cost,
    Lbcost,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value = "dm")]
    metric: MetricArg,
    #[arg(long)]
    k: Option<u32>,
    /// Entropy l-diversity.
    #[arg(long)]
    l: Option<f64>,
    /// t-closeness threshold.
    #[arg(long)]
    t: Option<f64>,
    /// eps-privacy against a class-II adversary (needs --sigma and --b).
    #[arg(long, requires_all = ["sigma", "b"])]
    eps: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Constant delta term of the eps-privacy R2 condition.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Prune subtrees on t-closeness and eps-privacy violations too.
    #[arg(long)]
    assume_monotone: bool,
    /// Minimum block edge length, as attribute=value (repeatable).
    #[arg(long = "min-length", value_parser = parse_min_length)]
    min_length: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value = "optimal")]
    mode: ModeArg,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "lb")]
    priority: PriorityArg,
    #[arg(long, default_value_t = 1_000_000)]
    max_queue: usize,
    /// Time budget in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write zero for elapsed times so repeated runs give identical files.
    #[arg(long)]
    no_timings: bool,
}

fn parse_min_length(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected attribute=value")?;
    let v: f64 = value.parse().map_err(|e| format!("bad length `{value}`: {e}"))?;
    Ok((name.to_string(), v))
}

impl SearchArgs {
    fn config(&self) -> anyhow::Result<SearchConfig> {
        let constraints = ConstraintSet {
            k: self.k,
            min_lengths: self.min_length.clone(),
            l: self.l,
            t: self.t.map(|t| TCloseness {
                t,
                assume_monotone: self.assume_monotone,
            }),
            eps: self.eps.map(|eps| EpsPrivacy {
                eps,
                sigma: self.sigma.unwrap_or(0.0),
                b: self.b.unwrap_or(0.0),
                delta: self.delta,
                assume_monotone: self.assume_monotone,
            }),
        };
        let metric = match self.metric {
            MetricArg::Dm => Metric::Dm,
            MetricArg::Cm => Metric::Cm,
            MetricArg::Vm => Metric::Vm,
        };
        let mut cfg = SearchConfig::new(metric, constraints);
        cfg.mode = match self.mode {
            ModeArg::Optimal => Mode::Optimal,
            ModeArg::Approx => Mode::Approx(self.alpha),
        };
        cfg.priority = match self.priority {
            PriorityArg::Lb => Priority::Lb,
            PriorityArg::Cost => Priority::Cost,
            PriorityArg::Lbcost => Priority::LbOverCost,
        };
        cfg.max_queue = self.max_queue;
        if let Some(t) = self.time_limit {
            if !(t > 0.0 && t.is_finite()) {
                bail!("--time-limit must be a positive number of seconds");
            }
            cfg.time_limit = Some(Duration::from_secs_f64(t));
        }
        cfg.node_limit = self.node_limit;
        cfg.workers = self.workers;
        Ok(cfg)
    }
}

fn load_space(input: &Input) -> anyhow::Result<Space> {
    let config = Config::load(&input.config).with_context(|| format!("reading {}", input.config.display()))?;
    let mut ds = Dataset::load(&input.dataset, &config.schema)?;
    if let Some(n) = input.sample {
        if n == 0 {
            bail!("--sample must be positive");
        }
        ds = ds.sample(n, input.seed);
    }
    let splits = SplitSet::generate(&ds, &config.splits)?;
    Ok(Space::new(Arc::new(ds), Arc::new(splits)))
}

#[derive(Serialize)]
struct ResultFile<'a> {
    command: &'a str,
    metric: Metric,
    rows: u32,
    splits: usize,
    cost: f64,
    lower_bound: f64,
    ratio: Option<f64>,
    certificate: bool,
    budget_exhausted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy_cost: Option<f64>,
    blocks: usize,
    note: String,
    stats: SearchStats,
}

fn note(r: &SearchResult, mode: Mode) -> String {
    match (r.certificate, mode) {
        (true, Mode::Optimal) => "optimal: search space exhausted".into(),
        (true, Mode::Approx(a)) => format!("within a factor {a} of optimal: search space exhausted"),
        (false, _) if r.budget_exhausted => "budget expired: best partition found so far".into(),
        (false, _) if r.stats.forced_drops > 0 => "queue overflow dropped subtrees: best partition found".into(),
        (false, _) => "heuristic result".into(),
    }
}

#[allow(clippy::too_many_arguments)]
fn write_outputs(
    out: &Path,
    command: &str,
    space: &Space,
    cfg: &SearchConfig,
    r: &SearchResult,
    greedy_cost: Option<f64>,
    progress: &[Progress],
    no_timings: bool,
) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut stats = r.stats.clone();
    if no_timings {
        stats.elapsed_ms = 0;
    }
    let result = ResultFile {
        command,
        metric: cfg.metric,
        rows: space.n(),
        splits: space.splits().len(),
        cost: r.cost,
        lower_bound: r.lower_bound,
        ratio: r.ratio.is_finite().then_some(r.ratio),
        certificate: r.certificate,
        budget_exhausted: r.budget_exhausted,
        greedy_cost,
        blocks: r.tree.leaf_count(),
        note: note(r, cfg.mode),
        stats,
    };
    fs::write(out.join("result.json"), serde_json::to_string_pretty(&result)? + "\n")?;
    let export = PartitionExport::new(&r.tree, space);
    fs::write(out.join("partition.json"), serde_json::to_string_pretty(&export)? + "\n")?;
    let mut w = csv::Writer::from_path(out.join("progress.csv"))?;
    for p in progress {
        let mut p = *p;
        if no_timings {
            p.elapsed_ms = 0;
        }
        w.serialize(p)?;
    }
    if progress.is_empty() {
        w.write_record(["elapsed_ms", "best", "lower_bound", "ratio", "queue"])?;
    }
    w.flush()?;
    if let Some(g) = greedy_cost {
        let mut w = csv::Writer::from_path(out.join("comparison.csv"))?;
        w.write_record(["greedy_cost", "search_cost", "lower_bound"])?;
        w.write_record([g.to_string(), r.cost.to_string(), r.lower_bound.to_string()])?;
        w.flush()?;
    }
    Ok(())
}

fn summary(r: &SearchResult) {
    println!(
        "cost {} lower bound {} ratio {:.4} certificate {} blocks {} expanded {}",
        r.cost,
        r.lower_bound,
        r.ratio,
        r.certificate,
        r.tree.leaf_count(),
        r.stats.expanded
    );
}

fn cmd_search(args: &SearchArgs) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let space = load_space(&args.input)?;
    let mut progress = Vec::new();
    let r = search::prioritized_enumerate(&space, &cfg, &mut |p| progress.push(*p))?;
    write_outputs(&args.out, "search", &space, &cfg, &r, None, &progress, args.no_timings)?;
    summary(&r);
    Ok(())
}

fn cmd_greedy(args: &SearchArgs, improve: bool) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let space = load_space(&args.input)?;
    let g = search::mondrian_greedy(&space, &cfg)?;
    if !improve {
        write_outputs(&args.out, "greedy", &space, &cfg, &g, None, &[], args.no_timings)?;
        summary(&g);
        return Ok(());
    }
    let seeded = SearchConfig {
        seed: Some(g.tree.clone()),
        ..cfg.clone()
    };
    let mut progress = Vec::new();
    let r = search::prioritized_enumerate(&space, &seeded, &mut |p| progress.push(*p))?;
    write_outputs(&args.out, "greedy-improve", &space, &cfg, &r, Some(g.cost), &progress, args.no_timings)?;
    println!("greedy cost {}", g.cost);
    summary(&r);
    Ok(())
}

fn cmd_enumerate_count(input: &Input, oracle: bool) -> anyhow::Result<()> {
    let space = load_space(input)?;
    if oracle && space.splits().len() > MULTI_ENUMERATE_MAX_SPLITS {
        bail!(
            "--oracle needs at most {MULTI_ENUMERATE_MAX_SPLITS} splits, the split set has {}",
            space.splits().len()
        );
    }
    let count = enumeration::enumerate_categorical(&space, |_| ControlFlow::Continue(()))?;
    println!("partitions {count}");
    if oracle {
        let mut sigs = std::collections::BTreeSet::new();
        let trees = multi_enumerate_visit(&space, |t| {
            sigs.insert(t.signature());
            ControlFlow::Continue(())
        })?;
        let verdict = if sigs.len() as u64 == count { "MATCH" } else { "MISMATCH" };
        println!("oracle trees {trees} distinct {}", sigs.len());
        println!("{verdict}");
        if verdict == "MISMATCH" {
            bail!("enumeration disagrees with the oracle");
        }
    }
    Ok(())
}

fn cmd_query(input: &Input, partition: &Path, queries: &Path, out: &Path) -> anyhow::Result<()> {
    let space = load_space(input)?;
    let text = fs::read_to_string(partition).with_context(|| format!("reading {}", partition.display()))?;
    let export: PartitionExport = serde_json::from_str(&text).context("parsing partition")?;
    let tree = export.to_tree(&space)?;
    let queries = RangeQuery::load_list(queries)?;
    let report = query_error_report(&space, &tree, &queries)?;
    fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("query_report.csv"))?;
    for r in &report {
        w.serialize(r)?;
    }
    w.flush()?;
    fs::write(out.join("query_report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let mut stdout = std::io::stdout().lock();
    for r in &report {
        writeln!(stdout, "{}: estimate {:.3} actual {} error {:.4}", r.name, r.estimate, r.actual, r.relative_error)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Search(args) => cmd_search(args),
        Command::Greedy { args, improve } => cmd_greedy(args, *improve),
        Command::EnumerateCount { input, oracle } => cmd_enumerate_count(input, *oracle),
        Command::Query {
            input,
            partition,
            queries,
            out,
        } => cmd_query(input, partition, queries, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(e.downcast_ref::<Error>(), Some(Error::Infeasible)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
