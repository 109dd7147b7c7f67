//! Command-line surface for the buffered streaming partitioner.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use streampart_core::engine::{self, EngineConfig, RunResult};
use streampart_core::fennel::{fennel_pass, FennelParams};
use streampart_core::graph::{read_assignment, write_assignment, StreamGraph};
use streampart_core::metrics::{aid, MetricsReport};
use streampart_core::order::StreamOrder;
use streampart_core::partition::PartitionState;
use streampart_core::score::{ScoreKind, ScoringConfig};
use streampart_core::DefaultReal;

#[derive(Parser)]
#[command(
    name = "streampart",
    about = "Balanced k-way graph partitioning from a buffered node stream",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a graph with prioritized buffering and batch-wise
    /// multilevel assignment.
    Partition(PartitionArgs),
    /// One-pass greedy streaming baseline (no buffer, no batches).
    Fennel(FennelArgs),
    /// Evaluate an existing assignment: cut, balance, stream locality.
    Metrics(MetricsArgs),
    /// Generate and save a seeded random stream order.
    MakeOrder(MakeOrderArgs),
}

#[derive(Args)]
struct CommonIo {
    /// Graph in METIS adjacency format.
    graph: PathBuf,
    /// Stream order: source | random:SEED | file:PATH.
    #[arg(long, default_value = "source")]
    order: String,
    /// Write the per-node block assignment here.
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Write the metrics report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    io: CommonIo,
    /// Number of blocks.
    #[arg(long)]
    k: u32,
    /// Allowed imbalance: block weight bound is ceil((1+eps)*c(V)/k).
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
    /// Buffer capacity.
    #[arg(long, default_value_t = 1_048_576)]
    q_max: usize,
    /// Batch size.
    #[arg(long, default_value_t = 65_536)]
    delta: usize,
    /// Hub threshold: degrees above this bypass the buffer.
    #[arg(long, default_value_t = 10_000)]
    d_max: u32,
    /// Buffer score discretization multiplier.
    #[arg(long, default_value_t = 1000.0)]
    disc_factor: f64,
    /// Buffer score: anr | haa | nss | cms | cbs.
    #[arg(long, default_value = "haa")]
    score: String,
    /// Neighborhood-term weight (haa, cbs).
    #[arg(long, default_value_t = 0.75)]
    theta: f64,
    /// Degree-term exponent, >= 1 (haa).
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Buffered-neighbor weight in [0,1] (nss).
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Greedy objective scale; derived from the graph when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Greedy objective exponent, > 1.
    #[arg(long, default_value_t = 1.5)]
    gamma: f64,
    /// Total stream passes (1 = no restreaming).
    #[arg(long, default_value_t = 1)]
    passes: u32,
    /// Run pass one on the three-role pipeline.
    #[arg(long)]
    parallel: bool,
    /// Coarsening stop size; max(2k, 2048) when omitted.
    #[arg(long)]
    stop_size: Option<usize>,
    /// Refinement sweeps per level.
    #[arg(long, default_value_t = 3)]
    refine_rounds: u32,
    /// Parsed-line queue capacity (parallel mode).
    #[arg(long, default_value_t = 4096)]
    input_queue_cap: usize,
    /// Partition-task queue capacity (parallel mode).
    #[arg(long, default_value_t = 8)]
    task_queue_cap: usize,
    /// Seeds the coarsening visit order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print one log line per batch.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct FennelArgs {
    #[command(flatten)]
    io: CommonIo,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
    /// Greedy objective scale; derived from the graph when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    gamma: f64,
}

#[derive(Args)]
struct MetricsArgs {
    /// Graph in METIS adjacency format.
    graph: PathBuf,
    /// Stream order used for the locality measure: source | random:SEED | file:PATH.
    #[arg(long, default_value = "source")]
    order: String,
    /// Existing assignment file to evaluate.
    #[arg(long)]
    assignment: PathBuf,
    /// Write the metrics report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Number of blocks; inferred as max block id + 1 when omitted.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
}

#[derive(Args)]
struct MakeOrderArgs {
    /// Graph in METIS adjacency format (defines n).
    graph: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Output order file: n lines, line i = node streamed at position i.
    #[arg(long)]
    out: PathBuf,
}

fn parse_order(spec: &str, n: usize) -> Result<StreamOrder> {
    if spec == "source" {
        return Ok(StreamOrder::source(n));
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed.parse().with_context(|| format!("bad order seed '{seed}'"))?;
        return Ok(StreamOrder::random(n, seed));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let order = StreamOrder::load(path).with_context(|| format!("loading order {path}"))?;
        if order.len() != n {
            bail!("order file {path} has {} entries, graph has {n} nodes", order.len());
        }
        return Ok(order);
    }
    bail!("unknown order '{spec}' (expected source, random:SEED, or file:PATH)")
}

fn emit_outputs(
    report_path: Option<&PathBuf>,
    assignment_path: Option<&PathBuf>,
    g: &StreamGraph,
    state: &PartitionState,
    aid_mean: Option<f64>,
    ier_mean: Option<f64>,
    force_assigned: u64,
) -> Result<()> {
    let report = MetricsReport::build(g, state, aid_mean, ier_mean, force_assigned)?;
    print!("{}", report.to_key_value_lines());
    if let Some(path) = report_path {
        report.write_json(path).with_context(|| format!("writing report {}", path.display()))?;
    }
    if let Some(path) = assignment_path {
        write_assignment(state, path)
            .with_context(|| format!("writing assignment {}", path.display()))?;
    }
    Ok(())
}

fn cmd_partition(args: &PartitionArgs) -> Result<()> {
    let g = StreamGraph::load_metis(&args.io.graph)
        .with_context(|| format!("loading graph {}", args.io.graph.display()))?;
    let order = parse_order(&args.io.order, g.n())?;

    let kind: ScoreKind = args.score.parse().map_err(anyhow::Error::msg)?;
    let scoring = ScoringConfig::new(kind, args.theta, args.beta, args.eta, args.d_max)?;
    let mut cfg: EngineConfig<DefaultReal> = EngineConfig::new(args.k);
    cfg.epsilon = args.epsilon;
    cfg.q_max = args.q_max;
    cfg.delta = args.delta;
    cfg.d_max = args.d_max;
    cfg.disc_factor = args.disc_factor;
    cfg.scoring = scoring;
    cfg.passes = args.passes;
    cfg.seed = args.seed;
    cfg.parallel = args.parallel;
    cfg.alpha = args.alpha;
    cfg.gamma = args.gamma;
    cfg.stop_size = args.stop_size;
    cfg.refine_rounds = args.refine_rounds;
    cfg.input_queue_cap = args.input_queue_cap;
    cfg.task_queue_cap = args.task_queue_cap;

    let started = Instant::now();
    let result: RunResult = engine::run(&g, &order, &cfg)?;
    let elapsed = started.elapsed();

    if args.verbose {
        for b in &result.batch_stats {
            eprintln!(
                "batch pass={} index={} size={} ier={:.4} cut={}",
                b.pass, b.index, b.size, b.ier, b.cut_after
            );
        }
        eprintln!(
            "stats increase_key_calls={} q_peak={} batch_peak={} mem_peak_bytes={} hubs={}",
            result.stats.increase_key_calls,
            result.stats.q_peak,
            result.stats.batch_peak,
            result.stats.mem_peak_bytes,
            result.stats.hub_count
        );
    }
    let aid_mean = aid::<f64>(&g, &order).mean;
    emit_outputs(
        args.io.report.as_ref(),
        args.io.assignment.as_ref(),
        &g,
        &result.state,
        Some(aid_mean),
        result.ier_mean(),
        result.stats.force_assigned,
    )?;
    println!("runtime_ms={}", elapsed.as_millis());
    Ok(())
}

fn cmd_fennel(args: &FennelArgs) -> Result<()> {
    let g = StreamGraph::load_metis(&args.io.graph)
        .with_context(|| format!("loading graph {}", args.io.graph.display()))?;
    let order = parse_order(&args.io.order, g.n())?;
    let l_max = streampart_core::partition::compute_l_max(g.total_node_weight(), args.k, args.epsilon);
    let params = match args.alpha {
        Some(alpha) => Some(FennelParams::new(alpha, args.gamma, l_max)?),
        None => {
            let mut p = FennelParams::<DefaultReal>::for_graph(&g, args.k, l_max);
            p.gamma = args.gamma;
            Some(p)
        }
    };
    let started = Instant::now();
    let state = fennel_pass::<DefaultReal>(&g, &order, args.k, args.epsilon, params)?;
    let elapsed = started.elapsed();
    let aid_mean = aid::<f64>(&g, &order).mean;
    emit_outputs(
        args.io.report.as_ref(),
        args.io.assignment.as_ref(),
        &g,
        &state,
        Some(aid_mean),
        None,
        0,
    )?;
    println!("runtime_ms={}", elapsed.as_millis());
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let g = StreamGraph::load_metis(&args.graph)
        .with_context(|| format!("loading graph {}", args.graph.display()))?;
    let order = parse_order(&args.order, g.n())?;
    let blocks = read_assignment(&args.assignment, g.n())
        .with_context(|| format!("reading assignment {}", args.assignment.display()))?;
    let k = match args.k {
        Some(k) => k,
        None => blocks.iter().copied().max().map_or(1, |b| b + 1),
    };
    let state = PartitionState::from_assignment(&blocks, g.node_weights(), k, args.epsilon)?;
    let aid_mean = aid::<f64>(&g, &order).mean;
    emit_outputs(args.report.as_ref(), None, &g, &state, Some(aid_mean), None, 0)
}

fn cmd_make_order(args: &MakeOrderArgs) -> Result<()> {
    let g = StreamGraph::load_metis(&args.graph)
        .with_context(|| format!("loading graph {}", args.graph.display()))?;
    let order = StreamOrder::random(g.n(), args.seed);
    order.save(&args.out).with_context(|| format!("writing order {}", args.out.display()))?;
    println!("order_written={} n={} seed={}", args.out.display(), g.n(), args.seed);
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Partition(args) => cmd_partition(args),
        Command::Fennel(args) => cmd_fennel(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::MakeOrder(args) => cmd_make_order(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
