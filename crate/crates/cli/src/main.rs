//! `rpl`: command-line front end for the resilience pattern language.
//!
//! Exit codes: 0 success, 1 violations found, 2 usage or bad input,
//! 3 unsatisfiable query, 4 runtime failure.

use std::fmt::Write as _;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use rpl_core::catalog::{parse_catalog_exact, CatalogError};
use rpl_core::simulator::{run_simulation_in, sweep_in, SimError, SweepGrid};
use rpl_core::synthesis::{synthesize, DesignQuery, Domain, EntryMode, SynthesisError};
use rpl_core::{
    build_language_graph, explain, export_dot, load_catalog, to_canonical_json, validate_catalog,
    validate_graph, Capability, Catalog, CostWeights, EdgeOverlay, FaultModelClass, GraphError,
    PatternClass, PatternGraph, SimConfig,
};
use rpl_service::{AppState, ServiceConfig};

/// Failure classes with stable exit codes.
#[derive(Debug)]
enum Failure {
    Violations(Vec<String>),
    Usage(String),
    Unsatisfiable(String),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violations(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Unsatisfiable(_) => 3,
            Failure::Runtime(_) => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "rpl", version, about = "Resilience design-pattern language toolkit")]
struct Cli {
    /// Catalog document merged over the built-in catalog.
    #[arg(long, global = true, value_name = "FILE")]
    catalog: Option<PathBuf>,
    /// Extra relationship edges for the pattern graph.
    #[arg(long, global = true, value_name = "FILE")]
    overlay: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect and validate the pattern catalog.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Export or validate the pattern graph.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Derive ranked solutions for a design query.
    Synth(SynthArgs),
    /// Run fault-injection simulations.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Serve the HTTP JSON API.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// List patterns, optionally of one class.
    List {
        #[arg(long)]
        class: Option<PatternClass>,
        #[arg(long)]
        json: bool,
    },
    /// Show one pattern.
    Show {
        id: String,
        #[arg(long)]
        json: bool,
    },
    /// Validate a complete catalog document, or the active catalog.
    Validate { file: Option<PathBuf> },
    /// Print the active catalog as canonical JSON.
    Export,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Print the graph as DOT or JSON.
    Export {
        #[arg(long, value_enum, default_value = "dot")]
        format: GraphFormat,
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Validate a graph JSON document, or the active graph.
    Validate { file: Option<PathBuf> },
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long = "fault-model", value_delimiter = ',', required = true)]
    fault_models: Vec<FaultModelClass>,
    #[arg(long = "capability", value_delimiter = ',', required = true)]
    capabilities: Vec<Capability>,
    #[arg(long, default_value = "any")]
    domain: Domain,
    #[arg(long, default_value = "fault-model-first")]
    mode: EntryMode,
    /// Five comma-separated weights in axis order.
    #[arg(long)]
    weights: Option<CostWeights>,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long = "seed-pattern", value_delimiter = ',')]
    seeds: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long, default_value_t = rpl_core::synthesis::DEFAULT_MAX_INSTANCES)]
    max_instances: usize,
    /// Print the narrative for each candidate.
    #[arg(long)]
    explain: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Simulate one configuration.
    Run {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Write the trace of trial 0 as JSON lines.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Simulate the cartesian product of parameter values.
    Sweep {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// `param=v1,v2,...` or `pattern.param=...`; repeatable.
        #[arg(long, value_parser = SweepGrid::parse_axis)]
        grid: Vec<rpl_core::simulator::SweepAxis>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Also write the table as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long, env = "RPL_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Concurrent simulation jobs (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Append-only job journal replayed at startup.
    #[arg(long, value_name = "FILE")]
    journal: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn catalog_failure(path: &Path, e: CatalogError) -> Failure {
    match e {
        CatalogError::Invalid(v) => Failure::Violations(v.iter().map(|x| x.to_string()).collect()),
        other => Failure::Violations(vec![format!("{}: {other}", path.display())]),
    }
}

fn graph_failure(e: GraphError) -> Failure {
    match e {
        GraphError::InvalidCatalog(v) | GraphError::InvalidGraph(v) => {
            Failure::Violations(v.iter().map(|x| x.to_string()).collect())
        }
        other => Failure::Violations(vec![other.to_string()]),
    }
}

fn active_catalog(cli: &Cli) -> Result<Catalog, Failure> {
    match &cli.catalog {
        Some(path) => load_catalog(&read(path)?).map_err(|e| catalog_failure(path, e)),
        None => Ok(rpl_core::builtin_catalog()),
    }
}

fn active_graph(cli: &Cli, catalog: &Catalog) -> Result<PatternGraph, Failure> {
    let overlay = match &cli.overlay {
        Some(path) => EdgeOverlay::from_json(&read(path)?).map_err(graph_failure)?,
        None => EdgeOverlay::empty(),
    };
    build_language_graph(catalog, &overlay).map_err(graph_failure)
}

fn emit(text: &str) {
    print!("{text}");
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn catalog_cmd(cli: &Cli, cmd: &CatalogCommand) -> Outcome {
    match cmd {
        CatalogCommand::List { class, json } => {
            let catalog = active_catalog(cli)?;
            let rows: Vec<_> = catalog.iter().filter(|p| class.is_none_or(|c| p.class == c)).collect();
            if *json {
                emit(&to_canonical_json(&rows));
            } else {
                let mut out = format!("{:<32} {:<14} {:>10}  {:<20} {}\n", "ID", "CLASS", "COMPLEXITY", "HANDLES", "CAPABILITIES");
                for p in rows {
                    let _ = writeln!(
                        out,
                        "{:<32} {:<14} {:>10}  {:<20} {}",
                        p.id,
                        p.class,
                        p.complexity,
                        join(&p.handles),
                        join(&p.capabilities)
                    );
                }
                emit(&out);
            }
        }
        CatalogCommand::Show { id, json } => {
            let catalog = active_catalog(cli)?;
            let p = catalog
                .get(id)
                .ok_or_else(|| Failure::Usage(format!("unknown pattern `{id}`")))?;
            if *json {
                emit(&to_canonical_json(p));
            } else {
                let mut out = String::new();
                let _ = writeln!(out, "{} ({})", p.name, p.id);
                let _ = writeln!(out, "class:        {}", p.class);
                let _ = writeln!(out, "parents:      {}", join(&p.parents));
                let _ = writeln!(out, "handles:      {}", join(&p.handles));
                let _ = writeln!(out, "capabilities: {}", join(&p.capabilities));
                let _ = writeln!(out, "complexity:   {}", p.complexity);
                let _ = writeln!(out, "problem:      {}", p.problem);
                let _ = writeln!(out, "solution:     {}", p.solution);
                for spec in &p.parameters {
                    let _ = writeln!(out, "parameter:    {} [{}] in {} (default {})", spec.name, spec.unit, spec.domain, spec.default);
                }
                emit(&out);
            }
        }
        CatalogCommand::Validate { file } => {
            let (catalog, label) = match file {
                Some(path) => (
                    parse_catalog_exact(&read(path)?).map_err(|e| catalog_failure(path, e))?,
                    path.display().to_string(),
                ),
                None => (active_catalog(cli)?, "active catalog".to_string()),
            };
            let violations = validate_catalog(&catalog);
            if !violations.is_empty() {
                return Err(Failure::Violations(violations.iter().map(|v| v.to_string()).collect()));
            }
            println!("{label}: {} patterns, no violations", catalog.len());
        }
        CatalogCommand::Export => emit(&active_catalog(cli)?.to_json()),
    }
    Ok(())
}

fn graph_cmd(cli: &Cli, cmd: &GraphCommand) -> Outcome {
    match cmd {
        GraphCommand::Export { format, output } => {
            let catalog = active_catalog(cli)?;
            let g = active_graph(cli, &catalog)?;
            let text = match format {
                GraphFormat::Dot => export_dot(&g),
                GraphFormat::Json => g.to_json(),
            };
            match output {
                Some(path) => fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => emit(&text),
            }
        }
        GraphCommand::Validate { file } => {
            let (g, label) = match file {
                Some(path) => (
                    PatternGraph::from_json(&read(path)?).map_err(graph_failure)?,
                    path.display().to_string(),
                ),
                None => {
                    let catalog = active_catalog(cli)?;
                    (active_graph(cli, &catalog)?, "active graph".to_string())
                }
            };
            let violations = validate_graph(&g);
            if !violations.is_empty() {
                return Err(Failure::Violations(violations.iter().map(|v| v.to_string()).collect()));
            }
            println!("{label}: {} vertices, {} edges, no violations", g.vertices().len(), g.edges().len());
        }
    }
    Ok(())
}

fn synth_cmd(cli: &Cli, args: &SynthArgs) -> Outcome {
    let catalog = active_catalog(cli)?;
    let g = active_graph(cli, &catalog)?;
    let mut q = DesignQuery::new(args.fault_models.iter().copied(), args.capabilities.iter().copied())
        .with_mode(args.mode)
        .with_domain(args.domain.clone());
    q.seed_patterns = args.seeds.iter().cloned().collect();
    q.exclude = args.exclude.iter().cloned().collect();
    q.max_candidates = args.top;
    q.max_instances = args.max_instances;
    if let Some(w) = &args.weights {
        q.weights = *w;
    }
    let candidates = synthesize(&g, &catalog, &q).map_err(|e| match e {
        SynthesisError::Unsatisfiable(miss) => Failure::Unsatisfiable(miss.to_string()),
        other => Failure::Usage(other.to_string()),
    })?;
    if args.json {
        emit(&to_canonical_json(&candidates));
        return Ok(());
    }
    let mut out = format!("{:>4} {:>10}  {:<18} {:<48} {}\n", "RANK", "SCORE", "BINDING", "INSTANCES", "SEQUENCE");
    for (i, c) in candidates.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4} {:>10.6}  {:<18} {:<48} {}",
            i + 1,
            c.score,
            c.state_binding,
            join(c.pattern_ids()),
            c.sequence.join(" > ")
        );
    }
    if args.explain {
        for (i, c) in candidates.iter().enumerate() {
            let narrative = explain(&g, &catalog, c).map_err(|e| Failure::Runtime(e.into()))?;
            let _ = write!(out, "\ncandidate {}:\n{}", i + 1, narrative.text());
        }
    }
    emit(&out);
    Ok(())
}

fn load_sim_config(path: &Path, seed: Option<u64>, trials: Option<u64>) -> Result<SimConfig, Failure> {
    let mut cfg: SimConfig = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Usage(format!("{}: invalid simulation config: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    Ok(cfg)
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Csv(_) => Failure::Runtime(e.into()),
        other => Failure::Usage(other.to_string()),
    }
}

fn sim_cmd(cli: &Cli, cmd: &SimCommand) -> Outcome {
    let catalog = active_catalog(cli)?;
    match cmd {
        SimCommand::Run { config, seed, trials, trace, threads, json } => {
            let mut cfg = load_sim_config(config, *seed, *trials)?;
            cfg.trace |= trace.is_some();
            let mut report = run_simulation_in(&cfg, &catalog, *threads).map_err(sim_failure)?;
            if let Some(path) = trace {
                let lines = report.trace.as_ref().map(|t| t.to_json_lines()).unwrap_or_default();
                fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
                report.trace = None;
            }
            if *json {
                emit(&to_canonical_json(&report));
                return Ok(());
            }
            let e = &report.events;
            let o = &report.overhead_breakdown;
            let mut out = String::new();
            let _ = writeln!(out, "trials            {}", report.trials);
            let _ = writeln!(out, "makespan mean     {:.3} s (stderr {:.3})", report.makespan_mean, report.makespan_stderr);
            let _ = writeln!(out, "makespan p50/p95  {:.3} / {:.3} s", report.makespan_p50, report.makespan_p95);
            let _ = writeln!(out, "efficiency mean   {:.6}", report.efficiency_mean);
            let _ = writeln!(out, "space overhead    {:.4}", report.space_overhead);
            let _ = writeln!(
                out,
                "events            faults {} errors {} detected {} masked {} recovered {} unrecovered {} votes {} lost_votes {} livelocks {}",
                e.injected_faults, e.activated_errors, e.detected, e.masked, e.recovered, e.unrecovered_failures, e.votes, e.lost_votes, e.livelock_aborts
            );
            let _ = writeln!(
                out,
                "overhead (s/trial) checkpointing {:.3} recovery {:.3} replication {:.3} monitoring {:.3} rejuvenation {:.3} lost_work {:.3}",
                o.checkpointing, o.recovery, o.replication, o.monitoring, o.rejuvenation, o.lost_work
            );
            emit(&out);
        }
        SimCommand::Sweep { config, grid, seed, trials, csv, threads, json } => {
            let cfg = load_sim_config(config, *seed, *trials)?;
            let table = sweep_in(&cfg, &SweepGrid(grid.clone()), &catalog, *threads).map_err(sim_failure)?;
            if let Some(path) = csv {
                let text = table.to_csv().map_err(sim_failure)?;
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            if *json {
                emit(&to_canonical_json(&table));
                return Ok(());
            }
            let mut out = String::new();
            for c in &table.columns {
                let _ = write!(out, "{c:>24} ");
            }
            let _ = writeln!(out, "{:>16} {:>12} {:>10}", "MAKESPAN_MEAN", "EFFICIENCY", "SPACE");
            for row in &table.rows {
                for c in &table.columns {
                    let _ = write!(out, "{:>24} ", row.bindings[c]);
                }
                let _ = writeln!(
                    out,
                    "{:>16.3} {:>12.6} {:>10.4}",
                    row.report.makespan_mean, row.report.efficiency_mean, row.report.space_overhead
                );
            }
            emit(&out);
        }
    }
    Ok(())
}

fn serve_cmd(cli: &Cli, args: &ServeArgs) -> Outcome {
    let catalog = active_catalog(cli)?;
    let graph = active_graph(cli, &catalog)?;
    let mut cfg = ServiceConfig::new(catalog, graph);
    cfg.workers = args.workers;
    cfg.journal = args.journal.clone();
    let state = AppState::new(cfg).map_err(|e| Failure::Runtime(e.into()))?;
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    runtime
        .block_on(rpl_service::serve(args.bind, state))
        .map_err(|e| Failure::Runtime(e.into()))
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Catalog { command } => catalog_cmd(cli, command),
        Command::Graph { command } => graph_cmd(cli, command),
        Command::Synth(args) => synth_cmd(cli, args),
        Command::Sim { command } => sim_cmd(cli, command),
        Command::Serve(args) => serve_cmd(cli, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Violations(list) => {
                    eprintln!("error: {} violation(s)", list.len());
                    for v in list {
                        eprintln!("  {v}");
                    }
                }
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Unsatisfiable(m) => eprintln!("unsatisfiable: {m}"),
                Failure::Runtime(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(failure.code())
        }
    }
}
