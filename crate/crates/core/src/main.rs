use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cmpnet::harness::{
    run_on, BoundSchedule, EdgeList, ExperimentConfig, ExperimentError, Generator, GraphIoError, GraphSource,
    PolicySpec, ReportError, ScheduleError, Snapshot,
};
use cmpnet::hft::{search_ht, HftError};
use cmpnet::kernel::{NodeId, SimError};
use cmpnet::protocols::{LabelVariant, WeightMode, WillVariant};
use cmpnet::routing::{execute_will, label_of, simulate_route};

#[derive(Parser)]
#[command(name = "cmpnet", version, about = "Compact message passing: routing labels, wills and self-healing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated graph as an edge list.
    Gen(GenArgs),
    /// Run the preprocessing pipeline and report metrics.
    Preprocess(PreprocessArgs),
    /// Print the neighborhood of `y` in the half-full tree over [a, b].
    QueryHt { y: u64, a: u64, b: u64 },
    /// Route a packet between two nodes of a snapshot.
    Route {
        #[arg(long)]
        snapshot: PathBuf,
        source: u64,
        target: u64,
        #[arg(long, default_value_t = 100_000)]
        max_hops: u64,
    },
    /// Delete a node from a snapshot and heal around it.
    Delete {
        #[arg(long)]
        snapshot: PathBuf,
        node: u64,
        /// Where to write the healed snapshot.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the pipeline over several sizes and seeds and emit CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Path,
    Star,
    Complete,
    BalancedTree,
    GnpConnected,
    RandomTree,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// Node count (leaf count for stars).
    #[arg(long, default_value_t = 16)]
    n: u64,
    #[arg(long, default_value_t = 3)]
    depth: u32,
    #[arg(long, default_value_t = 2)]
    arity: u64,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Rename ids through a random injection into [0, RELABEL).
    #[arg(long)]
    relabel: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GenArgs {
    fn generator(&self, n: u64, seed: u64) -> Generator {
        match self.kind {
            GenKind::Path => Generator::Path { n },
            GenKind::Star => Generator::Star { leaves: n },
            GenKind::Complete => Generator::Complete { n },
            GenKind::BalancedTree => Generator::BalancedTree {
                depth: self.depth,
                arity: self.arity,
            },
            GenKind::GnpConnected => Generator::GnpConnected { n, p: self.p, seed },
            GenKind::RandomTree => Generator::RandomTree { n, seed },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelsArg {
    Big,
    Small,
}

#[derive(Clone, Copy, ValueEnum)]
enum WillsArg {
    OneRound,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Broadcast,
    Poll,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// TOML bound schedule; defaults are built in.
    #[arg(long)]
    bounds: Option<PathBuf>,
    #[arg(long)]
    b: Option<u64>,
    /// node, rand:SEED or strong
    #[arg(long)]
    policy: Option<PolicySpec>,
    #[arg(long, value_enum)]
    labels: Option<LabelsArg>,
    #[arg(long, value_enum)]
    wills: Option<WillsArg>,
    #[arg(long, value_enum)]
    weight_mode: Option<WeightArg>,
    /// Multiplier on the default budget of 64 log n words per node.
    #[arg(long)]
    budget_mult: Option<f64>,
    /// Number ports with random gaps from this seed.
    #[arg(long)]
    port_seed: Option<u64>,
    /// Fault on repeated reads or writes of a port within a round.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
    strict: Option<bool>,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "gnp-connected")]
    kind: GenKind,
    #[arg(long, value_delimiter = ',', default_values_t = [32u64, 64, 128, 256])]
    sizes: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64])]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[command(flatten)]
    run: RunArgs,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Fault(String),
    #[error("{0}")]
    Unsupported(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Fault(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Unsupported(_) => 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Unsupported(_) => CliError::Unsupported(e.to_string()),
            SimError::Config(_) | SimError::Graph(_) => CliError::Usage(e.to_string()),
            SimError::Fault(_) | SimError::RoundLimit { .. } => CliError::Fault(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Sim(s) => s.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Usage(e.to_string())
            }
        }
    )*};
}
usage_from!(GraphIoError, ReportError, ScheduleError, HftError, std::io::Error, toml::de::Error);

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                so.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn experiment_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => toml::from_str(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(b) = args.b {
        cfg.b = b;
    }
    if let Some(p) = args.policy {
        cfg.policy = p;
    }
    if let Some(l) = args.labels {
        cfg.labels = match l {
            LabelsArg::Big => LabelVariant::Big,
            LabelsArg::Small => LabelVariant::Small,
        };
    }
    if let Some(w) = args.wills {
        cfg.wills = match w {
            WillsArg::OneRound => WillVariant::OneRound,
            WillsArg::Adversarial => WillVariant::Adversarial,
        };
    }
    if let Some(w) = args.weight_mode {
        cfg.weight_mode = match w {
            WeightArg::Broadcast => WeightMode::Broadcast,
            WeightArg::Poll => WeightMode::Poll,
        };
    }
    if let Some(m) = args.budget_mult {
        cfg.budget_mult = m;
    }
    if args.port_seed.is_some() {
        cfg.port_seed = args.port_seed;
    }
    if let Some(s) = args.strict {
        cfg.strict = s;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn schedule(args: &RunArgs) -> Result<BoundSchedule, CliError> {
    Ok(match &args.bounds {
        Some(p) => BoundSchedule::load(p)?,
        None => BoundSchedule::default(),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Gen(args) => {
            let mut g = args.generator(args.n, args.seed).generate()?;
            if let Some(max) = args.relabel {
                g = g.relabel(args.seed, max)?;
            }
            emit(args.out.as_deref(), &g.to_text())
        }
        Cmd::Preprocess(args) => preprocess(args),
        Cmd::QueryHt { y, a, b } => emit(None, &json(&search_ht(y, a, b)?)),
        Cmd::Route {
            snapshot,
            source,
            target,
            max_hops,
        } => {
            let net = Snapshot::load(&snapshot)?.network()?;
            let (s, t) = (NodeId(source), NodeId(target));
            if !net.contains(s) {
                return Err(CliError::Usage(format!("source {s} is not in the network")));
            }
            let label = label_of(&net, t).ok_or_else(|| CliError::Usage(format!("target {t} is not in the network")))?;
            let outcome = simulate_route(&net, s, &label, max_hops);
            emit(None, &json(&outcome))?;
            match &outcome.error {
                None => Ok(()),
                Some(e) => Err(CliError::Fault(format!("packet not delivered: {e}"))),
            }
        }
        Cmd::Delete { snapshot, node, out } => {
            let snap = Snapshot::load(&snapshot)?;
            let mut net = snap.network()?;
            let report = execute_will(&mut net, NodeId(node))?;
            if let Some(p) = out {
                Snapshot::of(&net, snap.b).save(&p)?;
            }
            emit(None, &json(&report))
        }
        Cmd::Sweep(args) => sweep(args),
    }
}

fn preprocess(args: PreprocessArgs) -> Result<(), CliError> {
    let mut cfg = experiment_config(&args.run)?;
    if let Some(g) = args.graph {
        cfg.graph = Some(GraphSource::File(g));
    }
    let src = cfg.graph.clone().ok_or_else(|| CliError::Usage("no graph: pass --graph or set it in --config".into()))?;
    let g = cmpnet::harness::load_source(&src)?;
    let e = run_on(&cfg, &g, &schedule(&args.run)?)?;
    if let Some(p) = &args.snapshot {
        Snapshot::of(&e.network, cfg.b).save(p)?;
    }
    if let Some(p) = &args.csv {
        e.report.write_csv(std::fs::File::create(p)?, true)?;
    }
    emit(args.out.as_deref(), &e.report.to_json()?)?;
    for v in &e.report.verdicts {
        eprintln!("{v}");
    }
    if e.report.passed() {
        Ok(())
    } else {
        Err(CliError::Fault(format!(
            "{} oracle discrepancies, {} bound failures",
            e.report.audit.len(),
            e.report.verdicts.iter().filter(|v| !v.pass).count()
        )))
    }
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = experiment_config(&args.run)?;
    let bounds = schedule(&args.run)?;
    let gen = GenArgs {
        kind: args.kind,
        n: 0,
        depth: 3,
        arity: 2,
        p: args.p,
        seed: 0,
        relabel: None,
        out: None,
    };
    let jobs: Vec<(u64, u64)> = args.sizes.iter().flat_map(|&n| args.seeds.iter().map(move |&s| (n, s))).collect();
    // Experiments share nothing, so each runs on its own thread.
    let results: Vec<Result<Vec<u8>, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .enumerate()
            .map(|(i, &(n, seed))| {
                let (base, bounds, g) = (&base, &bounds, gen.generator(n, seed));
                scope.spawn(move || -> Result<Vec<u8>, CliError> {
                    let graph: EdgeList = g.generate()?;
                    let e = run_on(base, &graph, bounds)?;
                    let mut buf = Vec::new();
                    e.report.write_csv(&mut buf, i == 0)?;
                    Ok(buf)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut csv = Vec::new();
    for r in results {
        csv.extend(r?);
    }
    emit(args.out.as_deref(), &String::from_utf8_lossy(&csv))
}
