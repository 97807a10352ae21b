//! `evoc` command-line runner.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 1 internal error.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use evoc::experiments::{
    self, ExperimentSpec, Metric, SweepParam, DEFAULT_C_SWEEP, DEFAULT_I_SWEEP, DEFAULT_RUNS,
    DIVERSITY_ITERATIONS, FITNESS_ITERATIONS,
};
use evoc::output;
use evoc::seed::RNG_ALGORITHM;
use evoc::{EvocError, FitnessTable, Neighborhood, RunConfig, SeriesTable};

use crate::config::ConfigFile;

const DEFAULT_SEED: u64 = 1;
const SEED_ENV: &str = "EVOC_SEED";

#[derive(Debug, Parser)]
#[command(name = "evoc", version, about = "Cultural evolution simulations with creative leaders")]
struct Cli {
    /// Flat key=value configuration file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// A single run; writes per-iteration statistics and a final per-agent dump.
    Run(RunArgs),
    /// Leader inventiveness sweep, mean fitness.
    Exp1a(InventivenessArgs),
    /// Leader inventiveness sweep, diversity.
    Exp1b(InventivenessArgs),
    /// Leader rate-of-conceptual-change sweep, mean fitness.
    Exp2(RateArgs),
    /// Sweep any creativity parameter over a configurable base world.
    Sweep(SweepArgs),
    /// Dump the full fitness landscape, best first.
    Optima(OptimaArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn enabled(self) -> bool {
        matches!(self, OnOff::On)
    }
}

impl FromStr for OnOff {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <OnOff as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NeighborhoodArg {
    Moore,
    Vonneumann,
}

impl FromStr for NeighborhoodArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <NeighborhoodArg as ValueEnum>::from_str(s, true)
    }
}

impl From<NeighborhoodArg> for Neighborhood {
    fn from(n: NeighborhoodArg) -> Self {
        match n {
            NeighborhoodArg::Moore => Neighborhood::Moore,
            NeighborhoodArg::Vonneumann => Neighborhood::VonNeumann,
        }
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{s:?} is not a number: {e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Debug, Args)]
struct WorldArgs {
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, value_parser = probability)]
    i_leader: Option<f64>,
    #[arg(long, value_parser = probability)]
    i_followers: Option<f64>,
    #[arg(long, value_parser = probability)]
    c_leader: Option<f64>,
    #[arg(long, value_parser = probability)]
    c_followers: Option<f64>,
    #[arg(long, value_enum)]
    broadcast: Option<OnOff>,
    #[arg(long, value_enum)]
    operators: Option<OnOff>,
    #[arg(long, value_enum)]
    neighborhood: Option<NeighborhoodArg>,
}

const WORLD_KEYS: &[&str] = &[
    "width",
    "height",
    "i-leader",
    "i-followers",
    "c-leader",
    "c-followers",
    "broadcast",
    "operators",
    "neighborhood",
];

#[derive(Debug, Args)]
struct BatchArgs {
    /// Runs per sweep value.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Master seed (default: $EVOC_SEED, else 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a fitness column normalised by the landscape maximum.
    #[arg(long)]
    normalized: bool,
}

const BATCH_KEYS: &[&str] = &["runs", "iterations", "seed", "out", "normalized"];

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InventivenessArgs {
    #[arg(long, value_parser = probability)]
    i_followers: Option<f64>,
    /// Leader inventiveness values, comma separated.
    #[arg(long, value_parser = probability, value_delimiter = ',', num_args = 1..)]
    sweep: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    operators: Option<OnOff>,
    #[command(flatten)]
    batch: BatchArgs,
}

#[derive(Debug, Args)]
struct RateArgs {
    /// Leader rate-of-change values, comma separated.
    #[arg(long, value_parser = probability, value_delimiter = ',', num_args = 1..)]
    sweep: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    operators: Option<OnOff>,
    #[command(flatten)]
    batch: BatchArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_parser = ["i-leader", "i-followers", "c-leader", "c-followers"])]
    param: Option<String>,
    #[arg(long, value_parser = probability, value_delimiter = ',', num_args = 1..)]
    values: Option<Vec<f64>>,
    #[arg(long, value_parser = ["fitness", "diversity"])]
    metric: Option<String>,
    #[command(flatten)]
    world: WorldArgs,
    #[command(flatten)]
    batch: BatchArgs,
}

#[derive(Debug, Args)]
struct OptimaArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Internal(String),
}

impl From<EvocError> for Failure {
    fn from(e: EvocError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Command line first, then the config file.
struct Layers {
    file: ConfigFile,
}

impl Layers {
    fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key).map_err(usage),
        }
    }

    fn pick_probability(&self, cli: Option<f64>, key: &str) -> CliResult<Option<f64>> {
        match cli {
            Some(v) => Ok(Some(v)),
            None => match self.file.get::<String>(key).map_err(usage)? {
                Some(s) => probability(&s).map(Some).map_err(|e| usage(format!("config key {key}: {e}"))),
                None => Ok(None),
            },
        }
    }

    fn pick_list(&self, cli: Option<Vec<f64>>, key: &str) -> CliResult<Option<Vec<f64>>> {
        match cli {
            Some(v) => Ok(Some(v)),
            None => match self.file.get_list::<String>(key).map_err(usage)? {
                Some(items) => items
                    .iter()
                    .map(|s| probability(s).map_err(|e| usage(format!("config key {key}: {e}"))))
                    .collect::<CliResult<Vec<f64>>>()
                    .map(Some),
                None => Ok(None),
            },
        }
    }

    fn pick_flag(&self, cli: bool, key: &str) -> CliResult<bool> {
        Ok(cli || self.file.get::<bool>(key).map_err(usage)?.unwrap_or(false))
    }

    /// Flag, then file, then `$EVOC_SEED`, then the built-in default.
    fn seed(&self, cli: Option<u64>) -> CliResult<u64> {
        if let Some(s) = self.pick(cli, "seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| usage(format!("{SEED_ENV}={v:?}: {e}"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    fn world(&self, args: &WorldArgs, base: &mut RunConfig) -> CliResult<()> {
        if let Some(v) = self.pick(args.width, "width")? {
            base.width = v;
        }
        if let Some(v) = self.pick(args.height, "height")? {
            base.height = v;
        }
        if let Some(v) = self.pick_probability(args.i_leader, "i-leader")? {
            base.leader_params.i = v;
        }
        if let Some(v) = self.pick_probability(args.i_followers, "i-followers")? {
            base.follower_params.i = v;
        }
        if let Some(v) = self.pick_probability(args.c_leader, "c-leader")? {
            base.leader_params.c = v;
        }
        if let Some(v) = self.pick_probability(args.c_followers, "c-followers")? {
            base.follower_params.c = v;
        }
        if let Some(v) = self.pick(args.broadcast, "broadcast")? {
            base.broadcasting = v.enabled();
        }
        if let Some(v) = self.pick(args.operators, "operators")? {
            base.set_operators(v.enabled());
        }
        if let Some(v) = self.pick(args.neighborhood, "neighborhood")? {
            base.neighborhood = v.into();
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Metadata<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    master_seed: u64,
    rng: &'static str,
    landscape: String,
    created_unix: u64,
}

fn write_metadata<C: Serialize>(dir: &Path, command: &str, config: &C, seed: u64) -> CliResult<()> {
    let meta = Metadata {
        tool: "evoc",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        master_seed: seed,
        rng: RNG_ALGORITHM,
        landscape: FitnessTable::shared_default().name().to_owned(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Internal(e.to_string()))?;
    let path = dir.join(format!("{command}.meta.json"));
    fs::write(&path, json + "\n").map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

/// Creates `dir` if needed and checks that files can be created in it.
fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| usage(format!("cannot create output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".evoc-write-probe");
    fs::write(&probe, b"")
        .map_err(|e| usage(format!("output directory {} is not writable: {e}", dir.display())))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn print_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Internal(format!("stdout: {e}")))
}

fn emit_table(
    name: &str,
    spec: &ExperimentSpec,
    table: &SeriesTable,
    out: Option<&Path>,
    normalized: bool,
) -> CliResult<()> {
    let scale = normalized.then(|| FitnessTable::shared_default().max().value());
    let csv = output::render_series_csv(table, scale);
    match out {
        None => print_stdout(&csv),
        Some(dir) => {
            let csv_path = dir.join(format!("{name}.csv"));
            fs::write(&csv_path, csv)
                .map_err(|e| Failure::Internal(format!("{}: {e}", csv_path.display())))?;
            output::write_chart(table, &dir.join(format!("{name}.svg")))?;
            write_metadata(dir, name, spec, spec.master_seed)
        }
    }
}

fn run_experiment(
    name: &str,
    spec: &ExperimentSpec,
    metric: Metric,
    out: Option<&Path>,
    normalized: bool,
) -> CliResult<()> {
    spec.validate()?;
    if let Some(dir) = out {
        prepare_out_dir(dir)?;
    }
    let table = experiments::run_experiment(spec, &[metric])?;
    emit_table(name, spec, &table, out, normalized)
}

struct Batch {
    runs: usize,
    iterations: usize,
    seed: u64,
    out: Option<PathBuf>,
    normalized: bool,
}

fn resolve_batch(layers: &Layers, args: &BatchArgs, default_iterations: usize) -> CliResult<Batch> {
    Ok(Batch {
        runs: layers.pick(args.runs, "runs")?.unwrap_or(DEFAULT_RUNS),
        iterations: layers
            .pick(args.iterations, "iterations")?
            .unwrap_or(default_iterations),
        seed: layers.seed(args.seed)?,
        out: layers.pick(args.out.clone(), "out")?,
        normalized: layers.pick_flag(args.normalized, "normalized")?,
    })
}

fn cmd_run(layers: &Layers, args: &RunArgs) -> CliResult<()> {
    layers
        .file
        .check_keys(&[WORLD_KEYS, &["iterations", "seed", "out"]].concat())
        .map_err(usage)?;
    let mut config = RunConfig::default();
    layers.world(&args.world, &mut config)?;
    if let Some(v) = layers.pick(args.iterations, "iterations")? {
        config.iterations = v;
    }
    config.seed = layers.seed(args.seed)?;
    config.validate()?;
    let out = layers.pick(args.out.clone(), "out")?;
    if let Some(dir) = &out {
        prepare_out_dir(dir)?;
    }
    let trajectory = evoc::run(&config)?;
    match out {
        None => print_stdout(&output::render_run_csv(&trajectory)),
        Some(dir) => {
            output::write_run_csv(&trajectory, &dir.join("run.csv"))?;
            output::write_agents_csv(&trajectory.final_world, &dir.join("agents.csv"))?;
            write_metadata(&dir, "run", &config, config.seed)
        }
    }
}

fn cmd_inventiveness(layers: &Layers, args: &InventivenessArgs, which: &str) -> CliResult<()> {
    layers
        .file
        .check_keys(&[BATCH_KEYS, &["i-followers", "sweep", "operators"]].concat())
        .map_err(usage)?;
    let (metric, default_iterations) = if which == "exp1a" {
        (Metric::Fitness, FITNESS_ITERATIONS)
    } else {
        (Metric::Diversity, DIVERSITY_ITERATIONS)
    };
    let batch = resolve_batch(layers, &args.batch, default_iterations)?;
    let i_followers = layers
        .pick_probability(args.i_followers, "i-followers")?
        .unwrap_or(0.0);
    let sweep = layers
        .pick_list(args.sweep.clone(), "sweep")?
        .unwrap_or_else(|| DEFAULT_I_SWEEP.to_vec());
    let mut spec = ExperimentSpec::exp1a(i_followers, sweep, batch.runs, batch.iterations, batch.seed);
    if let Some(v) = layers.pick(args.operators, "operators")? {
        spec.base.set_operators(v.enabled());
    }
    run_experiment(which, &spec, metric, batch.out.as_deref(), batch.normalized)
}

fn cmd_rate(layers: &Layers, args: &RateArgs) -> CliResult<()> {
    layers
        .file
        .check_keys(&[BATCH_KEYS, &["sweep", "operators"]].concat())
        .map_err(usage)?;
    let batch = resolve_batch(layers, &args.batch, FITNESS_ITERATIONS)?;
    let sweep = layers
        .pick_list(args.sweep.clone(), "sweep")?
        .unwrap_or_else(|| DEFAULT_C_SWEEP.to_vec());
    let mut spec = ExperimentSpec::exp2(sweep, batch.runs, batch.iterations, batch.seed);
    if let Some(v) = layers.pick(args.operators, "operators")? {
        spec.base.set_operators(v.enabled());
    }
    run_experiment("exp2", &spec, Metric::Fitness, batch.out.as_deref(), batch.normalized)
}

fn cmd_sweep(layers: &Layers, args: &SweepArgs) -> CliResult<()> {
    layers
        .file
        .check_keys(&[WORLD_KEYS, BATCH_KEYS, &["param", "values", "metric"]].concat())
        .map_err(usage)?;
    let param: SweepParam = layers
        .pick(args.param.clone(), "param")?
        .ok_or_else(|| usage("sweep needs --param"))?
        .parse()?;
    let values = layers
        .pick_list(args.values.clone(), "values")?
        .ok_or_else(|| usage("sweep needs --values"))?;
    let metric: Metric = layers
        .pick(args.metric.clone(), "metric")?
        .unwrap_or_else(|| "fitness".to_owned())
        .parse()?;
    let batch = resolve_batch(layers, &args.batch, FITNESS_ITERATIONS)?;
    let mut base = RunConfig {
        iterations: batch.iterations,
        ..RunConfig::default()
    };
    layers.world(&args.world, &mut base)?;
    let spec = ExperimentSpec {
        base,
        swept_parameter: param,
        sweep_values: values,
        runs_per_point: batch.runs,
        master_seed: batch.seed,
    };
    run_experiment("sweep", &spec, metric, batch.out.as_deref(), batch.normalized)
}

fn cmd_optima(layers: &Layers, args: &OptimaArgs) -> CliResult<()> {
    layers.file.check_keys(&["out"]).map_err(usage)?;
    let table = FitnessTable::shared_default();
    match layers.pick(args.out.clone(), "out")? {
        None => print_stdout(&output::render_landscape_csv(&table)),
        Some(dir) => {
            prepare_out_dir(&dir)?;
            output::write_landscape_csv(&table, &dir.join("optima.csv"))?;
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(usage)?,
        None => ConfigFile::default(),
    };
    let layers = Layers { file };
    match &cli.command {
        Command::Run(a) => cmd_run(&layers, a),
        Command::Exp1a(a) => cmd_inventiveness(&layers, a, "exp1a"),
        Command::Exp1b(a) => cmd_inventiveness(&layers, a, "exp1b"),
        Command::Exp2(a) => cmd_rate(&layers, a),
        Command::Sweep(a) => cmd_sweep(&layers, a),
        Command::Optima(a) => cmd_optima(&layers, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("evoc: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("evoc: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("evoc: {msg}");
            ExitCode::from(1)
        }
    }
}
