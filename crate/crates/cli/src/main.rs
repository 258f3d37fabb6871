use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod spec;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0x5EED_2024;

#[derive(Parser, Debug)]
#[command(name = "advsample", version, about = "Sampling games against adaptive adversaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Littlestone and VC dimension of a family.
    Dim(DimArgs),
    /// Play one game and report the sample and its metrics.
    Game(GameArgs),
    /// Monte Carlo sweep over independent games.
    Sweep(SweepArgs),
    /// Dynamic sets, covers and learners.
    #[command(subcommand)]
    Cover(CoverCommand),
    /// Couplings between sampling schemes.
    #[command(subcommand)]
    Couple(CoupleCommand),
    /// Lower-bound constructions and their witnessed guarantees.
    LowerBound(LowerBoundArgs),
    /// Regret of multiplicative weights over dynamic-set experts.
    Regret(RegretArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DimArgs {
    #[arg(long)]
    pub family: String,
    /// Include a maximal shattered tree.
    #[arg(long)]
    pub witness: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GameArgs {
    /// Family the metrics range over; omit for `bsearch`.
    #[arg(long)]
    pub family: Option<String>,
    /// `ber:p=0.5`, `uni:k=8` or `res:k=8`.
    #[arg(long)]
    pub sampler: String,
    /// `obl:0,1,2`, `obl:@file`, `iid:uniform[,seed=S]`, `iid:weights=1/2/3`, `bsearch`, `tree`.
    #[arg(long)]
    pub adversary: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Report,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub sampler: String,
    #[arg(long)]
    pub adversary: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Comma-separated subset of `app,disc,net`.
    #[arg(long, default_value = "app")]
    pub metrics: String,
    /// Failure threshold for `app`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Net thresholds `m_hi,m_lo`.
    #[arg(long)]
    pub net: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Report)]
    pub format: Format,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    /// Record wall-clock time in the report (breaks byte-identical reruns).
    #[arg(long)]
    #[serde(skip)]
    pub timing: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StreamArgs {
    #[arg(long)]
    pub family: String,
    /// Stream as `0,3,1` or `@file`.
    #[arg(long)]
    pub stream: Option<String>,
    /// Draw a stream of this length uniformly over the domain.
    #[arg(long)]
    pub random_stream: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum CoverCommand {
    /// Count distinct traces of all dynamic sets with at most `ldim` indices.
    Traces {
        #[command(flatten)]
        args: StreamArgs,
        #[command(flatten)]
        output: Output,
    },
    /// The index set whose dynamic set traces a given set.
    IndexFor(IndexForArgs),
    /// Monte Carlo estimate of the fractional cover probabilities.
    Fractional(FractionalArgs),
    /// Standard optimal algorithm on a labelled stream.
    Soa(LearnerArgs),
    /// Multiplicative weights over dynamic-set experts.
    Mw(LearnerArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IndexForArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Index of the target set within the family.
    #[arg(long)]
    pub set: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FractionalArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[arg(long)]
    pub set: usize,
    /// `0.25` or `1/4`.
    #[arg(long, default_value = "1/4")]
    pub eps: String,
    /// Trace-distance threshold; defaults to `eps * n`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LearnerArgs {
    #[arg(long)]
    pub family: String,
    /// Number of labelled rounds, items uniform over the domain.
    #[arg(long, required_unless_present = "duel")]
    pub rounds: Option<usize>,
    /// Label flip probability, `0.1` or `1/10`.
    #[arg(long, default_value = "0")]
    pub noise: String,
    /// Learning rate; defaults to `sqrt(8 ln N / T)`.
    #[arg(long)]
    pub eta: Option<f64>,
    /// For `soa`: label against SOA along a maximal shattered tree instead.
    #[arg(long)]
    pub duel: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Subcommand, Debug)]
enum CoupleCommand {
    /// Uniform and Bernoulli samplers on `2k` rounds.
    UniBer(UniBerArgs),
    /// Reservoir trajectory conditioned on a uniform final set.
    ResUni(ResUniArgs),
    /// Exact final-set law of the reservoir sampler.
    ResMarginal(ResMarginalArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct UniBerArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "1/2")]
    pub p: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Print one full coupled trace instead of aggregates.
    #[arg(long)]
    pub trace: bool,
    /// Add the exact expected mismatch (small `k` only).
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ResUniArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub trace: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ResMarginalArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Tree,
    Bsearch,
    Halflines,
    RandomFamily,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LowerBoundArgs {
    #[arg(long, value_enum)]
    pub variant: Variant,
    /// `tree`: power-set dimension.
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// `bsearch`: horizon; `random-family`: domain size.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Sample size of the uniform sampler; defaults to `d/2` or `n/4`.
    #[arg(long)]
    pub k: Option<usize>,
    /// `halflines`: plane order.
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    /// `random-family`: number of sets.
    #[arg(long, default_value_t = 64)]
    pub count: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RegretArgs {
    #[arg(long, default_value = "thresholds:63")]
    pub family: String,
    /// Comma-separated horizons.
    #[arg(long, default_value = "256,1024,4096")]
    pub rounds: String,
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    #[arg(long, default_value = "1/10")]
    pub noise: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

pub type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

/// Rendered output: pretty JSON or raw text, newline-terminated.
pub enum Rendered {
    Json(serde_json::Value),
    Text(String),
}

fn emit(rendered: Rendered, out: Option<&PathBuf>) -> CliResult<()> {
    let mut body = match rendered {
        Rendered::Json(v) => serde_json::to_string_pretty(&v)?,
        Rendered::Text(t) => t,
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let (rendered, out) = match cli.command {
        Command::Dim(a) => (commands::dim(&a)?, a.output.out),
        Command::Game(a) => (commands::game(&a)?, a.output.out),
        Command::Sweep(a) => (commands::sweep(&a)?, a.output.out),
        Command::Cover(c) => match c {
            CoverCommand::Traces { args, output } => (commands::traces(&args)?, output.out),
            CoverCommand::IndexFor(a) => (commands::index_for_cmd(&a)?, a.output.out),
            CoverCommand::Fractional(a) => (commands::fractional(&a)?, a.output.out),
            CoverCommand::Soa(a) => (commands::soa(&a)?, a.output.out),
            CoverCommand::Mw(a) => (commands::mw(&a)?, a.output.out),
        },
        Command::Couple(c) => match c {
            CoupleCommand::UniBer(a) => (commands::uni_ber(&a)?, a.output.out),
            CoupleCommand::ResUni(a) => (commands::res_uni(&a)?, a.output.out),
            CoupleCommand::ResMarginal(a) => (commands::res_marginal(&a)?, a.output.out),
        },
        Command::LowerBound(a) => (commands::lower_bound(&a)?, a.output.out),
        Command::Regret(a) => (commands::regret(&a)?, a.output.out),
    };
    emit(rendered, out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
