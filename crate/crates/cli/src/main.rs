//! `chamberflow`: command line front end.
//!
//! Exit codes: 0 on success, 1 when a computation is refused or an
//! identity fails, 2 on configuration, usage or input errors.

mod commands;
mod config;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{FlagOverrides, RunConfig, SEED_ENV};

#[derive(Debug)]
pub enum CliError {
    /// bad config file or flag values (exit 2)
    Config(String),
    /// unreadable or malformed input (exit 2)
    Input(String),
    /// the computation refused or a check failed (exit 1)
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<chamberflow_core::Error> for CliError {
    fn from(e: chamberflow_core::Error) -> Self {
        match e {
            chamberflow_core::Error::InvalidInput(m) => CliError::Input(m),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chamberflow", version, about = "Bruhat-Hopf coordinates, cocycles and Schottky dynamics for SL(n, R)")]
pub struct Cli {
    /// JSON run configuration; its values take precedence over flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// matrix size for sampled inputs
    #[arg(long, global = true)]
    n: Option<usize>,
    /// RNG seed (CHAMBERFLOW_SEED takes precedence)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// cap on enumerated words
    #[arg(long, global = true)]
    max_words: Option<usize>,
    /// largest power tried when certifying Schottky seeds
    #[arg(long, global = true)]
    max_power: Option<u32>,
    /// Monte-Carlo samples for δ estimates
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    /// directory for CSV and SVG files
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// worker threads (default: available cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// write the JSON report here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// JSON reports (the default; kept for scripts that pass it)
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// KAN, KAN⁻, KA⁺K and Bruhat decompositions of a matrix (random if omitted)
    Decompose(DecomposeArgs),
    /// Transversality of two flags; exit 1 when not transverse
    Transverse(TransverseArgs),
    /// Signed cocycle β_{s1,s0}(g, ξ)
    Cocycle(CocycleArgs),
    /// Loxodromic data of a matrix
    Lox(LoxArgs),
    /// Schottky families and their dynamics
    #[command(subcommand)]
    Schottky(SchottkyCommand),
    /// Same as `schottky limit-cone`
    LimitCone(ConeArgs),
    /// Same as `schottky sign-group`
    SignGroup(SignGroupArgs),
    /// Same as `schottky decor-check`
    DecorCheck(DecorArgs),
    /// Same as `schottky mix-probe`
    MixProbe(ProbeArgs),
    /// Toral density certificates
    #[command(subcommand)]
    Density(DensityCommand),
    /// Run identity suites; exit 1 if any identity fails
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum SchottkyCommand {
    /// Certify powers of the seeds and report the family
    Build(FamilyArgs),
    /// Sample the limit cone; writes cone.csv and, for n = 3, cone.svg
    LimitCone(ConeArgs),
    /// Sign group M_Γ from the ℒ M-parts of words
    SignGroup(SignGroupArgs),
    /// Check that every component label is attained by ping-pong words
    DecorCheck(DecorArgs),
    /// Count λ hits along a direction θ inside a window
    MixProbe(ProbeArgs),
}

#[derive(Debug, Subcommand)]
pub enum DensityCommand {
    /// Generators of a dense subgroup with a covering certificate
    Select(DensityArgs),
    /// Semigroup covering of a translated cone
    Cone(DensityArgs),
    /// Density of Jordan projections of a Schottky family
    Bridge(BridgeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DecompositionKind {
    All,
    Kan,
    KanMinus,
    Kak,
    Bruhat,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// matrix JSON {"n", "rows"}; `-` reads stdin
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub kind: DecompositionKind,
}

#[derive(Debug, Args)]
pub struct TransverseArgs {
    /// flag JSON {"rep", "canonical"} or a matrix whose flag is taken
    pub xi: PathBuf,
    pub xi_check: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Unipotent,
    Compact,
}

#[derive(Debug, Args)]
pub struct CocycleArgs {
    /// target section: a section JSON, or a flag taken as its base
    #[arg(long)]
    pub s1: PathBuf,
    /// source section
    #[arg(long)]
    pub s0: PathBuf,
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long)]
    pub xi: PathBuf,
    /// kind of sections built from bare flags
    #[arg(long, value_enum, default_value = "unipotent")]
    pub kind: KindArg,
}

#[derive(Debug, Args)]
pub struct LoxArgs {
    pub matrix: PathBuf,
    /// also certify (r, ε)-loxodromy
    #[arg(long, requires = "eps")]
    pub r: Option<f64>,
    #[arg(long, requires = "r")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FixtureArg {
    Sl2Pair,
    Sl2IrrationalPair,
    Sl3Triple,
    Sl3Engineered,
}

#[derive(Debug, Args, Clone)]
pub struct FamilyArgs {
    /// JSON array of seed matrices; overrides --fixture
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sl3-engineered")]
    pub fixture: FixtureArg,
    /// overrides the fixture's r
    #[arg(long)]
    pub r: Option<f64>,
    /// overrides the fixture's ε
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConeArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct SignGroupArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 4)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct DecorArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 4)]
    pub max_len: usize,
    /// exponent of the ping-pong words
    #[arg(long = "power", default_value_t = 1)]
    pub power: u32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Interior,
    Exterior,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// direction θ as comma-separated coordinates (trace zero)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "direction")]
    pub theta: Option<Vec<f64>>,
    /// pick θ from the sampled cone instead
    #[arg(long, value_enum, default_value = "interior")]
    pub direction: DirectionArg,
    /// θ-window a,b
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    #[arg(long)]
    pub delta0: Option<f64>,
    /// word budget (default: budgets.max_words)
    #[arg(long)]
    pub budget: Option<usize>,
    /// word length of the cone used for --direction
    #[arg(long, default_value_t = 6)]
    pub cone_len: usize,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// JSON array of points {"v": [...], "c": [...]}
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub delta: f64,
    /// window [a, b]^d, given as a,b
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    #[arg(long, default_value_t = chamberflow_core::density::DEFAULT_COEFF_BOUND)]
    pub coeff_bound: u32,
}

#[derive(Debug, Args)]
pub struct BridgeArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    #[arg(long, default_value_t = chamberflow_core::density::DEFAULT_COEFF_BOUND)]
    pub coeff_bound: u32,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// suites to run: decompositions, cocycles, loxodromy, prop-crucial,
    /// schottky, density, mixing or all
    #[arg(default_value = "all")]
    pub suites: Vec<String>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected a,b but got {s:?}"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|e| format!("{:?}: {e}", parts[0]))?;
    let b: f64 = parts[1].trim().parse().map_err(|e| format!("{:?}: {e}", parts[1]))?;
    if !(a < b) {
        return Err(format!("window needs a < b, got {a} and {b}"));
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("chamberflow: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let flags = FlagOverrides {
        n: cli.n,
        seed: cli.seed,
        max_words: cli.max_words,
        max_power: cli.max_power,
        mc_samples: cli.mc_samples,
        out_dir: cli.out_dir.clone(),
    };
    let cfg = RunConfig::resolve(&flags, cli.config.as_deref(), std::env::var(SEED_ENV).ok())?;
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    commands::dispatch(&cli.command, &cfg, cli.output.as_deref())
}
