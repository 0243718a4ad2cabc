//! Command-line front end: argument and config merging, dispatch, output.
//!
//! Everything that can be wrong with the invocation is checked before any
//! work starts or any file is written: usage errors exit with 2, failures
//! while running exit with 1.

mod commands;
mod config;
mod output;
mod specs;

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

pub use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(
    name = "coarse",
    version,
    about = "Estimation from coarse (set-valued) Gaussian observations"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Base seed; repeat k runs with seed + k.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Independent repeats, one CSV each.
    #[arg(long, global = true, default_value_t = 1)]
    pub repeats: usize,
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; all available cores by default. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Config file of `key = value` lines with `[subcommand]` sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write 0 in wall-time columns so outputs are byte-comparable.
    #[arg(long, global = true)]
    pub freeze_clock: bool,
    /// Hit-and-run burn-in steps (500·d by default).
    #[arg(long, global = true)]
    pub hnr_burn_in: Option<usize>,
    /// Hit-and-run steps between retained states.
    #[arg(long, global = true)]
    pub hnr_thinning: Option<usize>,
    /// Probe acceptance rate above which polytope cells use rejection.
    #[arg(long, global = true)]
    pub min_acceptance: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Estimate a Gaussian mean from coarse observations.
    Estimate(EstimateArgs),
    /// Linear regression under market friction.
    Friction(FrictionArgs),
    /// Test a partition for identifiability.
    Identify(IdentifyArgs),
    /// Variance before and after truncation for scalar families.
    Varred(VarredArgs),
    /// Check the truncated samplers against known answers.
    SamplerCheck(SamplerCheckArgs),
    /// Write synthetic coarse observations to a replay file.
    Record(RecordArgs),
}

impl Sub {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Estimate(_) => "estimate",
            Self::Friction(_) => "friction",
            Self::Identify(_) => "identify",
            Self::Varred(_) => "varred",
            Self::SamplerCheck(_) => "sampler-check",
            Self::Record(_) => "record",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TruthArgs {
    /// True mean, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_star: Option<String>,
    /// File holding the true mean.
    #[arg(long)]
    pub mu_star_file: Option<PathBuf>,
    /// Draw the true mean per repeat with this norm, in a uniform direction.
    #[arg(long)]
    pub mu_star_random: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Practical,
    WorstCase,
}

#[derive(Args, Debug, Clone)]
pub struct EstimateArgs {
    /// grid:h, slabs:v1,v2,...:h, breakpoints:file, voronoi:file, whole or singletons.
    #[arg(long)]
    pub partition: Option<String>,
    /// Dimension; inferred from the partition or truth when omitted.
    #[arg(long)]
    pub d: Option<usize>,
    #[command(flatten)]
    pub truth: TruthArgs,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Information-preservation parameter.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Radius of the ball around the center known to contain the mean.
    #[arg(long, default_value_t = 1.0)]
    pub warm_radius: f64,
    /// Center of that ball, comma separated; the origin by default.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// Fixed-budget mode: spend exactly this many observations.
    #[arg(long)]
    pub budget_n: Option<usize>,
    /// Boosting runs per stage; ⌈48 ln(1/δ)⌉ by default.
    #[arg(long)]
    pub boost_repeats: Option<usize>,
    #[arg(long, value_enum, default_value_t = Preset::Practical)]
    pub schedule: Preset,
    /// Override the schedule's safety factor.
    #[arg(long)]
    pub safety: Option<f64>,
    /// Skip the warm-start stage.
    #[arg(long)]
    pub single_stage: bool,
    /// Refuse schedules needing more observations than this.
    #[arg(long)]
    pub max_samples: Option<usize>,
    /// Read observations from a replay file instead of simulating them.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, default_value = "estimate.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct FrictionArgs {
    /// floor:h, ladder:file (lines "start value", first start -inf) or identity.
    #[arg(long, default_value = "floor:1")]
    pub friction: String,
    #[arg(long, default_value_t = 200_000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    /// File holding the true coefficients.
    #[arg(long)]
    pub w_star_file: Option<PathBuf>,
    /// Draw the coefficients per repeat uniformly from the ball of this radius.
    #[arg(long)]
    pub w_star_random: Option<f64>,
    /// Radius of the ball searched; the random radius or ‖w*‖ by default.
    #[arg(long)]
    pub c_bound: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Override the schedule's safety factor.
    #[arg(long)]
    pub safety: Option<f64>,
    /// Boost over this many disjoint data splits.
    #[arg(long, default_value_t = 1)]
    pub boost_splits: usize,
    #[arg(long, default_value = "friction.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct IdentifyArgs {
    #[arg(long)]
    pub partition: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[command(flatten)]
    pub truth: TruthArgs,
    #[arg(long, default_value_t = 2000)]
    pub n_cells: usize,
    #[arg(long, default_value = "identify.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct VarredArgs {
    /// Comma-separated subset of gaussian, laplace, beta, quartic.
    #[arg(long, default_value = "gaussian,laplace,beta,quartic")]
    pub families: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    /// Half-line truncation [cut, ∞); the family mean by default.
    #[arg(long, allow_hyphen_values = true)]
    pub cut: Option<f64>,
    /// Interval truncation lo,hi; mean ± one standard deviation by default.
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    #[arg(long, default_value = "varred.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SamplerCheckArgs {
    /// Draws for the half-line mean check.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    /// Draws per sampler for the hit-and-run chi-square check.
    #[arg(long, default_value_t = 100_000)]
    pub hnr_samples: usize,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value = "sampler_check.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct RecordArgs {
    #[arg(long)]
    pub partition: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[command(flatten)]
    pub truth: TruthArgs,
    /// Observations to write.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "cells.txt")]
    pub out: PathBuf,
}

fn command() -> clap::Command {
    Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true))
}

fn parse(cmd: &clap::Command, argv: &[OsString]) -> Result<Cli, clap::Error> {
    let m = cmd.clone().try_get_matches_from(argv)?;
    Cli::from_arg_matches(&m)
}

/// Index of the subcommand token in `argv`.
fn subcommand_index(cmd: &clap::Command, argv: &[OsString], name: &str) -> Option<usize> {
    let takes_value = |flag: &str| {
        cmd.get_arguments()
            .any(|a| a.get_long() == Some(flag) && !matches!(a.get_action(), ArgAction::SetTrue))
    };
    let mut i = 1;
    while i < argv.len() {
        let t = argv[i].to_string_lossy();
        if let Some(flag) = t.strip_prefix("--") {
            i += if !flag.contains('=') && takes_value(flag) {
                2
            } else {
                1
            };
        } else if t == name {
            return Some(i);
        } else {
            i += 1;
        }
    }
    None
}

/// Config values go before the user's flags, so flags given on the
/// command line win.
fn merge_config(
    cmd: &clap::Command,
    cli: &Cli,
    argv: &[OsString],
) -> Result<Vec<OsString>, String> {
    let path = cli.global.config.as_ref().expect("config path present");
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let cfg = ConfigFile::parse(&text)?;
    let name = cli.command.name();
    let (global, local) = cfg.to_args(cmd, name)?;
    let at = subcommand_index(cmd, argv, name).ok_or("cannot locate the subcommand")?;
    let mut out = vec![argv[0].clone()];
    out.extend(global);
    out.extend_from_slice(&argv[1..=at]);
    out.extend(local);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

/// Runs the CLI on `argv` and returns the exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let cmd = command();
    let clap_fail = |e: clap::Error| {
        let _ = e.print();
        e.exit_code()
    };
    let mut cli = match parse(&cmd, &argv) {
        Ok(c) => c,
        Err(e) => return clap_fail(e),
    };
    if cli.global.config.is_some() {
        let merged = match merge_config(&cmd, &cli, &argv) {
            Ok(a) => a,
            Err(msg) => {
                eprintln!("error: {msg}");
                return 2;
            }
        };
        cli = match parse(&cmd, &merged) {
            Ok(c) => c,
            Err(e) => return clap_fail(e),
        };
    }
    let job = match commands::prepare(&cli) {
        Ok(j) => j,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot start worker threads: {e}");
            return 1;
        }
    }
    match commands::execute(job).and_then(|o| o.write(&cli.global.out_dir)) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
