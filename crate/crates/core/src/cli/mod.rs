//! The `czkit` command line.
//!
//! Each subcommand writes a JSON summary to stdout and to
//! `<out>/<command>.json`, plus CSV curves where relevant. Exit codes:
//! 0 success, 1 a checked property failed, 2 invalid configuration or
//! input, 3 inconclusive seminorm estimate.

mod commands;
mod config;

pub use config::RunConfig;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::Error;
use crate::ext::parse_extended;
use crate::verify::Method;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

fn extended(s: &str) -> Result<f64, String> {
    parse_extended(s).map_err(|e| e.to_string())
}

fn method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "czkit",
    version,
    about = "Singular integrals, stopping-time decompositions and weak-type checks"
)]
pub struct Cli {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: czkit_out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true, env = "CZKIT_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smoothness seminorm of a kernel.
    Seminorm(SeminormArgs),
    /// Stopping-time or maximal-function decomposition of a grid function.
    Decompose(DecomposeArgs),
    /// Whitney cubes of a 0/1 grid function.
    Whitney(WhitneyArgs),
    /// Apply the convolution operator.
    Apply(ApplyArgs),
    /// Distribution function and weak-type quasi-norm.
    Weaktype(WeaktypeArgs),
    /// Check the weak-type bound over a test set.
    Verify(VerifyArgs),
    /// Step-by-step trace of one proof.
    Trace(TraceArgs),
    /// Interval of exponents obtained by interpolation.
    Range(RangeArgs),
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// zero, hilbert, bump, riesz:<i> or custom:<path>.
    #[arg(long)]
    kernel: Option<String>,
    /// Dimension for kernels defined in several dimensions.
    #[arg(long)]
    n: Option<usize>,
    /// Size constant A for tabulated kernels.
    #[arg(long)]
    size_constant: Option<f64>,
}

#[derive(Debug, Args)]
struct SeminormArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_parser = extended)]
    r: Option<f64>,
    /// The annular seminorm instead of the averaged one.
    #[arg(long)]
    watson: bool,
    /// Comma-separated radii replacing the dyadic default.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long)]
    y_spacing: Option<f64>,
    #[arg(long)]
    outer_factor: Option<f64>,
    #[arg(long)]
    outer_spacing: Option<f64>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long, value_parser = method)]
    method: Option<Method>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WhitneyArgs {
    #[arg(long)]
    omega: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ApplyArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Principal-value exclusion radius in grid cells.
    #[arg(long)]
    exclusion: Option<f64>,
}

#[derive(Debug, Args)]
struct AlphaArgs {
    /// Decimal exponent of the smallest alpha.
    #[arg(long, allow_hyphen_values = true)]
    alpha_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_max: Option<f64>,
    #[arg(long)]
    per_decade: Option<usize>,
}

#[derive(Debug, Args)]
struct WeaktypeArgs {
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Apply this kernel to the input first.
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    alphas: AlphaArgs,
}

#[derive(Debug, Args)]
struct OperatorArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_parser = extended)]
    s: Option<f64>,
    /// Bound of the operator on L^s.
    #[arg(long = "B")]
    bound: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_parser = method)]
    method: Option<Method>,
    #[command(flatten)]
    op: OperatorArgs,
    /// `builtin` or CSV files, comma-separated.
    #[arg(long, value_delimiter = ',')]
    testset: Option<Vec<String>>,
    #[command(flatten)]
    alphas: AlphaArgs,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long, value_parser = method)]
    method: Option<Method>,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long)]
    alpha: Option<f64>,
    /// Input function; without it a built-in test function is used.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Index into the built-in test set.
    #[arg(long)]
    function: Option<usize>,
}

#[derive(Debug, Args)]
struct RangeArgs {
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_parser = extended)]
    s: Option<f64>,
}

impl KernelArgs {
    fn apply(self, c: &mut RunConfig) {
        c.kernel = self.kernel;
        c.n = self.n;
        c.size_constant = self.size_constant;
    }
}

impl AlphaArgs {
    fn apply(self, c: &mut RunConfig) {
        c.alpha_min = self.alpha_min;
        c.alpha_max = self.alpha_max;
        c.per_decade = self.per_decade;
    }
}

impl OperatorArgs {
    fn apply(self, c: &mut RunConfig) {
        self.kernel.apply(c);
        c.q = self.q;
        c.s = self.s;
        c.bound = self.bound;
    }
}

impl Cli {
    /// The settings given on the command line alone.
    fn flags(self) -> (Option<PathBuf>, RunConfig) {
        let mut c = RunConfig {
            out: self.out,
            seed: self.seed,
            workers: self.workers,
            ..Default::default()
        };
        let name = match self.command {
            Command::Seminorm(a) => {
                a.kernel.apply(&mut c);
                c.r = a.r;
                c.watson = a.watson.then_some(true);
                c.radii = a.radii;
                c.y_spacing = a.y_spacing;
                c.outer_factor = a.outer_factor;
                c.outer_spacing = a.outer_spacing;
                "seminorm"
            }
            Command::Decompose(a) => {
                c.method = a.method;
                c.q = a.q;
                c.height = a.height;
                c.input = a.input;
                "decompose"
            }
            Command::Whitney(a) => {
                c.omega = a.omega;
                "whitney"
            }
            Command::Apply(a) => {
                a.kernel.apply(&mut c);
                c.input = a.input;
                c.exclusion = a.exclusion;
                "apply"
            }
            Command::Weaktype(a) => {
                a.kernel.apply(&mut c);
                a.alphas.apply(&mut c);
                c.q = a.q;
                c.input = a.input;
                "weaktype"
            }
            Command::Verify(a) => {
                a.op.apply(&mut c);
                a.alphas.apply(&mut c);
                c.method = a.method;
                c.testset = a.testset;
                "verify"
            }
            Command::Trace(a) => {
                a.op.apply(&mut c);
                c.method = a.method;
                c.alpha = a.alpha;
                c.input = a.input;
                c.function = a.function;
                "trace"
            }
            Command::Range(a) => {
                c.q = a.q;
                c.s = a.s;
                "range"
            }
        };
        c.command = Some(name.to_string());
        (self.config, c)
    }
}

/// What a subcommand produced.
pub(crate) struct Outcome {
    pub summary: serde_json::Value,
    pub code: i32,
}

fn error_json(e: &Error) -> serde_json::Value {
    json!({
        "version": crate::VERSION,
        "error": e.to_string(),
        "kind": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("Error"),
    })
}

/// Parses the process arguments, runs the subcommand and returns the exit
/// status.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (file, flags) = cli.flags();
    let config = match file {
        Some(path) => match RunConfig::load(&path) {
            Ok(base) => base.overlay(flags),
            Err(e) => return report_error(&e),
        },
        None => flags,
    };
    match run(&config) {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &Error) -> i32 {
    println!(
        "{}",
        serde_json::to_string_pretty(&error_json(e)).unwrap_or_default()
    );
    EXIT_CONFIG
}

/// Runs one merged configuration and writes its artifacts.
pub fn run(config: &RunConfig) -> crate::Result<i32> {
    config.validate()?;
    if let Some(w) = config.workers {
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global();
    }
    let command = config.need(&config.command, "command")?;
    let out = config.out_dir();
    std::fs::create_dir_all(&out)?;
    let outcome = commands::dispatch(&command, config, &out)?;
    let mut summary = outcome.summary;
    if let Some(obj) = summary.as_object_mut() {
        obj.insert("version".into(), json!(crate::VERSION));
        obj.insert("config".into(), serde_json::to_value(config)?);
    }
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(out.join(format!("{command}.json")), format!("{text}\n"))?;
    println!("{text}");
    Ok(outcome.code)
}
