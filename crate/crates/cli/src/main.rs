//! `diffcbv`: typecheck, differentiate, run and gradient-check `.dcbv` programs.
//!
//! Exit codes: 0 success, 1 diagnostics (parse/type errors, bad arguments or
//! flags, failed gradient checks), 2 I/O errors, 3 internal errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffcbv::Budget;

#[derive(Parser, Debug)]
#[command(name = "diffcbv", version, about = "Forward-mode AD for a fine-grain call-by-value language")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse, elaborate and typecheck a program.
    Check { file: PathBuf },
    /// Print the differentiated program in surface syntax.
    Ad { file: PathBuf },
    /// Run a program on arguments given with --args.
    Run { file: PathBuf },
    /// Compare AD against finite differences at one point.
    GradCheck { file: PathBuf },
    /// Check, differentiate and gradient-check the built-in corpus.
    Corpus,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Step budget for each run.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: Option<u64>,
    /// Absolute tolerance for gradient checks.
    #[arg(long, global = true, value_name = "F", default_value_t = 1e-5, value_parser = positive)]
    pub tol_abs: f64,
    /// Relative tolerance for gradient checks.
    #[arg(long, global = true, value_name = "F", default_value_t = 1e-4, value_parser = positive)]
    pub tol_rel: f64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for sampled directions and corpus inputs.
    #[arg(long, global = true, value_name = "HEX", value_parser = hex_seed)]
    pub seed: Option<u64>,
    /// Simplify let-return redexes in `ad` output.
    #[arg(long, global = true)]
    pub beta_simplify: bool,
    /// Comma-separated arguments in surface syntax.
    #[arg(long, global = true, value_name = "STR", allow_hyphen_values = true)]
    pub args: Option<String>,
    /// Real leaves of the evaluation point.
    #[arg(long, global = true, value_name = "CSV", allow_hyphen_values = true, value_parser = csv)]
    pub point: Option<Csv>,
    /// Tangent direction, one entry per real leaf.
    #[arg(long, global = true, value_name = "CSV", allow_hyphen_values = true, value_parser = csv)]
    pub dir: Option<Csv>,
    /// Print every reduction rule to stderr.
    #[arg(long, global = true)]
    pub trace: bool,
}

impl Opts {
    pub fn budget(&self) -> Budget {
        self.budget.map(Budget::new).unwrap_or_default()
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn hex_seed(s: &str) -> Result<u64, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(&digits.replace('_', ""), 16).map_err(|e| e.to_string())
}

/// Comma-separated reals.
#[derive(Clone, Debug)]
pub struct Csv(pub Vec<f64>);

fn csv(s: &str) -> Result<Csv, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Csv)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are diagnostics; keep 2 for I/O
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| commands::dispatch(&cli)) {
        Ok(code) => ExitCode::from(code),
        Err(_) => ExitCode::from(3),
    }
}
