use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod output;

use error::CliError;

/// Coefficient tables, accelerated iterations, condition reports and figure data.
#[derive(Debug, Parser)]
#[command(name = "bn-ergodic", version)]
struct Cli {
    /// Directory every output file is written to.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a coefficient table: `coeffs <bn|betabin|cesaro> [param] <n_max> [csv|json]`.
    Coeffs(CoeffsArgs),
    /// Check the summability conditions on a table and write a report.
    Conditions(ConditionsArgs),
    /// Run the accelerated iteration and fit decay rates.
    Iterate(IterateArgs),
    /// Compare the direct iteration against the coefficient expansion.
    Equivalence(EquivalenceArgs),
    /// Row-by-row comparison of the BN and beta-binomial tables.
    Compare(CompareArgs),
    /// Export figure data as CSV.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// Table kind, parameter (omitted for cesaro), n_max and optional format.
    #[arg(required = true, num_args = 2..=4, value_name = "ARGS")]
    pub positional: Vec<String>,

    /// Rational arithmetic; the parameter must be an integer or `p/q`.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct ConditionsArgs {
    /// Table file (CSV `n,k,value` or JSON); overrides the generation options.
    #[arg(long)]
    pub table: Option<PathBuf>,

    #[arg(long, default_value = "bn")]
    pub kind: String,

    /// α for bn, β for betabin; ignored for cesaro.
    #[arg(long, default_value = "4")]
    pub param: String,

    /// Last generated row.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,

    /// Row samples, comma separated (default: geometric up to n_max).
    #[arg(long, value_delimiter = ',')]
    pub n_samples: Vec<usize>,

    /// Tail starts for the Cohen check (default: 0 plus geometric up to n_max/2).
    #[arg(long, value_delimiter = ',')]
    pub k_samples: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    /// Built-in name (`shift`, `identity`, `rotation:<angle>:<dim>`,
    /// `orthogonal:<dim>:<seed>`) or a JSON operator file.
    pub operator: String,

    /// `auto` or an explicit dimension.
    #[arg(long, default_value = "auto")]
    pub dim: String,

    /// `e1`, `e<k>`, `ones`, or comma-separated entries.
    #[arg(long, default_value = "e1")]
    pub x0: String,

    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    #[command(flatten)]
    pub op: OperatorArgs,

    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// Fit window `lo:hi` (default: last half-decade).
    #[arg(long)]
    pub window: Option<String>,

    /// Also run the Cesàro averages.
    #[arg(long)]
    pub cesaro: bool,
}

#[derive(Debug, Args)]
pub struct EquivalenceArgs {
    #[command(flatten)]
    pub op: OperatorArgs,

    #[arg(long, default_value_t = 200)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,

    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,2,5,10,20,50,100,200,500,1000,2000"
    )]
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Panel,
    Heatmap,
    Loglog,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    pub which: Figure,

    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,

    /// Rows shown by `panel`.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50")]
    pub n: Vec<usize>,

    /// Last row for `heatmap` (default 220) and `loglog` (default 2000).
    #[arg(long)]
    pub n_max: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Coeffs(a) => commands::coeffs(out, &a),
        Command::Conditions(a) => commands::conditions(out, &a),
        Command::Iterate(a) => commands::iterate(out, &a),
        Command::Equivalence(a) => commands::equivalence(out, &a),
        Command::Compare(a) => commands::compare(out, &a),
        Command::Figures(a) => commands::figures(out, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
