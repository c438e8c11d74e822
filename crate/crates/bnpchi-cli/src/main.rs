//! Command-line front end for the bnpchi library: goodness-of-fit and
//! independence tests, mass calibration, and the simulation utilities
//! behind them.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod config;
mod data;
mod emit;
mod run;

/// Errors split by exit code: usage problems (bad flags, bad specs,
/// contradictory options) exit 2, everything else that stops a run
/// (missing files, malformed data, failed searches) exits 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<bnpchi::Error> for CliError {
    fn from(e: bnpchi::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<bnpchi::ChisqError> for CliError {
    fn from(e: bnpchi::ChisqError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<bnpchi::independence::IndepError> for CliError {
    fn from(e: bnpchi::independence::IndepError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parses a comma-separated list of finite numbers, e.g. "-2,-1,0,1".
pub fn parse_number_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            return Err("empty entry in number list".to_string());
        }
        let x: f64 = tok.parse().map_err(|_| format!("not a number: {tok:?}"))?;
        if !x.is_finite() {
            return Err(format!("number list entries must be finite, got {tok:?}"));
        }
        out.push(x);
    }
    if out.is_empty() {
        return Err("number list is empty".to_string());
    }
    Ok(out)
}

/// Dirichlet-process chi-squared testing: calibrate the prior mass, test
/// goodness of fit (simple or composite null) and independence, and export
/// the simulation primitives behind the tests.
#[derive(Parser)]
#[command(name = "bnpchi", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the prior mass alpha with Pr(D(P, H) <= c) = q under the base measure.
    Calibrate(CalibrateArgs),
    /// Goodness-of-fit test of a data column against a fixed null distribution.
    Gof(GofArgs),
    /// Goodness-of-fit test against a parametric family with unknown rate.
    GofComposite(GofCompositeArgs),
    /// Independence test for paired observations on a rectangular grid.
    Indep(IndepArgs),
    /// Draw one Dirichlet process realization and print its atoms and weights.
    DpSample(DpSampleArgs),
    /// Analytic divergence moments for a fixed-atom realization, with a
    /// Monte Carlo cross-check.
    KlMoments(KlMomentsArgs),
    /// Posterior self-distance draws paired with chi-squared reference
    /// quantiles, for inspecting the large-sample law of the statistic.
    Asymptotics(AsymptoticsArgs),
    /// Grid of prior probabilities Pr(D(P, H) <= c) over masses and thresholds.
    Table1(Table1Args),
}

/// Flags shared by every subcommand.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Root seed for all randomness; fixed seed means fixed output.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replicates for distance draws.
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads (0 = all cores). Parallelism never changes the numbers.
    #[arg(long)]
    workers: Option<usize>,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with the same keys as the flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Base measure spec, e.g. "normal:0,1" or "exp:2".
    #[arg(long)]
    null: Option<String>,
    /// Distance threshold c.
    #[arg(long)]
    c: Option<f64>,
    /// Target prior belief q = Pr(D <= c).
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated cell edges, e.g. "-2,-1,0,1,2".
    #[arg(long, allow_hyphen_values = true)]
    edges: Option<String>,
    /// Atoms per process realization.
    #[arg(long)]
    n_atoms: Option<usize>,
    /// Lower end of the mass search bracket.
    #[arg(long)]
    alpha_lo: Option<f64>,
    /// Upper end of the mass search bracket.
    #[arg(long)]
    alpha_hi: Option<f64>,
    /// Stop when |Pr(D <= c) - q| falls below this.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Bisection step cap.
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args)]
struct GofArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV file with one numeric column.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Null distribution spec, e.g. "normal:0,1".
    #[arg(long)]
    null: Option<String>,
    /// Comma-separated cell edges.
    #[arg(long, allow_hyphen_values = true)]
    edges: Option<String>,
    /// Distance threshold c.
    #[arg(long)]
    c: Option<f64>,
    /// Calibrate the mass to prior belief q (conflicts with --alpha).
    #[arg(long)]
    q: Option<f64>,
    /// Fixed prior mass (conflicts with --q).
    #[arg(long)]
    alpha: Option<f64>,
    /// Skip the first data row as a header.
    #[arg(long)]
    header: bool,
    /// Atoms per process realization.
    #[arg(long)]
    n_atoms: Option<usize>,
    /// Calibration bracket, lower end.
    #[arg(long)]
    alpha_lo: Option<f64>,
    /// Calibration bracket, upper end.
    #[arg(long)]
    alpha_hi: Option<f64>,
    /// Replicates per calibration evaluation.
    #[arg(long)]
    cal_replicates: Option<usize>,
    /// Calibration stop tolerance on |Pr(D <= c) - q|.
    #[arg(long)]
    cal_tolerance: Option<f64>,
}

#[derive(Args)]
struct GofCompositeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV file with one nonnegative numeric column.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Parametric family; only "exp" (exponential with unknown rate) for now.
    #[arg(long)]
    family: Option<String>,
    /// Prior on the rate, e.g. "gamma:1.7,2550".
    #[arg(long)]
    prior: Option<String>,
    /// Number of equal-probability cells under the posterior-mean member.
    #[arg(long)]
    k: Option<usize>,
    /// Distance threshold c.
    #[arg(long)]
    c: Option<f64>,
    /// Calibrate the mass to prior belief q (conflicts with --alpha).
    #[arg(long)]
    q: Option<f64>,
    /// Fixed prior mass (conflicts with --q).
    #[arg(long)]
    alpha: Option<f64>,
    /// Rate-posterior draws scanned for the best-fitting member.
    #[arg(long)]
    m_theta: Option<usize>,
    /// Sample the rate posterior by random-walk Metropolis instead of the
    /// conjugate gamma update.
    #[arg(long)]
    mh: bool,
    /// Random-walk step size (default: a tenth of the prior mean).
    #[arg(long)]
    mh_step: Option<f64>,
    /// Random-walk burn-in sweeps.
    #[arg(long)]
    mh_burn: Option<usize>,
    /// Skip the first data row as a header.
    #[arg(long)]
    header: bool,
    /// Atoms per process realization.
    #[arg(long)]
    n_atoms: Option<usize>,
    /// Calibration bracket, lower end.
    #[arg(long)]
    alpha_lo: Option<f64>,
    /// Calibration bracket, upper end.
    #[arg(long)]
    alpha_hi: Option<f64>,
    /// Replicates per calibration evaluation.
    #[arg(long)]
    cal_replicates: Option<usize>,
    /// Calibration stop tolerance on |Pr(D <= c) - q|.
    #[arg(long)]
    cal_tolerance: Option<f64>,
}

#[derive(Args)]
struct IndepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV file with two numeric columns x,y.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Grid edges along x.
    #[arg(long, allow_hyphen_values = true)]
    x_edges: Option<String>,
    /// Grid edges along y.
    #[arg(long, allow_hyphen_values = true)]
    y_edges: Option<String>,
    /// Base joint measure spec, e.g. "bvnormal:0,0,10,3,2" (means, s11, s12, s22).
    #[arg(long)]
    base: Option<String>,
    /// Distance threshold c.
    #[arg(long)]
    c: Option<f64>,
    /// Calibrate the mass to prior belief q (conflicts with --alpha).
    #[arg(long)]
    q: Option<f64>,
    /// Fixed prior mass (conflicts with --q).
    #[arg(long)]
    alpha: Option<f64>,
    /// Skip the first data row as a header.
    #[arg(long)]
    header: bool,
    /// Atoms per process realization.
    #[arg(long)]
    n_atoms: Option<usize>,
    /// Calibration bracket, lower end.
    #[arg(long)]
    alpha_lo: Option<f64>,
    /// Calibration bracket, upper end.
    #[arg(long)]
    alpha_hi: Option<f64>,
    /// Replicates per calibration evaluation.
    #[arg(long)]
    cal_replicates: Option<usize>,
    /// Calibration stop tolerance on |Pr(D <= c) - q|.
    #[arg(long)]
    cal_tolerance: Option<f64>,
}

#[derive(Args)]
struct DpSampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Prior mass alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Base measure spec.
    #[arg(long)]
    base: Option<String>,
    /// Number of atoms in the realization.
    #[arg(long)]
    n_atoms: Option<usize>,
    /// Weight construction: "finite" (symmetric Dirichlet) or "decreasing"
    /// (sorted weights).
    #[arg(long)]
    repr: Option<String>,
    /// Output format: "csv" (default) or "json".
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct KlMomentsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Prior mass alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of atoms n.
    #[arg(long)]
    n: Option<usize>,
    /// Reference distribution F for the divergence (defaults to the base).
    #[arg(long)]
    f: Option<String>,
    /// Base measure the atoms are drawn from.
    #[arg(long)]
    base: Option<String>,
}

#[derive(Args)]
struct AsymptoticsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sample size of the conditioning data (0 = prior draws).
    #[arg(long)]
    m: Option<usize>,
    /// Prior mass alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated cell edges.
    #[arg(long, allow_hyphen_values = true)]
    edges: Option<String>,
    /// Base measure of the process.
    #[arg(long)]
    base: Option<String>,
    /// Data-generating distribution (defaults to the base).
    #[arg(long)]
    f: Option<String>,
    /// Realization form: "decreasing" atoms or "exact" cell-probability draws.
    #[arg(long)]
    repr: Option<String>,
    /// Atoms per realization when repr is "decreasing".
    #[arg(long)]
    n_atoms: Option<usize>,
}

#[derive(Args)]
struct Table1Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated masses alpha to tabulate.
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated thresholds c to tabulate.
    #[arg(long, allow_hyphen_values = true)]
    c_values: Option<String>,
    /// Comma-separated cell edges.
    #[arg(long, allow_hyphen_values = true)]
    edges: Option<String>,
    /// Base measure of the process.
    #[arg(long)]
    base: Option<String>,
    /// Atoms per process realization.
    #[arg(long)]
    n_atoms: Option<usize>,
    /// Output format: "csv" (default) or "json".
    #[arg(long)]
    format: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
