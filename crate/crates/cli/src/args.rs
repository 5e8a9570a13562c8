//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bachelier",
    version,
    about = "Pricing and term-structure engine for Bachelier's market model"
)]
pub struct Cli {
    /// Worker threads for Monte Carlo and simulation (default: all cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price a European payoff in closed form, by PDE or by Monte Carlo.
    Price(PriceArgs),
    /// Build or transform a term-structure surface (CSV `t,T,value`).
    #[command(subcommand)]
    Curve(CurveCommand),
    /// Forward price F = A - V, and the forward's value when a bond is given.
    Forward(ForwardArgs),
    /// Futures price and the futures-forward spread.
    Futures(FuturesArgs),
    /// Simulate asset paths (CSV `path,time,value[,integral]`).
    Simulate(SimulateArgs),
    /// Run the acceptance suite and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Pde,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DriftArg {
    /// Pricing PDE whose drift has no rate term.
    PaperEq7,
    /// Drift r, matching the closed-form call.
    RiskNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PayoffArg {
    Call,
    Put,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Physical,
    RiskNeutral,
}

/// Monte Carlo knobs shared by several commands.
#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Random seed; the BACHELIER_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 250)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    /// Model JSON file (default: the standard model A0 = 100, rho = 3, r = 2, v = 10).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "closed")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "call")]
    pub payoff: PayoffArg,
    /// Payoff JSON file, overriding --payoff and --strike.
    #[arg(long)]
    pub payoff_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    pub strike: f64,
    #[arg(long, default_value_t = 1.0)]
    pub maturity: f64,
    /// PDE drift and the matching Monte Carlo reading (pde and mc only).
    #[arg(long, value_enum, default_value = "paper-eq7")]
    pub drift_mode: DriftArg,
    /// Use the model's dividend rate D (pde and mc only).
    #[arg(long)]
    pub dividend: bool,
    #[command(flatten)]
    pub mc: McArgs,
    /// Antithetic path pairs (mc only).
    #[arg(long)]
    pub antithetic: bool,
    /// PDE space nodes.
    #[arg(long)]
    pub nx: Option<usize>,
    /// PDE time steps.
    #[arg(long)]
    pub nt: Option<usize>,
    /// PDE implicitness, 0.5 = Crank-Nicolson, 1 = fully implicit.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// The maturity grid of a surface: `n` uniform steps from 0 to `horizon`.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 5.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum CurveCommand {
    /// Hull-White bond surface B(t,T) = 1 - a(t,T) - c(t,T) r_t.
    Hw(HwCurveArgs),
    /// One BHJM path: the simulated loan-rate (or bond) surface.
    Bhjm(BhjmCurveArgs),
    /// One HJM path: the simulated forward-rate surface.
    Hjm(HjmCurveArgs),
    /// Convert a surface CSV: bonds to loan or forward rates, rates to bonds.
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Args)]
pub struct HwCurveArgs {
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 0.02)]
    pub v: f64,
    #[arg(long, default_value_t = 0.03, allow_negative_numbers = true)]
    pub r0: f64,
    /// Observation times, comma separated; each must be a grid node.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub times: Vec<f64>,
    /// Short rate at each observation time (needed when a time is positive).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub short_rates: Option<Vec<f64>>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BhjmOutput {
    Loan,
    Bond,
}

/// Dynamic-curve knobs shared by `bhjm` and `hjm`.
#[derive(Debug, Args)]
pub struct DynamicCurveArgs {
    /// Initial curve level at T = 0.
    #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
    pub level: f64,
    /// Initial curve slope in T.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub slope: f64,
    /// Maturity grid from 0 to `horizon` in `n` steps.
    #[arg(long, default_value_t = 2.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Simulate up to this time, a grid node (default: half the horizon).
    #[arg(long)]
    pub until: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Index of the emitted path.
    #[arg(long, default_value_t = 0)]
    pub path: usize,
}

#[derive(Debug, Args)]
pub struct BhjmCurveArgs {
    /// Proportional loan-rate volatility sigma.
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value = "risk-neutral")]
    pub measure: MeasureArg,
    /// Market price of loan-rate risk (physical measure only).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long = "emit", value_enum, default_value = "loan")]
    pub emit: BhjmOutput,
    #[command(flatten)]
    pub curve: DynamicCurveArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HjmCurveArgs {
    /// Constant forward-rate volatility.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[command(flatten)]
    pub curve: DynamicCurveArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BootstrapTarget {
    /// Loan rates from a linear bond surface.
    Loan,
    /// Forward rates from a bond surface.
    Forward,
    /// Bonds from a loan-rate or forward-rate surface.
    Bond,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    /// Surface CSV as written by the curve commands.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub to: BootstrapTarget,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    /// Asset price A_t.
    #[arg(long, allow_negative_numbers = true)]
    pub spot: f64,
    /// Value V_t of the claim paying A_T at T.
    #[arg(long, allow_negative_numbers = true)]
    pub value: f64,
    /// Valuation time s of an existing forward (with --bond and --rate-integral).
    #[arg(long, default_value_t = 0.0)]
    pub at: f64,
    /// Asset price at s.
    #[arg(long, allow_negative_numbers = true)]
    pub spot_at: Option<f64>,
    /// Bond price B(s,T).
    #[arg(long, allow_negative_numbers = true)]
    pub bond: Option<f64>,
    /// Expected rate integral E[int_s^T r du].
    #[arg(long, allow_negative_numbers = true)]
    pub rate_integral: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FuturesArgs {
    /// Asset price A_t.
    #[arg(long, allow_negative_numbers = true)]
    pub spot: f64,
    /// Rate integral int_t^T r du.
    #[arg(long, allow_negative_numbers = true)]
    pub rate_integral: f64,
    /// Physical expectation of A_T, to classify the market state.
    #[arg(long, allow_negative_numbers = true)]
    pub expected_terminal: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "risk-neutral")]
    pub measure: MeasureArg,
    #[arg(long, default_value_t = 1.0)]
    pub maturity: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub paths: usize,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Criterion number or a substring of its name.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    /// Print every individual check after the table.
    #[arg(long)]
    pub details: bool,
    /// Test hook: make the named criteria's tolerances unattainable.
    #[arg(long, hide = true)]
    pub inject_bad_tolerance: Option<String>,
}
