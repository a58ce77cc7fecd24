use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nbp::analyze::{cmd_analyze, cmd_ingest};
use nbp::config::{read_key_values, RunConfig};
use nbp::error::{CliError, Stage};
use nbp::ingest::TradeFormat;
use nbp::report::{regression_tsv, verdict_tsv, AnalysisReport};
use nbp::simulate::{cmd_simulate, SimulateOptions};
use nbp::validate::cmd_validate;
use nbp_core::synth::Regime;

#[derive(Parser)]
#[command(name = "nbp", version, about = "Net buying pressure analytics for crypto option trades")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, clean, classify and bucket the inputs.
    Ingest(RunArgs),
    /// Run the regression battery, verdicts and curve statistics.
    Analyze(RunArgs),
    /// Generate a synthetic dataset with a planted regime.
    Simulate(SimulateArgs),
    /// Measure planted-regime recovery over many seeds.
    Validate(ValidateArgs),
    /// Re-render tables from a stored JSON report and re-check its verdict.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trades: Option<PathBuf>,
    #[arg(long)]
    spot: Option<PathBuf>,
    /// 1h, 4h, 8h or 24h.
    #[arg(long)]
    interval: Option<String>,
    /// rv15, rv30 or trade_iv.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    rate: Option<f64>,
    /// percent or decimal.
    #[arg(long)]
    scale: Option<String>,
    /// classical or robust.
    #[arg(long)]
    se: Option<String>,
    /// Filters such as `year=2019,2020 tod=asia maturity=short,all`.
    #[arg(long, num_args = 1..)]
    filters: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Args)]
struct SimulateArgs {
    /// Regime config file (`key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// null_noise, limits_to_arbitrage, volatility_learning,
    /// directional_learning or mixed.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<i64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    #[arg(long, default_value_t = 2000)]
    horizon: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// `report.json` written by `analyze`, or its directory.
    #[arg(long)]
    from: PathBuf,
}

fn run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        config.apply(&read_key_values(path)?)?;
    }
    let flags = [
        ("trades", args.trades.as_ref().map(|p| p.display().to_string())),
        ("spot", args.spot.as_ref().map(|p| p.display().to_string())),
        ("interval", args.interval.clone()),
        ("sigma", args.sigma.clone()),
        ("rate", args.rate.map(|r| r.to_string())),
        ("scale", args.scale.clone()),
        ("se", args.se.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    config.apply_filters(&args.filters)?;
    Ok(config)
}

fn cmd_report(args: &ReportArgs) -> Result<i32, CliError> {
    let path = if args.from.is_dir() { args.from.join("report.json") } else { args.from.clone() };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::new(Stage::Config, format!("{}: {e}", path.display())))?;
    let report: AnalysisReport = serde_json::from_str(&text)
        .map_err(|e| CliError::new(Stage::Config, format!("{}: {e}", path.display())))?;
    print!("{}", regression_tsv(&report.specs));
    match (report.reevaluate(), &report.verdict) {
        (Ok(v), Some(stored)) if &v == stored => {
            print!("{}", verdict_tsv(&v));
            Ok(0)
        }
        (Ok(_), _) => Err(CliError::new(Stage::Regress, "re-evaluated verdict differs from the stored one")),
        (Err(e), None) => {
            eprintln!("notice: verdict: {e}");
            Ok(0)
        }
        (Err(e), Some(_)) => Err(CliError::new(Stage::Regress, e.to_string())),
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(&run_config(&args)?),
        Command::Analyze(args) => cmd_analyze(&run_config(&args)?),
        Command::Simulate(args) => {
            let regime = args
                .regime
                .as_deref()
                .map(|r| Regime::parse(r).ok_or_else(|| CliError::new(Stage::Usage, format!("unknown regime `{r}`"))))
                .transpose()?;
            cmd_simulate(&SimulateOptions {
                config_path: args.config,
                regime,
                seed: args.seed,
                horizon_hours: args.horizon,
                format: match args.format {
                    FormatArg::Csv => TradeFormat::Csv,
                    FormatArg::Jsonl => TradeFormat::Jsonl,
                },
                out: args.out,
            })
        }
        Command::Validate(args) => cmd_validate(args.seeds, args.horizon, args.out.as_deref()),
        Command::Report(args) => cmd_report(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
