//! The `simulate` command: regime configuration files and dataset writers.

use std::fs::File;
use std::path::{Path, PathBuf};

use nbp_core::synth::{gen_dataset, FieldIssue, Regime, RegimeConfig, SyntheticDataset};

use crate::config::parse_key_values;
use crate::error::{CliError, Stage};
use crate::ingest::{write_spot_csv, write_trades, TradeFormat};

fn issue(field: &'static str, message: impl Into<String>) -> FieldIssue {
    FieldIssue { field, message: message.into() }
}

fn number<T: std::str::FromStr>(field: &'static str, value: &str, issues: &mut Vec<FieldIssue>) -> Option<T> {
    let parsed = value.parse().ok();
    if parsed.is_none() {
        issues.push(issue(field, format!("cannot parse `{value}`")));
    }
    parsed
}

/// Reads regime settings over the defaults. Every unknown key, unparsable
/// value and violated constraint is reported, one entry per field.
pub fn regime_config_from_pairs(pairs: &[(String, String)]) -> Result<RegimeConfig, Vec<FieldIssue>> {
    let mut c = RegimeConfig::default();
    let mut issues = Vec::new();
    for (key, value) in pairs {
        let v = value.as_str();
        let i = &mut issues;
        macro_rules! set {
            ($field:literal, $target:expr) => {
                if let Some(x) = number($field, v, i) {
                    $target = x;
                }
            };
        }
        match key.as_str() {
            "regime" => match Regime::parse(v) {
                Some(r) => c.regime = r,
                None => i.push(issue("regime", format!("unknown regime `{v}`"))),
            },
            "horizon_hours" => set!("horizon_hours", c.horizon_hours),
            "seed" => set!("seed", c.seed),
            "start_ms" => set!("start_ms", c.start_ms),
            "warmup_days" => set!("warmup_days", c.warmup_days),
            "start_price" => set!("start_price", c.underlying.start_price),
            "drift" => set!("drift", c.underlying.drift),
            "diffusion_vol" => set!("diffusion_vol", c.underlying.diffusion_vol),
            "jump_intensity" => set!("jump_intensity", c.underlying.jump_intensity),
            "jump_mean" => set!("jump_mean", c.underlying.jump_mean),
            "jump_dispersion" => set!("jump_dispersion", c.underlying.jump_dispersion),
            "volume_usd" => set!("volume_usd", c.underlying.volume_usd),
            "vol_shock" => set!("vol_shock", c.underlying.vol_shock),
            "drift_shock" => set!("drift_shock", c.underlying.drift_shock),
            "event_hours" => set!("event_hours", c.underlying.event_hours),
            "kappa" => set!("kappa", c.mm.kappa),
            "impact" => set!("impact", c.mm.impact),
            "base_iv" => set!("base_iv", c.mm.base_iv),
            "common_noise" => set!("common_noise", c.mm.common_noise),
            "cell_noise" => set!("cell_noise", c.mm.cell_noise),
            "informed_intensity" => set!("informed_intensity", c.flow.informed_intensity),
            "uninformed_intensity" => set!("uninformed_intensity", c.flow.uninformed_intensity),
            "signal_lead_hours" => set!("signal_lead_hours", c.flow.signal_lead_hours),
            "informed_size_usd" => set!("informed_size_usd", c.flow.informed_size_usd),
            "uninformed_size" => set!("uninformed_size", c.flow.uninformed_size),
            _ => i.push(issue("config", format!("unknown key `{key}`"))),
        }
    }
    if let Err(more) = c.validate() {
        issues.extend(more);
    }
    if issues.is_empty() {
        Ok(c)
    } else {
        Err(issues)
    }
}

fn schema_error(issues: &[FieldIssue]) -> CliError {
    let lines: Vec<String> = issues.iter().map(ToString::to_string).collect();
    CliError::new(Stage::Config, format!("invalid regime config:\n  {}", lines.join("\n  ")))
}

pub struct SimulateOptions {
    pub config_path: Option<PathBuf>,
    pub regime: Option<Regime>,
    pub seed: Option<u64>,
    pub horizon_hours: Option<i64>,
    pub format: TradeFormat,
    pub out: PathBuf,
}

/// Paths of the files written by [`write_dataset`].
pub struct DatasetFiles {
    pub trades: PathBuf,
    pub spot: PathBuf,
    pub truth: PathBuf,
}

pub fn write_dataset(data: &SyntheticDataset, out: &Path, format: TradeFormat) -> Result<DatasetFiles, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::output(format!("{}: {e}", out.display())))?;
    let trades = out.join(match format {
        TradeFormat::Csv => "trades.csv",
        TradeFormat::Jsonl => "trades.jsonl",
    });
    let spot = out.join("spot.csv");
    let truth = out.join("truth.json");
    let create = |p: &Path| File::create(p).map_err(|e| CliError::output(format!("{}: {e}", p.display())));
    write_trades(create(&trades)?, &data.trades, format).map_err(CliError::output)?;
    write_spot_csv(create(&spot)?, &data.spot).map_err(CliError::output)?;
    let mut json = serde_json::to_string_pretty(&data.truth).map_err(CliError::output)?;
    json.push('\n');
    std::fs::write(&truth, json).map_err(|e| CliError::output(format!("{}: {e}", truth.display())))?;
    Ok(DatasetFiles { trades, spot, truth })
}

pub fn cmd_simulate(options: &SimulateOptions) -> Result<i32, CliError> {
    let mut pairs = match &options.config_path {
        Some(path) => parse_key_values(
            &std::fs::read_to_string(path)
                .map_err(|e| CliError::new(Stage::Config, format!("{}: {e}", path.display())))?,
        )?,
        None => Vec::new(),
    };
    if let Some(r) = options.regime {
        pairs.push(("regime".into(), r.label().into()));
    }
    if let Some(s) = options.seed {
        pairs.push(("seed".into(), s.to_string()));
    }
    if let Some(h) = options.horizon_hours {
        pairs.push(("horizon_hours".into(), h.to_string()));
    }
    let config = regime_config_from_pairs(&pairs).map_err(|issues| schema_error(&issues))?;
    let data = gen_dataset(&config).map_err(|issues| CliError::new(Stage::Synth, schema_error(&issues).message))?;
    let files = write_dataset(&data, &options.out, options.format)?;
    println!(
        "{} trades, {} spot bars ({} regime, seed {}) -> {}",
        data.trades.len(),
        data.spot.len(),
        config.regime.label(),
        config.seed,
        files.trades.parent().unwrap_or(&options.out).display()
    );
    Ok(0)
}
