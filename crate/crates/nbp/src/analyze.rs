//! The `ingest` and `analyze` pipelines: load, clean, classify, bucket, run
//! the regression battery and curve statistics, then write every report.
//! Nothing is written unless every fatal stage succeeded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nbp_core::battery::{run_battery, BatteryOutput};
use nbp_core::ivcurve::{curve_series, WindowCurve};
use nbp_core::option_math::{classify_trades, ClassifiedTrade, Classifier, RvSchedule};
use nbp_core::pressure::{bucket_trades, Disaggregation, IntervalWidth};
use nbp_core::{BucketKey, CleaningReport, IntervalAggregate, SpotBar, TradeTick};

use crate::config::{ReportFormat, RunConfig};
use crate::error::{CliError, Stage};
use crate::ingest::{load_spot, load_trades, SpotReport};
use crate::report::{curve_csv, regression_tsv, series_csv, verdict_tsv, AnalysisReport, ReportedSpec, SCHEMA_VERSION};

const RV_WINDOW_DAYS: usize = 15;

pub struct Ingested {
    pub trades: Vec<TradeTick>,
    pub spot: Vec<SpotBar>,
    pub classified: Vec<ClassifiedTrade>,
    pub cleaning: CleaningReport,
    pub spot_report: SpotReport,
}

/// Loads both inputs and classifies the cleaned trades.
pub fn ingest_and_classify(config: &RunConfig) -> Result<Ingested, CliError> {
    let (trades_path, spot_path) = config.require_inputs()?;
    let parsed = load_trades(trades_path)?;
    let spot = load_spot(spot_path)?;
    let classifier = Classifier::new(config.sigma, config.rate, &spot.bars);
    let mut cleaning = parsed.report;
    let classified = classify_trades(&parsed.trades, &classifier, &mut cleaning);
    if classified.is_empty() {
        return Err(CliError::new(
            Stage::OptionMath,
            format!(
                "no trades left after classification ({} outside delta bands, {} without a volatility estimate)",
                cleaning.dropped_delta_bounds, cleaning.dropped_no_sigma
            ),
        ));
    }
    Ok(Ingested { trades: parsed.trades, spot: spot.bars, classified, cleaning, spot_report: spot.report })
}

/// Exact bucket aggregates as CSV; flows are integer multiples of 2^-20 USD.
pub fn buckets_csv(aggregates: &BTreeMap<BucketKey, IntervalAggregate>, width: IntervalWidth) -> String {
    let mut s = String::from("t,moneyness,type,maturity_bucket,tod_slot,buy_dw,sell_dw,buy_raw,sell_raw,iv_sum,trade_count\n");
    for (k, a) in aggregates {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            width.start_ms(k.interval),
            k.moneyness.label(),
            k.option_type.label(),
            k.maturity.label(),
            k.tod.label(),
            a.buy_dw.0,
            a.sell_dw.0,
            a.buy_raw.0,
            a.sell_raw.0,
            a.iv_sum,
            a.trade_count
        );
    }
    s
}

fn write_all(out: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::output(format!("{}: {e}", out.display())))?;
    files
        .iter()
        .map(|(name, content)| {
            let path = out.join(name);
            std::fs::write(&path, content).map_err(|e| CliError::output(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|mut s| {
        s.push('\n');
        s
    })
    .map_err(CliError::output)
}

/// Result of the ingest stage: cleaning counts and exact buckets.
pub struct IngestSummary {
    pub cleaning: CleaningReport,
    pub spot_report: SpotReport,
    pub buckets: String,
}

pub fn run_ingest(config: &RunConfig) -> Result<IngestSummary, CliError> {
    let ing = ingest_and_classify(config)?;
    let aggregates = bucket_trades(&ing.classified, config.interval, Disaggregation { by_maturity: true, by_tod: true });
    Ok(IngestSummary {
        cleaning: ing.cleaning,
        spot_report: ing.spot_report,
        buckets: buckets_csv(&aggregates, config.interval),
    })
}

pub fn cmd_ingest(config: &RunConfig) -> Result<i32, CliError> {
    let summary = run_ingest(config)?;
    let c = &summary.cleaning;
    println!(
        "trades: {} in, {} out (malformed {}, missing type {}, iv bounds {}, delta bounds {}, no sigma {})",
        c.total_in,
        c.total_out,
        c.dropped_malformed,
        c.dropped_missing_type,
        c.dropped_iv_bounds,
        c.dropped_delta_bounds,
        c.dropped_no_sigma
    );
    let sr = &summary.spot_report;
    println!("spot bars: {} in, {} out", sr.total_in, sr.total_out);
    if let Some(out) = &config.out {
        #[derive(serde::Serialize)]
        struct Cleaning<'a> {
            schema_version: u32,
            trades: &'a CleaningReport,
            spot: &'a SpotReport,
        }
        let cleaning = to_json(&Cleaning { schema_version: SCHEMA_VERSION, trades: c, spot: sr })?;
        write_all(out, &[("cleaning.json", cleaning), ("buckets.csv", summary.buckets)])?;
    }
    Ok(0)
}

pub struct Analysis {
    pub report: AnalysisReport,
    pub battery: BatteryOutput,
    pub curves: Vec<WindowCurve>,
}

/// Runs the full pipeline in memory.
pub fn run_analysis(config: &RunConfig) -> Result<Analysis, CliError> {
    let ing = ingest_and_classify(config)?;
    let battery_config = config.battery();
    let battery = run_battery(&ing.classified, &ing.spot, &battery_config);
    if battery.series.iter().all(|s| s.rows.is_empty()) {
        return Err(CliError::new(Stage::Pressure, "no intervals with trades in any maturity slice"));
    }
    let rv = RvSchedule::from_spot(&ing.spot, RV_WINDOW_DAYS, 365);
    let curves = curve_series(&ing.classified, config.curve_window, |d| rv.rv_on_day(d));

    let specs: Vec<ReportedSpec> = battery
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| ReportedSpec::from_outcome(o, i < battery.primary))
        .collect();
    let mut notices: Vec<String> = specs
        .iter()
        .filter(|s| s.insufficient_rows)
        .map(|s| format!("{}: {}", s.label, s.error.as_deref().unwrap_or("")))
        .collect();
    let skipped = curves.iter().filter(|c| c.stats.is_err()).count();
    if skipped > 0 {
        notices.push(format!("{skipped} curve windows skipped for lack of category 2, 3 or 4 trades"));
    }
    let (verdict, verdict_error) = match &battery.verdict {
        Ok(v) => (Some(v.clone()), None),
        Err(e) => {
            notices.push(format!("verdict: {e}"));
            (None, Some(e.to_string()))
        }
    };
    let report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        config_hash: config.hash(),
        config: config.canonical(),
        cleaning: ing.cleaning,
        spot: ing.spot_report,
        verdict_config: battery_config.verdict,
        specs,
        verdict,
        verdict_error,
        notices,
    };
    Ok(Analysis { report, battery, curves })
}

/// Files of a finished analysis, in write order.
pub fn render(analysis: &Analysis, config: &RunConfig) -> Result<Vec<(&'static str, String)>, CliError> {
    let mut files = Vec::new();
    let header = format!("# config_hash {}\n", analysis.report.config_hash);
    if config.wants(ReportFormat::Tsv) {
        files.push(("regressions.tsv", header.clone() + &regression_tsv(&analysis.report.specs)));
        let verdict = match (&analysis.report.verdict, &analysis.report.verdict_error) {
            (Some(v), _) => verdict_tsv(v),
            (None, e) => format!("hypothesis\toutcome\n# unavailable: {}\n", e.as_deref().unwrap_or("")),
        };
        files.push(("verdict.tsv", header.clone() + &verdict));
    }
    if config.wants(ReportFormat::Json) {
        files.push(("report.json", to_json(&analysis.report)?));
    }
    if config.wants(ReportFormat::Csv) {
        files.push(("series.csv", series_csv(&analysis.battery.series)));
        files.push(("curve.csv", curve_csv(&analysis.curves)));
    }
    Ok(files)
}

/// Specs that failed for reasons other than too few rows.
pub fn hard_failures(report: &AnalysisReport) -> Vec<&ReportedSpec> {
    report.specs.iter().filter(|s| s.result.is_none() && !s.insufficient_rows).collect()
}

pub fn cmd_analyze(config: &RunConfig) -> Result<i32, CliError> {
    let out = config.out.clone().ok_or_else(|| CliError::new(Stage::Config, "out is required"))?;
    let analysis = run_analysis(config)?;
    let files = render(&analysis, config)?;
    write_all(&out, &files)?;
    for notice in &analysis.report.notices {
        eprintln!("notice: {notice}");
    }
    if let Some(v) = &analysis.report.verdict {
        print!("{}", verdict_tsv(v));
    }
    let failures = hard_failures(&analysis.report);
    if failures.is_empty() {
        return Ok(0);
    }
    for f in &failures {
        eprintln!("regression error: {}: {}", f.label, f.error.as_deref().unwrap_or(""));
    }
    Err(CliError::new(Stage::Regress, format!("{} specifications failed", failures.len())))
}
