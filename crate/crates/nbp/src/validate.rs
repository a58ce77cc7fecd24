//! The `validate` command: planted-regime recovery over many seeds.

use std::path::Path;

use nbp_core::battery::{run_battery, BatteryConfig};
use nbp_core::option_math::{classify_trades, Classifier};
use nbp_core::synth::{gen_dataset, Regime, RegimeConfig};
use nbp_core::{CleaningReport, HypothesisVerdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};
use crate::report::SCHEMA_VERSION;

const STRICT_LEVEL: f64 = 0.01;

/// Verdict flags of one simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub limits_to_arbitrage: bool,
    pub volatility_learning: bool,
    pub directional_learning: bool,
    pub directional_positive: bool,
    /// Some ATM lag coefficient is negative with p < 0.01.
    pub lag_negative_strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRecovery {
    pub regime: Regime,
    pub seeds: usize,
    pub failed_runs: usize,
    pub limits_to_arbitrage: f64,
    pub volatility_learning: f64,
    pub directional_learning: f64,
    pub directional_positive: f64,
    pub lag_negative_strict: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub rate: f64,
    /// Lower bound for recovery checks, upper bound for false positives.
    pub threshold: f64,
    pub at_least: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub schema_version: u32,
    pub seeds: usize,
    pub horizon_hours: i64,
    pub regimes: Vec<RegimeRecovery>,
    pub checks: Vec<Check>,
}

impl RecoverySummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Generates, classifies and analyzes one dataset in memory.
pub fn run_seed(regime: Regime, seed: u64, horizon_hours: i64) -> Result<SeedOutcome, String> {
    let config = RegimeConfig { horizon_hours, ..RegimeConfig::with_regime(regime, seed) };
    let data = gen_dataset(&config).map_err(|issues| format!("{issues:?}"))?;
    let classifier = Classifier::new(data.truth.sigma_source, 0.0, &data.spot);
    let mut report = CleaningReport { total_in: data.trades.len(), total_out: data.trades.len(), ..Default::default() };
    let classified = classify_trades(&data.trades, &classifier, &mut report);
    let output = run_battery(&classified, &data.spot, &BatteryConfig::verdict_only());
    let verdict: HypothesisVerdict = output.verdict.map_err(|e| e.to_string())?;
    Ok(SeedOutcome {
        seed,
        limits_to_arbitrage: verdict.limits_to_arbitrage.is_supported(),
        volatility_learning: verdict.volatility_learning.is_supported(),
        directional_learning: verdict.directional_learning.is_supported(),
        directional_positive: verdict.directional_positive == Some(true),
        lag_negative_strict: verdict.lag_evidence.iter().any(|e| e.estimate < 0.0 && e.p_value < STRICT_LEVEL),
    })
}

fn rate(outcomes: &[SeedOutcome], seeds: usize, f: impl Fn(&SeedOutcome) -> bool) -> f64 {
    outcomes.iter().filter(|o| f(o)).count() as f64 / seeds as f64
}

pub fn regime_recovery(regime: Regime, seeds: usize, horizon_hours: i64) -> RegimeRecovery {
    let results: Vec<Result<SeedOutcome, String>> =
        (0..seeds as u64).into_par_iter().map(|seed| run_seed(regime, seed, horizon_hours)).collect();
    let outcomes: Vec<SeedOutcome> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    RegimeRecovery {
        regime,
        seeds,
        failed_runs: seeds - outcomes.len(),
        limits_to_arbitrage: rate(&outcomes, seeds, |o| o.limits_to_arbitrage),
        volatility_learning: rate(&outcomes, seeds, |o| o.volatility_learning),
        directional_learning: rate(&outcomes, seeds, |o| o.directional_learning),
        directional_positive: rate(&outcomes, seeds, |o| o.directional_learning && o.directional_positive),
        lag_negative_strict: rate(&outcomes, seeds, |o| o.lag_negative_strict),
    }
}

fn check(name: &str, rate: f64, threshold: f64, at_least: bool) -> Check {
    let pass = if at_least { rate >= threshold } else { rate <= threshold };
    Check { name: name.to_string(), rate, threshold, at_least, pass }
}

/// Recovery rates for the four pure regimes plus `Mixed`, with the pass/fail
/// checks: limits to arbitrage ≥ 0.95, each learning channel ≥ 0.90 (with
/// the planted positive sign for the directional one), and null false
/// positives ≤ 0.10 per hypothesis.
pub fn recovery(seeds: usize, horizon_hours: i64) -> RecoverySummary {
    let regimes: Vec<RegimeRecovery> =
        Regime::ALL.iter().map(|&r| regime_recovery(r, seeds, horizon_hours)).collect();
    let get = |r: Regime| regimes.iter().find(|x| x.regime == r).expect("every regime runs");
    let null = get(Regime::NullNoise);
    let checks = vec![
        check("limits_to_arbitrage recovery", get(Regime::LimitsToArbitrage).limits_to_arbitrage, 0.95, true),
        check("volatility_learning recovery", get(Regime::VolatilityLearning).volatility_learning, 0.90, true),
        check("directional_learning recovery (positive sign)", get(Regime::DirectionalLearning).directional_positive, 0.90, true),
        check("null false positive: limits_to_arbitrage", null.limits_to_arbitrage, 0.10, false),
        check("null false positive: volatility_learning", null.volatility_learning, 0.10, false),
        check("null false positive: directional_learning", null.directional_learning, 0.10, false),
    ];
    RecoverySummary { schema_version: SCHEMA_VERSION, seeds, horizon_hours, regimes, checks }
}

pub fn cmd_validate(seeds: usize, horizon_hours: i64, out: Option<&Path>) -> Result<i32, CliError> {
    if seeds == 0 {
        return Err(CliError::new(Stage::Usage, "--seeds must be at least 1"));
    }
    if horizon_hours < 100 {
        return Err(CliError::new(Stage::Usage, "--horizon must be at least 100 hours"));
    }
    let summary = recovery(seeds, horizon_hours);
    println!("regime\tseeds\tfailed\tlta\tvol\tdir\tdir_positive");
    for r in &summary.regimes {
        println!(
            "{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
            r.regime.label(),
            r.seeds,
            r.failed_runs,
            r.limits_to_arbitrage,
            r.volatility_learning,
            r.directional_learning,
            r.directional_positive
        );
    }
    for c in &summary.checks {
        let op = if c.at_least { ">=" } else { "<=" };
        println!("{} {}: {:.2} {op} {:.2}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.rate, c.threshold);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::output(format!("{}: {e}", dir.display())))?;
        let path = dir.join("recovery.json");
        let mut json = serde_json::to_string_pretty(&summary).map_err(CliError::output)?;
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| CliError::output(format!("{}: {e}", path.display())))?;
    }
    Ok(if summary.passed() { 0 } else { 1 })
}
