//! Acceptance runner: one PASS/FAIL line per criterion with its runtime.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs::File;
use std::time::{Duration, Instant};

use common::suites;
use nbp::analyze::run_ingest;
use nbp::config::RunConfig;
use nbp::ingest::{write_spot_csv, write_trades_csv};
use nbp::validate::recovery;
use nbp_core::synth::{gen_dataset, Regime, RegimeConfig};

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Result<String, String>,
}

fn regime_recovery() -> Result<String, String> {
    let summary = recovery(100, 2000);
    let mut parts = Vec::new();
    for c in &summary.checks {
        parts.push(format!("{} {:.2}{}{:.2}", c.name, c.rate, if c.at_least { ">=" } else { "<=" }, c.threshold));
    }
    let failed: Vec<&str> = summary.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(parts.join(", "))
    } else {
        Err(format!("failed {}: {}", failed.join(", "), parts.join(", ")))
    }
}

const TARGET_TICKS: usize = 3_400_000;

fn throughput() -> Result<String, String> {
    let mut config = RegimeConfig { horizon_hours: 2000, ..RegimeConfig::with_regime(Regime::Mixed, 17) };
    config.flow.uninformed_intensity = 172.0;
    let data = gen_dataset(&config).map_err(|e| format!("{e:?}"))?;
    if data.trades.len() < TARGET_TICKS {
        return Err(format!("generated only {} ticks", data.trades.len()));
    }
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let trades = dir.path().join("trades.csv");
    let spot = dir.path().join("spot.csv");
    write_trades_csv(File::create(&trades).map_err(|e| e.to_string())?, &data.trades).map_err(|e| e.to_string())?;
    write_spot_csv(File::create(&spot).map_err(|e| e.to_string())?, &data.spot).map_err(|e| e.to_string())?;
    let run = RunConfig { trades: Some(trades), spot: Some(spot), ..RunConfig::default() };

    let mut outputs = Vec::new();
    let mut times = Vec::new();
    for _ in 0..2 {
        let start = Instant::now();
        let summary = run_ingest(&run).map_err(|e| e.to_string())?;
        times.push(start.elapsed());
        let cleaning = serde_json::to_string(&summary.cleaning).map_err(|e| e.to_string())?;
        outputs.push((cleaning, summary.buckets));
    }
    let slowest = times.iter().max().copied().unwrap_or_default();
    if slowest >= Duration::from_secs(30) {
        return Err(format!("ingest took {:.1}s", slowest.as_secs_f64()));
    }
    if outputs[0] != outputs[1] {
        return Err("outputs differ between runs".into());
    }
    Ok(format!(
        "{} ticks ingested+classified+bucketed in {:.1}s / {:.1}s, {} bucket bytes identical",
        data.trades.len(),
        times[0].as_secs_f64(),
        times[1].as_secs_f64(),
        outputs[0].1.len()
    ))
}

fn main() {
    let criteria = [
        Criterion { name: "option-math oracles", budget: Duration::from_secs(5), run: || suites::option_math_suite(1) },
        Criterion { name: "pressure algebra", budget: Duration::from_secs(10), run: || suites::pressure_algebra_suite(1, 10_000) },
        Criterion { name: "OLS oracle", budget: Duration::from_secs(10), run: || suites::ols_oracle_suite(1, 200) },
        Criterion { name: "regime recovery", budget: Duration::from_secs(300), run: regime_recovery },
        Criterion { name: "verdict-rule fidelity", budget: Duration::from_secs(1), run: suites::verdict_fidelity_suite },
        Criterion { name: "IV-curve signs", budget: Duration::from_secs(1), run: suites::ivcurve_sign_suite },
        Criterion { name: "throughput", budget: Duration::from_secs(600), run: throughput },
    ];
    let mut failures = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed < c.budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("over budget {:.0}s: {d}", c.budget.as_secs_f64())),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("{status} criterion {}: {} [{:.2}s] {detail}", i + 1, c.name, elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
