//! The full regression battery over one dataset: series construction per
//! maturity slice, every specification for every sample filter, and the
//! verdict over the primary slice.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::option_math::{ClassifiedTrade, Moneyness};
use crate::pressure::{
    bucket_trades, spot_series, Disaggregation, IntervalWidth, IvScale, MaturityBucket, PressureSeries,
    SeriesOptions, SpotPoint, TodSlot,
};
use crate::regress::{
    evaluate_verdict, run_bollen_atm, run_bollen_k, run_chen, run_predictive, Horizon, HypothesisVerdict,
    PredictiveDriver, PredictiveTarget, RegressError, RegressionResult, RegressionSpec, SampleFilter,
    StdErrorKind, VerdictConfig, VerdictInputs,
};
use crate::tick::{OptionType, SpotBar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub width: IntervalWidth,
    pub iv_scale: IvScale,
    pub se_kind: StdErrorKind,
    /// Maturity slices; the first one is the primary slice.
    pub maturities: Vec<MaturityBucket>,
    /// Inclusive year ranges; `None` is the full sample.
    pub years: Vec<Option<(i32, i32)>>,
    pub tods: Vec<TodSlot>,
    pub moneyness: Vec<Moneyness>,
    pub types: Vec<OptionType>,
    pub predictive: bool,
    pub spillover: bool,
    pub verdict: VerdictConfig,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            width: IntervalWidth::HOUR,
            iv_scale: IvScale::Percent,
            se_kind: StdErrorKind::Classical,
            maturities: alloc::vec![MaturityBucket::All],
            years: alloc::vec![None],
            tods: alloc::vec![TodSlot::All],
            moneyness: alloc::vec![Moneyness::Dotm, Moneyness::Otm, Moneyness::Atm],
            types: OptionType::TRADED.to_vec(),
            predictive: true,
            spillover: true,
            verdict: VerdictConfig::default(),
        }
    }
}

impl BatteryConfig {
    /// Only the specifications the verdict reads, on the full sample.
    pub fn verdict_only() -> Self {
        BatteryConfig { predictive: false, spillover: false, ..BatteryConfig::default() }
    }

    fn disaggregation(&self) -> Disaggregation {
        Disaggregation {
            by_maturity: self.maturities.iter().any(|m| *m != MaturityBucket::All),
            by_tod: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecOutcome {
    pub spec: RegressionSpec,
    pub result: Result<RegressionResult, RegressError>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryOutput {
    pub series: Vec<PressureSeries>,
    pub outcomes: Vec<SpecOutcome>,
    /// Leading outcomes belonging to the primary combination.
    pub primary: usize,
    pub verdict: Result<HypothesisVerdict, RegressError>,
}

pub fn build_series(trades: &[ClassifiedTrade], spot: &[SpotBar], config: &BatteryConfig) -> Vec<PressureSeries> {
    let aggregates = bucket_trades(trades, config.width, config.disaggregation());
    let spot_points: Vec<SpotPoint> = spot_series(spot, config.width);
    config
        .maturities
        .iter()
        .map(|&maturity| {
            let options = SeriesOptions { width: config.width, maturity, tod: TodSlot::All, iv_scale: config.iv_scale };
            PressureSeries::build(&aggregates, &spot_points, options)
        })
        .collect()
}

fn classified_pressure_bands(config: &BatteryConfig) -> impl Iterator<Item = Moneyness> + '_ {
    [Moneyness::Otm, Moneyness::Dotm].into_iter().filter(|k| config.moneyness.contains(k))
}

/// Runs every specification on one series for one sample filter.
pub fn run_specs(series: &PressureSeries, filter: SampleFilter, config: &BatteryConfig) -> Vec<SpecOutcome> {
    let se = config.se_kind;
    let mut out = Vec::new();
    let mut push = |(spec, result): (RegressionSpec, Result<RegressionResult, RegressError>)| {
        out.push(SpecOutcome { spec, result })
    };
    if config.predictive {
        let width = series.options.width.hours();
        for horizon in Horizon::ALL.into_iter().filter(|h| h.hours() % width == 0) {
            for target in PredictiveTarget::ALL {
                for driver in PredictiveDriver::ALL {
                    push(run_predictive(series, horizon, target, driver, filter, se));
                }
            }
        }
    }
    if config.moneyness.contains(&Moneyness::Atm) {
        for &j in &config.types {
            push(run_bollen_atm(series, j, filter, se));
        }
    }
    if config.spillover {
        for k in classified_pressure_bands(config) {
            for &j in &config.types {
                for i in OptionType::TRADED {
                    push(run_bollen_k(series, k, j, i, filter, se));
                }
            }
        }
    }
    for k in [Moneyness::Atm, Moneyness::Otm, Moneyness::Dotm] {
        if !config.moneyness.contains(&k) {
            continue;
        }
        for &j in &config.types {
            push(run_chen(series, k, j, filter, se));
        }
    }
    out
}

/// Verdict over the successful ATM and decomposition fits of `outcomes`.
pub fn verdict_of(outcomes: &[SpecOutcome], config: &VerdictConfig) -> Result<HypothesisVerdict, RegressError> {
    let collect = |name| {
        outcomes
            .iter()
            .filter(|o| o.spec.name == name)
            .filter_map(|o| o.result.as_ref().ok().map(|r| (o.spec.clone(), r.clone())))
            .collect::<Vec<_>>()
    };
    let bollen_atm = collect(crate::regress::SpecName::BollenAtm);
    let bollen_k = collect(crate::regress::SpecName::BollenK);
    let chen = collect(crate::regress::SpecName::ChenDecomposition);
    evaluate_verdict(&VerdictInputs { bollen_atm: &bollen_atm, bollen_k: &bollen_k, chen: &chen }, config)
}

/// Series for every maturity slice, specs for every (slice, years, slot)
/// combination in that order, and the verdict of the first combination.
pub fn run_battery(trades: &[ClassifiedTrade], spot: &[SpotBar], config: &BatteryConfig) -> BatteryOutput {
    let series = build_series(trades, spot, config);
    let mut outcomes = Vec::new();
    let mut verdict = None;
    let mut primary = 0;
    for s in &series {
        for &years in &config.years {
            for &tod in &config.tods {
                let specs = run_specs(s, SampleFilter { years, tod }, config);
                if verdict.is_none() {
                    verdict = Some(verdict_of(&specs, &config.verdict));
                    primary = specs.len();
                }
                outcomes.extend(specs);
            }
        }
    }
    let verdict = verdict.unwrap_or(Err(RegressError::MissingInputs(alloc::vec!["bollen_atm", "chen"])));
    BatteryOutput { series, outcomes, primary, verdict }
}
