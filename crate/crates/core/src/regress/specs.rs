//! The regression specifications run over a [`PressureSeries`]:
//!
//! * predictive: `x_t = γ0 + γ1 x_{t-1} + γ2 y_{t-1}` at 1h / 1d / 5d,
//! * pressure test for ATM options: `Δσ^ATM_j` on `r, v, A^ATM_C, A^ATM_P`
//!   and the lagged change,
//! * pressure test for OTM/DOTM with ATM spillover: `Δσ^k_j` on
//!   `r, v, A^k_j, A^ATM_i` and the lag,
//! * decomposition test: `Δσ^k_j` on `r, v, V^k, D^k_j` and the lag.
//!
//! Pressures and spot volume enter in USD millions. Rows with any missing
//! value are deleted listwise.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::ols::{ols_fit, Design, RegressionResult, StdErrorKind};
use super::{RegressError, Result};
use crate::option_math::Moneyness;
use crate::pressure::{IntervalRow, MaturityBucket, PressureSeries, TodSlot};
use crate::tick::OptionType;
use crate::time::year_of;

const MILLION: f64 = 1e6;
const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecName {
    Predictive,
    BollenAtm,
    BollenK,
    ChenDecomposition,
}

/// Sample restriction applied to the dependent observation's interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFilter {
    /// Inclusive UTC calendar-year range.
    pub years: Option<(i32, i32)>,
    pub tod: TodSlot,
}

impl Default for SampleFilter {
    fn default() -> Self {
        SampleFilter { years: None, tod: TodSlot::All }
    }
}

impl SampleFilter {
    fn admits(&self, start_ms: i64) -> bool {
        if let Some((lo, hi)) = self.years {
            let y = year_of(start_ms);
            if y < lo || y > hi {
                return false;
            }
        }
        self.tod.contains(start_ms)
    }
}

/// Identity of one fitted regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub name: SpecName,
    pub dependent: String,
    pub regressors: Vec<String>,
    pub filter: SampleFilter,
    pub maturity: MaturityBucket,
    pub moneyness: Option<Moneyness>,
    pub option_type: Option<OptionType>,
    /// ATM pressure type driving the spillover term.
    pub atm_driver: Option<OptionType>,
    pub horizon_hours: Option<i64>,
}

impl RegressionSpec {
    fn new(name: SpecName, series: &PressureSeries, filter: SampleFilter, dependent: String, regressors: &[String]) -> Self {
        RegressionSpec {
            name,
            dependent,
            regressors: regressors.to_vec(),
            filter,
            maturity: series.options.maturity,
            moneyness: None,
            option_type: None,
            atm_driver: None,
            horizon_hours: None,
        }
    }

    /// Short stable identifier, e.g. `chen/OTM/call/all/all`.
    pub fn label(&self) -> String {
        let name = match self.name {
            SpecName::Predictive => "predictive",
            SpecName::BollenAtm => "bollen_atm",
            SpecName::BollenK => "bollen_k",
            SpecName::ChenDecomposition => "chen",
        };
        let mut parts: Vec<String> = alloc::vec![name.to_string()];
        if let Some(h) = self.horizon_hours {
            parts.push(format!("{h}h"));
            parts.push(self.dependent.clone());
            parts.push(self.regressors[1].clone());
        }
        if let Some(m) = self.moneyness {
            parts.push(m.label().to_string());
        }
        if let Some(t) = self.option_type {
            parts.push(t.label().to_string());
        }
        if let Some(i) = self.atm_driver {
            parts.push(format!("atm_{}", i.label()));
        }
        parts.push(self.maturity.label().to_string());
        parts.push(self.filter.tod.label().to_string());
        if let Some((lo, hi)) = self.filter.years {
            parts.push(if lo == hi { format!("{lo}") } else { format!("{lo}-{hi}") });
        }
        parts.join("/")
    }
}

fn delta_iv(row: &IntervalRow, k: Moneyness, j: OptionType) -> Option<f64> {
    row.category(k)?.delta_iv[j.index()]
}

fn pressure_m(row: &IntervalRow, k: Moneyness, j: OptionType) -> Option<f64> {
    Some(row.category(k)?.a_usd(j) / MILLION)
}

/// Fits `y_t` on `[1, r_t, v_t, x3_t, x4_t, y_{t-1}]` where `y` is the
/// IV change of `(k, j)`.
fn fit_pressure_spec(
    series: &PressureSeries,
    filter: &SampleFilter,
    k: Moneyness,
    j: OptionType,
    names: [&str; 2],
    se_kind: StdErrorKind,
    x3: impl Fn(&IntervalRow) -> Option<f64>,
    x4: impl Fn(&IntervalRow) -> Option<f64>,
) -> Result<RegressionResult> {
    let lag_name = format!("lag_dsigma_{}_{}", k.label(), j.label());
    let mut design = Design::new(
        ["const", "r", "v", names[0], names[1], lag_name.as_str()].iter().map(|s| s.to_string()).collect(),
        series.rows.len(),
    );
    let mut y = Vec::with_capacity(series.rows.len());
    for pair in series.rows.windows(2) {
        let (prev, row) = (&pair[0], &pair[1]);
        if !filter.admits(series.interval_start_ms(row.interval)) {
            continue;
        }
        let values = (|| {
            Some((
                delta_iv(row, k, j)?,
                [1.0, row.r?, row.v? / MILLION, x3(row)?, x4(row)?, delta_iv(prev, k, j)?],
            ))
        })();
        if let Some((dep, regs)) = values {
            y.push(dep);
            design.push_row(&regs);
        }
    }
    ols_fit(&design, &y, se_kind)
}

fn pressure_regressors(dep: &str, names: [&str; 2], k: Moneyness, j: OptionType) -> Vec<String> {
    ["r", "v", names[0], names[1]]
        .iter()
        .map(|s| s.to_string())
        .chain(core::iter::once(format!("lag_{dep}_{}_{}", k.label(), j.label())))
        .collect()
}

/// ATM test for option type `j`: α3 loads on ATM call pressure, α4 on ATM put
/// pressure, α5 on the lagged IV change.
pub fn run_bollen_atm(
    series: &PressureSeries,
    j: OptionType,
    filter: SampleFilter,
    se_kind: StdErrorKind,
) -> (RegressionSpec, Result<RegressionResult>) {
    let names = ["A_ATM_call", "A_ATM_put"];
    let dependent = format!("dsigma_ATM_{}", j.label());
    let mut spec = RegressionSpec::new(
        SpecName::BollenAtm,
        series,
        filter,
        dependent,
        &pressure_regressors("dsigma", names, Moneyness::Atm, j),
    );
    spec.moneyness = Some(Moneyness::Atm);
    spec.option_type = Some(j);
    let result = fit_pressure_spec(
        series,
        &filter,
        Moneyness::Atm,
        j,
        names,
        se_kind,
        |row| pressure_m(row, Moneyness::Atm, OptionType::Call),
        |row| pressure_m(row, Moneyness::Atm, OptionType::Put),
    );
    (spec, result)
}

/// Moneyness-`k` test: α3 on own pressure `A^k_j`, α4 on ATM pressure of
/// type `atm_driver`.
pub fn run_bollen_k(
    series: &PressureSeries,
    k: Moneyness,
    j: OptionType,
    atm_driver: OptionType,
    filter: SampleFilter,
    se_kind: StdErrorKind,
) -> (RegressionSpec, Result<RegressionResult>) {
    let own = format!("A_{}_{}", k.label(), j.label());
    let atm = format!("A_ATM_{}", atm_driver.label());
    let names = [own.as_str(), atm.as_str()];
    let mut spec = RegressionSpec::new(
        SpecName::BollenK,
        series,
        filter,
        format!("dsigma_{}_{}", k.label(), j.label()),
        &pressure_regressors("dsigma", names, k, j),
    );
    spec.moneyness = Some(k);
    spec.option_type = Some(j);
    spec.atm_driver = Some(atm_driver);
    let result = fit_pressure_spec(
        series,
        &filter,
        k,
        j,
        names,
        se_kind,
        |row| pressure_m(row, k, j),
        |row| pressure_m(row, Moneyness::Atm, atm_driver),
    );
    (spec, result)
}

const SYMMETRIC_FLOW_HINT: &str =
    "directional demand is identically zero under perfectly symmetric call/put flow; \
     drop the D regressor or use the ATM/moneyness pressure tests";

/// Decomposition test: β3 on volatility demand `V^k`, β4 on directional
/// demand `D^k_j`.
pub fn run_chen(
    series: &PressureSeries,
    k: Moneyness,
    j: OptionType,
    filter: SampleFilter,
    se_kind: StdErrorKind,
) -> (RegressionSpec, Result<RegressionResult>) {
    let v_name = format!("V_{}", k.label());
    let d_name = format!("D_{}_{}", k.label(), j.label());
    let names = [v_name.as_str(), d_name.as_str()];
    let mut spec = RegressionSpec::new(
        SpecName::ChenDecomposition,
        series,
        filter,
        format!("dsigma_{}_{}", k.label(), j.label()),
        &pressure_regressors("dsigma", names, k, j),
    );
    spec.moneyness = Some(k);
    spec.option_type = Some(j);
    let result = fit_pressure_spec(
        series,
        &filter,
        k,
        j,
        names,
        se_kind,
        |row| Some(row.category(k)?.v / MILLION),
        |row| Some(row.category(k)?.d_usd(j) / MILLION),
    )
    .map_err(|e| match e {
        RegressError::RankDeficient { column, .. } if column == d_name => {
            RegressError::RankDeficient { column, hint: Some(SYMMETRIC_FLOW_HINT) }
        }
        other => other,
    });
    (spec, result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Horizon {
    Hour,
    Day,
    FiveDays,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::Hour, Horizon::Day, Horizon::FiveDays];

    pub fn hours(self) -> i64 {
        match self {
            Horizon::Hour => 1,
            Horizon::Day => 24,
            Horizon::FiveDays => 120,
        }
    }
}

/// Predicted variable `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictiveTarget {
    Return,
    DeltaIv,
    DeltaRv,
}

impl PredictiveTarget {
    pub const ALL: [PredictiveTarget; 3] =
        [PredictiveTarget::Return, PredictiveTarget::DeltaIv, PredictiveTarget::DeltaRv];

    fn label(self) -> &'static str {
        match self {
            PredictiveTarget::Return => "return",
            PredictiveTarget::DeltaIv => "dIV",
            PredictiveTarget::DeltaRv => "dRV",
        }
    }
}

/// Lagged information variable `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictiveDriver {
    DeltaVolume,
    Imbalance,
}

impl PredictiveDriver {
    pub const ALL: [PredictiveDriver; 2] = [PredictiveDriver::DeltaVolume, PredictiveDriver::Imbalance];

    fn label(self) -> &'static str {
        match self {
            PredictiveDriver::DeltaVolume => "dVolume",
            PredictiveDriver::Imbalance => "N",
        }
    }
}

/// Fits `x_t = γ0 + γ1 x_{t-1} + γ2 y_{t-1}` on consecutive observations;
/// `None` entries delete every row they touch.
pub fn fit_lagged(
    x: &[Option<f64>],
    y: &[Option<f64>],
    names: [&str; 2],
    se_kind: StdErrorKind,
) -> Result<RegressionResult> {
    let lag_x = format!("lag_{}", names[0]);
    let lag_y = format!("lag_{}", names[1]);
    let mut design = Design::new(
        alloc::vec![String::from("const"), lag_x, lag_y],
        x.len(),
    );
    let mut dep = Vec::with_capacity(x.len());
    for t in 1..x.len().min(y.len()) {
        if let (Some(xt), Some(xl), Some(yl)) = (x[t], x[t - 1], y[t - 1]) {
            dep.push(xt);
            design.push_row(&[1.0, xl, yl]);
        }
    }
    ols_fit(&design, &dep, se_kind)
}

struct Block {
    complete: bool,
    ret: Option<f64>,
    sum_r2: Option<f64>,
    iv_weighted: f64,
    iv_count: u32,
    imbalance: f64,
    volume: f64,
    admitted: bool,
}

/// Predictive regression at `horizon`, aggregating the base intervals into
/// epoch-aligned blocks. Returns sum log returns; realized vol is the
/// annualized root of summed squared interval returns within the block; IV is
/// the trade-weighted mean; imbalance and option volume are block sums.
pub fn run_predictive(
    series: &PressureSeries,
    horizon: Horizon,
    target: PredictiveTarget,
    driver: PredictiveDriver,
    filter: SampleFilter,
    se_kind: StdErrorKind,
) -> (RegressionSpec, Result<RegressionResult>) {
    let mut spec = RegressionSpec::new(
        SpecName::Predictive,
        series,
        filter,
        target.label().to_string(),
        &[format!("lag_{}", target.label()), format!("lag_{}", driver.label())],
    );
    spec.horizon_hours = Some(horizon.hours());
    let width_hours = series.options.width.hours();
    if horizon.hours() % width_hours != 0 {
        let err = RegressError::Horizon { horizon_hours: horizon.hours(), width_hours };
        return (spec, Err(err));
    }
    let per_block = horizon.hours() / width_hours;
    let blocks = build_blocks(series, per_block, &filter);
    let scale = series.options.iv_scale.factor();
    let block_hours = horizon.hours() as f64;
    let mean_iv = |b: &Block| (b.iv_count > 0).then(|| b.iv_weighted / f64::from(b.iv_count));
    let rv = |b: &Block| b.sum_r2.map(|s| libm::sqrt(s * HOURS_PER_YEAR / block_hours));
    let xs: Vec<Option<f64>> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if !b.complete {
                return None;
            }
            let prev = i.checked_sub(1).map(|p| &blocks[p]).filter(|p| p.complete);
            let change = |f: &dyn Fn(&Block) -> Option<f64>| match (f(b), prev.and_then(f)) {
                (Some(now), Some(before)) => Some((now - before) * scale),
                _ => None,
            };
            match target {
                PredictiveTarget::Return => b.ret,
                PredictiveTarget::DeltaIv => change(&mean_iv),
                PredictiveTarget::DeltaRv => change(&rv),
            }
        })
        .collect();
    let ys: Vec<Option<f64>> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if !b.complete {
                return None;
            }
            match driver {
                PredictiveDriver::Imbalance => Some(b.imbalance / MILLION),
                PredictiveDriver::DeltaVolume => {
                    let prev = i.checked_sub(1).map(|p| &blocks[p]).filter(|p| p.complete)?;
                    Some((b.volume - prev.volume) / MILLION)
                }
            }
        })
        .collect();
    let mut design = Design::new(
        alloc::vec![String::from("const"), spec.regressors[0].clone(), spec.regressors[1].clone()],
        blocks.len(),
    );
    let mut dep = Vec::with_capacity(blocks.len());
    for t in 1..blocks.len() {
        if !blocks[t].admitted {
            continue;
        }
        if let (Some(xt), Some(xl), Some(yl)) = (xs[t], xs[t - 1], ys[t - 1]) {
            dep.push(xt);
            design.push_row(&[1.0, xl, yl]);
        }
    }
    (spec, ols_fit(&design, &dep, se_kind))
}

fn build_blocks(series: &PressureSeries, per_block: i64, filter: &SampleFilter) -> Vec<Block> {
    let Some(first) = series.first_interval() else {
        return Vec::new();
    };
    let first_block = first.div_euclid(per_block);
    let last_block = (first + series.rows.len() as i64 - 1).div_euclid(per_block);
    (first_block..=last_block)
        .map(|b| {
            let mut block = Block {
                complete: true,
                ret: Some(0.0),
                sum_r2: Some(0.0),
                iv_weighted: 0.0,
                iv_count: 0,
                imbalance: 0.0,
                volume: 0.0,
                admitted: filter.admits(series.interval_start_ms(b * per_block)),
            };
            for interval in b * per_block..(b + 1) * per_block {
                let Some(row) = series.row(interval) else {
                    block.complete = false;
                    continue;
                };
                match row.r {
                    Some(r) => {
                        block.ret = block.ret.map(|s| s + r);
                        block.sum_r2 = block.sum_r2.map(|s| s + r * r);
                    }
                    None => {
                        block.ret = None;
                        block.sum_r2 = None;
                    }
                }
                if let Some(iv) = row.mean_iv_all {
                    block.iv_weighted += iv * f64::from(row.trade_count);
                    block.iv_count += row.trade_count;
                }
                block.imbalance += row.imbalance.to_usd();
                block.volume += row.option_volume.to_usd();
            }
            block
        })
        .collect()
}
