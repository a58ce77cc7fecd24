//! Interval bucketing of classified trades and the net-buying-pressure family
//! of series: order imbalance `N`, per-category pressure `A`, directional
//! demand `D`, volatility demand `V`, total delta-weighted volume `TV`, their
//! relative forms, and implied-volatility changes.
//!
//! Delta-weighted flows are accumulated in binary fixed point ([`FixedUsd`]),
//! so sums are independent of accumulation order and the decomposition
//! identities `A_call = V + D_call`, `A_put = V - D_call` hold bit for bit
//! after conversion to `f64`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::option_math::{ClassifiedTrade, Moneyness};
use crate::tick::{Direction, OptionType, SpotBar};
use crate::time::{hour_of_day, MS_PER_DAY, MS_PER_HOUR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PressureError {
    #[error("interval width must be 1, 4, 8 or 24 hours, got {0}")]
    Width(i64),
}

const QUANTUM_BITS: i32 = 20;
const QUANTUM: f64 = 1.0 / (1u64 << QUANTUM_BITS) as f64;
const HALF_QUANTUM: f64 = QUANTUM / 2.0;

/// USD amount in units of 2^-20 USD.
///
/// Conversion back to `f64` is exact while `|value| < 2^32` USD, which bounds
/// a single interval/category cell far above any observed hourly flow.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FixedUsd(pub i128);

impl FixedUsd {
    pub const ZERO: FixedUsd = FixedUsd(0);

    pub fn from_usd(usd: f64) -> Self {
        FixedUsd(libm::round(usd * (1u64 << QUANTUM_BITS) as f64) as i128)
    }

    pub fn to_usd(self) -> f64 {
        self.0 as f64 * QUANTUM
    }

    /// `self / 2` in USD, exact under the same bound as [`FixedUsd::to_usd`].
    pub fn half_usd(self) -> f64 {
        self.0 as f64 * HALF_QUANTUM
    }

    pub fn abs(self) -> Self {
        FixedUsd(self.0.abs())
    }
}

impl Add for FixedUsd {
    type Output = FixedUsd;
    fn add(self, rhs: Self) -> Self {
        FixedUsd(self.0 + rhs.0)
    }
}

impl Sub for FixedUsd {
    type Output = FixedUsd;
    fn sub(self, rhs: Self) -> Self {
        FixedUsd(self.0 - rhs.0)
    }
}

impl Neg for FixedUsd {
    type Output = FixedUsd;
    fn neg(self) -> Self {
        FixedUsd(-self.0)
    }
}

impl AddAssign for FixedUsd {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl SubAssign for FixedUsd {
    fn sub_assign(&mut self, rhs: Self) {
        self.0 -= rhs.0;
    }
}

impl Sum for FixedUsd {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(FixedUsd::ZERO, Add::add)
    }
}

/// Aggregation interval: 1, 4, 8 or 24 hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalWidth(i64);

impl IntervalWidth {
    pub const HOUR: IntervalWidth = IntervalWidth(1);

    pub fn from_hours(hours: i64) -> Result<Self, PressureError> {
        match hours {
            1 | 4 | 8 | 24 => Ok(IntervalWidth(hours)),
            other => Err(PressureError::Width(other)),
        }
    }

    pub fn hours(self) -> i64 {
        self.0
    }

    pub fn ms(self) -> i64 {
        self.0 * MS_PER_HOUR
    }

    /// Half-open `[start, end)` intervals: a trade on a boundary belongs to
    /// the later interval.
    pub fn index_of(self, ts_ms: i64) -> i64 {
        ts_ms.div_euclid(self.ms())
    }

    pub fn start_ms(self, interval: i64) -> i64 {
        interval * self.ms()
    }
}

/// Days-to-expiry buckets: `[1,7]`, `[8,21]`, `>= 22` (whole days, rounded
/// up; anything under a day counts as short).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MaturityBucket {
    Short,
    Medium,
    Long,
    All,
}

impl MaturityBucket {
    pub const SPECIFIC: [MaturityBucket; 3] =
        [MaturityBucket::Short, MaturityBucket::Medium, MaturityBucket::Long];

    pub fn from_span(ts_ms: i64, expiry_ms: i64) -> Self {
        let span = expiry_ms - ts_ms;
        let days = (span + MS_PER_DAY - 1).div_euclid(MS_PER_DAY);
        match days {
            i64::MIN..=7 => MaturityBucket::Short,
            8..=21 => MaturityBucket::Medium,
            _ => MaturityBucket::Long,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MaturityBucket::Short => "short",
            MaturityBucket::Medium => "medium",
            MaturityBucket::Long => "long",
            MaturityBucket::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [MaturityBucket::Short, MaturityBucket::Medium, MaturityBucket::Long, MaturityBucket::All]
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
    }
}

/// Eight-hour UTC trading-session slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TodSlot {
    /// 00:00-08:00
    Asia,
    /// 08:00-16:00
    Europe,
    /// 16:00-24:00
    Us,
    All,
}

impl TodSlot {
    pub const SPECIFIC: [TodSlot; 3] = [TodSlot::Asia, TodSlot::Europe, TodSlot::Us];

    pub fn of(ts_ms: i64) -> Self {
        match hour_of_day(ts_ms) {
            0..=7 => TodSlot::Asia,
            8..=15 => TodSlot::Europe,
            _ => TodSlot::Us,
        }
    }

    pub fn contains(self, ts_ms: i64) -> bool {
        self == TodSlot::All || TodSlot::of(ts_ms) == self
    }

    pub fn label(self) -> &'static str {
        match self {
            TodSlot::Asia => "asia",
            TodSlot::Europe => "europe",
            TodSlot::Us => "us",
            TodSlot::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [TodSlot::Asia, TodSlot::Europe, TodSlot::Us, TodSlot::All]
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BucketKey {
    pub interval: i64,
    pub moneyness: Moneyness,
    pub option_type: OptionType,
    pub maturity: MaturityBucket,
    pub tod: TodSlot,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Disaggregation {
    pub by_maturity: bool,
    pub by_tod: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalAggregate {
    /// Σ buyer-initiated notional · |Δ|.
    pub buy_dw: FixedUsd,
    pub sell_dw: FixedUsd,
    /// Unweighted notionals.
    pub buy_raw: FixedUsd,
    pub sell_raw: FixedUsd,
    pub iv_sum: f64,
    pub trade_count: u32,
}

impl IntervalAggregate {
    fn add_trade(&mut self, trade: &ClassifiedTrade) {
        let weighted = FixedUsd::from_usd(trade.notional_usd * trade.abs_delta);
        let raw = FixedUsd::from_usd(trade.notional_usd);
        match trade.direction {
            Direction::BuyerInitiated => {
                self.buy_dw += weighted;
                self.buy_raw += raw;
            }
            Direction::SellerInitiated => {
                self.sell_dw += weighted;
                self.sell_raw += raw;
            }
        }
        self.iv_sum += trade.implied_vol;
        self.trade_count += 1;
    }

    pub fn merge(&mut self, other: &IntervalAggregate) {
        self.buy_dw += other.buy_dw;
        self.sell_dw += other.sell_dw;
        self.buy_raw += other.buy_raw;
        self.sell_raw += other.sell_raw;
        self.iv_sum += other.iv_sum;
        self.trade_count += other.trade_count;
    }

    pub fn mean_iv(&self) -> Option<f64> {
        (self.trade_count > 0).then(|| self.iv_sum / f64::from(self.trade_count))
    }

    pub fn total_dw(&self) -> FixedUsd {
        self.buy_dw + self.sell_dw
    }
}

/// Buckets trades by `(interval, moneyness, type[, maturity][, slot])`.
/// Excluded-moneyness trades contribute nothing. Trades are accumulated in
/// input order, which the loaders keep timestamp-ascending.
pub fn bucket_trades(
    trades: &[ClassifiedTrade],
    width: IntervalWidth,
    disaggregation: Disaggregation,
) -> BTreeMap<BucketKey, IntervalAggregate> {
    let mut out: BTreeMap<BucketKey, IntervalAggregate> = BTreeMap::new();
    for trade in trades {
        if trade.moneyness == Moneyness::Excluded {
            continue;
        }
        let key = BucketKey {
            interval: width.index_of(trade.timestamp_ms),
            moneyness: trade.moneyness,
            option_type: trade.option_type,
            maturity: if disaggregation.by_maturity { trade.maturity } else { MaturityBucket::All },
            tod: if disaggregation.by_tod { TodSlot::of(trade.timestamp_ms) } else { TodSlot::All },
        };
        out.entry(key).or_default().add_trade(trade);
    }
    out
}

/// `N_t`: Σ buy_dw − Σ sell_dw over every aggregate of the interval.
pub fn order_imbalance<'a>(aggregates: impl IntoIterator<Item = &'a IntervalAggregate>) -> FixedUsd {
    aggregates.into_iter().map(|a| a.buy_dw - a.sell_dw).sum()
}

/// `A_{j,t}^k` for one bucket.
pub fn category_pressure(aggregate: &IntervalAggregate) -> FixedUsd {
    aggregate.buy_dw - aggregate.sell_dw
}

/// Directional and volatility demand of one moneyness category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub d_call: f64,
    pub d_put: f64,
    pub v: f64,
}

/// `D_call = (A_call − A_put)/2`, `D_put = −D_call`, `V = (A_call + A_put)/2`.
pub fn decompose(a_call: f64, a_put: f64) -> Decomposition {
    let d_call = (a_call - a_put) / 2.0;
    Decomposition { d_call, d_put: -d_call, v: (a_call + a_put) / 2.0 }
}

/// [`decompose`] on exact flows; the halves are exactly representable.
pub fn decompose_exact(a_call: FixedUsd, a_put: FixedUsd) -> Decomposition {
    let d_call = (a_call - a_put).half_usd();
    Decomposition { d_call, d_put: -d_call, v: (a_call + a_put).half_usd() }
}

/// `(D_call / TV, V / TV)`, defined as `(0, 0)` for an empty interval.
pub fn relative_pressure(d_call: f64, v: f64, tv: f64) -> (f64, f64) {
    if tv > 0.0 {
        (d_call / tv, v / tv)
    } else {
        (0.0, 0.0)
    }
}

/// Changes in mean IV between consecutive non-empty intervals. A gap on
/// either side yields no observation.
pub fn iv_change_series(means: &[(i64, f64)]) -> Vec<(i64, f64)> {
    means
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .map(|w| (w[1].0, w[1].1 - w[0].1))
        .collect()
}

/// Spot observations per interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotPoint {
    pub interval: i64,
    pub close: f64,
    /// Log return versus the previous interval's close; needs both intervals.
    pub r: Option<f64>,
    /// USD volume summed over the interval's bars.
    pub v: f64,
}

/// Maps bars onto intervals. A bar ending exactly at an interval boundary
/// covers the interval that ends there.
pub fn spot_series(bars: &[SpotBar], width: IntervalWidth) -> Vec<SpotPoint> {
    let mut out: Vec<SpotPoint> = Vec::new();
    for bar in bars {
        let interval = (bar.interval_end_ms - 1).div_euclid(width.ms());
        match out.last_mut() {
            Some(last) if last.interval == interval => {
                last.close = bar.close;
                last.v += bar.volume;
            }
            _ => out.push(SpotPoint { interval, close: bar.close, r: None, v: bar.volume }),
        }
    }
    for i in 1..out.len() {
        if out[i].interval == out[i - 1].interval + 1 {
            out[i].r = Some(libm::log(out[i].close / out[i - 1].close));
        }
    }
    out
}

/// Unit of implied-volatility changes in the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IvScale {
    /// Volatility points (×100).
    Percent,
    Decimal,
}

impl IvScale {
    pub fn factor(self) -> f64 {
        match self {
            IvScale::Percent => 100.0,
            IvScale::Decimal => 1.0,
        }
    }
}

/// Metrics of one moneyness category in one interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    /// `[A_call, A_put]`, exact.
    pub a: [FixedUsd; 2],
    pub tv: FixedUsd,
    pub d_call: f64,
    pub v: f64,
    pub rel_d: f64,
    pub rel_v: f64,
    pub mean_iv: [Option<f64>; 2],
    /// Scaled by the series' [`IvScale`].
    pub delta_iv: [Option<f64>; 2],
    pub trade_count: [u32; 2],
}

impl CategoryRow {
    pub fn a_usd(&self, option_type: OptionType) -> f64 {
        self.a[option_type.index()].to_usd()
    }

    /// `D_j`: `D_call` for calls, `−D_call` for puts.
    pub fn d_usd(&self, option_type: OptionType) -> f64 {
        match option_type {
            OptionType::Call => self.d_call,
            _ => -self.d_call,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub interval: i64,
    /// `N_t`, exact.
    pub imbalance: FixedUsd,
    /// Unweighted option notional traded, USD.
    pub option_volume: FixedUsd,
    /// Change in option notional versus the previous interval.
    pub delta_volume: Option<f64>,
    pub r: Option<f64>,
    pub v: Option<f64>,
    /// Mean IV over every trade of the interval.
    pub mean_iv_all: Option<f64>,
    pub trade_count: u32,
    pub categories: [CategoryRow; 5],
}

impl IntervalRow {
    pub fn category(&self, moneyness: Moneyness) -> Option<&CategoryRow> {
        moneyness.index().map(|i| &self.categories[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub width: IntervalWidth,
    pub maturity: MaturityBucket,
    pub tod: TodSlot,
    pub iv_scale: IvScale,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            width: IntervalWidth::HOUR,
            maturity: MaturityBucket::All,
            tod: TodSlot::All,
            iv_scale: IvScale::Percent,
        }
    }
}

/// Dense per-interval pressure series for one maturity/slot slice, covering
/// every interval from the first to the last traded one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureSeries {
    pub options: SeriesOptions,
    pub rows: Vec<IntervalRow>,
}

impl PressureSeries {
    /// Selects the buckets of the slice; an `All` maturity or slot merges
    /// every bucket along that dimension.
    pub fn build(
        aggregates: &BTreeMap<BucketKey, IntervalAggregate>,
        spot: &[SpotPoint],
        options: SeriesOptions,
    ) -> Self {
        let selected = aggregates
            .iter()
            .filter(|(k, _)| options.maturity == MaturityBucket::All || k.maturity == options.maturity)
            .filter(|(k, _)| options.tod == TodSlot::All || k.tod == options.tod);
        // interval -> [moneyness][type]
        let mut cells: BTreeMap<i64, [[IntervalAggregate; 2]; 5]> = BTreeMap::new();
        for (key, agg) in selected {
            let Some(k) = key.moneyness.index() else { continue };
            cells.entry(key.interval).or_default()[k][key.option_type.index()].merge(agg);
        }
        let (Some(&first), Some(&last)) = (cells.keys().next(), cells.keys().next_back()) else {
            return PressureSeries { options, rows: Vec::new() };
        };
        let spot_by_interval: BTreeMap<i64, &SpotPoint> =
            spot.iter().map(|p| (p.interval, p)).collect();
        let empty = [[IntervalAggregate::default(); 2]; 5];
        let scale = options.iv_scale.factor();
        let mut rows: Vec<IntervalRow> = Vec::with_capacity((last - first + 1) as usize);
        for interval in first..=last {
            let grid = cells.get(&interval).unwrap_or(&empty);
            let mut categories = [CategoryRow::default(); 5];
            let mut imbalance = FixedUsd::ZERO;
            let mut volume = FixedUsd::ZERO;
            let mut iv_sum = 0.0;
            let mut count = 0u32;
            for (k, row) in categories.iter_mut().enumerate() {
                let [call, put] = &grid[k];
                let a_call = category_pressure(call);
                let a_put = category_pressure(put);
                let tv = call.total_dw() + put.total_dw();
                let dec = decompose_exact(a_call, a_put);
                let (rel_d, rel_v) = relative_pressure(dec.d_call, dec.v, tv.to_usd());
                row.a = [a_call, a_put];
                row.tv = tv;
                row.d_call = dec.d_call;
                row.v = dec.v;
                row.rel_d = rel_d;
                row.rel_v = rel_v;
                row.mean_iv = [call.mean_iv(), put.mean_iv()];
                row.trade_count = [call.trade_count, put.trade_count];
                imbalance += order_imbalance([call, put]);
                volume += call.buy_raw + call.sell_raw + put.buy_raw + put.sell_raw;
                iv_sum += call.iv_sum + put.iv_sum;
                count += call.trade_count + put.trade_count;
            }
            if let Some(prev) = rows.last() {
                for (k, row) in categories.iter_mut().enumerate() {
                    for j in 0..2 {
                        if let (Some(now), Some(before)) = (row.mean_iv[j], prev.categories[k].mean_iv[j]) {
                            row.delta_iv[j] = Some((now - before) * scale);
                        }
                    }
                }
            }
            let delta_volume = rows.last().map(|prev| (volume - prev.option_volume).to_usd());
            let sp = spot_by_interval.get(&interval);
            rows.push(IntervalRow {
                interval,
                imbalance,
                option_volume: volume,
                delta_volume,
                r: sp.and_then(|p| p.r),
                v: sp.map(|p| p.v),
                mean_iv_all: (count > 0).then(|| iv_sum / f64::from(count)),
                trade_count: count,
                categories,
            });
        }
        PressureSeries { options, rows }
    }

    pub fn first_interval(&self) -> Option<i64> {
        self.rows.first().map(|r| r.interval)
    }

    pub fn row(&self, interval: i64) -> Option<&IntervalRow> {
        let first = self.first_interval()?;
        let offset = interval.checked_sub(first)?;
        if offset < 0 {
            return None;
        }
        self.rows.get(offset as usize)
    }

    pub fn interval_start_ms(&self, interval: i64) -> i64 {
        self.options.width.start_ms(interval)
    }
}
