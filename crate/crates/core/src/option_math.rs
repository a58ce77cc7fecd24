//! Black-Scholes analytics used to classify option trades by moneyness:
//! delta, price, implied-volatility inversion, realized volatility, and the
//! trade classification pass that ties them to cleaned ticks.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::special::norm_cdf;
use crate::pressure::MaturityBucket;
use crate::special::norm_pdf;
use crate::tick::{CleaningReport, Direction, OptionType, SpotBar, TradeTick, MAX_IMPLIED_VOL};
use crate::time::{day_index, MS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptionMathError {
    #[error("invalid option context: {0}")]
    Domain(&'static str),
    #[error("price {price} outside no-arbitrage bounds ({lower}, {upper})")]
    PriceOutOfBounds { price: f64, lower: f64, upper: f64 },
    #[error("implied volatility above {MAX_IMPLIED_VOL}")]
    VolAboveCap,
    #[error("implied volatility did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("realized-vol window needs {expected} returns, got {got}")]
    WindowLength { expected: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, OptionMathError>;

/// Inputs to the Black-Scholes formulas. The forward is `spot * exp(rate * tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionContext {
    pub spot: f64,
    pub rate: f64,
    /// Residual maturity in ACT/365 years.
    pub tau: f64,
    pub strike: f64,
    pub sigma: f64,
    pub option_type: OptionType,
}

impl OptionContext {
    fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(OptionMathError::Domain("spot must be positive"));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(OptionMathError::Domain("strike must be positive"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(OptionMathError::Domain("tau must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(OptionMathError::Domain("sigma must be positive"));
        }
        if !self.rate.is_finite() {
            return Err(OptionMathError::Domain("rate must be finite"));
        }
        if self.option_type == OptionType::Unknown {
            return Err(OptionMathError::Domain("option type unknown"));
        }
        Ok(())
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        OptionContext { sigma, ..self }
    }

    fn d1_d2(&self) -> (f64, f64) {
        let vol_sqrt_t = self.sigma * libm::sqrt(self.tau);
        let forward = self.spot * libm::exp(self.rate * self.tau);
        let d1 = (libm::log(forward / self.strike) + 0.5 * self.sigma * self.sigma * self.tau)
            / vol_sqrt_t;
        (d1, d1 - vol_sqrt_t)
    }

    fn discount(&self) -> f64 {
        libm::exp(-self.rate * self.tau)
    }
}

/// Signed delta: `Φ(d1)` for calls, `Φ(d1) - 1` for puts.
pub fn bs_delta(ctx: &OptionContext) -> Result<f64> {
    ctx.validate()?;
    let (d1, _) = ctx.d1_d2();
    let call = norm_cdf(d1);
    Ok(match ctx.option_type {
        OptionType::Call => call,
        _ => call - 1.0,
    })
}

/// Option price in USD.
pub fn bs_price(ctx: &OptionContext) -> Result<f64> {
    ctx.validate()?;
    let (d1, d2) = ctx.d1_d2();
    let df_strike = ctx.strike * ctx.discount();
    let price = match ctx.option_type {
        OptionType::Call => ctx.spot * norm_cdf(d1) - df_strike * norm_cdf(d2),
        _ => df_strike * norm_cdf(-d2) - ctx.spot * norm_cdf(-d1),
    };
    Ok(price.max(0.0))
}

/// Sensitivity of the price to sigma.
pub fn bs_vega(ctx: &OptionContext) -> Result<f64> {
    ctx.validate()?;
    let (d1, _) = ctx.d1_d2();
    Ok(ctx.spot * norm_pdf(d1) * libm::sqrt(ctx.tau))
}

/// No-arbitrage price interval `(lower, upper)` for the contract.
pub fn price_bounds(ctx: &OptionContext) -> (f64, f64) {
    let df_strike = ctx.strike * ctx.discount();
    match ctx.option_type {
        OptionType::Call => ((ctx.spot - df_strike).max(0.0), ctx.spot),
        _ => ((df_strike - ctx.spot).max(0.0), df_strike),
    }
}

const IV_FLOOR: f64 = 1e-6;
const IV_MAX_ITER: usize = 200;

/// Inverts [`bs_price`] for sigma. `ctx.sigma` is ignored.
///
/// Safeguarded Newton: a Newton step is taken when it stays inside the current
/// bracket, otherwise the bracket is bisected.
pub fn implied_vol(price: f64, ctx: &OptionContext) -> Result<f64> {
    let ctx = ctx.with_sigma(1.0);
    ctx.validate()?;
    let (lower, upper) = price_bounds(&ctx);
    if !(price > lower && price < upper) {
        return Err(OptionMathError::PriceOutOfBounds { price, lower, upper });
    }
    let f = |s: f64| bs_price(&ctx.with_sigma(s)).map(|p| p - price);
    let mut lo = IV_FLOOR;
    let mut hi = MAX_IMPLIED_VOL;
    let f_hi = f(hi)?;
    if f_hi < 0.0 {
        return Err(OptionMathError::VolAboveCap);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f(lo)? >= 0.0 {
        return Err(OptionMathError::PriceOutOfBounds { price, lower, upper });
    }
    let tol_price = 1e-12 * ctx.spot;
    let mut sigma = 0.5;
    for _ in 0..IV_MAX_ITER {
        let diff = f(sigma)?;
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let vega = bs_vega(&ctx.with_sigma(sigma))?;
        let newton = if vega > 0.0 { sigma - diff / vega } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let step = (next - sigma).abs();
        sigma = next;
        if (diff.abs() <= tol_price && step <= 1e-12 * sigma) || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(sigma);
        }
        if step <= 1e-15 * sigma {
            return Ok(sigma);
        }
    }
    Err(OptionMathError::NoConvergence(IV_MAX_ITER))
}

/// Trailing daily log returns for one realized-volatility evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedVolWindow<'a> {
    pub daily_log_returns: &'a [f64],
    pub window_days: usize,
    pub annualization_days: u32,
}

impl<'a> RealizedVolWindow<'a> {
    pub fn new(daily_log_returns: &'a [f64]) -> Self {
        RealizedVolWindow { daily_log_returns, window_days: 15, annualization_days: 365 }
    }
}

/// `sqrt(annualization_days * mean(r_i^2))`.
pub fn realized_vol(window: &RealizedVolWindow<'_>) -> Result<f64> {
    if window.window_days < 2 {
        return Err(OptionMathError::Domain("window must span at least 2 days"));
    }
    if window.daily_log_returns.len() != window.window_days {
        return Err(OptionMathError::WindowLength {
            expected: window.window_days,
            got: window.daily_log_returns.len(),
        });
    }
    let mean_sq = window.daily_log_returns.iter().map(|r| r * r).sum::<f64>()
        / window.window_days as f64;
    Ok(libm::sqrt(f64::from(window.annualization_days) * mean_sq))
}

/// Absolute-delta moneyness bands. Each band is left-open, right-closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Moneyness {
    Dotm,
    Otm,
    Atm,
    Itm,
    Ditm,
    Excluded,
}

impl Moneyness {
    pub const CLASSIFIED: [Moneyness; 5] =
        [Moneyness::Dotm, Moneyness::Otm, Moneyness::Atm, Moneyness::Itm, Moneyness::Ditm];

    /// Position in [`Moneyness::CLASSIFIED`]; `None` for `Excluded`.
    pub fn index(self) -> Option<usize> {
        match self {
            Moneyness::Dotm => Some(0),
            Moneyness::Otm => Some(1),
            Moneyness::Atm => Some(2),
            Moneyness::Itm => Some(3),
            Moneyness::Ditm => Some(4),
            Moneyness::Excluded => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Moneyness::Dotm => "DOTM",
            Moneyness::Otm => "OTM",
            Moneyness::Atm => "ATM",
            Moneyness::Itm => "ITM",
            Moneyness::Ditm => "DITM",
            Moneyness::Excluded => "EXCLUDED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Moneyness::CLASSIFIED.iter().copied().find(|m| m.label().eq_ignore_ascii_case(s))
    }

    /// `(lower, upper]` band of absolute delta.
    pub fn band(self) -> Option<(f64, f64)> {
        let i = self.index()?;
        Some((BREAKPOINTS[i], BREAKPOINTS[i + 1]))
    }
}

/// Absolute-delta breakpoints; below the first or above the last is excluded.
pub const BREAKPOINTS: [f64; 6] = [0.02, 0.125, 0.375, 0.625, 0.875, 0.98];

pub fn classify_moneyness(delta: f64) -> Moneyness {
    let abs = delta.abs();
    if !(abs > BREAKPOINTS[0]) || abs > BREAKPOINTS[5] {
        return Moneyness::Excluded;
    }
    let mut i = 0;
    while abs > BREAKPOINTS[i + 1] {
        i += 1;
    }
    Moneyness::CLASSIFIED[i]
}

/// Volatility fed to the delta used for classification and weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaSource {
    Rv15,
    Rv30,
    TradeIv,
}

impl SigmaSource {
    pub fn window_days(self) -> Option<usize> {
        match self {
            SigmaSource::Rv15 => Some(15),
            SigmaSource::Rv30 => Some(30),
            SigmaSource::TradeIv => None,
        }
    }
}

/// Realized volatility per UTC day, computed from daily closes of the spot
/// series. The value for day `D` uses the `window` daily returns of the
/// completed days `D-window ..= D-1`, so it is known at any time during `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct RvSchedule {
    first_day: i64,
    values: Vec<Option<f64>>,
    pub window_days: usize,
}

impl RvSchedule {
    pub fn from_spot(bars: &[SpotBar], window_days: usize, annualization_days: u32) -> Self {
        let closes = daily_closes(bars);
        let Some(&(first_close_day, _)) = closes.first() else {
            return RvSchedule { first_day: 0, values: Vec::new(), window_days };
        };
        let last_close_day = closes[closes.len() - 1].0;
        // dense day-end closes
        let span = (last_close_day - first_close_day + 1) as usize;
        let mut dense: Vec<Option<f64>> = alloc::vec![None; span];
        for &(day, close) in &closes {
            dense[(day - first_close_day) as usize] = Some(close);
        }
        // returns[i] is the log return of day first_close_day + i
        let returns: Vec<Option<f64>> = (0..span)
            .map(|i| match (i.checked_sub(1).and_then(|p| dense[p]), dense[i]) {
                (Some(prev), Some(cur)) => Some(libm::log(cur / prev)),
                _ => None,
            })
            .collect();
        let first_day = first_close_day + 1;
        let mut values = Vec::with_capacity(span);
        let mut window: Vec<f64> = Vec::with_capacity(window_days);
        for d in 0..span {
            // day first_day + d uses returns of days ending at first_day + d - 1
            let end = d + 1; // exclusive index into returns
            window.clear();
            let value = if end > window_days {
                let slice = &returns[end - window_days..end];
                if slice.iter().all(Option::is_some) {
                    window.extend(slice.iter().map(|r| r.unwrap_or_default()));
                    let rv = realized_vol(&RealizedVolWindow {
                        daily_log_returns: &window,
                        window_days,
                        annualization_days,
                    })
                    .ok();
                    rv.filter(|v| *v > 0.0)
                } else {
                    None
                }
            } else {
                None
            };
            values.push(value);
        }
        RvSchedule { first_day, values, window_days }
    }

    pub fn rv_on_day(&self, day: i64) -> Option<f64> {
        let offset = day - self.first_day;
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied().flatten()
    }

    pub fn rv_at(&self, ts_ms: i64) -> Option<f64> {
        self.rv_on_day(day_index(ts_ms))
    }

    /// Days with an available estimate, ascending.
    pub fn days(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(move |(i, v)| v.map(|v| (self.first_day + i as i64, v)))
    }
}

/// Close of the last bar ending within each UTC day `(d*day, (d+1)*day]`.
pub fn daily_closes(bars: &[SpotBar]) -> Vec<(i64, f64)> {
    let mut out: Vec<(i64, f64)> = Vec::new();
    for bar in bars {
        let day = (bar.interval_end_ms - 1).div_euclid(MS_PER_DAY);
        match out.last_mut() {
            Some(last) if last.0 == day => last.1 = bar.close,
            _ => out.push((day, bar.close)),
        }
    }
    out
}

/// Classification settings shared by the analysis pipeline and the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub sigma_source: SigmaSource,
    pub rate: f64,
    pub schedule: Option<RvSchedule>,
}

impl Classifier {
    pub fn new(sigma_source: SigmaSource, rate: f64, spot: &[SpotBar]) -> Self {
        let schedule = sigma_source.window_days().map(|w| RvSchedule::from_spot(spot, w, 365));
        Classifier { sigma_source, rate, schedule }
    }

    pub fn sigma_for(&self, tick: &TradeTick) -> Option<f64> {
        match (&self.schedule, self.sigma_source) {
            (_, SigmaSource::TradeIv) => Some(tick.implied_vol),
            (Some(schedule), _) => schedule.rv_at(tick.timestamp_ms),
            (None, _) => None,
        }
    }

    /// Signed delta of the tick under the configured sigma source.
    pub fn delta(&self, tick: &TradeTick) -> Option<f64> {
        let sigma = self.sigma_for(tick)?;
        bs_delta(&OptionContext {
            spot: tick.index_price,
            rate: self.rate,
            tau: tick.tau(),
            strike: tick.strike,
            sigma,
            option_type: tick.option_type,
        })
        .ok()
    }
}

/// A cleaned tick reduced to what the aggregation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifiedTrade {
    pub timestamp_ms: i64,
    pub option_type: OptionType,
    pub direction: Direction,
    pub moneyness: Moneyness,
    pub maturity: MaturityBucket,
    pub abs_delta: f64,
    /// Contracts x index price, USD.
    pub notional_usd: f64,
    pub implied_vol: f64,
}

/// Classifies cleaned ticks, dropping excluded deltas and ticks without a
/// volatility estimate. Updates the report counts. Input order is preserved.
pub fn classify_trades(
    trades: &[TradeTick],
    classifier: &Classifier,
    report: &mut CleaningReport,
) -> Vec<ClassifiedTrade> {
    let mut out = Vec::with_capacity(trades.len());
    for tick in trades {
        let Some(delta) = classifier.delta(tick) else {
            report.dropped_no_sigma += 1;
            report.total_out -= 1;
            continue;
        };
        let moneyness = classify_moneyness(delta);
        if moneyness == Moneyness::Excluded {
            report.dropped_delta_bounds += 1;
            report.total_out -= 1;
            continue;
        }
        out.push(ClassifiedTrade {
            timestamp_ms: tick.timestamp_ms,
            option_type: tick.option_type,
            direction: tick.direction,
            moneyness,
            maturity: MaturityBucket::from_span(tick.timestamp_ms, tick.expiry_ms),
            abs_delta: delta.abs(),
            notional_usd: tick.notional_usd(),
            implied_vol: tick.implied_vol,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atm(option_type: OptionType) -> OptionContext {
        OptionContext { spot: 100.0, rate: 0.0, tau: 7.0 / 365.0, strike: 100.0, sigma: 0.8, option_type }
    }

    #[test]
    fn atm_delta_values() {
        // Φ(0.5·0.8·√(7/365)), evaluated with mpmath at 30 digits
        let call = bs_delta(&atm(OptionType::Call)).unwrap();
        assert!((call - 0.522_087_704_599_159_4).abs() < 1e-13, "{call}");
        let put = bs_delta(&atm(OptionType::Put)).unwrap();
        assert_eq!(put, call - 1.0);
        assert!((put + 0.4779).abs() < 1e-4);
    }

    #[test]
    fn deep_itm_delta() {
        let ctx = OptionContext { spot: 100.0 * 100.0, ..atm(OptionType::Call) };
        assert!((bs_delta(&ctx).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_context_is_domain_error() {
        let ctx = OptionContext { tau: 0.0, ..atm(OptionType::Call) };
        assert!(matches!(bs_delta(&ctx), Err(OptionMathError::Domain(_))));
        let ctx = OptionContext { sigma: -1.0, ..atm(OptionType::Call) };
        assert!(matches!(bs_price(&ctx), Err(OptionMathError::Domain(_))));
    }

    #[test]
    fn intrinsic_limit_and_parity() {
        let ctx = OptionContext {
            spot: 200.0,
            strike: 100.0,
            sigma: 1e-6,
            tau: 0.5,
            ..atm(OptionType::Call)
        };
        assert!((bs_price(&ctx).unwrap() - 100.0).abs() < 1e-9);
        for &(s, k, r, t, v) in &[(100.0, 90.0, 0.03, 0.7, 0.4), (35_000.0, 50_000.0, 0.0, 0.02, 1.1)] {
            let c = OptionContext { spot: s, strike: k, rate: r, tau: t, sigma: v, option_type: OptionType::Call };
            let p = OptionContext { option_type: OptionType::Put, ..c };
            let lhs = bs_price(&c).unwrap() - bs_price(&p).unwrap();
            let rhs = s - k * libm::exp(-r * t);
            assert!((lhs - rhs).abs() <= 1e-10 * s, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn implied_vol_round_trip_and_boundaries() {
        let ctx = atm(OptionType::Call);
        let price = bs_price(&ctx).unwrap();
        assert!((implied_vol(price, &ctx).unwrap() - 0.8).abs() < 1e-8);
        let (lower, _) = price_bounds(&OptionContext { strike: 90.0, ..ctx });
        assert!(matches!(
            implied_vol(lower, &OptionContext { strike: 90.0, ..ctx }),
            Err(OptionMathError::PriceOutOfBounds { .. })
        ));
        assert!(matches!(implied_vol(100.0, &ctx), Err(OptionMathError::PriceOutOfBounds { .. })));
        // a price needing sigma above the cap
        let rich = bs_price(&ctx.with_sigma(6.0)).unwrap();
        assert_eq!(implied_vol(rich, &ctx), Err(OptionMathError::VolAboveCap));
    }

    #[test]
    fn realized_vol_examples() {
        let zeros = [0.0; 15];
        assert_eq!(realized_vol(&RealizedVolWindow::new(&zeros)).unwrap(), 0.0);
        let flat = [0.05; 15];
        let rv = realized_vol(&RealizedVolWindow::new(&flat)).unwrap();
        assert!((rv - libm::sqrt(365.0 * 0.0025)).abs() < 1e-15);
        assert!((rv - 0.9552).abs() < 1e-4);
        let mut one = [0.0; 15];
        one[3] = 0.02;
        let base = realized_vol(&RealizedVolWindow::new(&one)).unwrap();
        one[3] = 0.04;
        let doubled = realized_vol(&RealizedVolWindow::new(&one)).unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-15);
        assert!((base - libm::sqrt(365.0 / 15.0) * 0.02).abs() < 1e-15);
        assert!(matches!(
            realized_vol(&RealizedVolWindow::new(&[0.1; 14])),
            Err(OptionMathError::WindowLength { expected: 15, got: 14 })
        ));
    }

    #[test]
    fn moneyness_examples() {
        assert_eq!(classify_moneyness(0.5), Moneyness::Atm);
        assert_eq!(classify_moneyness(-0.125), Moneyness::Dotm);
        assert_eq!(classify_moneyness(0.99), Moneyness::Excluded);
        assert_eq!(classify_moneyness(0.02), Moneyness::Excluded);
        assert_eq!(classify_moneyness(0.98), Moneyness::Ditm);
        assert_eq!(classify_moneyness(-0.375), Moneyness::Otm);
        assert_eq!(classify_moneyness(0.625), Moneyness::Atm);
        assert_eq!(classify_moneyness(0.875), Moneyness::Itm);
    }

    #[test]
    fn rv_schedule_uses_completed_days() {
        // hourly bars over 20 days, price doubling in steps each day end
        let mut bars = Vec::new();
        for h in 1..=(20 * 24) {
            let day = (h - 1) / 24;
            bars.push(SpotBar {
                interval_end_ms: h * 3_600_000,
                close: 100.0 * libm::exp(0.01 * day as f64),
                volume: 1.0,
            });
        }
        let schedule = RvSchedule::from_spot(&bars, 15, 365);
        // closes exist for days 0..=19; returns for days 1..=19; day 16 is the
        // first with 15 completed returns (days 1..=15)
        assert_eq!(schedule.rv_on_day(15), None);
        let rv = schedule.rv_on_day(16).unwrap();
        assert!((rv - libm::sqrt(365.0) * 0.01).abs() < 1e-12);
        assert_eq!(schedule.rv_on_day(21), None);
    }
}
