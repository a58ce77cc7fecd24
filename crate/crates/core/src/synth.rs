//! Seeded synthetic market with planted regimes.
//!
//! The underlying follows a jump diffusion on an hourly grid. Option flow
//! arrives in ten cells (five moneyness bands by calls and puts); a market
//! maker quotes one implied volatility per cell and hour, and every trade of
//! that cell-hour prints at it. How the quote reacts to delta-weighted flow
//! is what the regime plants:
//!
//! * `NullNoise`: quotes are random walks unrelated to flow,
//! * `LimitsToArbitrage`: a transient impact `x = (1-κ)x + λ·A` per cell,
//! * `VolatilityLearning`: a permanent shift `λ·V` for both types of a band,
//! * `DirectionalLearning`: a permanent shift `λ·D_j`,
//! * `Mixed`: both learning channels.
//!
//! In the learning regimes informed agents trade OTM/DOTM options a few hours
//! before a volatility or drift change they know of hits the underlying.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::option_math::{bs_price, classify_moneyness, Classifier, Moneyness, OptionContext, SigmaSource};
use crate::pressure::FixedUsd;
use crate::special::norm_inv_cdf;
use crate::tick::{Direction, OptionType, SpotBar, TradeTick};
use crate::time::{day_index, MS_PER_DAY, MS_PER_HOUR, SETTLEMENT_HOUR};

const HOURS_PER_YEAR: f64 = 8760.0;
const MILLION: f64 = 1e6;
/// Quote offsets above the ATM level, indexed like [`Moneyness::CLASSIFIED`].
const SMILE: [f64; 5] = [0.08, 0.03, 0.0, 0.03, 0.08];
const QUOTE_FLOOR: f64 = 0.05;
const QUOTE_CAP: f64 = 4.0;
const MAX_EXPIRY_DAYS: i64 = 60;
const PLACEMENT_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    NullNoise,
    LimitsToArbitrage,
    VolatilityLearning,
    DirectionalLearning,
    Mixed,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::NullNoise,
        Regime::LimitsToArbitrage,
        Regime::VolatilityLearning,
        Regime::DirectionalLearning,
        Regime::Mixed,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Regime::NullNoise => "null_noise",
            Regime::LimitsToArbitrage => "limits_to_arbitrage",
            Regime::VolatilityLearning => "volatility_learning",
            Regime::DirectionalLearning => "directional_learning",
            Regime::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Regime::ALL.iter().copied().find(|r| r.label().eq_ignore_ascii_case(s))
    }

    fn has_informed_flow(self) -> bool {
        matches!(self, Regime::VolatilityLearning | Regime::DirectionalLearning | Regime::Mixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderlyingParams {
    pub start_price: f64,
    /// Annualized log drift.
    pub drift: f64,
    /// Annualized diffusion volatility.
    pub diffusion_vol: f64,
    /// Expected jumps per year.
    pub jump_intensity: f64,
    pub jump_mean: f64,
    pub jump_dispersion: f64,
    /// Median hourly spot volume, USD.
    pub volume_usd: f64,
    /// Log-multiplier applied to diffusion volatility by a volatility signal.
    pub vol_shock: f64,
    /// Annualized drift added by a directional signal.
    pub drift_shock: f64,
    /// How long a signalled change lasts.
    pub event_hours: i64,
}

impl Default for UnderlyingParams {
    fn default() -> Self {
        UnderlyingParams {
            start_price: 7200.0,
            drift: 0.0,
            diffusion_vol: 0.6,
            jump_intensity: 12.0,
            jump_mean: 0.0,
            jump_dispersion: 0.03,
            volume_usd: 40e6,
            vol_shock: 0.5,
            drift_shock: 4.0,
            event_hours: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketMakerParams {
    /// Per-hour reversion of the transient impact, in (0, 1].
    pub kappa: f64,
    /// Quote change in decimal IV per USD million of delta-weighted flow.
    pub impact: f64,
    pub base_iv: f64,
    /// Hourly standard deviation of the market-wide quote random walk.
    pub common_noise: f64,
    /// Hourly standard deviation of each cell's own quote random walk.
    pub cell_noise: f64,
}

impl Default for MarketMakerParams {
    fn default() -> Self {
        MarketMakerParams { kappa: 0.4, impact: 0.3, base_iv: 0.7, common_noise: 0.0015, cell_noise: 0.0015 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Informed signals per hour.
    pub informed_intensity: f64,
    /// Expected uninformed trades per cell and hour.
    pub uninformed_intensity: f64,
    /// Hours between the first informed trade and the underlying change.
    pub signal_lead_hours: i64,
    /// Delta-weighted USD size of each informed trade.
    pub informed_size_usd: f64,
    /// Median uninformed trade size in contracts.
    pub uninformed_size: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            informed_intensity: 0.02,
            uninformed_intensity: 2.0,
            signal_lead_hours: 6,
            informed_size_usd: 20_000.0,
            uninformed_size: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub regime: Regime,
    /// Hours of option flow.
    pub horizon_hours: i64,
    pub seed: u64,
    pub start_ms: i64,
    /// Days of spot history before the first trade, so that 15-day realized
    /// volatility exists from the start.
    pub warmup_days: i64,
    pub underlying: UnderlyingParams,
    pub mm: MarketMakerParams,
    pub flow: FlowParams,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig {
            regime: Regime::NullNoise,
            horizon_hours: 2000,
            seed: 1,
            // 2020-01-01
            start_ms: 1_577_836_800_000,
            warmup_days: 16,
            underlying: UnderlyingParams::default(),
            mm: MarketMakerParams::default(),
            flow: FlowParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldIssue {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl RegimeConfig {
    pub fn with_regime(regime: Regime, seed: u64) -> Self {
        RegimeConfig { regime, seed, ..RegimeConfig::default() }
    }

    /// Every violated constraint, one entry per field.
    pub fn validate(&self) -> Result<(), Vec<FieldIssue>> {
        let mut issues = Vec::new();
        let mut check = |ok: bool, field: &'static str, message: &str| {
            if !ok {
                issues.push(FieldIssue { field, message: String::from(message) });
            }
        };
        let u = &self.underlying;
        let m = &self.mm;
        let f = &self.flow;
        check(self.horizon_hours >= 100, "horizon_hours", "must be at least 100");
        check(self.start_ms >= 0, "start_ms", "must not precede the epoch");
        check(self.start_ms % MS_PER_HOUR == 0, "start_ms", "must be on an hour boundary");
        check(self.warmup_days >= 16, "warmup_days", "must be at least 16");
        check(u.start_price > 0.0 && u.start_price.is_finite(), "start_price", "must be positive");
        check(u.drift.is_finite(), "drift", "must be finite");
        check(u.diffusion_vol >= 0.0 && u.diffusion_vol.is_finite(), "diffusion_vol", "must be non-negative");
        check(u.jump_intensity >= 0.0 && u.jump_intensity.is_finite(), "jump_intensity", "must be non-negative");
        check(u.jump_mean.is_finite(), "jump_mean", "must be finite");
        check(u.jump_dispersion >= 0.0 && u.jump_dispersion.is_finite(), "jump_dispersion", "must be non-negative");
        check(u.volume_usd > 0.0 && u.volume_usd.is_finite(), "volume_usd", "must be positive");
        check(u.vol_shock.is_finite(), "vol_shock", "must be finite");
        check(u.drift_shock.is_finite(), "drift_shock", "must be finite");
        check(u.event_hours >= 1, "event_hours", "must be at least 1");
        check(m.kappa > 0.0 && m.kappa <= 1.0, "kappa", "must lie in (0, 1]");
        check(m.impact > 0.0 && m.impact.is_finite(), "impact", "must be positive");
        check(m.base_iv > QUOTE_FLOOR && m.base_iv < QUOTE_CAP, "base_iv", "must lie in (0.05, 4)");
        check(m.common_noise >= 0.0 && m.common_noise.is_finite(), "common_noise", "must be non-negative");
        check(m.cell_noise >= 0.0 && m.cell_noise.is_finite(), "cell_noise", "must be non-negative");
        check(
            f.informed_intensity >= 0.0 && f.informed_intensity <= 1.0,
            "informed_intensity",
            "must lie in [0, 1] signals per hour",
        );
        check(
            f.uninformed_intensity >= 0.0 && f.uninformed_intensity.is_finite(),
            "uninformed_intensity",
            "must be non-negative",
        );
        check(f.signal_lead_hours >= 1, "signal_lead_hours", "must be at least 1");
        check(f.informed_size_usd > 0.0 && f.informed_size_usd.is_finite(), "informed_size_usd", "must be positive");
        check(f.uninformed_size > 0.0 && f.uninformed_size.is_finite(), "uninformed_size", "must be positive");
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    fn flow_start_ms(&self) -> i64 {
        self.start_ms + self.warmup_days * MS_PER_DAY
    }

    fn total_hours(&self) -> i64 {
        self.warmup_days * 24 + self.horizon_hours
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalKind {
    Volatility,
    Direction,
}

/// One informed signal: agents trade from `start_ms` for the lead time, then
/// the underlying changes for the event duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalEvent {
    pub kind: SignalKind,
    /// +1: volatility up / price up.
    pub sign: i8,
    pub start_ms: i64,
    pub effect_start_ms: i64,
    pub effect_end_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderlyingPath {
    /// Hourly bars from `start_ms`.
    pub bars: Vec<SpotBar>,
    pub events: Vec<SignalEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub config: RegimeConfig,
    /// Slope of a cell's decimal IV change on its own delta-weighted net
    /// flow (USD million), and its sign structure per regime.
    pub pressure_coefficient: f64,
    pub volatility_coefficient: f64,
    pub directional_coefficient: f64,
    pub lag_negative: bool,
    pub sigma_source: SigmaSource,
    pub events: Vec<SignalEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub trades: Vec<TradeTick>,
    pub spot: Vec<SpotBar>,
    pub truth: PlantedTruth,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let p = Poisson::new(mean).expect("positive mean");
    let draw: f64 = p.sample(rng);
    draw as u32
}

fn draw_events(config: &RegimeConfig, rng: &mut ChaCha8Rng) -> Vec<SignalEvent> {
    let mut events = Vec::new();
    if !config.regime.has_informed_flow() {
        return events;
    }
    let lead = config.flow.signal_lead_hours * MS_PER_HOUR;
    let duration = config.underlying.event_hours * MS_PER_HOUR;
    for h in 0..config.horizon_hours {
        if !rng.random_bool(config.flow.informed_intensity) {
            continue;
        }
        let kind = match config.regime {
            Regime::VolatilityLearning => SignalKind::Volatility,
            Regime::DirectionalLearning => SignalKind::Direction,
            _ if rng.random_bool(0.5) => SignalKind::Volatility,
            _ => SignalKind::Direction,
        };
        let sign = if rng.random_bool(0.5) { 1 } else { -1 };
        let start_ms = config.flow_start_ms() + h * MS_PER_HOUR;
        events.push(SignalEvent {
            kind,
            sign,
            start_ms,
            effect_start_ms: start_ms + lead,
            effect_end_ms: start_ms + lead + duration,
        });
    }
    events
}

/// Hourly jump-diffusion path with lognormal USD volumes. Signals of the
/// learning regimes are drawn here and shift volatility or drift while in
/// effect.
pub fn gen_underlying(config: &RegimeConfig, seed: u64) -> UnderlyingPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = &config.underlying;
    let events = draw_events(config, &mut rng);
    let dt = 1.0 / HOURS_PER_YEAR;
    let jump_mean_count = u.jump_intensity * dt;
    let volume = LogNormal::new(libm::log(u.volume_usd), 0.5).expect("valid volume law");
    let mut price = u.start_price;
    let mut bars = Vec::with_capacity(config.total_hours() as usize);
    for h in 0..config.total_hours() {
        let end_ms = config.start_ms + (h + 1) * MS_PER_HOUR;
        let mid_ms = end_ms - MS_PER_HOUR / 2;
        let mut sigma = u.diffusion_vol;
        let mut drift = u.drift;
        for e in events.iter().filter(|e| e.effect_start_ms <= mid_ms && mid_ms < e.effect_end_ms) {
            match e.kind {
                SignalKind::Volatility => sigma *= libm::exp(f64::from(e.sign) * u.vol_shock),
                SignalKind::Direction => drift += f64::from(e.sign) * u.drift_shock,
            }
        }
        let z = normal(&mut rng);
        let mut ret = (drift - 0.5 * sigma * sigma) * dt + sigma * libm::sqrt(dt) * z;
        for _ in 0..poisson(&mut rng, jump_mean_count) {
            ret += u.jump_mean + u.jump_dispersion * normal(&mut rng);
        }
        price *= libm::exp(ret);
        bars.push(SpotBar { interval_end_ms: end_ms, close: price, volume: volume.sample(&mut rng) });
    }
    UnderlyingPath { bars, events }
}

/// One of the ten flow cells.
#[derive(Debug, Clone, Copy)]
struct Cell {
    moneyness: Moneyness,
    option_type: OptionType,
}

impl Cell {
    fn all() -> [Cell; 10] {
        let mut out = [Cell { moneyness: Moneyness::Atm, option_type: OptionType::Call }; 10];
        for (k, m) in Moneyness::CLASSIFIED.iter().enumerate() {
            for (j, t) in OptionType::TRADED.iter().enumerate() {
                out[2 * k + j] = Cell { moneyness: *m, option_type: *t };
            }
        }
        out
    }

    fn slot(moneyness: Moneyness, option_type: OptionType) -> usize {
        2 * moneyness.index().expect("classified") + option_type.index()
    }

    /// DOTM, OTM and ATM cells trade every hour.
    fn is_key(self) -> bool {
        matches!(self.moneyness, Moneyness::Dotm | Moneyness::Otm | Moneyness::Atm)
    }
}

/// A trade before its price is known.
struct Pending {
    slot: usize,
    tick: TradeTick,
    abs_delta: f64,
}

struct Placer<'a> {
    classifier: &'a Classifier,
}

impl Placer<'_> {
    /// Picks an expiry and an integer strike whose classification delta falls
    /// in the cell's band. `None` if no attempt lands in the band.
    fn place(
        &self,
        rng: &mut ChaCha8Rng,
        cell: Cell,
        timestamp_ms: i64,
        index_price: f64,
    ) -> Option<(i64, f64, f64)> {
        let (lo, hi) = cell.moneyness.band()?;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let days = rng.random_range(1..=MAX_EXPIRY_DAYS);
            let expiry_ms = (day_index(timestamp_ms) + days) * MS_PER_DAY + SETTLEMENT_HOUR * MS_PER_HOUR;
            let mut tick = TradeTick {
                timestamp_ms,
                expiry_ms,
                strike: index_price,
                option_type: cell.option_type,
                direction: Direction::BuyerInitiated,
                amount: 1.0,
                option_price_btc: 0.0,
                implied_vol: 1.0,
                index_price,
            };
            let sigma = self.classifier.sigma_for(&tick)?;
            let width = hi - lo;
            let target = lo + width * (0.2 + 0.6 * rng.random::<f64>());
            let call_delta = match cell.option_type {
                OptionType::Call => target,
                _ => 1.0 - target,
            };
            let tau = tick.tau();
            let vol_t = sigma * libm::sqrt(tau);
            let d1 = norm_inv_cdf(call_delta);
            let forward = index_price * libm::exp(self.classifier.rate * tau);
            let strike = libm::round(forward * libm::exp(0.5 * vol_t * vol_t - d1 * vol_t));
            if strike < 1.0 {
                continue;
            }
            tick.strike = strike;
            let delta = self.classifier.delta(&tick)?;
            if classify_moneyness(delta) == cell.moneyness {
                return Some((expiry_ms, strike, delta.abs()));
            }
        }
        None
    }
}

fn round_amount(amount: f64) -> f64 {
    (libm::round(amount * 10.0) / 10.0).max(0.1)
}

/// Market-maker quote state per cell.
struct Quotes {
    common: f64,
    noise: [f64; 10],
    transient: [f64; 10],
    permanent: [f64; 10],
}

impl Quotes {
    fn quote(&self, base_iv: f64, slot: usize) -> f64 {
        let iv = base_iv + SMILE[slot / 2] + self.common + self.noise[slot] + self.transient[slot] + self.permanent[slot];
        iv.clamp(QUOTE_FLOOR, QUOTE_CAP)
    }

    /// Applies one hour of flow. `flow[slot]` is the cell's net delta-weighted
    /// flow in USD million.
    fn update(&mut self, regime: Regime, mm: &MarketMakerParams, flow: &[f64; 10], rng: &mut ChaCha8Rng) {
        self.common += mm.common_noise * normal(rng);
        for slot in 0..10 {
            self.noise[slot] += mm.cell_noise * normal(rng);
        }
        for k in 0..5 {
            let (call, put) = (flow[2 * k], flow[2 * k + 1]);
            let v = (call + put) / 2.0;
            let d_call = (call - put) / 2.0;
            match regime {
                Regime::NullNoise => {}
                Regime::LimitsToArbitrage => {
                    for (slot, a) in [(2 * k, call), (2 * k + 1, put)] {
                        self.transient[slot] = (1.0 - mm.kappa) * self.transient[slot] + mm.impact * a;
                    }
                }
                Regime::VolatilityLearning => {
                    self.permanent[2 * k] += mm.impact * v;
                    self.permanent[2 * k + 1] += mm.impact * v;
                }
                Regime::DirectionalLearning => {
                    self.permanent[2 * k] += mm.impact * d_call;
                    self.permanent[2 * k + 1] -= mm.impact * d_call;
                }
                Regime::Mixed => {
                    self.permanent[2 * k] += mm.impact * (v + d_call);
                    self.permanent[2 * k + 1] += mm.impact * (v - d_call);
                }
            }
        }
    }
}

/// Option trades over the flow horizon, timestamp-ascending. Trades carry the
/// initiating side chosen by their agent and print at the market maker's
/// quote for their cell and hour; prices are Black-Scholes at that quote.
pub fn gen_flow(config: &RegimeConfig, path: &UnderlyingPath, seed: u64) -> Vec<TradeTick> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classifier = Classifier::new(SigmaSource::Rv15, 0.0, &path.bars);
    let placer = Placer { classifier: &classifier };
    let cells = Cell::all();
    let size = LogNormal::new(libm::log(config.flow.uninformed_size), 0.75).expect("valid size law");
    let mut quotes = Quotes { common: 0.0, noise: [0.0; 10], transient: [0.0; 10], permanent: [0.0; 10] };
    let first_bar = (config.flow_start_ms() - config.start_ms) / MS_PER_HOUR;
    let mut trades = Vec::new();
    let mut pending: Vec<Pending> = Vec::new();
    for h in 0..config.horizon_hours {
        let bar = (first_bar + h) as usize;
        let open = path.bars[bar - 1].close;
        let close = path.bars[bar].close;
        let hour_start = config.flow_start_ms() + h * MS_PER_HOUR;
        let index_at = |ts: i64| {
            let frac = (ts - hour_start) as f64 / MS_PER_HOUR as f64;
            open * libm::exp(frac * libm::log(close / open))
        };
        pending.clear();
        for (slot, cell) in cells.iter().enumerate() {
            let mut n = if cell.is_key() {
                1 + poisson(&mut rng, config.flow.uninformed_intensity)
            } else {
                poisson(&mut rng, config.flow.uninformed_intensity)
            };
            let mut guaranteed = cell.is_key();
            while n > 0 {
                let ts = hour_start + rng.random_range(0..MS_PER_HOUR);
                let index_price = index_at(ts);
                let direction =
                    if rng.random_bool(0.5) { Direction::BuyerInitiated } else { Direction::SellerInitiated };
                let amount = round_amount(size.sample(&mut rng));
                match placer.place(&mut rng, *cell, ts, index_price) {
                    Some((expiry_ms, strike, abs_delta)) => {
                        pending.push(Pending {
                            slot,
                            tick: TradeTick {
                                timestamp_ms: ts,
                                expiry_ms,
                                strike,
                                option_type: cell.option_type,
                                direction,
                                amount,
                                option_price_btc: 0.0,
                                implied_vol: 0.0,
                                index_price,
                            },
                            abs_delta,
                        });
                        guaranteed = false;
                        n -= 1;
                    }
                    // keep trying for the cell's guaranteed trade only
                    None if guaranteed => {}
                    None => n -= 1,
                }
            }
        }
        for event in path.events.iter().filter(|e| e.start_ms <= hour_start && hour_start < e.effect_start_ms) {
            informed_trades(config, event, &placer, &mut rng, hour_start, &index_at, &mut pending);
        }

        let mut flow = [FixedUsd::ZERO; 10];
        for p in &pending {
            let dw = FixedUsd::from_usd(p.tick.notional_usd() * p.abs_delta);
            match p.tick.direction {
                Direction::BuyerInitiated => flow[p.slot] += dw,
                Direction::SellerInitiated => flow[p.slot] -= dw,
            }
        }
        let flow_m = flow.map(|f| f.to_usd() / MILLION);
        quotes.update(config.regime, &config.mm, &flow_m, &mut rng);

        let start = trades.len();
        for p in pending.drain(..) {
            let iv = quotes.quote(config.mm.base_iv, p.slot);
            let mut tick = p.tick;
            let ctx = OptionContext {
                spot: tick.index_price,
                rate: 0.0,
                tau: tick.tau(),
                strike: tick.strike,
                sigma: iv,
                option_type: tick.option_type,
            };
            let price = bs_price(&ctx).expect("valid pricing context");
            tick.implied_vol = iv;
            tick.option_price_btc = price / tick.index_price;
            trades.push(tick);
        }
        trades[start..].sort_by_key(|t| t.timestamp_ms);
    }
    trades
}

fn informed_trades(
    config: &RegimeConfig,
    event: &SignalEvent,
    placer: &Placer<'_>,
    rng: &mut ChaCha8Rng,
    hour_start: i64,
    index_at: &dyn Fn(i64) -> f64,
    pending: &mut Vec<Pending>,
) {
    let moneyness = if rng.random_bool(0.5) { Moneyness::Otm } else { Moneyness::Dotm };
    let buy = if event.sign > 0 { Direction::BuyerInitiated } else { Direction::SellerInitiated };
    let legs = match event.kind {
        // straddle-like: same side in calls and puts
        SignalKind::Volatility => [(OptionType::Call, buy), (OptionType::Put, buy)],
        SignalKind::Direction => [(OptionType::Call, buy), (OptionType::Put, buy.flipped())],
    };
    for (option_type, direction) in legs {
        let cell = Cell { moneyness, option_type };
        let ts = hour_start + rng.random_range(0..MS_PER_HOUR);
        let index_price = index_at(ts);
        let Some((expiry_ms, strike, abs_delta)) = placer.place(rng, cell, ts, index_price) else {
            continue;
        };
        let amount = round_amount(config.flow.informed_size_usd / (index_price * abs_delta));
        pending.push(Pending {
            slot: Cell::slot(moneyness, option_type),
            tick: TradeTick {
                timestamp_ms: ts,
                expiry_ms,
                strike,
                option_type,
                direction,
                amount,
                option_price_btc: 0.0,
                implied_vol: 0.0,
                index_price,
            },
            abs_delta,
        });
    }
}

/// Path, flow and planted truth for `config.seed`.
pub fn gen_dataset(config: &RegimeConfig) -> Result<SyntheticDataset, Vec<FieldIssue>> {
    config.validate()?;
    let path = gen_underlying(config, config.seed);
    let trades = gen_flow(config, &path, config.seed ^ 0x9E37_79B9_7F4A_7C15);
    let impact = config.mm.impact;
    let (pressure, vol, dir) = match config.regime {
        Regime::NullNoise => (0.0, 0.0, 0.0),
        Regime::LimitsToArbitrage => (impact, impact, impact),
        Regime::VolatilityLearning => (0.0, impact, 0.0),
        Regime::DirectionalLearning => (0.0, 0.0, impact),
        Regime::Mixed => (impact, impact, impact),
    };
    Ok(SyntheticDataset {
        trades,
        spot: path.bars,
        truth: PlantedTruth {
            config: *config,
            pressure_coefficient: pressure,
            volatility_coefficient: vol,
            directional_coefficient: dir,
            lag_negative: config.regime == Regime::LimitsToArbitrage,
            sigma_source: SigmaSource::Rv15,
            events: path.events,
        },
    })
}
