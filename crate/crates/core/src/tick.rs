//! Canonical trade and spot records plus the cleaning bookkeeping shared by
//! every loader.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Upper bound of exchange-quoted implied volatility. Quotes at or beyond the
/// exchange clamps carry no information, so cleaning keeps `0 < iv <= 5.0`.
pub const MAX_IMPLIED_VOL: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OptionType {
    Call,
    Put,
    Unknown,
}

impl OptionType {
    /// Index into `[call, put]` arrays. `Unknown` never survives cleaning.
    pub fn index(self) -> usize {
        match self {
            OptionType::Call => 0,
            OptionType::Put => 1,
            OptionType::Unknown => panic!("unclassified option type"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OptionType::Call => "call",
            OptionType::Put => "put",
            OptionType::Unknown => "unknown",
        }
    }

    pub const TRADED: [OptionType; 2] = [OptionType::Call, OptionType::Put];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    BuyerInitiated,
    SellerInitiated,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::BuyerInitiated => Direction::SellerInitiated,
            Direction::SellerInitiated => Direction::BuyerInitiated,
        }
    }

    /// Feed spelling: `buy` / `sell`.
    pub fn as_feed_str(self) -> &'static str {
        match self {
            Direction::BuyerInitiated => "buy",
            Direction::SellerInitiated => "sell",
        }
    }
}

/// One option trade as printed by the exchange feed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeTick {
    pub timestamp_ms: i64,
    /// Settlement instant of the contract (08:00 UTC on the expiry date).
    pub expiry_ms: i64,
    pub strike: f64,
    pub option_type: OptionType,
    pub direction: Direction,
    /// Contracts traded, 1 BTC nominal each.
    pub amount: f64,
    pub option_price_btc: f64,
    pub implied_vol: f64,
    pub index_price: f64,
}

/// Why a structurally readable tick was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    MissingType,
    IvBounds,
    /// Violates a hard record invariant; reported as a malformed row.
    Invalid(&'static str),
}

impl TradeTick {
    /// Applies the record invariants and the cleaning rules, in that order.
    pub fn screen(&self) -> Result<(), Rejection> {
        if !(self.amount > 0.0) || !self.amount.is_finite() {
            return Err(Rejection::Invalid("amount must be positive"));
        }
        if !(self.option_price_btc >= 0.0) || !self.option_price_btc.is_finite() {
            return Err(Rejection::Invalid("option price must be non-negative"));
        }
        if !(self.index_price > 0.0) || !self.index_price.is_finite() {
            return Err(Rejection::Invalid("index price must be positive"));
        }
        if !(self.strike > 0.0) || !self.strike.is_finite() {
            return Err(Rejection::Invalid("strike must be positive"));
        }
        if self.expiry_ms <= self.timestamp_ms {
            return Err(Rejection::Invalid("expiry must be after the trade"));
        }
        if self.timestamp_ms < 0 {
            return Err(Rejection::Invalid("timestamp before epoch"));
        }
        if self.option_type == OptionType::Unknown {
            return Err(Rejection::MissingType);
        }
        if !(self.implied_vol > 0.0 && self.implied_vol <= MAX_IMPLIED_VOL) {
            return Err(Rejection::IvBounds);
        }
        Ok(())
    }

    /// Residual maturity in ACT/365 years.
    pub fn tau(&self) -> f64 {
        crate::time::year_fraction(self.timestamp_ms, self.expiry_ms)
    }

    /// Trade notional in USD (contracts x index price).
    pub fn notional_usd(&self) -> f64 {
        self.amount * self.index_price
    }
}

/// One spot-market bar: close and USD volume over the interval ending at
/// `interval_end_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotBar {
    pub interval_end_ms: i64,
    pub close: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the source; a CSV header is line 1.
    pub row: usize,
    pub message: String,
}

/// Reconciliation of every input row: `total_out = total_in - dropped`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub total_in: usize,
    pub dropped_malformed: usize,
    pub dropped_missing_type: usize,
    pub dropped_iv_bounds: usize,
    /// Filled by the classification pass.
    pub dropped_delta_bounds: usize,
    /// Filled by the classification pass: no volatility estimate was
    /// available at the trade time (e.g. before the realized-vol window fills).
    pub dropped_no_sigma: usize,
    pub total_out: usize,
    pub errors: Vec<RowError>,
}

impl CleaningReport {
    pub fn dropped(&self) -> usize {
        self.dropped_malformed
            + self.dropped_missing_type
            + self.dropped_iv_bounds
            + self.dropped_delta_bounds
            + self.dropped_no_sigma
    }

    pub fn reconciles(&self) -> bool {
        self.total_out + self.dropped() == self.total_in
    }

    pub fn record(&mut self, rejection: Rejection, row: usize) {
        match rejection {
            Rejection::MissingType => self.dropped_missing_type += 1,
            Rejection::IvBounds => self.dropped_iv_bounds += 1,
            Rejection::Invalid(msg) => self.malformed(row, String::from(msg)),
        }
    }

    pub fn malformed(&mut self, row: usize, message: String) {
        self.dropped_malformed += 1;
        self.errors.push(RowError { row, message });
    }
}
