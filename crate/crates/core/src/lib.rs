//! Tick-level options analytics without the standard library.
//!
//! The crate covers everything that is pure computation: Black-Scholes
//! classification of option trades, net-buying-pressure aggregation, the
//! least-squares regression battery with its hypothesis verdicts,
//! implied-volatility curve statistics, and a seeded synthetic market used as
//! ground truth. Parsing, file formats and the command line live in the `nbp`
//! companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod battery;
pub mod ivcurve;
pub mod option_math;
pub mod pressure;
pub mod regress;
pub mod special;
pub mod synth;
pub mod tick;
pub mod time;

pub use option_math::{Moneyness, OptionContext, SigmaSource};
pub use pressure::{BucketKey, IntervalAggregate, MaturityBucket, PressureSeries, TodSlot};
pub use regress::{HypothesisVerdict, RegressionResult, RegressionSpec};
pub use tick::{CleaningReport, Direction, OptionType, SpotBar, TradeTick};
