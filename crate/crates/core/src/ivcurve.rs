//! Implied-volatility curve across five strike-ordered categories: level,
//! left and right slopes, relative IVs and the realized-implied spread.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::option_math::{ClassifiedTrade, Moneyness};
use crate::tick::OptionType;
use crate::time::{day_index, days_from_civil, year_of, MS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum CurveError {
    #[error("no curve category for {option_type:?} {moneyness:?}")]
    Domain { option_type: OptionType, moneyness: Moneyness },
    #[error("curve category {0} has no trades")]
    EmptyCategory(u8),
    #[error("ATM implied volatility must be positive")]
    ZeroLevel,
}

/// Strike-ordered category 1..=5: category 1 holds the lowest strikes (DITM
/// calls, DOTM puts), category 5 the highest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CurveCategory(u8);

impl CurveCategory {
    pub const ATM: CurveCategory = CurveCategory(3);

    pub fn new(index: u8) -> Option<Self> {
        (1..=5).contains(&index).then_some(CurveCategory(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    fn slot(self) -> usize {
        usize::from(self.0 - 1)
    }
}

pub fn curve_category(option_type: OptionType, moneyness: Moneyness) -> Result<CurveCategory, CurveError> {
    let call_index = match moneyness {
        Moneyness::Ditm => 1,
        Moneyness::Itm => 2,
        Moneyness::Atm => 3,
        Moneyness::Otm => 4,
        Moneyness::Dotm => 5,
        Moneyness::Excluded => return Err(CurveError::Domain { option_type, moneyness }),
    };
    match option_type {
        OptionType::Call => Ok(CurveCategory(call_index)),
        OptionType::Put => Ok(CurveCategory(6 - call_index)),
        OptionType::Unknown => Err(CurveError::Domain { option_type, moneyness }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub level: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub vol_spread: f64,
    /// Category IV over the level; `None` for categories without trades.
    pub relative_iv: [Option<f64>; 5],
}

/// Slopes run in increasing-strike direction: `left = (IV3 − IV2)/IV3`,
/// `right = (IV4 − IV3)/IV3`.
pub fn curve_stats(category_iv: &[Option<f64>; 5], realized_vol: f64) -> Result<CurveStats, CurveError> {
    let need = |c: u8| category_iv[usize::from(c - 1)].ok_or(CurveError::EmptyCategory(c));
    let (iv2, iv3, iv4) = (need(2)?, need(3)?, need(4)?);
    if !(iv3 > 0.0) {
        return Err(CurveError::ZeroLevel);
    }
    let mut relative_iv = category_iv.map(|iv| iv.map(|v| v / iv3));
    relative_iv[CurveCategory::ATM.slot()] = Some(1.0);
    Ok(CurveStats {
        level: iv3,
        left_slope: (iv3 - iv2) / iv3,
        right_slope: (iv4 - iv3) / iv3,
        vol_spread: realized_vol - iv3,
        relative_iv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveWindow {
    /// Monday-to-Sunday UTC weeks.
    Weekly,
    Yearly,
}

impl CurveWindow {
    /// `[start_ms, end_ms)` of the window containing `ts_ms`.
    pub fn bounds(self, ts_ms: i64) -> (i64, i64) {
        match self {
            CurveWindow::Weekly => {
                // day 0 was a Thursday
                let week = (day_index(ts_ms) + 3).div_euclid(7);
                let start = (week * 7 - 3) * MS_PER_DAY;
                (start, start + 7 * MS_PER_DAY)
            }
            CurveWindow::Yearly => {
                let y = year_of(ts_ms);
                (days_from_civil(y, 1, 1) * MS_PER_DAY, days_from_civil(y + 1, 1, 1) * MS_PER_DAY)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCurve {
    pub window_start_ms: i64,
    pub window_end_ms: i64,
    pub trade_count: usize,
    pub stats: Result<CurveStats, CurveError>,
}

#[derive(Default)]
struct Acc {
    sums: [f64; 5],
    counts: [usize; 5],
}

/// Curve statistics per window from classified trades. Category IV is the
/// unweighted mean over trades; the window's realized volatility is the mean
/// of the daily values `rv_on_day` reports for the window's days, `NaN` when
/// there are none.
pub fn curve_series(
    trades: &[ClassifiedTrade],
    window: CurveWindow,
    rv_on_day: impl Fn(i64) -> Option<f64>,
) -> Vec<WindowCurve> {
    let mut windows: BTreeMap<i64, (i64, Acc)> = BTreeMap::new();
    for t in trades {
        let Ok(cat) = curve_category(t.option_type, t.moneyness) else { continue };
        let (start, end) = window.bounds(t.timestamp_ms);
        let (_, acc) = windows.entry(start).or_insert_with(|| (end, Acc::default()));
        acc.sums[cat.slot()] += t.implied_vol;
        acc.counts[cat.slot()] += 1;
    }
    windows
        .into_iter()
        .map(|(start, (end, acc))| {
            let mut ivs = [None; 5];
            for i in 0..5 {
                if acc.counts[i] > 0 {
                    ivs[i] = Some(acc.sums[i] / acc.counts[i] as f64);
                }
            }
            let (mut rv_sum, mut rv_n) = (0.0, 0usize);
            for day in start / MS_PER_DAY..end / MS_PER_DAY {
                if let Some(rv) = rv_on_day(day) {
                    rv_sum += rv;
                    rv_n += 1;
                }
            }
            let rv = if rv_n > 0 { rv_sum / rv_n as f64 } else { f64::NAN };
            WindowCurve {
                window_start_ms: start,
                window_end_ms: end,
                trade_count: acc.counts.iter().sum(),
                stats: curve_stats(&ivs, rv),
            }
        })
        .collect()
}
