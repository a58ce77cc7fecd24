//! UTC millisecond arithmetic. Timestamps are integer milliseconds since the
//! Unix epoch everywhere; there is no local-time logic.

pub const MS_PER_HOUR: i64 = 3_600_000;
pub const MS_PER_DAY: i64 = 86_400_000;
/// ACT/365 year length.
pub const MS_PER_YEAR: i64 = 365 * MS_PER_DAY;
/// Deribit settles at 08:00 UTC on the expiry date.
pub const SETTLEMENT_HOUR: i64 = 8;

/// Days since 1970-01-01 for a proleptic Gregorian date.
pub fn days_from_civil(year: i32, month: u32, day: u32) -> i64 {
    let y = i64::from(year) - i64::from(month <= 2);
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let m = i64::from(month);
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Inverse of [`days_from_civil`]: `(year, month, day)`.
pub fn civil_from_days(days: i64) -> (i32, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let year = yoe + era * 400 + i64::from(month <= 2);
    (year as i32, month, day)
}

pub fn day_index(ts_ms: i64) -> i64 {
    ts_ms.div_euclid(MS_PER_DAY)
}

pub fn year_of(ts_ms: i64) -> i32 {
    civil_from_days(day_index(ts_ms)).0
}

pub fn hour_of_day(ts_ms: i64) -> u32 {
    (ts_ms.rem_euclid(MS_PER_DAY) / MS_PER_HOUR) as u32
}

/// Settlement instant (08:00 UTC) of the given calendar date.
pub fn settlement_ms(year: i32, month: u32, day: u32) -> i64 {
    days_from_civil(year, month, day) * MS_PER_DAY + SETTLEMENT_HOUR * MS_PER_HOUR
}

/// Residual maturity in ACT/365 years.
pub fn year_fraction(from_ms: i64, to_ms: i64) -> f64 {
    (to_ms - from_ms) as f64 / MS_PER_YEAR as f64
}
