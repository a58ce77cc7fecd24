//! Trade and spot loaders, the instrument-name parser, and writers for the
//! same formats.
//!
//! Trade CSV columns: `timestamp_ms,instrument,direction,amount,
//! option_price_btc,implied_vol,index_price`; JSONL objects use the same
//! field names. Spot CSV columns: `interval_end_ms,close,volume_usd`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nbp_core::tick::RowError;
use nbp_core::time::{civil_from_days, day_index, settlement_ms};
use nbp_core::{CleaningReport, Direction, OptionType, SpotBar, TradeTick};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRADE_COLUMNS: [&str; 7] =
    ["timestamp_ms", "instrument", "direction", "amount", "option_price_btc", "implied_vol", "index_price"];
pub const SPOT_COLUMNS: [&str; 3] = ["interval_end_ms", "close", "volume_usd"];

const MONTHS: [&str; 12] = ["JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Open { path: String, source: io::Error },
    #[error("unreadable input: {0}")]
    Read(String),
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: usize },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("no trades survived parsing and cleaning ({0} rows read)")]
    NoTrades(usize),
    #[error("no spot bars survived parsing ({0} rows read)")]
    NoSpot(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TradeFormat {
    Csv,
    Jsonl,
}

impl TradeFormat {
    /// JSONL for `.jsonl`/`.ndjson`/`.json` paths, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("jsonl" | "ndjson" | "json") => TradeFormat::Jsonl,
            _ => TradeFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instrument {
    pub expiry_ms: i64,
    pub strike: f64,
    pub option_type: OptionType,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrumentError {
    #[error("instrument `{0}` does not match ASSET-DDMMMYY-STRIKE-{{C|P}}")]
    Pattern(String),
    #[error("instrument `{0}`: invalid expiry date")]
    Expiry(String),
    #[error("instrument `{0}`: strike must be positive")]
    Strike(String),
}

/// Parses Deribit-style names such as `BTC-28JUL21-35000-C`. Expiry is
/// settlement at 08:00 UTC on the named date. A missing type letter yields
/// `OptionType::Unknown`, which cleaning later drops.
pub fn parse_instrument(name: &str) -> Result<Instrument, InstrumentError> {
    let pattern = || InstrumentError::Pattern(name.to_string());
    let parts: Vec<&str> = name.trim().split('-').collect();
    let (asset, date, strike, kind) = match parts.as_slice() {
        [a, d, s, k] => (*a, *d, *s, *k),
        [a, d, s] => (*a, *d, *s, ""),
        _ => return Err(pattern()),
    };
    if asset.is_empty() || !asset.chars().all(|c| c.is_ascii_alphanumeric()) {
        return Err(pattern());
    }
    let option_type = match kind {
        "C" | "c" => OptionType::Call,
        "P" | "p" => OptionType::Put,
        "" => OptionType::Unknown,
        _ => return Err(pattern()),
    };
    let expiry_ms = parse_expiry(date).ok_or_else(|| InstrumentError::Expiry(name.to_string()))?;
    let strike: f64 = strike.parse().map_err(|_| pattern())?;
    if !(strike > 0.0) || !strike.is_finite() {
        return Err(InstrumentError::Strike(name.to_string()));
    }
    Ok(Instrument { expiry_ms, strike, option_type })
}

fn parse_expiry(date: &str) -> Option<i64> {
    let digits = date.bytes().take_while(u8::is_ascii_digit).count();
    if !(1..=2).contains(&digits) || date.len() != digits + 5 {
        return None;
    }
    let day: u32 = date[..digits].parse().ok()?;
    let month = MONTHS.iter().position(|m| m.eq_ignore_ascii_case(&date[digits..digits + 3]))? as u32 + 1;
    let yy: i32 = date[digits + 3..].parse().ok()?;
    let year = 2000 + yy;
    let ms = settlement_ms(year, month, day);
    // reject dates like 31FEB21 that the civil arithmetic would roll over
    (civil_from_days(day_index(ms)) == (year, month, day)).then_some(ms)
}

/// Deribit-style name of an instrument; the asset prefix is always `BTC`.
pub fn instrument_name(expiry_ms: i64, strike: f64, option_type: OptionType) -> String {
    let (year, month, day) = civil_from_days(day_index(expiry_ms));
    let kind = match option_type {
        OptionType::Call => "C",
        OptionType::Put => "P",
        OptionType::Unknown => "",
    };
    format!("BTC-{day}{}{:02}-{strike}-{kind}", MONTHS[month as usize - 1], year.rem_euclid(100))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrades {
    pub trades: Vec<TradeTick>,
    pub report: CleaningReport,
}

/// Field values of one trade row before validation.
#[derive(Debug, Deserialize)]
struct RawTrade {
    timestamp_ms: i64,
    instrument: String,
    direction: String,
    amount: f64,
    option_price_btc: f64,
    implied_vol: f64,
    index_price: f64,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s.trim() {
        "buy" | "BUY" | "Buy" => Ok(Direction::BuyerInitiated),
        "sell" | "SELL" | "Sell" => Ok(Direction::SellerInitiated),
        other => Err(format!("direction must be `buy` or `sell`, found `{other}`")),
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("{field}: cannot parse `{value}`"))
}

/// Caches instrument lookups; a feed repeats the same few thousand names.
#[derive(Default)]
struct InstrumentCache {
    names: HashMap<Vec<u8>, Result<Instrument, InstrumentError>>,
}

impl InstrumentCache {
    fn get(&mut self, name: &str) -> Result<Instrument, InstrumentError> {
        if let Some(hit) = self.names.get(name.as_bytes()) {
            return hit.clone();
        }
        let parsed = parse_instrument(name);
        self.names.insert(name.as_bytes().to_vec(), parsed.clone());
        parsed
    }
}

struct TradeBuilder {
    cache: InstrumentCache,
    trades: Vec<TradeTick>,
    report: CleaningReport,
}

impl TradeBuilder {
    fn new() -> Self {
        TradeBuilder { cache: InstrumentCache::default(), trades: Vec::new(), report: CleaningReport::default() }
    }

    fn push(&mut self, line: usize, raw: Result<RawTrade, String>) {
        self.report.total_in += 1;
        let tick = raw.and_then(|raw| {
            let instrument = self.cache.get(&raw.instrument).map_err(|e| e.to_string())?;
            Ok(TradeTick {
                timestamp_ms: raw.timestamp_ms,
                expiry_ms: instrument.expiry_ms,
                strike: instrument.strike,
                option_type: instrument.option_type,
                direction: parse_direction(&raw.direction)?,
                amount: raw.amount,
                option_price_btc: raw.option_price_btc,
                implied_vol: raw.implied_vol,
                index_price: raw.index_price,
            })
        });
        match tick {
            Err(message) => self.report.malformed(line, message),
            Ok(tick) => match tick.screen() {
                Ok(()) => self.trades.push(tick),
                Err(rejection) => self.report.record(rejection, line),
            },
        }
    }

    fn finish(mut self) -> Result<ParsedTrades, IngestError> {
        self.report.total_out = self.trades.len();
        if self.trades.is_empty() {
            return Err(IngestError::NoTrades(self.report.total_in));
        }
        self.trades.sort_by_key(|t| t.timestamp_ms);
        Ok(ParsedTrades { trades: self.trades, report: self.report })
    }
}

fn utf8(line: usize, bytes: &[u8]) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|_| IngestError::Encoding { line })
}

fn check_header(found: &csv::ByteRecord, expected: &[&str], line: usize) -> Result<(), IngestError> {
    let found: Vec<&str> = found.iter().map(|f| utf8(line, f).map(str::trim)).collect::<Result<_, _>>()?;
    if found != expected {
        return Err(IngestError::Header { expected: expected.join(","), found: found.join(",") });
    }
    Ok(())
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source)
}

fn read_error(e: csv::Error) -> IngestError {
    IngestError::Read(e.to_string())
}

fn raw_from_csv(record: &csv::ByteRecord, line: usize) -> Result<Result<RawTrade, String>, IngestError> {
    if record.len() != TRADE_COLUMNS.len() {
        return Ok(Err(format!("expected {} fields, found {}", TRADE_COLUMNS.len(), record.len())));
    }
    let mut f = [""; 7];
    for (slot, bytes) in f.iter_mut().zip(record.iter()) {
        *slot = utf8(line, bytes)?;
    }
    Ok((|| {
        Ok(RawTrade {
            timestamp_ms: parse_num("timestamp_ms", f[0])?,
            instrument: f[1].trim().to_string(),
            direction: f[2].to_string(),
            amount: parse_num("amount", f[3])?,
            option_price_btc: parse_num("option_price_btc", f[4])?,
            implied_vol: parse_num("implied_vol", f[5])?,
            index_price: parse_num("index_price", f[6])?,
        })
    })())
}

/// Parses, validates and cleans a trade stream. Malformed rows are recorded
/// with their line number and skipped; output is timestamp-ascending with
/// ties in input order.
pub fn parse_trades<R: Read>(source: R, format: TradeFormat) -> Result<ParsedTrades, IngestError> {
    let mut builder = TradeBuilder::new();
    match format {
        TradeFormat::Csv => {
            let mut reader = csv_reader(source);
            let mut record = csv::ByteRecord::new();
            if !reader.read_byte_record(&mut record).map_err(read_error)? {
                return Err(IngestError::NoTrades(0));
            }
            check_header(&record, &TRADE_COLUMNS, 1)?;
            while reader.read_byte_record(&mut record).map_err(read_error)? {
                let line = record.position().map_or(0, |p| p.line() as usize);
                builder.push(line, raw_from_csv(&record, line)?);
            }
        }
        TradeFormat::Jsonl => {
            let reader = BufReader::new(source);
            for (i, text) in reader.split(b'\n').enumerate() {
                let line = i + 1;
                let bytes = text.map_err(|e| IngestError::Read(e.to_string()))?;
                let text = utf8(line, &bytes)?.trim();
                if text.is_empty() {
                    continue;
                }
                builder.push(line, serde_json::from_str::<RawTrade>(text).map_err(|e| e.to_string()));
            }
        }
    }
    builder.finish()
}

/// Counts for the spot loader; `total_out = total_in - dropped`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotReport {
    pub total_in: usize,
    pub dropped_malformed: usize,
    pub dropped_nonpositive_close: usize,
    pub dropped_duplicate: usize,
    pub total_out: usize,
    pub errors: Vec<RowError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSpot {
    pub bars: Vec<SpotBar>,
    pub report: SpotReport,
}

/// Parses spot bars. Bars with a non-positive close or negative volume are
/// dropped and reported; output is sorted with strictly increasing
/// `interval_end_ms`, keeping the first of any duplicate end time.
pub fn parse_spot<R: Read>(source: R) -> Result<ParsedSpot, IngestError> {
    let mut reader = csv_reader(source);
    let mut record = csv::ByteRecord::new();
    let mut report = SpotReport::default();
    if !reader.read_byte_record(&mut record).map_err(read_error)? {
        return Err(IngestError::NoSpot(0));
    }
    check_header(&record, &SPOT_COLUMNS, 1)?;
    let mut bars: Vec<(usize, SpotBar)> = Vec::new();
    while reader.read_byte_record(&mut record).map_err(read_error)? {
        let line = record.position().map_or(0, |p| p.line() as usize);
        report.total_in += 1;
        let fields: Vec<&str> = record.iter().map(|b| utf8(line, b)).collect::<Result<_, _>>()?;
        let parsed = if fields.len() != SPOT_COLUMNS.len() {
            Err(format!("expected {} fields, found {}", SPOT_COLUMNS.len(), fields.len()))
        } else {
            (|| {
                Ok(SpotBar {
                    interval_end_ms: parse_num("interval_end_ms", fields[0])?,
                    close: parse_num("close", fields[1])?,
                    volume: parse_num("volume_usd", fields[2])?,
                })
            })()
        };
        match parsed {
            Err(message) => {
                report.dropped_malformed += 1;
                report.errors.push(RowError { row: line, message });
            }
            Ok(bar) if !(bar.close > 0.0) || !bar.close.is_finite() => {
                report.dropped_nonpositive_close += 1;
                report.errors.push(RowError { row: line, message: String::from("close must be positive") });
            }
            Ok(bar) if !(bar.volume >= 0.0) || !bar.volume.is_finite() => {
                report.dropped_malformed += 1;
                report.errors.push(RowError { row: line, message: String::from("volume must be non-negative") });
            }
            Ok(bar) => bars.push((line, bar)),
        }
    }
    bars.sort_by_key(|(_, b)| b.interval_end_ms);
    let mut out: Vec<SpotBar> = Vec::with_capacity(bars.len());
    for (line, bar) in bars {
        if out.last().is_some_and(|last| last.interval_end_ms == bar.interval_end_ms) {
            report.dropped_duplicate += 1;
            report.errors.push(RowError { row: line, message: String::from("duplicate interval_end_ms") });
            continue;
        }
        out.push(bar);
    }
    report.errors.sort_by_key(|e| e.row);
    report.total_out = out.len();
    if out.is_empty() {
        return Err(IngestError::NoSpot(report.total_in));
    }
    Ok(ParsedSpot { bars: out, report })
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Open { path: path.display().to_string(), source })
}

pub fn load_trades(path: &Path) -> Result<ParsedTrades, IngestError> {
    parse_trades(BufReader::with_capacity(1 << 20, open(path)?), TradeFormat::from_path(path))
}

pub fn load_spot(path: &Path) -> Result<ParsedSpot, IngestError> {
    parse_spot(BufReader::new(open(path)?))
}

pub fn write_trades_csv<W: Write>(out: W, trades: &[TradeTick]) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", TRADE_COLUMNS.join(","))?;
    for t in trades {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            t.timestamp_ms,
            instrument_name(t.expiry_ms, t.strike, t.option_type),
            t.direction.as_feed_str(),
            t.amount,
            t.option_price_btc,
            t.implied_vol,
            t.index_price
        )?;
    }
    w.flush()
}

#[derive(Serialize)]
struct JsonTrade<'a> {
    timestamp_ms: i64,
    instrument: &'a str,
    direction: &'a str,
    amount: f64,
    option_price_btc: f64,
    implied_vol: f64,
    index_price: f64,
}

pub fn write_trades_jsonl<W: Write>(out: W, trades: &[TradeTick]) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    for t in trades {
        let name = instrument_name(t.expiry_ms, t.strike, t.option_type);
        let row = JsonTrade {
            timestamp_ms: t.timestamp_ms,
            instrument: &name,
            direction: t.direction.as_feed_str(),
            amount: t.amount,
            option_price_btc: t.option_price_btc,
            implied_vol: t.implied_vol,
            index_price: t.index_price,
        };
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_spot_csv<W: Write>(out: W, bars: &[SpotBar]) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", SPOT_COLUMNS.join(","))?;
    for b in bars {
        writeln!(w, "{},{},{}", b.interval_end_ms, b.close, b.volume)?;
    }
    w.flush()
}

pub fn write_trades(out: impl Write, trades: &[TradeTick], format: TradeFormat) -> io::Result<()> {
    match format {
        TradeFormat::Csv => write_trades_csv(out, trades),
        TradeFormat::Jsonl => write_trades_jsonl(out, trades),
    }
}
