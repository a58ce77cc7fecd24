use nbp::ingest::{
    parse_instrument, parse_spot, parse_trades, write_spot_csv, write_trades, IngestError, InstrumentError,
    TradeFormat,
};
use nbp_core::synth::{gen_dataset, Regime, RegimeConfig};
use nbp_core::tick::OptionType;
use nbp_core::time::settlement_ms;
use proptest::prelude::*;

const HEADER: &str = "timestamp_ms,instrument,direction,amount,option_price_btc,implied_vol,index_price\n";

fn csv(rows: &[&str]) -> String {
    let mut s = HEADER.to_string();
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

#[test]
fn cleaning_rules_and_reconciliation() {
    let text = csv(&[
        "1609459200000,BTC-28JUL21-35000-C,buy,1.5,0.05,0.8,29000",
        "1609459100000,BTC-28JUL21-35000-,sell,1,0.05,0.8,29000",
        "1609459300000,BTC-28JUL21-35000-P,sell,1,0.05,5.01,29000",
        "1609459400000,BTC-28JUL21-35000-P,sell,1,0.05,5.0,29000",
        "1609459500000,BTC-28JUL21-35000-P,sell,1,0.05,0,29000",
        "1609459600000,XYZ,buy,1,0.05,0.8,29000",
        "1609459700000,BTC-28JUL21-35000-C,hold,1,0.05,0.8,29000",
        "1609459000000,BTC-28JUL21-40000-P,buy,2,0.1,0.9,29000",
    ]);
    let parsed = parse_trades(text.as_bytes(), TradeFormat::Csv).unwrap();
    let r = &parsed.report;
    assert_eq!(r.total_in, 8);
    assert_eq!(r.dropped_missing_type, 1);
    assert_eq!(r.dropped_iv_bounds, 2);
    assert_eq!(r.dropped_malformed, 2);
    assert_eq!(r.total_out, 3);
    assert!(r.reconciles());
    assert_eq!(r.errors.iter().map(|e| e.row).collect::<Vec<_>>(), vec![7, 8]);
    let ts: Vec<i64> = parsed.trades.iter().map(|t| t.timestamp_ms).collect();
    assert_eq!(ts, vec![1609459000000, 1609459200000, 1609459400000]);
    assert_eq!(parsed.trades[2].implied_vol, 5.0);
}

#[test]
fn empty_inputs_are_fatal() {
    assert!(matches!(parse_trades("".as_bytes(), TradeFormat::Csv), Err(IngestError::NoTrades(0))));
    assert!(matches!(parse_trades(HEADER.as_bytes(), TradeFormat::Csv), Err(IngestError::NoTrades(0))));
    assert!(matches!(parse_trades("".as_bytes(), TradeFormat::Jsonl), Err(IngestError::NoTrades(0))));
    let only_dropped = csv(&["1609459300000,BTC-28JUL21-35000-P,sell,1,0.05,5.01,29000"]);
    assert!(matches!(parse_trades(only_dropped.as_bytes(), TradeFormat::Csv), Err(IngestError::NoTrades(1))));
}

#[test]
fn wrong_header_is_fatal() {
    let text = "ts,instrument,direction,amount,option_price_btc,implied_vol,index_price\n";
    assert!(matches!(parse_trades(text.as_bytes(), TradeFormat::Csv), Err(IngestError::Header { .. })));
}

#[test]
fn jsonl_rows() {
    let text = concat!(
        r#"{"timestamp_ms":1609459200000,"instrument":"BTC-28JUL21-35000-C","direction":"buy","amount":1.5,"option_price_btc":0.05,"implied_vol":0.8,"index_price":29000}"#,
        "\n",
        "not json\n",
        r#"{"timestamp_ms":1609459100000,"instrument":"BTC-28JUL21-35000-P","direction":"sell","amount":1,"option_price_btc":0.05,"implied_vol":0.8,"index_price":29000}"#,
        "\n"
    );
    let parsed = parse_trades(text.as_bytes(), TradeFormat::Jsonl).unwrap();
    assert_eq!(parsed.trades.len(), 2);
    assert_eq!(parsed.report.dropped_malformed, 1);
    assert_eq!(parsed.report.errors[0].row, 2);
    assert_eq!(parsed.trades[0].option_type, OptionType::Put);
}

#[test]
fn instrument_examples() {
    let i = parse_instrument("BTC-28JUL21-35000-C").unwrap();
    assert_eq!(i.expiry_ms, settlement_ms(2021, 7, 28));
    assert_eq!((i.strike, i.option_type), (35000.0, OptionType::Call));
    assert!(matches!(parse_instrument("BTC-1JAN21-0-C"), Err(InstrumentError::Strike(_))));
    assert!(matches!(parse_instrument("XYZ"), Err(InstrumentError::Pattern(_))));
    assert!(parse_instrument("BTC-30FEB21-100-P").is_err());
}

#[test]
fn spot_examples() {
    let text = "interval_end_ms,close,volume_usd\n7200000,101,0\n3600000,100,5\n10800000,-1,3\n10800000,102,3\n";
    let parsed = parse_spot(text.as_bytes()).unwrap();
    let ends: Vec<i64> = parsed.bars.iter().map(|b| b.interval_end_ms).collect();
    assert_eq!(ends, vec![3600000, 7200000, 10800000]);
    assert_eq!(parsed.bars[1].volume, 0.0);
    assert_eq!(parsed.report.dropped_nonpositive_close, 1);
    assert_eq!(parsed.report.errors.len(), 1);
    assert_eq!(parsed.report.total_in, 4);
    assert_eq!(parsed.report.total_out, 3);
}

fn small_dataset(seed: u64) -> nbp_core::synth::SyntheticDataset {
    let mut config = RegimeConfig { horizon_hours: 100, ..RegimeConfig::with_regime(Regime::Mixed, seed) };
    config.flow.uninformed_intensity = 0.5;
    config.flow.informed_intensity = 0.01;
    gen_dataset(&config).unwrap()
}

#[test]
fn synthetic_files_parse_without_drops_and_round_trip() {
    let data = small_dataset(1);
    for format in [TradeFormat::Csv, TradeFormat::Jsonl] {
        let mut buf = Vec::new();
        write_trades(&mut buf, &data.trades, format).unwrap();
        let parsed = parse_trades(buf.as_slice(), format).unwrap();
        assert_eq!(parsed.report.total_out, data.trades.len());
        assert_eq!(parsed.report.dropped(), 0);
        assert_eq!(parsed.trades, data.trades);
        let mut again = Vec::new();
        write_trades(&mut again, &parsed.trades, format).unwrap();
        assert_eq!(buf, again);
    }
    let mut buf = Vec::new();
    write_spot_csv(&mut buf, &data.spot).unwrap();
    let spot = parse_spot(buf.as_slice()).unwrap();
    assert_eq!(spot.bars, data.spot);
    assert_eq!(spot.report.total_out, data.spot.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_row_order_parses_to_sorted_output(seed in any::<u64>(), shuffle in any::<u64>()) {
        let data = small_dataset(seed % 4);
        let mut buf = Vec::new();
        write_trades(&mut buf, &data.trades, TradeFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().skip(1).collect();
        // Fisher-Yates with a simple LCG
        let mut state = shuffle | 1;
        for i in (1..lines.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lines.swap(i, (state >> 33) as usize % (i + 1));
        }
        let parsed = parse_trades(csv(&lines).as_bytes(), TradeFormat::Csv).unwrap();
        prop_assert!(parsed.trades.windows(2).all(|w| w[0].timestamp_ms <= w[1].timestamp_ms));
        prop_assert_eq!(parsed.trades.len(), data.trades.len());
        prop_assert!(parsed.report.reconciles());
    }
}

