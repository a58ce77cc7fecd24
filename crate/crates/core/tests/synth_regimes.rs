use nbp_core::battery::{run_battery, BatteryConfig, BatteryOutput};
use nbp_core::option_math::{bs_price, classify_trades, implied_vol, Classifier, Moneyness, OptionContext};
use nbp_core::regress::SpecName;
use nbp_core::synth::{gen_dataset, gen_underlying, Regime, RegimeConfig, SignalKind, SyntheticDataset};
use nbp_core::tick::{CleaningReport, OptionType};

fn dataset(regime: Regime, seed: u64, horizon_hours: i64) -> SyntheticDataset {
    gen_dataset(&RegimeConfig { horizon_hours, ..RegimeConfig::with_regime(regime, seed) }).unwrap()
}

fn battery(data: &SyntheticDataset) -> BatteryOutput {
    let classifier = Classifier::new(data.truth.sigma_source, 0.0, &data.spot);
    let mut report = CleaningReport { total_in: data.trades.len(), total_out: data.trades.len(), ..Default::default() };
    let classified = classify_trades(&data.trades, &classifier, &mut report);
    assert_eq!(report.total_out, data.trades.len(), "classification dropped trades");
    run_battery(&classified, &data.spot, &BatteryConfig::verdict_only())
}

fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

#[test]
fn jumps_fatten_return_tails() {
    let base = RegimeConfig { horizon_hours: 4000, ..RegimeConfig::with_regime(Regime::NullNoise, 21) };
    let mut calm = base;
    calm.underlying.jump_intensity = 0.0;
    let mut jumpy = base;
    jumpy.underlying.jump_intensity = 200.0;
    let returns = |c: &RegimeConfig| {
        let bars = gen_underlying(c, 5).bars;
        bars.windows(2).map(|w| (w[1].close / w[0].close).ln()).collect::<Vec<_>>()
    };
    let (k_calm, k_jumpy) = (excess_kurtosis(&returns(&calm)), excess_kurtosis(&returns(&jumpy)));
    assert!(k_jumpy > k_calm + 1.0, "{k_jumpy} vs {k_calm}");
    assert!(returns(&jumpy).iter().all(|r| r.is_finite()));
}

#[test]
fn datasets_are_deterministic_per_seed() {
    let a = dataset(Regime::Mixed, 4, 150);
    let b = dataset(Regime::Mixed, 4, 150);
    let c = dataset(Regime::Mixed, 5, 150);
    assert_eq!(a, b);
    assert_ne!(a.trades, c.trades);
    assert_eq!(a.spot.len(), c.spot.len());
}

#[test]
fn trades_pass_screening_and_iv_round_trips() {
    for regime in Regime::ALL {
        let data = dataset(regime, 2, 100);
        for t in &data.trades {
            t.screen().unwrap();
            let ctx = OptionContext {
                spot: t.index_price,
                rate: 0.0,
                tau: t.tau(),
                strike: t.strike,
                sigma: t.implied_vol,
                option_type: t.option_type,
            };
            let price = bs_price(&ctx).unwrap();
            assert_eq!(price / t.index_price, t.option_price_btc);
            let iv = implied_vol(t.option_price_btc * t.index_price, &ctx).unwrap();
            assert!((iv - t.implied_vol).abs() < 1e-8, "{iv} vs {}", t.implied_vol);
        }
    }
}

#[test]
fn limits_to_arbitrage_lag_negative_at_one_percent() {
    let seeds = 100;
    let mut hits = 0;
    for seed in 0..seeds {
        let data = dataset(Regime::LimitsToArbitrage, seed, 2000);
        assert_eq!(data.truth.config.mm.kappa, 0.4);
        let out = battery(&data);
        let fit = out
            .outcomes
            .iter()
            .find(|o| o.spec.name == SpecName::BollenAtm && o.spec.option_type == Some(OptionType::Call))
            .and_then(|o| o.result.as_ref().ok())
            .expect("ATM call fit");
        if fit.coefficients[5] < 0.0 && fit.p_values[5] < 0.01 {
            hits += 1;
        }
    }
    assert!(hits * 100 >= 95 * seeds, "{hits} of {seeds}");
}

#[test]
fn mixed_regime_loads_on_both_decomposition_terms() {
    let seeds = 20;
    let mut hits = 0;
    for seed in 0..seeds {
        let out = battery(&dataset(Regime::Mixed, seed, 2000));
        let both = out.outcomes.iter().any(|o| {
            o.spec.name == SpecName::ChenDecomposition
                && o.spec.moneyness == Some(Moneyness::Otm)
                && o.result.as_ref().is_ok_and(|r| r.p_values[3] < 0.05 && r.p_values[4] < 0.05)
        });
        hits += usize::from(both);
    }
    assert!(hits * 10 >= 9 * seeds as usize, "{hits} of {seeds}");
}

#[test]
fn directional_flow_sign_matches_planted_drift() {
    let data = dataset(Regime::DirectionalLearning, 3, 2000);
    let out = battery(&data);
    let series = &out.series[0];
    let width = series.options.width;
    let (mut agree, mut total) = (0, 0);
    for event in data.truth.events.iter().filter(|e| e.kind == SignalKind::Direction) {
        let mut d = 0.0;
        for i in width.index_of(event.start_ms)..width.index_of(event.effect_start_ms) {
            if let Some(row) = series.row(i) {
                d += row.category(Moneyness::Otm).unwrap().d_call + row.category(Moneyness::Dotm).unwrap().d_call;
            }
        }
        total += 1;
        agree += usize::from(d.signum() == f64::from(event.sign));
    }
    assert!(total > 10 && agree * 10 >= total * 9, "{agree} of {total}");
    let verdict = out.verdict.unwrap();
    assert_eq!(verdict.directional_positive, Some(true));
}
