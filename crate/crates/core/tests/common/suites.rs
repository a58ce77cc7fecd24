//! Seeded checks shared by the core integration tests and the acceptance
//! runner. Each returns a one-line summary on success.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nbp_core::ivcurve::{curve_series, CurveWindow};
use nbp_core::option_math::{
    bs_delta, bs_price, classify_moneyness, implied_vol, norm_cdf, ClassifiedTrade, Moneyness,
    OptionContext,
};
use nbp_core::pressure::{
    bucket_trades, BucketKey, Disaggregation, FixedUsd, IntervalAggregate, IntervalWidth,
    MaturityBucket, PressureSeries, SeriesOptions,
};
use nbp_core::regress::{
    evaluate_verdict, ols_fit, Design, RegressionResult, RegressionSpec, SampleFilter, SpecName,
    StdErrorKind, Support, VerdictConfig, VerdictInputs,
};
use nbp_core::tick::{Direction, OptionType};
use nbp_core::time::MS_PER_HOUR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles::{close, marsaglia_cdf, norm_cdf_reference, normal_equations, richardson_derivative};

pub type Outcome = Result<String, String>;

fn random_context(rng: &mut ChaCha8Rng) -> OptionContext {
    let spot = rng.random_range(1_000.0..60_000.0);
    let tau = rng.random_range(1.0 / 365.0..2.0);
    let sigma = rng.random_range(0.05..2.5);
    let log_m = sigma * f64::sqrt(tau) * rng.random_range(-2.5..2.5);
    OptionContext {
        spot,
        rate: rng.random_range(-0.02..0.08),
        tau,
        strike: spot * f64::exp(log_m),
        sigma,
        option_type: if rng.random_bool(0.5) { OptionType::Call } else { OptionType::Put },
    }
}

/// Delta against finite differences of the price, implied-vol inversion of
/// the price, and the normal CDF against two reference routes.
pub fn option_math_suite(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_delta = 0.0f64;
    for _ in 0..100 {
        let ctx = random_context(&mut rng);
        let delta = bs_delta(&ctx).map_err(|e| e.to_string())?;
        let fd = richardson_derivative(
            |s| bs_price(&OptionContext { spot: s, ..ctx }).unwrap(),
            ctx.spot,
            ctx.spot * 1e-3,
        );
        let rel = (fd - delta).abs() / delta.abs();
        worst_delta = worst_delta.max(rel);
        if !(rel <= 1e-6) {
            return Err(format!("delta {delta} vs finite difference {fd} at {ctx:?}"));
        }
    }

    let mut worst_iv = 0.0f64;
    let mut inversions = 0;
    for i in 0..=100 {
        let sigma = 0.05 + (5.0 - 0.05) * f64::from(i) / 100.0;
        for tau in [0.25, 1.0] {
            for moneyness in [0.9, 1.0, 1.1] {
                for option_type in OptionType::TRADED {
                    let ctx = OptionContext {
                        spot: 10_000.0,
                        rate: 0.01,
                        tau,
                        strike: 10_000.0 * moneyness,
                        sigma,
                        option_type,
                    };
                    let price = bs_price(&ctx).map_err(|e| e.to_string())?;
                    let iv = implied_vol(price, &ctx).map_err(|e| format!("{e} at {ctx:?}"))?;
                    worst_iv = worst_iv.max((iv - sigma).abs());
                    if !((iv - sigma).abs() <= 1e-8) {
                        return Err(format!("implied vol {iv} for sigma {sigma} at {ctx:?}"));
                    }
                    inversions += 1;
                }
            }
        }
    }

    let reference = norm_cdf_reference();
    if reference.len() != 1000 {
        return Err(format!("reference has {} points", reference.len()));
    }
    let mut worst_cdf = 0.0f64;
    for &(x, p) in &reference {
        let ours = norm_cdf(x);
        let series = marsaglia_cdf(x);
        worst_cdf = worst_cdf.max((ours - p).abs()).max((ours - series).abs());
        if !((ours - p).abs() <= 1e-12 && (ours - series).abs() <= 1e-12) {
            return Err(format!("norm_cdf({x}) = {ours}, reference {p}, series {series}"));
        }
    }
    Ok(format!(
        "delta rel err {worst_delta:.1e} (100 ctx), iv err {worst_iv:.1e} ({inversions} inversions), cdf err {worst_cdf:.1e} (1000 pts)"
    ))
}

/// Random classified trades spread over `intervals` hourly intervals.
pub fn random_trades(rng: &mut ChaCha8Rng, n: usize, intervals: i64) -> Vec<ClassifiedTrade> {
    let start = 1_577_836_800_000i64;
    let mut trades: Vec<ClassifiedTrade> = (0..n)
        .map(|_| {
            let abs_delta = rng.random_range(0.021..0.979);
            ClassifiedTrade {
                timestamp_ms: start + rng.random_range(0..intervals * MS_PER_HOUR),
                option_type: if rng.random_bool(0.5) { OptionType::Call } else { OptionType::Put },
                direction: if rng.random_bool(0.5) {
                    Direction::BuyerInitiated
                } else {
                    Direction::SellerInitiated
                },
                moneyness: classify_moneyness(abs_delta),
                maturity: MaturityBucket::SPECIFIC[rng.random_range(0..3)],
                abs_delta,
                notional_usd: rng.random_range(50.0..500_000.0),
                implied_vol: rng.random_range(0.3..1.5),
            }
        })
        .collect();
    trades.sort_by_key(|t| t.timestamp_ms);
    trades
}

fn series_of(trades: &[ClassifiedTrade]) -> (BTreeMap<BucketKey, IntervalAggregate>, PressureSeries) {
    let aggregates = bucket_trades(trades, IntervalWidth::HOUR, Disaggregation::default());
    let series = PressureSeries::build(&aggregates, &[], SeriesOptions::default());
    (aggregates, series)
}

/// Checks the per-interval identities of the series built from `trades`.
pub fn check_identities(series: &PressureSeries) -> Result<(), String> {
    for row in &series.rows {
        let mut total = FixedUsd::ZERO;
        for (k, cat) in row.categories.iter().enumerate() {
            let (a_call, a_put) = (cat.a_usd(OptionType::Call), cat.a_usd(OptionType::Put));
            if a_call != cat.v + cat.d_call || a_put != cat.v - cat.d_call {
                return Err(format!("interval {} category {k}: A != V ± D", row.interval));
            }
            if cat.d_usd(OptionType::Put) != -cat.d_usd(OptionType::Call) {
                return Err(format!("interval {} category {k}: D_put != -D_call", row.interval));
            }
            total += cat.a[0] + cat.a[1];
        }
        if total != row.imbalance {
            return Err(format!("interval {}: sum of pressures != imbalance", row.interval));
        }
    }
    Ok(())
}

/// Exact decomposition identities, antisymmetry and scale equivariance.
pub fn pressure_algebra_suite(seed: u64, n: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trades = random_trades(&mut rng, n, 200);
    let (aggregates, series) = series_of(&trades);
    check_identities(&series)?;

    // independent f64 recomputation of each bucket's pressure
    let mut naive: BTreeMap<(i64, usize, usize), (f64, u32)> = BTreeMap::new();
    for t in &trades {
        let sign = if t.direction == Direction::BuyerInitiated { 1.0 } else { -1.0 };
        let key = (t.timestamp_ms.div_euclid(MS_PER_HOUR), t.moneyness.index().unwrap(), t.option_type.index());
        let e = naive.entry(key).or_default();
        e.0 += sign * t.notional_usd * t.abs_delta;
        e.1 += 1;
    }
    for ((interval, k, j), (sum, count)) in &naive {
        let row = series.row(*interval).ok_or(format!("missing interval {interval}"))?;
        let a = row.categories[*k].a[*j].to_usd();
        if (a - sum).abs() > f64::from(*count) * 1e-6 + sum.abs() * 1e-12 {
            return Err(format!("interval {interval}: pressure {a} vs direct sum {sum}"));
        }
    }

    let flipped: Vec<ClassifiedTrade> =
        trades.iter().map(|t| ClassifiedTrade { direction: t.direction.flipped(), ..*t }).collect();
    let (_, flipped_series) = series_of(&flipped);
    for (a, b) in series.rows.iter().zip(&flipped_series.rows) {
        if a.imbalance != -b.imbalance {
            return Err(format!("interval {}: imbalance not antisymmetric", a.interval));
        }
        for (ca, cb) in a.categories.iter().zip(&b.categories) {
            if ca.a[0] != -cb.a[0] || ca.a[1] != -cb.a[1] || ca.v != -cb.v || ca.d_call != -cb.d_call {
                return Err(format!("interval {}: pressures not antisymmetric", a.interval));
            }
            if ca.tv != cb.tv {
                return Err(format!("interval {}: volume changed under relabeling", a.interval));
            }
        }
    }

    let quantum = FixedUsd(1).to_usd();
    for lambda in [0.5, 3.0] {
        let scaled: Vec<ClassifiedTrade> = trades
            .iter()
            .map(|t| ClassifiedTrade { notional_usd: t.notional_usd * lambda, ..*t })
            .collect();
        let (_, scaled_series) = series_of(&scaled);
        check_identities(&scaled_series)?;
        for (a, b) in series.rows.iter().zip(&scaled_series.rows) {
            let tol = f64::from(a.trade_count) * (1.0 + lambda) * 0.5 * quantum * 1.000_001;
            let bad = |x: f64, y: f64| (y - lambda * x).abs() > tol;
            if bad(a.imbalance.to_usd(), b.imbalance.to_usd()) {
                return Err(format!("interval {}: imbalance not scale equivariant", a.interval));
            }
            for (ca, cb) in a.categories.iter().zip(&b.categories) {
                if bad(ca.a_usd(OptionType::Call), cb.a_usd(OptionType::Call))
                    || bad(ca.a_usd(OptionType::Put), cb.a_usd(OptionType::Put))
                    || bad(ca.v, cb.v)
                    || bad(ca.d_call, cb.d_call)
                {
                    return Err(format!("interval {}: pressure not scale equivariant for {lambda}", a.interval));
                }
            }
        }
    }
    let nonempty = aggregates.len();
    Ok(format!("{n} trades, {} intervals, {nonempty} buckets", series.rows.len()))
}

/// QR least squares against explicit normal equations on random problems.
pub fn ols_oracle_suite(seed: u64, problems: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for p in 0..problems {
        let k = rng.random_range(1..=6usize);
        let n = rng.random_range((k + 3).max(10)..=500usize);
        let regressors = k - 1;
        let scales: Vec<f64> = (0..regressors).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| scales.iter().map(|s| s * rng.random_range(-1.0..1.0)).collect())
            .collect();
        let beta: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| beta[0] + r.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>() + rng.random_range(-1.0..1.0))
            .collect();
        let names: Vec<String> = (1..k).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let fit = ols_fit(&Design::with_intercept(&refs, &rows), &y, StdErrorKind::Classical)
            .map_err(|e| format!("problem {p}: {e}"))?;
        let (b_ref, se_ref) = if regressors == 0 {
            let mean = y.iter().sum::<f64>() / n as f64;
            let s2 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (vec![mean], vec![(s2 / n as f64).sqrt()])
        } else {
            normal_equations(&rows, &y)
        };
        for i in 0..k {
            worst = worst
                .max((fit.coefficients[i] - b_ref[i]).abs() / b_ref[i].abs().max(1.0))
                .max((fit.std_errors[i] - se_ref[i]).abs() / se_ref[i].abs().max(1.0));
            if !close(fit.coefficients[i], b_ref[i], 1e-8) || !close(fit.std_errors[i], se_ref[i], 1e-8) {
                return Err(format!(
                    "problem {p} (n={n}, k={k}) coef {i}: {} ± {} vs {} ± {}",
                    fit.coefficients[i], fit.std_errors[i], b_ref[i], se_ref[i]
                ));
            }
        }
    }
    Ok(format!("{problems} problems, max rel err {worst:.1e}"))
}

/// Standard error giving a two-sided p-value inside the band of the
/// significance marks (`***` < 1%, `**` < 5%, `*` < 10%, none above).
pub fn se_for_stars(coef: f64, stars: usize) -> f64 {
    let t = match stars {
        3 => 4.0,
        2 => 2.2,
        1 => 1.8,
        _ => 1.0,
    };
    coef.abs() / t
}

/// `[const, r, v, x3, x4, lag]` result from coefficients and significance marks.
pub fn starred_result(names: [&str; 6], coefs: [f64; 6], stars: [usize; 6], nobs: usize) -> RegressionResult {
    let ses: Vec<f64> = coefs.iter().zip(stars).map(|(&c, s)| se_for_stars(c, s)).collect();
    RegressionResult::from_summary(&names, &coefs, &ses, nobs)
}

pub fn year_spec(name: SpecName, moneyness: Moneyness, option_type: OptionType, year: i32) -> RegressionSpec {
    RegressionSpec {
        name,
        dependent: format!("dsigma_{}_{}", moneyness.label(), option_type.label()),
        regressors: ["r", "v", "x3", "x4", "lag"].iter().map(|s| s.to_string()).collect(),
        filter: SampleFilter { years: Some((year, year)), ..SampleFilter::default() },
        maturity: MaturityBucket::All,
        moneyness: Some(moneyness),
        option_type: Some(option_type),
        atm_driver: None,
        horizon_hours: None,
    }
}

/// ATM call rows for 2019: the moneyness-pressure test and the
/// volatility/directional decomposition test.
pub fn atm_call_2019_rows() -> ((RegressionSpec, RegressionResult), (RegressionSpec, RegressionResult)) {
    let atm = starred_result(
        ["const", "r", "v", "A_ATM_call", "A_ATM_put", "lag"],
        [-0.27, 6.609, 0.067, 3.072, 1.264, -0.458],
        [3, 0, 3, 3, 0, 3],
        5868,
    );
    let chen = starred_result(
        ["const", "r", "v", "V_ATM", "D_ATM_call", "lag"],
        [-0.27, 6.609, 0.067, 4.336, 1.808, -0.458],
        [3, 0, 3, 3, 0, 3],
        5868,
    );
    (
        (year_spec(SpecName::BollenAtm, Moneyness::Atm, OptionType::Call, 2019), atm),
        (year_spec(SpecName::ChenDecomposition, Moneyness::Atm, OptionType::Call, 2019), chen),
    )
}

/// Verdicts on the 2019 ATM call coefficient patterns and on a null pattern.
pub fn verdict_fidelity_suite() -> Outcome {
    let (atm, chen) = atm_call_2019_rows();
    if !(atm.1.coefficients[5] == -0.458 && atm.1.p_values[5] < 0.01) {
        return Err("lag coefficient input is not -0.458 with p < 0.01".into());
    }
    let atm_rows = [atm];
    let chen_rows = [chen];
    let inputs = VerdictInputs { bollen_atm: &atm_rows, bollen_k: &[], chen: &chen_rows };
    let verdict = evaluate_verdict(&inputs, &VerdictConfig::default()).map_err(|e| e.to_string())?;
    if verdict.limits_to_arbitrage != Support::Supported {
        return Err("negative significant lag did not support limits to arbitrage".into());
    }
    if verdict.volatility_learning != Support::Supported
        || verdict.directional_learning != Support::NotSupported
        || verdict.directional_positive.is_some()
    {
        return Err(format!(
            "decomposition pattern gave volatility {:?}, directional {:?}",
            verdict.volatility_learning, verdict.directional_learning
        ));
    }

    let null_atm = starred_result(
        ["const", "r", "v", "A_ATM_call", "A_ATM_put", "lag"],
        [0.01, 0.5, 0.001, 0.2, -0.1, -0.02],
        [0; 6],
        2000,
    );
    let null_chen = starred_result(
        ["const", "r", "v", "V_ATM", "D_ATM_call", "lag"],
        [0.01, 0.5, 0.001, 0.1, 0.1, -0.02],
        [0; 6],
        2000,
    );
    let null_atm = [(atm_rows[0].0.clone(), null_atm)];
    let null_chen = [(chen_rows[0].0.clone(), null_chen)];
    let inputs = VerdictInputs { bollen_atm: &null_atm, bollen_k: &[], chen: &null_chen };
    let null = evaluate_verdict(&inputs, &VerdictConfig::default()).map_err(|e| e.to_string())?;
    if null.limits_to_arbitrage.is_supported()
        || null.volatility_learning.is_supported()
        || null.directional_learning.is_supported()
    {
        return Err("insignificant pattern supported a hypothesis".into());
    }
    Ok("lag -0.458*** -> limits to arbitrage; V 4.336***, D 1.808 -> volatility learning only".into())
}

/// Curve statistics of a synthetic smile with raised wings, classified
/// through Black-Scholes deltas, plus the volatility spread of a 2020
/// yearly level.
pub fn ivcurve_sign_suite() -> Outcome {
    let spot = 10_000.0;
    let tau = 30.0 / 365.0;
    let smile = |strike: f64| 0.6 + 2.0 * f64::ln(strike / spot).powi(2);
    let start = 1_578_268_800_000i64; // Monday 2020-01-06
    let mut trades = Vec::new();
    for i in 0..400 {
        let strike = spot * f64::exp(-0.8 + 1.6 * f64::from(i) / 399.0);
        for option_type in OptionType::TRADED {
            let sigma = smile(strike);
            let ctx = OptionContext { spot, rate: 0.0, tau, strike, sigma, option_type };
            let delta = bs_delta(&ctx).map_err(|e| e.to_string())?;
            trades.push(ClassifiedTrade {
                timestamp_ms: start + i64::from(i) * 60_000,
                option_type,
                direction: Direction::BuyerInitiated,
                moneyness: classify_moneyness(delta),
                maturity: MaturityBucket::Long,
                abs_delta: delta.abs(),
                notional_usd: spot,
                implied_vol: sigma,
            });
        }
    }
    let curves = curve_series(&trades, CurveWindow::Weekly, |_| Some(0.5));
    let [curve] = curves.as_slice() else {
        return Err(format!("expected one weekly window, got {}", curves.len()));
    };
    let stats = curve.stats.clone().map_err(|e| e.to_string())?;
    if !(stats.left_slope < 0.0 && 0.0 < stats.right_slope) {
        return Err(format!("slopes {} / {}", stats.left_slope, stats.right_slope));
    }
    let spread = nbp_core::ivcurve::curve_stats(&[Some(0.9), Some(0.8), Some(0.76), Some(0.8), Some(0.9)], 0.64)
        .map_err(|e| e.to_string())?;
    if spread.vol_spread != 0.64 - 0.76 || (spread.vol_spread * 100.0).round() / 100.0 != -0.12 {
        return Err(format!("volatility spread {}", spread.vol_spread));
    }
    Ok(format!(
        "left {:.4} < 0 < right {:.4}; VS(0.64, 0.76) = {:.2}",
        stats.left_slope, stats.right_slope, spread.vol_spread
    ))
}
