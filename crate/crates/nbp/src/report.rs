//! Output renderers: regression tables (TSV), the JSON report, the pressure
//! series and the IV-curve CSV. All renderers are pure functions of their
//! inputs so repeated runs produce identical bytes.

use std::fmt::Write as _;

use nbp_core::battery::SpecOutcome;
use nbp_core::ivcurve::WindowCurve;
use nbp_core::pressure::{MaturityBucket, TodSlot};
use nbp_core::regress::{evaluate_verdict, RegressError, SpecName, VerdictConfig, VerdictInputs};
use nbp_core::{CleaningReport, HypothesisVerdict, Moneyness, OptionType, PressureSeries, RegressionResult, RegressionSpec};
use serde::{Deserialize, Serialize};

use crate::ingest::SpotReport;

pub const SCHEMA_VERSION: u32 = 1;

pub const SERIES_COLUMNS: &str =
    "t,moneyness,type,maturity_bucket,tod_slot,N,A,D_call,V,TV,rel_D,rel_V,mean_iv,delta_iv,r,v,delta_v";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedSpec {
    pub label: String,
    pub spec: RegressionSpec,
    /// Part of the combination the verdict is evaluated on.
    pub primary: bool,
    pub result: Option<RegressionResult>,
    pub error: Option<String>,
    /// The failure is a permitted "insufficient rows" notice.
    pub insufficient_rows: bool,
}

impl ReportedSpec {
    pub fn from_outcome(outcome: &SpecOutcome, primary: bool) -> Self {
        let (result, error, insufficient_rows) = match &outcome.result {
            Ok(r) => (Some(r.clone()), None, false),
            Err(e) => (None, Some(e.to_string()), matches!(e, RegressError::InsufficientRows { .. })),
        };
        ReportedSpec { label: outcome.spec.label(), spec: outcome.spec.clone(), primary, result, error, insufficient_rows }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub config_hash: String,
    /// Effective settings as `key = value` lines.
    pub config: String,
    pub cleaning: CleaningReport,
    pub spot: SpotReport,
    pub verdict_config: VerdictConfig,
    pub specs: Vec<ReportedSpec>,
    pub verdict: Option<HypothesisVerdict>,
    pub verdict_error: Option<String>,
    pub notices: Vec<String>,
}

impl AnalysisReport {
    /// Re-applies the verdict rules to the stored statistics of the primary
    /// combination.
    pub fn reevaluate(&self) -> Result<HypothesisVerdict, RegressError> {
        let collect = |name: SpecName| {
            self.specs
                .iter()
                .filter(|s| s.primary && s.spec.name == name)
                .filter_map(|s| s.result.clone().map(|r| (s.spec.clone(), r)))
                .collect::<Vec<_>>()
        };
        let bollen_atm = collect(SpecName::BollenAtm);
        let bollen_k = collect(SpecName::BollenK);
        let chen = collect(SpecName::ChenDecomposition);
        evaluate_verdict(&VerdictInputs { bollen_atm: &bollen_atm, bollen_k: &bollen_k, chen: &chen }, &self.verdict_config)
    }
}

/// Shortest round-trip form; scientific notation outside `[1e-6, 1e16)`.
fn num(x: f64) -> String {
    if !x.is_finite() {
        String::new()
    } else if x == 0.0 || (1e-6..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One row per specification: coefficients with significance stars, t
/// statistics in parentheses, R² and the number of observations.
pub fn regression_tsv(specs: &[ReportedSpec]) -> String {
    let mut s = String::from("spec\tdependent\tregressors\tb0\tb1\tb2\tb3\tb4\tb5\tr_squared\tnobs\tnote\n");
    for rs in specs {
        let _ = write!(s, "{}\t{}\tconst,{}", rs.label, rs.spec.dependent, rs.spec.regressors.join(","));
        match &rs.result {
            Some(r) => {
                for i in 0..6 {
                    match r.coefficients.get(i) {
                        Some(b) => {
                            let _ = write!(s, "\t{b:.4}{} ({:.2})", r.stars[i].marks(), r.t_stats[i]);
                        }
                        None => s.push('\t'),
                    }
                }
                let _ = writeln!(s, "\t{:.4}\t{}\t", r.r_squared, r.nobs);
            }
            None => {
                let _ = writeln!(s, "\t\t\t\t\t\t\t\t\t{}", rs.error.as_deref().unwrap_or(""));
            }
        }
    }
    s
}

/// Verdict summary as a two-column TSV.
pub fn verdict_tsv(verdict: &HypothesisVerdict) -> String {
    let support = |b: bool| if b { "supported" } else { "not supported" };
    let mut s = String::from("hypothesis\toutcome\n");
    let _ = writeln!(s, "limits_to_arbitrage\t{}", support(verdict.limits_to_arbitrage.is_supported()));
    let _ = writeln!(s, "volatility_learning\t{}", support(verdict.volatility_learning.is_supported()));
    let _ = writeln!(s, "directional_learning\t{}", support(verdict.directional_learning.is_supported()));
    let sign = match verdict.directional_positive {
        Some(true) => "positive",
        Some(false) => "negative",
        None => "",
    };
    let _ = writeln!(s, "directional_sign\t{sign}");
    let _ = writeln!(s, "wald_equal_p\t{}", opt(verdict.wald_equal_p));
    let _ = writeln!(s, "atm_volatility_pattern\t{}", verdict.atm_volatility_pattern);
    let _ = writeln!(s, "strength_ratio\t{}", opt(verdict.strength_ratio));
    s
}

/// Pressure series rows, interval then category order, for cells with trades.
pub fn series_csv(series: &[PressureSeries]) -> String {
    let mut s = String::from(SERIES_COLUMNS);
    s.push('\n');
    for ps in series {
        let maturity: MaturityBucket = ps.options.maturity;
        let tod: TodSlot = ps.options.tod;
        for row in &ps.rows {
            let t = ps.interval_start_ms(row.interval);
            for k in Moneyness::CLASSIFIED {
                let Some(cat) = row.category(k) else { continue };
                for j in OptionType::TRADED {
                    if cat.trade_count[j.index()] == 0 {
                        continue;
                    }
                    let _ = writeln!(
                        s,
                        "{t},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        k.label(),
                        j.label(),
                        maturity.label(),
                        tod.label(),
                        num(row.imbalance.to_usd()),
                        num(cat.a_usd(j)),
                        num(cat.d_call),
                        num(cat.v),
                        num(cat.tv.to_usd()),
                        num(cat.rel_d),
                        num(cat.rel_v),
                        opt(cat.mean_iv[j.index()]),
                        opt(cat.delta_iv[j.index()]),
                        opt(row.r),
                        opt(row.v),
                        opt(row.delta_volume),
                    );
                }
            }
        }
    }
    s
}

/// Curve statistics per window; windows lacking a required category are
/// skipped.
pub fn curve_csv(curves: &[WindowCurve]) -> String {
    let mut s = String::from(
        "window_end,level,left_slope,right_slope,vol_spread,relative_iv_1,relative_iv_2,relative_iv_3,relative_iv_4,relative_iv_5\n",
    );
    for c in curves {
        let Ok(stats) = &c.stats else { continue };
        let _ = write!(
            s,
            "{},{},{},{},{}",
            c.window_end_ms,
            num(stats.level),
            num(stats.left_slope),
            num(stats.right_slope),
            num(stats.vol_spread)
        );
        for r in stats.relative_iv {
            let _ = write!(s, ",{}", opt(r));
        }
        s.push('\n');
    }
    s
}
