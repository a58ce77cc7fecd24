//! Sign and significance rules turning fitted pressure regressions into
//! verdicts on limits to arbitrage, volatility learning and directional
//! learning.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::ols::{wald_equal, RegressionResult};
use super::specs::RegressionSpec;
use super::{RegressError, Result};

/// Coefficient slots in the 5-regressor layout `[const, r, v, x3, x4, lag]`.
const X3: usize = 3;
const X4: usize = 4;
const LAG: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Supported,
    NotSupported,
}

impl Support {
    fn from_bool(b: bool) -> Self {
        if b {
            Support::Supported
        } else {
            Support::NotSupported
        }
    }

    pub fn is_supported(self) -> bool {
        self == Support::Supported
    }
}

/// Multiple-testing adjustment within one hypothesis family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correction {
    None,
    /// Each of `m` tests in the family runs at `level / m`.
    Bonferroni,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictConfig {
    pub level: f64,
    /// Level at which coefficient equality must fail to be rejected for the
    /// ATM volatility pattern.
    pub wald_level: f64,
    pub correction: Correction,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig { level: 0.05, wald_level: 0.10, correction: Correction::Bonferroni }
    }
}

impl VerdictConfig {
    fn family_level(&self, m: usize) -> f64 {
        match self.correction {
            Correction::Bonferroni if m > 1 => self.level / m as f64,
            _ => self.level,
        }
    }
}

/// Fitted results grouped by specification.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerdictInputs<'a> {
    pub bollen_atm: &'a [(RegressionSpec, RegressionResult)],
    pub bollen_k: &'a [(RegressionSpec, RegressionResult)],
    pub chen: &'a [(RegressionSpec, RegressionResult)],
}

/// One coefficient consulted by a rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefEvidence {
    pub spec: String,
    pub coefficient: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    /// Significant at the family level after correction.
    pub significant: bool,
}

impl CoefEvidence {
    fn new(spec: &RegressionSpec, result: &RegressionResult, index: usize, level: f64) -> Result<Self> {
        if index >= result.ncoef() {
            return Err(RegressError::Index { index, ncols: result.ncoef() });
        }
        Ok(CoefEvidence {
            spec: spec.label(),
            coefficient: result.names[index].clone(),
            estimate: result.coefficients[index],
            std_error: result.std_errors[index],
            t_stat: result.t_stats[index],
            p_value: result.p_values[index],
            significant: result.significant(index, level),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdict {
    pub limits_to_arbitrage: Support,
    pub volatility_learning: Support,
    pub directional_learning: Support,
    /// Sign of the most significant directional coefficient when supported.
    pub directional_positive: Option<bool>,
    /// Equality test of the ATM call and put pressure coefficients in the
    /// first ATM regression.
    pub wald_equal_p: Option<f64>,
    /// Some ATM regression has both pressure coefficients positive, at least
    /// one significant, and equality not rejected.
    pub atm_volatility_pattern: bool,
    /// Volatility over directional coefficient where both are significant.
    pub strength_ratio: Option<f64>,
    pub lag_evidence: Vec<CoefEvidence>,
    pub volatility_evidence: Vec<CoefEvidence>,
    pub directional_evidence: Vec<CoefEvidence>,
    pub config: VerdictConfig,
}

/// Applies the verdict rules. Limits to arbitrage: a significantly negative
/// lagged-IV coefficient in an ATM regression. Volatility learning: a
/// significant volatility-demand coefficient in a decomposition regression.
/// Directional learning: a significant directional-demand coefficient.
pub fn evaluate_verdict(inputs: &VerdictInputs<'_>, config: &VerdictConfig) -> Result<HypothesisVerdict> {
    let mut missing = Vec::new();
    if inputs.bollen_atm.is_empty() {
        missing.push("bollen_atm");
    }
    if inputs.chen.is_empty() {
        missing.push("chen");
    }
    if !missing.is_empty() {
        return Err(RegressError::MissingInputs(missing));
    }

    let atm_level = config.family_level(inputs.bollen_atm.len());
    let chen_level = config.family_level(inputs.chen.len());

    let lag_evidence = inputs
        .bollen_atm
        .iter()
        .map(|(s, r)| CoefEvidence::new(s, r, LAG, atm_level))
        .collect::<Result<Vec<_>>>()?;
    let lta = lag_evidence.iter().any(|e| e.significant && e.estimate < 0.0);

    let volatility_evidence = inputs
        .chen
        .iter()
        .map(|(s, r)| CoefEvidence::new(s, r, X3, chen_level))
        .collect::<Result<Vec<_>>>()?;
    let directional_evidence = inputs
        .chen
        .iter()
        .map(|(s, r)| CoefEvidence::new(s, r, X4, chen_level))
        .collect::<Result<Vec<_>>>()?;
    let vol = volatility_evidence.iter().any(|e| e.significant);
    let directional_positive = directional_evidence
        .iter()
        .filter(|e| e.significant)
        .min_by(|a, b| a.p_value.total_cmp(&b.p_value))
        .map(|e| e.estimate > 0.0);

    let mut atm_pattern = false;
    let mut wald_equal_p = None;
    for (_, r) in inputs.bollen_atm {
        let p = wald_equal(r, X3, X4)?;
        wald_equal_p.get_or_insert(p);
        let (a3, a4) = (r.coefficients[X3], r.coefficients[X4]);
        let one_sig = r.significant(X3, atm_level) || r.significant(X4, atm_level);
        if a3 > 0.0 && a4 > 0.0 && one_sig && p > config.wald_level {
            atm_pattern = true;
        }
    }

    let strength_ratio = volatility_evidence
        .iter()
        .zip(&directional_evidence)
        .find(|(v, d)| v.significant && d.significant)
        .map(|(v, d)| v.estimate / d.estimate);

    Ok(HypothesisVerdict {
        limits_to_arbitrage: Support::from_bool(lta),
        volatility_learning: Support::from_bool(vol),
        directional_learning: Support::from_bool(directional_positive.is_some()),
        directional_positive,
        wald_equal_p,
        atm_volatility_pattern: atm_pattern,
        strength_ratio,
        lag_evidence,
        volatility_evidence,
        directional_evidence,
        config: *config,
    })
}
