use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{RegressError, Result};
use crate::special::student_t_two_sided_p;

/// Column-major design matrix with named columns. The intercept, when wanted,
/// is an explicit column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    names: Vec<String>,
    nrows: usize,
    columns: Vec<Vec<f64>>,
}

impl Design {
    pub fn new(names: Vec<String>, nrows: usize) -> Self {
        let columns = names.iter().map(|_| Vec::with_capacity(nrows)).collect();
        Design { names, nrows: 0, columns }
    }

    /// Builds a design from row-major data, prepending an intercept.
    pub fn with_intercept(names: &[&str], rows: &[Vec<f64>]) -> Self {
        let mut all: Vec<String> = vec![String::from("const")];
        all.extend(names.iter().map(|s| String::from(*s)));
        let mut design = Design::new(all, rows.len());
        for row in rows {
            let mut full = Vec::with_capacity(row.len() + 1);
            full.push(1.0);
            full.extend_from_slice(row);
            design.push_row(&full);
        }
        design
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        for (col, &x) in self.columns.iter_mut().zip(row) {
            col.push(x);
        }
        self.nrows += 1;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Copy with column `j` multiplied by `factor`.
    pub fn scaled_column(&self, j: usize, factor: f64) -> Self {
        let mut out = self.clone();
        out.columns[j].iter_mut().for_each(|x| *x *= factor);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StdErrorKind {
    Classical,
    /// White heteroskedasticity-consistent errors with the n/(n-k) (HC1)
    /// small-sample factor.
    Robust,
}

/// Two-sided significance marks at 10% / 5% / 1%.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stars {
    None,
    Ten,
    Five,
    One,
}

impl Stars {
    pub fn from_p(p: f64) -> Self {
        if p < 0.01 {
            Stars::One
        } else if p < 0.05 {
            Stars::Five
        } else if p < 0.10 {
            Stars::Ten
        } else {
            Stars::None
        }
    }

    pub fn marks(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::Ten => "*",
            Stars::Five => "**",
            Stars::One => "***",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Row-major `k x k` coefficient covariance.
    pub covariance: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub nobs: usize,
    pub dof: usize,
    pub stars: Vec<Stars>,
    pub se_kind: StdErrorKind,
}

impl RegressionResult {
    /// Result assembled from reported statistics rather than a fit, e.g. to
    /// re-evaluate a regression table. Off-diagonal covariances are taken as
    /// zero and p-values follow from `t = coef / se` with `nobs - k` degrees
    /// of freedom.
    pub fn from_summary(names: &[&str], coefficients: &[f64], std_errors: &[f64], nobs: usize) -> Self {
        let k = coefficients.len();
        assert_eq!(std_errors.len(), k);
        let dof = nobs.saturating_sub(k).max(1);
        let mut covariance = vec![0.0; k * k];
        for i in 0..k {
            covariance[i * k + i] = std_errors[i] * std_errors[i];
        }
        let (t_stats, p_values) = inference(coefficients, std_errors, dof);
        RegressionResult {
            names: names.iter().map(|s| String::from(*s)).collect(),
            coefficients: coefficients.to_vec(),
            std_errors: std_errors.to_vec(),
            stars: p_values.iter().map(|&p| Stars::from_p(p)).collect(),
            t_stats,
            p_values,
            covariance,
            r_squared: f64::NAN,
            residuals: Vec::new(),
            nobs,
            dof,
            se_kind: StdErrorKind::Classical,
        }
    }

    pub fn ncoef(&self) -> usize {
        self.coefficients.len()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.ncoef() + j]
    }

    pub fn significant(&self, i: usize, level: f64) -> bool {
        self.p_values[i] < level
    }
}

fn inference(coefficients: &[f64], std_errors: &[f64], dof: usize) -> (Vec<f64>, Vec<f64>) {
    coefficients
        .iter()
        .zip(std_errors)
        .map(|(&b, &se)| {
            let t = if se > 0.0 {
                b / se
            } else if b == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(b)
            };
            (t, student_t_two_sided_p(t, dof as f64))
        })
        .unzip()
}

const RANK_TOL: f64 = 1e-10;

/// Ordinary least squares via Householder QR on unit-norm columns.
pub fn ols_fit(design: &Design, y: &[f64], se_kind: StdErrorKind) -> Result<RegressionResult> {
    let n = design.nrows();
    let k = design.ncols();
    if y.len() != n {
        return Err(RegressError::Shape { rows: n, len: y.len() });
    }
    if n <= k {
        return Err(RegressError::InsufficientRows { nobs: n, ncols: k });
    }
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    if !(sst > 0.0) {
        return Err(RegressError::DegenerateDependent);
    }

    let mut scale = Vec::with_capacity(k);
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, col) in design.columns.iter().enumerate() {
        let norm = libm::sqrt(col.iter().map(|x| x * x).sum::<f64>());
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(rank_error(design, j));
        }
        scale.push(norm);
        a.push(col.iter().map(|x| x / norm).collect());
    }
    let mut qty = y.to_vec();
    let mut r = vec![0.0; k * k];
    for j in 0..k {
        let alpha = {
            let norm = libm::sqrt(a[j][j..].iter().map(|x| x * x).sum::<f64>());
            if a[j][j] > 0.0 {
                -norm
            } else {
                norm
            }
        };
        if alpha.abs() < RANK_TOL {
            return Err(rank_error(design, j));
        }
        // v = x - alpha e_1, stored in place
        a[j][j] -= alpha;
        let vnorm2: f64 = a[j][j..].iter().map(|x| x * x).sum();
        let (done, rest) = a.split_at_mut(j + 1);
        let v = &done[j][j..];
        for col in rest.iter_mut() {
            let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            col[j..].iter_mut().zip(v).for_each(|(c, p)| *c -= f * p);
        }
        let dot: f64 = v.iter().zip(&qty[j..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vnorm2;
        qty[j..].iter_mut().zip(v).for_each(|(c, p)| *c -= f * p);
        r[j * k + j] = alpha;
        for (i, col) in rest.iter().enumerate() {
            r[j * k + j + 1 + i] = col[j];
        }
    }

    // R^{-1}, upper triangular
    let mut rinv = vec![0.0; k * k];
    for i in (0..k).rev() {
        rinv[i * k + i] = 1.0 / r[i * k + i];
        for j in (i + 1)..k {
            let s: f64 = ((i + 1)..=j).map(|m| r[i * k + m] * rinv[m * k + j]).sum();
            rinv[i * k + j] = -s / r[i * k + i];
        }
    }
    let scaled_beta: Vec<f64> = (0..k)
        .map(|i| (i..k).map(|j| rinv[i * k + j] * qty[j]).sum())
        .collect();
    let coefficients: Vec<f64> = scaled_beta.iter().zip(&scale).map(|(b, s)| b / s).collect();

    let residuals: Vec<f64> = (0..n)
        .map(|row| {
            let fit: f64 = (0..k).map(|j| design.columns[j][row] * coefficients[j]).sum();
            y[row] - fit
        })
        .collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - k;

    // (X̃'X̃)^{-1} = R^{-1} R^{-T}
    let mut xtx_inv = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let s: f64 = (j..k).map(|m| rinv[i * k + m] * rinv[j * k + m]).sum();
            xtx_inv[i * k + j] = s;
            xtx_inv[j * k + i] = s;
        }
    }
    let scaled_cov = match se_kind {
        StdErrorKind::Classical => {
            let s2 = ssr / dof as f64;
            xtx_inv.iter().map(|v| v * s2).collect::<Vec<f64>>()
        }
        StdErrorKind::Robust => {
            let mut meat = vec![0.0; k * k];
            let mut row = vec![0.0; k];
            for (obs, e) in residuals.iter().enumerate() {
                for j in 0..k {
                    row[j] = design.columns[j][obs] / scale[j];
                }
                let w = e * e;
                for i in 0..k {
                    for j in i..k {
                        meat[i * k + j] += w * row[i] * row[j];
                    }
                }
            }
            for i in 0..k {
                for j in 0..i {
                    meat[i * k + j] = meat[j * k + i];
                }
            }
            let tmp = matmul(&xtx_inv, &meat, k);
            let sandwich = matmul(&tmp, &xtx_inv, k);
            let factor = n as f64 / dof as f64;
            sandwich.iter().map(|v| v * factor).collect()
        }
    };
    let mut covariance = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            covariance[i * k + j] = scaled_cov[i * k + j] / (scale[i] * scale[j]);
        }
    }
    let std_errors: Vec<f64> = (0..k).map(|i| libm::sqrt(covariance[i * k + i].max(0.0))).collect();
    let (t_stats, p_values) = inference(&coefficients, &std_errors, dof);
    Ok(RegressionResult {
        names: design.names.clone(),
        stars: p_values.iter().map(|&p| Stars::from_p(p)).collect(),
        coefficients,
        std_errors,
        t_stats,
        p_values,
        covariance,
        r_squared: (1.0 - ssr / sst).clamp(0.0, 1.0),
        residuals,
        nobs: n,
        dof,
        se_kind,
    })
}

fn rank_error(design: &Design, j: usize) -> RegressError {
    RegressError::RankDeficient { column: design.names[j].clone(), hint: None }
}

fn matmul(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for m in 0..k {
            let aim = a[i * k + m];
            for j in 0..k {
                out[i * k + j] += aim * b[m * k + j];
            }
        }
    }
    out
}

/// Two-sided p-value for `coef[a] == coef[b]` using the estimated covariance.
pub fn wald_equal(result: &RegressionResult, a: usize, b: usize) -> Result<f64> {
    let k = result.ncoef();
    for index in [a, b] {
        if index >= k {
            return Err(RegressError::Index { index, ncols: k });
        }
    }
    if a == b {
        return Ok(1.0);
    }
    let diff = result.coefficients[a] - result.coefficients[b];
    let var = result.cov(a, a) + result.cov(b, b) - result.cov(a, b) - result.cov(b, a);
    if !(var > 0.0) {
        return Ok(if diff == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(student_t_two_sided_p(diff / libm::sqrt(var), result.dof as f64))
}
