//! Independent reference implementations used by the oracle tests.

#![allow(dead_code)]

/// Normal CDF from Marsaglia's Taylor series
/// `Φ(x) = 1/2 + φ(x) Σ x^(2n+1) / (1·3·5···(2n+1))`.
pub fn marsaglia_cdf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut n = 1.0;
    while term.abs() > 1e-300 && n < 2000.0 {
        term *= x2 / (2.0 * n + 1.0);
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
        n += 1.0;
    }
    let pdf = (-0.5 * x2).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 + pdf * sum
}

/// `(x, Φ(x))` pairs evaluated at 40 significant digits.
pub fn norm_cdf_reference() -> Vec<(f64, f64)> {
    include_str!("../data/norm_cdf_reference.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let (x, p) = line.split_once(',').expect("two columns");
            (x.parse().expect("x"), p.parse().expect("cdf"))
        })
        .collect()
}

/// European option price by Simpson quadrature of the discounted payoff
/// against the risk-neutral lognormal density.
pub fn quadrature_price(spot: f64, strike: f64, rate: f64, sigma: f64, tau: f64, call: bool) -> f64 {
    let steps = 20_000;
    let drift = (rate - 0.5 * sigma * sigma) * tau;
    let vol = sigma * tau.sqrt();
    // integrate only where the payoff is positive, so the kink is an endpoint
    let kink = ((strike / spot).ln() - drift) / vol;
    let (lo, hi) = if call { (kink.max(-12.0), kink.max(12.0)) } else { (kink.min(-12.0), kink.min(12.0)) };
    let h = (hi - lo) / steps as f64;
    let f = |z: f64| {
        let s_t = spot * (drift + vol * z).exp();
        let payoff = if call { (s_t - strike).max(0.0) } else { (strike - s_t).max(0.0) };
        payoff * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    (-rate * tau).exp() * acc * h / 3.0
}

/// Derivative by Richardson-extrapolated central differences.
pub fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// `(XᵀX)⁻¹` by Gauss-Jordan elimination with partial pivoting, where `X`
/// is `rows` with a leading column of ones.
pub fn gram_inverse(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = rows[0].len() + 1;
    let mut m = vec![vec![0.0; 2 * k]; k];
    for row in rows {
        let x: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for a in 0..k {
            for b in 0..k {
                m[a][b] += x[a] * x[b];
            }
        }
    }
    for (r, row) in m.iter_mut().enumerate() {
        row[k + r] = 1.0;
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..k {
            if r != col {
                let factor = m[r][col];
                if factor != 0.0 {
                    for c in 0..2 * k {
                        m[r][c] -= factor * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|row| row[k..].to_vec()).collect()
}

/// OLS via explicit normal equations `(XᵀX)⁻¹Xᵀy`. Returns coefficients,
/// classical standard errors and residuals. `rows` excludes the intercept,
/// which is prepended.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (beta, se, _) = normal_equations_full(rows, y);
    (beta, se)
}

pub fn normal_equations_full(rows: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let k = rows[0].len() + 1;
    let x = |i: usize, j: usize| if j == 0 { 1.0 } else { rows[i][j - 1] };
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            xty[a] += x(i, a) * y[i];
        }
    }
    let inv = gram_inverse(rows);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..k).map(|j| x(i, j) * beta[j]).sum::<f64>())
        .collect();
    let s2 = resid.iter().map(|e| e * e).sum::<f64>() / (n - k) as f64;
    let se = (0..k).map(|a| (s2 * inv[a][a]).sqrt()).collect();
    (beta, se, resid)
}

/// White standard errors with the `n/(n-k)` factor from the explicit
/// sandwich `(XᵀX)⁻¹ Xᵀ diag(e²) X (XᵀX)⁻¹`.
pub fn hc1_std_errors(rows: &[Vec<f64>], resid: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let k = rows[0].len() + 1;
    let inv = gram_inverse(rows);
    let mut meat = vec![vec![0.0; k]; k];
    for (row, e) in rows.iter().zip(resid) {
        let x: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += e * e * x[a] * x[b];
            }
        }
    }
    let factor = n as f64 / (n - k) as f64;
    (0..k)
        .map(|a| {
            let mut v = 0.0;
            for i in 0..k {
                for j in 0..k {
                    v += inv[a][i] * meat[i][j] * inv[j][a];
                }
            }
            (factor * v).sqrt()
        })
        .collect()
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
