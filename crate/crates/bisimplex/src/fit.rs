//! Small least-squares fits for slope extraction.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// `y ~ c + s x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

/// `y ~ c + s x + p ln x`: exponential rate with a power-law prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpPowerFit {
    pub intercept: f64,
    pub slope: f64,
    pub power: f64,
}

/// Least squares for `sum_j beta_j f_j(x)` via normal equations with
/// column scaling.
fn lstsq<const N: usize>(rows: &[[f64; N]], y: &[f64]) -> Result<[f64; N]> {
    if rows.len() < N || rows.len() != y.len() {
        return Err(Error::Validation(format!("fit needs at least {N} points, got {}", rows.len())));
    }
    let mut scale = [0.0; N];
    for r in rows {
        for j in 0..N {
            scale[j] = f64::max(scale[j], r[j].abs());
        }
    }
    if scale.iter().any(|&s| s == 0.0) {
        return Err(Error::Validation("fit basis has a zero column".into()));
    }
    let mut a = [[0.0; N]; N];
    let mut b = [0.0; N];
    for (r, &yv) in rows.iter().zip(y) {
        for i in 0..N {
            b[i] += r[i] / scale[i] * yv;
            for j in 0..N {
                a[i][j] += r[i] / scale[i] * r[j] / scale[j];
            }
        }
    }
    for col in 0..N {
        let p = (col..N).max_by(|&x, &z| a[x][col].abs().total_cmp(&a[z][col].abs())).unwrap_or(col);
        if a[p][col].abs() < 1e-300 {
            return Err(Error::Validation("singular fit".into()));
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..N {
            let m = a[r][col] / a[col][col];
            for k in col..N {
                a[r][k] -= m * a[col][k];
            }
            b[r] -= m * b[col];
        }
    }
    let mut x = [0.0; N];
    for r in (0..N).rev() {
        let mut s = b[r];
        for k in r + 1..N {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    Ok(std::array::from_fn(|j| x[j] / scale[j]))
}

pub fn fit_linear(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let rows: Vec<[f64; 2]> = x.iter().map(|&t| [1.0, t]).collect();
    let [intercept, slope] = lstsq(&rows, y)?;
    Ok(LinearFit { intercept, slope })
}

pub fn fit_exp_power(x: &[f64], y: &[f64]) -> Result<ExpPowerFit> {
    if x.iter().any(|&t| t <= 0.0) {
        return Err(Error::Domain("fit_exp_power needs x > 0".into()));
    }
    let rows: Vec<[f64; 3]> = x.iter().map(|&t| [1.0, t, t.ln()]).collect();
    let [intercept, slope, power] = lstsq(&rows, y)?;
    Ok(ExpPowerFit { intercept, slope, power })
}

/// `n` evenly spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_models() {
        let x = linspace(5.0, 20.0, 31);
        let y: Vec<f64> = x.iter().map(|t| 0.3 - 0.5 * t - 1.5 * t.ln()).collect();
        let f = fit_exp_power(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-10 && (f.power + 1.5).abs() < 1e-9, "{f:?}");
        let l = fit_linear(&x, &x.iter().map(|t| 2.0 * t - 1.0).collect::<Vec<_>>()).unwrap();
        assert!((l.slope - 2.0).abs() < 1e-12 && (l.intercept + 1.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_linear(&[1.0], &[1.0]).is_err());
        assert!(fit_exp_power(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
