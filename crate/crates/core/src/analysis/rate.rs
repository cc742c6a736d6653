//! Log-log fits of regret against the horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub horizons: Vec<usize>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// False when some stderr was zero and the fit fell back to equal weights.
    pub weighted: bool,
}

impl RateFit {
    /// `exp(intercept) T^slope`.
    pub fn predict(&self, horizon: f64) -> f64 {
        self.intercept.exp() * horizon.powf(self.slope)
    }
}

/// Weighted least squares of `ln mean` on `ln T`. Weights are the inverse
/// variances of `ln mean`, `(mean / stderr)²`, unless some stderr is zero.
pub fn rate_fit(horizons: &[usize], means: &[f64], stderrs: &[f64]) -> Result<RateFit> {
    let k = horizons.len();
    if means.len() != k || stderrs.len() != k {
        return Err(Error::dims("rate fit series", k, means.len().min(stderrs.len())));
    }
    if k < 3 {
        return Err(Error::param("horizons", format!("need at least 3 horizons, got {k}")));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(Error::param("horizons", "horizons must be positive and strictly increasing"));
    }
    if (horizons[k - 1] as f64) < 10.0 * horizons[0] as f64 {
        return Err(Error::param("horizons", "horizons must span at least one decade"));
    }
    if let Some(m) = means.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return Err(Error::param("means", format!("regrets must be positive and finite to take logs, got {m}")));
    }
    if stderrs.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::param("stderrs", "standard errors must be nonnegative and finite"));
    }
    let weighted = stderrs.iter().all(|&s| s > 0.0);
    let xs: Vec<f64> = horizons.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let ws: Vec<f64> = if weighted {
        means.iter().zip(stderrs).map(|(m, s)| (m / s).powi(2)).collect()
    } else {
        vec![1.0; k]
    };
    let total: f64 = ws.iter().sum();
    let x_bar = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / total;
    let y_bar = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / total;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..k {
        let dx = xs[i] - x_bar;
        let dy = ys[i] - y_bar;
        sxx += ws[i] * dx * dx;
        sxy += ws[i] * dx * dy;
        syy += ws[i] * dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    if !slope.is_finite() {
        return Err(Error::NonFinite("rate fit slope"));
    }
    Ok(RateFit {
        horizons: horizons.to_vec(),
        means: means.to_vec(),
        stderrs: stderrs.to_vec(),
        slope,
        intercept,
        r2,
        weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HORIZONS: [usize; 4] = [16, 64, 256, 1024];

    #[test]
    fn exact_power_laws() {
        let sqrt: Vec<f64> = HORIZONS.iter().map(|&t| (t as f64).sqrt()).collect();
        let fit = rate_fit(&HORIZONS, &sqrt, &[0.1; 4]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12 && (fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.predict(100.0) - 10.0).abs() < 1e-9);
        let linear: Vec<f64> = HORIZONS.iter().map(|&t| 3.0 * t as f64).collect();
        let fit = rate_fit(&HORIZONS, &linear, &[0.0; 4]).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12 && !fit.weighted);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_fit(&[10, 20], &[1.0, 2.0], &[0.1, 0.1]).is_err());
        assert!(rate_fit(&[10, 20, 50], &[1.0, 2.0, 3.0], &[0.1; 3]).is_err());
        assert!(rate_fit(&[10, 50, 100], &[1.0, 0.0, 3.0], &[0.1; 3]).is_err());
        assert!(rate_fit(&[10, 100, 50], &[1.0, 2.0, 3.0], &[0.1; 3]).is_err());
    }
}
