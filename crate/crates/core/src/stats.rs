//! Small numerical statistics: summation, jackknife, regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise (cascade) summation; result does not depend on how the caller
/// chunked the work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(pairwise_sum(xs) / xs.len() as f64)
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> Result<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Ok(0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    Ok(pairwise_sum(&dev) / (xs.len() - 1) as f64)
}

/// Mean and delete-one jackknife standard error of the mean.
pub fn jackknife_mean(xs: &[f64]) -> Result<(f64, f64)> {
    let m = mean(xs)?;
    let n = xs.len();
    if n < 2 {
        return Ok((m, 0.0));
    }
    // For the mean the jackknife reduces to s/√n.
    Ok((m, (variance(xs)? / n as f64).sqrt()))
}

/// Delete-one jackknife for a smooth function of per-sample vector means.
///
/// `samples[i]` is the contribution of unitary `i`; `f` maps the mean
/// vector to the estimate. Returns `(f(mean), standard errors)`.
pub fn jackknife_fn<F>(samples: &[Vec<f64>], f: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let width = samples[0].len();
    if samples.iter().any(|s| s.len() != width) {
        return Err(Error::ShapeMismatch("jackknife samples differ in length".into()));
    }
    let column = |j: usize| -> Vec<f64> { samples.iter().map(|s| s[j]).collect() };
    let totals: Vec<f64> = (0..width).map(|j| pairwise_sum(&column(j))).collect();
    let full_mean: Vec<f64> = totals.iter().map(|t| t / n as f64).collect();
    let estimate = f(&full_mean)?;
    if n < 2 {
        return Ok((estimate.clone(), vec![0.0; estimate.len()]));
    }
    let mut leave_out = Vec::with_capacity(n);
    let mut buf = vec![0.0; width];
    for s in samples {
        for j in 0..width {
            buf[j] = (totals[j] - s[j]) / (n - 1) as f64;
        }
        leave_out.push(f(&buf)?);
    }
    let errs = (0..estimate.len())
        .map(|j| {
            let vals: Vec<f64> = leave_out.iter().map(|v| v[j]).collect();
            let m = pairwise_sum(&vals) / n as f64;
            let dev: Vec<f64> = vals.iter().map(|v| (v - m) * (v - m)).collect();
            ((n - 1) as f64 / n as f64 * pairwise_sum(&dev)).sqrt()
        })
        .collect();
    Ok((estimate, errs))
}

/// Ordinary least squares with intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Intercept first, then one coefficient per predictor.
    pub coef: Vec<f64>,
    pub stderr: Vec<f64>,
    pub residual_rms: f64,
}

/// Fit `y = c₀ + Σ_j c_j x_j`; `rows[i]` holds the predictors of point `i`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let n = rows.len();
    if n != y.len() {
        return Err(Error::ShapeMismatch("predictor and response lengths differ".into()));
    }
    let p = rows.first().map_or(0, |r| r.len()) + 1;
    if n <= p {
        return Err(Error::Degenerate(format!("{n} points for {p} parameters")));
    }
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let inv = xtx
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Degenerate("predictors are collinear".into()))?;
    let cond = xtx.norm() * inv.norm();
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::Degenerate("predictors are collinear".into()));
    }
    let beta = &inv * x.transpose() * &yv;
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let sigma2 = rss / (n - p) as f64;
    Ok(LinearFit {
        coef: beta.iter().copied().collect(),
        stderr: (0..p).map(|j| (sigma2 * inv[(j, j)]).max(0.0).sqrt()).collect(),
        residual_rms: (rss / n as f64).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub prefactor: f64,
}

/// Fit `y = A x^b` by least squares on `log y` against `log x`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch("x and y lengths differ".into()));
    }
    if x.len() < 3 {
        return Err(Error::Degenerate("need at least 3 points".into()));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Degenerate("power-law fit needs positive finite values".into()));
    }
    let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![v.ln()]).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = least_squares(&rows, &ly)?;
    Ok(PowerLawFit {
        exponent: fit.coef[1],
        exponent_stderr: fit.stderr[1],
        prefactor: fit.coef[0].exp(),
    })
}

/// Kolmogorov–Smirnov statistic of `xs` against the uniform law on `[a, b]`.
pub fn ks_uniform(xs: &[f64], a: f64, b: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if b <= a {
        return Err(Error::InvalidArgument("empty interval".into()));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - a) / (b - a)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn jackknife_fn_of_mean_is_standard_error() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let (m, se) = jackknife_mean(&xs).unwrap();
        let samples: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let (est, err) = jackknife_fn(&samples, |v| Ok(vec![v[0]])).unwrap();
        assert!((est[0] - m).abs() < 1e-12);
        assert!((err[0] - se).abs() < 1e-12);
    }

    #[test]
    fn power_law_exact() {
        let x: Vec<f64> = (1..8).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!(f.exponent_stderr < 1e-12);
        let c = fit_power_law(&x, &[3.0; 7]).unwrap();
        assert!(c.exponent.abs() < 1e-12 && c.exponent_stderr < 1e-12);
    }

    #[test]
    fn power_law_noisy_inverse_sqrt() {
        let mut r = rng::stream(7, &[]);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let x: Vec<f64> = (4..=12).map(|i| 2f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 / v.sqrt() * (1.0 + noise.sample(&mut r))).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.exponent + 0.5).abs() < 0.1);
    }

    #[test]
    fn degenerate_fits_are_errors() {
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, -2.0, 3.0]).is_err());
        assert!(fit_power_law(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn multi_predictor_fit() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + 2.0 * r[0] - 0.5 * r[1]).collect();
        let f = least_squares(&rows, &y).unwrap();
        assert!((f.coef[0] - 1.0).abs() < 1e-10);
        assert!((f.coef[1] - 2.0).abs() < 1e-10);
        assert!((f.coef[2] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn ks_uniform_detects_uniformity() {
        let mut r = rng::stream(8, &[]);
        let xs: Vec<f64> = (0..20_000).map(|_| r.random_range(-1.0..1.0)).collect();
        assert!(ks_uniform(&xs, -1.0, 1.0).unwrap() < 0.015);
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&sq, -1.0, 1.0).unwrap() > 0.3);
    }
}
