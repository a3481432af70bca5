//! Least-squares power-law fits on log-log axes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 5;

fn in_window(x: f64, window: (f64, f64)) -> bool {
    let slack = 1e-12;
    x >= window.0 * (1.0 - slack) && x <= window.1 * (1.0 + slack)
}

/// Fits `ln y = intercept + slope · ln x` over the points with `x` in `window`.
pub fn rate_fit(x: &[f64], y: &[f64], window: (f64, f64)) -> Result<RateFit> {
    if x.len() != y.len() {
        return Err(Error::InsufficientData("x and y differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(xi, _)| in_window(**xi, window))
        .map(|(a, b)| (*a, *b))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points in window [{}, {}], need {MIN_FIT_POINTS}",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((a, b)) = pts.iter().find(|(a, b)| !(*a > 0.0 && *b > 0.0)) {
        return Err(Error::Domain(format!(
            "log-log fit needs positive values, got ({a}, {b})"
        )));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        window,
        points: pts.len(),
    })
}

/// `n` log-spaced values from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    lo
                } else if i + 1 == n {
                    hi
                } else {
                    (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect(),
    }
}
