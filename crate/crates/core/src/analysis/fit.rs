//! Power-law fits `value ≈ C · n^p` by least squares in log-log coordinates.

use serde::{Deserialize, Serialize};

use crate::ergodic::{Diagnostic, IterationTrace};
use crate::error::{Error, Result};

/// Fewest points accepted in a fit window.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
    /// Inclusive `[n_lo, n_hi]` as requested.
    pub window: (usize, usize),
    pub points: usize,
}

/// Fits `(n, value)` pairs with `n` in `window`.
pub fn fit_power_law(data: &[(usize, f64)], window: (usize, usize)) -> Result<RateFit> {
    let (lo, hi) = window;
    if lo > hi || lo == 0 {
        return Err(Error::Domain(format!("bad fit window [{lo}, {hi}]")));
    }
    let pts = in_window(data, window)?;
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "fit window holds a single n".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        exponent: slope,
        constant: intercept.exp(),
        r_squared,
        window,
        points: pts.len(),
    })
}

/// Geometric mean of `value · n^{−exponent}` over the window: the constant
/// `C` in `value ≈ C n^exponent` with the exponent held fixed.
pub fn fit_constant(data: &[(usize, f64)], window: (usize, usize), exponent: f64) -> Result<f64> {
    let pts = in_window(data, window)?;
    let mean = pts.iter().map(|(x, y)| y - exponent * x).sum::<f64>() / pts.len() as f64;
    Ok(mean.exp())
}

/// `(ln n, ln value)` inside the window; errors on too few or nonpositive points.
fn in_window(data: &[(usize, f64)], (lo, hi): (usize, usize)) -> Result<Vec<(f64, f64)>> {
    let mut pts = Vec::new();
    for &(n, v) in data.iter().filter(|(n, _)| (lo..=hi).contains(n)) {
        if v.is_nan() || v <= 0.0 || !v.is_finite() {
            return Err(Error::NonPositive { n, value: v });
        }
        pts.push(((n as f64).ln(), v.ln()));
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points in window [{lo}, {hi}], need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    Ok(pts)
}

/// Last half-decade `[⌈n_hi/√10⌉, n_hi]` of the checkpoints.
pub fn default_window(trace: &IterationTrace) -> (usize, usize) {
    let hi = trace.points.last().map_or(0, |p| p.n);
    let lo = ((hi as f64) / 10f64.sqrt()).ceil() as usize;
    (lo.max(1), hi)
}

pub fn fit_rate(
    trace: &IterationTrace,
    diagnostic: Diagnostic,
    window: Option<(usize, usize)>,
) -> Result<RateFit> {
    let window = window.unwrap_or_else(|| default_window(trace));
    fit_power_law(&trace.series(diagnostic), window)
}
