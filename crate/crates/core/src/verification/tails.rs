//! Diameter tails of bridge loops against the Gaussian bound `C e^{-t²/(8βj)}`.

use crate::error::{domain, Result};
use crate::loop_paths::{sample_loop, TimeGrid};
use crate::potentials::ModelParams;
use crate::stats::{linear_fit, Estimate, LinearFit};
use rand::Rng;
use serde::Serialize;

/// Diameters of `n` bridge loops of length `j` rooted at the origin.
pub fn loop_diameters<R: Rng + ?Sized>(j: usize, params: &ModelParams, m: usize, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let grid = TimeGrid::new(params.beta, m)?;
    let origin = vec![0.0; params.dim];
    (0..n).map(|_| sample_loop(&origin, j, &grid, rng).map(|l| l.diam())).collect()
}

/// Empirical `P(diam > t)` at each `t`, with binomial SE.
pub fn empirical_tail(diams: &[f64], ts: &[f64]) -> Vec<Estimate> {
    let mut sorted = diams.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    ts.iter()
        .map(|&t| {
            let above = sorted.len() - sorted.partition_point(|&d| d <= t);
            let p = above as f64 / n;
            Estimate::new(p, (p * (1.0 - p) / n).sqrt())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiameterTailReport {
    pub j: usize,
    pub ts: Vec<f64>,
    pub tail: Vec<Estimate>,
    /// Fit of `log P(diam > t)` against `t²/(8βj)`.
    pub fit: LinearFit,
    /// Slope allowed by the bound.
    pub bound_slope: f64,
    pub nonincreasing: bool,
    pub passes: bool,
}

/// Tail at `points` thresholds spread from the median diameter out to the
/// depth where at least `min_count` samples remain; passes when the fitted
/// slope is at most `-1` up to `z` standard errors.
pub fn diameter_tail_test<R: Rng + ?Sized>(j: usize, params: &ModelParams, m: usize, n_samples: usize, points: usize, z: f64, rng: &mut R) -> Result<DiameterTailReport> {
    const MIN_COUNT: usize = 30;
    if n_samples < 4 * MIN_COUNT || points < 3 {
        return domain("diameter tail test needs more samples or thresholds");
    }
    let diams = loop_diameters(j, params, m, n_samples, rng)?;
    let mut sorted = diams.clone();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[n_samples / 2];
    let hi = sorted[n_samples - MIN_COUNT];
    let ts: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
    let tail = empirical_tail(&diams, &ts);
    let scale = 8.0 * params.beta * j as f64;
    let x: Vec<f64> = ts.iter().map(|t| t * t / scale).collect();
    let y: Vec<f64> = tail.iter().map(|e| e.value.ln()).collect();
    let sy: Vec<f64> = tail.iter().map(|e| e.se / e.value).collect();
    let fit = linear_fit(&x, &y, &sy);
    let nonincreasing = tail.windows(2).all(|w| w[1].value <= w[0].value);
    let passes = nonincreasing && fit.slope <= -1.0 + z * fit.slope_se;
    Ok(DiameterTailReport { j, ts, tail, fit, bound_slope: -1.0, nonincreasing, passes })
}
