//! Single-loop Boltzmann weights and the decay rate `c_Φ`.

use crate::error::{domain, Result};
use crate::interaction::self_w_unchecked;
use crate::loop_paths::{sample_loop, TimeGrid};
use crate::potentials::{boltzmann, ModelParams};
use crate::stats::{linear_fit, Estimate, LinearFit, MeanVar};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// `E^{βj}_{0,0}[e^{-βW(ω)}]` by Monte Carlo over bridge loops on the grid with `m` steps per period.
pub fn single_loop_weight<R: Rng + ?Sized>(j: usize, params: &ModelParams, m: usize, n_samples: usize, rng: &mut R) -> Result<Estimate> {
    if j == 0 {
        return domain("loop length must be at least 1");
    }
    if n_samples < 2 {
        return domain("need at least two samples");
    }
    let grid = TimeGrid::new(params.beta, m)?;
    if j == 1 || params.potential.is_zero() {
        return Ok(Estimate::new(1.0, 0.0));
    }
    let origin = vec![0.0; params.dim];
    let pot = params.potential;
    let mut acc = MeanVar::new();
    for _ in 0..n_samples {
        let l = sample_loop(&origin, j, &grid, rng)?;
        acc.push(boltzmann(params.beta, self_w_unchecked(&l, &pot, grid.dt())));
    }
    Ok(Estimate::new(acc.mean(), acc.se()))
}

/// `-(1/3) log E[exp(-β² ∫₀¹ Φ(β^{1/2}|B_s - B_1 - B̃_s|) ds)]` for independent
/// standard Brownian motions `B`, `B̃` from the origin, with a left Riemann
/// sum on `m` steps. The SE is from the delta method.
pub fn estimate_cphi_bound<R: Rng + ?Sized>(params: &ModelParams, m: usize, n_samples: usize, rng: &mut R) -> Result<Estimate> {
    if m == 0 || n_samples < 2 {
        return domain("need a positive grid and at least two samples");
    }
    if params.potential.is_zero() {
        return Ok(Estimate::new(0.0, 0.0));
    }
    let d = params.dim;
    let beta = params.beta;
    let pot = params.potential;
    let h = 1.0 / m as f64;
    let sh = h.sqrt();
    let mut b = vec![0.0; (m + 1) * d];
    let mut bt = vec![0.0; m * d];
    let mut acc = MeanVar::new();
    for _ in 0..n_samples {
        for k in 1..=m {
            for i in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                b[k * d + i] = b[(k - 1) * d + i] + sh * z;
            }
        }
        for k in 1..m {
            for i in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                bt[k * d + i] = bt[(k - 1) * d + i] + sh * z;
            }
        }
        let mut integral = 0.0;
        for k in 0..m {
            let mut r2 = 0.0;
            for i in 0..d {
                let g = b[k * d + i] - b[m * d + i] - bt[k * d + i];
                r2 += g * g;
            }
            integral += pot.phi_sq(beta * r2);
        }
        acc.push(boltzmann(beta * beta, integral * h));
    }
    let mean = acc.mean();
    if mean == 0.0 {
        return Ok(Estimate::new(f64::INFINITY, f64::NAN));
    }
    Ok(Estimate::new(-mean.ln() / 3.0 + 0.0, acc.se() / (3.0 * mean)))
}

/// Weights `E^{βj}_{0,0}[e^{-βW}]` over a range of `j` with a fitted exponential rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub js: Vec<usize>,
    pub weights: Vec<Estimate>,
    /// Fit of `log weight` against `j`.
    pub fit: LinearFit,
    /// `ĉ = -slope`.
    pub rate: Estimate,
    /// 95% interval for `ĉ`.
    pub rate_ci: (f64, f64),
}

impl DecayFit {
    /// Point estimates strictly decrease in `j`.
    pub fn is_decreasing(&self) -> bool {
        self.weights.windows(2).all(|w| w[1].value < w[0].value)
    }
}

pub fn decay_fit<R: Rng + ?Sized>(params: &ModelParams, m: usize, js: &[usize], n_samples: usize, rng: &mut R) -> Result<DecayFit> {
    if js.len() < 3 {
        return domain("decay fit needs at least three loop lengths");
    }
    let mut weights = Vec::with_capacity(js.len());
    for &j in js {
        let w = single_loop_weight(j, params, m, n_samples, rng)?;
        if !(w.value > 0.0) {
            return domain(format!("single-loop weight at j = {j} estimated as 0; increase samples"));
        }
        weights.push(w);
    }
    let x: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let y: Vec<f64> = weights.iter().map(|w| w.value.ln()).collect();
    let sy: Vec<f64> = weights.iter().map(|w| w.se / w.value).collect();
    let fit = linear_fit(&x, &y, &sy);
    let (lo, hi) = fit.slope_ci(0.95);
    Ok(DecayFit { js: js.to_vec(), weights, fit, rate: Estimate::new(-fit.slope, fit.slope_se), rate_ci: (-hi, -lo) })
}
