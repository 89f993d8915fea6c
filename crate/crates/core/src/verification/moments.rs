//! Exponential moments of `N_Δ`, FKG domination and free-gas recovery.

use super::decay::single_loop_weight;
use crate::configuration::Configuration;
use crate::error::{domain, Result};
use crate::gibbs_kernels::{Chain, KernelKind, McmcConfig};
use crate::loop_measures::{expected_particles, measure_mass, sample_ph, LoopMeasureSpec};
use crate::stats::{autocorrelation_factor, batch_means, chi2_gof, compound_poisson_pmf, histogram, Estimate, MeanVar, TestResult};
use rand::Rng;
use serde::Serialize;

/// `E[e^{cN}]` for the Poisson process with the (truncated) weights of `spec`.
pub fn poisson_exp_moment(spec: &LoopMeasureSpec, c: f64) -> f64 {
    let v = spec.domain().volume();
    let s: f64 = spec.weights().iter().enumerate().map(|(k, w)| w * ((c * (k + 1) as f64).exp() - 1.0)).sum();
    (v * s).exp()
}

/// `M^H_Δ[e^{cℓ}] = |Δ| Σ_j w_j e^{cj} E^{βj}_{0,0}[e^{-βW}]` with the
/// single-loop weights estimated by Monte Carlo. Once the remaining terms,
/// bounded with weight 1, fall below `1e-6` of the running sum they are
/// added at that bound, which can only raise the result.
pub fn ph_intensity_moment<R: Rng + ?Sized>(spec: &LoopMeasureSpec, c: f64, n_samples: usize, rng: &mut R) -> Result<Estimate> {
    let v = spec.domain().volume();
    let m = spec.grid().steps_per_beta();
    let f: Vec<f64> = spec.weights().iter().enumerate().map(|(k, w)| v * w * (c * (k + 1) as f64).exp()).collect();
    let (mut value, mut var) = (0.0, 0.0);
    for (k, fk) in f.iter().enumerate() {
        let rest: f64 = f[k..].iter().sum();
        if rest <= 1e-6 * value {
            value += rest;
            break;
        }
        let e = single_loop_weight(k + 1, spec.params(), m, n_samples, rng)?;
        value += fk * e.value;
        var += (fk * e.se).powi(2);
    }
    Ok(Estimate::new(value, var.sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpMomentReport {
    pub c: f64,
    pub empirical: Estimate,
    pub bound: Estimate,
    pub passes: bool,
}

/// Checks `E[e^{cN_Δ}] ≤ exp(M^H_Δ[e^{cℓ}])` on a stationary trace of `N_Δ`,
/// allowing `z` combined standard errors.
pub fn exp_moment_test(n_trace: &[f64], c: f64, intensity: Estimate, z: f64) -> Result<ExpMomentReport> {
    if n_trace.len() < 4 {
        return domain("exp-moment test needs a trace");
    }
    let vals: Vec<f64> = n_trace.iter().map(|n| (c * n).exp()).collect();
    let empirical = batch_means(&vals, 20);
    let b = intensity.value.exp();
    let bound = Estimate::new(b, b * intensity.se);
    let passes = empirical.value <= bound.value + z * (empirical.se.powi(2) + bound.se.powi(2)).sqrt();
    Ok(ExpMomentReport { c, empirical, bound, passes })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FkgReport {
    pub kernel_mean: Estimate,
    pub ph_mean: Estimate,
    pub passes: bool,
}

/// Mean of an increasing observable under the Dirichlet chain against its
/// mean under `P^H_Λ`, one-sided at `z` combined standard errors.
pub fn fkg_test<R: Rng, F>(spec: &LoopMeasureSpec, cfg: McmcConfig, n_ph: usize, z: f64, observable: F, chain_rng: R, ph_rng: &mut impl Rng) -> Result<FkgReport>
where
    F: Fn(&Configuration) -> f64,
{
    let mut chain = Chain::dirichlet(spec, &Configuration::empty(), cfg, chain_rng)?;
    let mut trace = Vec::new();
    chain.run(|c, _| {
        trace.push(observable(&c.configuration()));
        Ok(())
    })?;
    let kernel_mean = batch_means(&trace, 20);
    let ph: MeanVar = (0..n_ph).map(|_| observable(&sample_ph(spec, ph_rng))).collect();
    let ph_mean = Estimate::new(ph.mean(), ph.se());
    let passes = kernel_mean.value <= ph_mean.value + z * (kernel_mean.se.powi(2) + ph_mean.se.powi(2)).sqrt();
    Ok(FkgReport { kernel_mean, ph_mean, passes })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeGasReport {
    pub kind: KernelKind,
    pub mean_n: Estimate,
    pub target_mean: f64,
    pub mean_passes: bool,
    pub histogram: TestResult,
    pub histogram_passes: bool,
}

/// Compares a chain's `N_Λ` trace with the compound-Poisson law of the free
/// gas with the weights of `spec`: mean within `z` SE and χ² at level `alpha`.
pub fn free_gas_check(spec: &LoopMeasureSpec, kind: KernelKind, n_trace: &[f64], target_mean: f64, z: f64, alpha: f64) -> FreeGasReport {
    let mean_n = batch_means(n_trace, 20);
    let tau = autocorrelation_factor(n_trace, 20);
    let counts = histogram(n_trace.iter().map(|&x| x as usize));
    let sum_w: f64 = spec.weights().iter().sum();
    let f: Vec<f64> = spec.weights().iter().map(|w| w / sum_w).collect();
    let probs = compound_poisson_pmf(measure_mass(spec), &f, counts.len().max(1) + 20);
    let histogram = chi2_gof(&counts, &probs, tau);
    FreeGasReport {
        kind,
        mean_n,
        target_mean,
        mean_passes: (mean_n.value - target_mean).abs() <= z * mean_n.se,
        histogram_passes: histogram.passes(alpha),
        histogram,
    }
}

/// Free-gas recovery for the free kernel, whose stationary law is the
/// Poisson process itself: mean `N_Λ` equals `expected_particles`.
pub fn free_gas_test<R: Rng>(spec: &LoopMeasureSpec, cfg: McmcConfig, z: f64, alpha: f64, rng: R) -> Result<FreeGasReport> {
    if !spec.params().potential.is_zero() {
        return domain("free-gas test requires the zero potential");
    }
    let mut chain = Chain::free(spec, &Configuration::empty(), cfg, rng)?;
    let rep = chain.run(|_, _| Ok(()))?;
    Ok(free_gas_check(spec, KernelKind::Free, &rep.traces.n, expected_particles(spec), z, alpha))
}
