//! The Bosonic loop measure on a box and its Poisson samplers.
//!
//! `M_Λ = Σ_j (1/j) ∫_Λ dx P^{βj}_{x,x}`. The bridge mass `p_{βj}(x,x)` does
//! not depend on `x`, so the `j`-marginal has weights
//! `w_j = e^{βμj} (2πβj)^{-d/2} / j` and the root is uniform on the box.

use crate::configuration::Configuration;
use crate::error::{domain, Result};
use crate::interaction::self_w_unchecked;
use crate::loop_paths::{sample_loop, Containment, Domain, Loop, TimeGrid};
use crate::potentials::{boltzmann, ModelParams};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::Poisson;
use std::f64::consts::PI;

/// Loop measure on a box, truncated at `j_max`.
#[derive(Clone, Debug)]
pub struct LoopMeasureSpec {
    domain: Domain,
    params: ModelParams,
    grid: TimeGrid,
    j_max: usize,
    tail_tolerance: f64,
    weights: Vec<f64>,
    picker: Option<WeightedIndex<f64>>,
}

impl LoopMeasureSpec {
    /// Build the μ-weighted measure from `params`. The grid uses `params.beta`.
    pub fn new(domain: Domain, params: ModelParams, steps_per_beta: usize, j_max: usize, tail_tolerance: f64) -> Result<Self> {
        if domain.dim() != params.dim {
            return domain_err(format!("domain has dimension {}, model has {}", domain.dim(), params.dim));
        }
        if j_max == 0 {
            return domain_err("j_max must be at least 1".into());
        }
        if !(tail_tolerance > 0.0) {
            return domain_err(format!("tail tolerance must be positive, got {tail_tolerance}"));
        }
        let grid = TimeGrid::new(params.beta, steps_per_beta)?;
        let weights: Vec<f64> = (1..=j_max).map(|j| length_weight(&params, j)).collect();
        let picker = if weights.iter().any(|w| *w > 0.0) { Some(WeightedIndex::new(&weights).expect("nonnegative weights")) } else { None };
        let spec = Self { domain, params, grid, j_max, tail_tolerance, weights, picker };
        if !spec.tail_certified() {
            log::warn!(
                "loop-length tail beyond j_max = {} is not certified below {} (bound {})",
                j_max,
                tail_tolerance,
                spec.mass_tail_bound()
            );
        }
        Ok(spec)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// `w_j` for `j = 1..=j_max`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same measure on another box.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Self::new(domain, self.params, self.grid.steps_per_beta(), self.j_max, self.tail_tolerance)
    }

    /// Same measure with another chemical potential (`0` gives the reference `M_Λ`).
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.domain.clone(), self.params.with_mu(mu), self.grid.steps_per_beta(), self.j_max, self.tail_tolerance)
    }

    /// Upper bound on `|Λ| Σ_{j>j_max} w_j`; infinite when `βμ > 0`.
    pub fn mass_tail_bound(&self) -> f64 {
        let bm = self.params.beta * self.params.mu;
        if bm > 0.0 {
            return f64::INFINITY;
        }
        let d = self.params.dim as f64;
        let jm = self.j_max as f64;
        let pref = (2.0 * PI * self.params.beta).powf(-d / 2.0) * (bm * (jm + 1.0)).exp();
        self.domain.volume() * pref * (2.0 / d) * jm.powf(-d / 2.0)
    }

    /// Upper bound on `|Λ| Σ_{j>j_max} j·w_j`; infinite when `βμ > 0`.
    pub fn particles_tail_bound(&self) -> f64 {
        let bm = self.params.beta * self.params.mu;
        if bm > 0.0 {
            return f64::INFINITY;
        }
        let d = self.params.dim as f64;
        let jm = self.j_max as f64;
        let pref = (2.0 * PI * self.params.beta).powf(-d / 2.0) * (bm * (jm + 1.0)).exp();
        self.domain.volume() * pref * jm.powf(1.0 - d / 2.0) / (d / 2.0 - 1.0)
    }

    /// Tail bound for the interacting weights `e^{(βμ - c)j}` given a decay
    /// rate estimate `c > βμ`.
    pub fn interacting_tail_bound(&self, c: f64) -> f64 {
        let r = self.params.beta * self.params.mu - c;
        if r >= 0.0 {
            return f64::INFINITY;
        }
        let d = self.params.dim as f64;
        let jm = self.j_max as f64;
        let pref = (2.0 * PI * self.params.beta).powf(-d / 2.0) * (jm + 1.0).powf(-d / 2.0 - 1.0);
        self.domain.volume() * pref * (r * (jm + 1.0)).exp() / (1.0 - r.exp())
    }

    pub fn tail_certified(&self) -> bool {
        self.mass_tail_bound() <= self.tail_tolerance
    }

    /// Draw one loop from the normalized intensity: uniform root, `j ∝ w_j`, bridge path.
    pub fn propose_loop<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Loop> {
        let picker = self.picker.as_ref()?;
        let x = self.domain.sample_uniform(rng);
        let j = picker.sample(rng) + 1;
        Some(sample_loop(&x, j, &self.grid, rng).expect("valid loop parameters"))
    }
}

fn domain_err<T>(msg: String) -> Result<T> {
    domain(msg)
}

/// `e^{βμj} (2πβj)^{-d/2} / j`.
pub fn length_weight(params: &ModelParams, j: usize) -> f64 {
    let jf = j as f64;
    let d = params.dim as f64;
    let tilt = if params.mu == f64::NEG_INFINITY { 0.0 } else { (params.beta * params.mu * jf).exp() };
    tilt * (2.0 * PI * params.beta * jf).powf(-d / 2.0) / jf
}

/// `|Λ| Σ_{j ≤ j_max} w_j`.
pub fn measure_mass(spec: &LoopMeasureSpec) -> f64 {
    spec.domain.volume() * spec.weights.iter().sum::<f64>()
}

/// `|Λ| Σ_{j ≤ j_max} j·w_j`, the mean of `N_Λ` under the free process.
pub fn expected_particles(spec: &LoopMeasureSpec) -> f64 {
    spec.domain.volume() * spec.weights.iter().enumerate().map(|(k, w)| (k + 1) as f64 * w).sum::<f64>()
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    }
}

/// Poisson process with intensity `M_Λ` (μ-weighted per the spec).
pub fn sample_free<R: Rng + ?Sized>(spec: &LoopMeasureSpec, rng: &mut R) -> Configuration {
    let n = poisson_count(measure_mass(spec), rng);
    (0..n).filter_map(|_| spec.propose_loop(rng)).collect()
}

/// Poisson process with intensity `M_Λ` restricted to loops contained in `Λ`,
/// obtained by deleting the other loops of a free sample.
pub fn sample_dirichlet<R: Rng + ?Sized>(spec: &LoopMeasureSpec, rng: &mut R) -> Configuration {
    let free = sample_free(spec, rng);
    free.loops.into_iter().filter(|l| l.containment(&spec.domain) == Containment::Inside).collect()
}

/// Poisson process with intensity `M^dir_Λ[e^{-βW + βμℓ} ·]`: a Dirichlet
/// sample with each loop kept with probability `e^{-βW}`.
pub fn sample_ph<R: Rng + ?Sized>(spec: &LoopMeasureSpec, rng: &mut R) -> Configuration {
    let dir = sample_dirichlet(spec, rng);
    let pot = spec.params.potential;
    let dt = spec.grid.dt();
    dir.loops
        .into_iter()
        .filter(|l| {
            let keep = boltzmann(spec.params.beta, self_w_unchecked(l, &pot, dt));
            rng.gen::<f64>() < keep
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Potential;

    fn params(mu: f64) -> ModelParams {
        ModelParams::new(3, 1.0, mu, Potential::zero()).unwrap()
    }

    #[test]
    fn mass_is_linear_in_volume_and_monotone_in_mu() {
        let a = LoopMeasureSpec::new(Domain::cube(3, 0.0, 1.0).unwrap(), params(0.0), 16, 64, 1.0).unwrap();
        let b = a.with_domain(Domain::new(vec![0.0; 3], vec![2.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!((measure_mass(&b) - 2.0 * measure_mass(&a)).abs() < 1e-15);
        let mut prev = measure_mass(&a);
        for mu in [-0.5, -1.0, -4.0, -20.0] {
            let m = measure_mass(&a.with_mu(mu).unwrap());
            assert!(m < prev);
            prev = m;
        }
        assert_eq!(measure_mass(&a.with_mu(f64::NEG_INFINITY).unwrap()), 0.0);
    }

    #[test]
    fn j_max_one_gives_equal_mass_and_particles() {
        let a = LoopMeasureSpec::new(Domain::cube(3, 0.0, 1.0).unwrap(), params(0.0), 16, 1, 1.0).unwrap();
        assert_eq!(measure_mass(&a), expected_particles(&a));
    }

    #[test]
    fn positive_mu_is_uncertified() {
        let a = LoopMeasureSpec::new(Domain::cube(3, 0.0, 1.0).unwrap(), params(0.1), 16, 8, 1e-3).unwrap();
        assert!(!a.tail_certified());
        assert!(a.interacting_tail_bound(0.5).is_finite());
    }
}
