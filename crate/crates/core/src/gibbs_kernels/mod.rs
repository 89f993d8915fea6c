//! Samplers for the Gibbs kernels `δ^dir_Λ`, `δ^free_Λ` and `γ_Λ`, the
//! excursion resampler `Q_Λ`, partition functions, truncated kernels and the
//! periodized finite-volume states `g_n`.

mod chain;
mod excursions;
mod periodic;
mod partition;

pub use chain::{detailed_balance_residual, Chain, MoveKind, MoveRecord};
pub use excursions::{resample_excursions, sample_excursion, sample_q};
pub use partition::{estimate_z, truncated_kernel};
pub use periodic::{lattice_shifts, sample_gn, GnSample};

use crate::configuration::{Configuration, Psi};
use crate::error::{domain, Result};
use crate::interaction::EnergyBreakdown;
use crate::loop_measures::LoopMeasureSpec;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Dirichlet,
    Free,
    Excursion,
}

impl KernelKind {
    pub fn label(self) -> &'static str {
        match self {
            KernelKind::Dirichlet => "dir",
            KernelKind::Free => "free",
            KernelKind::Excursion => "exc",
        }
    }
}

/// Relative proposal frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveMix {
    pub birth: f64,
    pub death: f64,
    pub rebridge: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        Self { birth: 0.35, death: 0.35, rebridge: 0.30 }
    }
}

impl MoveMix {
    pub fn total(&self) -> f64 {
        self.birth + self.death + self.rebridge
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McmcConfig {
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub mix: MoveMix,
    /// Longest re-bridged segment in grid steps; `None` allows whole loops.
    pub max_segment: Option<usize>,
    /// Use a cell list for pair lookups when the potential has a cutoff.
    pub neighbor_grid: bool,
    /// Full energy recompute every this many steps.
    pub verify_every: Option<u64>,
    pub log_moves: bool,
    pub psi: Psi,
    /// Attempts per excursion in the rejection sampler.
    pub rejection_cap: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            steps: 110_000,
            burn_in: 10_000,
            thinning: 10,
            mix: MoveMix::default(),
            max_segment: None,
            neighbor_grid: true,
            verify_every: None,
            log_moves: false,
            psi: Psi::Length,
            rejection_cap: 100_000,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let m = &self.mix;
        if !(m.birth > 0.0 && m.death > 0.0 && m.rebridge >= 0.0 && m.total().is_finite()) {
            return domain(format!("move mix needs positive birth and death weights, got {m:?}"));
        }
        if self.thinning == 0 {
            return domain("thinning must be at least 1");
        }
        if self.burn_in > self.steps {
            return domain(format!("burn-in {} exceeds steps {}", self.burn_in, self.steps));
        }
        if self.max_segment.is_some_and(|k| k < 2) {
            return domain("max segment must be at least 2 steps");
        }
        if self.rejection_cap == 0 {
            return domain("rejection cap must be positive");
        }
        Ok(())
    }

    /// Samples kept by a run.
    pub fn retained(&self) -> u64 {
        (self.steps - self.burn_in) / self.thinning
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AcceptanceRates {
    pub birth: f64,
    pub death: f64,
    pub rebridge: f64,
}

/// Observables of one emitted state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub step: u64,
    pub n_loops: usize,
    /// `N_Λ`.
    pub n: usize,
    /// `S_Λ`.
    pub s: f64,
    /// `N^ψ_Λ`.
    pub n_psi: f64,
    pub energy: EnergyBreakdown,
    pub acceptance: AcceptanceRates,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Traces {
    pub n: Vec<f64>,
    pub s: Vec<f64>,
    pub n_psi: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Traces {
    pub(crate) fn push(&mut self, o: &Observables) {
        self.n.push(o.n as f64);
        self.s.push(o.s);
        self.n_psi.push(o.n_psi);
        self.energy.push(o.energy.total);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelRunReport {
    pub kind: KernelKind,
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub retained: u64,
    pub acceptance: AcceptanceRates,
    pub traces: Traces,
}

/// Run a `δ^dir_Λ(·|boundary)` chain and collect its emitted states.
pub fn mcmc_dirichlet<R: Rng>(spec: &LoopMeasureSpec, boundary: &Configuration, cfg: McmcConfig, rng: R) -> Result<(Vec<Configuration>, KernelRunReport)> {
    Chain::dirichlet(spec, boundary, cfg, rng)?.run_collect()
}

/// Run a `δ^free_Λ(·|boundary)` chain and collect its emitted states.
pub fn mcmc_free<R: Rng>(spec: &LoopMeasureSpec, boundary: &Configuration, cfg: McmcConfig, rng: R) -> Result<(Vec<Configuration>, KernelRunReport)> {
    Chain::free(spec, boundary, cfg, rng)?.run_collect()
}

/// Run a `γ_Λ(·|conditioning)` chain and collect its emitted states.
pub fn mcmc_excursion<R: Rng>(spec: &LoopMeasureSpec, conditioning: &Configuration, cfg: McmcConfig, rng: R) -> Result<(Vec<Configuration>, KernelRunReport)> {
    Chain::excursion(spec, conditioning, cfg, rng)?.run_collect()
}

/// Build the chain for `kind`.
pub fn chain_for<R: Rng>(kind: KernelKind, spec: &LoopMeasureSpec, conditioning: &Configuration, cfg: McmcConfig, rng: R) -> Result<Chain<R>> {
    match kind {
        KernelKind::Dirichlet => Chain::dirichlet(spec, conditioning, cfg, rng),
        KernelKind::Free => Chain::free(spec, conditioning, cfg, rng),
        KernelKind::Excursion => Chain::excursion(spec, conditioning, cfg, rng),
    }
}
