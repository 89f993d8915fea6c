//! Partition functions by direct Monte Carlo, and kernels with truncated conditioning.

use super::{excursions::sample_q, Chain, KernelKind, McmcConfig};
use crate::configuration::{Configuration, Restriction};
use crate::error::{domain, Result};
use crate::interaction::hamiltonian;
use crate::loop_measures::{sample_dirichlet, sample_free, LoopMeasureSpec};
use crate::loop_paths::{interior_runs, Containment, Domain};
use crate::potentials::boltzmann;
use crate::stats::{Estimate, MeanVar};
use rand::Rng;

/// `Z = E_ref[e^{-βH_Λ + βμN_Λ}]` where the reference is `P^dir_Λ`, `P_Λ` or
/// `Q_Λ(·|boundary)` at `μ = 0`, and `N_Λ` counts the resampled loops.
pub fn estimate_z<R: Rng + ?Sized>(spec: &LoopMeasureSpec, boundary: &Configuration, n_samples: usize, kind: KernelKind, cap: u64, rng: &mut R) -> Result<Estimate> {
    if n_samples == 0 {
        return domain("estimate_z needs at least one sample");
    }
    let dom = spec.domain().clone();
    let reference = spec.with_mu(0.0)?;
    let params = spec.params();
    let pot = params.potential;
    let (beta, mu) = (params.beta, params.mu);
    // Loops of the boundary that the kernel keeps fixed.
    let kept: Configuration = match kind {
        KernelKind::Dirichlet => boundary.loops.iter().filter(|l| l.containment(&dom) != Containment::Inside).cloned().collect(),
        KernelKind::Free => boundary.loops.iter().filter(|l| !l.started_in(&dom)).cloned().collect(),
        KernelKind::Excursion => {
            for l in &boundary.loops {
                interior_runs(l, &dom)?;
            }
            Configuration::empty()
        }
    };
    let mut acc = MeanVar::new();
    for _ in 0..n_samples {
        let (full, n) = match kind {
            KernelKind::Dirichlet => {
                let xi = sample_dirichlet(&reference, rng);
                (kept.merged(&xi), xi.particles())
            }
            KernelKind::Free => {
                let xi = sample_free(&reference, rng);
                (kept.merged(&xi), xi.particles())
            }
            KernelKind::Excursion => {
                let full = sample_q(&reference, boundary, cap, rng)?;
                let n = full.loops.iter().filter(|l| l.inside_strict(&dom)).map(|l| l.j()).sum();
                (full, n)
            }
        };
        let h = hamiltonian(&full, &dom, &pot, spec.grid(), Restriction::StartedIn)?.total;
        let tilt = if n == 0 { 0.0 } else { beta * mu * n as f64 };
        acc.push(boltzmann(beta, h) * tilt.exp());
    }
    Ok(Estimate::new(acc.mean(), if n_samples > 1 { acc.se() } else { f64::NAN }))
}

/// Dirichlet chain on `spec.domain()` whose conditioning keeps only the loops
/// of `eta` rooted in `outer`.
pub fn truncated_kernel<R: Rng>(spec: &LoopMeasureSpec, outer: &Domain, eta: &Configuration, cfg: McmcConfig, rng: R) -> Result<Chain<R>> {
    if !spec.domain().is_subset_of(outer) {
        return domain("inner box must lie inside the truncation box");
    }
    Chain::dirichlet(spec, &eta.started_in(outer), cfg, rng)
}
