//! Two-sample checks that nested kernels leave window observables unchanged.

use crate::configuration::{Configuration, Restriction};
use crate::error::{domain, Result};
use crate::gibbs_kernels::{chain_for, Chain, KernelKind, McmcConfig};
use crate::interaction::hamiltonian;
use crate::loop_measures::LoopMeasureSpec;
use crate::loop_paths::Domain;
use crate::stats::{autocorrelation_factor, batch_means, chi2_homogeneity, histogram, ks_two_sample_inflated, welch, TestResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// `(N_Δ, S_Δ, H_Δ)` of a configuration.
pub fn window_observables(conf: &Configuration, spec: &LoopMeasureSpec, window: &Domain) -> Result<(f64, f64, f64)> {
    let h = hamiltonian(conf, window, &spec.params().potential, spec.grid(), Restriction::StartedIn)?;
    Ok((conf.n_in(window) as f64, conf.s_in(window), h.total))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Ensemble {
    pub n: Vec<f64>,
    pub s: Vec<f64>,
    pub h: Vec<f64>,
}

impl Ensemble {
    fn push(&mut self, (n, s, h): (f64, f64, f64)) {
        self.n.push(n);
        self.s.push(s);
        self.h.push(h);
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoSampleReport {
    pub inner: KernelKind,
    pub samples: usize,
    /// Autocorrelation inflation applied to the tests.
    pub inflation: f64,
    pub n_histogram: TestResult,
    pub n_mean: TestResult,
    pub s_ks: TestResult,
    pub h_ks: TestResult,
    pub alpha: f64,
    pub passes: bool,
}

impl TwoSampleReport {
    pub fn tests(&self) -> [(&'static str, &TestResult); 4] {
        [("n_histogram", &self.n_histogram), ("n_mean", &self.n_mean), ("s_ks", &self.s_ks), ("h_ks", &self.h_ks)]
    }
}

/// Compare two ensembles of window observables at level `alpha`.
pub fn compare_ensembles(inner: KernelKind, a: &Ensemble, b: &Ensemble, inflation: f64, alpha: f64) -> TwoSampleReport {
    let ha = histogram(a.n.iter().map(|&x| x as usize));
    let hb = histogram(b.n.iter().map(|&x| x as usize));
    let n_histogram = chi2_homogeneity(&ha, &hb, inflation);
    let n_mean = welch(batch_means(&a.n, 20), batch_means(&b.n, 20));
    let s_ks = ks_two_sample_inflated(&a.s, &b.s, inflation);
    let h_ks = ks_two_sample_inflated(&a.h, &b.h, inflation);
    let passes = [&n_histogram, &n_mean, &s_ks, &h_ks].iter().all(|t| t.passes(alpha));
    TwoSampleReport { inner, samples: a.len(), inflation, n_histogram, n_mean, s_ks, h_ks, alpha, passes }
}

/// Samples `A` from `δ^dir_Λ(·|∅)`; for each, `B` reruns the `inner` kernel
/// on `Δ` for `inner_steps` steps conditioned on `A`. The laws of
/// `(N_Δ, S_Δ, H_Δ)` under `A` and `B` are compared at level `alpha`.
///
/// The inner chains are independent given `A` and run in parallel with
/// seeds drawn from `rng`.
pub fn consistency_test<R: Rng>(
    spec: &LoopMeasureSpec,
    window: &Domain,
    cfg: McmcConfig,
    inner: KernelKind,
    inner_steps: u64,
    alpha: f64,
    mut rng: R,
) -> Result<TwoSampleReport> {
    if inner == KernelKind::Free {
        return domain("consistency is tested for the Dirichlet and excursion kernels");
    }
    if !window.is_subset_of(spec.domain()) {
        return domain("window must lie inside the outer box");
    }
    let outer_seed: u64 = rng.gen();
    let mut outer = Chain::dirichlet(spec, &Configuration::empty(), cfg, ChaCha8Rng::seed_from_u64(outer_seed))?;
    let (samples, _) = outer.run_collect()?;
    let inner_spec = spec.with_domain(window.clone())?;
    let inner_cfg = McmcConfig { steps: inner_steps, burn_in: 0, thinning: 1, ..cfg };
    let seeds: Vec<u64> = samples.iter().map(|_| rng.gen()).collect();
    let b_confs: Vec<Configuration> = samples
        .par_iter()
        .zip(seeds)
        .map(|(a, seed)| {
            let mut ch = chain_for(inner, &inner_spec, a, inner_cfg, ChaCha8Rng::seed_from_u64(seed))?;
            ch.advance(inner_steps)?;
            Ok(ch.configuration())
        })
        .collect::<Result<_>>()?;
    let mut ea = Ensemble::default();
    let mut eb = Ensemble::default();
    for (a, b) in samples.iter().zip(&b_confs) {
        ea.push(window_observables(a, spec, window)?);
        eb.push(window_observables(b, spec, window)?);
    }
    let inflation = autocorrelation_factor(&ea.n, 20).max(autocorrelation_factor(&eb.n, 20));
    Ok(compare_ensembles(inner, &ea, &eb, inflation, alpha))
}

/// With a boundary of loops outside `Λ`, the excursion and Dirichlet kernels
/// share their target; compare their stationary `(N_Λ, S_Λ, H_Λ)` laws.
pub fn kernel_equivalence_test<R: Rng>(spec: &LoopMeasureSpec, boundary: &Configuration, cfg: McmcConfig, alpha: f64, mut rng: R) -> Result<TwoSampleReport> {
    let dom = spec.domain().clone();
    let outside: Configuration = boundary.loops.iter().filter(|l| l.containment(&dom) == crate::loop_paths::Containment::Outside).cloned().collect();
    let mut ens = [Ensemble::default(), Ensemble::default()];
    for (k, kind) in [KernelKind::Dirichlet, KernelKind::Excursion].into_iter().enumerate() {
        let mut ch = chain_for(kind, spec, &outside, cfg, ChaCha8Rng::seed_from_u64(rng.gen()))?;
        let (confs, _) = ch.run_collect()?;
        for c in &confs {
            ens[k].push(window_observables(c, spec, &dom)?);
        }
    }
    let inflation = autocorrelation_factor(&ens[0].n, 20).max(autocorrelation_factor(&ens[1].n, 20));
    Ok(compare_ensembles(KernelKind::Excursion, &ens[0], &ens[1], inflation, alpha))
}
