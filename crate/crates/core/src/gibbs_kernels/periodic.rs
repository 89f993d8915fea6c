//! Periodized Dirichlet states on tiles of `Λ_n`, the centred cube of side `n`.

use super::{Chain, McmcConfig};
use crate::configuration::Configuration;
use crate::error::{domain, Result};
use crate::loop_measures::LoopMeasureSpec;
use crate::loop_paths::Domain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Integer points of the half-open centred cube of side `n` in one coordinate.
pub fn lattice_shifts(n: usize) -> std::ops::Range<i64> {
    let lo = -((n / 2) as i64);
    lo..lo + n as i64
}

#[derive(Clone, Debug)]
pub struct GnSample {
    /// All tiles, shifted by `shift`.
    pub config: Configuration,
    pub shift: Vec<i64>,
    /// Tile index and that tile's configuration before the global shift.
    pub tiles: Vec<(Vec<i64>, Configuration)>,
}

/// One draw from `g_n` on the tiles `z ∈ {-window..window}^d`: independent
/// `δ^dir_{zn+Λ_n}(·|∅)` chains, all shifted by a uniform `x ∈ Λ_n ∩ ℤ^d`.
/// `spec` supplies the model, grid and truncation; its domain is ignored.
pub fn sample_gn<R: Rng + ?Sized>(n: usize, spec: &LoopMeasureSpec, window: usize, cfg: McmcConfig, rng: &mut R) -> Result<GnSample> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let d = spec.params().dim;
    let tile_spec = spec.with_domain(Domain::centered_cube(d, n as f64)?)?;
    let side = 2 * window as i64 + 1;
    let count = (side as usize).pow(d as u32);
    let jobs: Vec<(Vec<i64>, u64)> = (0..count)
        .map(|mut k| {
            let z: Vec<i64> = (0..d)
                .map(|_| {
                    let c = (k % side as usize) as i64 - window as i64;
                    k /= side as usize;
                    c
                })
                .collect();
            (z, rng.gen::<u64>())
        })
        .collect();
    let shifts = lattice_shifts(n);
    let shift: Vec<i64> = (0..d).map(|_| rng.gen_range(shifts.clone())).collect();
    let tiles: Vec<(Vec<i64>, Configuration)> = jobs
        .into_par_iter()
        .map(|(z, seed)| {
            let mut chain = Chain::dirichlet(&tile_spec, &Configuration::empty(), cfg, ChaCha8Rng::seed_from_u64(seed))?;
            chain.advance(cfg.steps)?;
            let v: Vec<f64> = z.iter().map(|&c| (c * n as i64) as f64).collect();
            Ok((z, chain.configuration().translated(&v)))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = shift.iter().map(|&c| c as f64).collect();
    let mut config = Configuration::empty();
    for (_, c) in &tiles {
        config = config.merged(&c.translated(&xs));
    }
    Ok(GnSample { config, shift, tiles })
}
