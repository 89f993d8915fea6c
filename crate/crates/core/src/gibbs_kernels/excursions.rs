//! Rejection sampling of interior excursions with fixed boundary data.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::loop_measures::{sample_dirichlet, LoopMeasureSpec};
use crate::loop_paths::bridge::bridge_into;
use crate::loop_paths::{glue, interior_runs, split_excursions, BoundaryData, BoundaryTriple, Domain, Fragment, Side, TimeGrid};
use rand::Rng;

fn redraw_inside<R: Rng + ?Sized>(x: &[f64], y: &[f64], steps: usize, dt: f64, dom: &Domain, cap: u64, rng: &mut R, out: &mut [f64]) -> Option<u64> {
    let d = x.len();
    for attempt in 1..=cap {
        bridge_into(x, y, steps, dt, rng, out);
        if (1..steps).all(|k| dom.contains_strict(&out[k * d..(k + 1) * d])) {
            return Some(attempt);
        }
    }
    None
}

/// Grid bridge `entry → exit` over `triple.steps` steps, conditioned to stay
/// strictly inside `dom`. Returns the fragment and the number of attempts.
pub fn sample_excursion<R: Rng + ?Sized>(triple: &BoundaryTriple, dom: &Domain, grid: &TimeGrid, cap: u64, rng: &mut R) -> Result<(Fragment, u64)> {
    let d = triple.entry.len();
    if triple.exit.len() != d || dom.dim() != d {
        return Err(Error::Structural("boundary triple dimension mismatch".into()));
    }
    if !dom.contains_strict(&triple.entry) || !dom.contains_strict(&triple.exit) {
        return Err(Error::Domain("boundary triple endpoints must lie strictly inside the box".into()));
    }
    let mut points = vec![0.0; (triple.steps + 1) * d];
    let attempts = if triple.steps == 0 {
        points.copy_from_slice(&triple.entry);
        1
    } else {
        redraw_inside(&triple.entry, &triple.exit, triple.steps, grid.dt(), dom, cap, rng, &mut points)
            .ok_or_else(|| Error::RejectionCap { cap, what: format!("excursion of {} steps from {:?} to {:?}", triple.steps, triple.entry, triple.exit) })?
    };
    let frag = Fragment {
        dim: d,
        steps_per_beta: grid.steps_per_beta(),
        dt: grid.dt(),
        points,
        steps: triple.steps,
        side: Side::Interior,
        closed: false,
        origin: triple.origin,
    };
    Ok((frag, attempts))
}

/// Independent conditioned bridges for every triple of `bd`, each reported separately.
pub fn resample_excursions<R: Rng + ?Sized>(dom: &Domain, bd: &BoundaryData, grid: &TimeGrid, cap: u64, rng: &mut R) -> Vec<Result<Fragment>> {
    bd.triples.iter().map(|t| sample_excursion(t, dom, grid, cap, rng).map(|r| r.0)).collect()
}

/// One draw from `Q_Λ(·|η)`: loops of `η` outside `Λ` are kept, crossing
/// loops get fresh interior excursions, and the contained loops are replaced
/// by a Dirichlet sample from `spec`.
pub fn sample_q<R: Rng + ?Sized>(spec: &LoopMeasureSpec, eta: &Configuration, cap: u64, rng: &mut R) -> Result<Configuration> {
    let dom = spec.domain();
    let grid = spec.grid();
    let mut out = Configuration::empty();
    for l in &eta.loops {
        if !interior_runs(l, dom)?.is_empty() {
            let split = split_excursions(l, dom, grid)?;
            let mut fresh = Vec::with_capacity(split.interior.len());
            for f in &split.interior {
                let t = BoundaryTriple { entry: f.start().to_vec(), exit: f.end().to_vec(), steps: f.steps(), duration: f.duration(), origin: f.origin() };
                let (g, _) = sample_excursion(&t, dom, grid, cap, rng)?;
                fresh.push(f.with_points(g.points));
            }
            for g in glue(&fresh, &split.exterior)? {
                out.push(g);
            }
        } else if !l.inside_strict(dom) {
            out.loops.push(l.clone());
        }
    }
    for l in sample_dirichlet(spec, rng).loops {
        if l.inside_strict(dom) {
            out.loops.push(l);
        }
    }
    Ok(out)
}
