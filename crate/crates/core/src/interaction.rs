//! Discretized pair and self interactions and the box Hamiltonian.
//!
//! `T(ω, ω̃) = dt · Σ_i Σ_n Σ_k Φ(|ω(nm+i) − ω̃(km+i)|)` with `i` running over
//! the `m` grid slots of a period: a left-endpoint Riemann sum at matched
//! times modulo β. `W(ω)` is the same sum over pairs `n < k` of one loop.

use crate::configuration::{Configuration, Restriction};
use crate::error::{structural, Result};
use crate::loop_paths::{BBox, Domain, Loop, TimeGrid};
use crate::potentials::Potential;
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

/// Decomposition of `H_Λ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct EnergyBreakdown {
    /// Σ W over the loops that belong to the box.
    pub self_total: f64,
    /// Pair terms between two belonging loops, each pair once.
    pub pair_internal: f64,
    /// Pair terms between a belonging loop and any other loop.
    pub pair_boundary: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(self_total: f64, pair_internal: f64, pair_boundary: f64) -> Self {
        Self { self_total, pair_internal, pair_boundary, total: self_total + pair_internal + pair_boundary }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

fn check_grid(a: &Loop, grid: &TimeGrid) -> Result<()> {
    if a.steps_per_beta() != grid.steps_per_beta() {
        return structural(format!("loop has {} steps per beta, grid has {}", a.steps_per_beta(), grid.steps_per_beta()));
    }
    Ok(())
}

/// Canonical argument order so that `T(a,b)` and `T(b,a)` sum the same terms
/// in the same order.
fn canonical<'a>(a: &'a Loop, b: &'a Loop) -> (&'a Loop, &'a Loop) {
    let ord = a.j().cmp(&b.j()).then_with(|| {
        a.coords().iter().zip(b.coords()).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    });
    if ord == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

#[inline]
fn d2(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let t = p[i] - q[i];
        s += t * t;
    }
    s
}

/// Whether every pair of points of `a` and `b` is beyond the cutoff.
pub fn out_of_range(a: &Loop, b: &Loop, pot: &Potential) -> bool {
    match pot.r_cut() {
        Some(rc) => a.bbox().distance(b.bbox()) >= rc,
        None => false,
    }
}

/// Pair interaction `T(a, b)`; `f64::INFINITY` for +∞.
pub fn pair_t(a: &Loop, b: &Loop, pot: &Potential, grid: &TimeGrid) -> Result<f64> {
    check_grid(a, grid)?;
    check_grid(b, grid)?;
    if a.dim() != b.dim() {
        return structural("loops differ in dimension");
    }
    Ok(pair_t_unchecked(a, b, pot, grid.dt()))
}

pub(crate) fn pair_t_unchecked(a: &Loop, b: &Loop, pot: &Potential, dt: f64) -> f64 {
    if pot.is_zero() || out_of_range(a, b, pot) {
        return 0.0;
    }
    let (a, b) = canonical(a, b);
    let m = a.steps_per_beta();
    let mut s = 0.0;
    for i in 0..m {
        for n in 0..a.j() {
            let p = a.point(n * m + i);
            for k in 0..b.j() {
                let v = pot.phi_sq(d2(p, b.point(k * m + i)));
                if v == f64::INFINITY {
                    return f64::INFINITY;
                }
                s += v;
            }
        }
    }
    s * dt
}

/// Self interaction `W(a)`; zero for single-period loops.
pub fn self_w(a: &Loop, pot: &Potential, grid: &TimeGrid) -> Result<f64> {
    check_grid(a, grid)?;
    Ok(self_w_unchecked(a, pot, grid.dt()))
}

pub(crate) fn self_w_unchecked(a: &Loop, pot: &Potential, dt: f64) -> f64 {
    if pot.is_zero() || a.j() < 2 {
        return 0.0;
    }
    let m = a.steps_per_beta();
    let mut s = 0.0;
    for i in 0..m {
        for n in 0..a.j() {
            let p = a.point(n * m + i);
            for k in n + 1..a.j() {
                let v = pot.phi_sq(d2(p, a.point(k * m + i)));
                if v == f64::INFINITY {
                    return f64::INFINITY;
                }
                s += v;
            }
        }
    }
    s * dt
}

/// `H_Λ(η)`: self terms of belonging loops, pairs among them once, and
/// pairs between a belonging loop and the rest.
pub fn hamiltonian(eta: &Configuration, dom: &Domain, pot: &Potential, grid: &TimeGrid, restriction: Restriction) -> Result<EnergyBreakdown> {
    for l in eta.iter() {
        check_grid(l, grid)?;
    }
    let dt = grid.dt();
    let (inner, outer): (Vec<&Arc<Loop>>, Vec<&Arc<Loop>>) = eta.iter().partition(|l| restriction.holds(l, dom));
    let mut self_total = 0.0;
    let mut pair_internal = 0.0;
    let mut pair_boundary = 0.0;
    for (i, a) in inner.iter().enumerate() {
        self_total += self_w_unchecked(a, pot, dt);
        for b in &inner[i + 1..] {
            pair_internal += pair_t_unchecked(a, b, pot, dt);
        }
        for b in &outer {
            pair_boundary += pair_t_unchecked(a, b, pot, dt);
        }
    }
    Ok(EnergyBreakdown::new(self_total, pair_internal, pair_boundary))
}

/// `U(η; ξ) = Σ_{ω∈η} Σ_{ω'∈ξ, ω'≠ω} T(ω, ω')`. Loop identity is by shared
/// allocation, so a loop present in both configurations does not meet itself.
pub fn cross_u(eta: &Configuration, xi: &Configuration, pot: &Potential, grid: &TimeGrid) -> Result<f64> {
    let mut s = 0.0;
    for a in eta.iter() {
        check_grid(a, grid)?;
        for b in xi.iter() {
            if !Arc::ptr_eq(a, b) {
                s += pair_t(a, b, pot, grid)?;
            }
        }
    }
    Ok(s)
}

/// Uniform cell list over loop bounding boxes.
///
/// With a finite cutoff, two loops whose boxes are farther apart than the
/// cutoff interact with exactly zero energy, so only nearby ids need an
/// exact evaluation. Queries return ids in increasing order.
#[derive(Clone, Debug)]
pub struct NeighborGrid {
    cell: f64,
    reach: f64,
    cells: HashMap<Vec<i64>, Vec<u64>>,
    placed: HashMap<u64, Option<Vec<Vec<i64>>>>,
    oversized: BTreeSet<u64>,
}

const MAX_CELLS_PER_LOOP: usize = 512;

impl NeighborGrid {
    /// Cell list for interaction range `reach`.
    pub fn new(reach: f64) -> Self {
        let cell = if reach > 0.0 { reach } else { 1.0 };
        Self { cell, reach, cells: HashMap::new(), placed: HashMap::new(), oversized: BTreeSet::new() }
    }

    fn cell_range(&self, b: &BBox, pad: f64) -> Option<Vec<Vec<i64>>> {
        let lo: Vec<i64> = b.lower.iter().map(|x| ((x - pad) / self.cell).floor() as i64).collect();
        let hi: Vec<i64> = b.upper.iter().map(|x| ((x + pad) / self.cell).floor() as i64).collect();
        let count: usize = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).try_fold(1usize, |acc, n| acc.checked_mul(n))?;
        if count > MAX_CELLS_PER_LOOP {
            return None;
        }
        let mut out = vec![lo.clone()];
        for axis in 0..lo.len() {
            let mut next = Vec::new();
            for c in &out {
                for v in lo[axis]..=hi[axis] {
                    let mut c2 = c.clone();
                    c2[axis] = v;
                    next.push(c2);
                }
            }
            out = next;
        }
        Some(out)
    }

    pub fn insert(&mut self, id: u64, b: &BBox) {
        let cells = self.cell_range(b, 0.0);
        match &cells {
            Some(cs) => {
                for c in cs {
                    self.cells.entry(c.clone()).or_default().push(id);
                }
            }
            None => {
                self.oversized.insert(id);
            }
        }
        self.placed.insert(id, cells);
    }

    pub fn remove(&mut self, id: u64) {
        if let Some(cells) = self.placed.remove(&id) {
            match cells {
                Some(cs) => {
                    for c in cs {
                        if let Some(v) = self.cells.get_mut(&c) {
                            v.retain(|&x| x != id);
                            if v.is_empty() {
                                self.cells.remove(&c);
                            }
                        }
                    }
                }
                None => {
                    self.oversized.remove(&id);
                }
            }
        }
    }

    /// Ids whose box may lie within the interaction range of `b`.
    pub fn candidates(&self, b: &BBox) -> Vec<u64> {
        let mut out: BTreeSet<u64> = self.oversized.clone();
        match self.cell_range(b, self.reach) {
            Some(cs) => {
                for c in cs {
                    if let Some(v) = self.cells.get(&c) {
                        out.extend(v.iter().copied());
                    }
                }
            }
            None => out.extend(self.placed.keys().copied()),
        }
        out.into_iter().collect()
    }

    pub fn len(&self) -> usize {
        self.placed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placed.is_empty()
    }
}
