//! Discretized Brownian loops: time grids, box domains, bridge sampling and
//! the excursion split/glue machinery.

pub(crate) mod bridge;
mod excursion;

pub use bridge::{heat_kernel, sample_bridge, sample_loop};
pub(crate) use excursion::interior_runs;
pub use excursion::{glue, split_excursions, BoundaryData, BoundaryTriple, Fragment, Side, Split};

use crate::error::{domain, structural, Result};
use rand::Rng;
use std::sync::OnceLock;

/// Uniform time grid with `steps_per_beta` points per β-period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    beta: f64,
    steps_per_beta: usize,
}

impl TimeGrid {
    pub fn new(beta: f64, steps_per_beta: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("beta must be positive and finite, got {beta}"));
        }
        if steps_per_beta < 2 {
            return domain(format!("steps_per_beta must be at least 2, got {steps_per_beta}"));
        }
        Ok(Self { beta, steps_per_beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn steps_per_beta(&self) -> usize {
        self.steps_per_beta
    }

    pub fn dt(&self) -> f64 {
        self.beta / self.steps_per_beta as f64
    }

    /// Time of grid index `k`. Computed as `k·β/m` so whole periods land exactly on `nβ`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.beta / self.steps_per_beta as f64
    }
}

/// Where a loop sits relative to a box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Outside,
    Crossing,
}

/// Axis-aligned closed box.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return domain("box corners must have equal, nonzero dimension");
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return domain(format!("box axis {i}: need finite lower < upper, got [{a}, {b}]"));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// The cube of side `side` centred at the origin.
    pub fn centered_cube(dim: usize, side: f64) -> Result<Self> {
        Self::cube(dim, -side / 2.0, side / 2.0)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    /// Closed-box membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    /// Strict-interior membership.
    pub fn contains_strict(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (a, b))| *a < *x && *x < *b)
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        self.dim() == other.dim()
            && self.lower.iter().zip(&other.lower).all(|(a, b)| a >= b)
            && self.upper.iter().zip(&other.upper).all(|(a, b)| a <= b)
    }

    pub fn translated(&self, v: &[f64]) -> Domain {
        Domain {
            lower: self.lower.iter().zip(v).map(|(a, s)| a + s).collect(),
            upper: self.upper.iter().zip(v).map(|(a, s)| a + s).collect(),
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| a + (b - a) * rng.gen::<f64>()).collect()
    }
}

/// Axis-aligned bounding box of a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct BBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BBox {
    fn of(coords: &[f64], dim: usize) -> Self {
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for i in 0..dim {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        Self { lower, upper }
    }

    /// Euclidean distance between two boxes (0 if they overlap).
    pub fn distance(&self, other: &BBox) -> f64 {
        let mut s = 0.0;
        for i in 0..self.lower.len() {
            let gap = (other.lower[i] - self.upper[i]).max(self.lower[i] - other.upper[i]).max(0.0);
            s += gap * gap;
        }
        s.sqrt()
    }
}

/// A closed discretized loop of duration `βj`.
///
/// Stores `j·m` points; index `j·m` wraps to index 0.
#[derive(Debug)]
pub struct Loop {
    j: usize,
    dim: usize,
    steps_per_beta: usize,
    coords: Vec<f64>,
    bbox: BBox,
    diam: OnceLock<f64>,
}

impl Clone for Loop {
    fn clone(&self) -> Self {
        Self {
            j: self.j,
            dim: self.dim,
            steps_per_beta: self.steps_per_beta,
            coords: self.coords.clone(),
            bbox: self.bbox.clone(),
            diam: self.diam.clone(),
        }
    }
}

impl PartialEq for Loop {
    fn eq(&self, other: &Self) -> bool {
        self.j == other.j
            && self.dim == other.dim
            && self.steps_per_beta == other.steps_per_beta
            && self.coords == other.coords
    }
}

impl Loop {
    /// Build a loop from flat coordinates (`j·m·dim` values, point-major).
    pub fn new(j: usize, dim: usize, steps_per_beta: usize, coords: Vec<f64>) -> Result<Self> {
        if j == 0 {
            return domain("loop particle number j must be at least 1");
        }
        if dim == 0 || steps_per_beta == 0 {
            return domain("loop dimension and steps_per_beta must be positive");
        }
        if coords.len() != j * steps_per_beta * dim {
            return structural(format!(
                "loop with j={j}, m={steps_per_beta}, d={dim} needs {} coordinates, got {}",
                j * steps_per_beta * dim,
                coords.len()
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return domain("loop coordinates must be finite");
        }
        let bbox = BBox::of(&coords, dim);
        Ok(Self { j, dim, steps_per_beta, coords, bbox, diam: OnceLock::new() })
    }

    /// The loop that sits at `x` for its whole lifetime.
    pub fn constant(x: &[f64], j: usize, steps_per_beta: usize) -> Result<Self> {
        let n = j * steps_per_beta;
        let coords = (0..n).flat_map(|_| x.iter().copied()).collect();
        Self::new(j, x.len(), steps_per_beta, coords)
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps_per_beta(&self) -> usize {
        self.steps_per_beta
    }

    /// Number of stored points, `j·m`.
    pub fn len(&self) -> usize {
        self.j * self.steps_per_beta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Point at grid index `k` (taken modulo the loop length).
    pub fn point(&self, k: usize) -> &[f64] {
        let k = k % self.len();
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn start(&self) -> &[f64] {
        self.point(0)
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    /// Shift every point by `v`.
    pub fn translated(&self, v: &[f64]) -> Loop {
        let coords = self.coords.chunks_exact(self.dim).flat_map(|p| p.iter().zip(v).map(|(a, b)| a + b)).collect();
        Loop::new(self.j, self.dim, self.steps_per_beta, coords).expect("translation preserves shape")
    }

    /// Cyclic relabeling so that old index `r` becomes index 0.
    pub fn rotated(&self, r: usize) -> Loop {
        let n = self.len();
        let r = r % n;
        let mut coords = Vec::with_capacity(self.coords.len());
        coords.extend_from_slice(&self.coords[r * self.dim..]);
        coords.extend_from_slice(&self.coords[..r * self.dim]);
        let _ = n;
        Loop::new(self.j, self.dim, self.steps_per_beta, coords).expect("rotation preserves shape")
    }

    /// Largest distance between two grid points. Cached after first use.
    pub fn diam(&self) -> f64 {
        *self.diam.get_or_init(|| diameter(&self.coords, self.dim))
    }

    pub fn containment(&self, dom: &Domain) -> Containment {
        let mut all_in = true;
        let mut any_interior = false;
        for p in self.coords.chunks_exact(self.dim) {
            if !dom.contains(p) {
                all_in = false;
            }
            if dom.contains_strict(p) {
                any_interior = true;
            }
            if !all_in && any_interior {
                return Containment::Crossing;
            }
        }
        if all_in {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Whether every grid point lies in the strict interior of `dom`.
    pub fn inside_strict(&self, dom: &Domain) -> bool {
        self.coords.chunks_exact(self.dim).all(|p| dom.contains_strict(p))
    }

    pub fn started_in(&self, dom: &Domain) -> bool {
        dom.contains(self.start())
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact max pairwise distance. A farthest-point sweep gives a lower bound
/// that prunes points which cannot take part in a longer pair.
fn diameter(coords: &[f64], dim: usize) -> f64 {
    let pts: Vec<&[f64]> = coords.chunks_exact(dim).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let mut best2 = 0.0f64;
    let mut a = 0;
    for _ in 0..3 {
        let (mut far, mut far2) = (a, 0.0);
        for (k, p) in pts.iter().enumerate() {
            let d2 = dist2(pts[a], p);
            if d2 > far2 {
                far = k;
                far2 = d2;
            }
        }
        best2 = best2.max(far2);
        a = far;
    }
    let bbox = BBox::of(coords, dim);
    let centre: Vec<f64> = bbox.lower.iter().zip(&bbox.upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let radial: Vec<f64> = pts.iter().map(|p| dist2(p, &centre).sqrt()).collect();
    let rmax = radial.iter().cloned().fold(0.0, f64::max);
    let cut = best2.sqrt() - rmax;
    let cand: Vec<&[f64]> = pts.iter().zip(&radial).filter(|(_, r)| **r >= cut).map(|(p, _)| *p).collect();
    for i in 0..cand.len() {
        for k in i + 1..cand.len() {
            let d2 = dist2(cand[i], cand[k]);
            if d2 > best2 {
                best2 = d2;
            }
        }
    }
    best2.sqrt()
}
