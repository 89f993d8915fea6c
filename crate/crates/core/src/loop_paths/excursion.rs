//! Cutting loops at a box boundary and putting them back together.
//!
//! Grid indices are labelled interior (strictly inside the box) or exterior
//! (outside the closed box). An interior fragment is a maximal run of
//! interior indices. An exterior fragment runs from the last point of one
//! interior run, through the exterior run, to the first point of the next
//! interior run, so consecutive fragments share an endpoint bit for bit.
//! Every grid step belongs to exactly one fragment.

use super::{Domain, Loop, TimeGrid};
use crate::error::{structural, Error, Result};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Interior,
    Exterior,
}

/// Piece of a loop on one side of a box boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub(crate) dim: usize,
    pub(crate) steps_per_beta: usize,
    pub(crate) dt: f64,
    /// `steps + 1` points, flat.
    pub(crate) points: Vec<f64>,
    pub(crate) steps: usize,
    pub(crate) side: Side,
    /// A whole loop that never crosses; `points` then ends where it starts.
    pub(crate) closed: bool,
    /// Local index of the loop's root, if this fragment owns it.
    pub(crate) origin: Option<usize>,
}

impl Fragment {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn num_points(&self) -> usize {
        self.steps + 1
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn start(&self) -> &[f64] {
        self.point(0)
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.steps)
    }

    pub fn origin(&self) -> Option<usize> {
        self.origin
    }

    /// Same fragment with a new path between the same endpoints.
    pub(crate) fn with_points(&self, points: Vec<f64>) -> Fragment {
        debug_assert_eq!(points.len(), self.points.len());
        Fragment { points, ..self.clone() }
    }
}

/// One interior excursion: where it enters, where it leaves, how long it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTriple {
    pub entry: Vec<f64>,
    pub exit: Vec<f64>,
    pub steps: usize,
    pub duration: f64,
    /// Local index of the loop root when it falls inside this excursion.
    pub origin: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryData {
    pub triples: Vec<BoundaryTriple>,
}

impl BoundaryData {
    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.triples.iter().map(|t| t.duration).sum()
    }
}

/// Result of [`split_excursions`].
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub interior: Vec<Fragment>,
    pub exterior: Vec<Fragment>,
    pub bd: BoundaryData,
}

fn closed_fragment(l: &Loop, side: Side, dt: f64) -> Fragment {
    let mut points = l.coords().to_vec();
    points.extend_from_slice(l.start());
    Fragment {
        dim: l.dim(),
        steps_per_beta: l.steps_per_beta(),
        dt,
        points,
        steps: l.len(),
        side,
        closed: true,
        origin: Some(0),
    }
}

/// Split `l` into interior and exterior fragments relative to `dom`.
///
/// Fails if any grid point lies exactly on the boundary.
pub fn split_excursions(l: &Loop, dom: &Domain, grid: &TimeGrid) -> Result<Split> {
    if l.steps_per_beta() != grid.steps_per_beta() || l.dim() != dom.dim() {
        return structural("loop, grid and domain disagree on shape");
    }
    let n = l.len();
    let dt = grid.dt();
    let mut inside = Vec::with_capacity(n);
    for k in 0..n {
        let p = l.point(k);
        let strict = dom.contains_strict(p);
        if !strict && dom.contains(p) {
            return Err(Error::Domain(format!("grid point {k} lies on the box boundary")));
        }
        inside.push(strict);
    }
    if inside.iter().all(|&b| b) {
        return Ok(Split { interior: vec![closed_fragment(l, Side::Interior, dt)], exterior: vec![], bd: BoundaryData::default() });
    }
    if inside.iter().all(|&b| !b) {
        return Ok(Split { interior: vec![], exterior: vec![closed_fragment(l, Side::Exterior, dt)], bd: BoundaryData::default() });
    }
    let first = (0..n).find(|&k| inside[k] && !inside[(k + n - 1) % n]).expect("mixed labels have a run start");
    let take = |from: usize, steps: usize| -> Vec<f64> { (0..=steps).flat_map(|i| l.point(from + i).iter().copied()).collect() };
    let owns = |from: usize, steps: usize| -> Option<usize> {
        let local = (n - from % n) % n;
        (local < steps).then_some(local)
    };
    let mut split = Split { interior: vec![], exterior: vec![], bd: BoundaryData::default() };
    let mut a = first;
    let mut covered = 0;
    while covered < n {
        let mut b = a;
        while inside[(b + 1) % n] {
            b += 1;
        }
        let isteps = b - a;
        let mut c = b + 1;
        while !inside[c % n] {
            c += 1;
        }
        let esteps = c - b;
        let ifrag = Fragment {
            dim: l.dim(),
            steps_per_beta: l.steps_per_beta(),
            dt,
            points: take(a, isteps),
            steps: isteps,
            side: Side::Interior,
            closed: false,
            origin: owns(a, isteps),
        };
        split.bd.triples.push(BoundaryTriple {
            entry: ifrag.start().to_vec(),
            exit: ifrag.end().to_vec(),
            steps: isteps,
            duration: isteps as f64 * dt,
            origin: ifrag.origin,
        });
        split.interior.push(ifrag);
        split.exterior.push(Fragment {
            dim: l.dim(),
            steps_per_beta: l.steps_per_beta(),
            dt,
            points: take(b, esteps),
            steps: esteps,
            side: Side::Exterior,
            closed: false,
            origin: owns(b, esteps),
        });
        covered += isteps + esteps;
        a = c % n;
    }
    Ok(split)
}

/// Interior runs of a crossing loop as `(first index, steps)`, in cyclic
/// order starting from the first run that begins after an exterior point.
/// Empty when the loop is entirely inside or entirely outside.
pub(crate) fn interior_runs(l: &Loop, dom: &Domain) -> Result<Vec<(usize, usize)>> {
    let n = l.len();
    let mut inside = Vec::with_capacity(n);
    for k in 0..n {
        let p = l.point(k);
        let strict = dom.contains_strict(p);
        if !strict && dom.contains(p) {
            return Err(Error::Domain(format!("grid point {k} lies on the box boundary")));
        }
        inside.push(strict);
    }
    if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
        return Ok(vec![]);
    }
    let mut runs = Vec::new();
    for a in 0..n {
        if inside[a] && !inside[(a + n - 1) % n] {
            let mut b = a;
            while inside[(b + 1) % n] {
                b += 1;
            }
            runs.push((a, b - a));
        }
    }
    Ok(runs)
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| x.to_bits()).collect()
}

/// Reassemble loops from fragments produced by [`split_excursions`]
/// (possibly with interior paths replaced between the same endpoints).
pub fn glue(interior: &[Fragment], exterior: &[Fragment]) -> Result<Vec<Loop>> {
    let mut out = Vec::new();
    let all: Vec<&Fragment> = interior.iter().chain(exterior.iter()).collect();
    let mut by_start: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (i, f) in all.iter().enumerate() {
        if f.closed {
            let coords = f.points[..f.steps * f.dim].to_vec();
            if f.steps % f.steps_per_beta != 0 {
                return structural("closed fragment length is not a whole number of periods");
            }
            out.push(Loop::new(f.steps / f.steps_per_beta, f.dim, f.steps_per_beta, coords)?);
        } else {
            by_start.entry(key(f.start())).or_default().push(i);
        }
    }
    let mut used = vec![false; all.len()];
    // Start cycles at root-owning fragments so the root lands at index 0.
    let order: Vec<usize> = (0..all.len())
        .filter(|&i| !all[i].closed && all[i].origin.is_some())
        .chain((0..all.len()).filter(|&i| !all[i].closed && all[i].origin.is_none()))
        .collect();
    for &s in &order {
        if used[s] {
            continue;
        }
        if all[s].origin.is_none() {
            return structural("fragment cycle without a loop root");
        }
        let mut cycle = vec![s];
        used[s] = true;
        let mut cur = s;
        loop {
            let want = match all[cur].side {
                Side::Interior => Side::Exterior,
                Side::Exterior => Side::Interior,
            };
            let end = key(all[cur].end());
            if end == key(all[s].start()) && all[s].side == want && cycle.len() > 1 {
                break;
            }
            let next = by_start
                .get(&end)
                .and_then(|v| v.iter().copied().find(|&i| !used[i] && all[i].side == want));
            match next {
                Some(i) => {
                    used[i] = true;
                    cycle.push(i);
                    cur = i;
                }
                None => return structural("fragment endpoint has no matching partner"),
            }
        }
        let f0 = all[s];
        let (dim, m) = (f0.dim, f0.steps_per_beta);
        let mut coords = Vec::new();
        for &i in &cycle {
            let f = all[i];
            if f.dim != dim || f.steps_per_beta != m {
                return structural("fragments disagree on grid or dimension");
            }
            if i != s && f.origin.is_some() {
                return structural("fragment cycle holds two loop roots");
            }
            coords.extend_from_slice(&f.points[..f.steps * dim]);
        }
        let total = coords.len() / dim;
        if total % m != 0 {
            return structural("glued loop length is not a whole number of periods");
        }
        let l = Loop::new(total / m, dim, m, coords)?;
        let o = f0.origin.unwrap_or(0);
        out.push(if o == 0 { l } else { l.rotated(o) });
    }
    Ok(out)
}
