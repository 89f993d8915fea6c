use crate::loop_paths::{Containment, Domain, Loop};
use std::sync::Arc;

/// Which loops count as "belonging" to a box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restriction {
    /// Loops whose root lies in the box.
    StartedIn,
    /// Loops lying entirely in the box.
    ContainedIn,
}

impl Restriction {
    pub fn holds(self, l: &Loop, dom: &Domain) -> bool {
        match self {
            Restriction::StartedIn => l.started_in(dom),
            Restriction::ContainedIn => l.containment(dom) == Containment::Inside,
        }
    }
}

/// Loop functional summed by [`Configuration::n_psi`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psi {
    Length,
    LengthPow(f64),
    Diameter,
}

impl Psi {
    pub fn eval(self, l: &Loop) -> f64 {
        match self {
            Psi::Length => l.j() as f64,
            Psi::LengthPow(p) => (l.j() as f64).powf(p),
            Psi::Diameter => l.diam(),
        }
    }
}

/// Finite multiset of loops. Loops are shared, so copies are cheap.
#[derive(Clone, Debug, Default)]
pub struct Configuration {
    pub loops: Vec<Arc<Loop>>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.loops.len() == other.loops.len() && self.loops.iter().zip(&other.loops).all(|(a, b)| **a == **b)
    }
}

impl FromIterator<Loop> for Configuration {
    fn from_iter<I: IntoIterator<Item = Loop>>(iter: I) -> Self {
        Self { loops: iter.into_iter().map(Arc::new).collect() }
    }
}

impl FromIterator<Arc<Loop>> for Configuration {
    fn from_iter<I: IntoIterator<Item = Arc<Loop>>>(iter: I) -> Self {
        Self { loops: iter.into_iter().collect() }
    }
}

impl Configuration {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Loop>> {
        self.loops.iter()
    }

    pub fn push(&mut self, l: Loop) {
        self.loops.push(Arc::new(l));
    }

    /// Loops satisfying `r` on `dom`.
    pub fn restrict(&self, dom: &Domain, r: Restriction) -> Configuration {
        self.loops.iter().filter(|l| r.holds(l, dom)).cloned().collect()
    }

    /// Loops failing `r` on `dom`.
    pub fn complement(&self, dom: &Domain, r: Restriction) -> Configuration {
        self.loops.iter().filter(|l| !r.holds(l, dom)).cloned().collect()
    }

    /// `η_Λ`: loops started in `dom`.
    pub fn started_in(&self, dom: &Domain) -> Configuration {
        self.restrict(dom, Restriction::StartedIn)
    }

    /// `η^dir_Λ`: loops contained in `dom`.
    pub fn contained_in(&self, dom: &Domain) -> Configuration {
        self.restrict(dom, Restriction::ContainedIn)
    }

    /// Union as multisets.
    pub fn merged(&self, other: &Configuration) -> Configuration {
        self.loops.iter().chain(&other.loops).cloned().collect()
    }

    /// Every loop shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> Configuration {
        self.loops.iter().map(|l| l.translated(v)).collect()
    }

    /// Total particle number `Σ ℓ(ω)`.
    pub fn particles(&self) -> usize {
        self.loops.iter().map(|l| l.j()).sum()
    }

    /// `N_Λ`: particles in loops started in `dom`.
    pub fn n_in(&self, dom: &Domain) -> usize {
        self.loops.iter().filter(|l| l.started_in(dom)).map(|l| l.j()).sum()
    }

    /// `S_Λ`: largest diameter among loops started in `dom` (0 if none).
    pub fn s_in(&self, dom: &Domain) -> f64 {
        self.loops.iter().filter(|l| l.started_in(dom)).map(|l| l.diam()).fold(0.0, f64::max)
    }

    /// `N^ψ_Λ`: sum of `ψ` over loops started in `dom`.
    pub fn n_psi(&self, dom: &Domain, psi: Psi) -> f64 {
        self.loops.iter().filter(|l| l.started_in(dom)).map(|l| psi.eval(l)).sum()
    }

    /// Number of loops with `ℓ ≥ k` started in `dom`.
    pub fn count_long(&self, dom: &Domain, k: usize) -> usize {
        self.loops.iter().filter(|l| l.started_in(dom) && l.j() >= k).count()
    }
}
