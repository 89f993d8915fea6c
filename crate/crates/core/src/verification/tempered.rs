//! Tempered configurations: volume-order particle counts and slowly growing
//! diameters on every centred cube `Λ_m`, `m ≤ n_max`.

use crate::configuration::Configuration;
use crate::error::{domain, Result};
use crate::loop_measures::{sample_ph, LoopMeasureSpec};
use crate::loop_paths::Domain;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperedSpec {
    pub alpha: f64,
    pub k: f64,
    pub l: f64,
    pub n_max: usize,
}

impl TemperedSpec {
    pub fn new(alpha: f64, k: f64, l: f64, n_max: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return domain(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        if !(k > 0.0 && l > 0.0 && k.is_finite() && l.is_finite()) {
            return domain(format!("K and L must be positive, got {k}, {l}"));
        }
        if n_max == 0 {
            return domain("window must contain at least one cube");
        }
        Ok(Self { alpha, k, l, n_max })
    }
}

/// Membership with relative slack per cube: `K|Λ_m|/N_{Λ_m} - 1` and
/// `(m^α + L)/S_{Λ_m} - 1`, infinite when the denominator vanishes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemperedVerdict {
    pub member: bool,
    pub n_margins: Vec<f64>,
    pub s_margins: Vec<f64>,
    pub min_n_margin: f64,
    pub min_s_margin: f64,
}

fn slack(limit: f64, value: f64) -> f64 {
    if value <= 0.0 {
        f64::INFINITY
    } else {
        limit / value - 1.0
    }
}

pub fn tempered_membership(eta: &Configuration, spec: &TemperedSpec) -> TemperedVerdict {
    let dim = eta.loops.first().map_or(3, |l| l.dim());
    let mut n_margins = Vec::with_capacity(spec.n_max);
    let mut s_margins = Vec::with_capacity(spec.n_max);
    for m in 1..=spec.n_max {
        let cube = Domain::centered_cube(dim, m as f64).expect("positive side");
        n_margins.push(slack(spec.k * cube.volume(), eta.n_in(&cube) as f64));
        s_margins.push(slack((m as f64).powf(spec.alpha) + spec.l, eta.s_in(&cube)));
    }
    let min_n_margin = n_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let min_s_margin = s_margins.iter().copied().fold(f64::INFINITY, f64::min);
    TemperedVerdict { member: min_n_margin >= 0.0 && min_s_margin >= 0.0, n_margins, s_margins, min_n_margin, min_s_margin }
}

/// Worst-case ratios `max_m N_{Λ_m}/|Λ_m|` and `max_m (S_{Λ_m} - m^α)`.
pub fn tempered_statistics(eta: &Configuration, dim: usize, alpha: f64, n_max: usize) -> (f64, f64) {
    let mut kn: f64 = 0.0;
    let mut ls = f64::NEG_INFINITY;
    for m in 1..=n_max {
        let cube = Domain::centered_cube(dim, m as f64).expect("positive side");
        kn = kn.max(eta.n_in(&cube) as f64 / cube.volume());
        ls = ls.max(eta.s_in(&cube) - (m as f64).powf(alpha));
    }
    (kn, ls)
}

fn upper_quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

/// Choose `(K, L)` so that `P^H_{Λ_n}` samples fall in the tempered set with
/// frequency at least `1 - ε/2` for every `n ≤ n_max`: each threshold is the
/// empirical `1 - ε/4` quantile of its statistic, maximized over `n`.
pub fn calibrate_tempered<R: Rng + ?Sized>(spec: &LoopMeasureSpec, alpha: f64, eps: f64, n_max: usize, n_samples: usize, rng: &mut R) -> Result<TemperedSpec> {
    if !(eps > 0.0 && eps < 1.0) || n_samples == 0 {
        return domain("calibration needs ε in (0, 1) and samples");
    }
    let dim = spec.params().dim;
    let (mut k, mut l) = (f64::MIN_POSITIVE, f64::MIN_POSITIVE);
    for n in 1..=n_max {
        let sp = spec.with_domain(Domain::centered_cube(dim, n as f64)?)?;
        let (ks, ls): (Vec<f64>, Vec<f64>) = (0..n_samples).map(|_| tempered_statistics(&sample_ph(&sp, rng), dim, alpha, n)).unzip();
        k = k.max(upper_quantile(ks, 1.0 - eps / 4.0));
        l = l.max(upper_quantile(ls, 1.0 - eps / 4.0));
    }
    TemperedSpec::new(alpha, k, l, n_max)
}
