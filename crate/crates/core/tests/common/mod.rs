//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use loopsoup::loop_measures::LoopMeasureSpec;
use loopsoup::loop_paths::Domain;
use loopsoup::potentials::{ModelParams, Potential};
use std::f64::consts::PI;

/// Riemann zeta for `s > 1` by Euler–Maclaurin with 50 explicit terms.
pub fn zeta(s: f64) -> f64 {
    let n = 50.0_f64;
    let head: f64 = (1..50).map(|k| (k as f64).powf(-s)).sum();
    // Bernoulli corrections B2/2!, B4/4!, B6/6!.
    let t1 = s * n.powf(-s - 1.0) / 12.0;
    let t2 = s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    let t3 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0;
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + t1 - t2 + t3
}

pub fn params(potential: Potential) -> ModelParams {
    ModelParams::new(3, 1.0, 0.0, potential).unwrap()
}

pub fn spec_on(dom: Domain, potential: Potential, m: usize, j_max: usize) -> LoopMeasureSpec {
    LoopMeasureSpec::new(dom, params(potential), m, j_max, 1.0).unwrap()
}

fn matmul(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut c = vec![0.0; k * k];
    for i in 0..k {
        for l in 0..k {
            let x = a[i * k + l];
            if x == 0.0 {
                continue;
            }
            let (row, src) = (&mut c[i * k..(i + 1) * k], &b[l * k..(l + 1) * k]);
            for (r, s) in row.iter_mut().zip(src) {
                *r += x * s;
            }
        }
    }
    c
}

/// Probability that a Gaussian random-walk bridge of `steps_per_period · j`
/// steps of variance `dt`, rooted uniformly in `[0, side]`, has every grid
/// point in `[0, side]`, for `j = 1..=j_max`. One coordinate only.
///
/// Transfer-matrix quadrature with `cells` midpoint cells.
pub fn grid_survival_1d(side: f64, dt: f64, steps_per_period: usize, j_max: usize, cells: usize) -> Vec<f64> {
    let h = side / cells as f64;
    let xs: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * h).collect();
    let norm = (2.0 * PI * dt).sqrt();
    let mut a = vec![0.0; cells * cells];
    for i in 0..cells {
        for l in 0..cells {
            let r = xs[i] - xs[l];
            a[i * cells + l] = h * (-r * r / (2.0 * dt)).exp() / norm;
        }
    }
    // One period: A^m by repeated squaring.
    let mut period = None::<Vec<f64>>;
    let (mut base, mut e) = (a, steps_per_period);
    while e > 0 {
        if e & 1 == 1 {
            period = Some(match period {
                None => base.clone(),
                Some(p) => matmul(&p, &base, cells),
            });
        }
        e >>= 1;
        if e > 0 {
            base = matmul(&base, &base, cells);
        }
    }
    let period = period.expect("at least one step");
    let mut cur = period.clone();
    let mut out = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        if j > 1 {
            cur = matmul(&cur, &period, cells);
        }
        // The trace approximates ∫ p^kill(x,x) dx; the free value is side/√(2πt).
        let tr: f64 = (0..cells).map(|i| cur[i * cells + i]).sum();
        let t = dt * (steps_per_period * j) as f64;
        out.push(tr * (2.0 * PI * t).sqrt() / side);
    }
    out
}

/// Mean count and mean particle number of the contained-loop Poisson
/// process on the cube `[0, side]^3` at β = 1, μ = 0.
pub fn dirichlet_free_gas(side: f64, m: usize, j_max: usize) -> (f64, f64) {
    let surv = grid_survival_1d(side, 1.0 / m as f64, m, j_max, 160);
    let vol = side.powi(3);
    let (mut mass, mut parts) = (0.0, 0.0);
    for (k, p) in surv.iter().enumerate() {
        let j = (k + 1) as f64;
        let w = (2.0 * PI * j).powf(-1.5) / j;
        mass += vol * w * p.powi(3);
        parts += vol * j * w * p.powi(3);
    }
    (mass, parts)
}

/// Partition function of a gas in which every pair of loops is forbidden,
/// so at most one loop survives: `e^{-M}(1 + M e^{βμ})` for `j_max = 1`.
pub fn single_occupancy_z(mass_mu0: f64, beta_mu: f64) -> f64 {
    (-mass_mu0).exp() * (1.0 + mass_mu0 * beta_mu.exp())
}

/// Probability that a grid bridge from `x` to `y` of `steps` steps of
/// variance `dt` keeps its interior points in `(0, side)`. One coordinate.
pub fn bridge_survival_1d(side: f64, dt: f64, steps: usize, x: f64, y: f64, cells: usize) -> f64 {
    let h = side / cells as f64;
    let zs: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * h).collect();
    let p = |a: f64, b: f64| (-(a - b) * (a - b) / (2.0 * dt)).exp() / (2.0 * PI * dt).sqrt();
    let mut f: Vec<f64> = zs.iter().map(|&z| p(x, z)).collect();
    for _ in 1..steps - 1 {
        f = zs.iter().map(|&z| zs.iter().zip(&f).map(|(&w, fw)| h * fw * p(w, z)).sum()).collect();
    }
    let killed: f64 = zs.iter().zip(&f).map(|(&z, fz)| h * fz * p(z, y)).sum();
    let free = (-(x - y) * (x - y) / (2.0 * dt * steps as f64)).exp() / (2.0 * PI * dt * steps as f64).sqrt();
    killed / free
}
