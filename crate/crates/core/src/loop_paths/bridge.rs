use super::{Loop, TimeGrid};
use crate::error::{domain, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gaussian heat kernel `p_t(x,y) = (2πt)^{-d/2} exp(-|x-y|²/(2t))`.
pub fn heat_kernel(x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("heat kernel time must be positive, got {t}"));
    }
    if x.len() != y.len() {
        return domain("heat kernel arguments differ in dimension");
    }
    let d = x.len() as f64;
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((2.0 * std::f64::consts::PI * t).powf(-d / 2.0) * (-r2 / (2.0 * t)).exp())
}

/// Fill `out` (flat, `(steps+1)·d` values) with a grid bridge from `x` to `y`
/// over `steps` steps of length `dt`. Endpoints are copied, not computed.
pub(crate) fn bridge_into<R: Rng + ?Sized>(x: &[f64], y: &[f64], steps: usize, dt: f64, rng: &mut R, out: &mut [f64]) {
    let d = x.len();
    debug_assert_eq!(out.len(), (steps + 1) * d);
    out[..d].copy_from_slice(x);
    for k in 1..steps {
        let remaining = (steps - k + 1) as f64;
        // From index k-1 to k, heading for y after `remaining` steps.
        let frac = 1.0 / remaining;
        let sd = (dt * (remaining - 1.0) / remaining).sqrt();
        for i in 0..d {
            let cur = out[(k - 1) * d + i];
            let z: f64 = rng.sample(StandardNormal);
            out[k * d + i] = cur + frac * (y[i] - cur) + sd * z;
        }
    }
    out[steps * d..].copy_from_slice(y);
}

/// Normalized grid bridge from `x` to `y` over `steps` grid steps.
///
/// Returns `steps + 1` points as a flat coordinate vector; the first is `x`
/// and the last is `y`, bit for bit.
pub fn sample_bridge<R: Rng + ?Sized>(x: &[f64], y: &[f64], steps: usize, grid: &TimeGrid, rng: &mut R) -> Result<Vec<f64>> {
    if steps == 0 {
        return domain("bridge duration must be a positive multiple of dt");
    }
    if x.len() != y.len() {
        return domain("bridge endpoints differ in dimension");
    }
    let mut out = vec![0.0; (steps + 1) * x.len()];
    bridge_into(x, y, steps, grid.dt(), rng, &mut out);
    Ok(out)
}

/// Loop of `j` periods rooted at `x`, sampled as a bridge `x → x`.
pub fn sample_loop<R: Rng + ?Sized>(x: &[f64], j: usize, grid: &TimeGrid, rng: &mut R) -> Result<Loop> {
    if j == 0 {
        return domain("loop particle number j must be at least 1");
    }
    let m = grid.steps_per_beta();
    let mut pts = sample_bridge(x, x, j * m, grid, rng)?;
    pts.truncate(j * m * x.len());
    Loop::new(j, x.len(), m, pts)
}
