//! Single-loop Boltzmann weights, their exponential decay in j, and the c_Φ lower bound.

use loopsoup::potentials::{ModelParams, Potential};
use loopsoup::rng::stream;
use loopsoup::verification::{decay_fit, estimate_cphi_bound};

fn main() -> loopsoup::Result<()> {
    let params = ModelParams::new(3, 1.0, 0.0, Potential::gaussian(1.0, 1.0)?)?;
    let mut rng = stream(5, 0, "example-decay");
    let js: Vec<usize> = (4..=24).step_by(4).collect();
    let fit = decay_fit(&params, 8, &js, 2000, &mut rng)?;
    for (j, w) in fit.js.iter().zip(&fit.weights) {
        println!("j = {j:>2}  E[e^-W] = {:.3e} ± {:.1e}", w.value, w.se);
    }
    let bound = estimate_cphi_bound(&params, 32, 20_000, &mut rng)?;
    println!("fitted rate {:.4} (95% CI {:.4}..{:.4})", fit.rate.value, fit.rate_ci.0, fit.rate_ci.1);
    println!("c_Φ bound   {:.4} ± {:.4}", bound.value, bound.se);
    Ok(())
}
