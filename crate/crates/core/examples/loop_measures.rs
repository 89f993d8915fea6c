//! Reference loop measures on a box: mass, particle density and the three samplers.

use loopsoup::loop_measures::{expected_particles, measure_mass, sample_dirichlet, sample_free, sample_ph, LoopMeasureSpec};
use loopsoup::loop_paths::Domain;
use loopsoup::potentials::{ModelParams, Potential};
use loopsoup::rng::stream;
use loopsoup::stats::MeanVar;

fn main() -> loopsoup::Result<()> {
    let dom = Domain::cube(3, 0.0, 2.0)?;
    let params = ModelParams::new(3, 1.0, 0.0, Potential::gaussian(1.0, 1.0)?)?;
    let spec = LoopMeasureSpec::new(dom, params, 16, 64, 1e-3)?;
    println!("mass {:.5}, mean particles {:.5}, tail certified: {}", measure_mass(&spec), expected_particles(&spec), spec.tail_certified());

    let mut rng = stream(1, 0, "example-measures");
    let (mut free, mut dir, mut ph) = (MeanVar::new(), MeanVar::new(), MeanVar::new());
    for _ in 0..2000 {
        free.push(sample_free(&spec, &mut rng).particles() as f64);
        dir.push(sample_dirichlet(&spec, &mut rng).particles() as f64);
        ph.push(sample_ph(&spec, &mut rng).particles() as f64);
    }
    // Restricting to contained loops and then weighting by e^{-βW} only removes loops.
    println!("free      N = {:.4} ± {:.4}", free.mean(), free.se());
    println!("dirichlet N = {:.4} ± {:.4}", dir.mean(), dir.se());
    println!("P^H       N = {:.4} ± {:.4}", ph.mean(), ph.se());
    Ok(())
}
