//! Partition function of the interacting gas relative to the free one.

use loopsoup::configuration::Configuration;
use loopsoup::gibbs_kernels::{estimate_z, KernelKind};
use loopsoup::loop_measures::{measure_mass, LoopMeasureSpec};
use loopsoup::loop_paths::Domain;
use loopsoup::potentials::{ModelParams, Potential};
use loopsoup::rng::stream;

fn main() -> loopsoup::Result<()> {
    let mut rng = stream(4, 0, "example-z");
    for (name, pot) in [("none", Potential::zero()), ("gaussian", Potential::gaussian(1.0, 1.0)?), ("hard core", Potential::hard_core(0.5)?)] {
        let params = ModelParams::new(3, 1.0, 0.0, pot)?;
        let spec = LoopMeasureSpec::new(Domain::cube(3, 0.0, 1.5)?, params, 8, 16, 1.0)?;
        let z = estimate_z(&spec, &Configuration::empty(), 20_000, KernelKind::Free, 100_000, &mut rng)?;
        println!("{name:<10} Z = {:.5} ± {:.5}   (lower bound e^-mass = {:.5})", z.value, z.se, (-measure_mass(&spec)).exp());
    }
    Ok(())
}
