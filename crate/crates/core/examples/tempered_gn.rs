//! Periodized Dirichlet states g_n and membership in a calibrated tempered set.

use loopsoup::gibbs_kernels::{sample_gn, McmcConfig};
use loopsoup::loop_measures::LoopMeasureSpec;
use loopsoup::loop_paths::Domain;
use loopsoup::potentials::{ModelParams, Potential};
use loopsoup::rng::stream;
use loopsoup::verification::{calibrate_tempered, tempered_membership, TemperedSpec};

fn main() -> loopsoup::Result<()> {
    let params = ModelParams::new(3, 1.0, 0.0, Potential::gaussian(1.0, 1.0)?)?;
    let spec = LoopMeasureSpec::new(Domain::cube(3, 0.0, 1.0)?, params, 8, 16, 1.0)?;
    let ts = calibrate_tempered(&spec, 0.5, 0.05, 3, 500, &mut stream(7, 0, "calibrate"))?;
    println!("calibrated K = {:.3}, L = {:.3}", ts.k, ts.l);

    let mut rng = stream(7, 1, "gn");
    let cfg = McmcConfig { steps: 2000, burn_in: 0, thinning: 1, ..McmcConfig::default() };
    for n in 1..=3 {
        let g = sample_gn(n, &spec, 1, cfg, &mut rng)?;
        let v = tempered_membership(&g.config, &TemperedSpec { n_max: n, ..ts });
        println!("n = {n}: {} tiles, {} loops, shift {:?}, member {} (slack N {:.2}, S {:.2})", g.tiles.len(), g.config.len(), g.shift, v.member, v.min_n_margin, v.min_s_margin);
    }
    Ok(())
}
