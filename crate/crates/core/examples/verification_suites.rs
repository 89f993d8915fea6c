//! Statistical checks on the kernels: nested consistency, FKG, diameter tails, exponential moments.

use loopsoup::configuration::Configuration;
use loopsoup::gibbs_kernels::{Chain, KernelKind, McmcConfig};
use loopsoup::loop_measures::LoopMeasureSpec;
use loopsoup::loop_paths::Domain;
use loopsoup::potentials::{ModelParams, Potential};
use loopsoup::rng::stream;
use loopsoup::verification::*;

fn main() -> loopsoup::Result<()> {
    let params = ModelParams::new(3, 1.0, 0.0, Potential::gaussian(1.0, 1.0)?)?;
    let spec = LoopMeasureSpec::new(Domain::cube(3, 0.0, 3.0)?, params, 8, 16, 1.0)?;
    let cfg = McmcConfig { steps: 40_000, burn_in: 4000, thinning: 40, ..McmcConfig::default() };

    let window = Domain::cube(3, 1.0, 2.0)?;
    for inner in [KernelKind::Dirichlet, KernelKind::Excursion] {
        let rep = consistency_test(&spec, &window, cfg, inner, 1000, 0.01, stream(6, 0, inner.label()))?;
        let ps: Vec<String> = rep.tests().iter().map(|(n, t)| format!("{n} p={:.2}", t.p_value)).collect();
        println!("consistency {:<10} passes: {}  ({})", inner.label(), rep.passes, ps.join(", "));
    }

    let dom = spec.domain().clone();
    let fkg = fkg_test(&spec, cfg, 5000, 3.0, |c| c.n_in(&dom) as f64, stream(6, 1, "fkg"), &mut stream(6, 2, "fkg-ph"))?;
    println!("FKG: chain {:.3} vs P^H {:.3}, passes: {}", fkg.kernel_mean.value, fkg.ph_mean.value, fkg.passes);

    let tails = diameter_tail_test(4, &params, 8, 20_000, 6, 3.0, &mut stream(6, 3, "tails"))?;
    println!("diameter tail j=4: fitted slope {:.2} (bound {}), passes: {}", tails.fit.slope, tails.bound_slope, tails.passes);

    let mut chain = Chain::dirichlet(&spec, &Configuration::empty(), cfg, stream(6, 4, "moment"))?;
    let trace = chain.run(|_, _| Ok(()))?.traces.n;
    let intensity = ph_intensity_moment(&spec, 0.1, 200, &mut stream(6, 5, "moment-weights"))?;
    let m = exp_moment_test(&trace, 0.1, intensity, 3.0)?;
    println!("E[e^(0.1 N)] = {:.4} ≤ {:.4}: {}", m.empirical.value, m.bound.value, m.passes);
    Ok(())
}
