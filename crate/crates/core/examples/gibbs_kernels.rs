//! The three Gibbs kernels on one box, with a frozen exterior.

use loopsoup::configuration::Configuration;
use loopsoup::gibbs_kernels::{chain_for, KernelKind, McmcConfig};
use loopsoup::loop_measures::{sample_free, LoopMeasureSpec};
use loopsoup::loop_paths::Domain;
use loopsoup::potentials::{ModelParams, Potential};
use loopsoup::rng::stream;
use loopsoup::stats::batch_means;

fn main() -> loopsoup::Result<()> {
    let params = ModelParams::new(3, 1.0, 0.0, Potential::gaussian(1.0, 1.0)?)?;
    let spec = LoopMeasureSpec::new(Domain::cube(3, 0.0, 2.0)?, params, 8, 32, 1.0)?;
    let around = sample_free(&spec.with_domain(Domain::cube(3, -1.0, 3.0)?)?, &mut stream(2, 0, "example-boundary"));
    println!("conditioning on {} loops", around.len());

    let cfg = McmcConfig { steps: 40_000, burn_in: 4000, thinning: 10, verify_every: Some(5000), ..McmcConfig::default() };
    for kind in [KernelKind::Dirichlet, KernelKind::Free, KernelKind::Excursion] {
        let mut chain = chain_for(kind, &spec, &around, cfg, stream(2, 1, kind.label()))?;
        let rep = chain.run(|_, _| Ok(()))?;
        chain.verify_cache()?;
        let n = batch_means(&rep.traces.n, 20);
        let a = rep.acceptance;
        println!(
            "{:<10} N = {:.3} ± {:.3}  energy now {:.3}  acceptance birth {:.2} death {:.2} rebridge {:.2}",
            kind.label(),
            n.value,
            n.se,
            chain.energy().total,
            a.birth,
            a.death,
            a.rebridge
        );
    }
    let empty = chain_for(KernelKind::Dirichlet, &spec, &Configuration::empty(), cfg, stream(2, 2, "empty"))?;
    println!("an empty start has {} mobile loops", empty.interior().len());
    Ok(())
}
