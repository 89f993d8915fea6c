mod common;

use common::{bridge_survival_1d, dirichlet_free_gas, single_occupancy_z, spec_on};
use loopsoup::configuration::Configuration;
use loopsoup::gibbs_kernels::{
    chain_for, detailed_balance_residual, estimate_z, lattice_shifts, mcmc_free, resample_excursions, sample_excursion, sample_gn, truncated_kernel, Chain,
    KernelKind, McmcConfig, MoveMix,
};
use loopsoup::interaction::pair_t;
use loopsoup::loop_measures::{expected_particles, measure_mass, sample_free, LoopMeasureSpec};
use loopsoup::loop_paths::{sample_loop, split_excursions, BoundaryData, BoundaryTriple, Containment, Domain, Loop, TimeGrid};
use loopsoup::potentials::{ModelParams, Potential};
use loopsoup::rng::stream;
use loopsoup::stats::{autocorrelation_factor, batch_means, ks_two_sample_inflated, MeanVar};
use loopsoup::Error;

fn cube(lo: f64, hi: f64) -> Domain {
    Domain::cube(3, lo, hi).unwrap()
}

fn cfg(steps: u64) -> McmcConfig {
    McmcConfig { steps, burn_in: steps / 10, thinning: 10, ..McmcConfig::default() }
}

fn mean_n<R: rand::Rng>(chain: &mut Chain<R>) -> loopsoup::stats::Estimate {
    let rep = chain.run(|_, _| Ok(())).unwrap();
    batch_means(&rep.traces.n, 20)
}

#[test]
fn dirichlet_kernel_recovers_the_contained_free_gas() {
    let s = spec_on(cube(0.0, 2.0), Potential::zero(), 16, 64);
    let (_, want) = dirichlet_free_gas(2.0, 16, 64);
    let mut ch = Chain::dirichlet(&s, &Configuration::empty(), cfg(400_000), stream(31, 0, "dir-free-gas")).unwrap();
    let m = mean_n(&mut ch);
    assert!((m.value - want).abs() < 3.0 * m.se, "{m:?} vs {want}");
}

#[test]
fn free_kernel_matches_the_free_sampler() {
    let s = spec_on(cube(0.0, 1.5), Potential::zero(), 8, 32);
    let mut ch = Chain::free(&s, &Configuration::empty(), cfg(200_000), stream(32, 0, "free-vs-sampler")).unwrap();
    let rep = ch.run(|_, _| Ok(())).unwrap();
    let m = batch_means(&rep.traces.n, 20);
    assert!((m.value - expected_particles(&s)).abs() < 3.0 * m.se);
    let mut rng = stream(32, 1, "free-ref");
    let dom = s.domain().clone();
    let reference: Vec<f64> = (0..rep.traces.s.len()).map(|_| sample_free(&s, &mut rng).s_in(&dom)).collect();
    let tau = autocorrelation_factor(&rep.traces.s, 20);
    assert!(ks_two_sample_inflated(&rep.traces.s, &reference, tau).passes(0.01));
}

#[test]
fn free_kernel_ignores_boundary_without_interaction() {
    let s = spec_on(cube(0.0, 1.5), Potential::zero(), 8, 32);
    let ring: Configuration = (0..20).map(|k| Loop::constant(&[-0.5 + 0.1 * k as f64, -0.3, 0.7], 2, 8).unwrap()).collect();
    let (_, a) = mcmc_free(&s, &ring, cfg(150_000), stream(33, 0, "free-ring")).unwrap();
    let (_, b) = mcmc_free(&s, &Configuration::empty(), cfg(150_000), stream(33, 1, "free-ring")).unwrap();
    let (ma, mb) = (batch_means(&a.traces.n, 20), batch_means(&b.traces.n, 20));
    assert!((ma.value - mb.value).abs() < 3.0 * (ma.se.powi(2) + mb.se.powi(2)).sqrt());
}

#[test]
fn repulsive_boundary_lowers_the_free_kernel_density() {
    let pot = Potential::gaussian(2.0, 0.7).unwrap();
    let s = spec_on(cube(0.0, 1.5), pot, 8, 32);
    // Dense frozen shell of constant loops just outside the box.
    let mut ring = Configuration::empty();
    for a in 0..6 {
        for b in 0..6 {
            let (u, v) = (0.3 * a as f64, 0.3 * b as f64);
            for p in [[u, v, -0.2], [u, v, 1.7], [u, -0.2, v], [u, 1.7, v], [-0.2, u, v], [1.7, u, v]] {
                ring.push(Loop::constant(&p, 1, 8).unwrap());
            }
        }
    }
    let mut ch = Chain::free(&s, &ring, cfg(150_000), stream(34, 0, "free-shell")).unwrap();
    let m = mean_n(&mut ch);
    assert!(m.value + 3.0 * m.se < expected_particles(&s), "{m:?} vs {}", expected_particles(&s));
}

#[test]
fn hard_core_states_never_overlap() {
    let a = 0.3;
    let pot = Potential::hard_core(a).unwrap();
    let s = spec_on(cube(0.0, 2.0), pot, 8, 8);
    let mut ch = Chain::dirichlet(&s, &Configuration::empty(), cfg(60_000), stream(35, 0, "hc")).unwrap();
    let mut seen = 0;
    ch.run(|c, _| {
        let conf = c.configuration();
        for (i, x) in conf.loops.iter().enumerate() {
            for y in &conf.loops[i + 1..] {
                assert!(pair_t(x, y, &pot, s.grid()).unwrap().is_finite());
                seen += 1;
            }
        }
        Ok(())
    })
    .unwrap();
    assert!(seen > 0);
}

#[test]
fn very_negative_mu_empties_the_box() {
    let p = ModelParams::new(3, 1.0, -30.0, Potential::zero()).unwrap();
    let s = LoopMeasureSpec::new(cube(0.0, 2.0), p, 8, 16, 1.0).unwrap();
    let mut ch = Chain::dirichlet(&s, &Configuration::empty(), cfg(20_000), stream(36, 0, "mu")).unwrap();
    assert_eq!(mean_n(&mut ch).value, 0.0);
}

#[test]
fn energy_cache_survives_every_kernel() {
    let pot = Potential::gaussian(1.0, 0.8).unwrap();
    let s = spec_on(cube(0.0, 2.0), pot, 8, 16);
    let mut rng = stream(37, 0, "cache-boundary");
    let wide = s.with_domain(cube(-1.0, 3.0)).unwrap();
    let eta = sample_free(&wide, &mut rng);
    for kind in [KernelKind::Dirichlet, KernelKind::Free, KernelKind::Excursion] {
        let c = McmcConfig { log_moves: true, ..cfg(4_000) };
        let mut ch = chain_for(kind, &s, &eta, c, stream(37, 1, kind.label())).unwrap();
        for _ in 0..4_000 {
            ch.step().unwrap();
            ch.verify_cache().unwrap();
        }
        let total = c.mix.total();
        for r in ch.move_log() {
            assert!(detailed_balance_residual(r, ch.mass(), 1.0, c.mix.birth / total, c.mix.death / total) < 1e-9);
        }
    }
}

#[test]
fn jammed_boundary_is_reported() {
    let s = spec_on(cube(0.0, 2.0), Potential::hard_core(0.5).unwrap(), 8, 4);
    let inside = Loop::constant(&[1.0, 1.0, 1.9], 1, 8).unwrap();
    let outside = Loop::constant(&[1.0, 1.0, 2.3], 1, 8).unwrap();
    let eta: Configuration = [inside, outside].into_iter().collect();
    assert!(matches!(Chain::free(&s, &eta, cfg(10), stream(38, 0, "jam")), Err(Error::Jammed(_))));
}

#[test]
fn run_reports_retained_count() {
    let s = spec_on(cube(0.0, 1.0), Potential::zero(), 8, 8);
    let c = McmcConfig { steps: 12_345, burn_in: 345, thinning: 12, ..McmcConfig::default() };
    let (confs, rep) = mcmc_free(&s, &Configuration::empty(), c, stream(39, 0, "ret")).unwrap();
    assert_eq!(rep.retained, 1000);
    assert_eq!(confs.len(), 1000);
    assert_eq!((rep.burn_in, rep.thinning), (345, 12));
    let bad = McmcConfig { mix: MoveMix { birth: 0.0, death: 1.0, rebridge: 1.0 }, ..c };
    assert!(Chain::free(&s, &Configuration::empty(), bad, stream(39, 0, "ret")).is_err());
}

#[test]
fn excursion_acceptance_matches_the_survival_oracle() {
    let g = TimeGrid::new(1.0, 8).unwrap();
    let dom = cube(0.0, 1.0);
    let t = BoundaryTriple { entry: vec![0.5; 3], exit: vec![0.5; 3], steps: 8, duration: 1.0, origin: None };
    let mut rng = stream(40, 0, "exc-acc");
    let (mut accepted, mut attempts) = (0u64, 0u64);
    for _ in 0..5_000 {
        let (f, n) = sample_excursion(&t, &dom, &g, 1_000_000, &mut rng).unwrap();
        assert_eq!((f.start(), f.end()), (&t.entry[..], &t.exit[..]));
        assert!((1..8).all(|k| dom.contains_strict(f.point(k))));
        accepted += 1;
        attempts += n;
    }
    let p = bridge_survival_1d(1.0, 1.0 / 8.0, 8, 0.5, 0.5, 200).powi(3);
    let rate = accepted as f64 / attempts as f64;
    let se = (p * (1.0 - p) / attempts as f64).sqrt();
    assert!((rate - p).abs() < 3.5 * se, "{rate} vs {p}");
    assert!(resample_excursions(&dom, &BoundaryData::default(), &g, 10, &mut rng).is_empty());
}

#[test]
fn excursions_in_a_huge_box_are_plain_bridges() {
    let g = TimeGrid::new(1.0, 8).unwrap();
    let dom = cube(-100.0, 100.0);
    let t = BoundaryTriple { entry: vec![0.0; 3], exit: vec![0.0; 3], steps: 8, duration: 1.0, origin: None };
    let mut rng = stream(41, 0, "exc-huge");
    let mut mid = MeanVar::new();
    for _ in 0..20_000 {
        let (f, n) = sample_excursion(&t, &dom, &g, 10, &mut rng).unwrap();
        assert_eq!(n, 1);
        mid.push(f.point(4)[0]);
    }
    assert!((mid.var() - 0.25).abs() < 4.0 * 0.25 * (2.0 / 20_000f64).sqrt());
}

#[test]
fn excursions_beyond_the_cap_fail() {
    let g = TimeGrid::new(1.0, 8).unwrap();
    let dom = cube(0.0, 0.05);
    let t = BoundaryTriple { entry: vec![0.025; 3], exit: vec![0.025; 3], steps: 64, duration: 8.0, origin: None };
    let r = sample_excursion(&t, &dom, &g, 50, &mut stream(42, 0, "cap"));
    assert!(matches!(r, Err(Error::RejectionCap { cap: 50, .. })));
}

/// One loop crossing the face `x = 2` of `[0,2]^3`, found by sampling.
fn crossing_conditioning(g: &TimeGrid) -> Loop {
    let mut rng = stream(43, 0, "crossing");
    loop {
        let l = sample_loop(&[1.7, 1.0, 1.0], 2, g, &mut rng).unwrap();
        if l.containment(&cube(0.0, 2.0)) != Containment::Crossing {
            continue;
        }
        let sp = split_excursions(&l, &cube(0.0, 2.0), g).unwrap();
        if sp.bd.triples.iter().any(|t| t.steps >= 6) {
            return l;
        }
    }
}

#[test]
fn excursion_kernel_keeps_the_stay_inside_bridge_law() {
    let s = spec_on(cube(0.0, 2.0), Potential::zero(), 8, 8);
    let g = *s.grid();
    let l = crossing_conditioning(&g);
    let split = split_excursions(&l, s.domain(), &g).unwrap();
    let (k, t) = split.bd.triples.iter().enumerate().max_by_key(|(_, t)| t.steps).unwrap();
    assert!(t.steps >= 4);
    let eta: Configuration = [l.clone()].into_iter().collect();
    let c = McmcConfig { steps: 60_000, burn_in: 1_000, thinning: 20, max_segment: None, ..McmcConfig::default() };
    let mut ch = Chain::excursion(&s, &eta, c, stream(43, 1, "exc-law")).unwrap();
    let mut kernel_mid = Vec::new();
    ch.run(|c, _| {
        let conf = c.configuration();
        let cross: Vec<_> = conf.loops.iter().filter(|x| x.containment(s.domain()) == Containment::Crossing).collect();
        assert_eq!(cross.len(), 1);
        let sp = split_excursions(cross[0], s.domain(), &g).unwrap();
        // The frozen exterior and the boundary data never change.
        assert_eq!(sp.exterior, split.exterior);
        assert_eq!(sp.bd.triples.len(), split.bd.triples.len());
        for (a, b) in sp.bd.triples.iter().zip(&split.bd.triples) {
            assert_eq!((&a.entry, &a.exit, a.steps), (&b.entry, &b.exit, b.steps));
        }
        kernel_mid.push(sp.interior[k].point(t.steps / 2)[1]);
        Ok(())
    })
    .unwrap();
    let mut rng = stream(43, 2, "exc-ref");
    let reference: Vec<f64> = (0..kernel_mid.len()).map(|_| sample_excursion(t, s.domain(), &g, 1_000_000, &mut rng).unwrap().0.point(t.steps / 2)[1]).collect();
    let tau = autocorrelation_factor(&kernel_mid, 20);
    let ks = ks_two_sample_inflated(&kernel_mid, &reference, tau);
    assert!(ks.passes(0.01), "{ks:?}");
}

#[test]
fn partition_function_without_interaction_is_one() {
    let s = spec_on(cube(0.0, 2.0), Potential::zero(), 8, 16);
    for kind in [KernelKind::Dirichlet, KernelKind::Free] {
        let z = estimate_z(&s, &Configuration::empty(), 200, kind, 1000, &mut stream(44, 0, "z1")).unwrap();
        assert_eq!((z.value, z.se), (1.0, 0.0));
    }
}

#[test]
fn partition_function_is_above_the_empty_term() {
    let pot = Potential::gaussian(3.0, 1.0).unwrap();
    let s = spec_on(cube(0.0, 2.0), pot, 8, 16);
    let z = estimate_z(&s, &Configuration::empty(), 4000, KernelKind::Free, 1000, &mut stream(45, 0, "zlow")).unwrap();
    assert!(z.value + 3.0 * z.se >= (-measure_mass(&s)).exp());
    assert!(z.value <= 1.0);
}

#[test]
fn single_occupancy_partition_function() {
    // A hard core wider than the box forbids every pair of j = 1 loops.
    let p = ModelParams::new(3, 1.0, 0.4, Potential::hard_core(10.0).unwrap()).unwrap();
    let s = LoopMeasureSpec::new(cube(0.0, 2.0), p, 8, 1, 1.0).unwrap();
    let free_mass = measure_mass(&s.with_mu(0.0).unwrap());
    let (dir_mass, _) = dirichlet_free_gas(2.0, 8, 1);
    for (kind, m) in [(KernelKind::Free, free_mass), (KernelKind::Dirichlet, dir_mass)] {
        let z = estimate_z(&s, &Configuration::empty(), 40_000, kind, 1000, &mut stream(46, 0, kind.label())).unwrap();
        let want = single_occupancy_z(m, 0.4);
        assert!((z.value - want).abs() < 3.0 * z.se, "{kind:?}: {z:?} vs {want}");
    }
}

#[test]
fn truncation_that_keeps_every_loop_changes_nothing() {
    let pot = Potential::gaussian(1.0, 0.8).unwrap();
    let s = spec_on(cube(0.0, 2.0), pot, 8, 16);
    let eta = sample_free(&s.with_domain(cube(-1.0, 3.0)).unwrap(), &mut stream(47, 0, "eta"));
    let c = cfg(5_000);
    let mut a = truncated_kernel(&s, &cube(-5.0, 7.0), &eta, c, stream(47, 1, "t")).unwrap();
    let mut b = Chain::dirichlet(&s, &eta, c, stream(47, 1, "t")).unwrap();
    a.advance(5_000).unwrap();
    b.advance(5_000).unwrap();
    assert_eq!(a.configuration(), b.configuration());
    assert_eq!(a.energy(), b.energy());
}

#[test]
fn truncation_beyond_the_range_is_exact_per_move() {
    let pot = Potential::compact_bump(1.0, 0.5).unwrap();
    let s = spec_on(cube(0.0, 2.0), pot, 8, 8);
    // Near loops rooted in [-1,3]^3 plus constant loops far beyond the range.
    let mut eta = sample_free(&s.with_domain(cube(-1.0, 3.0)).unwrap(), &mut stream(48, 0, "eta"));
    for p in [[10.0, 1.0, 1.0], [-8.0, 1.0, 1.0], [1.0, 1.0, 9.0]] {
        eta.push(Loop::constant(&p, 2, 8).unwrap());
    }
    let c = McmcConfig { log_moves: true, ..cfg(5_000) };
    let mut a = truncated_kernel(&s, &cube(-1.5, 3.5), &eta, c, stream(48, 1, "t")).unwrap();
    let mut b = Chain::dirichlet(&s, &eta, c, stream(48, 1, "t")).unwrap();
    a.advance(5_000).unwrap();
    b.advance(5_000).unwrap();
    assert_eq!(a.move_log().len(), b.move_log().len());
    for (x, y) in a.move_log().iter().zip(b.move_log()) {
        assert_eq!(x.delta_h, y.delta_h);
    }
    assert_eq!(a.configuration().len() + 3, b.configuration().len());
}

#[test]
fn truncation_gap_shrinks_with_the_outer_box() {
    let pot = Potential::gaussian(1.0, 0.8).unwrap();
    let s = spec_on(cube(0.0, 2.0), pot, 8, 8);
    let mut eta = sample_free(&s.with_domain(cube(-4.0, 6.0)).unwrap(), &mut stream(49, 0, "eta"));
    for p in [[0.5, 0.5, 0.5], [1.5, 1.0, 0.7], [1.0, 1.5, 1.5]] {
        eta.push(Loop::constant(&p, 1, 8).unwrap());
    }
    let full = Chain::dirichlet(&s, &eta, cfg(10), stream(49, 1, "t")).unwrap().energy().total;
    let gaps: Vec<f64> = [0.5, 1.5, 3.0]
        .iter()
        .map(|&r| {
            let ch = truncated_kernel(&s, &cube(-r, 2.0 + r), &eta, cfg(10), stream(49, 1, "t")).unwrap();
            full - ch.energy().total
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] >= 0.0, "{gaps:?}");
}

#[test]
fn one_tile_gn_is_an_unshifted_state() {
    let s = spec_on(cube(0.0, 1.0), Potential::zero(), 8, 8);
    let g = sample_gn(1, &s, 0, cfg(2_000), &mut stream(50, 0, "gn1")).unwrap();
    assert_eq!(g.shift, vec![0, 0, 0]);
    assert_eq!(g.tiles.len(), 1);
    assert_eq!(g.config, g.tiles[0].1);
    assert_eq!(lattice_shifts(1).collect::<Vec<_>>(), vec![0]);
}

#[test]
fn gn_is_shift_invariant_and_tiles_are_independent() {
    let pot = Potential::gaussian(1.0, 0.8).unwrap();
    let s = spec_on(cube(0.0, 1.0), pot, 8, 16);
    let c = McmcConfig { steps: 3_000, burn_in: 0, thinning: 1, ..McmcConfig::default() };
    let w0 = Domain::centered_cube(3, 2.0).unwrap();
    let w1 = w0.translated(&[1.0, 0.0, 0.0]);
    let (mut a, mut b) = (MeanVar::new(), MeanVar::new());
    let (mut x, mut y, mut xy) = (MeanVar::new(), MeanVar::new(), MeanVar::new());
    let mut rng = stream(51, 0, "gn");
    for _ in 0..300 {
        let g = sample_gn(2, &s, 1, c, &mut rng).unwrap();
        a.push(g.config.n_in(&w0) as f64);
        b.push(g.config.n_in(&w1) as f64);
        let (t0, t1) = (g.tiles[0].1.particles() as f64, g.tiles[1].1.particles() as f64);
        x.push(t0);
        y.push(t1);
        xy.push(t0 * t1);
    }
    assert!((a.mean() - b.mean()).abs() < 3.0 * (a.se().powi(2) + b.se().powi(2)).sqrt());
    let cov = xy.mean() - x.mean() * y.mean();
    let se = (x.var() * y.var() / 300.0).sqrt();
    assert!(cov.abs() < 3.0 * se, "cov {cov} se {se}");
}
