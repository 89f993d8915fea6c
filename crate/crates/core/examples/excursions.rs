//! Cut a crossing loop at the box boundary, redraw its inside pieces, glue it back.

use loopsoup::loop_paths::{glue, sample_loop, split_excursions, Containment, Domain, TimeGrid};
use loopsoup::gibbs_kernels::resample_excursions;
use loopsoup::rng::stream;

fn main() -> loopsoup::Result<()> {
    let dom = Domain::cube(3, 0.0, 2.0)?;
    let grid = TimeGrid::new(1.0, 16)?;
    let mut rng = stream(3, 0, "example-excursions");
    let lp = loop {
        let l = sample_loop(&[1.9, 1.0, 1.0], 3, &grid, &mut rng)?;
        if l.containment(&dom) == Containment::Crossing {
            break l;
        }
    };
    let split = split_excursions(&lp, &dom, &grid)?;
    println!("loop of {} points: {} inside pieces, {} outside pieces", lp.len(), split.interior.len(), split.exterior.len());
    for t in &split.bd.triples {
        println!("  enters {:.3?} leaves {:.3?} after {} steps ({:.4} time)", t.entry, t.exit, t.steps, t.duration);
    }

    let same = glue(&split.interior, &split.exterior)?;
    println!("glue(split) reproduces the loop: {}", same[0].coords() == lp.coords());

    let fresh: Vec<_> = resample_excursions(&dom, &split.bd, &grid, 100_000, &mut rng).into_iter().collect::<loopsoup::Result<_>>()?;
    let new = glue(&fresh, &split.exterior)?;
    println!("after resampling: {} loop, j = {}, still crossing: {}", new.len(), new[0].j(), new[0].containment(&dom) == Containment::Crossing);
    Ok(())
}
