//! Constraint generation at n = 5 from a perturbed copy of the published pair.

use obliq::bound::default_workers;
use obliq::opt::{constraint_generation, perturb, CgOptions, Heuristic};
use obliq::presets::optimized_repaired;

fn main() -> obliq::Result<()> {
    let start = perturb(&optimized_repaired(5)?, 0.01, 1)?;
    let mut solver = Heuristic::default();
    let rep = constraint_generation(5, Some(start), &mut solver, &CgOptions { max_rounds: 50, workers: default_workers() })?;
    for r in &rep.history {
        println!("round {}  active {:>4}  claimed {:.6}  certified {:.6}  +{}", r.round, r.active_pairs, r.claimed, r.certified, r.added);
    }
    println!("certified {:.6} (converged: {})", rep.ratio, rep.converged);
    println!("G {:.4?}\nH {:.4?}", rep.gh.g_values(), rep.gh.h_values());
    Ok(())
}
