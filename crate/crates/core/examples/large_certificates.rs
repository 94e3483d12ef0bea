//! The 13-segment pair behind the headline ratio.
//!
//! The lattice engine takes seconds. Pass `--exhaustive` for the full
//! pair enumeration (C(26,13)^2 pairs; hours on one core).

use obliq::bound::{default_workers, verify_ratio, verify_ratio_lattice};
use obliq::presets::table13;

fn main() -> obliq::Result<()> {
    let (gh, scale) = table13().with_budget_repair();
    println!("H scaled by {scale:.9} to restore the budget");
    let workers = default_workers();
    let rep = if std::env::args().any(|a| a == "--exhaustive") {
        verify_ratio(&gh, workers)?
    } else {
        verify_ratio_lattice(&gh, workers)?
    };
    println!("ratio {:.6} in {:.2?}", rep.ratio, rep.wall_time);
    println!("argmin theta {}\n       beta  {}", rep.argmin_theta, rep.argmin_beta);
    Ok(())
}
