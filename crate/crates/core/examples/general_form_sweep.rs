//! Nine segments from the circle-plus-tangent family: sweep phi with the
//! lattice engine, then certify the best phi exhaustively.

use obliq::bound::{default_workers, verify_ratio, verify_ratio_lattice};
use obliq::presets::optimized;
use obliq::stepfn::{general_form, GeneralFormParams};

fn main() -> obliq::Result<()> {
    let g = optimized(9)?.g_values().to_vec();
    let phi_max = g[0].acos();
    let workers = default_workers();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=20 {
        let phi = phi_max * k as f64 / 20.0;
        let gh = general_form(&GeneralFormParams { phi, g_values: g.clone() })?;
        let r = verify_ratio_lattice(&gh, workers)?.ratio;
        println!("phi {phi:.4}  {r:.5}");
        if r > best.0 {
            best = (r, phi);
        }
    }
    let gh = general_form(&GeneralFormParams { phi: best.1, g_values: g })?;
    let rep = verify_ratio(&gh, workers)?;
    println!("phi {:.4}: exhaustive ratio {:.6} ({} pairs, {:.2?})", best.1, rep.ratio, rep.pairs_evaluated, rep.wall_time);
    Ok(())
}
