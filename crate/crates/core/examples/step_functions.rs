//! Step functions, their inverses, the marginal-rank grid and the budget check.

use obliq::stepfn::{enumerate_sn, general_form, GeneralFormParams, GhPair, StepFunction};

fn main() -> obliq::Result<()> {
    let g = StepFunction::non_increasing(vec![0.8, 0.3])?;
    for y in [0.0, 0.25, 0.5, 1.0] {
        println!("g({y}) = {}", g.eval(y)?);
    }
    for v in [0.9, 0.5, 0.1] {
        println!("g^-1({v}) = {}", g.inverse().eval(v));
    }

    for n in 1..=4 {
        let all: Vec<_> = enumerate_sn(n)?.collect();
        println!("|S_{n}| = {}  first {}  last {}", all.len(), all[0], all[all.len() - 1]);
    }

    let gh = GhPair::from_values(vec![0.8, 0.6], vec![0.6, 0.8])?;
    let b = gh.check_budget();
    println!("budget ok={} max violation {:.3e} at {:?}", b.ok, b.max_violation, b.witness);

    let phi = std::f64::consts::FRAC_PI_4;
    let gf = general_form(&GeneralFormParams { phi, g_values: vec![0.7, 0.5, 0.3] })?;
    println!("general form, phi = pi/4: H = {:?}", gf.h_values());
    Ok(())
}
