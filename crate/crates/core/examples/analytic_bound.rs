//! The closed-form g, h and every numeric check of the analytic bound.

use obliq::analytic::{closed_form_checks, check_condition, AnalyticParams};

fn main() -> obliq::Result<()> {
    let params = AnalyticParams::default();
    let cond = check_condition(params)?;
    println!("condition max {:.7} at y = {:.4}", cond.value, cond.argmax);
    let rep = closed_form_checks(params, 1e-3)?;
    for c in &rep.checks {
        println!("{:<5} {:<42} {:.7} {} {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.computed, c.relation, c.reference);
    }
    let m = rep.minimum;
    println!("minimum {:.8} at tau = {:.3}, gamma = {:.3}", m.reported, m.tau, m.gamma);
    Ok(())
}
