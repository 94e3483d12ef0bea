//! One run with fixed ranks, then Monte-Carlo estimates of E[alpha_u + alpha_v] / w_uv.

use obliq::ranking::{estimate_edge_dual, run, simulate, Instance, RankAssignment};
use obliq::presets::table13;

fn main() -> obliq::Result<()> {
    let (gh, _) = table13().with_budget_repair();
    let inst = Instance::new(vec![vec![3.0, 2.0], vec![2.0, 3.0]], vec![vec![true, true], vec![true, false]])?;
    let ranks = RankAssignment::new(vec![0.1, 0.3], vec![0.2, 0.4])?;
    let r = run(&inst, &gh, &ranks)?;
    for q in &r.trace {
        println!("query ({}, {}) -> {}", q.u, q.v, q.exists);
    }
    println!("pairs {:?}  alpha L {:.3?}  R {:.3?}", r.pairs, r.alpha_left, r.alpha_right);

    let rep = simulate(&inst, &gh, 20_000, 7)?;
    println!("E[ALG] {:.4}  OPT {:.1}  ratio {:.4}", rep.mean_weight, rep.offline_optimum, rep.ratio);
    for e in &rep.edges {
        println!("edge ({}, {})  {:.4} +- {:.4}", e.u, e.v, e.mean, e.stderr);
    }

    // path u - v, u - v' with the other endpoint's rank fixed
    let path = Instance::complete_unweighted(1, 2);
    let others = RankAssignment::new(vec![0.0], vec![0.0, 0.35])?;
    let d = estimate_edge_dual(&path, &gh, (0, 0), &others, 100_000, 11)?;
    println!("path edge: {:.4} +- {:.4}", d.mean, d.stderr);
    Ok(())
}
