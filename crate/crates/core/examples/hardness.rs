//! Exact upper bounds on the hard families, and Ranking on the same graphs.

use obliq::hardness::{optimal_adaptive_value, ranking_exact_value, DpOptions, HardFamily};

fn main() -> obliq::Result<()> {
    let families = [
        HardFamily::WarmupB4,
        HardFamily::BipartiteH(3),
        HardFamily::BipartiteH(4),
        HardFamily::BipartiteH(5),
        HardFamily::GeneralHhat(2),
        HardFamily::GeneralHhat(3),
    ];
    for fam in families {
        let t = std::time::Instant::now();
        let opt = optimal_adaptive_value(fam, DpOptions::default())?;
        let rank = ranking_exact_value(fam)?;
        println!(
            "{fam:<6} optimal {:>12} = {:.4}  ranking {:>12}  states {:>5}  {:.2?}",
            opt.ratio.to_string(),
            opt.ratio_f64(),
            rank.ratio.to_string(),
            opt.states,
            t.elapsed()
        );
    }
    Ok(())
}
