//! Exhaustive grid check of the structural lemmas on a few random small graphs.

use obliq::ranking::{check_structural_lemmas, Instance};
use obliq::stepfn::{general_form, GeneralFormParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> obliq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gh = general_form(&GeneralFormParams { phi: 0.4, g_values: vec![0.85, 0.6, 0.35] })?;
    for k in 0..5 {
        let (l, r) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let weights = (0..l).map(|_| (0..r).map(|_| rng.gen_range(0.5..2.0)).collect()).collect();
        let exists = (0..l).map(|_| (0..r).map(|_| rng.gen_bool(0.7)).collect()).collect();
        let inst = Instance::new(weights, exists)?;
        let rep = check_structural_lemmas(&inst, &gh, 3)?;
        println!("{k}: {l}x{r}  tuples {}  checks {}  violations {}", rep.rank_tuples, rep.checks, rep.violations.len());
    }
    Ok(())
}
