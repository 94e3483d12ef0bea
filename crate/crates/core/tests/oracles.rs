use obliq::analytic::{universal_bound_numeric, Monotone};
use obliq::bound::{discretization_bound, verify_ratio_with, VerifyOptions};
use obliq::hardness::{ranking_exact_value, ranking_exact_value_enumerated, HardFamily};
use obliq::ranking::{run, run_with_oracle, vertex_greedy, GainFunctions, Instance, RankAssignment, RecordingOracle};
use obliq::stepfn::{general_form, GeneralFormParams, GhPair, GridStep};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gh(rng: &mut ChaCha8Rng, n: usize) -> GhPair {
    let phi = rng.gen_range(0.0..std::f64::consts::FRAC_PI_4);
    let cap = 0.98 * phi.cos();
    let mut g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..cap)).collect();
    g.sort_by(|a, b| b.total_cmp(a));
    general_form(&GeneralFormParams { phi, g_values: g }).unwrap()
}

fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> GridStep {
    let mut l: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=n as u8)).collect();
    l.sort();
    GridStep::from_levels(l).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng, l: usize, r: usize, weighted: bool) -> Instance {
    let w = (0..l).map(|_| (0..r).map(|_| if weighted { rng.gen_range(0.1..3.0) } else { 1.0 }).collect()).collect();
    let e = (0..l).map(|_| (0..r).map(|_| rng.gen_bool(0.5)).collect()).collect();
    Instance::new(w, e).unwrap()
}

/// Strictly decreasing `g`, so the perturbed order is the rank order.
struct Linear;

impl GainFunctions for Linear {
    fn g(&self, y: f64) -> f64 {
        1.0 - y / 2.0
    }
    fn h(&self, _: f64) -> f64 {
        0.5
    }
    fn g_inverse(&self, v: f64) -> f64 {
        (2.0 * (1.0 - v)).clamp(0.0, 1.0)
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn validate(&self) -> obliq::Result<()> {
        Ok(())
    }
}

#[test]
fn numeric_universal_bound_matches_discretization() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let n = rng.gen_range(1..=6);
        let gh = random_gh(&mut rng, n);
        let (theta, beta) = (random_grid(&mut rng, n), random_grid(&mut rng, n));
        let disc = discretization_bound(&gh, &theta, &beta).unwrap();
        let num = universal_bound_numeric(&gh, &Monotone::from_grid(&theta), &Monotone::from_grid(&beta)).unwrap();
        assert!((disc - num).abs() <= 1e-6, "{disc} vs {num} at {:?} {:?}", theta.levels(), beta.levels());
    }
}

#[test]
fn pruning_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=4 {
        for _ in 0..10 {
            let gh = random_gh(&mut rng, n);
            let a = verify_ratio_with(&gh, VerifyOptions { workers: 1, prune: true }).unwrap();
            let b = verify_ratio_with(&gh, VerifyOptions { workers: 1, prune: false }).unwrap();
            assert_eq!(a.ratio, b.ratio);
        }
    }
}

#[test]
fn unweighted_run_is_vertex_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let l = rng.gen_range(1..=3);
        let r = rng.gen_range(1..=3);
        let inst = random_instance(&mut rng, l, r, false);
        let k = l + r;
        let mut adj = vec![vec![false; k]; k];
        for u in 0..l {
            for v in 0..r {
                adj[u][l + v] = inst.exists[u][v];
                adj[l + v][u] = inst.exists[u][v];
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut rng);
        let mut y = vec![0.0; k];
        for (pos, &x) in order.iter().enumerate() {
            y[x] = (pos as f64 + 0.5) / k as f64;
        }
        let ranks = RankAssignment::new(y[..l].to_vec(), y[l..].to_vec()).unwrap();
        let m = run(&inst, &Linear, &ranks).unwrap();
        let greedy = vertex_greedy(&adj, &order);
        for u in 0..l {
            assert_eq!(m.partner_left[u].map(|v| l + v), greedy[u]);
        }
    }
}

#[test]
fn unread_bits_do_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..300 {
        let (l, r) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let inst = random_instance(&mut rng, l, r, true);
        let n = rng.gen_range(1..=5);
        let gh = random_gh(&mut rng, n);
        let ranks = RankAssignment::sample(l, r, &mut rng);
        let mut oracle = RecordingOracle::new(&inst);
        let base = run_with_oracle(&inst, &gh, &ranks, &mut oracle).unwrap();
        let read = oracle.accessed.clone();
        let mut flipped = inst.clone();
        for u in 0..l {
            for v in 0..r {
                if !read.contains(&(u, v)) && rng.gen_bool(0.5) {
                    flipped.exists[u][v] = !flipped.exists[u][v];
                }
            }
        }
        let again = run(&flipped, &gh, &ranks).unwrap();
        assert_eq!(base.trace, again.trace);
        assert_eq!(base.pairs, again.pairs);
    }
}

#[test]
fn reveal_dp_matches_enumeration() {
    for fam in [
        HardFamily::WarmupB4,
        HardFamily::BipartiteH(2),
        HardFamily::BipartiteH(3),
        HardFamily::GeneralHhat(2),
        HardFamily::GeneralHhat(3),
        HardFamily::BipartiteH(4),
    ] {
        let a = ranking_exact_value(fam).unwrap();
        let b = ranking_exact_value_enumerated(fam).unwrap();
        assert_eq!(a.ratio, b.ratio, "{fam}");
        assert_eq!(a.expected_matched, b.expected_matched, "{fam}");
    }
}
