use num_traits::{One, Zero};
use obliq::bound::{discretization_bound, verify_ratio};
use obliq::hardness::{optimal_adaptive_value, posterior, ranking_exact_value, DpOptions, HardFamily, QueryState};
use obliq::opt::{constraint_generation, project, CgOptions, Heuristic, HeuristicOptions};
use obliq::ranking::{run, simulate, GainFunctions, Instance, RankAssignment};
use obliq::stepfn::{enumerate_sn, general_form, sn_size, GeneralFormParams, GhPair, GridStep};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn levels(n: usize) -> impl Strategy<Value = GridStep> {
    prop::collection::vec(0..=n as u8, n).prop_map(|mut l| {
        l.sort();
        GridStep::from_levels(l).unwrap()
    })
}

fn gh_strategy(n: usize) -> impl Strategy<Value = GhPair> {
    (0.0..std::f64::consts::FRAC_PI_4, prop::collection::vec(0.05f64..0.98, n)).prop_map(|(phi, mut g)| {
        g.iter_mut().for_each(|v| *v *= phi.cos());
        g.sort_by(|a, b| b.total_cmp(a));
        general_form(&GeneralFormParams { phi, g_values: g }).unwrap()
    })
}

fn gh_and_pair() -> impl Strategy<Value = (GhPair, GridStep, GridStep)> {
    (1usize..=6).prop_flat_map(|n| (gh_strategy(n), levels(n), levels(n)))
}

fn instance() -> impl Strategy<Value = (Instance, u64)> {
    (1usize..=4, 1usize..=4, any::<u64>()).prop_map(|(l, r, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..l).map(|_| (0..r).map(|_| rng.gen_range(0.0..4.0)).collect()).collect();
        let e = (0..l).map(|_| (0..r).map(|_| rng.gen_bool(0.6)).collect()).collect();
        (Instance::new(w, e).unwrap(), seed)
    })
}

proptest! {
    #![proptest_config(cfg(1000))]

    #[test]
    fn general_form_respects_budget(gh in (1usize..=10).prop_flat_map(gh_strategy)) {
        prop_assert!(gh.check_budget().ok);
        prop_assert!(gh.g_values().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(gh.h_values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn bound_is_symmetric((gh, theta, beta) in gh_and_pair()) {
        let a = discretization_bound(&gh, &theta, &beta).unwrap();
        let b = discretization_bound(&gh, &beta, &theta).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn raising_theta_to_inverse_beta_never_raises_bound((gh, theta, beta) in gh_and_pair()) {
        let replaced = theta.pointwise_max(&beta.inverse()).unwrap();
        let before = discretization_bound(&gh, &theta, &beta).unwrap();
        let after = discretization_bound(&gh, &replaced, &beta).unwrap();
        prop_assert!(after <= before + 1e-12, "{} > {}", after, before);
    }

    #[test]
    fn accounting_and_gains((inst, seed) in instance(), gh in (1usize..=5).prop_flat_map(gh_strategy)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let ranks = RankAssignment::sample(inst.left, inst.right, &mut rng);
        let m = run(&inst, &gh, &ranks).unwrap();
        let dual: f64 = m.alpha_left.iter().chain(&m.alpha_right).sum();
        prop_assert!((dual - m.total_weight).abs() <= 1e-9);
        for &(u, v) in &m.pairs {
            prop_assert!(inst.exists[u][v]);
            let (yu, yv) = (ranks.left[u].unwrap(), ranks.right[v].unwrap());
            let w = inst.weights[u][v];
            prop_assert!(m.alpha_left[u] >= GainFunctions::h(&gh, yu) * GainFunctions::g(&gh, yv) * w - 1e-12);
            prop_assert!(m.alpha_right[v] >= GainFunctions::h(&gh, yv) * GainFunctions::g(&gh, yu) * w - 1e-12);
        }
        for u in 0..inst.left {
            if m.partner_left[u].is_none() {
                prop_assert_eq!(m.alpha_left[u], 0.0);
            }
        }
    }

    #[test]
    fn projection_is_feasible(
        g in prop::collection::vec(-0.5f64..2.0, 1..8),
        h in prop::collection::vec(-0.5f64..2.0, 1..8),
    ) {
        let n = g.len().min(h.len());
        let gh = project(&g[..n], &h[..n]).unwrap();
        prop_assert!(gh.check_budget().ok);
        prop_assert!(gh.g_values().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(gh.h_values().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(gh.g_values().iter().chain(gh.h_values()).all(|&v| v > 0.0));
    }

    #[test]
    fn posteriors_are_probabilities(fam in 0usize..3, seed in any::<u64>()) {
        let family = [HardFamily::WarmupB4, HardFamily::BipartiteH(3), HardFamily::GeneralHhat(2)][fam];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = QueryState::new(family).unwrap();
        let mut count = state.consistent_embeddings();
        loop {
            let post = posterior(&state).unwrap();
            if post.is_empty() {
                break;
            }
            for (_, p) in &post {
                prop_assert!(*p >= num_rational::BigRational::zero() && *p <= num_rational::BigRational::one());
            }
            let (pair, p) = &post[rng.gen_range(0..post.len())];
            let exists = if p.is_zero() { false } else if p.is_one() { true } else { rng.gen_bool(0.5) };
            state = state.with_outcome(pair.0, pair.1, exists).unwrap();
            let next = state.consistent_embeddings();
            prop_assert!(next <= count && next > 0);
            count = next;
        }
    }
}

proptest! {
    #![proptest_config(cfg(1000))]

    #[test]
    fn verification_ignores_worker_count(gh in (1usize..=3).prop_flat_map(gh_strategy)) {
        let a = verify_ratio(&gh, 1).unwrap();
        let b = verify_ratio(&gh, 4).unwrap();
        prop_assert_eq!(a.ratio, b.ratio);
        prop_assert_eq!(a.argmin_theta, b.argmin_theta);
        prop_assert_eq!(a.argmin_beta, b.argmin_beta);
    }

    #[test]
    fn simulation_is_reproducible((inst, seed) in instance()) {
        let gh = GhPair::from_values(vec![0.7, 0.4], vec![0.55, 0.7]).unwrap();
        let a = simulate(&inst, &gh, 8, seed).unwrap();
        let b = simulate(&inst, &gh, 8, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(cfg(1000))]

    #[test]
    fn constraint_generation_invariants(
        n in 1usize..=2,
        g in prop::collection::vec(0.1f64..1.0, 2),
        h in prop::collection::vec(0.1f64..1.0, 2),
        seed in any::<u64>(),
    ) {
        let start = project(&g[..n], &h[..n]).unwrap();
        let start_ratio = verify_ratio(&start, 1).unwrap().ratio;
        let mut inner = Heuristic {
            options: HeuristicOptions { seed, max_evaluations: 300, random_moves: 4, ..HeuristicOptions::default() },
            last: None,
        };
        let opts = CgOptions { max_rounds: 3, workers: 1 };
        let rep = constraint_generation(n, Some(start), &mut inner, &opts).unwrap();
        prop_assert!(rep.gh.check_budget().ok);
        prop_assert_eq!(rep.ratio, verify_ratio(&rep.gh, 1).unwrap().ratio);
        prop_assert!(rep.ratio >= start_ratio);
        prop_assert!(rep.history.iter().all(|r| r.certified <= rep.ratio));
        prop_assert!(rep.history.windows(2).all(|w| w[1].active_pairs == w[0].active_pairs + w[0].added));
        prop_assert!(rep.history.iter().all(|r| r.claimed >= r.certified - 1e-9));
    }
}

#[test]
fn sn_is_sorted_and_complete() {
    for n in 1..=8 {
        let all: Vec<GridStep> = enumerate_sn(n).unwrap().collect();
        assert_eq!(all.len() as u64, sn_size(n));
        let binom = (1..=n as u64).fold(1u64, |acc, k| acc * (n as u64 + k) / k);
        assert_eq!(all.len() as u64, binom);
        assert!(all.windows(2).all(|w| w[0].levels() < w[1].levels()));
    }
}

#[test]
fn adaptive_beats_ranking() {
    for fam in [HardFamily::WarmupB4, HardFamily::BipartiteH(3), HardFamily::GeneralHhat(2), HardFamily::BipartiteH(4)] {
        let opt = optimal_adaptive_value(fam, DpOptions::default()).unwrap();
        let rank = ranking_exact_value(fam).unwrap();
        assert!(opt.ratio >= rank.ratio, "{fam}");
    }
}
