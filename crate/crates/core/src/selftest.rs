//! Fast built-in checks of small examples with known answers, for
//! installations without the test suite.

use serde::{Deserialize, Serialize};

use crate::analytic::{check_condition, closed_form_gh, AnalyticParams};
use crate::bound::{discretization_bound, verify_ratio, verify_ratio_with, VerifyOptions};
use crate::hardness::{optimal_adaptive_value, posterior, ranking_exact_value, DpOptions, HardFamily, QueryState};
use crate::opt::{constraint_generation, CgOptions, Heuristic, QcqpModel};
use crate::ranking::{estimate_edge_dual, optimal_offline, perturbed_order, run, Instance, RankAssignment};
use crate::stepfn::{enumerate_sn, general_form, GeneralFormParams, GhPair, GridStep, StepFunction};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

type Case = (&'static str, fn() -> Result<(bool, String)>);

fn cases() -> Vec<Case> {
    vec![
        ("step eval and inverse", || {
            let f = StepFunction::non_increasing(vec![0.8, 0.3])?;
            let h = StepFunction::non_decreasing(vec![0.2, 0.7])?;
            let got = [
                f.eval(0.0)?,
                f.eval(0.5)?,
                f.eval(1.0)?,
                f.inverse().eval(0.5),
                f.inverse().eval(0.9),
                f.inverse().eval(0.1),
                h.inverse().eval(0.5),
                h.inverse().eval(0.8),
            ];
            let want = [0.8, 0.3, 0.0, 0.5, 0.0, 1.0, 0.5, 1.0];
            Ok((got == want, format!("{got:?}")))
        }),
        ("S_n sizes", || {
            let got: Vec<usize> = (1..=3).map(|n| enumerate_sn(n).map(|s| s.count())).collect::<Result<_>>()?;
            Ok((got == [2, 6, 20], format!("{got:?}")))
        }),
        ("general form", || {
            let h = |phi: f64, g: f64| -> Result<f64> {
                Ok(general_form(&GeneralFormParams { phi, g_values: vec![g] })?.h_values()[0])
            };
            let q = std::f64::consts::FRAC_PI_4;
            let got = [h(0.0, 0.6)?, h(q, 0.3)?, h(q, std::f64::consts::FRAC_1_SQRT_2)?];
            let ok = close(got[0], 0.8, 1e-12)
                && close(got[1], 2f64.sqrt() - 0.3, 1e-12)
                && close(got[2], std::f64::consts::FRAC_1_SQRT_2, 1e-12);
            Ok((ok, format!("{got:?}")))
        }),
        ("budget check", || {
            let a = GhPair::from_values(vec![0.8, 0.6], vec![0.6, 0.8])?.check_budget();
            let b = GhPair::from_values(vec![0.9], vec![0.9])?.check_budget();
            let c = GhPair::from_values(vec![0.5], vec![1.0])?.check_budget();
            let ok = a.ok && a.witness == (1, 2) && !b.ok && close(b.max_violation, 0.62, 1e-12) && c.ok;
            Ok((ok, format!("{:.3} {:.3} {:.3}", a.max_violation, b.max_violation, c.max_violation)))
        }),
        ("one-segment bound", || {
            let gh = GhPair::from_values(vec![0.5], vec![1.0])?;
            let s = |l: u8| GridStep::from_levels(vec![l]);
            let got = [
                discretization_bound(&gh, &s(1)?, &s(1)?)?,
                discretization_bound(&gh, &s(1)?, &s(0)?)?,
                discretization_bound(&gh, &s(0)?, &s(0)?)?,
            ];
            let rep = verify_ratio(&gh, 1)?;
            let ok = got == [1.0, 0.5, 1.0]
                && rep.ratio == 0.5
                && rep.argmin_theta.levels() == [1]
                && rep.argmin_beta.levels() == [0];
            Ok((ok, format!("{got:?} -> {}", rep.ratio)))
        }),
        ("pruning is sound at n = 3", || {
            let gh = GhPair::from_values(vec![0.8, 0.6, 0.3], vec![0.6, 0.75, 0.9])?;
            let a = verify_ratio_with(&gh, VerifyOptions { workers: 1, prune: true })?.ratio;
            let b = verify_ratio_with(&gh, VerifyOptions { workers: 1, prune: false })?.ratio;
            Ok((a == b, format!("{a} {b}")))
        }),
        ("perturbed order and run", || {
            let inst = Instance::new(vec![vec![3.0, 2.0], vec![2.0, 3.0]], vec![vec![true; 2]; 2])?;
            let gh = crate::analytic::closed_form_gh(AnalyticParams::default())?;
            let ranks = RankAssignment::new(vec![0.1, 0.3], vec![0.2, 0.4])?;
            let order = perturbed_order(&inst, &gh, &ranks);
            let r = run(&inst, &gh, &ranks)?;
            let ok = order[0] == (0, 0) && r.total_weight == 6.0 && optimal_offline(&inst) == 6.0;
            Ok((ok, format!("{order:?} total {}", r.total_weight)))
        }),
        ("single-edge dual", || {
            let inst = Instance::new(vec![vec![1.0]], vec![vec![true]])?;
            let gh = closed_form_gh(AnalyticParams::default())?;
            let d = estimate_edge_dual(&inst, &gh, (0, 0), &RankAssignment::new(vec![0.0], vec![0.0])?, 1000, 7)?;
            Ok((close(d.mean, 1.0, 1e-12) && d.stderr < 1e-12, format!("{} +- {}", d.mean, d.stderr)))
        }),
        ("posteriors", || {
            let s = QueryState::new(HardFamily::WarmupB4)?;
            let p0 = posterior(&s)?[0].1.to_string();
            let p1 = posterior(&QueryState::new(HardFamily::BipartiteH(3))?)?[0].1.to_string();
            let forced = posterior(&s.with_outcome(0, 2, false)?)?[0].1.to_string();
            Ok((p0 == "3/4" && p1 == "2/3" && forced == "1", format!("{p0} {p1} {forced}")))
        }),
        ("hardness warm-up and H3", || {
            let w = optimal_adaptive_value(HardFamily::WarmupB4, DpOptions::default())?;
            let h = optimal_adaptive_value(HardFamily::BipartiteH(3), DpOptions::default())?;
            let raw = optimal_adaptive_value(HardFamily::BipartiteH(3), DpOptions { canonicalize: false, workers: 1 })?;
            let r = ranking_exact_value(HardFamily::BipartiteH(3))?;
            let ok = w.ratio.to_string() == "7/8" && h.ratio.to_string() == "89/108" && raw.ratio == h.ratio && r.ratio == h.ratio;
            Ok((ok, format!("{} {} {}", w.ratio, h.ratio, r.ratio)))
        }),
        ("model counts", || {
            let mut m = QcqpModel::new(2)?;
            let all: Vec<GridStep> = enumerate_sn(2)?.collect();
            m.add_pair(&all[5], &all[0])?;
            m.add_pair(&all[5], &all[1])?;
            let ok = m.variable_count() == 5 && m.active_count() == 2 && m.budget_count() == 3;
            Ok((ok, format!("{} {} {}", m.variable_count(), m.active_count(), m.budget_count())))
        }),
        ("one-segment optimization", || {
            let start = GhPair::from_values(vec![0.3], vec![0.954])?;
            let rep = constraint_generation(1, Some(start), &mut Heuristic::default(), &CgOptions::default())?;
            Ok((close(rep.ratio, 0.5, 1e-6), format!("{}", rep.ratio)))
        }),
        ("analytic condition", || {
            let rep = check_condition(AnalyticParams::default())?;
            let high = check_condition(AnalyticParams { a: 1.2, ..AnalyticParams::default() })?;
            Ok((rep.applicable && !high.applicable, format!("{:.7} {:.4}", rep.value, high.value)))
        }),
    ]
}

pub fn run_selftest() -> Vec<SelfCheck> {
    cases()
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((pass, detail)) => SelfCheck { name: name.into(), pass, detail },
            Err(e) => SelfCheck { name: name.into(), pass: false, detail: format!("error: {e}") },
        })
        .collect()
}
