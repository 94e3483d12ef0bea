//! Searching for good `(G, H)` at a fixed `n`.
//!
//! The exact program maximizes `F` subject to `bound(theta, beta) >= F` for
//! every pair in `S_n x S_n`, the budget constraints, monotonicity and the
//! normalization `G_1^2 + H_1^2 = 1`, `G_1 >= H_1`. Constraint generation
//! keeps a small active set of pairs, solves the relaxed program, certifies
//! the candidate with the exhaustive verifier and adds every pair violated by
//! at least half of the largest violation.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bound::verify_ratio;
use crate::error::{domain, Error, Result};
use crate::stepfn::{enumerate_sn, GhPair, GridStep};

/// `bound(theta, beta) = constant + sum coef * H[h] * G[g]` (0-based indices).
#[derive(Clone, Debug, PartialEq)]
pub struct RatioConstraint {
    pub theta: GridStep,
    pub beta: GridStep,
    pub constant: f64,
    pub terms: Vec<(f64, usize, usize)>,
}

impl RatioConstraint {
    pub fn new(theta: &GridStep, beta: &GridStep) -> Result<Self> {
        let n = theta.n();
        if beta.n() != n {
            return Err(Error::Dimension { expected: n, got: beta.n() });
        }
        let nf = n as f64;
        let (t, b) = (theta.levels(), beta.levels());
        let (tinv, binv) = (theta.inverse_levels(), beta.inverse_levels());
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for i in 0..n {
            let d = t[i].saturating_sub(binv[i]) as f64 / nf;
            constant += d / nf;
            if (t[i] as usize) < n && d < 1.0 {
                terms.push(((1.0 - d) / nf, i, t[i] as usize));
            }
            let e = b[i].saturating_sub(tinv[i]) as f64 / nf;
            if (b[i] as usize) < n && e < 1.0 {
                terms.push(((1.0 - e) / nf, i, b[i] as usize));
            }
        }
        Ok(Self { theta: theta.clone(), beta: beta.clone(), constant, terms })
    }

    pub fn eval(&self, g: &[f64], h: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(c, i, k)| c * h[i] * g[k]).sum::<f64>()
    }
}

/// The relaxed program: structural constraints plus the active ratio
/// constraints, in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct QcqpModel {
    n: usize,
    ratio: Vec<RatioConstraint>,
    seen: HashSet<(Vec<u8>, Vec<u8>)>,
}

impl QcqpModel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("n must be at least 1");
        }
        Ok(Self { n, ratio: Vec::new(), seen: HashSet::new() })
    }

    /// Pairs with `theta = 1` everywhere and any `beta`.
    pub fn initial(n: usize) -> Result<Self> {
        let mut m = Self::new(n)?;
        let top = GridStep::constant(n, n as u8)?;
        for beta in enumerate_sn(n)? {
            m.add_pair(&top, &beta)?;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds a pair unless already active; returns whether it was new.
    pub fn add_pair(&mut self, theta: &GridStep, beta: &GridStep) -> Result<bool> {
        if theta.n() != self.n {
            return Err(Error::Dimension { expected: self.n, got: theta.n() });
        }
        if !self.seen.insert((theta.levels().to_vec(), beta.levels().to_vec())) {
            return Ok(false);
        }
        self.ratio.push(RatioConstraint::new(theta, beta)?);
        Ok(true)
    }

    pub fn active_pairs(&self) -> impl Iterator<Item = (&GridStep, &GridStep)> {
        self.ratio.iter().map(|r| (&r.theta, &r.beta))
    }

    pub fn ratio_constraints(&self) -> &[RatioConstraint] {
        &self.ratio
    }

    pub fn active_count(&self) -> usize {
        self.ratio.len()
    }

    /// `F`, then `G_1..G_n`, then `H_1..H_n`.
    pub fn variable_count(&self) -> usize {
        2 * self.n + 1
    }

    pub fn budget_count(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    /// Minimum bound over the active pairs: the largest feasible `F`.
    pub fn objective(&self, gh: &GhPair) -> f64 {
        let (g, h) = (gh.g_values(), gh.h_values());
        self.ratio.iter().map(|r| r.eval(g, h)).fold(f64::INFINITY, f64::min)
    }

    /// Plain-text form of the program; see `docs/qcqp-format.md`.
    pub fn to_text(&self) -> String {
        let n = self.n;
        let mut s = String::new();
        let _ = writeln!(s, "qcqp 1");
        let _ = writeln!(s, "n {n}");
        let _ = writeln!(s, "var F 0 1");
        for i in 1..=n {
            let _ = writeln!(s, "var G{i} 0 inf");
        }
        for i in 1..=n {
            let _ = writeln!(s, "var H{i} 0 inf");
        }
        let _ = writeln!(s, "maximize F");
        for (k, r) in self.ratio.iter().enumerate() {
            let _ = writeln!(s, "# theta={} beta={}", r.theta, r.beta);
            let _ = write!(s, "con ratio{} lin 1 F quad", k + 1);
            for &(c, i, j) in &r.terms {
                let _ = write!(s, " {} H{} G{}", -c, i + 1, j + 1);
            }
            let _ = writeln!(s, " <= {}", r.constant);
        }
        for i in 1..=n {
            for j in i..=n {
                if i == j {
                    let _ = writeln!(s, "con budget{i}_{j} quad 2 H{i} G{i} <= 1");
                } else {
                    let _ = writeln!(s, "con budget{i}_{j} quad 1 H{i} G{j} 1 H{j} G{i} <= 1");
                }
            }
        }
        for i in 1..n {
            let _ = writeln!(s, "con monoG{i} lin 1 G{} -1 G{i} <= 0", i + 1);
        }
        for i in 1..n {
            let _ = writeln!(s, "con monoH{i} lin 1 H{i} -1 H{} <= 0", i + 1);
        }
        let _ = writeln!(s, "con norm quad 1 G1 G1 1 H1 H1 = 1");
        let _ = writeln!(s, "con order lin 1 G1 -1 H1 >= 0");
        s
    }
}

pub fn export_qcqp(model: &QcqpModel, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(model.to_text().as_bytes())?;
    Ok(())
}

fn isotonic_increasing(y: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 <= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, c1 + c2);
        }
    }
    blocks.iter().flat_map(|&(s, c)| std::iter::repeat(s / c as f64).take(c)).collect()
}

/// Nearest-ish feasible pair: positivity, isotonic regression for the
/// monotone shapes, a uniform scaling of `H` for the budget, then the gauge
/// `G -> cG, H -> H/c` (which leaves every bound and budget product
/// unchanged) to reach `G_1^2 + H_1^2 = 1` with `G_1 >= H_1`.
pub fn project(g: &[f64], h: &[f64]) -> Result<GhPair> {
    if g.len() != h.len() || g.is_empty() {
        return Err(Error::Dimension { expected: g.len(), got: h.len() });
    }
    if g.iter().chain(h).any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite coordinate".into()));
    }
    const FLOOR: f64 = 1e-9;
    let neg: Vec<f64> = g.iter().map(|&v| -v.max(FLOOR)).collect();
    let mut g: Vec<f64> = isotonic_increasing(&neg).into_iter().map(|v| -v).collect();
    let mut h = isotonic_increasing(&h.iter().map(|&v| v.max(FLOOR)).collect::<Vec<_>>());
    let n = g.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max(h[i] * g[j] + h[j] * g[i]);
        }
    }
    if worst > 1.0 {
        h.iter_mut().for_each(|v| *v /= worst);
    }
    let (g1, h1) = (g[0], h[0]);
    let disc = (1.0 - 4.0 * g1 * g1 * h1 * h1).max(0.0);
    let x = (1.0 + disc.sqrt()) / (2.0 * g1 * g1);
    let c = x.sqrt();
    g.iter_mut().for_each(|v| *v *= c);
    h.iter_mut().for_each(|v| *v /= c);
    let gh = GhPair::from_values(g, h)?;
    gh.require_budget()?;
    Ok(gh)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOptions {
    pub initial_step: f64,
    pub min_step: f64,
    /// Random-direction trials per sweep, on top of the coordinate moves.
    pub random_moves: usize,
    pub seed: u64,
    pub max_evaluations: usize,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self { initial_step: 0.02, min_step: 1e-6, random_moves: 32, seed: 0, max_evaluations: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerOutcome {
    pub gh: GhPair,
    pub objective: f64,
    /// Objective after the start projection and after every accepted move.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Projected pattern search on the active-set objective: try `+-step` on
/// each coordinate and a few random directions, keep a move only if the
/// minimum over active constraints strictly increases, halve the step when a
/// sweep makes no progress.
pub fn heuristic_inner_solve(model: &QcqpModel, start: &GhPair, opts: &HeuristicOptions) -> Result<InnerOutcome> {
    let n = model.n();
    if start.n() != n {
        return Err(Error::Dimension { expected: n, got: start.n() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = project(start.g_values(), start.h_values())?;
    let mut obj = model.objective(&x);
    let mut trace = vec![obj];
    let mut evaluations = 1;
    let mut step = opts.initial_step;

    let attempt = |x: &mut GhPair, obj: &mut f64, dir: &[f64], step: f64, evaluations: &mut usize| -> Result<bool> {
        let g: Vec<f64> = x.g_values().iter().zip(&dir[..n]).map(|(v, d)| v + step * d).collect();
        let h: Vec<f64> = x.h_values().iter().zip(&dir[n..]).map(|(v, d)| v + step * d).collect();
        let Ok(y) = project(&g, &h) else { return Ok(false) };
        *evaluations += 1;
        let o = model.objective(&y);
        if o > *obj {
            *x = y;
            *obj = o;
            Ok(true)
        } else {
            Ok(false)
        }
    };

    while step >= opts.min_step && evaluations < opts.max_evaluations {
        let mut improved = false;
        for coord in 0..2 * n {
            for sign in [1.0, -1.0] {
                let mut dir = vec![0.0; 2 * n];
                dir[coord] = sign;
                if attempt(&mut x, &mut obj, &dir, step, &mut evaluations)? {
                    trace.push(obj);
                    improved = true;
                    break;
                }
            }
        }
        for _ in 0..opts.random_moves {
            let mut dir: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-300);
            dir.iter_mut().for_each(|d| *d /= norm);
            if attempt(&mut x, &mut obj, &dir, step, &mut evaluations)? {
                trace.push(obj);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(InnerOutcome { gh: x, objective: obj, trace, evaluations })
}

/// A solver for the relaxed program.
pub trait InnerSolver {
    fn solve(&mut self, model: &QcqpModel, start: &GhPair) -> Result<GhPair>;
}

#[derive(Clone, Debug, Default)]
pub struct Heuristic {
    pub options: HeuristicOptions,
    pub last: Option<InnerOutcome>,
}

impl InnerSolver for Heuristic {
    fn solve(&mut self, model: &QcqpModel, start: &GhPair) -> Result<GhPair> {
        let out = heuristic_inner_solve(model, start, &self.options)?;
        let gh = out.gh.clone();
        self.last = Some(out);
        Ok(gh)
    }
}

/// Non-redundant pairs whose bound under `gh` is at most `threshold`, in
/// increasing order of bound.
pub fn pairs_below(gh: &GhPair, threshold: f64) -> Result<Vec<(GridStep, GridStep)>> {
    let n = gh.n();
    let (g, h) = (gh.g_values(), gh.h_values());
    let all: Vec<GridStep> = enumerate_sn(n)?.collect();
    let inv: Vec<Vec<u8>> = all.iter().map(|s| s.inverse_levels()).collect();
    let sums: Vec<u32> = all.iter().map(|s| s.level_sum()).collect();
    let mut out = Vec::new();
    for (ti, theta) in all.iter().enumerate() {
        for (bi, beta) in all.iter().enumerate() {
            if sums[bi] > sums[ti] || theta.levels().iter().zip(&inv[bi]).any(|(t, b)| t < b) {
                continue;
            }
            let v = RatioConstraint::new(theta, beta)?.eval(g, h);
            if v <= threshold {
                out.push((v, ti, bi));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    Ok(out.into_iter().map(|(_, t, b)| (all[t].clone(), all[b].clone())).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub active_pairs: usize,
    /// Objective over the active set, as reported by the inner solver.
    pub claimed: f64,
    pub certified: f64,
    pub added: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgReport {
    pub gh: GhPair,
    /// Exhaustive verification of `gh`.
    pub ratio: f64,
    pub rounds: usize,
    pub converged: bool,
    pub history: Vec<RoundRecord>,
    /// Active set at exit.
    #[serde(skip)]
    pub model: Option<QcqpModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    pub max_rounds: usize,
    pub workers: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { max_rounds: 50, workers: 1 }
    }
}

/// `G = 0.8`, `H = 0.6` on every segment.
pub fn uniform_start(n: usize) -> Result<GhPair> {
    GhPair::from_values(vec![0.8; n], vec![0.6; n])
}

/// Constraint generation from `start` (or [`uniform_start`]). The returned
/// pair is the best candidate by certified ratio; `converged` is false when
/// the round budget ran out with a violated constraint left.
pub fn constraint_generation(
    n: usize,
    start: Option<GhPair>,
    inner: &mut dyn InnerSolver,
    opts: &CgOptions,
) -> Result<CgReport> {
    let mut cand = match start {
        Some(s) if s.n() != n => return Err(Error::Dimension { expected: n, got: s.n() }),
        Some(s) if s.check_budget().ok => s,
        Some(s) => project(s.g_values(), s.h_values())?,
        None => uniform_start(n)?,
    };
    let mut best_ratio = verify_ratio(&cand, opts.workers)?.ratio;
    let mut best = cand.clone();
    let mut model = QcqpModel::initial(n)?;
    let mut history = Vec::new();
    let mut converged = false;
    for round in 1..=opts.max_rounds {
        cand = inner.solve(&model, &cand)?;
        cand.require_budget()?;
        let claimed = model.objective(&cand);
        let certified = verify_ratio(&cand, opts.workers)?.ratio;
        if certified > best_ratio {
            best_ratio = certified;
            best = cand.clone();
        }
        let mut record = RoundRecord { round, active_pairs: model.active_count(), claimed, certified, added: 0 };
        if certified >= claimed - 1e-12 {
            history.push(record);
            converged = true;
            break;
        }
        let threshold = claimed - (claimed - certified) / 2.0;
        for (theta, beta) in pairs_below(&cand, threshold)? {
            if model.add_pair(&theta, &beta)? {
                record.added += 1;
            }
        }
        history.push(record);
    }
    Ok(CgReport { gh: best, ratio: best_ratio, rounds: history.len(), converged, history, model: Some(model) })
}

/// `gh` with every coordinate shifted by an independent uniform amount in
/// `[-amount, amount]`, then projected.
pub fn perturb(gh: &GhPair, amount: f64, seed: u64) -> Result<GhPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift = |v: &f64| v + rng.gen_range(-amount..=amount);
    let g: Vec<f64> = gh.g_values().iter().map(&mut shift).collect();
    let h: Vec<f64> = gh.h_values().iter().map(&mut shift).collect();
    project(&g, &h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::discretization_bound;

    #[test]
    fn constraint_matches_bound() {
        let gh = crate::presets::optimized_repaired(4).unwrap();
        for theta in enumerate_sn(4).unwrap().step_by(7) {
            for beta in enumerate_sn(4).unwrap().step_by(5) {
                let r = RatioConstraint::new(&theta, &beta).unwrap();
                let want = discretization_bound(&gh, &theta, &beta).unwrap();
                assert!((r.eval(gh.g_values(), gh.h_values()) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn model_counts() {
        let mut m = QcqpModel::new(1).unwrap();
        m.add_pair(&GridStep::constant(1, 1).unwrap(), &GridStep::constant(1, 0).unwrap()).unwrap();
        assert_eq!((m.variable_count(), m.active_count(), m.budget_count()), (3, 1, 1));
        let text = m.to_text();
        assert_eq!(text.lines().filter(|l| l.starts_with("var ")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("con ratio")).count(), 1);
        assert_eq!(text.lines().filter(|l| l.starts_with("con budget")).count(), 1);
        assert!(text.contains("con norm quad 1 G1 G1 1 H1 H1 = 1"));
        assert_eq!(text, m.clone().to_text());

        let mut m = QcqpModel::new(2).unwrap();
        let all: Vec<GridStep> = enumerate_sn(2).unwrap().collect();
        m.add_pair(&all[5], &all[0]).unwrap();
        m.add_pair(&all[5], &all[1]).unwrap();
        assert!(!m.add_pair(&all[5], &all[1]).unwrap());
        let text = m.to_text();
        assert_eq!(text.lines().filter(|l| l.starts_with("var ")).count(), 5);
        assert_eq!(text.lines().filter(|l| l.starts_with("con ratio")).count(), 2);
        assert_eq!(text.lines().filter(|l| l.starts_with("con budget")).count(), 3);
    }

    #[test]
    fn projection_is_feasible_and_gauged() {
        let gh = project(&[0.9, 1.2, 0.1], &[0.9, 0.2, 0.8]).unwrap();
        assert!(gh.check_budget().ok);
        let (g, h) = (gh.g_values(), gh.h_values());
        assert!((g[0] * g[0] + h[0] * h[0] - 1.0).abs() < 1e-12);
        assert!(g[0] >= h[0]);
        assert!(g.windows(2).all(|w| w[0] >= w[1]) && h.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn one_segment_optimum() {
        let start = GhPair::from_values(vec![0.3], vec![0.954]).unwrap();
        let mut solver = Heuristic::default();
        let rep = constraint_generation(1, Some(start), &mut solver, &CgOptions::default()).unwrap();
        let half = std::f64::consts::FRAC_1_SQRT_2;
        assert!((rep.ratio - 0.5).abs() < 1e-6, "{}", rep.ratio);
        assert!((rep.gh.g_values()[0] - half).abs() < 1e-3);
        assert!((rep.gh.h_values()[0] - half).abs() < 1e-3);
        assert!(rep.converged);
    }

    #[test]
    fn zero_rounds_pass_through() {
        let gh = crate::presets::optimized_repaired(4).unwrap();
        let rep = constraint_generation(4, Some(gh.clone()), &mut Heuristic::default(), &CgOptions { max_rounds: 0, workers: 1 })
            .unwrap();
        assert_eq!(rep.gh, gh);
        assert_eq!(rep.ratio, verify_ratio(&gh, 1).unwrap().ratio);
        assert_eq!(rep.rounds, 0);
    }

    #[test]
    fn trace_is_increasing() {
        let model = QcqpModel::initial(3).unwrap();
        let out = heuristic_inner_solve(&model, &uniform_start(3).unwrap(), &HeuristicOptions::default()).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] > w[0]));
    }
}
