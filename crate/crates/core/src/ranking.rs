//! The Quadratic Ranking algorithm on weighted bipartite graphs with hidden
//! edge existence.
//!
//! Every vertex draws a rank in `[0, 1)`. Pairs are queried in descending
//! order of `g(y_u) g(y_v) w_uv` while both endpoints are unmatched, and a
//! found edge is committed. Matched pairs split `w_uv` so that each side
//! receives at least its guaranteed gain `h(y_self) g(y_other) w_uv`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::stepfn::GhPair;

/// Name of the generator behind every seeded computation.
pub const PRNG: &str = "ChaCha8Rng(seed_from_u64(seed), stream = sample index)";

/// Parameters of the algorithm as functions on `[0, 1]`.
pub trait GainFunctions: Send + Sync {
    /// Non-increasing, with `g(1) = 0`.
    fn g(&self, y: f64) -> f64;
    /// Non-decreasing.
    fn h(&self, y: f64) -> f64;
    /// `inf{x in [0, 1] : g(x) <= v}`, with `inf {} = 1`.
    fn g_inverse(&self, v: f64) -> f64;
    /// Points in `(0, 1)` where `g` or `h` may jump or kink.
    fn breakpoints(&self) -> Vec<f64>;
    fn validate(&self) -> Result<()>;
}

impl GainFunctions for GhPair {
    fn g(&self, y: f64) -> f64 {
        self.g().eval_unchecked(y.clamp(0.0, 1.0))
    }

    fn h(&self, y: f64) -> f64 {
        self.h().eval_unchecked(y.clamp(0.0, 1.0))
    }

    fn g_inverse(&self, v: f64) -> f64 {
        self.g().inverse().eval(v)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.g().breakpoints()
    }

    fn validate(&self) -> Result<()> {
        self.require_budget()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub left: usize,
    pub right: usize,
    pub weights: Vec<Vec<f64>>,
    pub exists: Vec<Vec<bool>>,
}

impl Instance {
    pub fn new(weights: Vec<Vec<f64>>, exists: Vec<Vec<bool>>) -> Result<Self> {
        let inst = Self { left: weights.len(), right: weights.first().map_or(0, Vec::len), weights, exists };
        inst.validate()?;
        Ok(inst)
    }

    /// Every pair present with weight 1.
    pub fn complete_unweighted(left: usize, right: usize) -> Self {
        Self { left, right, weights: vec![vec![1.0; right]; left], exists: vec![vec![true; right]; left] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.left == 0 || self.right == 0 {
            return domain("both sides need at least one vertex");
        }
        for (name, rows) in [("weights", self.weights.len()), ("exists", self.exists.len())] {
            if rows != self.left {
                return domain(format!("{name} has {rows} rows, expected {}", self.left));
            }
        }
        for (wr, er) in self.weights.iter().zip(&self.exists) {
            if wr.len() != self.right {
                return Err(Error::Dimension { expected: self.right, got: wr.len() });
            }
            if er.len() != self.right {
                return Err(Error::Dimension { expected: self.right, got: er.len() });
            }
            if wr.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return domain("weights must be finite and non-negative");
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }

    /// Existing pairs `(u, v)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.left {
            for v in 0..self.right {
                if self.exists[u][v] {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Ranks for both sides; `None` marks a removed vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankAssignment {
    pub left: Vec<Option<f64>>,
    pub right: Vec<Option<f64>>,
}

impl RankAssignment {
    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        let r = Self { left: left.into_iter().map(Some).collect(), right: right.into_iter().map(Some).collect() };
        r.validate()?;
        Ok(r)
    }

    pub fn sample<R: Rng>(left: usize, right: usize, rng: &mut R) -> Self {
        Self {
            left: (0..left).map(|_| Some(rng.gen::<f64>())).collect(),
            right: (0..right).map(|_| Some(rng.gen::<f64>())).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.left.iter().chain(&self.right).flatten().any(|y| !(0.0..1.0).contains(y)) {
            return domain("ranks must lie in [0, 1)");
        }
        Ok(())
    }

    fn check_shape(&self, inst: &Instance) -> Result<()> {
        if self.left.len() != inst.left {
            return Err(Error::Dimension { expected: inst.left, got: self.left.len() });
        }
        if self.right.len() != inst.right {
            return Err(Error::Dimension { expected: inst.right, got: self.right.len() });
        }
        self.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub u: usize,
    pub v: usize,
    pub exists: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<(usize, usize)>,
    pub alpha_left: Vec<f64>,
    pub alpha_right: Vec<f64>,
    pub trace: Vec<Query>,
    pub total_weight: f64,
    /// Partner of each left vertex, if matched.
    pub partner_left: Vec<Option<usize>>,
    pub partner_right: Vec<Option<usize>>,
}

/// Answers existence queries. The algorithm sees edges only through this.
pub trait EdgeOracle {
    fn query(&mut self, u: usize, v: usize) -> bool;
}

impl EdgeOracle for &Instance {
    fn query(&mut self, u: usize, v: usize) -> bool {
        self.exists[u][v]
    }
}

/// Wraps an instance and records which existence bits were read.
pub struct RecordingOracle<'a> {
    inst: &'a Instance,
    pub accessed: Vec<(usize, usize)>,
}

impl<'a> RecordingOracle<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self { inst, accessed: Vec::new() }
    }
}

impl EdgeOracle for RecordingOracle<'_> {
    fn query(&mut self, u: usize, v: usize) -> bool {
        self.accessed.push((u, v));
        self.inst.exists[u][v]
    }
}

/// All pairs with both endpoints present, by perturbed weight descending,
/// ties broken by `(u, v)` ascending.
pub fn perturbed_order(inst: &Instance, gh: &dyn GainFunctions, ranks: &RankAssignment) -> Vec<(usize, usize)> {
    let gl: Vec<Option<f64>> = ranks.left.iter().map(|y| y.map(|y| gh.g(y))).collect();
    let gr: Vec<Option<f64>> = ranks.right.iter().map(|y| y.map(|y| gh.g(y))).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(inst.left * inst.right);
    for (u, gu) in gl.iter().enumerate() {
        let Some(gu) = gu else { continue };
        for (v, gv) in gr.iter().enumerate() {
            let Some(gv) = gv else { continue };
            pairs.push((gu * gv * inst.weights[u][v], u, v));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs.into_iter().map(|(_, u, v)| (u, v)).collect()
}

pub fn run(inst: &Instance, gh: &dyn GainFunctions, ranks: &RankAssignment) -> Result<MatchResult> {
    run_with_oracle(inst, gh, ranks, &mut &*inst)
}

/// Runs the algorithm, reading existence only through `oracle`.
pub fn run_with_oracle(
    inst: &Instance,
    gh: &dyn GainFunctions,
    ranks: &RankAssignment,
    oracle: &mut dyn EdgeOracle,
) -> Result<MatchResult> {
    gh.validate()?;
    inst.validate()?;
    ranks.check_shape(inst)?;
    Ok(run_unchecked(inst, gh, ranks, oracle))
}

fn run_unchecked(
    inst: &Instance,
    gh: &dyn GainFunctions,
    ranks: &RankAssignment,
    oracle: &mut dyn EdgeOracle,
) -> MatchResult {
    let mut partner_left = vec![None; inst.left];
    let mut partner_right = vec![None; inst.right];
    let mut alpha_left = vec![0.0; inst.left];
    let mut alpha_right = vec![0.0; inst.right];
    let mut trace = Vec::new();
    let mut pairs = Vec::new();
    let mut total_weight = 0.0;
    for (u, v) in perturbed_order(inst, gh, ranks) {
        if partner_left[u].is_some() || partner_right[v].is_some() {
            continue;
        }
        let exists = oracle.query(u, v);
        trace.push(Query { u, v, exists });
        if !exists {
            continue;
        }
        let (yu, yv) = (ranks.left[u].unwrap(), ranks.right[v].unwrap());
        let w = inst.weights[u][v];
        let base_u = gh.h(yu) * gh.g(yv) * w;
        let base_v = gh.h(yv) * gh.g(yu) * w;
        let surplus = w - base_u - base_v;
        alpha_left[u] = base_u + 0.5 * surplus;
        alpha_right[v] = w - alpha_left[u];
        partner_left[u] = Some(v);
        partner_right[v] = Some(u);
        pairs.push((u, v));
        total_weight += w;
    }
    MatchResult { pairs, alpha_left, alpha_right, trace, total_weight, partner_left, partner_right }
}

/// Maximum total weight of a matching on existing edges (Hungarian method
/// on the square padding of the weight matrix).
pub fn optimal_offline(inst: &Instance) -> f64 {
    let n = inst.left.max(inst.right);
    let w = |u: usize, v: usize| {
        if u < inst.left && v < inst.right && inst.exists[u][v] {
            inst.weights[u][v]
        } else {
            0.0
        }
    };
    // minimize cost = -w with potentials; 1-based arrays as in the classic form
    let inf = f64::INFINITY;
    let mut pu = vec![0.0; n + 1];
    let mut pv = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut owner = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = -w(i0 - 1, j - 1) - pu[i0] - pv[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    pu[owner[j]] += delta;
                    pv[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| w(owner[j] - 1, j - 1)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of `E[alpha_u + alpha_v] / w_uv` over uniform
/// `(y_u, y_v)`, other ranks fixed by `others` (the entries for `u` and `v`
/// are ignored). Sample `i` draws from stream `i` of a generator seeded with
/// `seed`, so the result does not depend on scheduling.
pub fn estimate_edge_dual(
    inst: &Instance,
    gh: &dyn GainFunctions,
    edge: (usize, usize),
    others: &RankAssignment,
    samples: usize,
    seed: u64,
) -> Result<DualEstimate> {
    let (u, v) = edge;
    gh.validate()?;
    others.check_shape(inst)?;
    if u >= inst.left || v >= inst.right {
        return domain(format!("edge ({u}, {v}) outside the instance"));
    }
    if !inst.exists[u][v] {
        return domain(format!("pair ({u}, {v}) is not an edge"));
    }
    let w = inst.weights[u][v];
    if w == 0.0 {
        return domain("w_uv = 0 leaves the ratio undefined");
    }
    if samples == 0 {
        return domain("need at least one sample");
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut ranks = others.clone();
            ranks.left[u] = Some(rng.gen::<f64>());
            ranks.right[v] = Some(rng.gen::<f64>());
            let r = run_unchecked(inst, gh, &ranks, &mut &*inst);
            (r.alpha_left[u] + r.alpha_right[v]) / w
        })
        .collect();
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if samples > 1 {
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(DualEstimate { mean, stderr, samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeStat {
    pub u: usize,
    pub v: usize,
    /// Mean of `(alpha_u + alpha_v) / w_uv` over all-random ranks.
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub runs: usize,
    /// Largest `|sum alpha - total_weight|`.
    pub max_accounting_gap: f64,
    /// Largest `|alpha_u + alpha_v - w_uv|` over matched pairs.
    pub max_split_gap: f64,
    /// Matched endpoints paid less than their guaranteed gain.
    pub gain_violations: usize,
    /// Runs whose pairs are not a matching of existing edges.
    pub invalid_matchings: usize,
}

impl InvariantSummary {
    pub fn ok(&self) -> bool {
        self.max_accounting_gap <= 1e-9
            && self.max_split_gap <= 1e-12
            && self.gain_violations == 0
            && self.invalid_matchings == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub samples: usize,
    pub seed: u64,
    pub prng: String,
    pub mean_weight: f64,
    pub mean_weight_stderr: f64,
    pub offline_optimum: f64,
    /// `mean_weight / offline_optimum`, or 1 for an empty optimum.
    pub ratio: f64,
    pub edges: Vec<EdgeStat>,
    pub invariants: InvariantSummary,
}

fn mean_stderr(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Runs the algorithm with every rank fresh in each sample (sample `i` uses
/// stream `i`) and summarizes weights, per-edge dual sums and the
/// accounting invariants.
pub fn simulate(inst: &Instance, gh: &dyn GainFunctions, samples: usize, seed: u64) -> Result<SimulationReport> {
    gh.validate()?;
    inst.validate()?;
    if samples == 0 {
        return domain("need at least one sample");
    }
    let edges: Vec<(usize, usize)> = inst.edges().into_iter().filter(|&(u, v)| inst.weights[u][v] > 0.0).collect();
    let per_sample: Vec<(f64, Vec<f64>, InvariantSummary)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let ranks = RankAssignment::sample(inst.left, inst.right, &mut rng);
            let r = run_unchecked(inst, gh, &ranks, &mut &*inst);
            let mut inv = InvariantSummary { runs: 1, ..Default::default() };
            let dual: f64 = r.alpha_left.iter().chain(&r.alpha_right).sum();
            inv.max_accounting_gap = (dual - r.total_weight).abs();
            let mut used_l = vec![false; inst.left];
            let mut used_r = vec![false; inst.right];
            for &(u, v) in &r.pairs {
                if used_l[u] || used_r[v] || !inst.exists[u][v] {
                    inv.invalid_matchings = 1;
                }
                used_l[u] = true;
                used_r[v] = true;
                let (yu, yv) = (ranks.left[u].unwrap(), ranks.right[v].unwrap());
                let w = inst.weights[u][v];
                inv.max_split_gap = inv.max_split_gap.max((r.alpha_left[u] + r.alpha_right[v] - w).abs());
                if r.alpha_left[u] < gh.h(yu) * gh.g(yv) * w - 1e-12 {
                    inv.gain_violations += 1;
                }
                if r.alpha_right[v] < gh.h(yv) * gh.g(yu) * w - 1e-12 {
                    inv.gain_violations += 1;
                }
            }
            let per_edge = edges
                .iter()
                .map(|&(u, v)| (r.alpha_left[u] + r.alpha_right[v]) / inst.weights[u][v])
                .collect();
            (r.total_weight, per_edge, inv)
        })
        .collect();

    let mut invariants = InvariantSummary::default();
    for (_, _, inv) in &per_sample {
        invariants.runs += inv.runs;
        invariants.max_accounting_gap = invariants.max_accounting_gap.max(inv.max_accounting_gap);
        invariants.max_split_gap = invariants.max_split_gap.max(inv.max_split_gap);
        invariants.gain_violations += inv.gain_violations;
        invariants.invalid_matchings += inv.invalid_matchings;
    }
    let (mean_weight, mean_weight_stderr) = mean_stderr(per_sample.iter().map(|s| s.0), samples);
    let edges = edges
        .iter()
        .enumerate()
        .map(|(k, &(u, v))| {
            let (mean, stderr) = mean_stderr(per_sample.iter().map(|s| s.1[k]), samples);
            EdgeStat { u, v, mean, stderr }
        })
        .collect();
    let offline_optimum = optimal_offline(inst);
    let ratio = if offline_optimum > 0.0 { mean_weight / offline_optimum } else { 1.0 };
    Ok(SimulationReport {
        samples,
        seed,
        prng: PRNG.to_string(),
        mean_weight,
        mean_weight_stderr,
        offline_optimum,
        ratio,
        edges,
        invariants,
    })
}

/// Matches vertices in increasing rank order, each to its unmatched neighbor
/// of smallest rank. `order[k]` is the vertex with the `k`-th smallest rank;
/// `adj[x][y]` tells whether `x` and `y` are adjacent. Returns the partner
/// of every vertex.
pub fn vertex_greedy(adj: &[Vec<bool>], order: &[usize]) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut pos = vec![0usize; n];
    for (k, &x) in order.iter().enumerate() {
        pos[x] = k;
    }
    let mut partner = vec![None; n];
    for &x in order {
        if partner[x].is_some() {
            continue;
        }
        let best = (0..n).filter(|&y| y != x && adj[x][y] && partner[y].is_none()).min_by_key(|&y| pos[y]);
        if let Some(y) = best {
            partner[x] = Some(y);
            partner[y] = Some(x);
        }
    }
    partner
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub lemma: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub rank_tuples: u64,
    pub runs: u64,
    pub checks: u64,
    pub violations: Vec<LemmaViolation>,
}

const EPS: f64 = 1e-12;

/// What a vertex gets from a run: `g(y_partner) w`, or `-inf` if unmatched.
fn satisfaction(
    gh: &dyn GainFunctions,
    inst: &Instance,
    ranks: &RankAssignment,
    r: &MatchResult,
    left_side: bool,
    x: usize,
) -> f64 {
    if left_side {
        match r.partner_left[x] {
            Some(v) => gh.g(ranks.right[v].unwrap()) * inst.weights[x][v],
            None => f64::NEG_INFINITY,
        }
    } else {
        match r.partner_right[x] {
            Some(u) => gh.g(ranks.left[u].unwrap()) * inst.weights[u][x],
            None => f64::NEG_INFINITY,
        }
    }
}

/// Per-tuple record: the full run and one run per removed vertex.
struct TupleRuns {
    full: MatchResult,
    /// `sat[r][x]`: satisfaction of vertex `x` when vertex `r` is removed
    /// (`r == x` gives `-inf`). Vertices are indexed left first.
    sat_removed: Vec<Vec<f64>>,
    sat_full: Vec<f64>,
}

/// Exhaustively checks the structural lemmas on the rank grid
/// `{k/m + delta : k < m}` with `delta = 1 / (2 m n_segments)`.
///
/// For every rank tuple and existing edge `(u, v)` this checks that adding a
/// neighbor never hurts either endpoint, the basic-gain inequalities with
/// marginal ranks computed from the runs with `u` or `v` removed, and the
/// extra-gain claim. Across grid-adjacent tuples it checks that a smaller
/// rank never yields a less preferred matching (with and without any one
/// vertex removed) and that marginal ranks are non-decreasing.
pub fn check_structural_lemmas(inst: &Instance, gh: &dyn GainFunctions, m: usize) -> Result<LemmaReport> {
    gh.validate()?;
    inst.validate()?;
    if m == 0 {
        return domain("grid size m must be positive");
    }
    let nv = inst.left + inst.right;
    if nv > 10 {
        return Err(Error::TooLarge(format!("{nv} vertices; the grid check supports at most 10")));
    }
    let segments = gh.breakpoints().len() + 1;
    let delta = 1.0 / (2.0 * m as f64 * segments as f64);
    let grid: Vec<f64> = (0..m).map(|k| k as f64 / m as f64 + delta).collect();
    let tuples = (m as u64).pow(nv as u32);

    let decode = |mut code: u64| -> Vec<usize> {
        let mut ks = vec![0usize; nv];
        for slot in ks.iter_mut() {
            *slot = (code % m as u64) as usize;
            code /= m as u64;
        }
        ks
    };
    let ranks_of = |ks: &[usize], removed: Option<usize>| RankAssignment {
        left: (0..inst.left).map(|x| (removed != Some(x)).then(|| grid[ks[x]])).collect(),
        right: (0..inst.right)
            .map(|x| (removed != Some(inst.left + x)).then(|| grid[ks[inst.left + x]]))
            .collect(),
    };
    let side = |x: usize| if x < inst.left { (true, x) } else { (false, x - inst.left) };

    let compute = |code: u64| -> TupleRuns {
        let ks = decode(code);
        let ranks = ranks_of(&ks, None);
        let full = run_unchecked(inst, gh, &ranks, &mut &*inst);
        let sat_full = (0..nv)
            .map(|x| {
                let (l, i) = side(x);
                satisfaction(gh, inst, &ranks, &full, l, i)
            })
            .collect();
        let sat_removed = (0..nv)
            .map(|r| {
                let rr = ranks_of(&ks, Some(r));
                let res = run_unchecked(inst, gh, &rr, &mut &*inst);
                (0..nv)
                    .map(|x| {
                        if x == r {
                            f64::NEG_INFINITY
                        } else {
                            let (l, i) = side(x);
                            satisfaction(gh, inst, &rr, &res, l, i)
                        }
                    })
                    .collect()
            })
            .collect();
        TupleRuns { full, sat_removed, sat_full }
    };

    let all: Vec<TupleRuns> = (0..tuples).into_par_iter().map(compute).collect();
    let edges = inst.edges();

    let marginal = |sat: f64, w: f64| -> f64 {
        if sat == f64::NEG_INFINITY {
            gh.g_inverse(0.0)
        } else {
            gh.g_inverse(sat / w)
        }
    };

    let check_tuple = |code: u64| -> (u64, Vec<LemmaViolation>) {
        let ks = decode(code);
        let t = &all[code as usize];
        let mut out = Vec::new();
        let mut checks = 0u64;
        let mut flag = |ok: bool, lemma: &str, detail: String, out: &mut Vec<LemmaViolation>| {
            checks += 1;
            if !ok {
                out.push(LemmaViolation { lemma: lemma.into(), detail });
            }
        };
        let ranks = ranks_of(&ks, None);
        for &(u, v) in &edges {
            let (xu, xv) = (u, inst.left + v);
            let w = inst.weights[u][v];
            if w == 0.0 {
                continue;
            }
            let tag = format!("ranks {ks:?}, edge ({u}, {v})");
            flag(t.sat_full[xu] >= t.sat_removed[xv][xu], "add-neighbor", format!("{tag}: u"), &mut out);
            flag(t.sat_full[xv] >= t.sat_removed[xu][xv], "add-neighbor", format!("{tag}: v"), &mut out);

            let (yu, yv) = (ranks.left[u].unwrap(), ranks.right[v].unwrap());
            let theta = marginal(t.sat_removed[xu][xv], w);
            let beta = marginal(t.sat_removed[xv][xu], w);
            let (au, av) = (t.full.alpha_left[u], t.full.alpha_right[v]);
            flag(au >= gh.h(yu) * gh.g(beta) * w - EPS, "basic-gain", format!("{tag}: alpha_u {au}"), &mut out);
            flag(av >= gh.h(yv) * gh.g(theta) * w - EPS, "basic-gain", format!("{tag}: alpha_v {av}"), &mut out);
            if yu < theta && yv < beta {
                let matched = t.full.partner_left[u] == Some(v);
                flag(matched && (au + av - w).abs() <= EPS, "extra-gain", tag.clone(), &mut out);
            }

            // theta(y_v) non-decreasing in y_v, beta(y_u) in y_u
            for (x, other, r_other, mr) in [(xv, xu, xu, "theta"), (xu, xv, xv, "beta")] {
                let _ = other;
                if ks[x] + 1 < m {
                    let next = code + (m as u64).pow(x as u32);
                    let here = marginal(t.sat_removed[r_other][x], w);
                    let there = marginal(all[next as usize].sat_removed[r_other][x], w);
                    flag(there >= here, "marginal-rank-monotonicity", format!("{tag}: {mr}"), &mut out);
                }
            }
        }
        // smaller rank, more preferred matching; with nobody or any one
        // other vertex removed
        for x in 0..nv {
            if ks[x] + 1 >= m {
                continue;
            }
            let next = &all[(code + (m as u64).pow(x as u32)) as usize];
            flag(t.sat_full[x] >= next.sat_full[x], "rank-monotonicity", format!("ranks {ks:?}, vertex {x}"), &mut out);
            for r in 0..nv {
                if r != x {
                    flag(
                        t.sat_removed[r][x] >= next.sat_removed[r][x],
                        "rank-monotonicity",
                        format!("ranks {ks:?}, vertex {x}, removed {r}"),
                        &mut out,
                    );
                }
            }
        }
        (checks, out)
    };

    let per: Vec<(u64, Vec<LemmaViolation>)> = (0..tuples).into_par_iter().map(check_tuple).collect();
    let mut report = LemmaReport { rank_tuples: tuples, runs: tuples * (nv as u64 + 1), checks: 0, violations: vec![] };
    for (c, v) in per {
        report.checks += c;
        report.violations.extend(v);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `g(y) = 1 - y`, `h = 1/2`: satisfies the budget constraint.
    struct Linear;

    impl GainFunctions for Linear {
        fn g(&self, y: f64) -> f64 {
            1.0 - y
        }
        fn h(&self, _: f64) -> f64 {
            0.5
        }
        fn g_inverse(&self, v: f64) -> f64 {
            (1.0 - v).clamp(0.0, 1.0)
        }
        fn breakpoints(&self) -> Vec<f64> {
            vec![]
        }
        fn validate(&self) -> Result<()> {
            Ok(())
        }
    }

    fn two_by_two() -> (Instance, RankAssignment) {
        let inst = Instance::new(vec![vec![3.0, 2.0], vec![2.0, 3.0]], vec![vec![true; 2]; 2]).unwrap();
        let ranks = RankAssignment::new(vec![0.1, 0.3], vec![0.2, 0.4]).unwrap();
        (inst, ranks)
    }

    #[test]
    fn order_example() {
        let (inst, ranks) = two_by_two();
        assert_eq!(perturbed_order(&inst, &Linear, &ranks), vec![(0, 0), (1, 1), (1, 0), (0, 1)]);
        let flat = RankAssignment::new(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let eq = Instance::complete_unweighted(2, 2);
        assert_eq!(perturbed_order(&eq, &Linear, &flat), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn run_examples() {
        let (inst, ranks) = two_by_two();
        let r = run(&inst, &Linear, &ranks).unwrap();
        assert_eq!(r.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(r.total_weight, 6.0);

        let gh = GhPair::from_values(vec![0.5], vec![1.0]).unwrap();
        let one = Instance::complete_unweighted(1, 1);
        let ranks = RankAssignment::new(vec![0.3], vec![0.6]).unwrap();
        let r = run(&one, &gh, &ranks).unwrap();
        assert_eq!((r.alpha_left[0], r.alpha_right[0]), (0.5, 0.5));

        let none = Instance::new(vec![vec![1.0]], vec![vec![false]]).unwrap();
        let r = run(&none, &gh, &ranks).unwrap();
        assert!(r.pairs.is_empty());
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.alpha_left[0] + r.alpha_right[0], 0.0);

        let bad = GhPair::from_values(vec![0.9], vec![0.9]).unwrap();
        assert!(matches!(run(&one, &bad, &ranks), Err(Error::Budget { .. })));
    }

    #[test]
    fn offline_examples() {
        let (inst, _) = two_by_two();
        assert_eq!(optimal_offline(&inst), 6.0);
        assert_eq!(optimal_offline(&Instance::complete_unweighted(1, 1)), 1.0);
        let none = Instance::new(vec![vec![1.0, 2.0]], vec![vec![false, false]]).unwrap();
        assert_eq!(optimal_offline(&none), 0.0);
        let skew = Instance::new(vec![vec![5.0, 4.0, 0.0], vec![4.0, 0.0, 0.0]], vec![vec![true; 3]; 2]).unwrap();
        assert_eq!(optimal_offline(&skew), 8.0);
    }

    #[test]
    fn single_edge_dual_estimate() {
        let gh = GhPair::from_values(vec![0.7], vec![0.7]).unwrap();
        let inst = Instance::complete_unweighted(1, 1);
        let others = RankAssignment::new(vec![0.0], vec![0.0]).unwrap();
        let a = estimate_edge_dual(&inst, &gh, (0, 0), &others, 100, 7).unwrap();
        assert!((a.mean - 1.0).abs() < 1e-12);
        assert!(a.stderr < 1e-12);
        let b = estimate_edge_dual(&inst, &gh, (0, 0), &others, 100, 7).unwrap();
        assert_eq!(a, b);
        let zero = Instance::new(vec![vec![0.0]], vec![vec![true]]).unwrap();
        assert!(estimate_edge_dual(&zero, &gh, (0, 0), &others, 10, 1).is_err());
    }

    #[test]
    fn lemma_check_trivial_grid() {
        let gh = GhPair::from_values(vec![0.8, 0.5], vec![0.6, 0.8]).unwrap();
        let (inst, _) = two_by_two();
        let r = check_structural_lemmas(&inst, &gh, 1).unwrap();
        assert_eq!(r.rank_tuples, 1);
        assert!(r.violations.is_empty());
        let r = check_structural_lemmas(&inst, &gh, 4).unwrap();
        assert!(r.violations.is_empty(), "{:?}", &r.violations[..r.violations.len().min(5)]);
    }
}
