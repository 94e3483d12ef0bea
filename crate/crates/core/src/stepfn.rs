//! Step functions on `[0, 1]`, their generalized inverses, the marginal-rank
//! space `S_n`, and `(g, h)` parameter pairs.
//!
//! An `n`-segment step function takes the value `values[i]` on
//! `[i/n, (i+1)/n)` and an explicit extension value at `y = 1`. All step
//! functions are right-continuous by construction.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default absolute tolerance for the budget constraint.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    NonIncreasing,
    NonDecreasing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    values: Vec<f64>,
    monotonicity: Monotonicity,
    extension_at_1: f64,
}

fn check_unit_interval(y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&y) {
        return domain(format!("argument {y} outside [0, 1]"));
    }
    Ok(())
}

impl StepFunction {
    pub fn new(values: Vec<f64>, monotonicity: Monotonicity, extension_at_1: f64) -> Result<Self> {
        if values.is_empty() {
            return domain("a step function needs at least one segment");
        }
        if values.iter().chain([&extension_at_1]).any(|v| !v.is_finite() || *v < 0.0) {
            return domain("step values must be finite and non-negative");
        }
        let ordered = |a: f64, b: f64| match monotonicity {
            Monotonicity::NonIncreasing => a >= b,
            Monotonicity::NonDecreasing => a <= b,
        };
        let mut chain = values.iter().copied().chain([extension_at_1]);
        let mut prev = chain.next().unwrap();
        for v in chain {
            if !ordered(prev, v) {
                return domain(format!("values are not {monotonicity:?}"));
            }
            prev = v;
        }
        Ok(Self { values, monotonicity, extension_at_1 })
    }

    /// Non-increasing step function with the boundary value `f(1) = 0`.
    pub fn non_increasing(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Monotonicity::NonIncreasing, 0.0)
    }

    /// Non-decreasing step function extended at `y = 1` by its last value.
    pub fn non_decreasing(values: Vec<f64>) -> Result<Self> {
        let ext = values.last().copied().unwrap_or(0.0);
        Self::new(values, Monotonicity::NonDecreasing, ext)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn extension_at_1(&self) -> f64 {
        self.extension_at_1
    }

    /// Segment index holding `y`, or `None` at `y = 1`.
    fn segment(&self, y: f64) -> Option<usize> {
        if y >= 1.0 {
            None
        } else {
            Some(((y * self.n() as f64).floor() as usize).min(self.n() - 1))
        }
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        check_unit_interval(y)?;
        Ok(self.eval_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, y: f64) -> f64 {
        match self.segment(y) {
            Some(i) => self.values[i],
            None => self.extension_at_1,
        }
    }

    /// Generalized inverse: `inf{x : f(x) <= y}` for non-increasing `f`,
    /// `inf{x : f(x) > y}` for non-decreasing `f`, with `inf {} = 1`.
    pub fn inverse(&self) -> StepInverse<'_> {
        StepInverse { f: self }
    }

    /// Breakpoints `i/n` strictly inside `(0, 1)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.n();
        (1..n).map(|i| i as f64 / n as f64).collect()
    }
}

/// Generalized inverse of a [`StepFunction`], queryable at any `y`.
#[derive(Clone, Copy, Debug)]
pub struct StepInverse<'a> {
    f: &'a StepFunction,
}

impl StepInverse<'_> {
    pub fn eval(&self, y: f64) -> f64 {
        let n = self.f.n();
        let hit = |v: f64| match self.f.monotonicity {
            Monotonicity::NonIncreasing => v <= y,
            Monotonicity::NonDecreasing => v > y,
        };
        match self.f.values.iter().position(|&v| hit(v)) {
            Some(i) => i as f64 / n as f64,
            None => 1.0,
        }
    }
}

/// An element of `S_n`: a non-decreasing `n`-segment step function with
/// values in `{0, 1/n, ..., 1}`, stored as integer levels. The value at
/// `y = 1` is level `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct GridStep {
    levels: Vec<u8>,
}

impl TryFrom<Vec<u8>> for GridStep {
    type Error = Error;

    fn try_from(levels: Vec<u8>) -> Result<Self> {
        GridStep::from_levels(levels)
    }
}

impl From<GridStep> for Vec<u8> {
    fn from(s: GridStep) -> Self {
        s.levels
    }
}

impl fmt::Display for GridStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.levels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

impl GridStep {
    pub fn from_levels(levels: Vec<u8>) -> Result<Self> {
        let n = levels.len();
        if n == 0 || n > u8::MAX as usize {
            return domain(format!("grid step length {n} outside [1, 255]"));
        }
        if levels.windows(2).any(|w| w[0] > w[1]) {
            return domain("grid step levels must be non-decreasing");
        }
        if levels.iter().any(|&l| l as usize > n) {
            return domain(format!("grid step level exceeds n = {n}"));
        }
        Ok(Self { levels })
    }

    pub fn constant(n: usize, level: u8) -> Result<Self> {
        Self::from_levels(vec![level; n])
    }

    pub fn n(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn level_sum(&self) -> u32 {
        self.levels.iter().map(|&l| l as u32).sum()
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        check_unit_interval(y)?;
        Ok(self.eval_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, y: f64) -> f64 {
        let n = self.n();
        if y >= 1.0 {
            return 1.0;
        }
        let i = ((y * n as f64).floor() as usize).min(n - 1);
        self.levels[i] as f64 / n as f64
    }

    /// Levels of the generalized inverse at the grid points `(i-1)/n`:
    /// entry `i` counts the segments whose level is below `i + 1`.
    pub fn inverse_levels(&self) -> Vec<u8> {
        let n = self.n();
        let mut out = vec![0u8; n];
        let mut below = 0usize;
        for (i, slot) in out.iter_mut().enumerate() {
            while below < n && (self.levels[below] as usize) <= i {
                below += 1;
            }
            *slot = below as u8;
        }
        out
    }

    /// The generalized inverse, itself an element of `S_n`.
    pub fn inverse(&self) -> GridStep {
        GridStep { levels: self.inverse_levels() }
    }

    /// Pointwise maximum with another grid step of equal length.
    pub fn pointwise_max(&self, other: &GridStep) -> Result<GridStep> {
        if other.n() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: other.n() });
        }
        let levels = self.levels.iter().zip(&other.levels).map(|(a, b)| *a.max(b)).collect();
        Ok(GridStep { levels })
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.n();
        (1..n).map(|i| i as f64 / n as f64).collect()
    }
}

/// `C(2n, n)`, the number of elements of `S_n`.
pub fn sn_size(n: usize) -> u64 {
    binomial(2 * n as u64, n as u64)
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of non-decreasing sequences of `len` values drawn from `[lo, n]`.
fn tails(len: usize, lo: usize, n: usize) -> u64 {
    if len == 0 {
        return 1;
    }
    let choices = (n + 1 - lo) as u64;
    binomial(len as u64 + choices - 1, len as u64)
}

/// Lexicographic iterator over `S_n`, optionally restricted to a rank range
/// so that disjoint chunks can be handed to independent consumers.
#[derive(Clone, Debug)]
pub struct SnIter {
    n: usize,
    current: Option<Vec<u8>>,
    remaining: u64,
}

/// Enumerates every element of `S_n` exactly once, in lexicographic order.
pub fn enumerate_sn(n: usize) -> Result<SnIter> {
    SnIter::range(n, 0, sn_size_checked(n)?)
}

fn sn_size_checked(n: usize) -> Result<u64> {
    if n == 0 {
        return domain("S_n needs n >= 1");
    }
    if n > 30 {
        return domain(format!("S_n with n = {n} is too large to enumerate"));
    }
    Ok(sn_size(n))
}

impl SnIter {
    /// Elements with lexicographic rank in `[start, end)`.
    pub fn range(n: usize, start: u64, end: u64) -> Result<Self> {
        let total = sn_size_checked(n)?;
        let end = end.min(total);
        if start >= end {
            return Ok(Self { n, current: None, remaining: 0 });
        }
        Ok(Self { n, current: Some(unrank(n, start)), remaining: end - start })
    }
}

/// The element of `S_n` with the given lexicographic rank.
pub fn unrank(n: usize, mut rank: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(n);
    let mut lo = 0usize;
    for pos in 0..n {
        let len = n - pos - 1;
        let mut v = lo;
        loop {
            let block = tails(len, v, n);
            if rank < block {
                break;
            }
            rank -= block;
            v += 1;
        }
        out.push(v as u8);
        lo = v;
    }
    out
}

impl Iterator for SnIter {
    type Item = GridStep;

    fn next(&mut self) -> Option<GridStep> {
        if self.remaining == 0 {
            return None;
        }
        let cur = self.current.as_mut()?;
        let item = GridStep { levels: cur.clone() };
        self.remaining -= 1;
        if self.remaining > 0 {
            // successor: bump the rightmost level below n, reset the tail to it
            let n = self.n as u8;
            let pos = cur.iter().rposition(|&l| l < n)?;
            let v = cur[pos] + 1;
            for slot in &mut cur[pos..] {
                *slot = v;
            }
        }
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

/// Outcome of a budget-constraint check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub ok: bool,
    /// `max_{i,j} (H_i G_j + H_j G_i - 1)`; negative when there is slack.
    pub max_violation: f64,
    /// 1-based `(i, j)` with `i <= j` attaining the maximum.
    pub witness: (usize, usize),
}

/// Algorithm parameters: a non-increasing `g` (with `g(1) = 0`) and a
/// non-decreasing `h` over the same number of segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GhJson", into = "GhJson")]
pub struct GhPair {
    g: StepFunction,
    h: StepFunction,
}

#[derive(Clone, Serialize, Deserialize)]
struct GhJson {
    n: usize,
    #[serde(rename = "G")]
    g: Vec<f64>,
    #[serde(rename = "H")]
    h: Vec<f64>,
}

impl GhPair {
    /// Builds a pair from segment values. Shape, monotonicity and positivity
    /// are enforced here; the budget constraint is checked separately.
    pub fn from_values(g: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if g.len() != h.len() {
            return Err(Error::Dimension { expected: g.len(), got: h.len() });
        }
        if g.iter().chain(&h).any(|&v| !(v > 0.0)) {
            return domain("G and H values must be strictly positive");
        }
        Ok(Self {
            g: StepFunction::non_increasing(g)?,
            h: StepFunction::non_decreasing(h)?,
        })
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn g(&self) -> &StepFunction {
        &self.g
    }

    pub fn h(&self) -> &StepFunction {
        &self.h
    }

    pub fn g_values(&self) -> &[f64] {
        self.g.values()
    }

    pub fn h_values(&self) -> &[f64] {
        self.h.values()
    }

    pub fn check_budget(&self) -> BudgetCheck {
        self.check_budget_with(BUDGET_TOLERANCE)
    }

    pub fn check_budget_with(&self, tolerance: f64) -> BudgetCheck {
        let (g, h) = (self.g_values(), self.h_values());
        let mut worst = f64::NEG_INFINITY;
        let mut witness = (1, 1);
        for i in 0..g.len() {
            for j in i..g.len() {
                let v = h[i] * g[j] + h[j] * g[i] - 1.0;
                if v > worst {
                    worst = v;
                    witness = (i + 1, j + 1);
                }
            }
        }
        BudgetCheck { ok: worst <= tolerance, max_violation: worst, witness }
    }

    /// Errors unless the budget constraint holds within [`BUDGET_TOLERANCE`].
    pub fn require_budget(&self) -> Result<()> {
        let c = self.check_budget();
        if c.ok {
            Ok(())
        } else {
            Err(Error::Budget { violation: c.max_violation, i: c.witness.0, j: c.witness.1 })
        }
    }

    /// Scales `H` down by `1 + v` when the budget is violated by `v > 0`,
    /// which restores feasibility exactly. Used for coordinates published
    /// with rounded digits.
    pub fn with_budget_repair(&self) -> (GhPair, f64) {
        let c = self.check_budget();
        if c.max_violation <= 0.0 {
            return (self.clone(), 1.0);
        }
        let scale = 1.0 / (1.0 + c.max_violation);
        let h: Vec<f64> = self.h_values().iter().map(|v| v * scale).collect();
        let mut repaired = GhPair::from_values(self.g_values().to_vec(), h)
            .expect("scaling preserves shape and sign");
        // rounding in the division can leave a few ulps of violation
        while repaired.check_budget().max_violation > 0.0 {
            let h = repaired.h_values().iter().map(|v| v * (1.0 - f64::EPSILON)).collect();
            repaired = GhPair::from_values(self.g_values().to_vec(), h).unwrap();
        }
        let applied = repaired.h_values()[0] / self.h_values()[0];
        (repaired, applied)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// CSV with header `i,G_i,H_i`, one row per segment (1-based `i`).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "G_i", "H_i"])?;
        for (i, (g, h)) in self.g_values().iter().zip(self.h_values()).enumerate() {
            wr.write_record([(i + 1).to_string(), g.to_string(), h.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows: Vec<(usize, f64, f64)> = Vec::new();
        for rec in rd.deserialize() {
            rows.push(rec?);
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(k, r)| r.0 != k + 1) {
            return domain("CSV rows must be numbered 1..n");
        }
        Self::from_values(rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.2).collect())
    }
}

impl From<GhPair> for GhJson {
    fn from(gh: GhPair) -> Self {
        GhJson { n: gh.n(), g: gh.g_values().to_vec(), h: gh.h_values().to_vec() }
    }
}

impl TryFrom<GhJson> for GhPair {
    type Error = Error;

    fn try_from(j: GhJson) -> Result<Self> {
        if j.g.len() != j.n {
            return Err(Error::Dimension { expected: j.n, got: j.g.len() });
        }
        Self::from_values(j.g, j.h)
    }
}

/// Parameters of the circle-plus-tangent family: `phi` in `[0, pi/4]` and
/// non-increasing `g` values in `[0, cos phi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralFormParams {
    pub phi: f64,
    pub g_values: Vec<f64>,
}

/// `h` for one `g` value: tangent segment below `sin phi`, unit circle above.
pub fn general_form_h(phi: f64, g: f64) -> f64 {
    if g < phi.sin() {
        1.0 / phi.cos() - g * phi.tan()
    } else {
        (1.0 - g * g).max(0.0).sqrt()
    }
}

/// Builds the budget-saturating `h` for the given `g` values.
pub fn general_form(params: &GeneralFormParams) -> Result<GhPair> {
    let phi = params.phi;
    if !(0.0..=std::f64::consts::FRAC_PI_4).contains(&phi) {
        return domain(format!("phi = {phi} outside [0, pi/4]"));
    }
    let cap = phi.cos();
    if let Some(g) = params.g_values.iter().find(|&&g| !(0.0..=cap + 1e-15).contains(&g)) {
        return domain(format!("g value {g} outside [0, cos phi = {cap}]"));
    }
    let h = params.g_values.iter().map(|&g| general_form_h(phi, g)).collect();
    let gh = GhPair::from_values(params.g_values.clone(), h)?;
    gh.require_budget()?;
    Ok(gh)
}
