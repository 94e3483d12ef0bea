//! Closed-form `g(y) = a - b exp(min(y, c))`, `h = sqrt(1 - g^2)`, the
//! integral lower bound for arbitrary marginal ranks, and the numeric checks
//! behind the 0.6324 analytic ratio.
//!
//! Two readings of `g` appear here. [`ClosedFormGh::g_smooth`] is the formula
//! on all of `[0, 1]` and is what the analytic bound uses. As an algorithm
//! parameter ([`GainFunctions::g`]) the boundary value `g(1) = 0` applies.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quad::{integrate_pieces, Antiderivative};
use crate::ranking::GainFunctions;
use crate::stepfn::{GridStep, StepFunction};

pub const QUAD_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for AnalyticParams {
    fn default() -> Self {
        Self { a: 1.171, b: 0.339, c: 0.652 }
    }
}

impl AnalyticParams {
    pub fn validate(&self) -> Result<()> {
        let Self { a, b, c } = *self;
        if ![a, b, c].iter().all(|v| v.is_finite()) {
            return domain("parameters must be finite");
        }
        if !(0.0 < c && c < 1.0) {
            return domain(format!("c = {c} outside (0, 1)"));
        }
        if b < 0.0 {
            return domain(format!("b = {b} must be non-negative"));
        }
        if a - b * c.exp() <= 0.0 {
            return domain("a - b e^c must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormGh {
    params: AnalyticParams,
}

pub fn closed_form_gh(params: AnalyticParams) -> Result<ClosedFormGh> {
    params.validate()?;
    let gh = ClosedFormGh { params };
    // g is monotone, so its extremes sit at 0 and c
    for y in [0.0, params.c] {
        let g = gh.g_smooth(y);
        if g.abs() > 1.0 {
            return domain(format!("|g({y})| = {} > 1 leaves h undefined", g.abs()));
        }
    }
    Ok(gh)
}

impl ClosedFormGh {
    pub fn params(&self) -> AnalyticParams {
        self.params
    }

    pub fn g_smooth(&self, y: f64) -> f64 {
        let AnalyticParams { a, b, c } = self.params;
        a - b * y.min(c).exp()
    }

    pub fn h_smooth(&self, y: f64) -> f64 {
        let g = self.g_smooth(y);
        (1.0 - g * g).max(0.0).sqrt()
    }

    pub fn g_prime(&self, y: f64) -> f64 {
        let AnalyticParams { b, c, .. } = self.params;
        if y <= c {
            -b * y.exp()
        } else {
            0.0
        }
    }
}

impl GainFunctions for ClosedFormGh {
    fn g(&self, y: f64) -> f64 {
        if y >= 1.0 {
            0.0
        } else {
            self.g_smooth(y)
        }
    }

    fn h(&self, y: f64) -> f64 {
        self.h_smooth(y)
    }

    fn g_inverse(&self, v: f64) -> f64 {
        let AnalyticParams { a, b, c } = self.params;
        if v >= self.g_smooth(0.0) {
            0.0
        } else if v < self.g_smooth(c) {
            1.0
        } else {
            ((a - v) / b).ln().clamp(0.0, c)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.params.c]
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Maximum over `y` of `h(1) (g(y) - g'(y))`.
    pub value: f64,
    pub argmax: f64,
    /// The analytic bound applies only when `value < 1`.
    pub applicable: bool,
}

/// Grid maximum (step `1e-4`) of `h(1) (g(y) - g'(y))` over `[0, 1)`, refined
/// by golden-section search on the best cell.
pub fn check_condition(params: AnalyticParams) -> Result<ConditionReport> {
    let gh = closed_form_gh(params)?;
    let h1 = gh.h_smooth(1.0);
    let obj = |y: f64| h1 * (gh.g_smooth(y) - gh.g_prime(y));
    let steps = 10_000;
    let (mut best_y, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..steps {
        let y = k as f64 / steps as f64;
        let v = obj(y);
        if v > best {
            best = v;
            best_y = y;
        }
    }
    let lo = (best_y - 1.0 / steps as f64).max(0.0);
    let hi = (best_y + 1.0 / steps as f64).min(1.0f64.next_down());
    let (y, v) = golden_max(&obj, lo, hi, 1e-12);
    if v > best {
        best = v;
        best_y = y;
    }
    Ok(ConditionReport { value: best, argmax: best_y, applicable: best < 1.0 })
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// A non-decreasing map on `[0, 1]` together with its generalized inverse
/// `y -> inf{x : f(x) > y}`.
pub struct Monotone<'a> {
    f: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    inv: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    breakpoints: Vec<f64>,
}

impl<'a> Monotone<'a> {
    pub fn new(
        f: impl Fn(f64) -> f64 + Sync + 'a,
        inv: impl Fn(f64) -> f64 + Sync + 'a,
        breakpoints: Vec<f64>,
    ) -> Self {
        Self { f: Box::new(f), inv: Box::new(inv), breakpoints }
    }

    pub fn from_grid(s: &GridStep) -> Self {
        let n = s.n();
        let values: Vec<f64> = s.levels().iter().map(|&l| l as f64 / n as f64).collect();
        let sf = StepFunction::new(values, crate::stepfn::Monotonicity::NonDecreasing, 1.0)
            .expect("grid levels are monotone");
        let sf2 = sf.clone();
        let bps = sf.breakpoints();
        Self::new(move |y| sf.eval_unchecked(y), move |y| sf2.inverse().eval(y), bps)
    }

    /// The constant map `y -> v` with `v` in `[0, 1]`.
    pub fn constant(v: f64) -> Self {
        Self::new(move |_| v, move |y| if v > y { 0.0 } else { 1.0 }, vec![])
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (self.inv)(y)
    }

    fn check(&self, name: &str) -> Result<()> {
        let samples = 1000;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=samples {
            let v = self.eval(k as f64 / samples as f64);
            if v < prev - 1e-12 {
                return domain(format!("{name} is not non-decreasing"));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Numerical value of the three-integral lower bound on
/// `E[alpha_u + alpha_v] / w_uv` for marginal ranks `theta`, `beta`.
pub fn universal_bound_numeric(
    gh: &dyn GainFunctions,
    theta: &Monotone<'_>,
    beta: &Monotone<'_>,
) -> Result<f64> {
    theta.check("theta")?;
    beta.check("beta")?;
    let mut bps = gh.breakpoints();
    bps.extend(&theta.breakpoints);
    bps.extend(&beta.breakpoints);
    let integrand = |y: f64| {
        let (t, b) = (theta.eval(y), beta.eval(y));
        let d = (t - beta.inverse(y)).max(0.0);
        let e = (b - theta.inverse(y)).max(0.0);
        let h = gh.h(y);
        d + (1.0 - d) * h * gh.g(t) + (1.0 - e) * h * gh.g(b)
    };
    Ok(integrate_pieces(&integrand, 0.0, 1.0, &bps, QUAD_TOL))
}

/// Closed-form `g, h` with tabulated antiderivatives `G`, `H`.
pub struct AnalyticEvaluation {
    gh: ClosedFormGh,
    g_int: Antiderivative<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    h_int: Antiderivative<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl AnalyticEvaluation {
    /// Tables use `cells` uniform cells; `1000` puts every `1e-3` grid point
    /// on a table entry.
    pub fn new(params: AnalyticParams, cells: usize) -> Result<Self> {
        let gh = closed_form_gh(params)?;
        let (g1, g2) = (gh, gh);
        let g: Box<dyn Fn(f64) -> f64 + Send + Sync> = Box::new(move |y| g1.g_smooth(y));
        let h: Box<dyn Fn(f64) -> f64 + Send + Sync> = Box::new(move |y| g2.h_smooth(y));
        let bps = vec![params.c];
        Ok(Self {
            gh,
            g_int: Antiderivative::new(g, cells, bps.clone(), QUAD_TOL),
            h_int: Antiderivative::new(h, cells, bps, QUAD_TOL),
        })
    }

    pub fn gh(&self) -> &ClosedFormGh {
        &self.gh
    }

    pub fn g(&self, y: f64) -> f64 {
        self.gh.g_smooth(y)
    }

    pub fn h(&self, y: f64) -> f64 {
        self.gh.h_smooth(y)
    }

    #[allow(non_snake_case)]
    pub fn G(&self, y: f64) -> f64 {
        self.g_int.eval(y)
    }

    #[allow(non_snake_case)]
    pub fn H(&self, y: f64) -> f64 {
        self.h_int.eval(y)
    }

    /// `f(tau, gamma, y, t)`, the integrand whose minimum over `t <= gamma`
    /// enters the bound.
    pub fn f(&self, tau: f64, gamma: f64, y: f64, t: f64) -> f64 {
        self.h(y) * self.g(t) + (self.g(y) - self.g(tau)) * self.H(t) + self.g(tau) * self.H(gamma)
    }

    /// Minimizer of `f` in `t` over `[0, gamma]` on a grid of `steps + 1`
    /// points.
    pub fn inner_argmin_scan(&self, tau: f64, gamma: f64, y: f64, steps: usize) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=steps {
            let t = gamma * k as f64 / steps as f64;
            let v = self.f(tau, gamma, y, t);
            if v < best.0 {
                best = (v, t);
            }
        }
        best.1
    }

    /// The lower bound with the inner minimum placed at `t = min(gamma, c)`.
    pub fn lower_bound(&self, tau: f64, gamma: f64) -> f64 {
        let t = gamma.min(self.gh.params.c);
        self.lower_bound_parts(tau, gamma, t, self.H(tau), self.G(tau), self.H(gamma), self.H(t))
    }

    #[allow(clippy::too_many_arguments, non_snake_case)]
    fn lower_bound_parts(&self, tau: f64, gamma: f64, t: f64, Ht: f64, Gt: f64, Hg: f64, Hs: f64) -> f64 {
        let gt = self.g(tau);
        // integral over y in [0, tau] of f(tau, gamma, y, t), expanded
        let integral = self.g(t) * Ht + Hs * (Gt - tau * gt) + tau * gt * Hg;
        (1.0 - tau) * (1.0 - gamma) + (1.0 - tau) * gt * Hg + integral
    }

    /// `l(tau, gamma) = (1-tau)(1-gamma) + G(1) H(gamma) + H(tau) g(gamma)`.
    pub fn ell(&self, tau: f64, gamma: f64) -> f64 {
        (1.0 - tau) * (1.0 - gamma) + self.G(1.0) * self.H(gamma) + self.H(tau) * self.g(gamma)
    }

    /// `phi(tau) = g(tau) H(1) + g(c) H(tau) + (G(tau) - tau g(tau)) H(c)`.
    pub fn phi(&self, tau: f64) -> f64 {
        let c = self.gh.params.c;
        self.g(tau) * self.H(1.0) + self.g(c) * self.H(tau) + (self.G(tau) - tau * self.g(tau)) * self.H(c)
    }

    /// Root of `h(tau) = (1 - c) / g(c)`.
    pub fn tau_star(&self) -> f64 {
        let AnalyticParams { a, b, c } = self.gh.params;
        let r = (1.0 - c) / self.g(c);
        ((a - (1.0 - r * r).sqrt()) / b).ln()
    }

    /// Minimum of [`Self::lower_bound`] over the grid `{k / steps}^2`,
    /// refined by golden-section search in each coordinate around the grid
    /// argmin. The reported value subtracts the quadrature tolerance.
    #[allow(non_snake_case)]
    pub fn minimize(&self, steps: usize) -> GridMinimum {
        let cells = self.h_int.cells();
        let on_table = steps == cells;
        let c = self.gh.params.c;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=steps {
            let tau = i as f64 / steps as f64;
            let (Ht, Gt) = if on_table {
                (self.h_int.at_grid(i), self.g_int.at_grid(i))
            } else {
                (self.H(tau), self.G(tau))
            };
            for j in 0..=steps {
                let gamma = j as f64 / steps as f64;
                let t = gamma.min(c);
                let Hg = if on_table { self.h_int.at_grid(j) } else { self.H(gamma) };
                let Hs = if t == gamma { Hg } else { self.H(t) };
                let v = self.lower_bound_parts(tau, gamma, t, Ht, Gt, Hg, Hs);
                if v < best.0 {
                    best = (v, tau, gamma);
                }
            }
        }
        let (grid_min, mut tau, mut gamma) = best;
        let cell = 1.0 / steps as f64;
        for _ in 0..3 {
            let (lo, hi) = ((tau - cell).max(0.0), (tau + cell).min(1.0));
            tau = golden_max(&|x| -self.lower_bound(x, gamma), lo, hi, 1e-10).0;
            let (lo, hi) = ((gamma - cell).max(0.0), (gamma + cell).min(1.0));
            gamma = golden_max(&|x| -self.lower_bound(tau, x), lo, hi, 1e-10).0;
        }
        let refined = self.lower_bound(tau, gamma).min(grid_min);
        GridMinimum { grid_min, tau: best.1, gamma: best.2, refined, reported: refined - QUAD_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMinimum {
    pub grid_min: f64,
    pub tau: f64,
    pub gamma: f64,
    pub refined: f64,
    /// Conservative value: refined minimum minus the quadrature tolerance.
    pub reported: f64,
}

pub fn analytic_lower_bound(params: AnalyticParams, tau: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) || !(0.0..=1.0).contains(&gamma) {
        return domain("tau and gamma must lie in [0, 1]");
    }
    let cond = check_condition(params)?;
    if !cond.applicable {
        return domain(format!("condition value {} is not below 1", cond.value));
    }
    Ok(AnalyticEvaluation::new(params, 1000)?.lower_bound(tau, gamma))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub computed: f64,
    pub reference: f64,
    /// `"~"` for closeness within `tolerance`, `">"` / `"<"` for strict
    /// inequalities against `reference`.
    pub relation: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn approx(name: &str, computed: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (computed - reference).abs() <= tolerance;
        Self { name: name.into(), computed, reference, relation: "~".into(), tolerance, pass }
    }

    fn above(name: &str, computed: f64, reference: f64) -> Self {
        Self { name: name.into(), computed, reference, relation: ">".into(), tolerance: 0.0, pass: computed > reference }
    }

    fn below(name: &str, computed: f64, reference: f64) -> Self {
        Self { name: name.into(), computed, reference, relation: "<".into(), tolerance: 0.0, pass: computed < reference }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub params: AnalyticParams,
    pub grid: f64,
    pub minimum: GridMinimum,
    pub checks: Vec<Check>,
}

impl AnalyticReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Every numeric claim behind the analytic ratio, each with its computed
/// value. `grid` is the `(tau, gamma)` grid step for the minimization.
pub fn closed_form_checks(params: AnalyticParams, grid: f64) -> Result<AnalyticReport> {
    if !(grid > 0.0 && grid <= 0.5) {
        return domain(format!("grid step {grid} outside (0, 0.5]"));
    }
    let steps = (1.0 / grid).round() as usize;
    let ev = AnalyticEvaluation::new(params, 1000)?;
    let c = params.c;
    let cond = check_condition(params)?;
    let tau_star = ev.tau_star();

    let mut checks = vec![
        Check::approx("g(0)", ev.g(0.0), 0.832, 5e-4),
        Check::approx("g(1)", ev.g(1.0), 0.5203, 5e-5),
        Check::approx("condition h(1)(g - g')", cond.value, 0.999992, 1e-5),
        Check::below("condition h(1)(g - g') < 1", cond.value, 1.0),
        Check::approx("G(1)", ev.G(1.0), 0.6329, 5e-4),
        Check::approx("H(1)", ev.H(1.0), 0.76016, 5e-4),
        Check::approx("tau*", tau_star, 0.2321, 1e-3),
        Check::above("l(tau*, c)", ev.ell(tau_star, c), 0.634),
        Check::above("l(c, 0)", ev.ell(c, 0.0), 0.73),
        Check::above("phi(0) = g(0) H(1)", ev.phi(0.0), 0.63245),
    ];

    let samples = 2000;
    let phi_increasing = (0..samples).all(|k| {
        let (x0, x1) = (k as f64 / samples as f64, (k + 1) as f64 / samples as f64);
        ev.phi(x1) > ev.phi(x0)
    });
    checks.push(Check::above("phi increasing (1 if yes)", phi_increasing as u8 as f64, 0.5));

    let gh = ev.gh();
    let ratio = |y: f64| gh.g_prime(y) / gh.h_smooth(y);
    let nonincreasing = (0..samples).all(|k| {
        let (x0, x1) = (c * k as f64 / samples as f64, c * (k + 1) as f64 / samples as f64);
        ratio(x1) <= ratio(x0)
    });
    checks.push(Check::above("g'/h non-increasing on [0, c] (1 if yes)", nonincreasing as u8 as f64, 0.5));

    let minimum = ev.minimize(steps);
    checks.push(Check::above("min over (tau, gamma) of the bound", minimum.reported, 0.6324));

    Ok(AnalyticReport { params, grid, minimum, checks })
}
