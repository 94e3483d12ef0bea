//! Adaptive Simpson quadrature over piecewise-smooth integrands.

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `f` is never evaluated at `b` itself: the right endpoint is replaced by
/// the next float below it, so step functions contribute their left limit
/// there. Callers split the range at discontinuities with
/// [`integrate_pieces`].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b.next_down().max(a));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates over `[a, b]` split at every breakpoint strictly inside it.
/// The tolerance is shared evenly between pieces.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> f64 {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let per = tol / (edges.len() - 1).max(1) as f64;
    edges.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], per)).sum()
}

/// `x -> integral_0^x f` tabulated on a uniform grid, with adaptive
/// quadrature for the remainder between grid points.
#[derive(Clone, Debug)]
pub struct Antiderivative<F> {
    f: F,
    cells: usize,
    table: Vec<f64>,
    breakpoints: Vec<f64>,
    tol: f64,
}

impl<F: Fn(f64) -> f64> Antiderivative<F> {
    pub fn new(f: F, cells: usize, breakpoints: Vec<f64>, tol: f64) -> Self {
        let cells = cells.max(1);
        let per = tol / cells as f64;
        let mut table = Vec::with_capacity(cells + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 0..cells {
            let (lo, hi) = (k as f64 / cells as f64, (k + 1) as f64 / cells as f64);
            acc += integrate_pieces(&f, lo, hi, &breakpoints, per);
            table.push(acc);
        }
        Self { f, cells, table, breakpoints, tol }
    }

    /// Integral over `[0, x]` for `x` in `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let pos = x * self.cells as f64;
        let k = (pos.floor() as usize).min(self.cells);
        let lo = k as f64 / self.cells as f64;
        if x <= lo {
            return self.table[k];
        }
        self.table[k] + integrate_pieces(&self.f, lo, x, &self.breakpoints, self.tol / self.cells as f64)
    }

    /// Exact table entry at grid point `k / cells`.
    pub fn at_grid(&self, k: usize) -> f64 {
        self.table[k]
    }

    pub fn cells(&self) -> usize {
        self.cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_steps() {
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-12);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 2.0, 1e-10);
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-9);
        // a right-continuous step: value at the cut belongs to the next piece
        let step = |x: f64| if x < 0.5 { 1.0 } else { 3.0 };
        let v = integrate_pieces(&step, 0.0, 1.0, &[0.5], 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_matches_closed_form() {
        let a = Antiderivative::new(|x: f64| x.cos(), 100, vec![], 1e-10);
        for &x in &[0.0, 0.123, 0.5, 0.77, 1.0] {
            assert!((a.eval(x) - x.sin()).abs() < 1e-10);
        }
    }
}
