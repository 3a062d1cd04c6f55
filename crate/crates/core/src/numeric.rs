//! Small numerical helpers: compensated summation and the grid + bisection
//! scheme used to turn implicit bounds into explicit feasibility suprema.

/// Neumaier-compensated sum. Accurate to a few ulps for the sums of
/// probabilities that show up here, even at 10^6 terms.
pub fn compensated_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Bisects `[lo, hi]` where `f(lo) <= 0 < f(hi)` until the bracket is
/// narrower than `tol`, returning the endpoint that still satisfies `f <= 0`.
pub fn bisect_last_feasible<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo <= hi);
    // 200 halvings exhausts f64 resolution on [0, 1].
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Grid settings for [`feasible_sup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Number of uniformly spaced grid points on `[0, 1]`, endpoints included.
    pub grid_points: usize,
    /// Bisection bracket width at termination.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_points: 1024,
            tolerance: 1e-10,
        }
    }
}

/// Largest `g` value still counted as feasible when the feasible set is a
/// single tangency point that only the refinement step can reach.
pub const TANGENCY_SLACK: f64 = 1e-12;

/// Supremum of `{p in [0, 1] : g(p) <= 0}`.
///
/// `g` is sampled on the grid; the last grid point with `g <= 0` and its right
/// neighbour form the bracket that is bisected. When no grid point is
/// feasible the feasible set, if any, is narrower than a grid cell: `g` is
/// then minimized by golden-section search around the best grid point, and a
/// minimum within [`TANGENCY_SLACK`] of zero is accepted. Returns `None` when
/// that also fails.
pub fn feasible_sup<G>(g: G, config: SolverConfig) -> Option<f64>
where
    G: Fn(f64) -> f64,
{
    let n = config.grid_points.max(2);
    let point = |i: usize| i as f64 / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| g(point(i))).collect();
    let Some(last) = values.iter().rposition(|v| *v <= 0.0) else {
        return refine_tangency(&g, &values, point, config.tolerance);
    };
    if last == n - 1 {
        return Some(1.0);
    }
    Some(bisect_last_feasible(&g, point(last), point(last + 1), config.tolerance))
}

fn refine_tangency<G, P>(g: &G, values: &[f64], point: P, tol: f64) -> Option<f64>
where
    G: Fn(f64) -> f64,
    P: Fn(usize) -> f64,
{
    let n = values.len();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))?
        .0;
    let (mut a, mut b) = (point(best.saturating_sub(1)), point((best + 1).min(n - 1)));
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if b - a <= 1e-15 {
            break;
        }
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    let (x, gx) = if gc <= gd { (c, gc) } else { (d, gd) };
    if gx > TANGENCY_SLACK {
        return None;
    }
    let right = point((best + 1).min(n - 1));
    Some(bisect_last_feasible(|p| g(p) - TANGENCY_SLACK, x, right.max(x), tol))
}

/// Clamps tiny negative round-off (from a value that is nonnegative in exact
/// arithmetic) up to zero.
pub(crate) fn clamp_nonneg(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}
