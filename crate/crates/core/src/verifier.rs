//! Exhaustive and randomized verification of the diffusion bounds and of the
//! ingredients their proofs rely on.
//!
//! Grid distributions have integer numerators over a fixed denominator; event
//! masses are formed from the integer numerators before a single division,
//! so no rounding from grid generation enters the comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, diffusion_excess_nats, diffusion_rhs_nats, Mode, Order, ReportRow};
use crate::divergences::{nats, LogBase};
use crate::error::{FanoError, Result};
use crate::numeric::compensated_sum;
use crate::rng::{dirichlet_unit, stream_rng};

/// Default cap on `(P, Q, event)` triples in one sweep.
pub const DEFAULT_GRID_CAP: u64 = 100_000_000;

/// Slack allowed on the tight regression case.
pub const TIGHT_TOLERANCE: f64 = 1e-12;

/// Parameters of [`sweep_diffusion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub outcome_counts: Vec<usize>,
    pub weight_grid_denominator: u32,
    pub alphas: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
    /// Dirichlet-random full-support pairs added per outcome count.
    pub random_pairs: usize,
    pub grid_cap: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            outcome_counts: vec![2, 3, 4],
            weight_grid_denominator: 8,
            alphas: vec![0.25, 0.5, 2.0, 4.0],
            tolerance: 1e-9,
            seed: 0,
            random_pairs: 1000,
            grid_cap: DEFAULT_GRID_CAP,
        }
    }
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.weight_grid_denominator < 2 {
            return Err(FanoError::InvalidInput("weight grid denominator must be >= 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(FanoError::InvalidInput("tolerance must be > 0".into()));
        }
        if self.outcome_counts.iter().any(|&k| !(1..=16).contains(&k)) {
            return Err(FanoError::InvalidInput("outcome counts must be in 1..=16".into()));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a.is_finite()) || (a - 1.0).abs() < crate::divergences::ALPHA_ONE_GUARD {
                return Err(FanoError::InvalidInput(format!(
                    "sweep order {a} is not in (0, 1) or (1, inf)"
                )));
            }
        }
        Ok(())
    }

    fn orders(&self) -> Vec<Order> {
        std::iter::once(Order::Kl)
            .chain(self.alphas.iter().map(|&a| Order::Renyi(a)))
            .collect()
    }
}

/// The instance with the largest excess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstInstance {
    pub id: String,
    /// `F(p) - A` in nats; positive means the bound is violated.
    pub excess: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub event: Vec<bool>,
    pub alpha: String,
    pub p_min: f64,
    pub p_max: f64,
    #[serde(with = "bounds::extended")]
    pub divergence: f64,
    pub p_event: f64,
    #[serde(with = "bounds::extended")]
    pub bound_value: f64,
}

/// Per-order totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStats {
    pub alpha: String,
    pub instances: u64,
    pub violations: u64,
    pub max_violation: f64,
    pub worst_instance: Option<String>,
}

/// The perfect-reconstruction instance on four outcomes, checked every sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionCase {
    pub id: String,
    pub slack: f64,
    pub holds: bool,
}

/// Result of [`sweep_diffusion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub instances: u64,
    pub violations: u64,
    /// Largest positive excess in nats (0 when none).
    pub max_violation: f64,
    pub worst_instance: Option<WorstInstance>,
    pub by_order: Vec<OrderStats>,
    pub regression: RegressionCase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// All weight vectors of length `k` with nonnegative integer entries summing
/// to `d`, in lexicographic order.
pub fn compositions(d: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(rest: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=rest {
            prefix.push(v);
            rec(rest - v, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(d, k, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Clone)]
struct Pair {
    tag: String,
    p: Vec<f64>,
    q: Vec<f64>,
    /// `(P(E), Q(E))` per event mask.
    masses: Vec<(f64, f64)>,
}

#[derive(Default, Clone)]
struct Tally {
    instances: u64,
    violations: u64,
    worst: Option<(f64, String)>,
}

impl Tally {
    fn record(&mut self, excess: f64, id: &str, tolerance: f64) -> bool {
        self.instances += 1;
        if excess > tolerance {
            self.violations += 1;
        }
        let better = match &self.worst {
            None => true,
            Some((e, i)) => excess > *e || (excess == *e && id < i.as_str()),
        };
        if better {
            self.worst = Some((excess, id.to_string()));
        }
        better
    }

    fn merge(&mut self, other: Tally) {
        self.instances += other.instances;
        self.violations += other.violations;
        if let Some((e, id)) = other.worst {
            let better = match &self.worst {
                None => true,
                Some((se, sid)) => e > *se || (e == *se && id < *sid),
            };
            if better {
                self.worst = Some((e, id));
            }
        }
    }
}

struct PairResult {
    overall: Tally,
    worst: Option<WorstInstance>,
    per_order: Vec<Tally>,
    rows: Vec<ReportRow>,
}

fn event_label(mask: usize, k: usize) -> String {
    (0..k).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn evaluate_pair(pair: &Pair, orders: &[Order], tolerance: f64, want_rows: bool) -> PairResult {
    let k = pair.p.len();
    let divergences: Vec<f64> = orders
        .iter()
        .map(|o| match o {
            Order::Kl => nats::kl(&pair.p, &pair.q),
            Order::Renyi(a) => nats::renyi(&pair.p, &pair.q, *a),
        })
        .collect();
    let mut overall = Tally::default();
    let mut per_order = vec![Tally::default(); orders.len()];
    let mut worst = None;
    let mut rows = Vec::new();
    for (mask, &(p_e, q_e)) in pair.masses.iter().enumerate() {
        let mut choices = Vec::with_capacity(2);
        if q_e > 0.0 && 2.0 * q_e < 1.0 {
            choices.push(("b0", q_e, q_e));
        }
        if q_e > 0.0 && q_e < 1.0 {
            choices.push(("b1", 0.0, q_e));
        }
        for (tag, p_min, p_max) in choices {
            let Ok(ln_b) = bounds::log_b(p_min, p_max) else {
                continue;
            };
            for (oi, order) in orders.iter().enumerate() {
                let d = divergences[oi];
                let excess = diffusion_excess_nats(p_e, d, *order, p_min, ln_b);
                let id = format!("{}/e{}/{}/a{}", pair.tag, event_label(mask, k), tag, order.label());
                per_order[oi].record(excess, &id, tolerance);
                if overall.record(excess, &id, tolerance) {
                    worst = Some(WorstInstance {
                        id: id.clone(),
                        excess,
                        p: pair.p.clone(),
                        q: pair.q.clone(),
                        event: (0..k).map(|i| mask >> i & 1 == 1).collect(),
                        alpha: order.label(),
                        p_min,
                        p_max,
                        divergence: d,
                        p_event: p_e,
                        bound_value: diffusion_rhs_nats(p_e, d, *order, p_min, ln_b),
                    });
                }
                if want_rows {
                    let rhs = diffusion_rhs_nats(p_e, d, *order, p_min, ln_b);
                    rows.push(ReportRow {
                        instance_id: id,
                        mode: Mode::Check,
                        alpha: order.label(),
                        p_min: Some(p_min),
                        p_max: Some(p_max),
                        divergence: Some(d),
                        bound_value: rhs,
                        observed: Some(p_e),
                        slack: Some(rhs - p_e),
                        feasible_sup: None,
                    });
                }
            }
        }
    }
    PairResult {
        overall,
        worst,
        per_order,
        rows,
    }
}

fn grid_pair(k: usize, d: u32, p: &[u32], q: &[u32]) -> Pair {
    let width = d.to_string().len();
    let fmt = |v: &[u32]| v.iter().map(|x| format!("{x:0width$}")).collect::<Vec<_>>().join("-");
    let df = d as f64;
    let masses = (0..1usize << k)
        .map(|mask| {
            let pn: u32 = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| p[i]).sum();
            let qn: u32 = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| q[i]).sum();
            (pn as f64 / df, qn as f64 / df)
        })
        .collect();
    Pair {
        tag: format!("g{k}/p{}/q{}", fmt(p), fmt(q)),
        p: p.iter().map(|&x| x as f64 / df).collect(),
        q: q.iter().map(|&x| x as f64 / df).collect(),
        masses,
    }
}

fn random_pair(k: usize, index: usize, seed: u64) -> Pair {
    // stream layout: k in the high bits, pair index in the low bits
    let mut rng = stream_rng(seed, ((k as u64) << 32) | index as u64);
    let p = dirichlet_unit(&mut rng, k);
    let q = dirichlet_unit(&mut rng, k);
    let mass = |w: &[f64], mask: usize, inside: bool| {
        compensated_sum((0..k).filter(|i| (mask >> i & 1 == 1) == inside).map(|i| w[i]))
    };
    let masses = (0..1usize << k)
        .map(|mask| (mass(&p, mask, true), mass(&q, mask, true)))
        .collect();
    Pair {
        tag: format!("r{k}/{index:06}"),
        p,
        q,
        masses,
    }
}

fn binomial(n: u64, r: u64) -> u64 {
    (0..r).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Tight regression case: `P` the perfect-reconstruction joint on four
/// outcomes, `Q` the product of its marginals, `E` the diagonal, and
/// `p_min = p_max = 1/4`. The relative-entropy bound holds with equality.
pub fn tight_regression_case() -> RegressionCase {
    let m = 4;
    let p: Vec<f64> = (0..m * m).map(|i| if i / m == i % m { 0.25 } else { 0.0 }).collect();
    let q = vec![1.0 / 16.0; m * m];
    let d = nats::kl(&p, &q);
    let p_e = compensated_sum((0..m).map(|i| p[i * m + i]));
    let ln_b = bounds::log_b(0.25, 0.25).expect("valid bounds");
    let rhs = diffusion_rhs_nats(p_e, d, Order::Kl, 0.25, ln_b);
    let slack = rhs - p_e;
    RegressionCase {
        id: "tight/m4/equality".into(),
        slack,
        holds: slack.abs() <= TIGHT_TOLERANCE,
    }
}

/// Checks the relative-entropy bound and each Rényi order in `spec` on every
/// grid pair `(P, Q)` with full-support `Q`, every event, and both
/// `(p_min, p_max) = (Q(E), Q(E))` and `(0, Q(E))` where admissible.
pub fn sweep_diffusion(spec: &SweepSpec) -> Result<SweepSummary> {
    sweep_diffusion_rows(spec, false).map(|(s, _)| s)
}

/// Like [`sweep_diffusion`], optionally returning one CSV row per instance
/// in deterministic order.
pub fn sweep_diffusion_rows(spec: &SweepSpec, want_rows: bool) -> Result<(SweepSummary, Vec<ReportRow>)> {
    spec.validate()?;
    let d = spec.weight_grid_denominator;
    let mut triples: u128 = 0;
    for &k in &spec.outcome_counts {
        let all = binomial(d as u64 + k as u64 - 1, k as u64 - 1) as u128;
        let full = if (d as usize) < k {
            0
        } else {
            binomial(d as u64 - 1, k as u64 - 1) as u128
        };
        triples += (all * full + spec.random_pairs as u128) << k;
    }
    if triples > spec.grid_cap as u128 {
        return Err(FanoError::GridTooLarge {
            pairs: triples,
            cap: spec.grid_cap,
        });
    }

    let mut tasks: Vec<Pair> = Vec::new();
    for &k in &spec.outcome_counts {
        let grid = compositions(d, k);
        for p in &grid {
            for q in grid.iter().filter(|q| q.iter().all(|&x| x > 0)) {
                tasks.push(grid_pair(k, d, p, q));
            }
        }
        for i in 0..spec.random_pairs {
            tasks.push(random_pair(k, i, spec.seed));
        }
    }

    let orders = spec.orders();
    let results: Vec<PairResult> = tasks
        .par_iter()
        .map(|pair| evaluate_pair(pair, &orders, spec.tolerance, want_rows))
        .collect();

    let mut overall = Tally::default();
    let mut per_order = vec![Tally::default(); orders.len()];
    let mut worst: Option<WorstInstance> = None;
    let mut rows = Vec::new();
    for r in results {
        if let Some(w) = r.worst {
            let better = match &worst {
                None => true,
                Some(cur) => w.excess > cur.excess || (w.excess == cur.excess && w.id < cur.id),
            };
            if better {
                worst = Some(w);
            }
        }
        overall.merge(r.overall);
        for (acc, t) in per_order.iter_mut().zip(r.per_order) {
            acc.merge(t);
        }
        rows.extend(r.rows);
    }

    let regression = tight_regression_case();
    overall.instances += 1;
    if !regression.holds {
        overall.violations += 1;
    }

    let by_order = orders
        .iter()
        .zip(per_order)
        .map(|(o, t)| OrderStats {
            alpha: o.label(),
            instances: t.instances,
            violations: t.violations,
            max_violation: t.worst.as_ref().map_or(0.0, |w| w.0.max(0.0)),
            worst_instance: t.worst.map(|w| w.1),
        })
        .collect();
    let max_violation = worst.as_ref().map_or(0.0, |w| w.excess.max(0.0));
    Ok((
        SweepSummary {
            instances: overall.instances,
            violations: overall.violations,
            max_violation,
            worst_instance: worst,
            by_order,
            regression,
            elapsed_ms: None,
        },
        rows,
    ))
}

/// Outcome of one support-bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCheck {
    #[serde(with = "bounds::extended")]
    pub divergence: f64,
    /// `log(1 / Q(supp P))`.
    #[serde(with = "bounds::extended")]
    pub bound: f64,
    /// `divergence - bound`; 0 when both are infinite.
    #[serde(with = "bounds::extended")]
    pub slack: f64,
    pub pass: bool,
}

/// `D(P || Q) >= log(1 / Q(supp P))` within 1e-10.
pub fn verify_support_bound(p: &[f64], q: &[f64], base: LogBase) -> Result<SupportCheck> {
    if p.len() != q.len() {
        return Err(FanoError::LengthMismatch {
            context: "support bound",
            expected: p.len(),
            actual: q.len(),
        });
    }
    let q_supp = compensated_sum(p.iter().zip(q).filter(|(pi, _)| **pi > 0.0).map(|(_, qi)| *qi));
    let d = nats::kl(p, q);
    let bound = if q_supp <= 0.0 { f64::INFINITY } else { -q_supp.ln() };
    let slack = if d.is_infinite() && bound.is_infinite() {
        0.0
    } else {
        d - bound
    };
    Ok(SupportCheck {
        divergence: base.from_nats(d),
        bound: base.from_nats(bound),
        slack: base.from_nats(slack),
        pass: slack >= -1e-10,
    })
}

/// Totals of [`sweep_support_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSweep {
    pub instances: u64,
    pub violations: u64,
    pub min_slack: f64,
    /// Slack of `P = (1, 0)`, `Q = (1/4, 3/4)`, where the bound is attained.
    pub tight_slack: f64,
}

/// Support bound on all grid pairs (any supports) for each `k`.
pub fn sweep_support_bound(outcome_counts: &[usize], denominator: u32) -> Result<SupportSweep> {
    let mut pairs = Vec::new();
    for &k in outcome_counts {
        let grid = compositions(denominator, k);
        for p in &grid {
            for q in &grid {
                pairs.push((p.clone(), q.clone()));
            }
        }
    }
    let df = denominator as f64;
    let slacks: Vec<(f64, bool)> = pairs
        .par_iter()
        .map(|(p, q)| {
            let p: Vec<f64> = p.iter().map(|&x| x as f64 / df).collect();
            let q: Vec<f64> = q.iter().map(|&x| x as f64 / df).collect();
            let c = verify_support_bound(&p, &q, LogBase::NATURAL).expect("equal lengths");
            (c.slack, c.pass)
        })
        .collect();
    let tight = verify_support_bound(&[1.0, 0.0], &[0.25, 0.75], LogBase::NATURAL)?;
    Ok(SupportSweep {
        instances: slacks.len() as u64,
        violations: slacks.iter().filter(|(_, pass)| !pass).count() as u64,
        min_slack: slacks.iter().map(|(s, _)| *s).fold(f64::INFINITY, f64::min),
        tight_slack: tight.slack,
    })
}

/// Totals of [`verify_power_sum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSumCheck {
    pub points: u64,
    pub violations: u64,
    /// Per order, the extreme of `p^alpha + (1 - p)^alpha` toward 1
    /// (minimum for `alpha <= 1`, maximum for `alpha >= 1`).
    pub extremes: Vec<(f64, f64)>,
}

impl PowerSumCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `p^alpha + (1-p)^alpha >= 1` for `alpha <= 1` and `<= 1` for `alpha >= 1`
/// on `p in {0, step, ..., 1}`; at `alpha = 1` the sum must equal 1 to
/// within two ulps.
pub fn verify_power_sum(alphas: &[f64], grid_step: f64) -> Result<PowerSumCheck> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(FanoError::InvalidInput(format!(
            "grid step must be in (0, 1], got {grid_step}"
        )));
    }
    let n = (1.0 / grid_step).round() as u64;
    let mut points = 0;
    let mut violations = 0;
    let mut extremes = Vec::new();
    for &alpha in alphas {
        let mut extreme = 1.0;
        for i in 0..=n {
            let p = i as f64 / n as f64;
            let s = p.powf(alpha) + (1.0 - p).powf(alpha);
            points += 1;
            let ok = if alpha == 1.0 {
                (s - 1.0).abs() <= 2.0 * f64::EPSILON
            } else if alpha < 1.0 {
                extreme = f64::min(extreme, s);
                s >= 1.0
            } else {
                extreme = f64::max(extreme, s);
                s <= 1.0
            };
            if !ok {
                violations += 1;
            }
        }
        extremes.push((alpha, extreme));
    }
    Ok(PowerSumCheck {
        points,
        violations,
        extremes,
    })
}

/// Binary data processing, `D_alpha(P || Q) >= d_alpha(P(E) || Q(E))`, over
/// every event; returns `(instances, min slack in nats)`.
pub fn verify_binary_data_processing(p: &[f64], q: &[f64], alphas: &[f64]) -> Result<(u64, f64)> {
    if p.len() != q.len() {
        return Err(FanoError::LengthMismatch {
            context: "binary data processing",
            expected: p.len(),
            actual: q.len(),
        });
    }
    let k = p.len();
    let mut instances = 0;
    let mut min_slack = f64::INFINITY;
    for &alpha in alphas {
        let full = nats::renyi(p, q, alpha);
        for mask in 0..1usize << k {
            let split = |w: &[f64], inside: bool| {
                compensated_sum((0..k).filter(|i| (mask >> i & 1 == 1) == inside).map(|i| w[i]))
            };
            let pb = [split(p, true), split(p, false)];
            let qb = [split(q, true), split(q, false)];
            let binary = nats::renyi(&pb, &qb, alpha);
            let slack = if full.is_infinite() {
                f64::INFINITY
            } else {
                full - binary
            };
            min_slack = min_slack.min(slack);
            instances += 1;
        }
    }
    Ok((instances, min_slack))
}

/// One row of [`verify_limit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub k: u32,
    pub alpha: f64,
    pub rhs: f64,
    /// `|RHS(alpha) - RHS(1)|`.
    pub gap: f64,
}

/// Convergence of the Rényi-order right-hand side to the order-1 one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTable {
    pub p_event: f64,
    pub kl_rhs: f64,
    pub below: Vec<LimitRow>,
    pub above: Vec<LimitRow>,
}

impl LimitTable {
    fn decreasing(rows: &[LimitRow]) -> bool {
        rows.windows(2).all(|w| w[1].gap < w[0].gap)
    }

    /// Both sides strictly decreasing in `k`.
    pub fn monotone(&self) -> bool {
        Self::decreasing(&self.below) && Self::decreasing(&self.above)
    }

    /// Largest gap at the final `k`.
    pub fn final_gap(&self) -> f64 {
        let last = |r: &[LimitRow]| r.last().map_or(0.0, |x| x.gap);
        last(&self.below).max(last(&self.above))
    }
}

/// Gaps `|RHS(1 ∓ 10^-k) - RHS(1)|` for `k = 2..=k_max`, evaluated at the true
/// `P(E)`, from below and from above.
pub fn verify_limit(p: &[f64], q: &[f64], event: &[bool], p_min: f64, p_max: f64, k_max: u32) -> Result<LimitTable> {
    if p.len() != q.len() || p.len() != event.len() {
        return Err(FanoError::LengthMismatch {
            context: "limit check",
            expected: p.len(),
            actual: q.len().min(event.len()),
        });
    }
    if p.iter().chain(q).any(|w| *w <= 0.0) {
        return Err(FanoError::InvalidInput("limit check needs full supports".into()));
    }
    if k_max > 8 {
        return Err(FanoError::NumericalInstability(format!(
            "alpha = 1 - 1e-{k_max} is inside the alpha = 1 guard band"
        )));
    }
    let ln_b = bounds::log_b(p_min, p_max)?;
    let p_event = compensated_sum(p.iter().zip(event).filter(|(_, e)| **e).map(|(w, _)| *w));
    let kl_rhs = diffusion_rhs_nats(p_event, nats::kl(p, q), Order::Kl, p_min, ln_b);
    let side = |sign: f64| {
        (2..=k_max)
            .map(|k| {
                let alpha = 1.0 + sign * 10f64.powi(-(k as i32));
                let rhs = diffusion_rhs_nats(p_event, nats::renyi(p, q, alpha), Order::Renyi(alpha), p_min, ln_b);
                LimitRow {
                    k,
                    alpha,
                    rhs,
                    gap: (rhs - kl_rhs).abs(),
                }
            })
            .collect()
    };
    Ok(LimitTable {
        p_event,
        kl_rhs,
        below: side(-1.0),
        above: side(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(8, 3).len(), 45);
        assert_eq!(
            compositions(4, 2),
            vec![vec![0, 4], vec![1, 3], vec![2, 2], vec![3, 1], vec![4, 0]]
        );
        assert_eq!(binomial(10, 2), 45);
    }

    #[test]
    fn regression_case_is_tight() {
        let r = tight_regression_case();
        assert!(r.holds && r.slack.abs() <= 1e-12, "{r:?}");
    }

    #[test]
    fn small_sweep_relative_entropy_and_high_orders() {
        let spec = SweepSpec {
            outcome_counts: vec![2],
            weight_grid_denominator: 4,
            alphas: vec![2.0, 4.0],
            random_pairs: 50,
            ..Default::default()
        };
        let s = sweep_diffusion(&spec).unwrap();
        assert_eq!(s.violations, 0, "{:?}", s.worst_instance);
        // 5 grid P x 3 full-support Q and 50 random pairs, 4 events each
        assert!(s.instances > 100);
        assert_eq!(s.by_order.len(), 3);
    }

    #[test]
    fn sweep_with_equal_pairs_only_has_no_divergence_term() {
        let pair = grid_pair(2, 4, &[1, 3], &[1, 3]);
        let r = evaluate_pair(&pair, &[Order::Kl, Order::Renyi(2.0)], 1e-9, true);
        assert_eq!(r.overall.violations, 0);
        assert!(r.rows.iter().all(|row| row.divergence == Some(0.0)));
    }

    #[test]
    fn sweep_detects_the_low_order_failure() {
        let spec = SweepSpec {
            outcome_counts: vec![2],
            weight_grid_denominator: 8,
            alphas: vec![0.25],
            random_pairs: 0,
            ..Default::default()
        };
        let s = sweep_diffusion(&spec).unwrap();
        assert!(s.violations > 0);
        assert_eq!(s.by_order[0].violations, 0);
        assert_eq!(s.worst_instance.unwrap().alpha, "0.25");
    }

    #[test]
    fn sweep_is_deterministic_across_pools() {
        let spec = SweepSpec {
            outcome_counts: vec![2, 3],
            random_pairs: 20,
            ..Default::default()
        };
        let a = serde_json::to_string(&sweep_diffusion(&spec).unwrap()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| serde_json::to_string(&sweep_diffusion(&spec).unwrap()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn grid_cap() {
        let spec = SweepSpec {
            outcome_counts: vec![6],
            weight_grid_denominator: 40,
            grid_cap: 1000,
            ..Default::default()
        };
        assert!(matches!(sweep_diffusion(&spec), Err(FanoError::GridTooLarge { .. })));
    }

    #[test]
    fn support_bound_examples() {
        let full = verify_support_bound(&[0.5, 0.5], &[0.25, 0.75], LogBase::NATURAL).unwrap();
        assert_eq!(full.bound, 0.0);
        assert!(full.pass);

        let tight = verify_support_bound(&[1.0, 0.0], &[0.25, 0.75], LogBase::NATURAL).unwrap();
        assert!((tight.divergence - 4.0_f64.ln()).abs() < 1e-15);
        assert!(tight.slack.abs() <= 1e-12);

        let disjoint = verify_support_bound(&[1.0, 0.0], &[0.0, 1.0], LogBase::NATURAL).unwrap();
        assert!(disjoint.pass);
        assert_eq!(disjoint.slack, 0.0);

        let s = sweep_support_bound(&[2, 3], 6).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.tight_slack.abs() <= 1e-12);
    }

    #[test]
    fn power_sum_examples() {
        let r = verify_power_sum(&[0.25, 0.5, 1.0, 2.0, 4.0], 1e-3).unwrap();
        assert!(r.passed());
        assert_eq!(r.points, 5 * 1001);
        // at alpha = 1/2 the sum runs from 1 at the endpoints to sqrt(2) at p = 1/2
        assert_eq!(r.extremes[1], (0.5, 1.0));
        assert!((2.0 * 0.5_f64.sqrt() - 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.extremes[3], (2.0, 1.0));
        assert!(verify_power_sum(&[2.0], 0.0).is_err());
    }

    #[test]
    fn binary_data_processing_holds() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..50 {
            let p = dirichlet_unit(&mut rng, 4);
            let q = dirichlet_unit(&mut rng, 4);
            let (n, slack) = verify_binary_data_processing(&p, &q, &[0.25, 0.5, 1.0, 2.0, 4.0]).unwrap();
            assert_eq!(n, 5 * 16);
            assert!(slack >= -1e-10, "{slack}");
        }
    }

    #[test]
    fn limit_table_converges() {
        let p = [0.5, 0.3, 0.2];
        let q = [0.2, 0.3, 0.5];
        let t = verify_limit(&p, &q, &[true, false, false], 0.2, 0.2, 6).unwrap();
        assert!(t.monotone(), "{t:#?}");
        assert!(t.final_gap() <= 1e-4);
        assert!(matches!(
            verify_limit(&p, &q, &[true, false, false], 0.2, 0.2, 9),
            Err(FanoError::NumericalInstability(_))
        ));
    }

    #[test]
    fn limit_with_equal_distributions() {
        let p = [0.4, 0.6];
        let t = verify_limit(&p, &p, &[true, false], 0.4, 0.4, 6).unwrap();
        assert!(t.final_gap() <= 1e-4);
    }
}
