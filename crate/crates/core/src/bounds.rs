//! Check and solve modes for the diffusion bounds and every Fano-type bound
//! derived from them.
//!
//! All arithmetic is done in nats. Divergence and information inputs are
//! taken in the caller's [`LogBase`] and converted on entry; entropy-valued
//! outputs are converted back. Probability-valued bounds are base-free.
//!
//! Notation used in the docs below: `B = (1 - p_min) / p_max`, and
//! `A = D + h_alpha(p) + ln(1 - p_min)` (with `h` at order 1).
//!
//! Lower bounds on an error probability `P_t` are reported in their
//! success form: `observed = 1 - P_t` is checked against an upper bound, so
//! that `slack = bound_value - observed` always has the same meaning.

use serde::{Deserialize, Serialize};

use crate::distributions::JointDistribution;
use crate::divergences::{self, nats, LogBase, ALPHA_ONE_GUARD};
use crate::error::{FanoError, Result};
use crate::numeric::{feasible_sup, SolverConfig};
use crate::relations::{
    ball_counts, sup_ball_volume_with_centers, ContinuousDomain, Metric, Relation, RelationBounds, VolumeEstimate,
    VolumeMethod, DEFAULT_CENTERS_PER_AXIS,
};

/// Default tolerance on `slack` in check mode.
pub const CHECK_TOLERANCE: f64 = 1e-10;

/// Maximum disagreement (nats) between the distance bound and the entropy
/// version it is derived from.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-12;

/// Slack allowed when confirming that the product joint's acceptance
/// probability lies in `[p_min, p_max]`.
const BOUNDS_CONSISTENCY_SLACK: f64 = 1e-12;

/// Order of the divergence feeding a diffusion bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// Relative entropy (order 1).
    Kl,
    Renyi(f64),
}

impl Order {
    pub fn label(&self) -> String {
        match self {
            Order::Kl => "kl".into(),
            Order::Renyi(a) => format!("{a}"),
        }
    }

    /// Orders within [`ALPHA_ONE_GUARD`] of 1 collapse to [`Order::Kl`].
    pub fn normalized(self) -> Self {
        match self {
            Order::Renyi(a) if (a - 1.0).abs() < ALPHA_ONE_GUARD => Order::Kl,
            o => o,
        }
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Kl => s.serialize_str("kl"),
            Order::Renyi(a) => s.serialize_f64(*a),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(a) => Ok(Order::Renyi(a)),
            Repr::Str(s) if s.eq_ignore_ascii_case("kl") => Ok(Order::Kl),
            Repr::Str(s) => s
                .parse::<f64>()
                .map(Order::Renyi)
                .map_err(|_| serde::de::Error::custom(format!("invalid order `{s}`"))),
        }
    }
}

/// Serde helpers writing non-finite values as the strings `"inf"`/`"-inf"`.
pub mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    fn parse<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                _ => Err(E::custom(format!("invalid number `{s}`"))),
            },
        }
    }

    fn write<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else if v < 0.0 {
            s.serialize_str("-inf")
        } else {
            Err(serde::ser::Error::custom("NaN is not representable"))
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        write(*v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) => write(*x, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(parse).transpose()
        }
    }
}

/// Inputs of a diffusion bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// `D_alpha(P || Q)`, `D(P || Q)` or a mutual information, in `base` units.
    #[serde(with = "extended")]
    pub divergence: f64,
    #[serde(rename = "alpha")]
    pub order: Order,
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default)]
    pub base: LogBase,
}

impl BoundInputs {
    pub fn kl(divergence: f64, p_min: f64, p_max: f64) -> Self {
        Self {
            divergence,
            order: Order::Kl,
            p_min,
            p_max,
            base: LogBase::NATURAL,
        }
    }

    pub fn renyi(divergence: f64, alpha: f64, p_min: f64, p_max: f64) -> Self {
        Self {
            divergence,
            order: Order::Renyi(alpha),
            p_min,
            p_max,
            base: LogBase::NATURAL,
        }
    }

    pub fn with_base(mut self, base: LogBase) -> Self {
        self.base = base;
        self
    }

    fn divergence_nats(&self) -> Result<f64> {
        if self.divergence.is_nan() || self.divergence < 0.0 {
            return Err(FanoError::InvalidInput(format!(
                "divergence must be >= 0, got {}",
                self.divergence
            )));
        }
        Ok(self.base.to_nats(self.divergence))
    }
}

/// `ln B` after checking the `p_min`/`p_max` hypotheses.
pub(crate) fn log_b(p_min: f64, p_max: f64) -> Result<f64> {
    let valid = (0.0..1.0).contains(&p_min) && p_max > 0.0 && p_max <= 1.0 && p_min + p_max < 1.0;
    if !valid {
        return Err(FanoError::BadPminPmax { p_min, p_max });
    }
    let lb = (-p_min).ln_1p() - p_max.ln();
    if !(lb > 0.0) {
        return Err(FanoError::DegenerateDenominator(format!(
            "log((1 - p_min) / p_max) = {lb} for p_min = {p_min}, p_max = {p_max}"
        )));
    }
    Ok(lb)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(FanoError::OutOfRangeProbability(p))
    }
}

fn check_renyi_order(alpha: f64) -> Result<()> {
    if (alpha - 1.0).abs() < ALPHA_ONE_GUARD {
        return Err(FanoError::AlphaIsOne);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(FanoError::InvalidInput(format!(
            "diffusion bound needs 0 < alpha < inf, got {alpha}"
        )));
    }
    Ok(())
}

/// Right-hand side of the diffusion bound at success probability `p`, with
/// every information quantity in nats. `ln_b` must be positive.
///
/// Order 1: `A / ln B`.
/// Order alpha: `((e^{(alpha-1) A} - 1) / (B^{alpha-1} - 1))^{1/alpha}`; when
/// the ratio is negative (only possible for `A < 0`, i.e. inconsistent
/// inputs) its signed root is returned so that no `p >= 0` satisfies it.
pub fn diffusion_rhs_nats(p: f64, divergence: f64, order: Order, p_min: f64, ln_b: f64) -> f64 {
    if divergence == f64::INFINITY {
        return f64::INFINITY;
    }
    let log_keep = (-p_min).ln_1p();
    match order.normalized() {
        Order::Kl => (divergence + nats::binary_entropy(p) + log_keep) / ln_b,
        Order::Renyi(alpha) => {
            let a = divergence + nats::binary_renyi_entropy(p, alpha) + log_keep;
            let num = ((alpha - 1.0) * a).exp_m1();
            let den = ((alpha - 1.0) * ln_b).exp_m1();
            // den carries the sign of alpha - 1 because ln_b > 0
            debug_assert!(den != 0.0 && (den > 0.0) == (alpha > 1.0));
            let ratio = num / den;
            if ratio.is_infinite() {
                return ratio;
            }
            ratio.signum() * ratio.abs().powf(1.0 / alpha)
        }
    }
}

/// Excess of the diffusion inequality before rearrangement, in nats:
/// `F(p) - A` where `F(p) = ln(1 + p^alpha (B^{alpha-1} - 1)) / (alpha - 1)`
/// (`p ln B` at order 1). The bound holds iff the excess is `<= 0`.
pub fn diffusion_excess_nats(p: f64, divergence: f64, order: Order, p_min: f64, ln_b: f64) -> f64 {
    if divergence == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let log_keep = (-p_min).ln_1p();
    match order.normalized() {
        Order::Kl => p * ln_b - (divergence + nats::binary_entropy(p) + log_keep),
        Order::Renyi(alpha) => {
            let a = divergence + nats::binary_renyi_entropy(p, alpha) + log_keep;
            let den = ((alpha - 1.0) * ln_b).exp_m1();
            let f = (p.powf(alpha) * den).ln_1p() / (alpha - 1.0);
            f - a
        }
    }
}

/// Whether a report is a check of an observed value or a solved supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Check,
    Solve,
}

/// Outcome of evaluating one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: Mode,
    /// Right-hand side in check mode; the feasibility supremum in solve mode.
    #[serde(with = "extended")]
    pub bound_value: f64,
    #[serde(with = "extended::option")]
    pub observed: Option<f64>,
    /// `bound_value - observed`.
    #[serde(with = "extended::option")]
    pub slack: Option<f64>,
    #[serde(with = "extended::option")]
    pub feasible_sup: Option<f64>,
    pub solver_tolerance: f64,
    pub notes: String,
}

impl BoundReport {
    fn check(bound_value: f64, observed: f64, notes: impl Into<String>) -> Self {
        Self {
            mode: Mode::Check,
            bound_value,
            observed: Some(observed),
            slack: Some(bound_value - observed),
            feasible_sup: None,
            solver_tolerance: CHECK_TOLERANCE,
            notes: notes.into(),
        }
    }

    fn solve(sup: f64, tolerance: f64, notes: impl Into<String>) -> Self {
        Self {
            mode: Mode::Solve,
            bound_value: sup,
            observed: None,
            slack: None,
            feasible_sup: Some(sup),
            solver_tolerance: tolerance,
            notes: notes.into(),
        }
    }

    /// Attaches an observed value to a solve-mode report.
    pub fn with_observed(mut self, observed: f64) -> Self {
        self.observed = Some(observed);
        self.slack = Some(self.bound_value - observed);
        self
    }

    /// Re-judges the report with another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.solver_tolerance = tolerance;
        self
    }

    /// Appends to the notes.
    pub fn noted(mut self, note: &str) -> Self {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(note);
        self
    }

    /// `slack >= -solver_tolerance`; reports without an observation hold.
    pub fn holds(&self) -> bool {
        self.slack.is_none_or(|s| s >= -self.solver_tolerance)
    }

    /// For success-form solve reports, the implied lower bound `1 - sup` on
    /// the error probability.
    pub fn error_lower_bound(&self) -> Option<f64> {
        self.feasible_sup.map(|s| (1.0 - s).max(0.0))
    }
}

const VACUOUS: &str = "vacuous: infinite divergence";

fn diffusion_check(p_r: f64, inputs: &BoundInputs) -> Result<BoundReport> {
    check_probability(p_r)?;
    let ln_b = log_b(inputs.p_min, inputs.p_max)?;
    let d = inputs.divergence_nats()?;
    if d == f64::INFINITY {
        return Ok(BoundReport::check(f64::INFINITY, p_r, VACUOUS));
    }
    let rhs = diffusion_rhs_nats(p_r, d, inputs.order, inputs.p_min, ln_b);
    Ok(BoundReport::check(rhs, p_r, String::new()))
}

/// Rényi-order diffusion bound on `P(E_R)` at the observed `p_r`.
pub fn check_renyi_diffusion(p_r: f64, inputs: &BoundInputs) -> Result<BoundReport> {
    match inputs.order {
        Order::Renyi(alpha) => check_renyi_order(alpha)?,
        Order::Kl => return Err(FanoError::AlphaIsOne),
    }
    diffusion_check(p_r, inputs)
}

/// Relative-entropy diffusion bound:
/// `p_r <= (D + h(p_r) + ln(1 - p_min)) / ln((1 - p_min) / p_max)`.
pub fn check_kl_diffusion(p_r: f64, inputs: &BoundInputs) -> Result<BoundReport> {
    if inputs.order.normalized() != Order::Kl {
        return Err(FanoError::InvalidInput(format!(
            "relative-entropy bound called with order {}",
            inputs.order.label()
        )));
    }
    diffusion_check(p_r, inputs)
}

/// Dispatches to [`check_kl_diffusion`] or [`check_renyi_diffusion`].
pub fn check_diffusion(p_r: f64, inputs: &BoundInputs) -> Result<BoundReport> {
    match inputs.order.normalized() {
        Order::Kl => check_kl_diffusion(p_r, inputs),
        Order::Renyi(_) => check_renyi_diffusion(p_r, inputs),
    }
}

/// `sup {p in [0, 1] : p <= RHS(p)}` with the default grid and tolerance.
pub fn solve_diffusion(inputs: &BoundInputs) -> Result<BoundReport> {
    solve_diffusion_with(inputs, SolverConfig::default())
}

pub fn solve_diffusion_with(inputs: &BoundInputs, config: SolverConfig) -> Result<BoundReport> {
    if let Order::Renyi(alpha) = inputs.order.normalized() {
        check_renyi_order(alpha)?;
    }
    let ln_b = log_b(inputs.p_min, inputs.p_max)?;
    let d = inputs.divergence_nats()?;
    if d == f64::INFINITY {
        return Ok(BoundReport::solve(1.0, config.tolerance, VACUOUS));
    }
    let g = |p: f64| p - diffusion_rhs_nats(p, d, inputs.order, inputs.p_min, ln_b);
    let sup = feasible_sup(g, config).ok_or(FanoError::NoFeasiblePoint)?;
    Ok(BoundReport::solve(sup, config.tolerance, String::new()))
}

/// Upper bound in success form, `s <= (info + c(s)) / denominator`, solved
/// for its supremum; `c` is the binary entropy or a constant.
fn solve_success_form<C>(info: f64, denominator: f64, c: C, config: SolverConfig) -> Result<f64>
where
    C: Fn(f64) -> f64,
{
    if info == f64::INFINITY {
        return Ok(1.0);
    }
    feasible_sup(|s| s - (info + c(s)) / denominator, config).ok_or(FanoError::NoFeasiblePoint)
}

fn check_bounds_against_product(q_r: f64, bounds: &RelationBounds) -> Result<()> {
    if q_r < bounds.p_min - BOUNDS_CONSISTENCY_SLACK || q_r > bounds.p_max + BOUNDS_CONSISTENCY_SLACK {
        return Err(FanoError::InconsistentBounds(format!(
            "product-of-marginals probability {q_r} is outside [{}, {}]",
            bounds.p_min, bounds.p_max
        )));
    }
    Ok(())
}

/// Both inequalities of the relation-based Fano bound on one joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationFanoReport {
    /// `P(E_R)` under the joint of `(X, Xhat)`.
    pub p_r: f64,
    /// `P(E_R)` under the product of the marginals.
    pub q_r: f64,
    /// `I(X; Xhat)` in the report base.
    pub i_xxhat: f64,
    /// Bound using `I(X; Xhat)`.
    pub reconstruction: BoundReport,
    /// Weaker bound using `I(X; Y)`, when supplied.
    pub observation: Option<BoundReport>,
}

/// Relation-based Fano bound on a joint of `(X, Xhat)`.
///
/// Checks `P(E_R) <= (I(X;Xhat) + h(P(E_R)) + ln(1 - p_min)) / ln B`, and, when
/// `i_xy` is given, the same with `I(X;Y)` after confirming
/// `I(X;Xhat) <= I(X;Y)`.
pub fn fano_relation_bound(
    joint: &JointDistribution,
    i_xy: Option<f64>,
    rel: &Relation,
    bounds: &RelationBounds,
    base: LogBase,
) -> Result<RelationFanoReport> {
    let ln_b = log_b(bounds.p_min, bounds.p_max)?;
    let mask = rel.membership(joint.row_labels(), joint.col_labels())?;
    let p_r = joint.mass_of(&mask).clamp(0.0, 1.0);
    let q_r = joint.product_of_marginals().mass_of(&mask);
    check_bounds_against_product(q_r, bounds)?;
    let i_nats = divergences::mutual_information_nats(joint);
    let rhs = diffusion_rhs_nats(p_r, i_nats, Order::Kl, bounds.p_min, ln_b);
    let reconstruction = BoundReport::check(rhs, p_r, "information between X and its reconstruction");

    let observation = match i_xy {
        None => None,
        Some(i_xy) => {
            let i_xy_nats = base.to_nats(i_xy);
            if i_nats > i_xy_nats + 1e-10 {
                return Err(FanoError::DataProcessingViolation {
                    i_xxhat: base.from_nats(i_nats),
                    i_xy,
                });
            }
            let rhs = diffusion_rhs_nats(p_r, i_xy_nats, Order::Kl, bounds.p_min, ln_b);
            Some(BoundReport::check(
                rhs,
                p_r,
                "information between X and the observation",
            ))
        }
    };
    Ok(RelationFanoReport {
        p_r,
        q_r,
        i_xxhat: base.from_nats(i_nats),
        reconstruction,
        observation,
    })
}

/// Entropy form of the relation bound, valid without `p_min + p_max < 1`:
/// `H(X|Xhat) <= H(X) + log p_max + h(P(¬E_R)) + P(¬E_R) log((1 - p_min) / p_max)`.
pub fn entropy_version_bound(
    joint: &JointDistribution,
    rel: &Relation,
    bounds: &RelationBounds,
    base: LogBase,
) -> Result<BoundReport> {
    if !(bounds.p_max > 0.0 && bounds.p_max <= 1.0 && (0.0..=1.0).contains(&bounds.p_min)) {
        return Err(FanoError::BadPminPmax {
            p_min: bounds.p_min,
            p_max: bounds.p_max,
        });
    }
    let mask = rel.membership(joint.row_labels(), joint.col_labels())?;
    let q_r = joint.product_of_marginals().mass_of(&mask);
    check_bounds_against_product(q_r, bounds)?;
    let complement: Vec<bool> = mask.iter().map(|m| !m).collect();
    let p_fail = joint.mass_of(&complement).clamp(0.0, 1.0);
    let (row_marginal, _) = joint.marginals();
    let rhs = entropy_version_rhs_nats(
        nats::entropy(row_marginal.weights()),
        p_fail,
        bounds.p_min,
        bounds.p_max,
    );
    let lhs = divergences::conditional_entropy_nats(joint);
    Ok(BoundReport::check(
        base.from_nats(rhs),
        base.from_nats(lhs),
        "conditional entropy of X given its reconstruction",
    ))
}

/// `H(X) + ln p_max + h(q) + q ln((1 - p_min) / p_max)` in nats, where `q` is
/// the failure probability; `0 * ln 0` is taken as 0.
pub fn entropy_version_rhs_nats(h_x: f64, p_fail: f64, p_min: f64, p_max: f64) -> f64 {
    let last = if p_fail == 0.0 {
        0.0
    } else {
        p_fail * ((-p_min).ln_1p() - p_max.ln())
    };
    h_x + p_max.ln() + nats::binary_entropy(p_fail) + last
}

/// Quantities and the two bounds for i.i.d. observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentSamplesReport {
    pub n: u32,
    pub p_r: f64,
    /// `I(X; Y_1)` in the report base.
    pub i_single: f64,
    /// `I(X; Y_1..Y_n)`, when the product space was enumerated.
    pub i_all: Option<f64>,
    /// Largest pairwise relative entropy between channel rows.
    #[serde(with = "extended")]
    pub beta: f64,
    /// `I(X; Y_1..Y_n) <= n I(X; Y_1) <= n beta` (within 1e-10 nats).
    pub chain_holds: bool,
    /// Bound with `n I(X; Y_1)`.
    pub single_letter: BoundReport,
    /// Bound with `n beta`.
    pub beta_form: BoundReport,
}

pub(crate) const SAMPLES_NOTE: &str =
    "left side is the success probability P(R), matching the relation bound it follows from";

/// Evaluates both i.i.d.-sample bounds from precomputed quantities (nats).
pub fn independent_samples_reports(
    p_r: f64,
    n: u32,
    i_single_nats: f64,
    i_all_nats: Option<f64>,
    beta_nats: f64,
    bounds: &RelationBounds,
    base: LogBase,
) -> Result<IndependentSamplesReport> {
    check_probability(p_r)?;
    let ln_b = log_b(bounds.p_min, bounds.p_max)?;
    let nf = n as f64;
    let single = nf * i_single_nats;
    let with_beta = nf * beta_nats;
    let chain_holds = i_all_nats.is_none_or(|i| i <= single + 1e-10) && single <= with_beta + 1e-10;
    let rhs_single = diffusion_rhs_nats(p_r, single, Order::Kl, bounds.p_min, ln_b);
    let rhs_beta = diffusion_rhs_nats(p_r, with_beta, Order::Kl, bounds.p_min, ln_b);
    Ok(IndependentSamplesReport {
        n,
        p_r,
        i_single: base.from_nats(i_single_nats),
        i_all: i_all_nats.map(|i| base.from_nats(i)),
        beta: base.from_nats(beta_nats),
        chain_holds,
        single_letter: BoundReport::check(rhs_single, p_r, SAMPLES_NOTE),
        beta_form: BoundReport::check(rhs_beta, p_r, SAMPLES_NOTE).noted(if beta_nats.is_infinite() {
            VACUOUS
        } else {
            ""
        }),
    })
}

/// Distance-based bound and its cross-check against the entropy version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceFanoReport {
    /// `P(rho(X, Xhat) > t)`.
    pub p_t: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// `log M - H(X)`, in the report base.
    pub log_m_slack: f64,
    /// `bound_value` is `h(P_t) + P_t log((M - N_min) / N_max) + log N_max`,
    /// `observed` is `H(X | Xhat)`.
    pub report: BoundReport,
    /// The entropy version at `p_min = N_min / M`, `p_max = N_max / M`.
    pub entropy_version: BoundReport,
}

/// Distance-based Fano bound for a uniform `X` with `range(Xhat) = range(X)`.
pub fn distance_fano_bound(
    joint: &JointDistribution,
    metric: &Metric,
    t: f64,
    base: LogBase,
) -> Result<DistanceFanoReport> {
    let rows = joint.row_labels();
    let m = rows.len();
    let (prior, _) = joint.marginals();
    let deviation = prior
        .weights()
        .iter()
        .map(|w| (w - 1.0 / m as f64).abs())
        .fold(0.0, f64::max);
    if deviation > 1e-12 {
        return Err(FanoError::NonUniformPrior(deviation));
    }
    {
        let mut a: Vec<&String> = rows.iter().collect();
        let mut b: Vec<&String> = joint.col_labels().iter().collect();
        a.sort();
        b.sort();
        if a != b {
            return Err(FanoError::RangeMismatch);
        }
    }
    let rel = Relation::distance(metric.clone(), t)?;
    let mask = rel.membership(rows, joint.col_labels())?;
    let complement: Vec<bool> = mask.iter().map(|x| !x).collect();
    let p_t = joint.mass_of(&complement).clamp(0.0, 1.0);
    let (n_min, n_max) = ball_counts(metric, t, rows)?;
    let mf = m as f64;
    let spread = if p_t == 0.0 {
        0.0
    } else {
        p_t * ((mf - n_min as f64) / n_max as f64).ln()
    };
    let rhs = nats::binary_entropy(p_t) + spread + (n_max as f64).ln();
    let lhs = divergences::conditional_entropy_nats(joint);

    let bounds = RelationBounds::explicit(n_min as f64 / mf, n_max as f64 / mf)?;
    let entropy_version = entropy_version_bound(joint, &rel, &bounds, LogBase::NATURAL)?;
    let log_m_slack = mf.ln() - nats::entropy(prior.weights());
    let gap = (entropy_version.bound_value + log_m_slack - rhs).abs();
    if gap > EQUIVALENCE_TOLERANCE {
        return Err(FanoError::NumericalInstability(format!(
            "distance bound and entropy version disagree by {gap:e} nats"
        )));
    }
    let entropy_version = BoundReport {
        bound_value: base.from_nats(entropy_version.bound_value),
        observed: entropy_version.observed.map(|v| base.from_nats(v)),
        slack: entropy_version.slack.map(|v| base.from_nats(v)),
        ..entropy_version
    };
    Ok(DistanceFanoReport {
        p_t,
        n_min,
        n_max,
        log_m_slack: base.from_nats(log_m_slack),
        report: BoundReport::check(
            base.from_nats(rhs),
            base.from_nats(lhs),
            "bound on H(X | Xhat) from radius-t ball counts",
        ),
        entropy_version,
    })
}

fn mi_distance_denominator(m: usize, n_t_max: usize) -> Result<f64> {
    if n_t_max == 0 || n_t_max >= m {
        return Err(FanoError::DegenerateDenominator(format!(
            "log(M / N_t^max) with M = {m}, N_t^max = {n_t_max}"
        )));
    }
    Ok((m as f64 / n_t_max as f64).ln())
}

const SUCCESS_FORM: &str = "success form: observed = 1 - P_t";

/// Mutual-information distance bound, checked as
/// `1 - P_t <= (I(X;Y) + h(P_t)) / log(M / N_t^max)`.
pub fn mi_distance_bound(i_xy: f64, p_t: f64, m: usize, n_t_max: usize, base: LogBase) -> Result<BoundReport> {
    check_probability(p_t)?;
    let den = mi_distance_denominator(m, n_t_max)?;
    let i = base.to_nats(i_xy);
    let rhs = (i + nats::binary_entropy(p_t)) / den;
    Ok(BoundReport::check(rhs, 1.0 - p_t, SUCCESS_FORM))
}

/// Solve mode: `feasible_sup` is the largest admissible success probability,
/// so `1 - feasible_sup` is the smallest `P_t` consistent with the bound.
pub fn mi_distance_solve(i_xy: f64, m: usize, n_t_max: usize, base: LogBase) -> Result<BoundReport> {
    let den = mi_distance_denominator(m, n_t_max)?;
    let config = SolverConfig::default();
    let sup = solve_success_form(base.to_nats(i_xy), den, nats::binary_entropy, config)?;
    let report = BoundReport::solve(sup, config.tolerance, SUCCESS_FORM);
    let note = format!("P_t >= {:.12}", 1.0 - sup);
    Ok(report.noted(&note))
}

/// Which constant accompanies `I(X;Y)` in the continuous bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousVariant {
    /// `log 2`.
    Log2,
    /// `h(P_t)`.
    Entropy,
}

/// Continuous bound plus its range under the ball-volume uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousFanoReport {
    pub domain_volume: f64,
    pub ball_volume: VolumeEstimate,
    pub report: BoundReport,
    /// `bound_value` recomputed at ball volume `v ± error_estimate`.
    #[serde(with = "extended")]
    pub bound_low: f64,
    #[serde(with = "extended")]
    pub bound_high: f64,
}

fn continuous_parts(domain: &ContinuousDomain, method: VolumeMethod) -> Result<(f64, VolumeEstimate, f64)> {
    let volume = domain.volume();
    let ball = sup_ball_volume_with_centers(domain, method, DEFAULT_CENTERS_PER_AXIS)?;
    if ball.value <= 0.0 {
        return Err(FanoError::ZeroVolumeDenominator);
    }
    if ball.value >= volume {
        return Err(FanoError::DegenerateDenominator(format!(
            "ball volume {} is not smaller than the domain volume {volume}",
            ball.value
        )));
    }
    Ok((volume, ball.clone(), (volume / ball.value).ln()))
}

fn continuous_constant(variant: ContinuousVariant, p_t: f64) -> f64 {
    match variant {
        ContinuousVariant::Log2 => std::f64::consts::LN_2,
        ContinuousVariant::Entropy => nats::binary_entropy(p_t),
    }
}

/// Continuous Fano bound, checked as
/// `1 - P_t <= (I(X;Y) + c) / log(vol(domain) / sup_x vol(B(t, x) ∩ domain))`.
pub fn continuous_fano_bound(
    i_xy: f64,
    p_t: f64,
    domain: &ContinuousDomain,
    method: VolumeMethod,
    variant: ContinuousVariant,
    base: LogBase,
) -> Result<ContinuousFanoReport> {
    check_probability(p_t)?;
    let (volume, ball, den) = continuous_parts(domain, method)?;
    let num = base.to_nats(i_xy) + continuous_constant(variant, p_t);
    let at = |v: f64| {
        if v >= volume {
            f64::INFINITY
        } else {
            num / (volume / v.max(f64::MIN_POSITIVE)).ln()
        }
    };
    let bound_high = at(ball.value + ball.error_estimate);
    let bound_low = at(ball.value - ball.error_estimate);
    Ok(ContinuousFanoReport {
        domain_volume: volume,
        report: BoundReport::check(num / den, 1.0 - p_t, SUCCESS_FORM),
        ball_volume: ball,
        bound_low,
        bound_high,
    })
}

/// Solve mode of [`continuous_fano_bound`]; `1 - feasible_sup` lower-bounds `P_t`.
pub fn continuous_fano_solve(
    i_xy: f64,
    domain: &ContinuousDomain,
    method: VolumeMethod,
    variant: ContinuousVariant,
    base: LogBase,
) -> Result<ContinuousFanoReport> {
    let (volume, ball, den) = continuous_parts(domain, method)?;
    let config = SolverConfig::default();
    let info = base.to_nats(i_xy);
    let solve_at = |d: f64| solve_success_form(info, d, |s| continuous_constant(variant, 1.0 - s), config);
    let sup = solve_at(den)?;
    let den_for = |v: f64| (volume / v).ln();
    let high = if ball.value + ball.error_estimate >= volume {
        1.0
    } else {
        solve_at(den_for(ball.value + ball.error_estimate))?
    };
    let low = if ball.value - ball.error_estimate <= 0.0 {
        solve_at(f64::MAX)?
    } else {
        solve_at(den_for(ball.value - ball.error_estimate))?
    };
    let note = format!("P_t >= {:.12}", 1.0 - sup);
    Ok(ContinuousFanoReport {
        domain_volume: volume,
        ball_volume: ball,
        report: BoundReport::solve(sup, config.tolerance, SUCCESS_FORM).noted(&note),
        bound_low: low,
        bound_high: high,
    })
}

/// One CSV row for sweep and certification outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub mode: Mode,
    pub alpha: String,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub divergence: Option<f64>,
    pub bound_value: f64,
    pub observed: Option<f64>,
    pub slack: Option<f64>,
    pub feasible_sup: Option<f64>,
}

/// Fixed CSV header matching [`ReportRow`].
pub const CSV_COLUMNS: [&str; 10] = [
    "instance-id",
    "mode",
    "alpha",
    "p_min",
    "p_max",
    "divergence",
    "bound_value",
    "observed",
    "slack",
    "feasible_sup",
];
