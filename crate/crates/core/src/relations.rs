//! Reconstruction relations `R ⊆ range(X) × range(Xhat)` and the quantities
//! they induce: the extremal acceptance probabilities `p_min`/`p_max`, ball
//! counts for distance relations, and ball volumes on continuous boxes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::FiniteDistribution;
use crate::error::{FanoError, Result};
use crate::numeric::compensated_sum;
use crate::rng::{stream_rng, uniform};

/// Distance on discrete labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// `|x - y|` on scalar numeric labels.
    Abs,
    /// Norms on labels holding comma-separated numeric coordinates.
    L1,
    L2,
    Linf,
    /// 0 on equal labels, 1 otherwise.
    Discrete,
    /// Explicit symmetric table; the diagonal defaults to 0.
    Table(HashMap<(String, String), f64>),
}

fn parse_coords(label: &str) -> Result<Vec<f64>> {
    label
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| FanoError::NonNumericLabel(label.to_string()))
}

fn coords_pair(a: &str, b: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u, v) = (parse_coords(a)?, parse_coords(b)?);
    if u.len() != v.len() {
        return Err(FanoError::InvalidInput(format!(
            "labels `{a}` and `{b}` have different dimensions"
        )));
    }
    Ok((u, v))
}

impl Metric {
    pub fn distance(&self, a: &str, b: &str) -> Result<f64> {
        match self {
            Metric::Abs => {
                let x: f64 = a.trim().parse().map_err(|_| FanoError::NonNumericLabel(a.into()))?;
                let y: f64 = b.trim().parse().map_err(|_| FanoError::NonNumericLabel(b.into()))?;
                Ok((x - y).abs())
            }
            Metric::L1 | Metric::L2 | Metric::Linf => {
                let (u, v) = coords_pair(a, b)?;
                Ok(norm_distance(self.norm().unwrap(), &u, &v))
            }
            Metric::Discrete => Ok(if a == b { 0.0 } else { 1.0 }),
            Metric::Table(table) => {
                if let Some(d) = table
                    .get(&(a.to_string(), b.to_string()))
                    .or_else(|| table.get(&(b.to_string(), a.to_string())))
                {
                    Ok(*d)
                } else if a == b {
                    Ok(0.0)
                } else {
                    Err(FanoError::MissingDistance(a.into(), b.into()))
                }
            }
        }
    }

    fn norm(&self) -> Option<Norm> {
        match self {
            Metric::L1 => Some(Norm::L1),
            Metric::L2 => Some(Norm::L2),
            Metric::Linf => Some(Norm::Linf),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Abs => "abs",
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Linf => "linf",
            Metric::Discrete => "discrete",
            Metric::Table(_) => "table",
        }
    }

    /// Pairs among `labels` on which the metric is not symmetric.
    pub fn asymmetric_pairs(&self, labels: &[String]) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (i, a) in labels.iter().enumerate() {
            for b in &labels[i + 1..] {
                if self.distance(a, b)? != self.distance(b, a)? {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Norm {
    L1,
    L2,
    Linf,
}

fn norm_distance(norm: Norm, u: &[f64], v: &[f64]) -> f64 {
    let diffs = u.iter().zip(v).map(|(a, b)| (a - b).abs());
    match norm {
        Norm::L1 => diffs.sum(),
        Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        Norm::Linf => diffs.fold(0.0, f64::max),
    }
}

/// `(x, xhat) ∈ R  ⇔  rho(x, xhat) <= t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRelation {
    pub metric: Metric,
    pub t: f64,
}

impl DistanceRelation {
    pub fn new(metric: Metric, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(FanoError::InvalidInput(format!("radius must be >= 0, got {t}")));
        }
        Ok(Self { metric, t })
    }

    pub fn contains(&self, x: &str, xhat: &str) -> Result<bool> {
        Ok(self.metric.distance(x, xhat)? <= self.t)
    }
}

type Predicate = Arc<dyn Fn(&str, &str) -> bool + Send + Sync>;

/// A deterministic membership predicate over `(x, xhat)` label pairs.
#[derive(Clone)]
pub enum Relation {
    /// Exact recovery, `x == xhat`.
    Equality,
    /// Every pair is acceptable.
    Always,
    Distance(DistanceRelation),
    /// Explicit list of acceptable pairs.
    Pairs(BTreeSet<(String, String)>),
    /// Arbitrary in-process predicate.
    Custom {
        predicate: Predicate,
        description: String,
    },
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Equality => write!(f, "Equality"),
            Relation::Always => write!(f, "Always"),
            Relation::Distance(d) => f.debug_tuple("Distance").field(d).finish(),
            Relation::Pairs(p) => f.debug_tuple("Pairs").field(p).finish(),
            Relation::Custom { description, .. } => write!(f, "Custom({description})"),
        }
    }
}

impl Relation {
    pub fn distance(metric: Metric, t: f64) -> Result<Self> {
        Ok(Relation::Distance(DistanceRelation::new(metric, t)?))
    }

    pub fn custom<F>(description: impl Into<String>, predicate: F) -> Self
    where
        F: Fn(&str, &str) -> bool + Send + Sync + 'static,
    {
        Relation::Custom {
            predicate: Arc::new(predicate),
            description: description.into(),
        }
    }

    pub fn holds(&self, x: &str, xhat: &str) -> Result<bool> {
        match self {
            Relation::Equality => Ok(x == xhat),
            Relation::Always => Ok(true),
            Relation::Distance(d) => d.contains(x, xhat),
            Relation::Pairs(pairs) => Ok(pairs.contains(&(x.to_string(), xhat.to_string()))),
            Relation::Custom { predicate, .. } => Ok(predicate(x, xhat)),
        }
    }

    pub fn description(&self) -> String {
        match self {
            Relation::Equality => "x == xhat".into(),
            Relation::Always => "always".into(),
            Relation::Distance(d) => format!("{}(x, xhat) <= {}", d.metric.name(), d.t),
            Relation::Pairs(p) => format!("{} listed pairs", p.len()),
            Relation::Custom { description, .. } => description.clone(),
        }
    }

    pub fn as_distance(&self) -> Option<&DistanceRelation> {
        match self {
            Relation::Distance(d) => Some(d),
            _ => None,
        }
    }

    /// Row-major membership mask over `rows × cols`.
    pub fn membership(&self, rows: &[String], cols: &[String]) -> Result<Vec<bool>> {
        let mut mask = Vec::with_capacity(rows.len() * cols.len());
        for x in rows {
            for xh in cols {
                mask.push(self.holds(x, xh)?);
            }
        }
        Ok(mask)
    }
}

// ---------------------------------------------------------------------------
// p_min / p_max
// ---------------------------------------------------------------------------

/// Bounds on `P((X, xhat) ∈ R)` uniformly over reconstructions `xhat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationBounds {
    pub p_min: f64,
    pub p_max: f64,
    pub argmin_xhat: Option<String>,
    pub argmax_xhat: Option<String>,
}

impl RelationBounds {
    /// Caller-chosen bounds with no witness labels.
    pub fn explicit(p_min: f64, p_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_min) || !(0.0..=1.0).contains(&p_max) || p_min > p_max {
            return Err(FanoError::BadPminPmax { p_min, p_max });
        }
        Ok(Self {
            p_min,
            p_max,
            argmin_xhat: None,
            argmax_xhat: None,
        })
    }

    /// Replaces the computed extremes by looser values. A tighter override
    /// would no longer bound the acceptance probabilities and is rejected.
    pub fn loosened(&self, p_min: Option<f64>, p_max: Option<f64>) -> Result<Self> {
        let new_min = p_min.unwrap_or(self.p_min);
        let new_max = p_max.unwrap_or(self.p_max);
        if new_min > self.p_min || new_max < self.p_max || new_min < 0.0 || new_max > 1.0 {
            return Err(FanoError::InconsistentBounds(format!(
                "override ({new_min}, {new_max}) is tighter than computed ({}, {})",
                self.p_min, self.p_max
            )));
        }
        Ok(Self {
            p_min: new_min,
            p_max: new_max,
            argmin_xhat: p_min.map_or(self.argmin_xhat.clone(), |_| None),
            argmax_xhat: p_max.map_or(self.argmax_xhat.clone(), |_| None),
        })
    }

    /// `p_min + p_max < 1`, required whenever the bound divides by
    /// `log((1 - p_min) / p_max)`.
    pub fn admits_division(&self) -> bool {
        self.p_min >= 0.0 && self.p_min < 1.0 && self.p_max > 0.0 && self.p_max <= 1.0 && self.p_min + self.p_max < 1.0
    }
}

/// Acceptance probability `P((X, xhat) ∈ R)` for every candidate.
pub fn acceptance_probabilities(rel: &Relation, prior: &FiniteDistribution, candidates: &[String]) -> Result<Vec<f64>> {
    candidates
        .iter()
        .map(|xh| {
            let mut terms = Vec::with_capacity(prior.len());
            for (x, w) in prior.outcomes().iter().zip(prior.weights()) {
                if rel.holds(x, xh)? {
                    terms.push(*w);
                }
            }
            Ok(compensated_sum(terms))
        })
        .collect()
}

/// Exact extremes of `P((X, xhat) ∈ R)` over the supplied candidates. Ties go
/// to the earliest candidate.
pub fn relation_bounds(rel: &Relation, prior: &FiniteDistribution, candidates: &[String]) -> Result<RelationBounds> {
    if candidates.is_empty() {
        return Err(FanoError::EmptyCandidateSet);
    }
    let probs = acceptance_probabilities(rel, prior, candidates)?;
    let (mut imin, mut imax) = (0, 0);
    for (i, p) in probs.iter().enumerate() {
        if *p < probs[imin] {
            imin = i;
        }
        if *p > probs[imax] {
            imax = i;
        }
    }
    Ok(RelationBounds {
        p_min: probs[imin],
        p_max: probs[imax],
        argmin_xhat: Some(candidates[imin].clone()),
        argmax_xhat: Some(candidates[imax].clone()),
    })
}

/// `(N_t^min, N_t^max)`: extreme cardinalities of the radius-`t` balls
/// `{xhat : rho(x, xhat) <= t}` over centers `x`, all taken in `labels`.
pub fn ball_counts(metric: &Metric, t: f64, labels: &[String]) -> Result<(usize, usize)> {
    if labels.is_empty() {
        return Err(FanoError::InvalidInput("ball_counts needs at least one label".into()));
    }
    let mut min = usize::MAX;
    let mut max = 0;
    for x in labels {
        let mut count = 0;
        for xh in labels {
            if metric.distance(x, xh)? <= t {
                count += 1;
            }
        }
        min = min.min(count);
        max = max.max(count);
    }
    Ok((min, max))
}

// ---------------------------------------------------------------------------
// Continuous domains
// ---------------------------------------------------------------------------

type PointMetric = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Distance on points of a continuous domain.
#[derive(Clone)]
pub enum ContinuousMetric {
    L1,
    L2,
    Linf,
    Custom { name: String, distance: PointMetric },
}

impl fmt::Debug for ContinuousMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl ContinuousMetric {
    pub fn name(&self) -> &str {
        match self {
            ContinuousMetric::L1 => "l1",
            ContinuousMetric::L2 => "l2",
            ContinuousMetric::Linf => "linf",
            ContinuousMetric::Custom { name, .. } => name,
        }
    }

    pub fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            ContinuousMetric::L1 => norm_distance(Norm::L1, u, v),
            ContinuousMetric::L2 => norm_distance(Norm::L2, u, v),
            ContinuousMetric::Linf => norm_distance(Norm::Linf, u, v),
            ContinuousMetric::Custom { distance, .. } => distance(u, v),
        }
    }
}

/// Axis-aligned box with a metric and a ball radius.
#[derive(Debug, Clone)]
pub struct ContinuousDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    pub metric: ContinuousMetric,
    pub t: f64,
}

impl ContinuousDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, metric: ContinuousMetric, t: f64) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(FanoError::InvalidInput(
                "box needs matching, nonempty lower and upper corners".into(),
            ));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(FanoError::InvalidInput(format!(
                "radius must be finite and >= 0, got {t}"
            )));
        }
        let domain = Self {
            lower,
            upper,
            metric,
            t,
        };
        let v = domain.volume();
        if !(v.is_finite() && v > 0.0) || domain.widths().any(|w| !(w > 0.0)) {
            return Err(FanoError::ZeroVolumeDomain);
        }
        Ok(domain)
    }

    /// The interval `[a, b]` with the given metric.
    pub fn interval(a: f64, b: f64, metric: ContinuousMetric, t: f64) -> Result<Self> {
        Self::new(vec![a], vec![b], metric, t)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a)
    }

    pub fn volume(&self) -> f64 {
        self.widths().product()
    }

    pub fn with_radius(&self, t: f64) -> Result<Self> {
        Self::new(self.lower.clone(), self.upper.clone(), self.metric.clone(), t)
    }

    /// Uniform grid of `per_axis` points per axis (corners included) plus the
    /// box center.
    pub fn candidate_centers(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(2);
        let d = self.dim();
        let total = per_axis.pow(d as u32);
        let mut centers = Vec::with_capacity(total + 1);
        for idx in 0..total {
            let mut rem = idx;
            let mut c = vec![0.0; d];
            for axis in (0..d).rev() {
                let i = rem % per_axis;
                rem /= per_axis;
                let frac = i as f64 / (per_axis - 1) as f64;
                c[axis] = self.lower[axis] + frac * (self.upper[axis] - self.lower[axis]);
            }
            centers.push(c);
        }
        centers.push(self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect());
        centers
    }
}

/// How [`sup_ball_volume`] evaluates the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum VolumeMethod {
    /// Closed form: ℓ∞ in any dimension, ℓ1/ℓ2 in dimension 1.
    Exact,
    /// Uniform samples of the domain per candidate center.
    MonteCarlo { samples: usize, seed: u64 },
    /// Midpoint grid of `resolution` cells per axis.
    Grid { resolution: usize },
}

/// Estimated `sup_x vol(B(t, x) ∩ box)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub center: Vec<f64>,
}

pub const DEFAULT_CENTERS_PER_AXIS: usize = 64;

pub fn sup_ball_volume(domain: &ContinuousDomain, method: VolumeMethod) -> Result<VolumeEstimate> {
    sup_ball_volume_with_centers(domain, method, DEFAULT_CENTERS_PER_AXIS)
}

pub fn sup_ball_volume_with_centers(
    domain: &ContinuousDomain,
    method: VolumeMethod,
    centers_per_axis: usize,
) -> Result<VolumeEstimate> {
    match method {
        VolumeMethod::Exact => exact_volume(domain),
        VolumeMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(FanoError::InvalidInput("Monte Carlo needs samples >= 1".into()));
            }
            let centers = domain.candidate_centers(centers_per_axis);
            let estimates: Vec<(f64, f64)> = centers
                .par_iter()
                .enumerate()
                .map(|(ci, c)| monte_carlo_at(domain, c, samples, seed, ci as u64))
                .collect();
            Ok(pick_sup(&centers, &estimates))
        }
        VolumeMethod::Grid { resolution } => {
            if resolution == 0 {
                return Err(FanoError::InvalidInput("grid resolution must be >= 1".into()));
            }
            let centers = domain.candidate_centers(centers_per_axis);
            let estimates: Vec<(f64, f64)> = centers.par_iter().map(|c| grid_at(domain, c, resolution)).collect();
            Ok(pick_sup(&centers, &estimates))
        }
    }
}

fn exact_volume(domain: &ContinuousDomain) -> Result<VolumeEstimate> {
    let supported = match domain.metric {
        ContinuousMetric::Linf => true,
        ContinuousMetric::L1 | ContinuousMetric::L2 => domain.dim() == 1,
        ContinuousMetric::Custom { .. } => false,
    };
    if !supported {
        return Err(FanoError::UnsupportedMetricForExact {
            metric: domain.metric.name().to_string(),
            dim: domain.dim(),
        });
    }
    // The ball is the cube of side 2t; per axis its overlap with [a, b] is
    // maximised by any center at distance >= t from both ends.
    let value = domain.widths().map(|w| (2.0 * domain.t).min(w)).product();
    let center = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    Ok(VolumeEstimate {
        value,
        error_estimate: 0.0,
        center,
    })
}

fn monte_carlo_at(domain: &ContinuousDomain, center: &[f64], samples: usize, seed: u64, stream: u64) -> (f64, f64) {
    let mut rng = stream_rng(seed, stream);
    let d = domain.dim();
    let mut point = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..samples {
        for axis in 0..d {
            point[axis] = domain.lower[axis] + uniform(&mut rng) * (domain.upper[axis] - domain.lower[axis]);
        }
        if domain.metric.distance(center, &point) <= domain.t {
            hits += 1;
        }
    }
    let v = domain.volume();
    let frac = hits as f64 / samples as f64;
    (v * frac, v * (frac * (1.0 - frac) / samples as f64).sqrt())
}

fn grid_at(domain: &ContinuousDomain, center: &[f64], resolution: usize) -> (f64, f64) {
    let d = domain.dim();
    let cell: Vec<f64> = domain.widths().map(|w| w / resolution as f64).collect();
    let cell_volume: f64 = cell.iter().product();
    let half: Vec<f64> = cell.iter().map(|c| 0.5 * c).collect();
    let origin = vec![0.0; d];
    // cells whose midpoint lies within this distance of the sphere may straddle it
    let straddle = domain.metric.distance(&origin, &half);
    let total = resolution.pow(d as u32);
    let mut inside = 0usize;
    let mut boundary = 0usize;
    let mut point = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for axis in (0..d).rev() {
            let i = rem % resolution;
            rem /= resolution;
            point[axis] = domain.lower[axis] + (i as f64 + 0.5) * cell[axis];
        }
        let dist = domain.metric.distance(center, &point);
        if dist <= domain.t {
            inside += 1;
        }
        if (dist - domain.t).abs() <= straddle {
            boundary += 1;
        }
    }
    (inside as f64 * cell_volume, boundary as f64 * cell_volume)
}

fn pick_sup(centers: &[Vec<f64>], estimates: &[(f64, f64)]) -> VolumeEstimate {
    let mut best = 0;
    for (i, e) in estimates.iter().enumerate() {
        if e.0 > estimates[best].0 {
            best = i;
        }
    }
    VolumeEstimate {
        value: estimates[best].0,
        error_estimate: estimates[best].1,
        center: centers[best].clone(),
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

/// External form of a relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RelationSpec {
    Equality,
    Always,
    Distance {
        metric: String,
        t: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<(String, String, f64)>>,
    },
    PredicateTable {
        pairs: Vec<(String, String)>,
    },
}

impl TryFrom<RelationSpec> for Relation {
    type Error = FanoError;

    fn try_from(spec: RelationSpec) -> Result<Self> {
        Ok(match spec {
            RelationSpec::Equality => Relation::Equality,
            RelationSpec::Always => Relation::Always,
            RelationSpec::Distance { metric, t, table } => {
                let metric = match metric.as_str() {
                    "abs" => Metric::Abs,
                    "l1" => Metric::L1,
                    "l2" => Metric::L2,
                    "linf" => Metric::Linf,
                    "discrete" => Metric::Discrete,
                    "table" => {
                        let entries = table
                            .ok_or_else(|| FanoError::InvalidInput("metric `table` needs a `table` field".into()))?;
                        let mut map = HashMap::new();
                        for (a, b, d) in entries {
                            if let Some(prev) = map.get(&(b.clone(), a.clone())) {
                                if *prev != d {
                                    return Err(FanoError::InvalidInput(format!(
                                        "table distance between `{a}` and `{b}` is not symmetric"
                                    )));
                                }
                            }
                            map.insert((a, b), d);
                        }
                        Metric::Table(map)
                    }
                    other => {
                        return Err(FanoError::InvalidInput(format!("unknown metric `{other}`")));
                    }
                };
                Relation::distance(metric, t)?
            }
            RelationSpec::PredicateTable { pairs } => Relation::Pairs(pairs.into_iter().collect()),
        })
    }
}

impl TryFrom<&Relation> for RelationSpec {
    type Error = FanoError;

    fn try_from(rel: &Relation) -> Result<Self> {
        Ok(match rel {
            Relation::Equality => RelationSpec::Equality,
            Relation::Always => RelationSpec::Always,
            Relation::Distance(d) => RelationSpec::Distance {
                metric: d.metric.name().to_string(),
                t: d.t,
                table: match &d.metric {
                    Metric::Table(map) => {
                        let mut entries: Vec<_> = map.iter().map(|((a, b), v)| (a.clone(), b.clone(), *v)).collect();
                        entries.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
                        Some(entries)
                    }
                    _ => None,
                },
            },
            Relation::Pairs(p) => RelationSpec::PredicateTable {
                pairs: p.iter().cloned().collect(),
            },
            Relation::Custom { description, .. } => {
                return Err(FanoError::InvalidInput(format!(
                    "custom relation `{description}` has no external form"
                )));
            }
        })
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = RelationSpec::deserialize(d)?;
        Relation::try_from(spec).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Relation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RelationSpec::try_from(self)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

/// External form of a continuous domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub metric: String,
    pub t: f64,
}

impl TryFrom<DomainSpec> for ContinuousDomain {
    type Error = FanoError;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        let metric = match spec.metric.as_str() {
            "l1" | "abs" => ContinuousMetric::L1,
            "l2" => ContinuousMetric::L2,
            "linf" => ContinuousMetric::Linf,
            other => {
                return Err(FanoError::InvalidInput(format!("unknown continuous metric `{other}`")));
            }
        };
        ContinuousDomain::new(spec.lower, spec.upper, metric, spec.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(m: usize) -> Vec<String> {
        (1..=m).map(|i| i.to_string()).collect()
    }

    #[test]
    fn equality_relation_bounds() {
        let prior = FiniteDistribution::uniform_range(4).unwrap();
        let b = relation_bounds(&Relation::Equality, &prior, &labels(4)).unwrap();
        assert_eq!((b.p_min, b.p_max), (0.25, 0.25));
    }

    #[test]
    fn always_relation_bounds() {
        let prior = FiniteDistribution::uniform_range(3).unwrap();
        let b = relation_bounds(&Relation::Always, &prior, &labels(3)).unwrap();
        assert!((b.p_min - 1.0).abs() < 1e-15 && (b.p_max - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_relation_bounds_on_a_line() {
        let prior = FiniteDistribution::uniform_range(6).unwrap();
        let rel = Relation::distance(Metric::Abs, 1.0).unwrap();
        let b = relation_bounds(&rel, &prior, &labels(6)).unwrap();
        assert!((b.p_min - 2.0 / 6.0).abs() < 1e-15);
        assert!((b.p_max - 3.0 / 6.0).abs() < 1e-15);
        assert_eq!(b.argmin_xhat.as_deref(), Some("1"));
        assert_eq!(b.argmax_xhat.as_deref(), Some("2"));
    }

    #[test]
    fn bounds_bracket_every_candidate() {
        let prior = FiniteDistribution::new(labels(5), vec![0.1, 0.3, 0.2, 0.25, 0.15]).unwrap();
        let rel = Relation::distance(Metric::Abs, 1.0).unwrap();
        let b = relation_bounds(&rel, &prior, &labels(5)).unwrap();
        for p in acceptance_probabilities(&rel, &prior, &labels(5)).unwrap() {
            assert!(b.p_min <= p && p <= b.p_max);
        }
    }

    #[test]
    fn empty_candidates() {
        let prior = FiniteDistribution::uniform_range(2).unwrap();
        assert_eq!(
            relation_bounds(&Relation::Equality, &prior, &[]),
            Err(FanoError::EmptyCandidateSet)
        );
    }

    #[test]
    fn loosening_only_goes_outward() {
        let b = RelationBounds::explicit(0.2, 0.3).unwrap();
        let looser = b.loosened(Some(0.0), Some(0.4)).unwrap();
        assert_eq!((looser.p_min, looser.p_max), (0.0, 0.4));
        assert!(b.loosened(Some(0.25), None).is_err());
        assert!(b.loosened(None, Some(0.29)).is_err());
    }

    #[test]
    fn ball_count_examples() {
        assert_eq!(ball_counts(&Metric::Discrete, 0.0, &labels(5)).unwrap(), (1, 1));
        assert_eq!(ball_counts(&Metric::Abs, 1.0, &labels(6)).unwrap(), (2, 3));
        assert_eq!(ball_counts(&Metric::Abs, 5.0, &labels(6)).unwrap(), (6, 6));
    }

    #[test]
    fn ball_counts_match_relation_bounds_on_uniform_priors() {
        for m in [3usize, 4, 7, 10] {
            let prior = FiniteDistribution::uniform_range(m).unwrap();
            for t in [0.0, 1.0, 2.0, 3.5] {
                let (nmin, nmax) = ball_counts(&Metric::Abs, t, &labels(m)).unwrap();
                let rel = Relation::distance(Metric::Abs, t).unwrap();
                let b = relation_bounds(&rel, &prior, &labels(m)).unwrap();
                assert!((b.p_min - nmin as f64 / m as f64).abs() < 1e-15);
                assert!((b.p_max - nmax as f64 / m as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ball_counts_monotone_in_radius() {
        let pts: Vec<String> = ["0,0", "1,0", "0,2", "3,1", "2,2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for metric in [Metric::L1, Metric::L2, Metric::Linf] {
            let mut prev = (0, 0);
            for k in 0..30 {
                let t = k as f64 * 0.25;
                let c = ball_counts(&metric, t, &pts).unwrap();
                assert!(c.0 >= prev.0 && c.1 >= prev.1);
                prev = c;
            }
        }
    }

    #[test]
    fn table_metric_and_symmetry() {
        let spec: RelationSpec = serde_json::from_str(
            r#"{"kind": "distance", "metric": "table", "t": 1.0, "table": [["a", "b", 1.0], ["b", "c", 2.0]]}"#,
        )
        .unwrap();
        let rel = Relation::try_from(spec).unwrap();
        assert!(rel.holds("a", "b").unwrap());
        assert!(rel.holds("b", "a").unwrap());
        assert!(!rel.holds("c", "b").unwrap());
        assert!(rel.holds("c", "c").unwrap());
        assert!(matches!(rel.holds("a", "c"), Err(FanoError::MissingDistance(..))));
        let d = rel.as_distance().unwrap();
        let ls: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert!(d.metric.asymmetric_pairs(&ls).unwrap().is_empty());
    }

    #[test]
    fn relation_json_kinds() {
        let r: Relation = serde_json::from_str(r#"{"kind": "equality"}"#).unwrap();
        assert!(r.holds("x", "x").unwrap());
        let r: Relation = serde_json::from_str(r#"{"kind": "predicate-table", "pairs": [["1", "2"]]}"#).unwrap();
        assert!(r.holds("1", "2").unwrap() && !r.holds("2", "1").unwrap());
        let r: Relation = serde_json::from_str(r#"{"kind": "distance", "metric": "abs", "t": 1}"#).unwrap();
        assert!(r.holds("3", "4").unwrap() && !r.holds("3", "5").unwrap());
        let back: Relation = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.description(), r.description());
        assert!(serde_json::from_str::<Relation>(r#"{"kind": "distance", "metric": "cosine", "t": 1}"#).is_err());
    }

    #[test]
    fn exact_volume_examples() {
        let d = ContinuousDomain::interval(0.0, 1.0, ContinuousMetric::L1, 0.1).unwrap();
        let v = sup_ball_volume(&d, VolumeMethod::Exact).unwrap();
        assert!((v.value - 0.2).abs() < 1e-15);
        assert_eq!(v.error_estimate, 0.0);

        let d = d.with_radius(0.0).unwrap();
        assert_eq!(sup_ball_volume(&d, VolumeMethod::Exact).unwrap().value, 0.0);

        let sq = ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], ContinuousMetric::Linf, 0.25).unwrap();
        let v = sup_ball_volume(&sq, VolumeMethod::Exact).unwrap();
        assert!((v.value - 0.25).abs() < 1e-15);

        let big = ContinuousDomain::interval(0.0, 1.0, ContinuousMetric::L2, 3.0).unwrap();
        assert_eq!(sup_ball_volume(&big, VolumeMethod::Exact).unwrap().value, 1.0);
    }

    #[test]
    fn exact_volume_unsupported() {
        let sq = ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], ContinuousMetric::L2, 0.25).unwrap();
        assert!(matches!(
            sup_ball_volume(&sq, VolumeMethod::Exact),
            Err(FanoError::UnsupportedMetricForExact { .. })
        ));
    }

    #[test]
    fn zero_volume_domain() {
        assert_eq!(
            ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 0.0], ContinuousMetric::L1, 0.1).unwrap_err(),
            FanoError::ZeroVolumeDomain
        );
    }

    #[test]
    fn grid_and_monte_carlo_agree_with_exact() {
        let sq = ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], ContinuousMetric::Linf, 0.25).unwrap();
        let g = sup_ball_volume_with_centers(&sq, VolumeMethod::Grid { resolution: 200 }, 9).unwrap();
        assert!((g.value - 0.25).abs() <= g.error_estimate.max(1e-12));
        let mc = sup_ball_volume_with_centers(
            &sq,
            VolumeMethod::MonteCarlo {
                samples: 40_000,
                seed: 3,
            },
            5,
        )
        .unwrap();
        assert!((mc.value - 0.25).abs() <= 5.0 * mc.error_estimate);

        // l2 disc of radius 0.25 fits inside the unit square: pi/16
        let disc = ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], ContinuousMetric::L2, 0.25).unwrap();
        let g = sup_ball_volume_with_centers(&disc, VolumeMethod::Grid { resolution: 400 }, 5).unwrap();
        let want = std::f64::consts::PI / 16.0;
        assert!((g.value - want).abs() <= g.error_estimate);
        assert!((g.value - want).abs() < 2e-3);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let sq = ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 2.0], ContinuousMetric::L2, 0.3).unwrap();
        let m = VolumeMethod::MonteCarlo {
            samples: 2000,
            seed: 99,
        };
        let a = sup_ball_volume_with_centers(&sq, m, 6).unwrap();
        let b = sup_ball_volume_with_centers(&sq, m, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn volume_monotone_in_radius() {
        let base = ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], ContinuousMetric::L2, 0.0).unwrap();
        let methods = [
            VolumeMethod::Grid { resolution: 60 },
            VolumeMethod::MonteCarlo { samples: 3000, seed: 5 },
        ];
        for m in methods {
            let mut prev = 0.0;
            for k in 0..12 {
                let d = base.with_radius(k as f64 * 0.1).unwrap();
                let v = sup_ball_volume_with_centers(&d, m, 5).unwrap().value;
                assert!(v >= prev, "{m:?} t={}", k as f64 * 0.1);
                prev = v;
            }
        }
        let mut prev = 0.0;
        for k in 0..12 {
            let d = ContinuousDomain::interval(0.0, 1.0, ContinuousMetric::L1, k as f64 * 0.1).unwrap();
            let v = sup_ball_volume(&d, VolumeMethod::Exact).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn monte_carlo_error_shrinks_with_samples() {
        // Standard error scales as 1/sqrt(n): quadrupling the samples halves it.
        let disc = ContinuousDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], ContinuousMetric::L2, 0.3).unwrap();
        let mut ratios = Vec::new();
        for seed in 0..10 {
            let small =
                sup_ball_volume_with_centers(&disc, VolumeMethod::MonteCarlo { samples: 4000, seed }, 5).unwrap();
            let large =
                sup_ball_volume_with_centers(&disc, VolumeMethod::MonteCarlo { samples: 16_000, seed }, 5).unwrap();
            ratios.push(small.error_estimate / large.error_estimate);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((1.8..=2.2).contains(&mean), "mean ratio {mean}");
    }
}
