//! Markov chains `X -> Y^n -> Xhat`: exact enumeration, seeded simulation
//! and end-to-end certification of the bounds.
//!
//! `Y^n` is `n` i.i.d. uses of one channel. Output tuples are indexed
//! lexicographically with the first coordinate most significant and labelled
//! by joining coordinate labels with `,`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, entropy_version_bound, fano_relation_bound, independent_samples_reports, BoundReport};
use crate::distributions::{
    tuple_digits, Channel, FiniteDistribution, JointDistribution, DEFAULT_STATE_CAP, TUPLE_SEPARATOR,
};
use crate::divergences::{self, nats, LogBase};
use crate::error::{FanoError, Result};
use crate::numeric::{clamp_nonneg, compensated_sum};
use crate::relations::{ball_counts, relation_bounds, Relation, RelationBounds};
use crate::rng::{categorical, dirichlet_unit, stream_rng, uniform};

/// Trials per random stream in [`simulate_chain`].
pub const TRIALS_PER_BLOCK: u64 = 1 << 16;

/// Map from observation tuples to reconstructions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Estimator {
    /// Deterministic lookup keyed by tuple label.
    Map { map: BTreeMap<String, String> },
    /// Randomized reconstruction; inputs are tuple labels.
    Channel { channel: Channel },
    /// Maximum likelihood over `X`, ties to the lowest index.
    #[default]
    Ml,
}

fn one() -> u32 {
    1
}

fn equality() -> Relation {
    Relation::Equality
}

/// A prior, an observation channel used `n` times, an estimator and the
/// relation that defines success.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub prior: FiniteDistribution,
    pub channel: Channel,
    #[serde(default = "one")]
    pub n: u32,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "equality")]
    pub relation: Relation,
    #[serde(default)]
    pub base: LogBase,
}

impl Experiment {
    pub fn new(
        prior: FiniteDistribution,
        channel: Channel,
        n: u32,
        estimator: Estimator,
        relation: Relation,
    ) -> Result<Self> {
        let exp = Self {
            prior,
            channel,
            n,
            estimator,
            relation,
            base: LogBase::NATURAL,
        };
        exp.validate()?;
        Ok(exp)
    }

    pub fn with_base(mut self, base: LogBase) -> Self {
        self.base = base;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(FanoError::InvalidInput("n must be >= 1".into()));
        }
        if self.prior.outcomes() != self.channel.inputs() {
            return Err(FanoError::MismatchedOutcomeSets);
        }
        Ok(())
    }

    /// Labels of the reconstruction alphabet: the estimator channel outputs,
    /// otherwise the `X` labels followed by any other mapped labels (sorted).
    pub fn reconstruction_labels(&self) -> Vec<String> {
        match &self.estimator {
            Estimator::Channel { channel } => channel.outputs().to_vec(),
            Estimator::Ml => self.prior.outcomes().to_vec(),
            Estimator::Map { map } => {
                let mut labels = self.prior.outcomes().to_vec();
                let mut extra: Vec<&String> = map.values().filter(|v| !labels.contains(v)).collect();
                extra.sort();
                extra.dedup();
                labels.extend(extra.into_iter().cloned());
                labels
            }
        }
    }

    fn tuple_count(&self) -> Option<u128> {
        self.channel.tuple_count(self.n)
    }
}

/// Exact or simulated quantities of one chain, in the experiment's base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub joint_xxhat: JointDistribution,
    pub p_r: f64,
    /// `I(X; Y_1..Y_n)`.
    pub i_xy: f64,
    /// `I(X; Y_1)`.
    pub i_xy_single: f64,
    pub i_xxhat: f64,
    pub h_x_given_xhat: f64,
    /// Always exact (from the model).
    #[serde(with = "bounds::extended")]
    pub beta: f64,
    /// False for simulated chains; their information fields are plug-in estimates.
    pub exact: bool,
    /// Binomial standard error of `p_r`; 0 when exact.
    pub mc_stderr: f64,
}

#[derive(Clone, Copy)]
enum Choice<'a> {
    Point(usize),
    Mixed(&'a [f64]),
}

/// Applies the estimator to output tuples.
struct Resolver<'a> {
    exp: &'a Experiment,
    input_index: HashMap<&'a str, usize>,
    cols: Vec<String>,
}

impl<'a> Resolver<'a> {
    fn new(exp: &'a Experiment) -> Result<Self> {
        exp.validate()?;
        let cols = exp.reconstruction_labels();
        let mut input_index = HashMap::new();
        if let Estimator::Channel { channel } = &exp.estimator {
            for (i, l) in channel.inputs().iter().enumerate() {
                input_index.insert(l.as_str(), i);
            }
        }
        Ok(Self { exp, input_index, cols })
    }

    fn index_cols(&self) -> HashMap<String, usize> {
        self.cols.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect()
    }

    fn label(&self, digits: &[usize]) -> String {
        self.exp.channel.tuple_label(digits)
    }

    fn choose(&self, digits: &[usize], cols: &HashMap<String, usize>) -> Result<Choice<'a>> {
        match &self.exp.estimator {
            Estimator::Ml => Ok(Choice::Point(ml_choice(self.exp.channel.rows(), digits))),
            Estimator::Map { map } => {
                let label = self.label(digits);
                let xhat = map.get(&label).ok_or(FanoError::UnknownLabel(label))?;
                Ok(Choice::Point(cols[xhat]))
            }
            Estimator::Channel { channel } => {
                let label = self.label(digits);
                let i = *self
                    .input_index
                    .get(label.as_str())
                    .ok_or(FanoError::UnknownLabel(label))?;
                Ok(Choice::Mixed(channel.row(i)))
            }
        }
    }
}

/// Maximum-likelihood input for the observed digits; near-ties (relative
/// 1e-12) go to the lowest index.
fn ml_choice(rows: &[Vec<f64>], digits: &[usize]) -> usize {
    let lik: Vec<f64> = rows
        .iter()
        .map(|row| digits.iter().map(|&d| row[d]).product())
        .collect();
    let best = lik.iter().cloned().fold(0.0, f64::max);
    lik.iter().position(|&l| l >= best * (1.0 - 1e-12)).unwrap_or(0)
}

/// `I` in nats for a prior and row-stochastic `rows` (any output alphabet).
fn mutual_information_rows(prior: &[f64], rows: &[Vec<f64>]) -> f64 {
    let width = rows.first().map_or(0, |r| r.len());
    let p_y: Vec<f64> = (0..width)
        .map(|t| compensated_sum(prior.iter().zip(rows).map(|(p, r)| p * r[t])))
        .collect();
    let per_x: Vec<f64> = prior
        .par_iter()
        .zip(rows.par_iter())
        .map(|(&px, row)| {
            if px == 0.0 {
                return 0.0;
            }
            compensated_sum(
                row.iter()
                    .zip(&p_y)
                    .filter(|(w, _)| **w > 0.0)
                    .map(|(w, py)| px * w * (w / py).ln()),
            )
        })
        .collect();
    clamp_nonneg(compensated_sum(per_x))
}

fn check_cap(exp: &Experiment, cap: u64) -> Result<usize> {
    let states = exp
        .tuple_count()
        .and_then(|t| t.checked_mul(exp.prior.len() as u128))
        .unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(FanoError::StateSpaceTooLarge { states, cap });
    }
    Ok(exp.tuple_count().unwrap_or(0) as usize)
}

/// Exact summary by enumerating `X × Y^n` (at most [`DEFAULT_STATE_CAP`] states).
pub fn enumerate_chain(exp: &Experiment) -> Result<ChainSummary> {
    enumerate_chain_with_cap(exp, DEFAULT_STATE_CAP)
}

pub fn enumerate_chain_with_cap(exp: &Experiment, cap: u64) -> Result<ChainSummary> {
    let resolver = Resolver::new(exp)?;
    let tuples = check_cap(exp, cap)?;
    let prior = exp.prior.weights();
    let ny = exp.channel.outputs().len();
    let n = exp.n as usize;
    let rows_n = exp.channel.product_rows(exp.n);

    let cols = resolver.index_cols();
    let choices: Vec<Option<Choice>> = (0..tuples)
        .into_par_iter()
        .map(|t| {
            let reachable = prior.iter().zip(&rows_n).any(|(p, r)| *p > 0.0 && r[t] > 0.0);
            if reachable {
                resolver.choose(&tuple_digits(t, ny, n), &cols).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let width = resolver.cols.len();
    let joint_rows: Vec<Vec<f64>> = prior
        .par_iter()
        .zip(rows_n.par_iter())
        .map(|(&px, row)| {
            let mut cells: Vec<Vec<f64>> = vec![Vec::new(); width];
            for (t, choice) in choices.iter().enumerate() {
                let w = px * row[t];
                if w == 0.0 {
                    continue;
                }
                match choice.expect("positive-mass tuple is reachable") {
                    Choice::Point(c) => cells[c].push(w),
                    Choice::Mixed(est) => {
                        for (c, e) in est.iter().enumerate() {
                            if *e > 0.0 {
                                cells[c].push(w * e);
                            }
                        }
                    }
                }
            }
            cells.into_iter().map(compensated_sum).collect()
        })
        .collect();
    let joint = JointDistribution::new(exp.prior.outcomes().to_vec(), resolver.cols.clone(), joint_rows)?;

    let i_xy = mutual_information_rows(prior, &rows_n);
    let i_single = mutual_information_rows(prior, exp.channel.rows());
    let i_xxhat = divergences::mutual_information_nats(&joint);
    if i_xxhat > i_xy + 1e-10 {
        return Err(FanoError::DataProcessingViolation {
            i_xxhat: exp.base.from_nats(i_xxhat),
            i_xy: exp.base.from_nats(i_xy),
        });
    }
    summarize(exp, joint, i_xy, i_single, true, None)
}

fn summarize(
    exp: &Experiment,
    joint: JointDistribution,
    i_xy: f64,
    i_single: f64,
    exact: bool,
    trials: Option<u64>,
) -> Result<ChainSummary> {
    let mask = exp.relation.membership(joint.row_labels(), joint.col_labels())?;
    let p_r = joint.mass_of(&mask).clamp(0.0, 1.0);
    let mc_stderr = trials.map_or(0.0, |t| (p_r * (1.0 - p_r) / t as f64).sqrt());
    let base = exp.base;
    Ok(ChainSummary {
        p_r,
        i_xy: base.from_nats(i_xy),
        i_xy_single: base.from_nats(i_single),
        i_xxhat: base.from_nats(divergences::mutual_information_nats(&joint)),
        h_x_given_xhat: base.from_nats(divergences::conditional_entropy_nats(&joint)),
        beta: compute_beta(&exp.channel, base),
        exact,
        mc_stderr,
        joint_xxhat: joint,
    })
}

#[derive(Default)]
struct Counts {
    xxhat: Vec<u64>,
    xy1: Vec<u64>,
    xy: BTreeMap<(usize, u128), u64>,
}

impl Counts {
    fn merge(&mut self, other: Counts) {
        if self.xxhat.is_empty() {
            *self = other;
            return;
        }
        for (a, b) in self.xxhat.iter_mut().zip(other.xxhat) {
            *a += b;
        }
        for (a, b) in self.xy1.iter_mut().zip(other.xy1) {
            *a += b;
        }
        for (k, v) in other.xy {
            *self.xy.entry(k).or_default() += v;
        }
    }
}

/// Plug-in mutual information (nats) of a count table keyed by `(x, y)`.
fn plug_in_mi<I>(cells: I, trials: u64) -> f64
where
    I: Iterator<Item = ((usize, u128), u64)> + Clone,
{
    let mut cx: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cy: BTreeMap<u128, u64> = BTreeMap::new();
    for ((x, y), c) in cells.clone() {
        *cx.entry(x).or_default() += c;
        *cy.entry(y).or_default() += c;
    }
    let tf = trials as f64;
    clamp_nonneg(compensated_sum(cells.filter(|(_, c)| *c > 0).map(|((x, y), c)| {
        let c = c as f64;
        c / tf * (c * tf / (cx[&x] as f64 * cy[&y] as f64)).ln()
    })))
}

/// Empirical summary from `trials` i.i.d. runs of the chain.
///
/// Trials are split into blocks of [`TRIALS_PER_BLOCK`]; block `b` draws from
/// stream `b` of `seed`, so the result does not depend on the worker count.
/// Mutual-information fields are plug-in estimates; `beta` is exact.
pub fn simulate_chain(exp: &Experiment, trials: u64, seed: u64) -> Result<ChainSummary> {
    if trials == 0 {
        return Err(FanoError::InvalidInput("trials must be >= 1".into()));
    }
    let resolver = Resolver::new(exp)?;
    let ny = exp.channel.outputs().len();
    let nx = exp.prior.len();
    let n = exp.n as usize;
    if exp.tuple_count().is_none() {
        return Err(FanoError::StateSpaceTooLarge {
            states: u128::MAX,
            cap: u64::MAX,
        });
    }
    let cols = resolver.index_cols();
    let width = resolver.cols.len();
    let prior = exp.prior.weights();
    let rows = exp.channel.rows();
    let blocks = trials.div_ceil(TRIALS_PER_BLOCK);

    let per_block: Vec<Counts> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let count = TRIALS_PER_BLOCK.min(trials - b * TRIALS_PER_BLOCK);
            let mut counts = Counts {
                xxhat: vec![0; nx * width],
                xy1: vec![0; nx * ny],
                xy: BTreeMap::new(),
            };
            let mut digits = vec![0usize; n];
            for _ in 0..count {
                let x = categorical(&mut rng, prior);
                let mut t: u128 = 0;
                for d in digits.iter_mut() {
                    *d = categorical(&mut rng, &rows[x]);
                    t = t * ny as u128 + *d as u128;
                }
                let xhat = match resolver.choose(&digits, &cols)? {
                    Choice::Point(c) => c,
                    Choice::Mixed(row) => categorical(&mut rng, row),
                };
                counts.xxhat[x * width + xhat] += 1;
                counts.xy1[x * ny + digits[0]] += 1;
                *counts.xy.entry((x, t)).or_default() += 1;
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = Counts::default();
    for c in per_block {
        total.merge(c);
    }

    let tf = trials as f64;
    let joint_rows: Vec<Vec<f64>> = total
        .xxhat
        .chunks(width)
        .map(|r| r.iter().map(|c| *c as f64 / tf).collect())
        .collect();
    let joint = JointDistribution::new(exp.prior.outcomes().to_vec(), resolver.cols.clone(), joint_rows)?;
    let i_xy = plug_in_mi(total.xy.iter().map(|(k, v)| (*k, *v)), trials);
    let xy1 = total
        .xy1
        .iter()
        .enumerate()
        .map(|(i, c)| ((i / ny, (i % ny) as u128), *c));
    let i_single = plug_in_mi(xy1, trials);
    summarize(exp, joint, i_xy, i_single, false, Some(trials))
}

/// `max_{x, x'} D(row_x || row_x')` over ordered input pairs; `+inf` when some
/// row is not absolutely continuous with respect to another.
pub fn compute_beta(ch: &Channel, base: LogBase) -> f64 {
    let rows = ch.rows();
    let mut beta: f64 = 0.0;
    for (i, p) in rows.iter().enumerate() {
        for (j, q) in rows.iter().enumerate() {
            if i != j {
                beta = beta.max(nats::kl(p, q));
            }
        }
    }
    base.from_nats(beta)
}

/// Settings for [`certify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Trials for the Monte Carlo fallback when enumeration exceeds `cap`.
    pub trials: u64,
    pub seed: u64,
    /// Looser `p_min` / `p_max` than the computed extremes.
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub tolerance: f64,
    pub cap: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 0,
            p_min: None,
            p_max: None,
            tolerance: 1e-9,
            cap: DEFAULT_STATE_CAP,
        }
    }
}

/// A report tagged with the inequality it checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedReport {
    pub bound: String,
    pub holds: bool,
    #[serde(flatten)]
    pub report: BoundReport,
}

impl NamedReport {
    fn new(bound: &str, report: BoundReport) -> Self {
        Self {
            bound: bound.into(),
            holds: report.holds(),
            report,
        }
    }
}

/// Every applicable bound evaluated on one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub summary: ChainSummary,
    pub bounds: RelationBounds,
    pub reports: Vec<NamedReport>,
    /// Inequalities not evaluated, with the reason.
    pub skipped: Vec<String>,
}

impl Certification {
    pub fn all_hold(&self) -> bool {
        self.reports.iter().all(|r| r.holds)
    }
}

/// Runs every applicable bound against the chain.
///
/// The chain is enumerated when `|X| * |Y|^n <= cap` and simulated otherwise.
/// On simulated chains only bounds fed by exact model quantities are
/// evaluated (single-letter information and `beta`), and the tolerance is
/// widened by four standard errors of `p_r`.
pub fn certify(exp: &Experiment, options: &CertifyOptions) -> Result<Certification> {
    let summary = match enumerate_chain_with_cap(exp, options.cap) {
        Ok(s) => s,
        Err(FanoError::StateSpaceTooLarge { .. }) => {
            let mut s = simulate_chain(exp, options.trials, options.seed)?;
            let rows = exp.channel.rows();
            s.i_xy_single = exp.base.from_nats(mutual_information_rows(exp.prior.weights(), rows));
            s
        }
        Err(e) => return Err(e),
    };
    let base = exp.base;
    let cols = summary.joint_xxhat.col_labels().to_vec();
    let computed = relation_bounds(&exp.relation, &exp.prior, &cols)?;
    let mut bounds = computed.loosened(options.p_min, options.p_max)?;
    let mut skipped = Vec::new();
    let mut reports = Vec::new();
    let tol = options.tolerance + 4.0 * summary.mc_stderr;

    if !bounds.admits_division() && bounds.p_max < 1.0 && bounds.p_min > 0.0 {
        bounds = bounds.loosened(Some(0.0), None)?;
        skipped.push("p_min + p_max >= 1: p_min relaxed to 0".into());
    }
    let divisible = bounds.admits_division();
    if !divisible {
        skipped.push(format!(
            "relation and samples bounds: p_min + p_max = {} admits no division",
            bounds.p_min + bounds.p_max
        ));
    }

    let joint = &summary.joint_xxhat;
    let i_single_nats = base.to_nats(summary.i_xy_single);
    let beta_nats = base.to_nats(summary.beta);
    if summary.exact {
        let i_xy_nats = base.to_nats(summary.i_xy);
        if divisible {
            let r = fano_relation_bound(joint, Some(summary.i_xy), &exp.relation, &bounds, base)?;
            reports.push(NamedReport::new(
                "relation-reconstruction",
                r.reconstruction.with_tolerance(tol),
            ));
            if let Some(obs) = r.observation {
                reports.push(NamedReport::new("relation-observation", obs.with_tolerance(tol)));
            }
        }
        if bounds.p_max > 0.0 {
            let r = entropy_version_bound(joint, &exp.relation, &bounds, base)?;
            reports.push(NamedReport::new("entropy-version", r.with_tolerance(tol)));
        } else {
            skipped.push("entropy version: p_max = 0".into());
        }
        if divisible {
            let s = independent_samples_reports(
                summary.p_r,
                exp.n,
                i_single_nats,
                Some(i_xy_nats),
                beta_nats,
                &bounds,
                base,
            )?;
            push_samples(&mut reports, s, tol)?;
        }
        distance_reports(exp, &summary, i_xy_nats, tol, &mut reports, &mut skipped)?;
    } else {
        skipped.push("relation-reconstruction, entropy-version, distance: need exact I(X; Xhat)".into());
        if divisible {
            let s = independent_samples_reports(summary.p_r, exp.n, i_single_nats, None, beta_nats, &bounds, base)?;
            push_samples(&mut reports, s, tol)?;
        }
        let upper = exp.n as f64 * i_single_nats;
        distance_reports(exp, &summary, upper, tol, &mut reports, &mut skipped)?;
    }
    Ok(Certification {
        summary,
        bounds,
        reports,
        skipped,
    })
}

fn push_samples(reports: &mut Vec<NamedReport>, s: bounds::IndependentSamplesReport, tol: f64) -> Result<()> {
    if !s.chain_holds {
        return Err(FanoError::NumericalInstability(format!(
            "I(X; Y^n) <= n I(X; Y_1) <= n beta fails for n = {}",
            s.n
        )));
    }
    reports.push(NamedReport::new(
        "samples-single-letter",
        s.single_letter.with_tolerance(tol),
    ));
    reports.push(NamedReport::new("samples-beta", s.beta_form.with_tolerance(tol)));
    Ok(())
}

fn distance_reports(
    exp: &Experiment,
    summary: &ChainSummary,
    info_nats: f64,
    tol: f64,
    reports: &mut Vec<NamedReport>,
    skipped: &mut Vec<String>,
) -> Result<()> {
    let Some(dist) = exp.relation.as_distance() else {
        return Ok(());
    };
    let m = exp.prior.len();
    let uniform = exp.prior.weights().iter().all(|w| (w - 1.0 / m as f64).abs() <= 1e-12);
    if !uniform {
        skipped.push("distance bounds: prior is not uniform".into());
        return Ok(());
    }
    let labels = exp.prior.outcomes();
    if summary.exact {
        match bounds::distance_fano_bound(&summary.joint_xxhat, &dist.metric, dist.t, exp.base) {
            Ok(r) => reports.push(NamedReport::new("distance", r.report.with_tolerance(tol))),
            Err(FanoError::RangeMismatch) => skipped.push("distance: range(Xhat) != range(X)".into()),
            Err(e) => return Err(e),
        }
    }
    let (_, n_max) = ball_counts(&dist.metric, dist.t, labels)?;
    if n_max >= m {
        skipped.push("mi-distance: N_t^max = M".into());
        return Ok(());
    }
    let r = bounds::mi_distance_bound(exp.base.from_nats(info_nats), 1.0 - summary.p_r, m, n_max, exp.base)?;
    reports.push(NamedReport::new("mi-distance", r.with_tolerance(tol)));
    Ok(())
}

/// Random experiment with Dirichlet(1) prior, channel rows and estimator
/// rows, drawn from stream `stream` of `seed`. Labels are `0..size`; the
/// estimator is a channel from `Y` to `Xhat` and the relation is equality.
pub fn random_experiment(seed: u64, stream: u64, nx: usize, ny: usize, nxhat: usize) -> Result<Experiment> {
    let mut rng = stream_rng(seed, stream);
    let labels = |k: usize| (0..k).map(|i| i.to_string()).collect::<Vec<_>>();
    let prior = FiniteDistribution::new(labels(nx), dirichlet_unit(&mut rng, nx))?;
    let rows = (0..nx).map(|_| dirichlet_unit(&mut rng, ny)).collect();
    let channel = Channel::new(labels(nx), labels(ny), rows)?;
    let est_rows = (0..ny).map(|_| dirichlet_unit(&mut rng, nxhat)).collect();
    let estimator = Estimator::Channel {
        channel: Channel::new(labels(ny), labels(nxhat), est_rows)?,
    };
    Experiment::new(prior, channel, 1, estimator, Relation::Equality)
}

/// Tuple label for explicit output labels, e.g. `["0", "1"] -> "0,1"`.
pub fn tuple_key<S: AsRef<str>>(parts: &[S]) -> String {
    parts
        .iter()
        .map(|s| s.as_ref())
        .collect::<Vec<_>>()
        .join(TUPLE_SEPARATOR)
}

/// `X ~ U[0, 1]`, `Y = X + N` with `N ~ U[0, w]`, `0 < w <= 1`, reconstructed
/// by the posterior median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformNoiseDemo {
    width: f64,
}

impl UniformNoiseDemo {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(FanoError::InvalidInput(format!(
                "noise width must be in (0, 1], got {width}"
            )));
        }
        Ok(Self { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// `I(X; Y) = w/2 - ln w` nats: `h(Y | X) = ln w` and the trapezoidal
    /// density of `Y` has differential entropy `w/2`.
    pub fn mutual_information(&self) -> f64 {
        self.width / 2.0 - self.width.ln()
    }

    /// `I` (nats) between `X` and `Y` both quantized to cells of size
    /// `1/cells`, from exact cell probabilities. Requires `w * cells` to be
    /// an integer; underestimates the continuous value by `O(1/cells)`.
    pub fn discretized_mutual_information(&self, cells: usize) -> Result<f64> {
        let span = self.width * cells as f64;
        let k = span.round() as usize;
        if k == 0 || (span - k as f64).abs() > 1e-9 {
            return Err(FanoError::InvalidInput(format!(
                "noise width {} is not a whole number of 1/{cells} cells",
                self.width
            )));
        }
        // X-cell i lands in Y-cells i..=i+k; the end cells get half weight.
        let offsets: Vec<f64> = (0..=k)
            .map(|j| {
                if j == 0 || j == k {
                    0.5 / k as f64
                } else {
                    1.0 / k as f64
                }
            })
            .collect();
        let nf = cells as f64;
        let mut p_y = vec![0.0; cells + k];
        for i in 0..cells {
            for (j, c) in offsets.iter().enumerate() {
                p_y[i + j] += c / nf;
            }
        }
        let terms = (0..cells).flat_map(|i| {
            let p_y = &p_y;
            offsets
                .iter()
                .enumerate()
                .map(move |(j, c)| c / nf * (c / p_y[i + j]).ln())
        });
        Ok(compensated_sum(terms))
    }

    /// Posterior median of `X` given `Y = y`: the midpoint of
    /// `[max(0, y - w), min(1, y)]`.
    pub fn estimate(&self, y: f64) -> f64 {
        0.5 * ((y - self.width).max(0.0) + y.min(1.0))
    }

    /// Monte Carlo estimate of `P(|X - Xhat| > t)` and its standard error.
    pub fn error_probability(&self, t: f64, trials: u64, seed: u64) -> Result<(f64, f64)> {
        if trials == 0 {
            return Err(FanoError::InvalidInput("trials must be >= 1".into()));
        }
        let blocks = trials.div_ceil(TRIALS_PER_BLOCK);
        let misses: u64 = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(seed, b);
                let count = TRIALS_PER_BLOCK.min(trials - b * TRIALS_PER_BLOCK);
                (0..count)
                    .filter(|_| {
                        let x = uniform(&mut rng);
                        let y = x + self.width * uniform(&mut rng);
                        (x - self.estimate(y)).abs() > t
                    })
                    .count() as u64
            })
            .sum();
        let p = misses as f64 / trials as f64;
        Ok((p, (p * (1.0 - p) / trials as f64).sqrt()))
    }
}
