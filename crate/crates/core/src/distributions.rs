//! Finite distributions, joint tables and channels.
//!
//! Labels are opaque strings at the boundary and dense indices inside. All
//! values are validated at construction and immutable afterwards. Zero
//! weights are kept: the support of a distribution is exactly the set of
//! outcomes with strictly positive weight.

use std::collections::HashSet;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{FanoError, Result};
use crate::numeric::compensated_sum;

/// Absolute tolerance on the total mass of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Default cap on enumerated state spaces (product channels, chains).
pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// Separator used to build labels of n-tuples of outcomes.
pub const TUPLE_SEPARATOR: &str = ",";

fn check_weights(labels: &[String], weights: &[f64], renormalize: bool) -> Result<Vec<f64>> {
    if labels.len() != weights.len() {
        return Err(FanoError::LengthMismatch {
            context: "outcomes vs weights",
            expected: labels.len(),
            actual: weights.len(),
        });
    }
    check_distinct(labels)?;
    check_mass(weights, |i| labels[i].clone(), renormalize)
}

fn check_mass<F>(weights: &[f64], label_of: F, renormalize: bool) -> Result<Vec<f64>>
where
    F: Fn(usize) -> String,
{
    if weights.is_empty() {
        return Err(FanoError::InvalidInput("distribution has no outcomes".into()));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(FanoError::NonFiniteWeight { label: label_of(i) });
        }
        if w < 0.0 {
            return Err(FanoError::NegativeWeight {
                label: label_of(i),
                weight: w,
            });
        }
    }
    let sum = compensated_sum(weights.iter().copied());
    if renormalize {
        if sum <= 0.0 {
            return Err(FanoError::SumNotOne {
                sum,
                tolerance: SUM_TOLERANCE,
            });
        }
        return Ok(weights.iter().map(|w| w / sum).collect());
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(FanoError::SumNotOne {
            sum,
            tolerance: SUM_TOLERANCE,
        });
    }
    Ok(weights.to_vec())
}

fn check_distinct(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(FanoError::DuplicateLabel(label.clone()));
        }
    }
    Ok(())
}

/// A probability distribution over finitely many labelled outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    outcomes: Vec<String>,
    weights: Vec<f64>,
}

/// Builds a validated distribution. With `renormalize` the weights are
/// divided by their sum; otherwise a sum off by more than [`SUM_TOLERANCE`]
/// is rejected.
pub fn make_distribution<L: Into<String>>(
    labels: Vec<L>,
    weights: Vec<f64>,
    renormalize: bool,
) -> Result<FiniteDistribution> {
    let outcomes: Vec<String> = labels.into_iter().map(Into::into).collect();
    let weights = check_weights(&outcomes, &weights, renormalize)?;
    Ok(FiniteDistribution { outcomes, weights })
}

impl FiniteDistribution {
    pub fn new<L: Into<String>>(labels: Vec<L>, weights: Vec<f64>) -> Result<Self> {
        make_distribution(labels, weights, false)
    }

    pub fn uniform<L: Into<String>>(labels: Vec<L>) -> Result<Self> {
        let n = labels.len();
        make_distribution(labels, vec![1.0 / n.max(1) as f64; n], false)
    }

    /// Distribution over labels `"1"..="m"` with uniform weights.
    pub fn uniform_range(m: usize) -> Result<Self> {
        Self::uniform((1..=m).map(|i| i.to_string()).collect())
    }

    /// Bernoulli(p) with outcomes `"1"` (probability `p`) and `"0"`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(FanoError::OutOfRangeProbability(p));
        }
        Ok(Self {
            outcomes: vec!["1".into(), "0".into()],
            weights: vec![p, 1.0 - p],
        })
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|l| l == label)
    }

    /// Weight of `label`, or an error when the label is unknown.
    pub fn weight(&self, label: &str) -> Result<f64> {
        self.index_of(label)
            .map(|i| self.weights[i])
            .ok_or_else(|| FanoError::UnknownLabel(label.to_string()))
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// True when both distributions list the same labels in the same order.
    pub fn same_outcomes(&self, other: &Self) -> bool {
        self.outcomes == other.outcomes
    }

    /// Total weight of the outcomes satisfying `predicate`.
    pub fn event_probability<F>(&self, predicate: F) -> f64
    where
        F: Fn(&str) -> bool,
    {
        compensated_sum(
            self.outcomes
                .iter()
                .zip(&self.weights)
                .filter(|(l, _)| predicate(l))
                .map(|(_, w)| *w),
        )
    }

    /// Total weight of the outcome indices selected by `mask`.
    pub fn mass_of(&self, mask: &[bool]) -> f64 {
        compensated_sum(self.weights.iter().zip(mask).filter(|(_, m)| **m).map(|(w, _)| *w))
    }
}

/// Probability table over pairs of outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: Vec<String>,
    cols: Vec<String>,
    /// Row-major, `rows.len() * cols.len()` entries.
    weights: Vec<f64>,
}

impl JointDistribution {
    pub fn new<L: Into<String>, M: Into<String>>(rows: Vec<L>, cols: Vec<M>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows: Vec<String> = rows.into_iter().map(Into::into).collect();
        let cols: Vec<String> = cols.into_iter().map(Into::into).collect();
        if matrix.len() != rows.len() {
            return Err(FanoError::LengthMismatch {
                context: "joint rows",
                expected: rows.len(),
                actual: matrix.len(),
            });
        }
        let mut flat = Vec::with_capacity(rows.len() * cols.len());
        for row in &matrix {
            if row.len() != cols.len() {
                return Err(FanoError::LengthMismatch {
                    context: "joint columns",
                    expected: cols.len(),
                    actual: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(rows, cols, flat)
    }

    /// Builds a joint from a row-major weight vector.
    pub fn from_flat(rows: Vec<String>, cols: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        check_distinct(&rows)?;
        check_distinct(&cols)?;
        if weights.len() != rows.len() * cols.len() {
            return Err(FanoError::LengthMismatch {
                context: "joint weights",
                expected: rows.len() * cols.len(),
                actual: weights.len(),
            });
        }
        let n_cols = cols.len();
        let weights = check_mass(
            &weights,
            |k| format!("({}, {})", rows[k / n_cols], cols[k % n_cols]),
            false,
        )?;
        Ok(Self { rows, cols, weights })
    }

    /// Joint of `(X, Y)` for `X ~ prior` and `Y | X ~ channel`.
    pub fn from_prior_and_channel(prior: &FiniteDistribution, channel: &Channel) -> Result<Self> {
        if prior.outcomes() != channel.inputs() {
            return Err(FanoError::MismatchedOutcomeSets);
        }
        let weights = prior
            .weights()
            .iter()
            .zip(channel.rows())
            .flat_map(|(p, row)| row.iter().map(move |w| p * w))
            .collect();
        Self::from_flat(prior.outcomes().to_vec(), channel.outputs().to_vec(), weights)
    }

    pub fn row_labels(&self) -> &[String] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[String] {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols.len();
        &self.weights[i * c..(i + 1) * c]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i).to_vec()).collect()
    }

    fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows())
            .map(|i| compensated_sum(self.row(i).iter().copied()))
            .collect()
    }

    fn col_sums(&self) -> Vec<f64> {
        (0..self.n_cols())
            .map(|j| compensated_sum((0..self.n_rows()).map(|i| self.get(i, j))))
            .collect()
    }

    /// Row and column marginals.
    pub fn marginals(&self) -> (FiniteDistribution, FiniteDistribution) {
        (
            FiniteDistribution {
                outcomes: self.rows.clone(),
                weights: self.row_sums(),
            },
            FiniteDistribution {
                outcomes: self.cols.clone(),
                weights: self.col_sums(),
            },
        )
    }

    /// Outer product of the two marginals.
    pub fn product_of_marginals(&self) -> JointDistribution {
        let r = self.row_sums();
        let c = self.col_sums();
        let weights = r.iter().flat_map(|ri| c.iter().map(move |cj| ri * cj)).collect();
        JointDistribution {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            weights,
        }
    }

    /// Total weight of the pairs satisfying `predicate(row_label, col_label)`.
    pub fn event_probability<F>(&self, predicate: F) -> f64
    where
        F: Fn(&str, &str) -> bool,
    {
        let mask: Vec<bool> = self
            .rows
            .iter()
            .flat_map(|r| self.cols.iter().map(|c| predicate(r, c)).collect::<Vec<_>>())
            .collect();
        self.mass_of(&mask)
    }

    /// Total weight of the row-major cells selected by `mask`.
    pub fn mass_of(&self, mask: &[bool]) -> f64 {
        compensated_sum(self.weights.iter().zip(mask).filter(|(_, m)| **m).map(|(w, _)| *w))
    }
}

/// Free-function form of [`JointDistribution::marginals`].
pub fn marginals(joint: &JointDistribution) -> (FiniteDistribution, FiniteDistribution) {
    joint.marginals()
}

/// Free-function form of [`JointDistribution::product_of_marginals`].
pub fn product_of_marginals(joint: &JointDistribution) -> JointDistribution {
    joint.product_of_marginals()
}

/// A family of conditional distributions `P(Y | X = x)`, one row per input.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: Vec<String>,
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new<L: Into<String>, M: Into<String>>(inputs: Vec<L>, outputs: Vec<M>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs: Vec<String> = inputs.into_iter().map(Into::into).collect();
        let outputs: Vec<String> = outputs.into_iter().map(Into::into).collect();
        check_distinct(&inputs)?;
        if inputs.is_empty() {
            return Err(FanoError::InvalidInput("channel has no inputs".into()));
        }
        if rows.len() != inputs.len() {
            return Err(FanoError::LengthMismatch {
                context: "channel rows",
                expected: inputs.len(),
                actual: rows.len(),
            });
        }
        let rows = rows
            .iter()
            .map(|r| check_weights(&outputs, r, false))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { inputs, outputs, rows })
    }

    /// Binary symmetric channel on `{"0", "1"}` with crossover `flip`.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        Self::new(
            vec!["0", "1"],
            vec!["0", "1"],
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
        )
    }

    /// Noiseless channel mapping every label to itself.
    pub fn identity<L: Into<String> + Clone>(labels: Vec<L>) -> Result<Self> {
        let n = labels.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(labels.clone(), labels, rows)
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn row_distribution(&self, i: usize) -> FiniteDistribution {
        FiniteDistribution {
            outcomes: self.outputs.clone(),
            weights: self.rows[i].clone(),
        }
    }

    /// Number of output tuples of length `n`, or `None` on overflow.
    pub fn tuple_count(&self, n: u32) -> Option<u128> {
        (self.outputs.len() as u128).checked_pow(n)
    }

    /// Row probabilities of the n-fold i.i.d. product, without building labels.
    /// Tuples are ordered lexicographically with the first coordinate most
    /// significant.
    pub(crate) fn product_rows(&self, n: u32) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut acc = vec![1.0];
                for _ in 0..n {
                    acc = acc.iter().flat_map(|a| row.iter().map(move |w| a * w)).collect();
                }
                acc
            })
            .collect()
    }

    /// Label of the output tuple with the given digits.
    pub fn tuple_label(&self, digits: &[usize]) -> String {
        digits
            .iter()
            .map(|&d| self.outputs[d].as_str())
            .collect::<Vec<_>>()
            .join(TUPLE_SEPARATOR)
    }

    /// Channel whose output is the n-tuple of i.i.d. uses of `self`.
    pub fn product_channel(&self, n: u32, cap: u64) -> Result<Channel> {
        if n == 0 {
            return Err(FanoError::InvalidInput("product order must be >= 1".into()));
        }
        let states = self.tuple_count(n).unwrap_or(u128::MAX);
        if states > cap as u128 {
            return Err(FanoError::StateSpaceTooLarge { states, cap });
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let k = self.outputs.len();
        let outputs = (0..states as usize)
            .map(|t| self.tuple_label(&tuple_digits(t, k, n as usize)))
            .collect();
        Ok(Channel {
            inputs: self.inputs.clone(),
            outputs,
            rows: self.product_rows(n),
        })
    }
}

/// Mixed-radix digits of tuple index `t` (most significant first).
pub fn tuple_digits(mut t: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for slot in digits.iter_mut().rev() {
        *slot = t % radix;
        t /= radix;
    }
    digits
}

/// Free-function form of [`Channel::product_channel`].
pub fn product_channel(ch: &Channel, n: u32, cap: u64) -> Result<Channel> {
    ch.product_channel(n, cap)
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

/// Labels may be written as JSON strings or numbers; both become strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Str(String),
    Num(serde_json::Number),
}

impl From<LabelRepr> for String {
    fn from(l: LabelRepr) -> Self {
        match l {
            LabelRepr::Str(s) => s,
            LabelRepr::Num(n) => n.to_string(),
        }
    }
}

pub(crate) fn deserialize_labels<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    let raw: Vec<LabelRepr> = Vec::deserialize(d)?;
    Ok(raw.into_iter().map(Into::into).collect())
}

/// Serializes a float with 17 significant digits.
pub(crate) struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_f64(self.0);
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn sig17_vec(v: &[f64]) -> Vec<Sig17> {
    v.iter().map(|x| Sig17(*x)).collect()
}

#[derive(Serialize)]
struct DistributionOut<'a> {
    outcomes: &'a [String],
    weights: Vec<Sig17>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionIn {
    #[serde(deserialize_with = "deserialize_labels")]
    outcomes: Vec<String>,
    weights: Vec<f64>,
}

impl Serialize for FiniteDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DistributionOut {
            outcomes: &self.outcomes,
            weights: sig17_vec(&self.weights),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = DistributionIn::deserialize(d)?;
        FiniteDistribution::new(raw.outcomes, raw.weights).map_err(D::Error::custom)
    }
}

#[derive(Serialize)]
struct JointOut<'a> {
    rows: &'a [String],
    cols: &'a [String],
    weights: Vec<Vec<Sig17>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointIn {
    #[serde(deserialize_with = "deserialize_labels")]
    rows: Vec<String>,
    #[serde(deserialize_with = "deserialize_labels")]
    cols: Vec<String>,
    weights: Vec<Vec<f64>>,
}

impl Serialize for JointDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        JointOut {
            rows: &self.rows,
            cols: &self.cols,
            weights: (0..self.n_rows()).map(|i| sig17_vec(self.row(i))).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = JointIn::deserialize(d)?;
        JointDistribution::new(raw.rows, raw.cols, raw.weights).map_err(D::Error::custom)
    }
}

#[derive(Serialize)]
struct ChannelOut<'a> {
    inputs: &'a [String],
    outputs: &'a [String],
    rows: Vec<Vec<Sig17>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelIn {
    #[serde(deserialize_with = "deserialize_labels")]
    inputs: Vec<String>,
    #[serde(deserialize_with = "deserialize_labels")]
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Serialize for Channel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ChannelOut {
            inputs: &self.inputs,
            outputs: &self.outputs,
            rows: self.rows.iter().map(|r| sig17_vec(r)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = ChannelIn::deserialize(d)?;
        Channel::new(raw.inputs, raw.outputs, raw.rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn joint_2x3() -> JointDistribution {
        JointDistribution::new(
            vec!["a", "b"],
            vec!["x", "y", "z"],
            vec![vec![0.1, 0.2, 0.1], vec![0.3, 0.2, 0.1]],
        )
        .unwrap()
    }

    #[test]
    fn uniform_pair() {
        let d = make_distribution(vec!["a", "b"], vec![0.5, 0.5], false).unwrap();
        assert_eq!(d.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn sum_not_one_is_rejected() {
        let err = make_distribution(vec!["a", "b"], vec![0.5, 0.6], false).unwrap_err();
        assert!(matches!(err, FanoError::SumNotOne { .. }));
    }

    #[test]
    fn renormalize_flag() {
        let d = make_distribution(vec!["a", "b"], vec![1.0, 3.0], true).unwrap();
        assert_eq!(d.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn point_mass() {
        let d = make_distribution(vec!["a"], vec![1.0], false).unwrap();
        assert_eq!(d.support(), vec![0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            make_distribution(vec!["a", "b"], vec![1.5, -0.5], false),
            Err(FanoError::NegativeWeight { .. })
        ));
        assert!(matches!(
            make_distribution(vec!["a", "a"], vec![0.5, 0.5], false),
            Err(FanoError::DuplicateLabel(_))
        ));
        assert!(matches!(
            make_distribution(vec!["a"], vec![0.5, 0.5], false),
            Err(FanoError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn zeros_are_retained() {
        let d = FiniteDistribution::new(vec!["a", "b", "c"], vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.support(), vec![0, 2]);
    }

    #[test]
    fn marginals_of_examples() {
        let j =
            JointDistribution::new(vec!["0", "1"], vec!["0", "1"], vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let (r, c) = j.marginals();
        assert_eq!(r.weights(), &[0.5, 0.5]);
        assert_eq!(c.weights(), &[0.5, 0.5]);

        let j = JointDistribution::new(vec!["0", "1"], vec!["0", "1"], vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let (r, c) = marginals(&j);
        assert_eq!(r.weights(), &[0.5, 0.5]);
        assert_eq!(c.weights(), &[0.5, 0.5]);

        let (r, c) = joint_2x3().marginals();
        for (got, want) in r.weights().iter().zip([0.4, 0.6]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in c.weights().iter().zip([0.4, 0.4, 0.2]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn product_of_marginals_examples() {
        let j = JointDistribution::new(vec!["0", "1"], vec!["0", "1"], vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(j.product_of_marginals().weights(), &[0.25; 4]);

        let pm = product_of_marginals(&joint_2x3());
        let want = [0.16, 0.16, 0.08, 0.24, 0.24, 0.12];
        for (got, want) in pm.weights().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        let again = pm.product_of_marginals();
        for (a, b) in again.weights().iter().zip(pm.weights()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn event_probability_examples() {
        let d = FiniteDistribution::uniform_range(4).unwrap();
        let half = d.event_probability(|x| x.parse::<u32>().unwrap() <= 2);
        assert_eq!(half, 0.5);
        assert_eq!(d.event_probability(|_| false), 0.0);

        let j = JointDistribution::new(vec!["1", "2"], vec!["1", "2"], vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let diag = j.event_probability(|x, xh| x == xh);
        assert!((diag - 0.5).abs() < 1e-15);
    }

    #[test]
    fn product_channel_examples() {
        let bsc = Channel::binary_symmetric(0.1).unwrap();
        assert_eq!(bsc.product_channel(1, DEFAULT_STATE_CAP).unwrap(), bsc);

        let two = product_channel(&bsc, 2, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(two.outputs(), &["0,0", "0,1", "1,0", "1,1"]);
        let want = [0.81, 0.09, 0.09, 0.01];
        for (got, want) in two.row(0).iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }

        let err = bsc.product_channel(21, DEFAULT_STATE_CAP).unwrap_err();
        assert!(matches!(err, FanoError::StateSpaceTooLarge { .. }));
    }

    #[test]
    fn product_channel_rows_sum_to_one_up_to_cap() {
        let ch = Channel::new(
            vec!["a", "b"],
            vec!["0", "1", "2"],
            vec![vec![0.2, 0.3, 0.5], vec![0.7, 0.2, 0.1]],
        )
        .unwrap();
        // 3^12 = 531441 <= 10^6
        let p = ch.product_channel(12, DEFAULT_STATE_CAP).unwrap();
        for row in p.rows() {
            assert!((compensated_sum(row.iter().copied()) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn json_formats_round_trip() {
        let d = FiniteDistribution::new(vec!["a", "b"], vec![0.1, 0.9]).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(
            text,
            r#"{"outcomes":["a","b"],"weights":[1.0000000000000001e-1,9.0000000000000002e-1]}"#
        );
        let back: FiniteDistribution = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);

        let j = joint_2x3();
        let back: JointDistribution = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back, j);

        let ch: Channel =
            serde_json::from_str(r#"{"inputs": [0, 1], "outputs": ["a", "b"], "rows": [[1, 0], [0.5, 0.5]]}"#).unwrap();
        assert_eq!(ch.inputs(), &["0", "1"]);
        let back: Channel = serde_json::from_str(&serde_json::to_string(&ch).unwrap()).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn json_rejects_invalid_weights() {
        let r: std::result::Result<FiniteDistribution, _> =
            serde_json::from_str(r#"{"outcomes": ["a", "b"], "weights": [0.5, 0.6]}"#);
        assert!(r.is_err());
    }

    fn arb_joint() -> impl Strategy<Value = JointDistribution> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(0.0f64..1.0, r * c).prop_filter_map("zero mass", move |w| {
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return None;
                }
                let w: Vec<f64> = w.iter().map(|x| x / total).collect();
                let rows = (0..r).map(|i| format!("r{i}")).collect();
                let cols = (0..c).map(|j| format!("c{j}")).collect();
                JointDistribution::from_flat(rows, cols, w).ok()
            })
        })
    }

    proptest! {
        #[test]
        fn marginals_sum_to_one(j in arb_joint()) {
            let (r, c) = j.marginals();
            prop_assert!((compensated_sum(r.weights().iter().copied()) - 1.0).abs() <= 1e-12);
            prop_assert!((compensated_sum(c.weights().iter().copied()) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn product_of_marginals_is_idempotent(j in arb_joint()) {
            let once = j.product_of_marginals();
            let twice = once.product_of_marginals();
            for (a, b) in once.weights().iter().zip(twice.weights()) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }

        #[test]
        fn complementary_events(j in arb_joint(), salt in 0u64..1000) {
            let pred = |x: &str, y: &str| (x.len() + y.len() + salt as usize + x.as_bytes()[1] as usize * 3 + y.as_bytes()[1] as usize) % 3 == 0;
            let a = j.event_probability(pred);
            let b = j.event_probability(|x, y| !pred(x, y));
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }
    }
}
