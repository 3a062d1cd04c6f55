//! Rényi and Kullback–Leibler divergences, binary entropies and mutual
//! information.
//!
//! Everything is computed in nats (see [`nats`]) and converted to the caller's
//! [`LogBase`] on the way out. Values are `f64` that may be `+inf` (when
//! absolute continuity fails) but are never NaN.
//!
//! Zero conventions:
//! - outcomes with `p_i = 0` contribute nothing for every order `alpha > 0`;
//! - order 0 is `-log Q(supp P)` with the strict support `{p_i > 0}`;
//! - for `alpha > 1` (and for KL) any `p_i > 0` with `q_i = 0` gives `+inf`.

use serde::{Deserialize, Serialize};

use crate::distributions::{FiniteDistribution, JointDistribution};
use crate::error::{FanoError, Result};

/// Orders closer than this to 1 are evaluated as relative entropy.
pub const ALPHA_ONE_GUARD: f64 = 1e-9;

/// Logarithm base `a > 1` in which information is reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LogBase(f64);

impl LogBase {
    pub const NATURAL: LogBase = LogBase(std::f64::consts::E);
    pub const BITS: LogBase = LogBase(2.0);

    pub fn new(base: f64) -> Result<Self> {
        if base.is_finite() && base > 1.0 {
            Ok(Self(base))
        } else {
            Err(FanoError::InvalidInput(format!(
                "logarithm base must be a finite number > 1, got {base}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `ln a`; exactly 1 for the natural base.
    pub fn ln(self) -> f64 {
        if self == Self::NATURAL {
            1.0
        } else {
            self.0.ln()
        }
    }

    /// Converts a quantity measured in nats into this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        if self == Self::NATURAL {
            nats
        } else {
            nats / self.ln()
        }
    }

    /// Converts a quantity measured in this base into nats.
    pub fn to_nats(self, value: f64) -> f64 {
        if self == Self::NATURAL {
            value
        } else {
            value * self.ln()
        }
    }
}

impl Default for LogBase {
    fn default() -> Self {
        Self::NATURAL
    }
}

impl TryFrom<f64> for LogBase {
    type Error = FanoError;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LogBase> for f64 {
    fn from(b: LogBase) -> f64 {
        b.0
    }
}

/// Slice-level kernels in nats. Inputs are assumed to be valid probability
/// vectors of equal length.
pub mod nats {
    use crate::numeric::{clamp_nonneg, compensated_sum};

    use super::ALPHA_ONE_GUARD;

    /// `ln(p / q)` for `p, q > 0`, avoiding overflow in the ratio.
    fn log_ratio(p: f64, q: f64) -> f64 {
        let r = p / q;
        if r.is_finite() && r > 0.0 {
            r.ln()
        } else {
            p.ln() - q.ln()
        }
    }

    pub fn kl(p: &[f64], q: &[f64]) -> f64 {
        if p == q {
            return 0.0;
        }
        let mut terms = Vec::with_capacity(p.len());
        for (&pi, &qi) in p.iter().zip(q) {
            if pi <= 0.0 {
                continue;
            }
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            terms.push(pi * log_ratio(pi, qi));
        }
        clamp_nonneg(compensated_sum(terms))
    }

    pub fn renyi(p: &[f64], q: &[f64], alpha: f64) -> f64 {
        if p == q {
            return 0.0;
        }
        if alpha == 0.0 {
            let q_supp = compensated_sum(p.iter().zip(q).filter(|(pi, _)| **pi > 0.0).map(|(_, qi)| *qi));
            return if q_supp <= 0.0 {
                f64::INFINITY
            } else {
                clamp_nonneg(-q_supp.ln())
            };
        }
        if alpha.is_infinite() {
            let mut best = 0.0_f64;
            for (&pi, &qi) in p.iter().zip(q) {
                if pi <= 0.0 {
                    continue;
                }
                if qi <= 0.0 {
                    return f64::INFINITY;
                }
                best = best.max(log_ratio(pi, qi));
            }
            return clamp_nonneg(best);
        }
        if (alpha - 1.0).abs() < ALPHA_ONE_GUARD {
            return kl(p, q);
        }
        let pairs: Vec<(f64, f64)> = p
            .iter()
            .zip(q)
            .filter(|(pi, _)| **pi > 0.0)
            .map(|(a, b)| (*a, *b))
            .collect();
        if alpha > 1.0 && pairs.iter().any(|(_, qi)| *qi <= 0.0) {
            return f64::INFINITY;
        }
        let value = if (alpha - 1.0).abs() <= 0.5 {
            // sum_i p_i (q_i/p_i)^(1-alpha) - 1, kept as a deviation from 1 so
            // the division by (alpha - 1) does not amplify cancellation.
            let deviation = compensated_sum(pairs.iter().map(|&(pi, qi)| {
                if qi <= 0.0 {
                    -pi
                } else {
                    pi * ((1.0 - alpha) * log_ratio(qi, pi)).exp_m1()
                }
            }));
            if deviation <= -1.0 {
                return f64::INFINITY;
            }
            deviation.ln_1p() / (alpha - 1.0)
        } else {
            let exponents: Vec<f64> = pairs
                .iter()
                .filter(|(_, qi)| *qi > 0.0)
                .map(|&(pi, qi)| alpha * pi.ln() + (1.0 - alpha) * qi.ln())
                .collect();
            if exponents.is_empty() {
                // Disjoint supports with alpha < 1: log 0 / (alpha - 1).
                return f64::INFINITY;
            }
            log_sum_exp(&exponents) / (alpha - 1.0)
        };
        clamp_nonneg(value)
    }

    /// `ln sum_i exp(x_i)` with the maximum shifted out.
    pub fn log_sum_exp(xs: &[f64]) -> f64 {
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        max + compensated_sum(xs.iter().map(|x| (x - max).exp())).ln()
    }

    pub fn binary_entropy(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        clamp_nonneg(-p * p.ln() - (1.0 - p) * (-p).ln_1p())
    }

    pub fn binary_renyi_entropy(p: f64, alpha: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        if (alpha - 1.0).abs() < ALPHA_ONE_GUARD {
            return binary_entropy(p);
        }
        if alpha == 0.0 {
            return std::f64::consts::LN_2;
        }
        if alpha.is_infinite() {
            return clamp_nonneg(-p.max(1.0 - p).ln());
        }
        let lp = p.ln();
        let lq = (-p).ln_1p();
        let value = if (alpha - 1.0).abs() <= 0.5 {
            let deviation = p * ((alpha - 1.0) * lp).exp_m1() + (1.0 - p) * ((alpha - 1.0) * lq).exp_m1();
            deviation.ln_1p() / (1.0 - alpha)
        } else {
            log_sum_exp(&[alpha * lp, alpha * lq]) / (1.0 - alpha)
        };
        clamp_nonneg(value)
    }

    pub fn entropy(p: &[f64]) -> f64 {
        clamp_nonneg(compensated_sum(p.iter().filter(|w| **w > 0.0).map(|w| -w * w.ln())))
    }
}

fn aligned_weights(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<Vec<f64>> {
    if p.same_outcomes(q) {
        return Ok(q.weights().to_vec());
    }
    if p.len() != q.len() {
        return Err(FanoError::MismatchedOutcomeSets);
    }
    p.outcomes()
        .iter()
        .map(|l| q.index_of(l).map(|j| q.weights()[j]))
        .collect::<Option<Vec<_>>>()
        .ok_or(FanoError::MismatchedOutcomeSets)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(FanoError::OutOfRangeProbability(p))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 {
        Err(FanoError::NegativeAlpha(alpha))
    } else {
        Ok(())
    }
}

/// Rényi divergence `D_alpha(P || Q)` for `alpha` in `[0, +inf]`.
///
/// Q may list the same labels as P in a different order. Order 1 (and any
/// order within [`ALPHA_ONE_GUARD`] of it) is the relative entropy.
pub fn renyi_divergence(p: &FiniteDistribution, q: &FiniteDistribution, alpha: f64, base: LogBase) -> Result<f64> {
    check_alpha(alpha)?;
    let qw = aligned_weights(p, q)?;
    Ok(base.from_nats(nats::renyi(p.weights(), &qw, alpha)))
}

/// Relative entropy `D(P || Q)`.
pub fn kl_divergence(p: &FiniteDistribution, q: &FiniteDistribution, base: LogBase) -> Result<f64> {
    let qw = aligned_weights(p, q)?;
    Ok(base.from_nats(nats::kl(p.weights(), &qw)))
}

/// `d_alpha(p || q)`: Rényi divergence between Bernoulli(p) and Bernoulli(q).
pub fn binary_renyi_divergence(p: f64, q: f64, alpha: f64, base: LogBase) -> Result<f64> {
    check_probability(p)?;
    check_probability(q)?;
    check_alpha(alpha)?;
    Ok(base.from_nats(nats::renyi(&[p, 1.0 - p], &[q, 1.0 - q], alpha)))
}

/// `d(p || q)`: relative entropy between Bernoulli(p) and Bernoulli(q).
pub fn binary_kl(p: f64, q: f64, base: LogBase) -> Result<f64> {
    check_probability(p)?;
    check_probability(q)?;
    Ok(base.from_nats(nats::kl(&[p, 1.0 - p], &[q, 1.0 - q])))
}

/// `h_alpha(p) = log(p^alpha + (1-p)^alpha) / (1 - alpha)`, with order 1
/// mapped to [`binary_entropy`].
pub fn binary_renyi_entropy(p: f64, alpha: f64, base: LogBase) -> Result<f64> {
    check_probability(p)?;
    check_alpha(alpha)?;
    Ok(base.from_nats(nats::binary_renyi_entropy(p, alpha)))
}

pub fn binary_entropy(p: f64, base: LogBase) -> Result<f64> {
    check_probability(p)?;
    Ok(base.from_nats(nats::binary_entropy(p)))
}

/// Shannon entropy `H(P)`.
pub fn entropy(p: &FiniteDistribution, base: LogBase) -> f64 {
    base.from_nats(nats::entropy(p.weights()))
}

pub(crate) fn mutual_information_nats(joint: &JointDistribution) -> f64 {
    let pm = joint.product_of_marginals();
    nats::kl(joint.weights(), pm.weights())
}

pub(crate) fn conditional_entropy_nats(joint: &JointDistribution) -> f64 {
    let (_, cols) = joint.marginals();
    let c = cols.weights();
    let terms = (0..joint.n_rows()).flat_map(|i| {
        joint
            .row(i)
            .iter()
            .zip(c)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, cj)| -w * (w / cj).ln())
            .collect::<Vec<_>>()
    });
    crate::numeric::clamp_nonneg(crate::numeric::compensated_sum(terms))
}

/// `I(X; Y)` for a joint with rows `X` and columns `Y`: the relative entropy
/// of the joint against the product of its marginals.
pub fn mutual_information(joint: &JointDistribution, base: LogBase) -> f64 {
    base.from_nats(mutual_information_nats(joint))
}

/// `H(X | Xhat)` for a joint with rows `X` and columns `Xhat`, computed as
/// `sum_j P(xhat_j) H(X | Xhat = xhat_j)`.
pub fn conditional_entropy(joint: &JointDistribution, base: LogBase) -> f64 {
    base.from_nats(conditional_entropy_nats(joint))
}
