//! Numerical toolkit for generalized Fano inequalities.
//!
//! The crate evaluates Rényi and Kullback–Leibler divergences on finite
//! distributions, checks and solves the information-diffusion bounds and the
//! relation-based Fano bounds derived from them, and certifies those bounds
//! empirically on Markov chains `X -> Y -> Xhat`, by exact enumeration or by
//! seeded Monte Carlo.
//!
//! Modules, bottom-up:
//! - [`distributions`]: validated finite distributions, joints and channels;
//! - [`divergences`]: information quantities in a configurable log base;
//! - [`relations`]: reconstruction relations and the extremized quantities
//!   (`p_min`, `p_max`, ball counts, ball volumes) they induce;
//! - [`bounds`]: check and solve modes for every inequality;
//! - [`markov_sim`]: chain construction, enumeration, simulation, certification;
//! - [`verifier`]: exhaustive and randomized sweeps over the bounds and the
//!   ingredients of their proofs.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod distributions;
pub mod divergences;
pub mod error;
pub mod markov_sim;
pub mod numeric;
pub mod relations;
pub mod rng;
pub mod verifier;

pub use distributions::{Channel, FiniteDistribution, JointDistribution};
pub use divergences::LogBase;
pub use error::{FanoError, Result};
