//! Payoff-based learning of efficient coarse correlated equilibria.
//!
//! Agents observe a common uniform signal `z ∈ [0, 1]` each step and play
//! signal-based strategies that map equal-width intervals of `z` to actions.
//! The crate provides the game model, the CCE machinery (membership, an exact
//! LP for the efficient CCE, realizable targets), the learning dynamics, and
//! a stochastic-stability analysis of the induced perturbed Markov chain.
//!
//! Everything that does not need transcendental functions is generic over
//! [`Scalar`], implemented for `f32`, `f64` and exact [`Rational`].

pub mod distribution;
pub mod equilibria;
pub mod error;
pub mod experiment;
pub mod game;
pub mod graph;
pub mod io;
pub mod learning;
pub mod lp;
pub mod presets;
pub mod scalar;
pub mod signals;
pub mod stability;

pub use distribution::JointDistribution;
pub use equilibria::{cce_check, efficient_cce, efficient_realizable, efficient_realizable_cce, CceCertificate};
pub use error::{Error, Result};
pub use game::{normalize_payoffs, ActionSpace, Game, Interdependence};
pub use scalar::{Rational, Scalar};
pub use signals::{JointStrategy, Strategy, StrategySpace};

pub type GameF64 = Game<f64>;
pub type GameF32 = Game<f32>;
pub type ExactGame = Game<Rational>;
pub type DistributionF64 = JointDistribution<f64>;
pub type ExactDistribution = JointDistribution<Rational>;
