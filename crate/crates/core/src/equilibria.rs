//! Coarse correlated equilibria: membership, the efficient CCE LP, and the
//! realizable targets that the learning dynamics are expected to select.

use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::lp::{Constraint, LinearProgram, LpError, Relation};
use crate::scalar::Scalar;
use crate::signals::{JointStrategy, StrategySpace};

/// Default slack for CCE membership and welfare ties.
pub const DEFAULT_TOL: f64 = 1e-9;

pub fn default_tol<T: Scalar>() -> T {
    T::from_f64(DEFAULT_TOL).expect("tolerance representable")
}

/// A unilateral commitment to a fixed action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Deviation {
    pub player: usize,
    pub action: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CceCertificate<T> {
    pub is_cce: bool,
    /// `max_{i, a'_i} Σ_a [U_i(a'_i, a_{-i}) - U_i(a)] q^a`.
    pub worst_violation: T,
    /// The maximizing deviation; present whenever the check fails.
    pub violating: Option<Deviation>,
}

/// Gain of every fixed-action deviation, indexed `[player][action]`.
pub fn deviation_gains<T: Scalar>(game: &Game<T>, q: &JointDistribution<T>) -> Result<Vec<Vec<T>>> {
    game.check_dimension(q)?;
    let space = game.space();
    let support = q.support();
    Ok((0..game.num_players())
        .map(|i| {
            (0..space.num_actions(i))
                .map(|dev| {
                    support.iter().fold(T::zero(), |acc, &a| {
                        let gain = game.payoff(i, space.with_action(a, i, dev)).clone() - game.payoff(i, a).clone();
                        acc + gain * q.mass(a).clone()
                    })
                })
                .collect()
        })
        .collect())
}

/// Evaluates all `n · Σ|A_i|` CCE inequalities.
pub fn cce_check<T: Scalar>(game: &Game<T>, q: &JointDistribution<T>, tol: &T) -> Result<CceCertificate<T>> {
    if *tol < T::zero() {
        return Err(Error::InvalidConfig("tolerance must be nonnegative".into()));
    }
    let gains = deviation_gains(game, q)?;
    let mut worst: Option<(T, Deviation)> = None;
    for (player, row) in gains.into_iter().enumerate() {
        for (action, gain) in row.into_iter().enumerate() {
            if worst.as_ref().is_none_or(|(w, _)| gain > *w) {
                worst = Some((gain, Deviation { player, action }));
            }
        }
    }
    let (worst_violation, dev) = worst.expect("games have at least one action");
    let is_cce = worst_violation <= *tol;
    Ok(CceCertificate { is_cce, violating: (!is_cce).then_some(dev), worst_violation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
}

#[derive(Clone, Debug)]
pub struct EfficientCceSolution<T> {
    pub q: JointDistribution<T>,
    pub value: T,
    pub status: LpStatus,
    /// The optimal face may contain more than one point.
    pub degenerate: bool,
}

/// Maximizes welfare over the CCE polytope.
pub fn efficient_cce<T: Scalar>(game: &Game<T>) -> Result<EfficientCceSolution<T>> {
    let total = game.joint_count();
    let space = game.space();
    let mut constraints = Vec::new();
    for i in 0..game.num_players() {
        for dev in 0..space.num_actions(i) {
            let coeffs = (0..total)
                .map(|a| game.payoff(i, space.with_action(a, i, dev)).clone() - game.payoff(i, a).clone())
                .collect();
            constraints.push(Constraint { coeffs, relation: Relation::LessEq, rhs: T::zero() });
        }
    }
    constraints.push(Constraint { coeffs: vec![T::one(); total], relation: Relation::Equal, rhs: T::one() });
    let lp = LinearProgram { objective: (0..total).map(|a| game.cell_welfare(a)).collect(), constraints };
    let sol = lp.solve().map_err(|e| match e {
        // The CCE set always contains every Nash equilibrium, so this is a
        // numerical problem rather than a property of the game.
        LpError::Infeasible => Error::NumericalFailure("CCE linear program reported infeasible".into()),
        other => Error::NumericalFailure(other.to_string()),
    })?;

    let mut masses: Vec<T> = sol.x.into_iter().map(|v| if v < T::zero() { T::zero() } else { v }).collect();
    if !T::is_exact() {
        let s = crate::scalar::sum(&masses);
        masses.iter_mut().for_each(|m| *m = m.clone() / s.clone());
    }
    let q = JointDistribution::new(masses)
        .map_err(|e| Error::NumericalFailure(format!("LP optimizer is not a distribution: {e}")))?;
    let cert = cce_check(game, &q, &default_tol())?;
    if !cert.is_cce {
        return Err(Error::NumericalFailure(format!(
            "LP optimizer violates a CCE inequality by {}",
            cert.worst_violation
        )));
    }
    let value = game.welfare(&q)?;
    Ok(EfficientCceSolution { q, value, status: LpStatus::Optimal, degenerate: sol.alternative_optima })
}

/// All welfare-maximizing profiles of a realizable search.
#[derive(Clone, Debug)]
pub struct RealizableOptimum<T> {
    pub value: T,
    /// Profile indices into the [`StrategySpace`] for this game and `Ω`.
    pub profiles: Vec<usize>,
    pub strategies: Vec<JointStrategy>,
    pub distributions: Vec<JointDistribution<T>>,
}

fn best_profiles<T: Scalar>(
    game: &Game<T>,
    space: &StrategySpace,
    require_cce: bool,
) -> Result<Option<RealizableOptimum<T>>> {
    let tol = default_tol::<T>();
    let mut scored: Vec<(usize, T, JointDistribution<T>)> = Vec::new();
    for p in 0..space.profile_count() {
        let q: JointDistribution<T> = space.distribution(p);
        if require_cce && !cce_check(game, &q, &tol)?.is_cce {
            continue;
        }
        let w = game.welfare(&q)?;
        scored.push((p, w, q));
    }
    let Some(best) = crate::scalar::max_of(scored.iter().map(|(_, w, _)| w.clone())) else {
        return Ok(None);
    };
    let mut out = RealizableOptimum { value: best.clone(), profiles: vec![], strategies: vec![], distributions: vec![] };
    for (p, w, q) in scored {
        if best.clone() - w <= tol {
            out.profiles.push(p);
            out.strategies.push(space.joint_strategy(p));
            out.distributions.push(q);
        }
    }
    Ok(Some(out))
}

/// Welfare-maximizing profiles among those whose `q(s)` is a CCE, or `None`
/// when `q(S) ∩ CCE = ∅`.
pub fn efficient_realizable_cce<T: Scalar>(game: &Game<T>, omega: usize) -> Result<Option<RealizableOptimum<T>>> {
    best_profiles(game, &StrategySpace::for_game(game, omega)?, true)
}

/// Welfare-maximizing profiles over all of `q(S)`.
pub fn efficient_realizable<T: Scalar>(game: &Game<T>, omega: usize) -> Result<RealizableOptimum<T>> {
    Ok(best_profiles(game, &StrategySpace::for_game(game, omega)?, false)?.expect("S is nonempty"))
}

/// Which branch of the convergence result applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    /// `q(S) ∩ CCE ≠ ∅`: efficient realizable CCE.
    EfficientCce,
    /// `q(S) ∩ CCE = ∅`: efficient realizable distribution.
    EfficientProfile,
}

#[derive(Clone, Debug)]
pub struct LearningTarget<T> {
    pub kind: TargetKind,
    pub optimum: RealizableOptimum<T>,
}

impl<T: Scalar> LearningTarget<T> {
    /// `member[p]` is true when profile `p` is one of the targets.
    pub fn membership(&self, profile_count: usize) -> Vec<bool> {
        let mut member = vec![false; profile_count];
        for &p in &self.optimum.profiles {
            member[p] = true;
        }
        member
    }
}

pub fn learning_target<T: Scalar>(game: &Game<T>, omega: usize) -> Result<LearningTarget<T>> {
    match efficient_realizable_cce(game, omega)? {
        Some(optimum) => Ok(LearningTarget { kind: TargetKind::EfficientCce, optimum }),
        None => Ok(LearningTarget { kind: TargetKind::EfficientProfile, optimum: efficient_realizable(game, omega)? }),
    }
}
