//! Signal-based strategies.
//!
//! A strategy `(a¹, …, a^ω)` splits the unit interval into `ω` equal pieces
//! and plays `a^k` when the common signal lands in the `k`-th piece. All
//! pieces are half-open except the last, which also contains `z = 1`.

use std::fmt;

use num_integer::Integer;

use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::game::{ActionSpace, Game};
use crate::scalar::Scalar;

/// Largest per-player strategy set accepted by [`enumerate_strategies`].
pub const STRATEGY_LIMIT: u128 = 100_000;
/// Largest profile set `∏ |S_i|` accepted by profile enumeration.
pub const PROFILE_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    actions: Vec<usize>,
}

impl Strategy {
    pub fn new(actions: Vec<usize>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidStrategy("a strategy needs at least one interval".into()));
        }
        Ok(Self { actions })
    }

    /// The granularity-1 strategy that ignores the signal.
    pub fn constant(action: usize) -> Self {
        Self { actions: vec![action] }
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    /// `ω`, the number of intervals.
    pub fn granularity(&self) -> usize {
        self.actions.len()
    }

    /// Action played at signal `z ∈ [0, 1]`.
    pub fn action_at(&self, z: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::SignalOutOfRange(z));
        }
        Ok(self.action_at_unchecked(z))
    }

    #[inline]
    pub(crate) fn action_at_unchecked(&self, z: f64) -> usize {
        let w = self.actions.len();
        let k = ((z * w as f64) as usize).min(w - 1);
        self.actions[k]
    }

    /// Action on grid cell `g ∈ {0..grid}` of a refinement whose size is a
    /// multiple of `ω`. Integer-only.
    fn action_on_cell(&self, cell: u64, grid: u64) -> usize {
        let w = self.actions.len() as u64;
        self.actions[(cell * w / grid) as usize]
    }

    pub fn validate(&self, num_actions: usize, omega: usize) -> Result<()> {
        if self.granularity() > omega {
            return Err(Error::InvalidStrategy(format!(
                "granularity {} exceeds Ω = {omega}",
                self.granularity()
            )));
        }
        if let Some(&a) = self.actions.iter().find(|&&a| a >= num_actions) {
            return Err(Error::InvalidStrategy(format!("action index {a} out of range (|A_i| = {num_actions})")));
        }
        Ok(())
    }

    /// Comma-separated labels, e.g. `T,B`.
    pub fn to_text(&self, labels: &[String]) -> String {
        self.actions.iter().map(|&a| labels[a].as_str()).collect::<Vec<_>>().join(",")
    }

    pub fn parse(text: &str, labels: &[String]) -> Result<Self> {
        let actions = text
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                labels
                    .iter()
                    .position(|l| l == tok)
                    .ok_or_else(|| Error::InvalidStrategy(format!("unknown action label `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(actions)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.actions.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// One strategy per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JointStrategy(pub Vec<Strategy>);

impl JointStrategy {
    pub fn strategies(&self) -> &[Strategy] {
        &self.0
    }

    pub fn validate(&self, space: &ActionSpace, omega: usize) -> Result<()> {
        if self.0.len() != space.num_players() {
            return Err(Error::DimensionMismatch { expected: space.num_players(), got: self.0.len() });
        }
        for (i, s) in self.0.iter().enumerate() {
            s.validate(space.num_actions(i), omega)?;
        }
        Ok(())
    }

    /// Joint action played at signal `z`.
    pub fn joint_action_at(&self, space: &ActionSpace, z: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::SignalOutOfRange(z));
        }
        let actions: Vec<usize> = self.0.iter().map(|s| s.action_at_unchecked(z)).collect();
        Ok(space.encode(&actions))
    }

    /// Per-player text form, e.g. `T,B | R,L`.
    pub fn to_text(&self, labels: &[Vec<String>]) -> String {
        self.0
            .iter()
            .zip(labels)
            .map(|(s, l)| s.to_text(l))
            .collect::<Vec<_>>()
            .join(" | ")
    }

    /// Size of the common refinement grid, `lcm(ω_1, …, ω_n)`.
    pub fn grid_size(&self) -> u64 {
        self.0.iter().fold(1u64, |acc, s| acc.lcm(&(s.granularity() as u64)))
    }

    /// Number of refinement cells mapped to each joint action, and the grid size.
    pub fn cell_counts(&self, space: &ActionSpace) -> (Vec<u64>, u64) {
        let grid = self.grid_size();
        let mut counts = vec![0u64; space.joint_count()];
        let mut actions = vec![0usize; self.0.len()];
        for cell in 0..grid {
            for (slot, s) in actions.iter_mut().zip(&self.0) {
                *slot = s.action_on_cell(cell, grid);
            }
            counts[space.encode(&actions)] += 1;
        }
        (counts, grid)
    }
}

/// Exact `q(s)`: the cell `g` of the `lcm(ω_i)` grid maps to the joint action
/// every player plays at its midpoint, and each cell carries mass `1/L`.
pub fn joint_distribution<T: Scalar>(space: &ActionSpace, s: &JointStrategy) -> JointDistribution<T> {
    let (counts, grid) = s.cell_counts(space);
    JointDistribution::from_counts(&counts, grid)
}

/// `S_i = ∪_{ω=1}^{Ω} A_i^ω`, ordered by granularity then lexicographically.
///
/// The first `|A_i|` entries are the constant strategies, in action order.
pub fn enumerate_strategies(num_actions: usize, omega: usize) -> Result<Vec<Strategy>> {
    if omega == 0 {
        return Err(Error::InvalidConfig("Ω must be at least 1".into()));
    }
    let count = strategy_count(num_actions, omega);
    if count > STRATEGY_LIMIT {
        return Err(Error::TooLarge { what: "strategy set", size: count, limit: STRATEGY_LIMIT });
    }
    let mut out = Vec::with_capacity(count as usize);
    for w in 1..=omega {
        let level = ActionSpace::new(vec![num_actions; w])?;
        out.extend((0..level.joint_count()).map(|k| Strategy { actions: level.decode(k) }));
    }
    Ok(out)
}

/// `Σ_{ω=1}^{Ω} |A_i|^ω`, saturating.
pub fn strategy_count(num_actions: usize, omega: usize) -> u128 {
    let base = num_actions as u128;
    let mut term: u128 = 1;
    let mut total: u128 = 0;
    for _ in 0..omega {
        term = term.saturating_mul(base);
        total = total.saturating_add(term);
    }
    total
}

/// The profile set `S = ∏ S_i` with mixed-radix profile indices.
#[derive(Clone, Debug)]
pub struct StrategySpace {
    space: ActionSpace,
    omega: usize,
    per_player: Vec<Vec<Strategy>>,
    profile_space: ActionSpace,
}

impl StrategySpace {
    pub fn new(space: &ActionSpace, omega: usize) -> Result<Self> {
        let per_player = (0..space.num_players())
            .map(|i| enumerate_strategies(space.num_actions(i), omega))
            .collect::<Result<Vec<_>>>()?;
        let size = per_player.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
        if size > PROFILE_LIMIT {
            return Err(Error::TooLarge { what: "strategy profile set", size, limit: PROFILE_LIMIT });
        }
        let profile_space = ActionSpace::new(per_player.iter().map(Vec::len).collect())?;
        Ok(Self { space: space.clone(), omega, per_player, profile_space })
    }

    pub fn for_game<T: Scalar>(game: &Game<T>, omega: usize) -> Result<Self> {
        Self::new(game.space(), omega)
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn num_players(&self) -> usize {
        self.per_player.len()
    }

    /// `S_i`.
    pub fn strategies(&self, player: usize) -> &[Strategy] {
        &self.per_player[player]
    }

    pub fn strategy(&self, player: usize, index: usize) -> &Strategy {
        &self.per_player[player][index]
    }

    pub fn index_of(&self, player: usize, s: &Strategy) -> Option<usize> {
        self.per_player[player].iter().position(|t| t == s)
    }

    /// `|S|`.
    pub fn profile_count(&self) -> usize {
        self.profile_space.joint_count()
    }

    pub fn encode(&self, strategy_indices: &[usize]) -> usize {
        self.profile_space.encode(strategy_indices)
    }

    pub fn decode(&self, profile: usize) -> Vec<usize> {
        self.profile_space.decode(profile)
    }

    pub fn joint_strategy(&self, profile: usize) -> JointStrategy {
        JointStrategy(
            self.decode(profile)
                .into_iter()
                .enumerate()
                .map(|(i, k)| self.per_player[i][k].clone())
                .collect(),
        )
    }

    pub fn profile_of(&self, s: &JointStrategy) -> Option<usize> {
        let idx = s
            .strategies()
            .iter()
            .enumerate()
            .map(|(i, st)| self.index_of(i, st))
            .collect::<Option<Vec<_>>>()?;
        Some(self.encode(&idx))
    }

    pub fn distribution<T: Scalar>(&self, profile: usize) -> JointDistribution<T> {
        joint_distribution(&self.space, &self.joint_strategy(profile))
    }
}

/// Every profile in `S` paired with its exact `q(s)`.
pub fn realizable_distributions<T: Scalar>(
    game: &Game<T>,
    omega: usize,
) -> Result<Vec<(JointStrategy, JointDistribution<T>)>> {
    let space = StrategySpace::for_game(game, omega)?;
    Ok((0..space.profile_count())
        .map(|p| {
            let s = space.joint_strategy(p);
            let q = joint_distribution(game.space(), &s);
            (s, q)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn interval_boundaries() {
        let tb = Strategy::new(vec![0, 2]).unwrap();
        assert_eq!(tb.action_at(0.3).unwrap(), 0);
        assert_eq!(tb.action_at(0.5).unwrap(), 2);
        assert_eq!(tb.action_at(1.0).unwrap(), 2);
        assert_eq!(tb.action_at(0.0).unwrap(), 0);
        assert!(matches!(tb.action_at(1.5), Err(Error::SignalOutOfRange(_))));
        assert!(tb.action_at(-0.1).is_err());
        let three = Strategy::new(vec![0, 1, 2]).unwrap();
        assert_eq!(three.action_at(1.0 / 3.0).unwrap(), 1);
        assert_eq!(three.action_at(2.0 / 3.0).unwrap(), 2);
    }

    #[test]
    fn text_form_round_trips() {
        let game = presets::example1::<f64>();
        let s = Strategy::parse("T, B", &game.labels()[0]).unwrap();
        assert_eq!(s.actions(), &[0, 2]);
        assert_eq!(s.to_text(&game.labels()[0]), "T,B");
        assert!(Strategy::parse("T,X", &game.labels()[0]).is_err());
    }

    #[test]
    fn q_of_example_profiles() {
        let game = presets::example1::<Rational>();
        let space = game.space();
        let tb_rl = JointStrategy(vec![Strategy::new(vec![0, 2]).unwrap(), Strategy::new(vec![2, 0]).unwrap()]);
        let dist: JointDistribution<Rational> = joint_distribution(space, &tb_rl);
        let tr = game.joint_index(&["T", "R"]).unwrap();
        let bl = game.joint_index(&["B", "L"]).unwrap();
        assert_eq!(dist, JointDistribution::from_sparse(9, &[(tr, q(1, 2)), (bl, q(1, 2))]).unwrap());

        let tb_l = JointStrategy(vec![Strategy::new(vec![0, 2]).unwrap(), Strategy::constant(0)]);
        let dist: JointDistribution<Rational> = joint_distribution(space, &tb_l);
        let tl = game.joint_index(&["T", "L"]).unwrap();
        assert_eq!(dist, JointDistribution::from_sparse(9, &[(tl, q(1, 2)), (bl, q(1, 2))]).unwrap());

        // ω = 3 against ω = 2 refines to a 6-cell grid.
        let tmb_lr = JointStrategy(vec![Strategy::new(vec![0, 1, 2]).unwrap(), Strategy::new(vec![0, 2]).unwrap()]);
        assert_eq!(tmb_lr.grid_size(), 6);
        let dist: JointDistribution<Rational> = joint_distribution(space, &tmb_lr);
        let expect = [
            (tl, q(1, 3)),
            (game.joint_index(&["M", "L"]).unwrap(), q(1, 6)),
            (game.joint_index(&["M", "R"]).unwrap(), q(1, 6)),
            (game.joint_index(&["B", "R"]).unwrap(), q(1, 3)),
        ];
        assert_eq!(dist, JointDistribution::from_sparse(9, &expect).unwrap());
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_strategies(2, 1).unwrap().len(), 2);
        assert_eq!(enumerate_strategies(2, 2).unwrap().len(), 6);
        assert_eq!(enumerate_strategies(3, 2).unwrap().len(), 12);
        assert_eq!(enumerate_strategies(1, 3).unwrap().len(), 3);
        let s = enumerate_strategies(2, 2).unwrap();
        let listed: Vec<&[usize]> = s.iter().map(Strategy::actions).collect();
        assert_eq!(listed, vec![&[0][..], &[1], &[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        assert!(matches!(enumerate_strategies(10, 6), Err(Error::TooLarge { .. })));
        assert!(enumerate_strategies(2, 0).is_err());
    }

    #[test]
    fn realizable_sets() {
        let game = presets::example1::<Rational>();
        let pure = realizable_distributions(&game, 1).unwrap();
        assert_eq!(pure.len(), 9);
        assert!(pure.iter().all(|(_, q)| q.support().len() == 1));

        let two = presets::constant_game::<Rational>(&[2, 2], q(0, 1));
        assert_eq!(realizable_distributions(&two, 2).unwrap().len(), 36);

        let tr = game.joint_index(&["T", "R"]).unwrap();
        let bl = game.joint_index(&["B", "L"]).unwrap();
        let target = JointDistribution::from_sparse(9, &[(tr, q(1, 2)), (bl, q(1, 2))]).unwrap();
        assert!(realizable_distributions(&game, 2).unwrap().iter().any(|(_, q)| *q == target));
    }

    #[test]
    fn strategy_space_indexing() {
        let game = presets::example1::<f64>();
        let space = StrategySpace::for_game(&game, 2).unwrap();
        assert_eq!(space.profile_count(), 144);
        for p in [0, 17, 143] {
            assert_eq!(space.profile_of(&space.joint_strategy(p)), Some(p));
        }
        assert_eq!(space.strategy(1, 2).actions(), &[2]);
    }
}
