//! Finite strategic-form games with a dense payoff tensor.
//!
//! Joint actions are addressed by a mixed-radix index with player 0 as the
//! most significant digit, so for two players the index is
//! `row * |A_col| + col`.

use std::collections::HashSet;

use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest player count accepted by the exhaustive interdependence check.
pub const INTERDEPENDENCE_MAX_PLAYERS: usize = 6;
/// Largest joint action space accepted by the exhaustive interdependence check.
pub const INTERDEPENDENCE_MAX_JOINT: usize = 100_000;

/// Shape of the joint action space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSpace {
    radices: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl ActionSpace {
    pub fn new(radices: Vec<usize>) -> Result<Self> {
        if radices.is_empty() || radices.contains(&0) {
            return Err(Error::InvalidGame("every player needs at least one action".into()));
        }
        let mut strides = vec![1usize; radices.len()];
        for i in (0..radices.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1]
                .checked_mul(radices[i + 1])
                .ok_or_else(|| Error::InvalidGame("joint action space overflows".into()))?;
        }
        let total = strides[0]
            .checked_mul(radices[0])
            .ok_or_else(|| Error::InvalidGame("joint action space overflows".into()))?;
        Ok(Self { radices, strides, total })
    }

    pub fn num_players(&self) -> usize {
        self.radices.len()
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.radices[player]
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// `|A| = ∏ |A_i|`.
    pub fn joint_count(&self) -> usize {
        self.total
    }

    pub fn encode(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.radices.len());
        actions.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        self.radices
            .iter()
            .zip(&self.strides)
            .map(|(r, s)| (index / s) % r)
            .collect()
    }

    pub fn action_of(&self, index: usize, player: usize) -> usize {
        (index / self.strides[player]) % self.radices[player]
    }

    /// Joint action obtained from `index` by switching `player` to `action`.
    pub fn with_action(&self, index: usize, player: usize, action: usize) -> usize {
        let current = self.action_of(index, player);
        index - current * self.strides[player] + action * self.strides[player]
    }
}

/// A finite game `(N, {A_i}, {U_i})`.
///
/// Payoffs are only required to be finite; the learning dynamics and the
/// resistance analysis additionally require them to lie in `[0, 1]`
/// (see [`Game::has_unit_payoffs`] and [`normalize_payoffs`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Game<T> {
    name: String,
    labels: Vec<Vec<String>>,
    space: ActionSpace,
    /// Player-major: `payoffs[i * |A| + a]`.
    payoffs: Vec<T>,
}

impl<T: Scalar> Game<T> {
    /// `payoffs[i][a]` is player `i`'s payoff at joint action index `a`.
    pub fn new(name: impl Into<String>, labels: Vec<Vec<String>>, payoffs: Vec<Vec<T>>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidGame(format!("need at least 2 players, got {}", labels.len())));
        }
        for (i, actions) in labels.iter().enumerate() {
            let mut seen = HashSet::new();
            for label in actions {
                if !seen.insert(label.as_str()) {
                    return Err(Error::InvalidGame(format!("player {i} has duplicate action label `{label}`")));
                }
            }
        }
        let space = ActionSpace::new(labels.iter().map(Vec::len).collect())?;
        if payoffs.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), got: payoffs.len() });
        }
        let total = space.joint_count();
        let mut flat = Vec::with_capacity(total * labels.len());
        for (player, row) in payoffs.into_iter().enumerate() {
            if row.len() != total {
                return Err(Error::DimensionMismatch { expected: total, got: row.len() });
            }
            for (joint, value) in row.into_iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NonFinitePayoff { player, joint });
                }
                flat.push(value);
            }
        }
        Ok(Self { name: name.into(), labels, space, payoffs: flat })
    }

    /// Builds a game from a payoff function over decoded joint actions.
    pub fn from_fn(
        name: impl Into<String>,
        labels: Vec<Vec<String>>,
        mut payoff: impl FnMut(usize, &[usize]) -> T,
    ) -> Result<Self> {
        let space = ActionSpace::new(labels.iter().map(Vec::len).collect())?;
        let payoffs = (0..labels.len())
            .map(|i| (0..space.joint_count()).map(|a| payoff(i, &space.decode(a))).collect())
            .collect();
        Self::new(name, labels, payoffs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn num_players(&self) -> usize {
        self.space.num_players()
    }

    pub fn joint_count(&self) -> usize {
        self.space.joint_count()
    }

    pub fn payoff(&self, player: usize, joint: usize) -> &T {
        &self.payoffs[player * self.joint_count() + joint]
    }

    /// Player `i`'s payoff vector over all joint actions.
    pub fn payoffs_of(&self, player: usize) -> &[T] {
        let total = self.joint_count();
        &self.payoffs[player * total..(player + 1) * total]
    }

    pub fn action_index(&self, player: usize, label: &str) -> Option<usize> {
        self.labels.get(player)?.iter().position(|l| l == label)
    }

    /// Joint action index from labels, e.g. `["T", "R"]`.
    pub fn joint_index(&self, labels: &[&str]) -> Option<usize> {
        if labels.len() != self.num_players() {
            return None;
        }
        let actions = labels
            .iter()
            .enumerate()
            .map(|(i, l)| self.action_index(i, l))
            .collect::<Option<Vec<_>>>()?;
        Some(self.space.encode(&actions))
    }

    pub fn has_unit_payoffs(&self) -> bool {
        self.payoffs.iter().all(|u| *u >= T::zero() && *u <= T::one())
    }

    pub(crate) fn require_unit_payoffs(&self) -> Result<()> {
        if self.has_unit_payoffs() {
            Ok(())
        } else {
            Err(Error::InvalidGame(format!(
                "game `{}` has payoffs outside [0, 1]; normalize it first",
                self.name
            )))
        }
    }

    /// `Σ_i U_i(a)` for a single joint action.
    pub fn cell_welfare(&self, joint: usize) -> T {
        (0..self.num_players()).fold(T::zero(), |acc, i| acc + self.payoff(i, joint).clone())
    }

    /// `(Σ_a U_i(a) q^a)_i`.
    pub fn expected_utility(&self, q: &JointDistribution<T>) -> Result<Vec<T>> {
        self.check_dimension(q)?;
        Ok((0..self.num_players())
            .map(|i| {
                self.payoffs_of(i)
                    .iter()
                    .zip(q.masses())
                    .filter(|(_, m)| !m.is_zero())
                    .fold(T::zero(), |acc, (u, m)| acc + u.clone() * m.clone())
            })
            .collect())
    }

    /// Sum of expected utilities.
    pub fn welfare(&self, q: &JointDistribution<T>) -> Result<T> {
        Ok(self.expected_utility(q)?.into_iter().fold(T::zero(), |acc, u| acc + u))
    }

    pub(crate) fn check_dimension(&self, q: &JointDistribution<T>) -> Result<()> {
        if q.len() != self.joint_count() {
            return Err(Error::DimensionMismatch { expected: self.joint_count(), got: q.len() });
        }
        Ok(())
    }

    /// Exhaustive interdependence check.
    ///
    /// The game is interdependent when for every joint action `a` and every
    /// proper nonempty coalition `J` some outsider's payoff changes under some
    /// joint deviation of `J`.
    pub fn is_interdependent(&self) -> Result<Interdependence> {
        let n = self.num_players();
        if n > INTERDEPENDENCE_MAX_PLAYERS {
            return Err(Error::TooLarge {
                what: "player set",
                size: n as u128,
                limit: INTERDEPENDENCE_MAX_PLAYERS as u128,
            });
        }
        if self.joint_count() > INTERDEPENDENCE_MAX_JOINT {
            return Err(Error::TooLarge {
                what: "joint action space",
                size: self.joint_count() as u128,
                limit: INTERDEPENDENCE_MAX_JOINT as u128,
            });
        }
        let full = (1usize << n) - 1;
        for joint in 0..self.joint_count() {
            for mask in 1..full {
                let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let outsiders: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
                let affected = self.coalition_deviations(joint, &members).any(|dev| {
                    outsiders.iter().any(|&i| self.payoff(i, dev) != self.payoff(i, joint))
                });
                if !affected {
                    return Ok(Interdependence::Separable {
                        joint_action: self.space.decode(joint),
                        coalition: members,
                    });
                }
            }
        }
        Ok(Interdependence::Interdependent)
    }

    /// All joint actions that agree with `joint` outside `members`.
    fn coalition_deviations<'a>(&'a self, joint: usize, members: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        let count: usize = members.iter().map(|&i| self.space.num_actions(i)).product();
        (0..count).map(move |mut k| {
            let mut dev = joint;
            for &i in members.iter().rev() {
                let r = self.space.num_actions(i);
                dev = self.space.with_action(dev, i, k % r);
                k /= r;
            }
            dev
        })
    }

    /// Converts the payoff type, e.g. exact rationals to `f64` for simulation.
    pub fn map_payoffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Game<U> {
        Game {
            name: self.name.clone(),
            labels: self.labels.clone(),
            space: self.space.clone(),
            payoffs: self.payoffs.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Game<f64> {
        self.map_payoffs(Scalar::to_f64_lossy)
    }

    /// Player-major nested payoff rows, the layout used by the game file.
    pub fn payoff_rows(&self) -> Vec<Vec<T>> {
        (0..self.num_players()).map(|i| self.payoffs_of(i).to_vec()).collect()
    }
}

/// Result of [`Game::is_interdependent`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Interdependence {
    Interdependent,
    /// No outsider's payoff reacts to any deviation of `coalition` at `joint_action`.
    Separable { joint_action: Vec<usize>, coalition: Vec<usize> },
}

impl Interdependence {
    pub fn holds(&self) -> bool {
        matches!(self, Interdependence::Interdependent)
    }
}

/// Maps each player's payoffs affinely onto `[0, 1]`:
/// `u ↦ (u - min_i) / (max_i - min_i)`. A player with constant payoffs gets
/// `1/2` everywhere.
pub fn normalize_payoffs<T: Scalar>(raw: &Game<T>) -> Game<T> {
    let total = raw.joint_count();
    let mut payoffs = Vec::with_capacity(raw.payoffs.len());
    for i in 0..raw.num_players() {
        let row = raw.payoffs_of(i);
        let lo = row.iter().fold(row[0].clone(), |m, u| if *u < m { u.clone() } else { m });
        let hi = row.iter().fold(row[0].clone(), |m, u| if *u > m { u.clone() } else { m });
        let span = hi - lo.clone();
        if span.is_zero() {
            payoffs.extend(std::iter::repeat_n(T::half(), total));
        } else {
            payoffs.extend(row.iter().map(|u| (u.clone() - lo.clone()) / span.clone()));
        }
    }
    Game { name: raw.name.clone(), labels: raw.labels.clone(), space: raw.space.clone(), payoffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::scalar::Rational;

    fn q(x: i64, y: i64) -> Rational {
        Rational::from_ratio(x, y)
    }

    #[test]
    fn mixed_radix_puts_player_zero_first() {
        let space = ActionSpace::new(vec![3, 2]).unwrap();
        assert_eq!(space.encode(&[2, 1]), 5);
        assert_eq!(space.decode(3), vec![1, 1]);
        assert_eq!(space.with_action(3, 0, 2), 5);
        assert_eq!(space.joint_count(), 6);
    }

    #[test]
    fn rejects_bad_shapes() {
        let labels = vec![vec!["a".to_string()], vec!["x".to_string(), "y".to_string()]];
        let err = Game::new("g", labels.clone(), vec![vec![0.0; 2]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = Game::new("g", labels, vec![vec![0.0; 2], vec![0.0; 3]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 3 }));
        let dup = vec![vec!["a".to_string(), "a".to_string()], vec!["x".to_string()]];
        assert!(Game::new("g", dup, vec![vec![0.0; 2]; 2]).is_err());
        let single = vec![vec!["a".to_string()]];
        assert!(Game::new("g", single, vec![vec![0.0]]).is_err());
        let labels = vec![vec!["a".to_string()], vec!["x".to_string()]];
        assert!(matches!(
            Game::new("g", labels, vec![vec![f64::NAN], vec![0.0]]),
            Err(Error::NonFinitePayoff { player: 0, joint: 0 })
        ));
    }

    #[test]
    fn example1_utilities() {
        let game = presets::example1::<Rational>();
        let tr = game.joint_index(&["T", "R"]).unwrap();
        let bl = game.joint_index(&["B", "L"]).unwrap();
        let q_star = JointDistribution::from_sparse(game.joint_count(), &[(tr, q(1, 2)), (bl, q(1, 2))]).unwrap();
        assert_eq!(game.expected_utility(&q_star).unwrap(), vec![q(4, 5), q(4, 5)]);
        assert_eq!(game.welfare(&q_star).unwrap(), q(8, 5));

        let ml = game.joint_index(&["M", "L"]).unwrap();
        let point = JointDistribution::point_mass(game.joint_count(), ml);
        assert_eq!(game.expected_utility(&point).unwrap(), vec![q(1, 1), q(0, 1)]);
        assert_eq!(game.welfare(&JointDistribution::point_mass(9, tr)).unwrap(), q(8, 5));
    }

    #[test]
    fn zero_game_utilities() {
        let game = presets::constant_game::<Rational>(&[2, 3], q(0, 1));
        let uniform = JointDistribution::uniform(game.joint_count());
        assert_eq!(game.expected_utility(&uniform).unwrap(), vec![q(0, 1), q(0, 1)]);
        assert_eq!(game.welfare(&uniform).unwrap(), q(0, 1));
    }

    #[test]
    fn expected_utility_rejects_dimension_mismatch() {
        let game = presets::example1::<f64>();
        let wrong = JointDistribution::<f64>::uniform(4);
        assert!(matches!(
            game.expected_utility(&wrong),
            Err(Error::DimensionMismatch { expected: 9, got: 4 })
        ));
    }

    #[test]
    fn interdependence_of_named_games() {
        assert!(presets::example1::<Rational>().is_interdependent().unwrap().holds());
        let shapley = normalize_payoffs(&presets::shapley_variant::<Rational>(q(1, 10)));
        assert!(shapley.is_interdependent().unwrap().holds());
    }

    #[test]
    fn decoupled_game_is_not_interdependent() {
        let labels = presets::labels(&[&["a", "b"], &["x", "y"]]);
        let game = Game::from_fn("decoupled", labels, |i, a| q(1 + a[i] as i64, 4)).unwrap();
        match game.is_interdependent().unwrap() {
            Interdependence::Separable { coalition, .. } => assert_eq!(coalition.len(), 1),
            Interdependence::Interdependent => panic!("decoupled game reported interdependent"),
        }
    }

    #[test]
    fn interdependence_guard() {
        let game = presets::constant_game::<f64>(&[1; 7], 0.5);
        assert!(matches!(game.is_interdependent(), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn normalization_cases() {
        let shapley = presets::shapley_variant::<Rational>(q(1, 10));
        let norm = normalize_payoffs(&shapley);
        let tl = shapley.joint_index(&["T", "L"]).unwrap();
        let tm = shapley.joint_index(&["T", "M"]).unwrap();
        let tr = shapley.joint_index(&["T", "R"]).unwrap();
        assert_eq!(*norm.payoff(0, tl), q(1, 1));
        assert_eq!(*norm.payoff(0, tm), q(0, 1));
        assert_eq!(*norm.payoff(0, tr), q(1, 11));
        assert!(norm.has_unit_payoffs());
        assert!(!shapley.has_unit_payoffs());

        // example1 has min 0 and max 1 for both players, so it is a fixed point.
        let already = presets::example1::<Rational>();
        assert_eq!(normalize_payoffs(&already), already);

        let constant = presets::constant_game::<Rational>(&[2, 2], q(7, 3));
        assert!(normalize_payoffs(&constant).payoff_rows().iter().flatten().all(|u| *u == q(1, 2)));
    }
}
