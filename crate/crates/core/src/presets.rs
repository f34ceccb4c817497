//! Built-in games.

use crate::game::Game;
use crate::scalar::Scalar;

pub fn labels(players: &[&[&str]]) -> Vec<Vec<String>> {
    players.iter().map(|p| p.iter().map(|s| s.to_string()).collect()).collect()
}

/// The 3×3 two-player game with efficient CCE ½(T,R) + ½(B,L).
///
/// ```text
///        L           M        R
/// T   0, 0        0, 1     0.85, 0.75
/// M   1, 0        0, 0     0, 0
/// B   0.75, 0.85  0, 0     0, 0
/// ```
#[rustfmt::skip]
pub fn example1<T: Scalar>() -> Game<T> {
    let r = |n, d| T::from_ratio(n, d);
    let row = vec![
        r(0, 1), r(0, 1), r(17, 20),
        r(1, 1), r(0, 1), r(0, 1),
        r(3, 4), r(0, 1), r(0, 1),
    ];
    let col = vec![
        r(0, 1), r(1, 1), r(3, 4),
        r(0, 1), r(0, 1), r(0, 1),
        r(17, 20), r(0, 1), r(0, 1),
    ];
    Game::new("example1", labels(&[&["T", "M", "B"], &["L", "M", "R"]]), vec![row, col])
        .expect("example1 is well formed")
}

/// Shapley-style cyclic game with raw payoffs in `{-ε_s, 0, 1}`.
///
/// Payoffs fall outside `[0, 1]`; pass the result through
/// [`normalize_payoffs`](crate::game::normalize_payoffs) before learning.
#[rustfmt::skip]
pub fn shapley_variant<T: Scalar>(eps_s: T) -> Game<T> {
    let one = T::one();
    let zero = T::zero();
    let neg = -eps_s;
    let row = vec![
        one.clone(), neg.clone(), zero.clone(),
        zero.clone(), one.clone(), neg.clone(),
        neg.clone(), zero.clone(), one.clone(),
    ];
    let col = vec![
        neg.clone(), one.clone(), zero.clone(),
        zero.clone(), neg.clone(), one.clone(),
        one, zero, neg,
    ];
    Game::new("shapley", labels(&[&["T", "M", "B"], &["L", "M", "R"]]), vec![row, col])
        .expect("shapley variant is well formed")
}

/// Every payoff equal to `value`; actions are labelled `a0, a1, ...`.
pub fn constant_game<T: Scalar>(radices: &[usize], value: T) -> Game<T> {
    let labels = radices
        .iter()
        .map(|&r| (0..r).map(|k| format!("a{k}")).collect())
        .collect();
    Game::from_fn("constant", labels, |_, _| value.clone()).expect("constant game is well formed")
}

/// `(row, col)` cells of the Shapley variant with nonzero payoffs.
pub fn shapley_six_cells() -> [(usize, usize); 6] {
    [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)]
}
