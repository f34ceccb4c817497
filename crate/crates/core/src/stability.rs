//! Stochastic stability of the learning dynamics.
//!
//! The recurrent classes of the unperturbed process are the all-content
//! singletons `C⁰` (one per profile `s ∈ S`) and the all-discontent class
//! `D⁰`. `C★ ⊆ C⁰` holds the profiles whose `q(s)` is a CCE. Potentials are
//! computed on a class-level resistance graph, both by minimum arborescence
//! and by closed form, and the minimizers are the stochastically stable
//! classes.
//!
//! Resistances:
//!
//! * `x → D⁰` costs `c` for `x ∈ C⁰∖C★` and `2c` for `x ∈ C★`,
//! * `D⁰ → x` costs `Σ_i (1 - U_i(s))`,
//! * `x → y` between content classes costs the route through `D⁰`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;

use crate::equilibria::{cce_check, default_tol, TargetKind};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::graph::{closed_components, is_strongly_connected, min_in_arborescence, Edge};
use crate::learning::{
    acceptance_select, mood_transition, LearnerConfig, Mood, PopulationState, RngBundle, Simulator,
};
use crate::scalar::{Rational, Scalar};
use crate::signals::StrategySpace;

/// Largest number of classes accepted for the complete resistance graph.
pub const CLASS_LIMIT: usize = 5_000;
/// Largest state space explored by [`unperturbed_recurrent_classes`].
pub const STATE_LIMIT: usize = 10_000;

/// A recurrent class of the unperturbed process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    /// All agents content with baseline profile `s` (profile index).
    Content(usize),
    AllDiscontent,
}

#[derive(Clone, Debug)]
pub struct RecurrentClasses<T> {
    space: StrategySpace,
    /// `U_i(q(s))` per profile.
    utilities: Vec<Vec<T>>,
    in_c_star: Vec<bool>,
}

pub fn enumerate_recurrent_classes<T: Scalar>(game: &Game<T>, omega: usize) -> Result<RecurrentClasses<T>> {
    game.require_unit_payoffs()?;
    let space = StrategySpace::for_game(game, omega)?;
    if space.profile_count() >= CLASS_LIMIT {
        return Err(Error::TooLarge {
            what: "recurrent class set",
            size: space.profile_count() as u128 + 1,
            limit: CLASS_LIMIT as u128,
        });
    }
    let tol = default_tol::<T>();
    let mut utilities = Vec::with_capacity(space.profile_count());
    let mut in_c_star = Vec::with_capacity(space.profile_count());
    for p in 0..space.profile_count() {
        let q = space.distribution::<T>(p);
        in_c_star.push(cce_check(game, &q, &tol)?.is_cce);
        utilities.push(game.expected_utility(&q)?);
    }
    Ok(RecurrentClasses { space, utilities, in_c_star })
}

impl<T: Scalar> RecurrentClasses<T> {
    pub fn strategy_space(&self) -> &StrategySpace {
        &self.space
    }

    /// `|C⁰|`.
    pub fn content_count(&self) -> usize {
        self.utilities.len()
    }

    /// `|C★|`.
    pub fn c_star_count(&self) -> usize {
        self.in_c_star.iter().filter(|&&b| b).count()
    }

    pub fn c_star(&self) -> Vec<usize> {
        (0..self.in_c_star.len()).filter(|&p| self.in_c_star[p]).collect()
    }

    pub fn is_c_star(&self, profile: usize) -> bool {
        self.in_c_star[profile]
    }

    /// Total number of classes, `|C⁰| + 1`.
    pub fn len(&self) -> usize {
        self.content_count() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Graph node of a class; `D⁰` is the last node.
    pub fn node(&self, class: Class) -> usize {
        match class {
            Class::Content(p) => p,
            Class::AllDiscontent => self.content_count(),
        }
    }

    pub fn class(&self, node: usize) -> Class {
        if node == self.content_count() {
            Class::AllDiscontent
        } else {
            Class::Content(node)
        }
    }

    pub fn utilities(&self, profile: usize) -> &[T] {
        &self.utilities[profile]
    }

    pub fn welfare(&self, profile: usize) -> T {
        crate::scalar::sum(&self.utilities[profile])
    }

    /// `r(D⁰ → x) = Σ_i (1 - U_i(s))`.
    pub fn entry_resistance(&self, profile: usize) -> T {
        self.utilities[profile].iter().fold(T::zero(), |acc, u| acc + T::one() - u.clone())
    }

    /// `r(x → D⁰)`.
    pub fn exit_resistance(&self, profile: usize, c: &T) -> T {
        if self.in_c_star[profile] {
            c.clone() + c.clone()
        } else {
            c.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResistanceGraph<T> {
    pub num_nodes: usize,
    pub edges: Vec<Edge<T>>,
}

impl<T: Scalar> ResistanceGraph<T> {
    pub fn weight(&self, from: usize, to: usize) -> Option<&T> {
        self.edges.iter().find(|e| e.from == from && e.to == to).map(|e| &e.weight)
    }

    pub fn out_edges(&self, from: usize) -> impl Iterator<Item = &Edge<T>> {
        self.edges.iter().filter(move |e| e.from == from)
    }
}

pub fn build_resistance_graph<T: Scalar>(classes: &RecurrentClasses<T>, c: &T) -> ResistanceGraph<T> {
    let m = classes.content_count();
    let d0 = m;
    let entry: Vec<T> = (0..m).map(|p| classes.entry_resistance(p)).collect();
    let exit: Vec<T> = (0..m).map(|p| classes.exit_resistance(p, c)).collect();
    let mut edges = Vec::with_capacity((m + 1) * m);
    for x in 0..m {
        edges.push(Edge { from: x, to: d0, weight: exit[x].clone() });
        edges.push(Edge { from: d0, to: x, weight: entry[x].clone() });
        for y in (0..m).filter(|&y| y != x) {
            edges.push(Edge { from: x, to: y, weight: exit[x].clone() + entry[y].clone() });
        }
    }
    ResistanceGraph { num_nodes: m + 1, edges }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialMethod {
    Arborescence,
    ClosedForm,
}

#[derive(Clone, Debug)]
pub struct PotentialReport<T> {
    /// `γ` per graph node.
    pub potentials: Vec<T>,
    pub argmin: Vec<usize>,
    pub method: PotentialMethod,
}

fn argmin_of<T: Scalar>(values: &[T]) -> Vec<usize> {
    let tol = if T::is_exact() { T::zero() } else { default_tol::<T>() };
    let best = values.iter().fold(None::<&T>, |b, v| match b {
        Some(b) if b <= v => Some(b),
        _ => Some(v),
    });
    let best = best.expect("at least one class").clone();
    (0..values.len()).filter(|&i| values[i].clone() - best.clone() <= tol).collect()
}

/// Exact weights rescaled to a common denominator, when every arborescence
/// total fits in `i128`.
fn integer_weights<T: Scalar>(graph: &ResistanceGraph<T>) -> Option<(Vec<Edge<i128>>, BigInt)> {
    if !T::is_exact() {
        return None;
    }
    let exact: Vec<Rational> = graph.edges.iter().map(|e| e.weight.to_rational()).collect::<Option<_>>()?;
    let denom = exact.iter().fold(BigInt::from(1), |l, r| l.lcm(r.denom()));
    // Contraction subtracts weights, so leave headroom beyond the node count.
    let bound = i128::MAX / (4 * graph.num_nodes.max(1) as i128);
    let edges = graph
        .edges
        .iter()
        .zip(&exact)
        .map(|(e, r)| {
            let w = (r.numer() * (&denom / r.denom())).to_i128().filter(|w| w.abs() <= bound)?;
            Some(Edge { from: e.from, to: e.to, weight: w })
        })
        .collect::<Option<Vec<_>>>()?;
    Some((edges, denom))
}

/// `γ(Y)` = weight of the minimum arborescence rooted at `Y`.
pub fn stochastic_potentials_arborescence<T: Scalar>(graph: &ResistanceGraph<T>) -> Result<PotentialReport<T>> {
    let n = graph.num_nodes;
    if n > CLASS_LIMIT {
        return Err(Error::TooLarge { what: "resistance graph", size: n as u128, limit: CLASS_LIMIT as u128 });
    }
    if let Some(e) = graph.edges.iter().find(|e| e.weight < T::zero() || !e.weight.is_finite()) {
        return Err(Error::NumericalFailure(format!("edge {} → {} has weight {}", e.from, e.to, e.weight)));
    }
    let pairs: Vec<(usize, usize)> = graph.edges.iter().map(|e| (e.from, e.to)).collect();
    if !is_strongly_connected(n, &pairs) {
        return Err(Error::Disconnected);
    }
    let potentials: Vec<T> = match integer_weights(graph) {
        Some((scaled, denom)) => (0..n)
            .into_par_iter()
            .map(|root| {
                let w = min_in_arborescence(n, &scaled, root).expect("strongly connected graphs span");
                T::from_rational(&Rational::new(BigInt::from(w), denom.clone()))
            })
            .collect(),
        None => (0..n)
            .into_par_iter()
            .map(|root| min_in_arborescence(n, &graph.edges, root).expect("strongly connected graphs span"))
            .collect(),
    };
    let argmin = argmin_of(&potentials);
    Ok(PotentialReport { potentials, argmin, method: PotentialMethod::Arborescence })
}

/// Potentials from the tree constructions that route every class through `D⁰`.
pub fn stochastic_potentials_closed_form<T: Scalar>(classes: &RecurrentClasses<T>, c: &T) -> PotentialReport<T> {
    let m = classes.content_count();
    let star = classes.c_star_count();
    let plain = m - star;
    let k = |n: usize| T::from_usize(n).expect("class counts fit the scalar type");
    let two_c = c.clone() + c.clone();
    // Every C⁰ class pays its exit cost into D⁰.
    let base = k(plain) * c.clone() + k(star) * two_c.clone();
    let mut potentials: Vec<T> = (0..m)
        .map(|p| base.clone() - classes.exit_resistance(p, c) + classes.entry_resistance(p))
        .collect();
    potentials.push(base);
    let argmin = argmin_of(&potentials);
    PotentialReport { potentials, argmin, method: PotentialMethod::ClosedForm }
}

#[derive(Clone, Debug)]
pub struct StabilityPrediction<T> {
    pub stable: Vec<Class>,
    pub potentials: PotentialReport<T>,
    pub branch: TargetKind,
    /// Classes expected to be stable: the welfare-maximizing `C★` classes,
    /// or the welfare-maximizing `C⁰` classes when `C★` is empty.
    pub expected: Vec<Class>,
    pub matches_prediction: bool,
}

impl<T: Scalar> StabilityPrediction<T> {
    pub fn stable_profiles(&self) -> Vec<usize> {
        self.stable
            .iter()
            .filter_map(|c| match c {
                Class::Content(p) => Some(*p),
                Class::AllDiscontent => None,
            })
            .collect()
    }
}

pub fn stochastically_stable_states<T: Scalar>(classes: &RecurrentClasses<T>, c: &T) -> Result<StabilityPrediction<T>> {
    let graph = build_resistance_graph(classes, c);
    let potentials = stochastic_potentials_arborescence(&graph)?;
    let stable: Vec<Class> = potentials.argmin.iter().map(|&v| classes.class(v)).collect();

    let (branch, pool) = if classes.c_star_count() > 0 {
        (TargetKind::EfficientCce, classes.c_star())
    } else {
        (TargetKind::EfficientProfile, (0..classes.content_count()).collect())
    };
    let welfare: Vec<T> = pool.iter().map(|&p| -classes.welfare(p)).collect();
    let expected: Vec<Class> = argmin_of(&welfare).into_iter().map(|i| Class::Content(pool[i])).collect();
    let matches_prediction = stable == expected;
    Ok(StabilityPrediction { stable, potentials, branch, expected, matches_prediction })
}

/// The population state space `X = ∏ (S_i × {C, D})`.
///
/// Agent `i`'s digit is `2k + m` for strategy index `k` and mood `m`
/// (`0 = C`, `1 = D`), player 0 most significant.
#[derive(Clone, Debug)]
pub struct StateSpace {
    space: crate::game::ActionSpace,
}

impl StateSpace {
    pub fn new(strategies: &StrategySpace) -> Result<Self> {
        let radices: Vec<usize> = (0..strategies.num_players()).map(|i| 2 * strategies.strategies(i).len()).collect();
        let size = radices.iter().fold(1u128, |a, &r| a.saturating_mul(r as u128));
        if size > STATE_LIMIT as u128 {
            return Err(Error::TooLarge { what: "population state space", size, limit: STATE_LIMIT as u128 });
        }
        Ok(Self { space: crate::game::ActionSpace::new(radices)? })
    }

    pub fn len(&self) -> usize {
        self.space.joint_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, state: &PopulationState) -> usize {
        let digits: Vec<usize> = state
            .agents
            .iter()
            .map(|a| 2 * a.baseline + usize::from(a.mood == Mood::Discontent))
            .collect();
        self.space.encode(&digits)
    }

    pub fn decode(&self, index: usize) -> PopulationState {
        PopulationState {
            agents: self
                .space
                .decode(index)
                .into_iter()
                .map(|d| crate::learning::AgentState {
                    baseline: d / 2,
                    mood: if d % 2 == 0 { Mood::Content } else { Mood::Discontent },
                })
                .collect(),
        }
    }
}

/// Closed communicating classes of the `ε = 0` process.
#[derive(Clone, Debug)]
pub struct UnperturbedAnalysis {
    pub states: StateSpace,
    pub support: Vec<Vec<usize>>,
    pub closed: Vec<Vec<usize>>,
}

impl UnperturbedAnalysis {
    /// Whether the closed classes are exactly the all-content singletons
    /// plus one class holding every all-discontent state.
    pub fn matches_expected_classes(&self) -> bool {
        let mut singletons = Vec::new();
        let mut discontent = Vec::new();
        for idx in 0..self.states.len() {
            let s = self.states.decode(idx);
            if s.is_all_content() {
                singletons.push(vec![idx]);
            } else if s.is_all_discontent() {
                discontent.push(idx);
            }
        }
        let mut expected = singletons;
        expected.push(discontent);
        expected.sort();
        expected == self.closed
    }
}

/// Transition support of the unperturbed process with payoffs replaced by
/// their expectations `U_i(q(s))`.
///
/// Content agents trial their baseline; discontent agents may trial any
/// strategy; moods follow [`mood_transition`] at `ε = 0` with margin `delta`.
pub fn unperturbed_recurrent_classes<T: Scalar>(game: &Game<T>, omega: usize, delta: &T) -> Result<UnperturbedAnalysis> {
    game.require_unit_payoffs()?;
    let strategies = StrategySpace::for_game(game, omega)?;
    let states = StateSpace::new(&strategies)?;
    let n = strategies.num_players();
    let utilities: Vec<Vec<T>> = (0..strategies.profile_count())
        .map(|p| game.expected_utility(&strategies.distribution(p)))
        .collect::<Result<_>>()?;
    // c only scales exponents of terms that vanish at ε = 0.
    let c = n as f64 + 1.0;

    let mut support = vec![Vec::new(); states.len()];
    for (idx, out) in support.iter_mut().enumerate() {
        let state = states.decode(idx);
        let s_b = state.baselines();
        let u_b = &utilities[strategies.encode(&s_b)];
        let trial_sets: Vec<Vec<usize>> = state
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| match a.mood {
                Mood::Content => vec![a.baseline],
                Mood::Discontent => (0..strategies.strategies(i).len()).collect(),
            })
            .collect();
        let trial_space = crate::game::ActionSpace::new(trial_sets.iter().map(Vec::len).collect())?;
        for t in 0..trial_space.joint_count() {
            let s_t: Vec<usize> = trial_space.decode(t).iter().enumerate().map(|(i, &k)| trial_sets[i][k]).collect();
            let u_t = &utilities[strategies.encode(&s_t)];
            let s_a: Vec<usize> = (0..n)
                .map(|i| acceptance_select(state.agents[i].mood, s_b[i], s_t[i], &u_b[i], &u_t[i], delta))
                .collect();
            let u_a = &utilities[strategies.encode(&s_a)];
            let moods: Vec<Vec<Mood>> = (0..n)
                .map(|i| {
                    mood_transition(state.agents[i].mood, s_t[i] != s_b[i], &u_b[i], &u_a[i], delta, c)
                        .into_iter()
                        .filter(|(_, l)| l.survives_at_zero())
                        .map(|(m, _)| m)
                        .collect()
                })
                .collect();
            let mood_space = crate::game::ActionSpace::new(moods.iter().map(Vec::len).collect())?;
            for m in 0..mood_space.joint_count() {
                let choice = mood_space.decode(m);
                let next = PopulationState {
                    agents: (0..n)
                        .map(|i| crate::learning::AgentState { baseline: s_a[i], mood: moods[i][choice[i]] })
                        .collect(),
                };
                out.push(states.encode(&next));
            }
        }
        out.sort_unstable();
        out.dedup();
    }
    let closed = closed_components(&support);
    Ok(UnperturbedAnalysis { states, support, closed })
}

/// Where a sampled transition must land to count as a hit.
#[derive(Clone, Debug, PartialEq)]
pub enum TransitionTarget {
    State(PopulationState),
    /// Any state other than the source.
    AnyOther,
}

/// Sample-size policy for [`empirical_resistance`].
///
/// Each `ε` starts with `min_samples` one-period transitions and doubles
/// until `target_hits` transitions have been observed or `max_samples` is
/// reached.
#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceSampling {
    pub min_samples: u64,
    pub target_hits: u64,
    pub max_samples: u64,
    pub seed: u64,
}

impl Default for ResistanceSampling {
    fn default() -> Self {
        Self { min_samples: 10_000, target_hits: 50, max_samples: 100_000_000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResistancePoint {
    pub epsilon: f64,
    pub samples: u64,
    pub hits: u64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceFit {
    /// Least-squares slope of `ln P` against `ln ε`.
    pub slope: f64,
    /// Standard error of the slope from binomial sampling noise.
    pub std_error: f64,
    pub points: Vec<ResistancePoint>,
}

const SAMPLES_PER_BATCH: u64 = 2_000;

fn count_hits(
    sim: &Simulator,
    source: &PopulationState,
    target: &TransitionTarget,
    seed: u64,
    batches: std::ops::Range<u64>,
) -> u64 {
    let n = source.agents.len() as u64;
    batches
        .into_par_iter()
        .map(|b| {
            let mut rng = RngBundle::with_stream_base(seed, n as usize, b * (n + 1));
            let mut hits = 0;
            for _ in 0..SAMPLES_PER_BATCH {
                let (next, _) = sim.run_period(source, 0, &mut rng);
                let hit = match target {
                    TransitionTarget::State(t) => next == *t,
                    TransitionTarget::AnyOther => next != *source,
                };
                hits += u64::from(hit);
            }
            hits
        })
        .sum()
}

/// Monte-Carlo estimate of the resistance of a one-period transition.
///
/// For each `ε` the probability of moving from `source` to `target` within
/// one period is estimated, then `ln P` is regressed on `ln ε`.
pub fn empirical_resistance(
    game: &Game<f64>,
    config: &LearnerConfig,
    source: &PopulationState,
    target: &TransitionTarget,
    epsilons: &[f64],
    sampling: &ResistanceSampling,
) -> Result<ResistanceFit> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidConfig("at least two ε values are needed for a slope".into()));
    }
    if let Some(e) = epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidConfig(format!("ε = {e} must lie in (0, 1)")));
    }
    let base = Simulator::new(game, config.clone())?;
    let mut points = Vec::with_capacity(epsilons.len());
    for (k, &epsilon) in epsilons.iter().enumerate() {
        let sim = base.with_config(LearnerConfig { epsilon, ..config.clone() })?;
        let seed = sampling.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let (mut batches, mut hits) = (0u64, 0u64);
        let mut want = sampling.min_samples.div_ceil(SAMPLES_PER_BATCH).max(1);
        loop {
            hits += count_hits(&sim, source, target, seed, batches..want);
            batches = want;
            let samples = batches * SAMPLES_PER_BATCH;
            if hits >= sampling.target_hits.max(1) || samples >= sampling.max_samples {
                break;
            }
            want = (batches * 2).min(sampling.max_samples.div_ceil(SAMPLES_PER_BATCH));
        }
        let samples = batches * SAMPLES_PER_BATCH;
        if hits == 0 {
            return Err(Error::UnderSampled { epsilon, samples });
        }
        points.push(ResistancePoint { epsilon, samples, hits, probability: hits as f64 / samples as f64 });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.epsilon.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.probability.ln()).collect();
    let m = xs.len() as f64;
    let (xbar, ybar) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("ε values must be distinct".into()));
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum::<f64>() / sxx;
    // Var(ln p̂) ≈ (1 - p) / hits for a binomial count.
    let var: f64 = xs
        .iter()
        .zip(&points)
        .map(|(x, p)| ((x - xbar) / sxx).powi(2) * (1.0 - p.probability) / p.hits as f64)
        .sum();
    Ok(ResistanceFit { slope, std_error: var.sqrt(), points })
}

/// The all-discontent state with every baseline at strategy 0.
pub fn all_discontent_state(num_players: usize) -> PopulationState {
    PopulationState::all_discontent(&vec![0; num_players])
}

/// A uniformly random state, for reachability experiments.
pub fn random_state<R: Rng>(space: &StrategySpace, rng: &mut R) -> PopulationState {
    PopulationState {
        agents: (0..space.num_players())
            .map(|i| crate::learning::AgentState {
                baseline: rng.random_range(0..space.strategies(i).len()),
                mood: if rng.random::<bool>() { Mood::Content } else { Mood::Discontent },
            })
            .collect(),
    }
}
