//! The three-phase learning dynamics.
//!
//! Each period has an evaluation, a trial and an acceptance phase of `p̄`
//! time steps each. Every time step draws one common signal `z ~ U[0, 1)`
//! that all agents feed into their committed signal-based strategy. Moods
//! and baselines change only at period boundaries.
//!
//! Strategies are referred to by their index into `S_i` as enumerated by
//! [`StrategySpace`]; index `a < |A_i|` is the constant strategy `a`.

use std::ops::{Add, RangeInclusive, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibria::learning_target;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::signals::{Strategy, StrategySpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mood {
    Content,
    Discontent,
}

impl Mood {
    pub fn letter(self) -> char {
        match self {
            Mood::Content => 'C',
            Mood::Discontent => 'D',
        }
    }
}

/// `x_i = [s_i^b, m_i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentState {
    pub baseline: usize,
    pub mood: Mood,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PopulationState {
    pub agents: Vec<AgentState>,
}

impl PopulationState {
    pub fn all_content(baselines: &[usize]) -> Self {
        Self { agents: baselines.iter().map(|&b| AgentState { baseline: b, mood: Mood::Content }).collect() }
    }

    pub fn all_discontent(baselines: &[usize]) -> Self {
        Self { agents: baselines.iter().map(|&b| AgentState { baseline: b, mood: Mood::Discontent }).collect() }
    }

    pub fn baselines(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.baseline).collect()
    }

    pub fn moods(&self) -> Vec<Mood> {
        self.agents.iter().map(|a| a.mood).collect()
    }

    pub fn is_all_content(&self) -> bool {
        self.agents.iter().all(|a| a.mood == Mood::Content)
    }

    pub fn is_all_discontent(&self) -> bool {
        self.agents.iter().all(|a| a.mood == Mood::Discontent)
    }
}

/// Parameters of the dynamics.
///
/// `epsilon` is the experimentation rate, `delta` the acceptance margin,
/// `c > n` the experimentation exponent, `omega` the largest granularity and
/// `phase_len` the number of time steps per phase. `epsilon = 0` gives the
/// unperturbed process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    pub omega: usize,
    pub phase_len: u64,
    pub periods: u64,
    pub seed: u64,
}

/// Phase length used by the experiment presets.
pub const DEFAULT_PHASE_LEN: u64 = 50;
/// Acceptance margin used by the experiment presets.
pub const DEFAULT_DELTA: f64 = 0.14;
/// Granularity used by the experiment presets.
pub const DEFAULT_OMEGA: usize = 2;

impl LearnerConfig {
    /// Preset defaults for `n` players: `δ = 0.14`, `c = n + 0.25`, `Ω = 2`,
    /// `p̄ = 50`.
    pub fn preset(num_players: usize, epsilon: f64, periods: u64, seed: u64) -> Self {
        Self {
            epsilon,
            delta: DEFAULT_DELTA,
            c: default_c(num_players),
            omega: DEFAULT_OMEGA,
            phase_len: DEFAULT_PHASE_LEN,
            periods,
            seed,
        }
    }

    pub fn validate(&self, num_players: usize) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !unit(self.epsilon) {
            return Err(Error::InvalidConfig(format!("epsilon = {} must lie in [0, 1)", self.epsilon)));
        }
        if !unit(self.delta) {
            return Err(Error::InvalidConfig(format!("delta = {} must lie in [0, 1)", self.delta)));
        }
        if !(self.c.is_finite() && self.c > num_players as f64) {
            return Err(Error::InvalidConfig(format!("c = {} must exceed n = {num_players}", self.c)));
        }
        if self.omega == 0 {
            return Err(Error::InvalidConfig("omega must be at least 1".into()));
        }
        if self.phase_len == 0 {
            return Err(Error::InvalidConfig("phase_len must be at least 1".into()));
        }
        Ok(())
    }

    /// Time steps in one period.
    pub fn period_len(&self) -> u64 {
        3 * self.phase_len
    }
}

pub fn default_c(num_players: usize) -> f64 {
    num_players as f64 + 0.25
}

/// `⌈1 / x^e⌉`, saturating at `u64::MAX`.
pub fn phase_len_for(x: f64, exponent: f64) -> u64 {
    let v = (1.0 / x.powf(exponent)).ceil();
    if v.is_finite() && v < u64::MAX as f64 {
        (v as u64).max(1)
    } else {
        u64::MAX
    }
}

/// `p̄ = ⌈1/δ^{nc+1}⌉`.
pub fn theory_phase_len(delta: f64, num_players: usize, c: f64) -> u64 {
    phase_len_for(delta, num_players as f64 * c + 1.0)
}

/// Periods needed to cover `steps` time steps.
pub fn periods_for_steps(steps: u64, phase_len: u64) -> u64 {
    steps.div_ceil(3 * phase_len)
}

/// Independent random streams: stream `base` carries the common signal and
/// stream `base + 1 + i` agent `i`'s private draws.
#[derive(Clone, Debug)]
pub struct RngBundle {
    pub signal: ChaCha8Rng,
    pub agents: Vec<ChaCha8Rng>,
}

impl RngBundle {
    pub fn new(seed: u64, num_agents: usize) -> Self {
        Self::with_stream_base(seed, num_agents, 0)
    }

    pub fn with_stream_base(seed: u64, num_agents: usize, base: u64) -> Self {
        let stream = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            rng
        };
        Self { signal: stream(base), agents: (0..num_agents as u64).map(|i| stream(base + 1 + i)).collect() }
    }
}

/// Probability of an outcome as a function of `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Likelihood {
    Certain,
    /// `ε^r`.
    Rare(f64),
    /// `1 - ε^r`.
    Typical(f64),
}

impl Likelihood {
    /// With `ε = 0` every perturbation term `ε^r` vanishes, including `r = 0`.
    pub fn eval(self, epsilon: f64) -> f64 {
        let rare = |r: f64| if epsilon == 0.0 { 0.0 } else { epsilon.powf(r) };
        match self {
            Likelihood::Certain => 1.0,
            Likelihood::Rare(r) => rare(r),
            Likelihood::Typical(r) => 1.0 - rare(r),
        }
    }

    /// Whether the outcome has positive probability in the unperturbed process.
    pub fn survives_at_zero(self) -> bool {
        self.eval(0.0) > 0.0
    }
}

/// Mood after a period; the new baseline is always `s^a`.
///
/// `experimented` means a content agent's trial differed from its baseline.
pub fn mood_transition<T>(mood: Mood, experimented: bool, u_b: &T, u_a: &T, delta: &T, c: f64) -> Vec<(Mood, Likelihood)>
where
    T: Clone + PartialOrd + Sub<Output = T> + num_traits::ToPrimitive,
{
    match (mood, experimented) {
        (Mood::Content, false) => {
            if *u_a >= u_b.clone() - delta.clone() {
                vec![(Mood::Content, Likelihood::Typical(2.0 * c)), (Mood::Discontent, Likelihood::Rare(2.0 * c))]
            } else {
                vec![(Mood::Discontent, Likelihood::Certain)]
            }
        }
        (Mood::Content, true) => vec![(Mood::Content, Likelihood::Certain)],
        (Mood::Discontent, _) => {
            let r = 1.0 - u_a.to_f64().expect("utility converts to f64");
            vec![(Mood::Content, Likelihood::Rare(r)), (Mood::Discontent, Likelihood::Typical(r))]
        }
    }
}

/// Content agents keep a trial only on a strict improvement beyond `δ`;
/// discontent agents always keep it.
pub fn acceptance_select<T>(mood: Mood, s_b: usize, s_t: usize, u_b: &T, u_t: &T, delta: &T) -> usize
where
    T: Clone + PartialOrd + Add<Output = T>,
{
    match mood {
        Mood::Content if *u_t > u_b.clone() + delta.clone() => s_t,
        Mood::Content => s_b,
        Mood::Discontent => s_t,
    }
}

/// Trial strategy index. A content agent experiments with probability `ε^c`,
/// choosing a constant strategy uniformly; a discontent agent draws
/// uniformly from all of `S_i`.
pub fn trial_select<R: Rng>(
    state: AgentState,
    num_actions: usize,
    num_strategies: usize,
    epsilon: f64,
    c: f64,
    rng: &mut R,
) -> usize {
    match state.mood {
        Mood::Content => {
            if rng.random::<f64>() < Likelihood::Rare(c).eval(epsilon) {
                rng.random_range(0..num_actions)
            } else {
                state.baseline
            }
        }
        Mood::Discontent => rng.random_range(0..num_strategies),
    }
}

/// Samples the next agent state with exactly one uniform draw.
#[allow(clippy::too_many_arguments)]
pub fn state_update<R: Rng>(
    mood: Mood,
    s_b: usize,
    s_t: usize,
    s_a: usize,
    u_b: f64,
    u_a: f64,
    config: &LearnerConfig,
    rng: &mut R,
) -> AgentState {
    let outcomes = mood_transition(mood, s_t != s_b, &u_b, &u_a, &config.delta, config.c);
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = outcomes.last().expect("at least one outcome").0;
    for (m, l) in &outcomes {
        acc += l.eval(config.epsilon);
        if draw < acc {
            chosen = *m;
            break;
        }
    }
    AgentState { baseline: s_a, mood: chosen }
}

/// Average per-agent payoff over `phase_len` steps, all agents reading the
/// same signal draw each step.
pub fn phase_payoffs<R: Rng>(game: &Game<f64>, strategies: &[&Strategy], phase_len: u64, signal: &mut R) -> Vec<f64> {
    let space = game.space();
    let n = game.num_players();
    let mut counts = vec![0u64; space.joint_count()];
    let mut actions = vec![0; n];
    for _ in 0..phase_len {
        let z: f64 = signal.random();
        for (slot, s) in actions.iter_mut().zip(strategies) {
            *slot = s.action_at_unchecked(z);
        }
        counts[space.encode(&actions)] += 1;
    }
    // Weighting by empirical frequency keeps single-cell phases exact.
    let p = phase_len as f64;
    (0..n)
        .map(|i| {
            counts
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(a, &k)| (k as f64 / p) * game.payoff(i, a))
                .sum()
        })
        .collect()
}

/// Everything that happened in one period.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodRecord {
    pub period: u64,
    /// First time step of the period (1-based).
    pub k: u64,
    pub baseline: Vec<usize>,
    pub trial: Vec<usize>,
    pub accepted: Vec<usize>,
    pub u_b: Vec<f64>,
    pub u_t: Vec<f64>,
    pub u_a: Vec<f64>,
    pub mood_before: Vec<Mood>,
    pub mood_after: Vec<Mood>,
    /// Whether the committed profile of each phase is a learning target.
    pub at_target: [bool; 3],
}

/// A simulated run.
#[derive(Clone, Debug)]
pub struct Trace {
    pub records: Vec<PeriodRecord>,
    pub final_state: PopulationState,
    pub phase_len: u64,
}

impl Trace {
    pub fn total_steps(&self) -> u64 {
        self.records.len() as u64 * 3 * self.phase_len
    }

    /// Fraction of the 1-based time steps in `window` whose committed profile
    /// is a target. Steps beyond the run are ignored.
    pub fn fraction_at_target(&self, window: RangeInclusive<u64>) -> f64 {
        let (lo, hi) = (*window.start(), (*window.end()).min(self.total_steps()));
        if lo > hi {
            return f64::NAN;
        }
        let mut hits = 0u64;
        for r in &self.records {
            for (j, &hit) in r.at_target.iter().enumerate() {
                if !hit {
                    continue;
                }
                let start = r.k + j as u64 * self.phase_len;
                let end = start + self.phase_len - 1;
                let (a, b) = (start.max(lo), end.min(hi));
                if a <= b {
                    hits += b - a + 1;
                }
            }
        }
        hits as f64 / (hi - lo + 1) as f64
    }

    /// Fraction over the second half of the first `steps` time steps.
    pub fn fraction_last_half(&self, steps: u64) -> f64 {
        self.fraction_at_target(steps / 2 + 1..=steps)
    }
}

/// A game, its strategy sets and the target profiles, ready to simulate.
#[derive(Clone, Debug)]
pub struct Simulator {
    game: Game<f64>,
    space: StrategySpace,
    config: LearnerConfig,
    target: Vec<bool>,
}

impl Simulator {
    /// Targets are the welfare-maximizing realizable CCE profiles, or the
    /// welfare-maximizing profiles when no realizable CCE exists.
    pub fn new(game: &Game<f64>, config: LearnerConfig) -> Result<Self> {
        game.require_unit_payoffs()?;
        config.validate(game.num_players())?;
        let space = StrategySpace::for_game(game, config.omega)?;
        let target = learning_target(game, config.omega)?.membership(space.profile_count());
        Ok(Self { game: game.clone(), space, config, target })
    }

    pub fn with_config(&self, config: LearnerConfig) -> Result<Self> {
        config.validate(self.game.num_players())?;
        if config.omega != self.config.omega {
            return Self::new(&self.game, config);
        }
        Ok(Self { config, ..self.clone() })
    }

    pub fn game(&self) -> &Game<f64> {
        &self.game
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn strategy_space(&self) -> &StrategySpace {
        &self.space
    }

    pub fn is_target(&self, baselines: &[usize]) -> bool {
        self.target[self.space.encode(baselines)]
    }

    pub fn target_profiles(&self) -> Vec<usize> {
        (0..self.target.len()).filter(|&p| self.target[p]).collect()
    }

    pub fn rng(&self) -> RngBundle {
        RngBundle::new(self.config.seed, self.game.num_players())
    }

    /// All agents discontent, baselines drawn from each agent's own stream.
    pub fn initial_state(&self, rng: &mut RngBundle) -> PopulationState {
        let baselines: Vec<usize> = rng
            .agents
            .iter_mut()
            .enumerate()
            .map(|(i, r)| r.random_range(0..self.space.strategies(i).len()))
            .collect();
        PopulationState::all_discontent(&baselines)
    }

    fn play(&self, indices: &[usize], rng: &mut RngBundle) -> Vec<f64> {
        let strategies: Vec<&Strategy> = indices.iter().enumerate().map(|(i, &k)| self.space.strategy(i, k)).collect();
        phase_payoffs(&self.game, &strategies, self.config.phase_len, &mut rng.signal)
    }

    pub fn run_period(&self, state: &PopulationState, period: u64, rng: &mut RngBundle) -> (PopulationState, PeriodRecord) {
        let cfg = &self.config;
        let n = state.agents.len();
        let baseline = state.baselines();
        let u_b = self.play(&baseline, rng);

        let trial: Vec<usize> = (0..n)
            .map(|i| {
                trial_select(
                    state.agents[i],
                    self.game.space().num_actions(i),
                    self.space.strategies(i).len(),
                    cfg.epsilon,
                    cfg.c,
                    &mut rng.agents[i],
                )
            })
            .collect();
        let u_t = self.play(&trial, rng);

        let accepted: Vec<usize> = (0..n)
            .map(|i| acceptance_select(state.agents[i].mood, baseline[i], trial[i], &u_b[i], &u_t[i], &cfg.delta))
            .collect();
        let u_a = self.play(&accepted, rng);

        let agents: Vec<AgentState> = (0..n)
            .map(|i| {
                state_update(
                    state.agents[i].mood,
                    baseline[i],
                    trial[i],
                    accepted[i],
                    u_b[i],
                    u_a[i],
                    cfg,
                    &mut rng.agents[i],
                )
            })
            .collect();
        let next = PopulationState { agents };
        let record = PeriodRecord {
            period,
            k: period * cfg.period_len() + 1,
            at_target: [self.is_target(&baseline), self.is_target(&trial), self.is_target(&accepted)],
            baseline,
            trial,
            accepted,
            u_b,
            u_t,
            u_a,
            mood_before: state.moods(),
            mood_after: next.moods(),
        };
        (next, record)
    }

    /// Runs `config.periods` periods from `state`.
    pub fn run_from(&self, state: PopulationState, rng: &mut RngBundle) -> Trace {
        let mut state = state;
        let mut records = Vec::with_capacity(self.config.periods as usize);
        for period in 0..self.config.periods {
            let (next, record) = self.run_period(&state, period, rng);
            records.push(record);
            state = next;
        }
        Trace { records, final_state: state, phase_len: self.config.phase_len }
    }

    /// Seeded run from the default initial state.
    pub fn run(&self) -> Trace {
        let mut rng = self.rng();
        let start = self.initial_state(&mut rng);
        self.run_from(start, &mut rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn cfg(epsilon: f64) -> LearnerConfig {
        LearnerConfig { epsilon, delta: 0.14, c: 2.25, omega: 2, phase_len: 5, periods: 4, seed: 9 }
    }

    #[test]
    fn acceptance_rule_edges() {
        assert_eq!(acceptance_select(Mood::Content, 1, 2, &0.5, &0.64, &0.14), 1);
        assert_eq!(acceptance_select(Mood::Content, 1, 2, &0.0, &1.0, &0.14), 2);
        assert_eq!(acceptance_select(Mood::Discontent, 1, 2, &1.0, &0.0, &0.14), 2);
    }

    #[test]
    fn mood_rules() {
        let t = mood_transition(Mood::Content, false, &0.5, &0.5, &0.0, 2.25);
        assert_eq!(t[0], (Mood::Content, Likelihood::Typical(4.5)));
        assert_eq!(mood_transition(Mood::Content, false, &0.5, &0.3, &0.1, 2.25), vec![(Mood::Discontent, Likelihood::Certain)]);
        assert_eq!(mood_transition(Mood::Content, true, &0.5, &0.0, &0.1, 2.25), vec![(Mood::Content, Likelihood::Certain)]);
        let d = mood_transition(Mood::Discontent, false, &0.0, &1.0, &0.1, 2.25);
        assert_eq!(d[0].1.eval(0.3), 1.0);
        assert_eq!(d[0].1.eval(0.0), 0.0);
        assert!(!d[0].1.survives_at_zero());
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0.01).validate(2).is_ok());
        assert!(cfg(1.0).validate(2).is_err());
        assert!(LearnerConfig { c: 2.0, ..cfg(0.1) }.validate(2).is_err());
        assert!(LearnerConfig { phase_len: 0, ..cfg(0.1) }.validate(2).is_err());
        assert_eq!(theory_phase_len(0.5, 1, 1.0), 4);
        assert_eq!(periods_for_steps(100_000, 50), 667);
    }

    #[test]
    fn constant_baselines_give_exact_payoffs() {
        let game = presets::example1::<f64>();
        let s = [Strategy::constant(2), Strategy::constant(0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = phase_payoffs(&game, &[&s[0], &s[1]], 7, &mut rng);
        assert_eq!(u, vec![0.75, 0.85]);
    }

    #[test]
    fn unperturbed_content_state_is_fixed() {
        let game = presets::example1::<f64>();
        let sim = Simulator::new(&game, cfg(0.0)).unwrap();
        let mut rng = sim.rng();
        let start = PopulationState::all_content(&[1, 0]);
        let trace = sim.run_from(start.clone(), &mut rng);
        assert_eq!(trace.final_state, start);
        for r in &trace.records {
            assert_eq!(r.trial, r.baseline);
            assert_eq!(r.accepted, r.baseline);
        }
    }

    #[test]
    fn trace_window_accounting() {
        let game = presets::example1::<f64>();
        let sim = Simulator::new(&game, LearnerConfig { periods: 1, ..cfg(0.0) }).unwrap();
        let target = sim.strategy_space().decode(sim.target_profiles()[0]);
        let mut rng = sim.rng();
        let trace = sim.run_from(PopulationState::all_content(&target), &mut rng);
        assert_eq!(trace.fraction_at_target(1..=15), 1.0);
        assert_eq!(trace.fraction_at_target(1..=100), 1.0);
        assert!(trace.fraction_at_target(20..=30).is_nan());
    }
}
