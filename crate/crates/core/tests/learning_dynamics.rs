use cce_learning::learning::{
    acceptance_select, mood_transition, theory_phase_len, phase_payoffs, state_update, trial_select, AgentState,
    LearnerConfig, Likelihood, Mood, PopulationState, RngBundle, Simulator,
};
use cce_learning::stability::random_state;
use cce_learning::{presets, Game, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn example() -> Game<f64> {
    presets::example1()
}

fn config(epsilon: f64) -> LearnerConfig {
    LearnerConfig { epsilon, ..LearnerConfig::preset(2, epsilon, 40, 11) }
}

fn chi_square(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&k| (k as f64 - expected).powi(2) / expected).sum()
}

fn critical(dof: usize) -> f64 {
    ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99)
}

#[test]
fn content_agent_experiments_with_each_constant_at_rate_eps_c_over_actions() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let state = AgentState { baseline: 7, mood: Mood::Content };
    let draws = 3_000_000u64;
    let mut counts = [0u64; 12];
    for _ in 0..draws {
        counts[trial_select(state, 3, 12, 0.1, 3.0, &mut rng)] += 1;
    }
    let p = 0.1f64.powi(3) / 3.0;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for &k in &counts[..3] {
        assert!((k as f64 - draws as f64 * p).abs() < 5.0 * sd, "constant count {k}");
    }
    assert_eq!(counts[..3].iter().sum::<u64>() + counts[7], draws);
}

#[test]
fn content_agent_keeps_baseline_as_eps_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let state = AgentState { baseline: 4, mood: Mood::Content };
    assert!((0..100_000).all(|_| trial_select(state, 2, 6, 1e-6, 2.25, &mut rng) == 4));
    assert!((0..1_000).all(|_| trial_select(state, 2, 6, 0.0, 2.25, &mut rng) == 4));
}

#[test]
fn discontent_agent_draws_uniformly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let state = AgentState { baseline: 0, mood: Mood::Discontent };
    let mut counts = [0u64; 6];
    for _ in 0..100_000 {
        counts[trial_select(state, 2, 6, 0.2, 2.25, &mut rng)] += 1;
    }
    assert!(chi_square(&counts) < critical(5), "{counts:?}");
}

#[test]
fn acceptance_examples() {
    assert_eq!(acceptance_select(Mood::Content, 0, 1, &0.5, &0.64, &0.14), 0);
    assert_eq!(acceptance_select(Mood::Content, 0, 1, &0.5, &0.65, &0.14), 1);
    assert_eq!(acceptance_select(Mood::Discontent, 0, 1, &0.9, &0.0, &0.14), 1);
}

#[test]
fn mood_transition_table() {
    assert_eq!(
        mood_transition(Mood::Content, false, &0.6, &0.5, &0.14, 2.25),
        vec![(Mood::Content, Likelihood::Typical(4.5)), (Mood::Discontent, Likelihood::Rare(4.5))]
    );
    assert_eq!(mood_transition(Mood::Content, false, &0.6, &0.4, &0.14, 2.25), vec![(Mood::Discontent, Likelihood::Certain)]);
    assert_eq!(mood_transition(Mood::Content, true, &0.6, &0.0, &0.14, 2.25), vec![(Mood::Content, Likelihood::Certain)]);
    let d = mood_transition(Mood::Discontent, true, &0.0, &0.8, &0.14, 2.25);
    assert!(matches!(d[0], (Mood::Content, Likelihood::Rare(r)) if (r - 0.2).abs() < 1e-12));
}

#[test]
fn state_update_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let zero = LearnerConfig { epsilon: 0.0, ..config(0.0) };
    for _ in 0..1_000 {
        let s = state_update(Mood::Content, 2, 2, 2, 0.5, 0.5, &zero, &mut rng);
        assert_eq!(s, AgentState { baseline: 2, mood: Mood::Content });
        let s = state_update(Mood::Content, 2, 2, 2, 0.5, 0.2, &zero, &mut rng);
        assert_eq!(s.mood, Mood::Discontent);
        let s = state_update(Mood::Content, 2, 5, 5, 0.2, 0.9, &zero, &mut rng);
        assert_eq!(s, AgentState { baseline: 5, mood: Mood::Content });
    }
    let cfg = config(0.3);
    assert!((0..1_000).all(|_| state_update(Mood::Discontent, 1, 3, 3, 0.0, 1.0, &cfg, &mut rng).mood == Mood::Content));

    let cfg = config(0.01);
    let draws = 100_000;
    let content = (0..draws)
        .filter(|_| state_update(Mood::Discontent, 1, 3, 3, 0.0, 0.8, &cfg, &mut rng).mood == Mood::Content)
        .count();
    let freq = content as f64 / draws as f64;
    assert!((freq - 0.01f64.powf(0.2)).abs() < 0.01, "{freq}");
    assert!((0.01f64.powf(0.2) - 0.398).abs() < 0.001);
}

#[test]
fn phase_payoffs_examples() {
    let game = example();
    let mut signal = ChaCha8Rng::seed_from_u64(6);
    let (t, r) = (Strategy::constant(0), Strategy::constant(2));
    assert_eq!(phase_payoffs(&game, &[&t, &r], 50, &mut signal), vec![0.85, 0.75]);

    let (row, col) = (Strategy::new(vec![0, 2]).unwrap(), Strategy::new(vec![2, 0]).unwrap());
    let u = phase_payoffs(&game, &[&row, &col], 10_000, &mut signal);
    assert!(u.iter().all(|x| (x - 0.8).abs() < 0.02), "{u:?}");

    let u = phase_payoffs(&game, &[&row, &col], 1, &mut signal);
    assert!(u == vec![0.85, 0.75] || u == vec![0.75, 0.85], "{u:?}");
}

#[test]
fn common_signal_keeps_the_correlated_profile_on_its_support() {
    // (T,B) against (R,L) only reaches (T,R) and (B,L) when both read one signal.
    let sim = Simulator::new(&example(), config(0.0)).unwrap();
    let space = sim.strategy_space();
    let row = space.index_of(0, &Strategy::new(vec![0, 2]).unwrap()).unwrap();
    let col = space.index_of(1, &Strategy::new(vec![2, 0]).unwrap()).unwrap();
    let mut rng = sim.rng();
    let state = PopulationState::all_content(&[row, col]);
    for period in 0..200 {
        let (_, rec) = sim.run_period(&state, period, &mut rng);
        for u in [&rec.u_b, &rec.u_t, &rec.u_a] {
            assert!((u[0] + u[1] - 1.6).abs() < 1e-9, "{u:?}");
        }
    }
}

#[test]
fn shared_signal_reproduces_and_forked_signal_changes_results() {
    let sim = Simulator::new(&example(), config(0.05)).unwrap();
    let (a, b) = (sim.run(), sim.run());
    assert_eq!(a.records, b.records);

    let mut rng = sim.rng();
    let start = sim.initial_state(&mut rng);
    let mut forked = rng.clone();
    forked.signal = ChaCha8Rng::seed_from_u64(999);
    let shared = sim.run_from(start.clone(), &mut rng.clone());
    assert_eq!(shared.records, sim.run_from(start.clone(), &mut rng).records);
    assert_ne!(shared.records, sim.run_from(start, &mut forked).records);
}

#[test]
fn state_changes_only_at_period_boundaries() {
    let sim = Simulator::new(&example(), config(0.1)).unwrap();
    let trace = sim.run();
    let len = sim.config().period_len();
    for pair in trace.records.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        assert_eq!(next.k, prev.k + len);
        assert_eq!(prev.accepted, next.baseline);
        assert_eq!(prev.mood_after, next.mood_before);
    }
    for rec in &trace.records {
        for i in 0..2 {
            if rec.mood_before[i] == Mood::Content && rec.trial[i] == rec.baseline[i] {
                assert_eq!(rec.accepted[i], rec.baseline[i]);
            }
        }
    }
    assert_eq!(trace.final_state.baselines(), trace.records.last().unwrap().accepted);
}

#[test]
fn all_content_states_are_fixed_without_noise() {
    // Phase averages must sit well inside δ of their expectation.
    let sim = Simulator::new(&example(), LearnerConfig { phase_len: 10_000, ..config(0.0) }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bundle = RngBundle::new(7, 2);
    for _ in 0..30 {
        let mut state = random_state(sim.strategy_space(), &mut rng);
        for a in &mut state.agents {
            a.mood = Mood::Content;
        }
        for period in 0..5 {
            let (next, rec) = sim.run_period(&state, period, &mut bundle);
            assert_eq!(next, state);
            assert_eq!(rec.trial, rec.baseline);
            assert_eq!(rec.accepted, rec.baseline);
        }
    }
}

#[test]
fn all_discontent_stays_discontent_and_redraws_uniformly() {
    let sim = Simulator::new(&example(), config(0.0)).unwrap();
    let mut rng = sim.rng();
    let mut state = PopulationState::all_discontent(&[0, 0]);
    let mut counts = vec![0u64; sim.strategy_space().strategies(0).len()];
    for period in 0..12_000 {
        let (next, _) = sim.run_period(&state, period, &mut rng);
        assert!(next.is_all_discontent());
        counts[next.agents[0].baseline] += 1;
        state = next;
    }
    assert!(chi_square(&counts) < critical(counts.len() - 1), "{counts:?}");
}

#[test]
fn mixed_states_fall_to_all_discontent_without_noise() {
    let sim = Simulator::new(&example(), config(0.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bundle = RngBundle::new(8, 2);
    let mut reached = 0;
    let trials = 200;
    for _ in 0..trials {
        let mut state = random_state(sim.strategy_space(), &mut rng);
        state.agents[0].mood = Mood::Content;
        state.agents[1].mood = Mood::Discontent;
        for period in 0..500 {
            if state.is_all_discontent() {
                break;
            }
            assert!(!state.is_all_content(), "a content agent appeared without noise");
            state = sim.run_period(&state, period, &mut bundle).0;
        }
        reached += usize::from(state.is_all_discontent());
    }
    assert_eq!(reached, trials);
}

#[test]
fn one_period_from_target_stays_on_target() {
    let cfg = LearnerConfig { periods: 1, ..config(0.0) };
    let sim = Simulator::new(&example(), cfg).unwrap();
    let target = sim.strategy_space().decode(sim.target_profiles()[0]);
    let trace = sim.run_from(PopulationState::all_content(&target), &mut sim.rng());
    assert_eq!(trace.fraction_at_target(1..=trace.total_steps()), 1.0);
}

#[test]
fn config_validation() {
    let game = example();
    let ok = config(0.1);
    assert!(Simulator::new(&game, ok.clone()).is_ok());
    assert!(Simulator::new(&game, LearnerConfig { c: 2.0, ..ok.clone() }).is_err());
    assert!(Simulator::new(&game, LearnerConfig { phase_len: 0, ..ok.clone() }).is_err());
    assert!(Simulator::new(&game, LearnerConfig { epsilon: 1.0, ..ok.clone() }).is_err());
    assert!(Simulator::new(&game, LearnerConfig { omega: 0, ..ok.clone() }).is_err());
    let raw = presets::shapley_variant(0.1);
    assert!(Simulator::new(&raw, ok).is_err());
    assert_eq!(theory_phase_len(0.5, 2, 2.25), 46);
}
