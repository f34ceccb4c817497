use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cce_learning::equilibria::{efficient_cce, learning_target};
use cce_learning::experiment::{self, format_table, resolve_game, run_sweep, ExperimentSpec, SweepOutcome};
use cce_learning::learning::PopulationState;
use cce_learning::scalar::{Rational, Scalar};
use cce_learning::stability::{
    all_discontent_state, empirical_resistance, enumerate_recurrent_classes, stochastic_potentials_closed_form,
    stochastically_stable_states, Class, ResistanceSampling, TransitionTarget,
};
use cce_learning::ExactGame;

#[derive(Parser)]
#[command(name = "cce", version, about = "Efficient coarse correlated equilibria and signal-based learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the efficient-CCE linear program exactly.
    SolveCce {
        /// Game file or preset name.
        game: String,
        /// Also search signal-based profiles up to this granularity.
        #[arg(long)]
        omega: Option<usize>,
        /// Report the efficient realizable CCE (uses --omega, default 2).
        #[arg(long)]
        realizable: bool,
        #[arg(long)]
        json: bool,
    },
    /// Simulate the learning dynamics for one ε and several seeds.
    RunSim(RunSimArgs),
    /// Sweep over ε values and seeds.
    Sweep(SweepArgs),
    /// Recurrent classes, stochastic potentials and the stable set.
    AnalyzeChain {
        game: String,
        #[arg(long, default_value_t = 2)]
        omega: usize,
        /// Experimentation exponent as a decimal or `p/q`; defaults to n + 1/4.
        #[arg(long)]
        c: Option<String>,
        /// Estimate r(D⁰ → x) by simulation for a stable class x.
        #[arg(long)]
        verify_resistance: bool,
        #[arg(long)]
        json: bool,
    },
    /// Rerun a canned experiment.
    Reproduce {
        #[arg(value_parser = ["example1", "shapley"])]
        which: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LearnerArgs {
    #[arg(long, default_value_t = 0.14)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    omega: usize,
    #[arg(long)]
    phase_len: Option<u64>,
    /// Use ⌈1/δ^{nc+1}⌉ time steps per phase.
    #[arg(long, conflicts_with = "phase_len")]
    theory_phase_len: bool,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, conflicts_with = "steps")]
    periods: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunSimArgs {
    game: String,
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    learner: LearnerArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment spec; only `--out` applies on top of it.
    #[arg(long, conflicts_with_all = ["game", "epsilons"])]
    spec: Option<PathBuf>,
    #[arg(required_unless_present = "spec")]
    game: Option<String>,
    #[arg(long, value_delimiter = ',', required_unless_present = "spec")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 0.14)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    omega: usize,
    #[arg(long)]
    phase_len: Option<u64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_spec(game: String, epsilons: Vec<f64>, a: &LearnerArgs) -> ExperimentSpec {
    ExperimentSpec {
        delta: a.delta,
        c: a.c,
        omega: a.omega,
        phase_len: a.phase_len,
        theory_phase_len: a.theory_phase_len,
        steps: a.steps,
        periods: a.periods,
        output_dir: a.out.clone(),
        ..ExperimentSpec::new(game, epsilons, a.seeds.clone())
    }
}

fn execute(spec: &ExperimentSpec) -> Result<SweepOutcome> {
    let loaded = resolve_game(&spec.game).with_context(|| format!("loading game `{}`", spec.game))?;
    let outcome = run_sweep(&loaded.game.to_f64(), spec)?;
    if let Some(dir) = &spec.output_dir {
        outcome.write(dir, spec, &loaded).with_context(|| format!("writing to {}", dir.display()))?;
    }
    Ok(outcome)
}

fn labelled(game: &ExactGame, joint: usize) -> String {
    let actions = game.space().decode(joint);
    let parts: Vec<&str> = actions.iter().enumerate().map(|(i, &a)| game.labels()[i][a].as_str()).collect();
    format!("({})", parts.join(","))
}

fn load(reference: &str) -> Result<ExactGame> {
    Ok(resolve_game(reference).with_context(|| format!("loading game `{reference}`"))?.game)
}

fn solve_cce(game: &str, omega: Option<usize>, realizable: bool, as_json: bool) -> Result<()> {
    let game = load(game)?;
    let sol = efficient_cce(&game)?;
    let support: Vec<(String, String)> =
        sol.q.support().into_iter().map(|a| (labelled(&game, a), sol.q.mass(a).to_string())).collect();
    let mut report = json!({
        "game": game.name(),
        "value": sol.value.to_string(),
        "value_f64": sol.value.to_f64_lossy(),
        "degenerate": sol.degenerate,
        "support": support.iter().map(|(a, m)| json!({"joint": a, "mass": m})).collect::<Vec<_>>(),
    });
    let realizable_omega = omega.or(realizable.then_some(2));
    if let Some(k) = realizable_omega {
        let target = learning_target(&game, k)?;
        let strategies: Vec<String> = target.optimum.strategies.iter().map(|s| s.to_text(game.labels())).collect();
        report["realizable"] = json!({
            "omega": k,
            "kind": format!("{:?}", target.kind),
            "value": target.optimum.value.to_string(),
            "profiles": strategies,
        });
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("efficient CCE welfare: {} ({:.10})", sol.value, sol.value.to_f64_lossy());
    if sol.degenerate {
        println!("note: the optimal face is not a single point; one optimizer shown");
    }
    for (a, m) in &support {
        println!("  q{a} = {m}");
    }
    if let Some(r) = report.get("realizable") {
        println!(
            "realizable optimum at Ω = {}: {} ({})",
            r["omega"],
            r["value"].as_str().unwrap_or(""),
            r["kind"].as_str().unwrap_or("")
        );
        for p in r["profiles"].as_array().into_iter().flatten() {
            println!("  {}", p.as_str().unwrap_or(""));
        }
    }
    Ok(())
}

fn analyze_chain(game: &str, omega: usize, c: Option<String>, verify: bool, as_json: bool) -> Result<()> {
    let game = load(game)?;
    let n = game.num_players();
    let c = match c {
        Some(text) => Rational::parse(&text).with_context(|| format!("invalid c `{text}`"))?,
        None => Rational::from_ratio(4 * n as i64 + 1, 4),
    };
    if c <= Rational::from_ratio(n as i64, 1) {
        bail!("c = {c} must exceed the number of players {n}");
    }
    let classes = enumerate_recurrent_classes(&game, omega)?;
    let prediction = stochastically_stable_states(&classes, &c)?;
    let closed = stochastic_potentials_closed_form(&classes, &c);
    let agree = closed.potentials == prediction.potentials.potentials;
    let space = classes.strategy_space();
    let describe = |class: Class| match class {
        Class::Content(p) => space.joint_strategy(p).to_text(game.labels()),
        Class::AllDiscontent => "D0".to_string(),
    };
    let stable: Vec<String> = prediction.stable.iter().map(|&k| describe(k)).collect();

    let resistance = if verify {
        let Some(&Class::Content(p)) = prediction.stable.iter().find(|k| matches!(k, Class::Content(_))) else {
            bail!("no content class is stable");
        };
        let base = cce_learning::learning::LearnerConfig::preset(n, 0.1, 1, 0);
        let config = cce_learning::learning::LearnerConfig { omega, c: c.to_f64_lossy(), ..base };
        let target = TransitionTarget::State(PopulationState::all_content(&space.decode(p)));
        let fit = empirical_resistance(
            &game.to_f64(),
            &config,
            &all_discontent_state(n),
            &target,
            &[0.2, 0.1, 0.05],
            &ResistanceSampling { target_hits: 1_000, ..Default::default() },
        )?;
        Some(json!({
            "target": describe(Class::Content(p)),
            "expected": classes.entry_resistance(p).to_f64_lossy(),
            "slope": fit.slope,
            "std_error": fit.std_error,
        }))
    } else {
        None
    };

    if as_json {
        let table: Vec<_> = (0..classes.len())
            .map(|v| {
                json!({
                    "class": describe(classes.class(v)),
                    "c_star": v < classes.content_count() && classes.is_c_star(v),
                    "potential": prediction.potentials.potentials[v].to_string(),
                })
            })
            .collect();
        let report = json!({
            "content_classes": classes.content_count(),
            "c_star": classes.c_star_count(),
            "c": c.to_string(),
            "potentials": table,
            "stable": stable,
            "branch": format!("{:?}", prediction.branch),
            "matches_prediction": prediction.matches_prediction,
            "closed_form_agrees": agree,
            "resistance": resistance,
        });
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("classes: {} content + D0, |C*| = {}, c = {c}", classes.content_count(), classes.c_star_count());
    println!("{:<24} {:>3} {:>14}", "class", "C*", "potential");
    for v in 0..classes.len() {
        let star = v < classes.content_count() && classes.is_c_star(v);
        let gamma = &prediction.potentials.potentials[v];
        println!("{:<24} {:>3} {:>14}", describe(classes.class(v)), if star { "*" } else { "" }, gamma.to_string());
    }
    println!("stochastically stable: {}", stable.join("  "));
    println!("predicted branch: {:?}; argmin matches prediction: {}", prediction.branch, prediction.matches_prediction);
    println!("closed form agrees with arborescence: {agree}");
    if let Some(r) = resistance {
        println!(
            "empirical r(D0 -> {}) slope {:.3} ± {:.3}, expected {:.3}",
            r["target"].as_str().unwrap_or(""),
            r["slope"].as_f64().unwrap_or(f64::NAN),
            r["std_error"].as_f64().unwrap_or(f64::NAN),
            r["expected"].as_f64().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SolveCce { game, omega, realizable, json } => solve_cce(&game, omega, realizable, json),
        Command::RunSim(a) => {
            let spec = build_spec(a.game.clone(), vec![a.epsilon], &a.learner);
            let outcome = execute(&spec)?;
            print!("{}", String::from_utf8(outcome.summary_csv())?);
            Ok(())
        }
        Command::Sweep(a) => {
            let spec = match a.spec {
                Some(path) => {
                    let spec = experiment::load_spec(&path)?;
                    ExperimentSpec { output_dir: a.out.clone().or(spec.output_dir.clone()), ..spec }
                }
                None => ExperimentSpec {
                    delta: a.delta,
                    c: a.c,
                    omega: a.omega,
                    phase_len: a.phase_len,
                    steps: a.steps,
                    output_dir: a.out.clone(),
                    ..ExperimentSpec::new(a.game.expect("required by clap"), a.epsilons, a.seeds)
                },
            };
            let outcome = execute(&spec)?;
            print!("{}", format_table(&outcome.table()));
            Ok(())
        }
        Command::AnalyzeChain { game, omega, c, verify_resistance, json } => {
            analyze_chain(&game, omega, c, verify_resistance, json)
        }
        Command::Reproduce { which, out } => {
            if which == "example1" {
                let outcome = experiment::reproduce_example1(out.as_deref())?;
                print!("{}", format_table(&outcome.table()));
            } else {
                let report = experiment::reproduce_shapley(out.as_deref())?;
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
