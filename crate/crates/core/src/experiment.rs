//! Experiment drivers: sweeps over `ε` and seeds, CSV and manifest output,
//! and the two canned reproductions.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::JointDistribution;
use crate::equilibria::{cce_check, efficient_cce};
use crate::error::{Error, Result};
use crate::game::{normalize_payoffs, Game};
use crate::io::{content_hash, GameFile};
use crate::learning::{
    default_c, theory_phase_len, periods_for_steps, LearnerConfig, Simulator, Trace, DEFAULT_DELTA, DEFAULT_OMEGA,
    DEFAULT_PHASE_LEN,
};
use crate::presets;
use crate::scalar::{Rational, Scalar};

/// Time steps simulated when neither `steps` nor `periods` is given.
pub const DEFAULT_STEPS: u64 = 100_000;
pub const EXAMPLE1_EPSILONS: [f64; 4] = [0.15, 0.1, 0.015, 0.01];
pub const EXAMPLE1_SEEDS: u64 = 20;

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_omega() -> usize {
    DEFAULT_OMEGA
}

/// A sweep over `ε` values and seeds on one game.
///
/// `game` names a preset (`example1`, `shapley`) or a game file; relative
/// paths are resolved against the spec file's directory by [`load_spec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub game: String,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default = "default_omega")]
    pub omega: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_len: Option<u64>,
    /// Derive `p̄ = ⌈1/δ^{nc+1}⌉` instead of using `phase_len`.
    #[serde(default)]
    pub theory_phase_len: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(game: impl Into<String>, epsilons: Vec<f64>, seeds: Vec<u64>) -> Self {
        Self {
            game: game.into(),
            epsilons,
            seeds,
            delta: DEFAULT_DELTA,
            c: None,
            omega: DEFAULT_OMEGA,
            phase_len: None,
            theory_phase_len: false,
            steps: None,
            periods: None,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list is empty".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidConfig("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::InvalidConfig(format!("epsilon {e} must lie in (0, 1)")));
        }
        if self.steps.is_some() && self.periods.is_some() {
            return Err(Error::InvalidConfig("give either steps or periods, not both".into()));
        }
        Ok(())
    }

    /// The base configuration for `n` players; `epsilon` and `seed` are
    /// overwritten per sweep cell.
    pub fn base_config(&self, num_players: usize) -> Result<LearnerConfig> {
        let c = self.c.unwrap_or_else(|| default_c(num_players));
        let phase_len = if self.theory_phase_len {
            if self.delta <= 0.0 {
                return Err(Error::InvalidConfig("the derived phase length needs delta > 0".into()));
            }
            theory_phase_len(self.delta, num_players, c)
        } else {
            self.phase_len.unwrap_or(DEFAULT_PHASE_LEN)
        };
        if phase_len == 0 {
            return Err(Error::InvalidConfig("phase_len must be at least 1".into()));
        }
        let periods = match (self.steps, self.periods) {
            (_, Some(p)) => p,
            (s, None) => periods_for_steps(s.unwrap_or(DEFAULT_STEPS), phase_len),
        };
        let config =
            LearnerConfig { epsilon: self.epsilons[0], delta: self.delta, c, omega: self.omega, phase_len, periods, seed: 0 };
        config.validate(num_players)?;
        Ok(config)
    }

    /// Time steps over which the measurement window is taken.
    pub fn horizon_steps(&self, config: &LearnerConfig) -> u64 {
        self.steps.unwrap_or(config.periods * config.period_len())
    }
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut spec: ExperimentSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::Schema { path: e.path().to_string(), message: e.into_inner().to_string() })?;
    if preset_game(&spec.game).is_none() {
        let p = Path::new(&spec.game);
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                spec.game = dir.join(p).to_string_lossy().into_owned();
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Built-in games in learning form (payoffs in `[0, 1]`).
pub fn preset_game(name: &str) -> Option<Game<Rational>> {
    match name {
        "example1" => Some(presets::example1()),
        "shapley" => Some(normalize_payoffs(&presets::shapley_variant(Rational::from_ratio(1, 10)))),
        _ => None,
    }
}

/// A game together with the bytes its hash is taken over.
#[derive(Clone, Debug)]
pub struct LoadedGame {
    pub game: Game<Rational>,
    pub source: String,
    pub hash: String,
}

pub fn resolve_game(reference: &str) -> Result<LoadedGame> {
    if let Some(game) = preset_game(reference) {
        let bytes = GameFile::from_game(&game).to_json();
        return Ok(LoadedGame { hash: content_hash(bytes.as_bytes()), game, source: format!("preset:{reference}") });
    }
    let bytes = std::fs::read(reference)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Schema { path: String::new(), message: "game file is not UTF-8".into() })?;
    let game = crate::io::parse_game(&text)?;
    Ok(LoadedGame { game, source: reference.to_string(), hash: content_hash(&bytes) })
}

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub epsilon: f64,
    pub seed: u64,
    pub fraction_at_target: f64,
    pub csv: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub config: LearnerConfig,
    pub steps: u64,
    pub cells: Vec<CellOutcome>,
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// One row per period: `period,k,mood_vector,baseline_ids,u_b,u_t,u_a,at_target`.
///
/// Moods and baselines are those at the start of the period; `at_target`
/// counts the period's time steps spent at a target profile.
pub fn trace_csv(trace: &Trace) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["period", "k", "mood_vector", "baseline_ids", "u_b", "u_t", "u_a", "at_target"])
        .expect("in-memory write");
    for r in &trace.records {
        let moods: String = r.mood_before.iter().map(|m| m.letter().to_string()).collect::<Vec<_>>().join(";");
        let hits = r.at_target.iter().filter(|&&b| b).count() as u64 * trace.phase_len;
        w.write_record([
            r.period.to_string(),
            r.k.to_string(),
            moods,
            join(&r.baseline),
            join(&r.u_b),
            join(&r.u_t),
            join(&r.u_a),
            hits.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Runs every `(ε, seed)` cell; results follow input order.
pub fn run_sweep(game: &Game<f64>, spec: &ExperimentSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    let config = spec.base_config(game.num_players())?;
    let steps = spec.horizon_steps(&config);
    let base = Simulator::new(game, config.clone())?;
    let jobs: Vec<(f64, u64)> =
        spec.epsilons.iter().flat_map(|&e| spec.seeds.iter().map(move |&s| (e, s))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(epsilon, seed)| {
            let sim = base.with_config(LearnerConfig { epsilon, seed, ..config.clone() })?;
            let trace = sim.run();
            Ok(CellOutcome {
                epsilon,
                seed,
                fraction_at_target: trace.fraction_last_half(steps),
                csv: trace_csv(&trace),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome { config, steps, cells })
}

impl SweepOutcome {
    pub fn summary_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["epsilon", "seed", "fraction_at_target"]).expect("in-memory write");
        for c in &self.cells {
            w.write_record([c.epsilon.to_string(), c.seed.to_string(), c.fraction_at_target.to_string()])
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Mean and sample standard deviation of the fraction per `ε`, in
    /// first-appearance order.
    pub fn table(&self) -> Vec<TableRow> {
        let mut order: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !order.contains(&c.epsilon) {
                order.push(c.epsilon);
            }
        }
        order
            .into_iter()
            .map(|epsilon| {
                let xs: Vec<f64> =
                    self.cells.iter().filter(|c| c.epsilon == epsilon).map(|c| c.fraction_at_target).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                TableRow { epsilon, mean, std: var.sqrt(), runs: xs.len() }
            })
            .collect()
    }

    pub fn run_file_name(epsilon: f64, seed: u64) -> String {
        format!("run_eps{epsilon}_seed{seed}.csv")
    }

    /// Writes one CSV per cell, `summary.csv`, `table.csv` and `manifest.json`.
    pub fn write(&self, dir: &Path, spec: &ExperimentSpec, game: &LoadedGame) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for c in &self.cells {
            let path = dir.join(Self::run_file_name(c.epsilon, c.seed));
            std::fs::write(&path, &c.csv)?;
            written.push(path);
        }
        let summary = dir.join("summary.csv");
        std::fs::write(&summary, self.summary_csv())?;
        written.push(summary);
        let table = dir.join("table.csv");
        std::fs::write(&table, table_csv(&self.table()))?;
        written.push(table);

        let manifest = Manifest {
            game: ManifestGame { source: game.source.clone(), name: game.game.name().to_string(), hash: game.hash.clone() },
            config: self.config.clone(),
            epsilons: spec.epsilons.clone(),
            seeds: spec.seeds.clone(),
            steps: self.steps,
            window: [self.steps / 2 + 1, self.steps],
            files: written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect(),
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
        written.push(path);
        Ok(written)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub epsilon: f64,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

pub fn table_csv(rows: &[TableRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `ε | % time at target` with mean ± standard deviation.
pub fn format_table(rows: &[TableRow]) -> String {
    let mut out = String::from("epsilon | % time at target (mean ± std)\n");
    for r in rows {
        out.push_str(&format!("{:<7} | {:5.1}% ± {:4.1}%  (n = {})\n", r.epsilon, 100.0 * r.mean, 100.0 * r.std, r.runs));
    }
    out
}

#[derive(Serialize)]
struct ManifestGame {
    source: String,
    name: String,
    hash: String,
}

#[derive(Serialize)]
struct Manifest {
    game: ManifestGame,
    config: LearnerConfig,
    epsilons: Vec<f64>,
    seeds: Vec<u64>,
    steps: u64,
    window: [u64; 2],
    files: Vec<String>,
}

/// The example1 sweep: four `ε` values, 20 seeds, `10^5` steps.
pub fn example1_spec() -> ExperimentSpec {
    ExperimentSpec {
        steps: Some(DEFAULT_STEPS),
        ..ExperimentSpec::new("example1", EXAMPLE1_EPSILONS.to_vec(), (1..=EXAMPLE1_SEEDS).collect())
    }
}

pub fn reproduce_example1(out: Option<&Path>) -> Result<SweepOutcome> {
    let spec = example1_spec();
    let loaded = resolve_game(&spec.game)?;
    let outcome = run_sweep(&loaded.game.to_f64(), &spec)?;
    if let Some(dir) = out {
        outcome.write(dir, &spec, &loaded)?;
        std::fs::write(dir.join("table.txt"), format_table(&outcome.table()))?;
    }
    Ok(outcome)
}

/// Welfare comparisons on the cyclic game with `ε_s = 1/10`.
#[derive(Clone, Debug, Serialize)]
pub struct ShapleyReport {
    pub raw_lp_value: f64,
    pub raw_six_cell_welfare: f64,
    pub raw_nash_welfare: f64,
    pub normalized_lp_value: f64,
    pub normalized_six_cell_welfare: f64,
    pub normalized_nash_welfare: f64,
    pub six_cell_is_cce: bool,
    pub nash_is_cce: bool,
    /// `|LP value - six-cell welfare|` on the normalized game.
    pub gap: f64,
}

/// Mass `1/6` on each nonzero-payoff cell.
pub fn six_cell_distribution<T: Scalar>(game: &Game<T>) -> JointDistribution<T> {
    let sixth = T::from_ratio(1, 6);
    let entries: Vec<(usize, T)> =
        presets::shapley_six_cells().iter().map(|&(r, c)| (game.space().encode(&[r, c]), sixth.clone())).collect();
    JointDistribution::from_sparse(game.joint_count(), &entries).expect("six cells carry total mass one")
}

pub fn uniform_product<T: Scalar>(game: &Game<T>) -> JointDistribution<T> {
    let mixtures: Vec<Vec<T>> = game
        .space()
        .radices()
        .iter()
        .map(|&k| vec![T::from_ratio(1, k as i64); k])
        .collect();
    JointDistribution::product(game.space(), &mixtures).expect("uniform mixtures form a distribution")
}

pub fn reproduce_shapley(out: Option<&Path>) -> Result<ShapleyReport> {
    let raw = presets::shapley_variant(Rational::from_ratio(1, 10));
    let norm = normalize_payoffs(&raw);
    let zero = Rational::from_ratio(0, 1);
    let six = six_cell_distribution(&raw);
    let nash = uniform_product(&raw);
    let f = |r: Rational| r.to_f64_lossy();
    let norm_lp = efficient_cce(&norm)?.value;
    let norm_six = norm.welfare(&six)?;
    let report = ShapleyReport {
        raw_lp_value: f(efficient_cce(&raw)?.value),
        raw_six_cell_welfare: f(raw.welfare(&six)?),
        raw_nash_welfare: f(raw.welfare(&nash)?),
        gap: f(num_traits::Signed::abs(&(norm_lp.clone() - norm_six.clone()))),
        normalized_lp_value: f(norm_lp),
        normalized_six_cell_welfare: f(norm_six),
        normalized_nash_welfare: f(norm.welfare(&nash)?),
        six_cell_is_cce: cce_check(&raw, &six, &zero)?.is_cce,
        nash_is_cce: cce_check(&raw, &nash, &zero)?.is_cce,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("shapley.json"), serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    Ok(report)
}
