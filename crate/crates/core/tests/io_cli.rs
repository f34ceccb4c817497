use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cce_learning::experiment::load_spec;
use cce_learning::io::{load_game, parse_game, save_game, GameFile};
use cce_learning::{normalize_payoffs, presets, Error, Game, Rational, Scalar};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("games").join(name)
}

fn cce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cce")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_rows(path: &Path) -> usize {
    csv::Reader::from_path(path).unwrap().records().count()
}

#[test]
fn example_fixture_matches_the_preset() {
    let game: Game<Rational> = load_game(&fixture("example1.json")).unwrap();
    assert_eq!(game.payoff_rows(), presets::example1::<Rational>().payoff_rows());
    let tr = game.joint_index(&["T", "R"]).unwrap();
    assert_eq!(*game.payoff(0, tr), Rational::from_ratio(17, 20));
}

#[test]
fn fixtures_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["example1.json", "shapley.json", "shapley_raw.json"] {
        let game: Game<Rational> = load_game(&fixture(name)).unwrap();
        let copy = dir.path().join(name);
        save_game(&game, &copy).unwrap();
        let back: Game<Rational> = load_game(&copy).unwrap();
        assert_eq!(back.payoff_rows(), game.payoff_rows(), "{name}");
        assert_eq!(back.labels(), game.labels(), "{name}");
    }
}

#[test]
fn normalized_shapley_fixture_is_in_unit_range() {
    let game: Game<Rational> = load_game(&fixture("shapley.json")).unwrap();
    assert!(game.has_unit_payoffs());
    let expected = normalize_payoffs(&presets::shapley_variant(Rational::from_ratio(1, 10)));
    assert_eq!(game.payoff_rows(), expected.payoff_rows());
    let raw: Game<f64> = load_game(&fixture("shapley_raw.json")).unwrap();
    assert!(!raw.has_unit_payoffs());
}

#[test]
fn schema_errors_name_the_field() {
    let short = r#"{"players":[{"actions":["a","b"]},{"actions":["x","y"]}],"payoffs":[[1,0,1],[1,0,0,1]]}"#;
    match parse_game::<f64>(short) {
        Err(Error::Schema { path, .. }) => assert_eq!(path, "payoffs[0]"),
        other => panic!("unexpected {other:?}"),
    }
    let file = GameFile::from_json(r#"{"players":[{"actions":["a"]},{"actions":["b"]}],"payoffs":[["1/2"],[0.25]]}"#).unwrap();
    let game: Game<Rational> = file.to_game().unwrap();
    assert_eq!(*game.payoff(0, 0), Rational::from_ratio(1, 2));
    assert_eq!(game.payoff(1, 0).to_f64_lossy(), 0.25);
}

#[test]
fn sweep_spec_fixture_loads() {
    let spec = load_spec(&fixture("example1_sweep.json")).unwrap();
    assert_eq!(spec.epsilons, vec![0.15, 0.1, 0.015, 0.01]);
    assert_eq!(spec.seeds.len(), 20);
    assert!(Path::new(&spec.game).exists(), "{}", spec.game);
}

#[test]
fn solve_cce_reports_the_exact_value() {
    let out = stdout(&cce(&["solve-cce", fixture("example1.json").to_str().unwrap(), "--json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["value"], "8/5");
    let out = stdout(&cce(&["solve-cce", "example1", "--omega", "1", "--realizable", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["realizable"]["value"], "1");
    assert_eq!(v["realizable"]["kind"], "EfficientCce");
}

#[test]
fn malformed_game_exits_nonzero_with_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"players":[{"actions":["a","b"]},{"actions":["x"]}],"payoffs":[[1],[1,2]]}"#).unwrap();
    let out = cce(&["solve-cce", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("payoffs[0]"));
    let out = cce(&["solve-cce", "no-such-game.json"]);
    assert!(!out.status.success());
}

#[test]
fn run_sim_writes_one_row_per_period() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let args = ["run-sim", "example1", "--epsilon", "0.1", "--periods", "30", "--seeds", "1,2", "--out"];
    stdout(&Command::new(env!("CARGO_BIN_EXE_cce")).args(args).arg(&out).output().unwrap());
    for seed in [1, 2] {
        assert_eq!(data_rows(&out.join(format!("run_eps0.1_seed{seed}.csv"))), 30);
    }
    assert_eq!(data_rows(&out.join("summary.csv")), 2);
    let header = std::fs::read_to_string(out.join("run_eps0.1_seed1.csv")).unwrap();
    assert!(header.starts_with("period,k,mood_vector,baseline_ids,u_b,u_t,u_a,at_target\n"));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["game"]["hash"].as_str().unwrap().len(), 64);
}

#[test]
fn sweep_row_counts_cover_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let args = ["sweep", "example1", "--epsilons", "0.2,0.05,0.01", "--seeds", "5,6", "--steps", "3000", "--out"];
    stdout(&Command::new(env!("CARGO_BIN_EXE_cce")).args(args).arg(&out).output().unwrap());
    // 3000 steps at p̄ = 50 is 20 periods.
    let runs: usize = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("run_"))
        .map(|p| data_rows(&p))
        .sum();
    assert_eq!(runs, 20 * 2 * 3);
    assert_eq!(data_rows(&out.join("summary.csv")), 6);
    assert_eq!(data_rows(&out.join("table.csv")), 3);
}

#[test]
fn sweep_from_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::copy(fixture("example1.json"), dir.path().join("game.json")).unwrap();
    std::fs::write(&spec, r#"{"game":"game.json","epsilons":[0.1],"seeds":[1],"periods":4}"#).unwrap();
    let out = dir.path().join("out");
    let result = Command::new(env!("CARGO_BIN_EXE_cce")).arg("sweep").arg("--spec").arg(&spec).arg("--out").arg(&out).output().unwrap();
    stdout(&result);
    assert_eq!(data_rows(&out.join("run_eps0.1_seed1.csv")), 4);

    std::fs::write(&spec, r#"{"game":"game.json","epsilons":[0.1],"seeds":[1],"unknown":1}"#).unwrap();
    let result = Command::new(env!("CARGO_BIN_EXE_cce")).arg("sweep").arg("--spec").arg(&spec).output().unwrap();
    assert!(!result.status.success());
}

#[test]
fn analyze_chain_reports_the_stable_classes() {
    let out = stdout(&cce(&["analyze-chain", "example1", "--omega", "1", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["stable"], serde_json::json!(["T | M", "M | L"]));
    assert_eq!(v["matches_prediction"], true);
    assert_eq!(v["closed_form_agrees"], true);
    let out = cce(&["analyze-chain", "example1", "--omega", "1", "--c", "2"]);
    assert!(!out.status.success(), "c must exceed n");
}

#[test]
fn reproduce_shapley_writes_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cce")).args(["reproduce", "shapley", "--out"]).arg(dir.path()).output().unwrap();
    stdout(&out);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("shapley.json")).unwrap()).unwrap();
    assert!((v["raw_lp_value"].as_f64().unwrap() - 0.9).abs() < 1e-8);
    assert_eq!(v["six_cell_is_cce"], true);
}
