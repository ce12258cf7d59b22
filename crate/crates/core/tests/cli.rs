use std::fs;

use elygov_core::harness::cli::{run, EXIT_CONFIG, EXIT_IO, EXIT_MAS, EXIT_OK, EXIT_USAGE};
use elygov_core::harness::CSV_HEADER;
use elygov_core::governor::AdmissibleSet;

fn elygov(args: &[&str]) -> i32 {
    run(std::iter::once("elygov").chain(args.iter().copied()))
}

#[test]
fn simulate_writes_csv_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let code = elygov(&["simulate", "--scenario", "large-step", "--governor", "pg", "--output", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(text.lines().count(), 6002);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        assert_eq!(elygov(&["simulate", "--scenario", "small-steps", "--governor", "lpf", "--output", path.to_str().unwrap()]), EXIT_OK);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn mas_round_trips_through_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let mas = dir.path().join("omega.json");
    assert_eq!(elygov(&["mas", "--ts", "0.1", "--eps", "0.01", "--output", mas.to_str().unwrap()]), EXIT_OK);
    let set = AdmissibleSet::from_json(&fs::read_to_string(&mas).unwrap()).unwrap();
    assert_eq!(set.rows(), 2 * (set.j_star + 2));
    let csv = dir.path().join("run.csv");
    let code = elygov(&[
        "simulate", "--scenario", "large-step", "--mas", mas.to_str().unwrap(), "--output", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn compare_writes_both_traces() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("metrics.json");
    let code = elygov(&["compare", "--scenario", "small-steps", "--out-dir", dir.path().to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(dir.path().join("small-steps_pg.csv").is_file());
    assert!(dir.path().join("small-steps_lpf.csv").is_file());
    let reports: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(reports[0]["governor"], "pg");
    assert_eq!(reports[0]["tracking_mse_kw2"], 0.0);
}

#[test]
fn scenario_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ramp.toml");
    fs::write(
        &file,
        "name = \"ramp\"\nduration_s = 50.0\ngovernor = \"lpf\"\nprofile_w = [[0.0, 5000.0], [10.0, 9000.0]]\n\
         [windows]\ntracking_s = [10.0, 50.0]\nproduction_s = [10.0, 30.0]\nauxiliary_s = [30.0, 50.0]\n",
    )
    .unwrap();
    let out = dir.path().join("ramp.csv");
    assert_eq!(elygov(&["simulate", "--scenario", file.to_str().unwrap(), "--output", out.to_str().unwrap()]), EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    assert!(!text.lines().next().unwrap().ends_with("kappa"));
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(elygov(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(elygov(&["simulate", "--scenario", "large-step", "--bogus"]), EXIT_USAGE);
    assert_eq!(elygov(&["simulate", "--scenario", "no-such-scenario"]), EXIT_CONFIG);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[gas]\ngamma = 1.0\n").unwrap();
    assert_eq!(elygov(&["linearize", "--config", bad.to_str().unwrap()]), EXIT_CONFIG);

    let missing = dir.path().join("missing.toml");
    assert_eq!(elygov(&["linearize", "--config", missing.to_str().unwrap()]), EXIT_IO);

    assert_eq!(elygov(&["mas", "--eps", "2.0"]), EXIT_MAS);
    assert_eq!(elygov(&["mas", "--horizon-cap", "3"]), EXIT_MAS);
}

#[test]
fn linearize_and_help_succeed() {
    assert_eq!(elygov(&["linearize", "--power-kw", "7"]), EXIT_OK);
    assert_eq!(elygov(&["--help"]), EXIT_OK);
}
