use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use rectpoincare_cli::config::{CheckSpec, DomainSpec, ExperimentConfig, SweepSpec};
use rectpoincare_cli::run::{exit_status, Outcome, Record, RunResult};
use rectpoincare_cli::{parse_config, parse_range, print_config};
use rectpoincare_core::report::CheckReport;
use rectpoincare_core::verify::{run_check, CheckConfig};

const MINIMAL: &str = r#"
[domain]
lower = [0.0]
upper = [1.0]
resolution = 256

[functions]
f = "x1"

[[checks]]
id = "P1"
"#;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rectpoincare"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_in(dir: &Path, text: &str) -> (i32, String, String) {
    let config = write_config(dir, text);
    let out = binary().arg("run").arg(&config).arg("--output-dir").arg(dir.join("out")).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    (out.status.code().unwrap(), stdout, stderr)
}

fn reports(dir: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(dir.join("out").join("reports.jsonl"))
        .unwrap()
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect()
}

#[test]
fn minimal_config_is_valid() {
    let config = parse_config(MINIMAL).unwrap();
    assert_eq!(config.resolution, Some(256));
    assert_eq!(config.functions, vec![("f".to_string(), "x1".to_string())]);
    assert_eq!(config.checks, vec![CheckSpec { id: "P1".into(), params: BTreeMap::new() }]);
}

#[test]
fn unknown_check_names_the_valid_ids() {
    let err = parse_config("[[checks]]\nid = \"P99\"\n").unwrap_err();
    assert_eq!(err.0.len(), 1);
    assert!(err.0[0].contains("P99"));
    assert!(err.0[0].contains("P1, P2"));
}

#[test]
fn out_of_range_axis_reports_its_position() {
    let text = "[domain]\nlower = [0, 0]\nupper = [1, 1]\n[functions]\nf = \"x3\"\n[[checks]]\nid = \"P2\"\n";
    let err = parse_config(text).unwrap_err();
    assert_eq!(err.0.len(), 1);
    assert!(err.0[0].contains("axis index out of range at position 1"), "{}", err.0[0]);
}

#[test]
fn every_problem_is_reported() {
    let text = r#"
[domain]
lower = [0.0]
upper = [1.0]
resolution = 100
colour = "blue"

[functions]
f = "sin(x1"

[[checks]]
id = "P1"
constnt = 0.1

[[checks]]
id = "Q7"

[run]
jobs = 0
"#;
    let err = parse_config(text).unwrap_err();
    let joined = err.to_string();
    assert_eq!(err.0.len(), 6, "{joined}");
    for needle in ["colour", "resolution 100", "constnt", "Q7", "jobs", "position"] {
        assert!(joined.contains(needle), "missing {needle} in {joined}");
    }
}

#[test]
fn weights_are_validated() {
    let text = "[weights]\nweight = \"power:zz\"\n[[checks]]\nid = \"P3\"\n";
    assert!(parse_config(text).is_err());
    let text = "[weights]\nweight = \"power:0.5\"\nmeasure = \"1 + x2\"\n[[checks]]\nid = \"S1\"\n";
    assert!(parse_config(text).is_ok());
}

#[test]
fn sweep_parameters_are_validated() {
    let text = "[[sweeps]]\ncheck = \"F3\"\nparameter = \"gamma\"\nvalues = [1.0]\n";
    let err = parse_config(text).unwrap_err();
    assert!(err.0[0].contains("cannot sweep"));
}

#[test]
fn ranges() {
    assert_eq!(parse_range("0.5,0.9").unwrap(), vec![0.5, 0.9]);
    assert_eq!(parse_range("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
    assert!(parse_range("1:2").is_err());
    assert!(parse_range("a,b").is_err());
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    let domain = prop_oneof![
        Just(None),
        (1usize..=4, -3.0f64..0.0, 0.5f64..4.0).prop_map(|(n, lo, side)| Some(DomainSpec {
            lower: vec![lo; n],
            upper: vec![lo + side; n],
            blocks: if n >= 2 { vec![1, n - 1] } else { vec![] },
        })),
    ];
    let ids = prop::sample::select(vec!["P1", "P2", "F3", "S5", "B1", "J2"]);
    let check = (ids, prop::collection::btree_map(prop::sample::select(vec!["depth", "delta", "p"]), -1e6f64..1e6, 0..3))
        .prop_filter_map("parameters in schema", |(id, params)| {
            let entry = rectpoincare_core::verify::lookup(id).unwrap();
            let params: BTreeMap<String, f64> =
                params.into_iter().filter(|(k, _)| entry.param(k).is_some()).map(|(k, v)| (k.to_string(), v)).collect();
            Some(CheckSpec { id: id.to_string(), params })
        });
    let sweep = (prop::collection::vec(0.01f64..0.99, 1..4)).prop_map(|values| SweepSpec {
        check: "F3".into(),
        parameter: "delta".into(),
        values,
        params: BTreeMap::new(),
    });
    let functions = prop::collection::vec(prop::sample::select(vec!["x1", "sin(x1)", "x1^2 + 1", "exp(-x1)"]), 0..3)
        .prop_map(|exprs| exprs.into_iter().enumerate().map(|(i, e)| (format!("f{i}"), e.to_string())).collect());
    (
        domain,
        prop::option::of((2u32..10).prop_map(|k| 1usize << k)),
        functions,
        prop::option::of(prop::sample::select(vec!["power:0.5", "constant", "1 + x1^2"])),
        prop::collection::vec(check, 1..4),
        prop::collection::vec(sweep, 0..2),
        (0u64..i64::MAX as u64, prop::option::of(1u64..1_000_000_000), prop::option::of(1usize..64), any::<bool>()),
    )
        .prop_map(|(domain, resolution, functions, weight, checks, sweeps, (seed, pair_budget, jobs, timings))| {
            ExperimentConfig {
                domain,
                resolution,
                functions,
                weight: weight.map(str::to_string),
                measure: None,
                checks,
                sweeps,
                seed,
                output_dir: PathBuf::from("results/run"),
                pair_budget,
                jobs,
                timings,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_round_trips(config in config_strategy()) {
        let text = print_config(&config);
        let parsed = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(parsed, config);
    }

    #[test]
    fn exit_status_contract(outcomes in prop::collection::vec(
        prop::sample::select(vec![Outcome::Pass, Outcome::Fail, Outcome::Error]), 0..20)
    ) {
        let expected = if outcomes.contains(&Outcome::Error) {
            1
        } else if outcomes.contains(&Outcome::Fail) {
            2
        } else {
            0
        };
        prop_assert_eq!(exit_status(&outcomes), expected);
        prop_assert_eq!(expected == 0, outcomes.iter().all(|&o| o == Outcome::Pass));

        let records = outcomes
            .iter()
            .map(|&outcome| {
                let mut report = CheckReport::explicit("P1", 1.0, if outcome == Outcome::Fail { 0.5 } else { 2.0 }, 0.0, 0);
                if outcome == Outcome::Error {
                    report = CheckReport::error("P1", "synthetic".into(), 0);
                }
                Record { report, outcome }
            })
            .collect();
        prop_assert_eq!(RunResult { checks: records, sweeps: vec![] }.exit_status(), expected);
    }
}

#[test]
fn passing_suite_writes_one_record_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run_in(dir.path(), "[[checks]]\nid = \"P1\"\n\n[[checks]]\nid = \"F1\"\n");
    assert_eq!(code, 0, "{stdout}");
    let records = reports(dir.path());
    assert_eq!(records.len(), 2);
    for (record, id) in records.iter().zip(["P1", "F1"]) {
        let direct = run_check(id, &CheckConfig::default()).unwrap();
        assert_eq!(record["id"], id);
        // The default JSON float parser may be off by one unit in the last place.
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b.abs();
        assert!(close(record["lhs"].as_f64().unwrap(), direct.lhs));
        assert!(close(record["rhs"].as_f64().unwrap(), direct.rhs));
        assert_eq!(record["pass"], true);
        assert_eq!(record["schema_version"], 1);
        assert!(record.get("wall_time_ms").is_none());
    }
    assert!(dir.path().join("out/summary.txt").exists());
}

#[test]
fn false_constant_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[domain]\nlower = [0.0]\nupper = [1.0]\n[functions]\nf = \"x1\"\n[[checks]]\nid = \"P1\"\nconstant = 0.1\ndepth = 0\n";
    let (code, _, _) = run_in(dir.path(), text);
    assert_eq!(code, 2);
    let records = reports(dir.path());
    assert_eq!(records[0]["pass"], false);
    assert!(records[0]["failure"].as_str().unwrap().contains("constant 0.1"));
    assert_eq!(records[0]["params"]["constant"].as_f64(), Some(0.1));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[[checks]]\nid = \"S1\"\n[[checks]]\nid = \"J2\"\n[run]\nseed = 11\n";
    run_in(dir.path(), text);
    let first = std::fs::read(dir.path().join("out/reports.jsonl")).unwrap();
    run_in(dir.path(), text);
    let second = std::fs::read(dir.path().join("out/reports.jsonl")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn check_errors_do_not_abort_the_suite() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[weights]\nweight = \"constant\"\n[[checks]]\nid = \"S4\"\n[[checks]]\nid = \"P1\"\n";
    let (code, _, _) = run_in(dir.path(), text);
    assert_eq!(code, 1);
    let records = reports(dir.path());
    assert_eq!(records.len(), 2);
    assert!(records[0]["failure"].as_str().unwrap().contains("S5"));
    assert_eq!(records[1]["pass"], true);
}

#[test]
fn invalid_file_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(dir.path(), "[[checks]]\nid = \"P99\"\n");
    assert_eq!(code, 1);
    assert!(stderr.contains("valid ids"));
}

#[test]
fn sweep_command_prints_csv() {
    let out = binary().args(["sweep", "F3", "delta", "0.5,0.9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("check,parameter,value,lhs"));
    assert!(lines[1].starts_with("F3,delta,0.5,"));
}

#[test]
fn sweeps_in_files_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[[sweeps]]\ncheck = \"P1\"\nparameter = \"resolution\"\nvalues = [64, 128]\n";
    let (code, _, _) = run_in(dir.path(), text);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("out/sweep_01_P1_resolution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn list_and_constants_commands() {
    let out = binary().arg("list-checks").output().unwrap();
    let listing = String::from_utf8(out.stdout).unwrap();
    for id in rectpoincare_core::verify::check_ids() {
        assert!(listing.contains(&format!("{id}  ")), "{id} missing");
    }
    let out = binary().args(["constants", "constant", "--resolution", "16"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["ainf"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((report["ap"][1][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
}
