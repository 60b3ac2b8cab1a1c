use std::process::Command;

use serde_json::Value;

const SCHEMA: &str = include_str!("../schema/rcfm-report-1.schema.json");

fn rcfm(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rcfm")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let (code, stdout, _) = rcfm(&full);
    (code, serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{args:?}: {e}\n{stdout}")))
}

fn validate(report: &Value) {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}\n{report:#}");
}

const INVOCATIONS: &[&[&str]] = &[
    &["index", "S(-1)"],
    &["index", "S(1) + E(1,3)"],
    &["kernel", "S(-2)"],
    &["cokernel", "T(1)"],
    &["split", "S(1)*S(-1) + 2*E(3,3)"],
    &["finverse", "S(1)"],
    &["finverse", "Dgeo(2)*S(-1)"],
    &["classify", "--x", "S(-1)", "--y", "S(1)"],
    &["classify", "--x", "Dgeo(2)", "--y", "Dgeo(1/2)"],
    &["family", "--n", "2"],
    &["equiv", "--x1", "S(-1)", "--y1", "S(1)", "--x2", "T(-1)", "--y2", "T(1)", "--u", "Dfact(-1)"],
    &["indep", "--exps", "0,1,2"],
    &["indep", "--exps", "-1,0,1"],
    &["units", "--x", "S(-1)", "--y", "S(1)", "--n", "3"],
    &["embed", "--a", "E(1,2)", "--x", "S(-1)", "--y", "S(1)", "--n", "3"],
    &["truncate", "S(-1) + Dfact(1)", "--n", "4"],
    &["verify", "--suite", "ring"],
    // failures still produce schema-valid reports
    &["index", "S("],
    &["index", "S(1)^-1"],
    &["index", "E(1,1)"],
    &["split", "S(1)"],
    &["indep", "--exps", "1,1"],
];

#[test]
fn every_report_validates_against_the_schema() {
    for args in INVOCATIONS {
        let (code, report) = json(args);
        assert!(code <= 2, "{args:?} exited {code}");
        assert_eq!(report["schema"], "rcfm-report/1");
        assert_eq!(report["command"], args[0]);
        assert_eq!(report["parameters"]["max_trunc"], 256);
        assert_eq!(report["parameters"]["window"], 16);
        assert_eq!(report["parameters"]["depth"], 6);
        validate(&report);
    }
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let without_timing = |s: String| s.lines().filter(|l| !l.contains("\"timing_ms\"")).collect::<Vec<_>>().join("\n");
    for args in INVOCATIONS {
        let mut full = vec!["--json"];
        full.extend_from_slice(args);
        let (_, a, _) = rcfm(&full);
        let (_, b, _) = rcfm(&full);
        assert_eq!(without_timing(a), without_timing(b), "{args:?}");
    }
}

#[test]
fn parameters_are_echoed() {
    let (code, report) = json(&["--max-trunc", "40", "--window", "4", "--depth", "3", "index", "S(2)"]);
    assert_eq!(code, 0);
    assert_eq!(report["parameters"]["max_trunc"], 40);
    assert_eq!(report["parameters"]["window"], 4);
    assert_eq!(report["parameters"]["depth"], 3);
}

#[test]
fn index_of_backward_shift() {
    let (code, report) = json(&["index", "S(-1)"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["index"], 1);
    assert_eq!(report["certified"], true);
    assert_eq!(report["inputs"]["expr"], "S(-1)");
}

#[test]
fn toeplitz_extension_is_nontrivial() {
    let (code, report) = json(&["classify", "--x", "S(-1)", "--y", "S(1)"]);
    assert_eq!(code, 1);
    assert_eq!(report["result"]["trivial"], false);
    assert_eq!(report["result"]["index"], 1);
}

#[test]
fn vandermonde_exponents_are_independent() {
    let (code, report) = json(&["indep", "--exps", "0,1,2"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["independent"], true);
}

#[test]
fn negative_verdicts_exit_one() {
    // Diag(1/i!) does not carry T(-1) to S(-1)
    let (code, _) = json(&["equiv", "--x1", "S(-1)", "--y1", "S(1)", "--x2", "T(-1)", "--y2", "T(1)", "--u", "Dfact(1)"]);
    assert_eq!(code, 1);
    let (code, _) = json(&["equiv", "--x1", "S(-1)", "--y1", "S(1)", "--x2", "T(-1)", "--y2", "T(1)", "--u", "Dfact(-1)"]);
    assert_eq!(code, 0);
}

#[test]
fn parse_errors_carry_the_offset() {
    let (code, report) = json(&["index", "S("]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "parse");
    assert!(report["error"]["message"].as_str().unwrap().contains('2'));
    assert_eq!(report["result"], Value::Null);
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["bogus"][..], &["index"], &["family"], &["truncate", "I"], &["--window", "x", "index", "I"], &[]] {
        let (code, stdout, stderr) = rcfm(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(stdout.is_empty() && !stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let (code, stdout, _) = rcfm(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("classify"));
}

#[test]
fn text_output_is_readable() {
    let (code, stdout, _) = rcfm(&["index", "S(-1)"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("index") && stdout.contains('1'), "{stdout}");
    let (code, _, stderr) = rcfm(&["index", "E(1,1)"]);
    assert_eq!(code, 2);
    assert!(!stderr.is_empty());
}

#[test]
fn matrices_in_reports_round_trip() {
    let (_, report) = json(&["index", "Dgeo(2)*S(-1) + E(2,5)"]);
    let back: rcfm::BpfMatrix = serde_json::from_value(report["inputs"]["matrix"].clone()).unwrap();
    assert_eq!(back, rcfm::parse("Dgeo(2)*S(-1) + E(2,5)").unwrap().eval().unwrap());
}

#[test]
fn in_process_runner_matches_the_binary() {
    let args = ["--json", "kernel", "S(-2)"];
    let inproc = rcfm::cli::run(std::iter::once("rcfm").chain(args));
    let (code, stdout, _) = rcfm(&args);
    assert_eq!(inproc.code, code);
    let strip = |s: &str| {
        let mut v: Value = serde_json::from_str(s).unwrap();
        v["timing_ms"] = Value::Null;
        v
    };
    assert_eq!(strip(&inproc.stdout), strip(&stdout));
}
