use std::process::{Command, Output};

use qpvsim::protocols::Transcript;

const BIN: &str = env!("CARGO_BIN_EXE_qpvsim");
const GOLDEN_TABLE: &str = include_str!("golden/swap_table.txt");

fn qpvsim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("QPVSIM_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn honest_scheme_a_run_streams_ten_accepted_transcripts() {
    let o = qpvsim(&["run", "--scheme", "a", "--rounds", "10", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<Transcript> = stdout(&o).lines().map(|l| Transcript::from_json_line(l).unwrap()).collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|t| t.outcome.accepted && t.outcome.round_keys.is_some()));
    assert_eq!(lines.iter().map(|t| t.round).collect::<Vec<_>>(), (0..10).collect::<Vec<_>>());
    let err = stderr(&o);
    assert!(err.contains("summary scheme=a adversary=none trials=1 transcripts=10 accepted=1.000"), "{err}");
    assert!(err.contains("keys trial=0 V0 bits=20"), "{err}");
}

#[test]
fn scheme_iii_attack_reports_full_spoof_rate() {
    let o = qpvsim(&["run", "--scheme", "iii", "--adversary", "scheme-iii-attack", "--trials", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("spoof-rate=1.000"), "{}", stderr(&o));
}

#[test]
fn emitted_table_matches_golden_file() {
    let o = qpvsim(&["run", "--emit-table"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), GOLDEN_TABLE);
}

#[test]
fn replay_is_byte_identical_and_seeds_matter() {
    let args = ["run", "--scheme", "b", "--adversary", "entangling-intercept", "--trials", "30", "--rounds", "2", "--seed", "5"];
    let a = qpvsim(&args);
    let b = qpvsim(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let mut other = args;
    other[10] = "6";
    assert_ne!(qpvsim(&other).stdout, a.stdout);
}

#[test]
fn environment_seed_is_a_default_that_flags_override() {
    let run = |env: &str, extra: &[&str]| {
        let mut args = vec!["run", "--scheme", "pv-bb84"];
        args.extend_from_slice(extra);
        Command::new(BIN).args(&args).env("QPVSIM_SEED", env).output().unwrap().stdout
    };
    let explicit = qpvsim(&["run", "--scheme", "pv-bb84", "--seed", "12"]).stdout;
    assert_eq!(run("12", &[]), explicit);
    assert_eq!(run("99", &["--seed", "12"]), explicit);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "scheme = \"iv\"\nrounds = 4\nseed = 3\n[geometry]\nd = 2.5\n").unwrap();
    let out = dir.path().join("t.jsonl");
    let o = qpvsim(&["run", "--config", cfg.to_str().unwrap(), "--rounds", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let ts: Vec<_> = text.lines().map(|l| Transcript::from_json_line(l).unwrap()).collect();
    assert_eq!(ts.len(), 2);
    assert!(ts.iter().all(|t| t.scheme == qpvsim::protocols::Scheme::IV && (t.outcome.elapsed - 5.0).abs() < 1e-9));
}

#[test]
fn invalid_configuration_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "scheme = \"a\"\nroundz = 3\n").unwrap();
    assert_eq!(qpvsim(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qpvsim(&["run", "--scheme", "z"]).status.code(), Some(2));
    assert_eq!(qpvsim(&["run", "--d", "-1"]).status.code(), Some(2));
    assert_eq!(qpvsim(&["run", "--scheme", "i", "--auth-z", "3"]).status.code(), Some(2));
    assert_eq!(qpvsim(&["run", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
}

#[test]
fn unmet_expectation_exits_with_one() {
    let o = qpvsim(&["run", "--scheme", "iii", "--adversary", "scheme-iii-attack", "--trials", "20", "--expect", "detect"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAILED"));
    let o = qpvsim(&["run", "--scheme", "b", "--adversary", "entangling-intercept", "--rounds", "10", "--trials", "20", "--expect", "detect"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn auth_sessions_run_on_accumulated_keys() {
    let o = qpvsim(&["run", "--scheme", "b", "--rounds", "8", "--trials", "3", "--auth-z", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("auth=6/6"), "{}", stderr(&o));
}

#[test]
fn stats_reads_a_transcript_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let o = qpvsim(&["run", "--scheme", "pv-bb84", "--trials", "50", "--seed", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = qpvsim(&["stats", out.to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(report["acceptance_rate"], 1.0);
    assert_eq!(report["transcripts"], 50);
    assert!(report.get("adversary").is_none());
    let again = qpvsim(&["stats", out.to_str().unwrap()]);
    assert_eq!(again.stdout, s.stdout);
}

#[test]
fn stats_on_empty_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(qpvsim(&["stats", empty.to_str().unwrap()]).status.code(), Some(2));
}
