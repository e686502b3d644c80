use std::path::Path;
use std::process::Command;

use levy_env::config::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-env"))
}

fn run_in(cwd: &Path, args: &[&str]) -> i32 {
    let out = bin().current_dir(cwd).args(args).output().expect("binary runs");
    let stderr = String::from_utf8_lossy(&out.stderr);
    for line in stderr.lines().filter(|l| !l.trim().is_empty()) {
        assert!(
            line.starts_with("level=") || !line.contains("msg="),
            "unstructured diagnostic: {line}"
        );
    }
    out.status.code().expect("exit code")
}

fn report_without_runtime(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"runtime_s\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn verify_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.json");
    let mut base = RunConfig::preset("scaling");
    base.experiment.n_replications = 200;
    std::fs::write(&cfg, base.to_json()).unwrap();
    let cfg = cfg.to_str().unwrap();
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let code = run_in(
            dir.path(),
            &[
                "verify",
                "scaling",
                "--config",
                cfg,
                "--seed",
                "1",
                "--output-dir",
                out,
                "--threads",
                threads,
            ],
        );
        assert_eq!(code, 0);
    }
    let a = report_without_runtime(&dir.path().join("a/report.json"));
    assert_eq!(a, report_without_runtime(&dir.path().join("b/report.json")));
    let obs = |d: &str| std::fs::read(dir.path().join(d).join("observables.csv")).unwrap();
    assert_eq!(obs("a"), obs("b"));
    let mut seeded = base.clone();
    seeded.master_seed = 1;
    assert!(a.contains(&seeded.hash()), "report does not echo the config hash");
}

#[test]
fn parameter_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(dir.path(), &["sample-env", "--alpha", "2.5", "--output-dir", "o"]),
        2
    );
    assert_eq!(run_in(dir.path(), &["simulate", "--config", "missing.json"]), 2);
    assert_eq!(
        run_in(dir.path(), &["verify", "no-such-experiment", "--output-dir", "o"]),
        2
    );
    assert_eq!(run_in(dir.path(), &["find-valley", "--r", "1.5"]), 2);
    assert_eq!(run_in(dir.path(), &["bogus"]), 2);
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    assert_eq!(run_in(dir.path(), &["sample-env", "--config", "bad.json"]), 2);
}

#[test]
fn selftest_passes_and_catches_a_corrupted_rate() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["selftest"]), 0);
    let out = bin()
        .current_dir(dir.path())
        .args(["selftest", "--mutate-rate", "1.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diffusion::chain_simulate"));
}

#[test]
fn subcommands_write_only_into_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &[&str]); 5] = [
        (&["sample-env", "--alpha", "1.5"], &["env.csv"]),
        (&["find-valley", "--c", "2"], &["env.csv", "valley.json"]),
        (&["simulate", "--horizon", "50"], &["run.json"]),
        (
            &["local-time", "--horizon", "50", "--engine", "brox"],
            &["run.json", "local_time.csv"],
        ),
        (
            &["limit-sample", "--step-h", "0.05"],
            &["tilde.csv", "profile.csv", "limit.json"],
        ),
    ];
    for (args, files) in cases {
        let mut full = args.to_vec();
        full.extend(["--output-dir", "out/nested"]);
        assert_eq!(run_in(dir.path(), &full), 0, "{args:?}");
        for f in files {
            assert!(
                dir.path().join("out/nested").join(f).is_file(),
                "{args:?} did not write {f}"
            );
        }
    }
    let top: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(top, vec![std::ffi::OsString::from("out")]);
    let valley: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/nested/valley.json")).unwrap()).unwrap();
    for key in ["c", "p", "m", "q", "side", "J_plus", "J_minus", "boundary_extended"] {
        assert!(valley.get(key).is_some(), "valley.json lacks {key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("out/nested/local_time.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,local_time"));
}

#[test]
fn config_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset("laplace");
    cfg.experiment.n_replications = 3;
    cfg.output_dir = "res".into();
    std::fs::write(dir.path().join("c.json"), cfg.to_json()).unwrap();
    assert_eq!(run_in(dir.path(), &["verify", "laplace", "--config", "c.json"]), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res/report.json")).unwrap()).unwrap();
    assert_eq!(report["config_hash"], cfg.hash());
    assert_eq!(report["experiment_id"], "laplace");
    assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}
