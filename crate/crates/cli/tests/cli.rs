use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn asl(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asl"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("ASL_INJECT_FAULT")
        .env_remove("ASL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn env_report_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = asl(dir.path(), &["env-report"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("env_report.json")).unwrap()).unwrap();
    assert_eq!(report["states"], 4352);
    assert_eq!(report["goals"], 32);
    assert_eq!(report["valid_pairs"], 120960);
    assert_eq!(report["unreachable_pairs"], 0);
    assert!(dir.path().join("config.json").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let args = ["--grid-size", "3", "--tasks", "20", "--rollouts", "5", "--library-size", "12"];
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        for cmd in ["baselines", "library", "line1d"] {
            let mut a = args.to_vec();
            a.extend(["--threads", threads, cmd]);
            let o = asl(dir.path(), &a);
            assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let files: Vec<Vec<u8>> = ["baselines.csv", "library.csv", "line1d.csv", "config.json"]
            .iter()
            .map(|f| fs::read(dir.path().join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0][1].clone()).unwrap();
    assert!(text.starts_with("# schema=asl-metrics/1 config="));
    assert_eq!(text.lines().count(), 2 + 12);
}

#[test]
fn library_resumes_and_refuses_other_configs() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--grid-size", "3", "--tasks", "10", "--rollouts", "4", "--library-size", "8"];
    let run = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend_from_slice(extra);
        a.push("library");
        asl(dir.path(), &a)
    };
    assert_eq!(code(&run(&[])), 0);
    let path = dir.path().join("library.csv");
    let full = fs::read_to_string(&path).unwrap();

    // Drop the last row and leave half of it behind, as a killed run would.
    let cut = full.trim_end().rfind('\n').unwrap() + 1;
    fs::write(&path, &full[..cut + 10]).unwrap();
    assert_eq!(code(&run(&[])), 0);
    assert_eq!(fs::read_to_string(&path).unwrap(), full);

    let o = run(&["--seed", "7"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
    assert_eq!(fs::read_to_string(&path).unwrap(), full);
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--grid-size", "3", "--library-size", "10", "--actor-specs", "2", "verify"];
    let o = asl(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));

    let o = Command::new(env!("CARGO_BIN_EXE_asl"))
        .arg("--out-dir")
        .arg(dir.path())
        .args(args)
        .env("ASL_INJECT_FAULT", "distance")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["fault"], "distance");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&asl(dir.path(), &["--grid-size", "1", "env-report"])), 2);
    assert_eq!(code(&asl(dir.path(), &["--tasks", "0", "rollout"])), 2);
    assert_eq!(code(&asl(dir.path(), &["no-such-command"])), 2);
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = asl(&blocker.join("out"), &["line1d"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
