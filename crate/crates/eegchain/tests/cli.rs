use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eegchain(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eegchain")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_sine(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("small.toml");
    fs::write(&config, "seed = 11\n[sine]\nfrequencies_hz = [20.0, 70.0]\namplitudes_uv = [10.0]\nduration_s = 6.0\n")
        .unwrap();
    config
}

#[test]
fn sine_sweep_writes_and_reanalyses() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_sine(tmp.path());
    let run = eegchain(&["sine-sweep", "--config", config.to_str().unwrap(), "--out", "out"], tmp.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let out = tmp.path().join("out");
    assert!(out.join("sine_report.csv").is_file());
    assert_eq!(fs::read_dir(out.join("sine")).unwrap().count(), 2 * 3);

    let analyzed = eegchain(&["analyze", "out/sine"], tmp.path());
    assert!(analyzed.status.success());
    assert_eq!(stdout(&analyzed), stdout(&run));

    let report = eegchain(&["report", "--out", "out"], tmp.path());
    assert!(report.status.success());
    assert_eq!(stdout(&report), stdout(&run));
}

#[test]
fn seed_flag_overrides_config_and_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_sine(tmp.path());
    let c = config.to_str().unwrap();
    let a = eegchain(&["sine-sweep", "--config", c, "--preset", "safe", "--out", "a"], tmp.path());
    let b = eegchain(&["sine-sweep", "--config", c, "--preset", "safe", "--seed", "12", "--out", "b"], tmp.path());
    assert!(a.status.success() && b.status.success());
    let read = |d: &str| fs::read(tmp.path().join(d).join("sine_report.csv")).unwrap();
    assert_ne!(read("a"), read("b"));
    assert!(!tmp.path().join("a/sine/reference_00.csv").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |o: Output| o.status.code().unwrap();

    assert_eq!(code(eegchain(&["sine-sweep", "--out", "o"], tmp.path())), 3, "missing seed");
    fs::write(tmp.path().join("bad.toml"), "seed = 1\n[sine]\nduration_s = -1.0\n").unwrap();
    assert_eq!(code(eegchain(&["sine-sweep", "--config", "bad.toml"], tmp.path())), 3);
    fs::write(tmp.path().join("typo.toml"), "seed = 1\nsead = 2\n").unwrap();
    assert_eq!(code(eegchain(&["vep", "--config", "typo.toml"], tmp.path())), 3);

    fs::create_dir(tmp.path().join("empty")).unwrap();
    assert_eq!(code(eegchain(&["analyze", "empty"], tmp.path())), 4);
    assert_eq!(code(eegchain(&["analyze", "missing"], tmp.path())), 4);
    fs::write(tmp.path().join("empty/x.csv"), "# safe-csv-9\nframe_index\n").unwrap();
    let bad = eegchain(&["analyze", "empty"], tmp.path());
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("x.csv"));

    assert_eq!(code(eegchain(&["frobnicate"], tmp.path())), 2);
}
