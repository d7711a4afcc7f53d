use std::fs;
use std::path::Path;
use std::process::Command;

fn lvfront(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lvfront"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const FAMILY: &str = "[system]\npreset = \"example\"\nlo = 3.5\nhi = 12.0\ndelta = 0.02\n";

#[test]
fn passing_run_writes_summary_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("family.toml"), FAMILY).unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "include = [\"family.toml\"]\n[experiment]\ntag = \"kinetics-report\"\n",
    )
    .unwrap();
    let (code, text) = lvfront(&["check-assumptions", "--config", "run.toml", "--out", "a"], dir.path());
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("PASS mean-value bistability"));
    let s = summary(&dir.path().join("a"));
    assert_eq!(s["schema"], "lvfront-report/1");
    assert_eq!(s["status"], "pass");
    assert_eq!(s["config"]["system"]["hi"], 12.0);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert!(dir.path().join("a/means.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // k1 too small for the mean-value condition
    fs::write(
        p.join("weak.toml"),
        "[experiment]\ntag = \"kinetics-report\"\n[system]\nperiod = 1.0\nd1 = 1.0\nd2 = 1.0\nr1 = 1.0\nr2 = 1.0\n\
         a1 = 1.0\na2 = 1.0\nk1 = 0.5\nk2 = 2.0\n",
    )
    .unwrap();
    let (code, _) = lvfront(&["check-assumptions", "--config", "weak.toml", "--out", "w"], p);
    assert_eq!(code, 2);
    assert_eq!(summary(&p.join("w"))["status"], "fail");

    let (code, text) = lvfront(&["speed", "--config", "weak.toml", "--out", "x"], p);
    assert_eq!(code, 3, "{text}");
    assert!(summary(&p.join("x"))["error"].as_str().unwrap().contains("speed-sweep"));

    let (code, _) = lvfront(&["speed", "--config", "missing.toml"], p);
    assert_eq!(code, 3);
    let (code, _) = lvfront(&["check-assumptions", "--config", "weak.toml", "--grid", "q=3"], p);
    assert_eq!(code, 3);
}

#[test]
fn sign_criteria_rejects_unequal_diffusion() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("s.toml"),
        "[experiment]\ntag = \"sign-criteria\"\n[[cases]]\nname = \"bad\"\nkind = \"i\"\n[cases.system]\n\
         period = 1.0\nd1 = 1.0\nd2 = 2.0\nr1 = 1.2\nr2 = 1.0\na1 = 1.0\na2 = 1.0\nk1 = 2.0\nk2 = 2.5\n",
    )
    .unwrap();
    let (code, text) = lvfront(&["sign-criteria", "--config", "s.toml", "--out", "o"], dir.path());
    assert_eq!(code, 3, "{text}");
    assert!(text.contains("d1 = d2"));
}

#[test]
fn single_thread_runs_are_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("family.toml"), FAMILY).unwrap();
    fs::write(
        p.join("sim.toml"),
        "include = [\"family.toml\"]\n[experiment]\ntag = \"speed-sweep\"\nperiods = [1.0]\nhorizon = 3.0\n\
         [speed]\nhalf_width = 10.0\nh = 0.2\n",
    )
    .unwrap();
    for out in ["r1", "r2"] {
        let (code, text) = lvfront(&["simulate", "--config", "sim.toml", "--out", out, "--threads", "1"], p);
        assert_eq!(code, 0, "{text}");
    }
    for f in ["summary.json", "profiles.csv", "front.csv"] {
        assert_eq!(fs::read(p.join("r1").join(f)).unwrap(), fs::read(p.join("r2").join(f)).unwrap(), "{f}");
    }
    let (_, text) = lvfront(&["simulate", "--config", "sim.toml", "--out", "r3", "--grid", "h=0.25"], p);
    assert!(text.contains("status: Pass"));
    assert_ne!(summary(&p.join("r1"))["config_hash"], summary(&p.join("r3"))["config_hash"]);
}
