use lvfront::config::{load, Tag};
use lvfront::experiments::{run, Operation};
use lvfront::report::Status;
use std::path::PathBuf;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn documents() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_documents_load_and_validate() {
    let docs = documents();
    assert!(docs.len() >= 8, "{docs:?}");
    for p in docs {
        let cfg = load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        cfg.validate().unwrap();
        if cfg.experiment.tag != Tag::SignCriteria {
            cfg.system().unwrap();
        }
    }
}

#[test]
fn every_tagged_verb_has_a_document() {
    let tags: Vec<Tag> = documents().iter().map(|p| load(p).unwrap().experiment.tag).collect();
    for op in [
        Operation::Kinetics,
        Operation::Speed,
        Operation::LimitsSmall,
        Operation::LimitsLarge,
        Operation::SignCriteria,
        Operation::SignChange,
        Operation::Residuals,
    ] {
        assert!(tags.contains(&op.tag().unwrap()), "{}", op.verb());
    }
}

#[test]
fn cheap_verbs_pass_on_shipped_systems() {
    for p in documents() {
        let cfg = load(&p).unwrap();
        if cfg.experiment.tag == Tag::SignCriteria {
            continue;
        }
        for op in [Operation::CheckAssumptions, Operation::Logistic] {
            let rep = run(op, &cfg);
            assert_eq!(rep.status, Status::Pass, "{} {}: {:?}", p.display(), op.verb(), rep.checks);
        }
    }
}

#[test]
fn include_resolution_is_relative_and_overridable() {
    let tmp = tempfile::tempdir().unwrap();
    let sub = tmp.path().join("fam");
    std::fs::create_dir(&sub).unwrap();
    std::fs::write(
        sub.join("base.toml"),
        "[system]\npreset = \"example\"\nlo = 3.5\nhi = 12.0\n\n[speed]\nh = 0.2\nhalf_width = 30.0\n",
    )
    .unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        "include = \"fam/base.toml\"\n\n[experiment]\ntag = \"speed-sweep\"\nperiods = [1.0]\n\n[speed]\nh = 0.05\n",
    )
    .unwrap();
    let cfg = load(&tmp.path().join("run.toml")).unwrap();
    assert_eq!(cfg.speed.h, 0.05);
    assert_eq!(cfg.speed.half_width, 30.0);
    assert!((cfg.system().unwrap().r2.mean() - 19.0 / 3.0).abs() < 1e-12);
}

#[test]
fn include_cycles_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("a.toml"), "include = \"b.toml\"\n").unwrap();
    std::fs::write(tmp.path().join("b.toml"), "include = \"a.toml\"\n").unwrap();
    assert!(load(&tmp.path().join("a.toml")).is_err());
}
