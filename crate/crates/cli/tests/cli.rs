use oqt::io::config::{DesignSource, PriorSource, TruthSource};
use oqt::io::{parse_config, Mode};
use oqt::protocols::ramsey::{ramsey_prior, RamseyTruth};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ramsey.json")
}

fn oqt(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oqt"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("OQT_THREADS", t),
        None => cmd.env_remove("OQT_THREADS"),
    };
    cmd.output().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn shipped_ramsey_config_matches_the_reference_box() {
    let c = parse_config(&example()).unwrap();
    assert_eq!(c.mode, Mode::Infer);
    assert_eq!(c.prior, Some(PriorSource::Inline(ramsey_prior())));
    assert_eq!(
        c.design,
        Some(DesignSource::Ramsey {
            train: [2, 49],
            test: [50, 100],
            shots: 500
        })
    );
    let truth = RamseyTruth {
        omega: 0.346754,
        epsilon: -0.003824,
        state_depolarization: 0.038311,
        effect_depolarization: 0.023933,
    };
    assert_eq!(c.truth, Some(TruthSource::Ramsey(truth)));
    assert_eq!(truth, RamseyTruth::default());
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let config = example();
    for (dir, threads) in dirs.iter().zip([Some("1"), Some("4"), None]) {
        let out = oqt(
            &[
                "infer",
                "--config",
                config.to_str().unwrap(),
                "--out",
                dir.path().to_str().unwrap(),
                "--particles",
                "200",
            ],
            threads,
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let listed = String::from_utf8(out.stdout).unwrap();
        assert!(listed.lines().any(|l| l.ends_with("ramsey.json")));
    }
    let reference = files(dirs[0].path());
    assert!(reference.len() >= 7);
    for d in &dirs[1..] {
        assert_eq!(files(d.path()), reference);
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dirs[0].path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["inference"]["particles"], 200);
    assert!(summary["summary"]["ramsey"]["omega_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_then_infer_from_the_written_data() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let config = example();
    let out = oqt(
        &["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap(), "--seed", "9"],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(sim.join("data_training.txt").exists() && sim.join("simulation.csv").exists());

    let data = sim.join("data_training.txt");
    let cfg = dir.path().join("infer.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"version": 1, "seed": 9, "mode": "infer", "particles": 100,
                "prior": {{"builtin": "ramsey"}},
                "design": {{"ramsey": {{"train": [2, 49], "test": [50, 100], "shots": 500}}}},
                "data": {:?}}}"#,
            data.display().to_string()
        ),
    )
    .unwrap();
    let post = dir.path().join("post");
    let out = oqt(&["infer", "--config", cfg.to_str().unwrap(), "--out", post.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(post.join("posterior.json").exists());
}

#[test]
fn rb_subcommand_writes_a_decay_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rb.json");
    std::fs::write(
        &cfg,
        r#"{"version": 1, "seed": 5, "mode": "rb", "particles": 100,
            "design": {"rb": {"training": 10, "testing_count": 8, "shots": 50}},
            "truth": {"prior_sample": 0}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = oqt(&["rb", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("rb_fit.json")).unwrap()).unwrap();
    assert!(fit["intervals"]["fidelity"]["lower"].as_f64().is_some());
    assert!(fit["posterior_fit"]["p"].as_f64().is_some());
}

#[test]
fn failures_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"version": 1, "seed": 1, "mode": "infer", "particles": 1}"#).unwrap();
    let out = oqt(&["infer", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("particles"));

    let config = example();
    let out = oqt(&["infer", "--config", config.to_str().unwrap(), "--particles", "1"], None);
    assert_eq!(out.status.code(), Some(2));

    let data = dir.path().join("d.txt");
    std::fs::write(&data, "() 10 5\n").unwrap();
    std::fs::write(
        &cfg,
        format!(
            r#"{{"version": 1, "seed": 1, "mode": "infer", "particles": 4, "output_dir": {:?},
                "prior": {{"inline": {{
                    "state": [{{"kind": "exact", "ideal": "zero"}}],
                    "effect": [{{"kind": "exact", "ideal": "zero"}}],
                    "gates": {{"Rx": [{{"kind": "exact", "ideal": "rx90"}}], "Ry": [{{"kind": "exact", "ideal": "ry90"}}]}},
                    "fiducials": [[], ["Rx"], ["Ry"], ["Rx", "Rx"]]}}}},
                "design": {{"inline": {{"buttons": ["Rx", "Ry"], "fiducials": [], "training": [], "testing": []}}}},
                "data": {:?}}}"#,
            dir.path().join("out").display().to_string(),
            data.display().to_string()
        ),
    )
    .unwrap();
    let out = oqt(&["infer", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero"));

    let out = oqt(&["infer", "--config", "/nonexistent.json"], None);
    assert!(!out.status.success());
    let out = oqt(&["infer"], None);
    assert!(!out.status.success());
}
