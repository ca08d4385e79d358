use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn novelty_eval(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_novelty-eval"))
        .current_dir(dir)
        .env_remove("NOVELTY_EVAL_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = novelty_eval(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn files_under(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn gen_data_counts_and_repeats_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-data", "--n-per-class", "100", "--seed", "7", "--out", "a"]);
    ok(dir, &["gen-data", "--n-per-class", "100", "--seed", "7", "--out", "b"]);
    let a = files_under(&dir.join("a"));
    assert_eq!(a.iter().filter(|(p, _)| p.extension().is_some_and(|e| e == "ppm")).count(), 300);
    let factors = std::fs::read_to_string(dir.join("a/factors.csv")).unwrap();
    assert_eq!(factors.lines().count(), 301);
    assert_eq!(a, files_under(&dir.join("b")));

    ok(dir, &["gen-data", "--n-per-class", "10", "--exclude-class", "green", "--out", "c"]);
    let factors = std::fs::read_to_string(dir.join("c/factors.csv")).unwrap();
    assert_eq!(factors.lines().count(), 21);
    assert!(!factors.contains(",green,"));
}

#[test]
fn seed_falls_back_to_config_then_env() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cfg.json"), r#"{"seed": 5, "data": {"n_per_class": 4}}"#).unwrap();
    ok(dir, &["gen-data", "--seed", "5", "--n-per-class", "4", "--out", "flag"]);
    ok(dir, &["--config", "cfg.json", "gen-data", "--out", "config"]);
    let env = Command::new(env!("CARGO_BIN_EXE_novelty-eval"))
        .current_dir(dir)
        .env("NOVELTY_EVAL_SEED", "5")
        .args(["gen-data", "--n-per-class", "4", "--out", "env"])
        .output()
        .unwrap();
    assert!(env.status.success());
    // The flag overrides the config's seed.
    ok(dir, &["--config", "cfg.json", "gen-data", "--seed", "6", "--out", "other"]);

    let flag = files_under(&dir.join("flag"));
    assert_eq!(flag, files_under(&dir.join("config")));
    assert_eq!(flag, files_under(&dir.join("env")));
    assert_ne!(flag, files_under(&dir.join("other")));
}

#[test]
fn invalid_inputs_exit_2_with_a_named_cause() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = novelty_eval(dir, &["encode", "--params", "nope.json", "--data", "d", "--out", "z.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    let out = novelty_eval(dir, &["--json", "gen-data", "--n-per-class", "0", "--out", "d"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], 2);
    assert!(err["error"]["message"].as_str().unwrap().contains("n_per_class"));

    std::fs::write(dir.join("bad.json"), r#"{"seeed": 1}"#).unwrap();
    let out = novelty_eval(dir, &["--config", "bad.json", "gen-data", "--out", "d"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_names_the_first_orphan_id() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-data", "--n-per-class", "4", "--seed", "1", "--out", "d"]);
    // Scores for every object except 000005, plus one unknown id.
    let mut scores = String::from("id,raw,novelty\n");
    for i in 0..12 {
        if i != 5 {
            scores += &format!("{i:06},{i},{}\n", i as f64 / 11.0);
        }
    }
    std::fs::write(dir.join("missing.csv"), &scores).unwrap();
    let out = novelty_eval(
        dir,
        &["evaluate", "--data", "d", "--detector", "stub:noise=0.01", "--novelty", "missing.csv", "--out", "e"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`000005`"));

    scores += "000005,5,0.5\nextra,1,0.1\n";
    std::fs::write(dir.join("extra.csv"), &scores).unwrap();
    let out = novelty_eval(
        dir,
        &["evaluate", "--data", "d", "--detector", "stub:noise=0.01", "--novelty", "extra.csv", "--out", "e"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`extra`"));
}

#[test]
fn small_chain_produces_bounded_report_and_benchmark_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["--seed", "1", "gen-data", "--n-per-class", "40", "--out", "train"]);
    ok(dir, &["--seed", "2", "gen-data", "--n-per-class", "20", "--out", "test"]);
    ok(
        dir,
        &["--seed", "3", "train-vae", "--data", "train", "--epochs", "5", "--batch-size", "16", "--out", "p.json"],
    );
    ok(dir, &["encode", "--params", "p.json", "--data", "train", "--out", "ztr.csv"]);
    ok(dir, &["encode", "--params", "p.json", "--data", "test", "--out", "zte.csv"]);
    ok(dir, &["fit-scorer", "--latent", "ztr.csv", "--scorer", "lof", "--k", "10", "--out", "lof.json"]);
    ok(dir, &["score", "--model", "lof.json", "--latent", "zte.csv", "--out", "s.csv"]);
    ok(dir, &["detect", "--data", "test", "--detector", "stub:noise=0.02,drop=0.1", "--out", "det.jsonl"]);
    ok(
        dir,
        &["evaluate", "--data", "test", "--detections", "det.jsonl", "--novelty", "s.csv", "--out", "eval"],
    );
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("eval/report.json")).unwrap()).unwrap();
    let g = report["g_score"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&g));
    assert_eq!(report["n_objects"], 60);
    assert_eq!(std::fs::read_to_string(dir.join("eval/curve.csv")).unwrap().lines().count(), 11);

    ok(
        dir,
        &[
            "benchmark", "--train-data", "train", "--test-data", "test", "--params", "p.json",
            "--scorers", "kde,lof", "--repeats", "3", "--test-size", "40", "--out", "bench.csv",
        ],
    );
    let csv = std::fs::read_to_string(dir.join("bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scorer,class,fraction,mean_auc,std_auc,repeats");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6);
        let std: f64 = cols[4].parse().unwrap();
        assert!(std >= 0.0);
        assert_eq!(cols[5], "3");
    }

    ok(
        dir,
        &[
            "interpret", "--params", "p.json", "--train-latent", "ztr.csv", "--latent", "zte.csv",
            "--novelty", "s.csv", "--n-dims", "2", "--steps", "5", "--mi-bins", "4", "--out", "interp",
        ],
    );
    let pc = std::fs::read_to_string(dir.join("interp/parallel_coordinates.csv")).unwrap();
    let scores = std::fs::read_to_string(dir.join("s.csv")).unwrap();
    assert_eq!(pc.lines().count(), 61);
    for (p, s) in pc.lines().skip(1).zip(scores.lines().skip(1)) {
        let p: Vec<&str> = p.split(',').collect();
        let s: Vec<&str> = s.split(',').collect();
        assert_eq!(p.len(), 4);
        assert_eq!((p[0], p[1]), (s[0], s[2]));
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("interp/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().unwrap().len(), 2);
}
