use std::path::Path;
use std::process::{Command, Output};

fn goe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goe")).args(args).output().expect("spawn goe")
}

fn ok(args: &[&str]) -> String {
    let out = goe(args);
    assert!(out.status.success(), "goe {}\n{}", args.join(" "), String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn fails(args: &[&str]) -> String {
    let out = goe(args);
    assert!(!out.status.success(), "goe {} unexpectedly succeeded", args.join(" "));
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn planted(root: &Path) -> String {
    let dir = root.join("planted");
    ok(&["prepare", dir.to_str().unwrap(), "--planted"]);
    dir.to_str().unwrap().to_owned()
}

#[test]
fn prepare_writes_a_loadable_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = planted(tmp.path());
    for f in ["manifest.json", "nodes.jsonl", "edges.tsv", "embeddings.bin", "experiment.json", "text_embeddings.jsonl"] {
        assert!(Path::new(&dir).join(f).exists(), "{f} missing");
    }
    // prepare without --planted validates an existing directory
    let out = ok(&["prepare", &dir]);
    assert!(out.contains("600"), "{out}");
}

#[test]
fn annotate_then_train_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = planted(tmp.path());
    let cache = tmp.path().join("cache.jsonl");
    ok(&["annotate", &dir, "--mock", "--cache", cache.to_str().unwrap(), "--seed", "0,1", "--sample", "100"]);
    assert!(Path::new(&dir).join("pseudo_ood/seed-0.json").exists());
    assert!(Path::new(&dir).join("pseudo_ood/seed-1.json").exists());
    let lines = std::fs::read_to_string(&cache).unwrap().lines().count();
    assert!(lines > 0 && lines <= 200, "{lines} cache lines");

    let run = tmp.path().join("run");
    let out = ok(&["train", &dir, "--method", "goe_identifier", "--seed", "0,1", "--out", run.to_str().unwrap()]);
    assert!(out.contains("goe_identifier"), "{out}");
    for f in ["scores.csv", "predictions.csv", "metrics.json", "params.bin", "split.json"] {
        assert!(run.join("seed-1").join(f).exists(), "{f} missing");
    }
    assert!(run.join("report.json").exists() && run.join("results.md").exists());

    let out = ok(&["eval", run.to_str().unwrap()]);
    assert!(out.contains("seed-0:") && out.contains("seed-1:"), "{out}");

    ok(&["export-scores", run.to_str().unwrap(), "--bins", "10"]);
    let hist = std::fs::read_to_string(run.join("seed-0/hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 11, "{hist}");
}

#[test]
fn eval_detects_tampered_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = planted(tmp.path());
    let run = tmp.path().join("run");
    ok(&["train", &dir, "--method", "energy", "--seed", "0", "--out", run.to_str().unwrap()]);
    let scores = run.join("seed-0/scores.csv");
    let text = std::fs::read_to_string(&scores).unwrap();
    // flip the sign of every score: AUROC becomes 1 - AUROC
    let flipped: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                return l.to_owned();
            }
            let mut f: Vec<String> = l.split(',').map(str::to_owned).collect();
            let s: f64 = f.last().unwrap().parse().unwrap();
            *f.last_mut().unwrap() = (-s).to_string();
            f.join(",")
        })
        .collect();
    std::fs::write(&scores, flipped.join("\n") + "\n").unwrap();
    let err = fails(&["eval", run.to_str().unwrap()]);
    assert!(err.contains("differ"), "{err}");
}

#[test]
fn compare_writes_a_results_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = planted(tmp.path());
    let out = tmp.path().join("cmp");
    ok(&["compare", &dir, "--methods", "msp,energy", "--seed", "0", "--out", out.to_str().unwrap()]);
    let table = std::fs::read_to_string(out.join("results.md")).unwrap();
    assert!(table.contains("msp") && table.contains("energy"), "{table}");
    assert!(out.join("msp/report.json").exists());
}

#[test]
fn generate_with_mock_writes_nodes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = planted(tmp.path());
    ok(&["generate", &dir, "--mock", "--per-class", "4"]);
    let text = std::fs::read_to_string(Path::new(&dir).join("generated.jsonl")).unwrap();
    // one OOD category in the planted data
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        let node: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(node["category"], "Quantum Computing");
        assert!(!node["title"].as_str().unwrap().is_empty());
    }
}

#[test]
fn user_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let err = fails(&["train", missing.to_str().unwrap(), "--method", "energy"]);
    assert!(err.contains("nope"), "{err}");

    let err = fails(&["train", ".", "--method", "not_a_method"]);
    assert!(err.contains("not_a_method"), "{err}");

    let dir = planted(tmp.path());
    let replay = tmp.path().join("missing.jsonl");
    let err = fails(&["annotate", &dir, "--replay", replay.to_str().unwrap(), "--seed", "0"]);
    assert!(err.contains("missing.jsonl"), "{err}");

    // --mock and --replay are exclusive
    fails(&["annotate", &dir, "--mock", "--replay", replay.to_str().unwrap()]);
}
