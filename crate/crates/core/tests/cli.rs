//! End-to-end checks of the command-line interface: subcommands, file
//! outputs, and the 0/1/2 exit-code contract.

use std::fs;
use std::path::Path;
use std::process::Command;

fn sparesim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparesim"))
}

fn synth_bundle(dir: &Path, count: usize, seed: u64) {
    let status = sparesim()
        .args([
            "synth",
            "--out",
            dir.to_str().unwrap(),
            "--count",
            &count.to_string(),
            "--seed",
            &seed.to_string(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn synth_then_classify_then_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    synth_bundle(dir.path(), 25, 7);
    for name in ["items.csv", "lead_times.csv", "ahp.json", "config.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }

    let cls_out = dir.path().join("cls");
    let status = sparesim()
        .args([
            "classify",
            "--config",
            dir.path().join("config.json").to_str().unwrap(),
            "--out",
            cls_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let classification = fs::read_to_string(cls_out.join("classification.csv")).unwrap();
    assert!(classification.starts_with("id,R,K,G,rank,cumulative_share,class\n"));
    assert_eq!(classification.lines().count(), 26);
    let weights = fs::read_to_string(cls_out.join("weights.csv")).unwrap();
    assert!(weights.starts_with("criterion,weight\ncritical_degree,"));

    let out = dir.path().join("full");
    let status = sparesim()
        .args([
            "pipeline",
            "--config",
            dir.path().join("config.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    // tiny populations may legitimately include a stagnant class-A item
    // recorded as a failure (exit 2); both are completed runs
    assert!(matches!(status.code(), Some(0) | Some(2)));
    for name in [
        "classification.csv",
        "fits.csv",
        "policies.csv",
        "curves.csv",
        "manifest.json",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["item_counts"]["total"], 25);
}

#[test]
fn fit_stops_before_optimization() {
    let dir = tempfile::tempdir().unwrap();
    synth_bundle(dir.path(), 15, 9);
    let out = dir.path().join("fit");
    let status = sparesim()
        .args([
            "fit",
            "--config",
            dir.path().join("config.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(matches!(status.code(), Some(0) | Some(2)));
    assert!(out.join("fits.csv").exists());
    assert!(out.join("reports.csv").exists());
    assert!(!out.join("policies.csv").exists(), "optimization must not run");
    assert!(!out.join("curves.csv").exists());
    let fits = fs::read_to_string(out.join("fits.csv")).unwrap();
    assert!(fits.starts_with("item_id,family,params_json,log_likelihood,bic,selected\n"));
    assert!(fits.lines().any(|l| l.ends_with(",true")));
}

#[test]
fn missing_config_exits_one() {
    let status = sparesim()
        .args(["pipeline", "--config", "/nonexistent/config.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn short_history_item_yields_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    synth_bundle(dir.path(), 8, 3);
    // Truncate every item to two years of history: class-A fits must fail
    // and be recorded, completing with exit code 2.
    let items = fs::read_to_string(dir.path().join("items.csv")).unwrap();
    let truncated: Vec<String> = items
        .lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields[..9].join(",")
        })
        .collect();
    fs::write(dir.path().join("items.csv"), truncated.join("\n") + "\n").unwrap();

    let out = dir.path().join("out");
    let status = sparesim()
        .args([
            "pipeline",
            "--config",
            dir.path().join("config.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let failures = manifest["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert!(failures.iter().all(|f| f["stage"] == "fit"));
}

#[test]
fn simulate_subcommand_writes_outcome_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    synth_bundle(dir.path(), 6, 11);
    let mut config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    config["simulate"] = serde_json::json!({
        "item_id": "item0000",
        "rop": 20,
        "roq": 40,
        "replications": 5,
        "trace": true
    });
    fs::write(
        dir.path().join("config.json"),
        serde_json::to_string_pretty(&config).unwrap(),
    )
    .unwrap();

    let out = dir.path().join("sim");
    let status = sparesim()
        .args([
            "simulate",
            "--config",
            dir.path().join("config.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let outcome = fs::read_to_string(out.join("outcome.csv")).unwrap();
    assert!(outcome.starts_with("item_id,rop,roq,replications,mean_total_cost"));
    assert!(outcome.contains("\nitem0000,20,40,5,"));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t_month,event,qty,on_hand,on_order,cost_delta\n"));
}

#[test]
fn service_curve_svg_flag_renders_charts() {
    let dir = tempfile::tempdir().unwrap();
    synth_bundle(dir.path(), 10, 5);
    let out = dir.path().join("svc");
    let status = sparesim()
        .args([
            "service-curve",
            "--config",
            dir.path().join("config.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--svg",
        ])
        .status()
        .unwrap();
    assert!(matches!(status.code(), Some(0) | Some(2)));
    assert!(out.join("curves.csv").exists());
    let svgs: Vec<_> = fs::read_dir(out.join("curves"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(!svgs.is_empty());
    let chart = fs::read_to_string(&svgs[0]).unwrap();
    assert!(chart.starts_with("<svg"));
    assert!(chart.contains("<path"));
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    synth_bundle(dir.path(), 10, 5);
    let run = |seed: &str, out: &Path| {
        let status = sparesim()
            .args([
                "optimize",
                "--config",
                dir.path().join("config.json").to_str().unwrap(),
                "--seed",
                seed,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(matches!(status.code(), Some(0) | Some(2)));
        fs::read_to_string(out.join("policies.csv")).unwrap()
    };
    let a = run("5", &dir.path().join("a"));
    let b = run("5", &dir.path().join("b"));
    let c = run("99", &dir.path().join("c"));
    assert_eq!(a, b, "same seed must reproduce");
    assert!(a.starts_with("item_id,rop,roq,mean_cost,ci_halfwidth,reps\n"));
    // a different seed changes the simulated costs (one line per item)
    assert_ne!(a, c, "different seeds should not collide");
}
