//! End-to-end tests of the `bgpscope` binary: exit codes, artifact
//! production, and idempotence of re-runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bgpscope"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("bgpscope-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path) -> PathBuf {
    let config = format!(
        r#"[dataset]
id = "cli-test"
events = "{events}"
bin_width = 60

[pipeline]
fit_range = [120, 1199]
anomaly_interval = [1450, 1699]
correlation_window = 60
alpha = 0.05

[selection]
k = 5
n_base = 4
n_corr = 4

[output]
dir = "{out}"
"#,
        events = dir.join("events.csv").display(),
        out = dir.join("out").display(),
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage") || text.contains("usage"), "{text}");

    let out = run(&["features", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_upstream_artifact_exits_two_with_hint() {
    let dir = workdir("missing-artifact");
    let config = write_config(&dir);
    // No events yet: features should name the missing input.
    let out = run(&["features", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("ingest or synth"), "{text}");

    // Later stages name their own upstream.
    let out = run(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("correlate"), "{text}");
}

#[test]
fn invalid_config_exits_one() {
    let dir = workdir("invalid-config");
    let bad = dir.join("bad.toml");
    // Fit range overlapping the anomaly interval must be rejected.
    std::fs::write(
        &bad,
        r#"[dataset]
id = "x"
events = "/nonexistent"
bin_width = 60

[pipeline]
fit_range = [0, 1500]
anomaly_interval = [1450, 1699]

[output]
dir = "/tmp/never"
"#,
    )
    .unwrap();
    let out = run(&["features", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("overlaps"), "{text}");
}

#[test]
fn pipeline_chains_through_artifacts_and_is_idempotent() {
    let dir = workdir("pipeline");
    let config = write_config(&dir);
    let events = dir.join("events.csv");

    let out = run(&[
        "synth",
        "--preset",
        "slammer-like",
        "--output",
        events.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    for stage in ["features", "correlate", "select", "train", "detect", "report"] {
        let out = run(&[stage, "--config", config.to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    // The verdicts artifact exists and covers every bin.
    let verdicts = std::fs::read_to_string(dir.join("out/verdicts.csv")).unwrap();
    assert_eq!(verdicts.lines().count() - 1, 2000);

    // Re-running stages on identical inputs reproduces identical artifacts.
    let snapshot: Vec<(PathBuf, Vec<u8>)> = ["features.csv", "augmented.csv", "selection.csv", "model.txt", "verdicts.csv"]
        .iter()
        .map(|n| {
            let p = dir.join("out").join(n);
            let data = std::fs::read(&p).unwrap();
            (p, data)
        })
        .collect();
    for stage in ["features", "correlate", "select", "train", "detect", "report"] {
        let out = run(&[stage, "--config", config.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    // Stage re-runs are byte-identical, and report touched nothing upstream.
    for (path, before) in snapshot {
        let after = std::fs::read(&path).unwrap();
        assert_eq!(before, after, "{} changed across identical re-runs", path.display());
    }
}

#[test]
fn ingest_round_trips_an_event_log() {
    let dir = workdir("ingest");
    let events = dir.join("events.csv");
    let out = run(&[
        "synth",
        "--preset",
        "codered-like",
        "--output",
        events.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let reingested = dir.join("reingested.csv");
    let out = run(&[
        "ingest",
        "--input",
        events.to_str().unwrap(),
        "--output",
        reingested.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(&events).unwrap(),
        std::fs::read(&reingested).unwrap()
    );
}

#[test]
fn repro_tables_prints_corrected_distance_and_groups() {
    let out = run(&["repro-tables"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("109"), "{text}");
    assert!(text.contains("Nimda, Slammer, Codered"));
    assert!(text.contains("Eastcoast, Florida, Katrina"));
    // k = 3 isolates Eastcoast.
    assert!(text.contains("group 2 = Eastcoast"));
}

#[test]
fn evaluate_and_cluster_over_two_presets() {
    let dir = workdir("evaluate");
    let mut entries = String::new();
    for preset in ["nimda-like", "eastcoast-like"] {
        let pdir = dir.join(preset);
        std::fs::create_dir_all(&pdir).unwrap();
        let events = pdir.join("events.csv");
        let out = run(&["synth", "--preset", preset, "--output", events.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));

        let interval = if preset == "nimda-like" { "[1400, 1799]" } else { "[1400, 1699]" };
        let config_text = format!(
            "[dataset]\nid = \"{preset}\"\nevents = \"{}\"\nbin_width = 60\n\n\
             [pipeline]\nfit_range = [120, 1199]\nanomaly_interval = {interval}\n\n\
             [output]\ndir = \"{}\"\n",
            events.display(),
            pdir.join("out").display(),
        );
        let config = pdir.join("config.toml");
        std::fs::write(&config, config_text).unwrap();
        for stage in ["features", "correlate", "select", "train"] {
            let out = run(&[stage, "--config", config.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        }
        entries.push_str(&format!(
            "[[event]]\nname = \"{preset}\"\nfeatures = \"{}\"\nmodel = \"{}\"\nfit_range = [120, 1199]\n\n",
            pdir.join("out/features.csv").display(),
            pdir.join("out/model.txt").display(),
        ));
    }
    let manifest = dir.join("manifest.toml");
    std::fs::write(&manifest, format!("seed = 42\n\n{entries}")).unwrap();

    let eval_out = dir.join("eval");
    let out = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(eval_out.join("am.csv").exists());
    assert!(eval_out.join("dist.csv").exists());

    let clusters = eval_out.join("clusters.txt");
    let out = run(&[
        "cluster",
        "--dist",
        eval_out.join("dist.csv").to_str().unwrap(),
        "--k",
        "2",
        "--output",
        clusters.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&clusters).unwrap();
    assert!(text.contains("group 1"));
    assert!(text.contains("group 2"));
}

#[test]
fn global_out_flag_redirects_artifacts() {
    let dir = workdir("out-flag");
    let config = write_config(&dir);
    let events = dir.join("events.csv");
    let out = run(&[
        "synth",
        "--preset",
        "eastcoast-like",
        "--output",
        events.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let alt = dir.join("alt-out");
    let out = bin()
        .args(["features", "--config", config.to_str().unwrap()])
        .args(["--out", alt.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(alt.join("features.csv").exists());
    assert!(!dir.join("out/features.csv").exists());
}
