use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrpolymer_cli::manifest::{RunManifest, TaskStatus};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lrpolymer"));
    c.env_remove("LRPOLYMER_OUT");
    c
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL_MSD: &str = r#"
kind = "gamma-fit"
seed = 9

[model]
alpha = 1.5
beta = [0.5]
drift = [0.5, 0.0]
n = [4, 8, 16]

[mcmc]
sweeps = 1200
burn_in = 200
replicas = 3
"#;

#[test]
fn oracle_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.toml",
        "kind = \"oracle-suite\"\n[model]\nalpha = 2.0\nbeta = [0.5, 2.0]\ndrift = [1.0, 0.0]\ndirection = [1.0, 1.0]\nn = [1, 2, 3, 4, 5, 6, 7, 8]\n",
    );
    let out = dir.path().join("res");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let text = fs::read_to_string(out.join("oracle.csv")).unwrap();
    assert!(!text.contains(",false"));
    assert_eq!(text.matches(",true").count(), 2 * 8 * 6);
}

#[test]
fn non_summable_coupling_bound_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_MSD.replace("alpha = 1.5", "alpha = 0.9") + "\n[fit]\ncoupling_bound = true\n";
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = dir.path().join("res");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("alpha > 1"), "{err}");
    assert!(!out.exists(), "nothing is written before validation passes");
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "kind = \"enumerate\"\n[model\n");
    assert_eq!(run(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write_config(
        dir.path(),
        "kind.toml",
        "kind = \"nonsense\"\n[model]\nalpha=2.0\nbeta=[1.0]\nn=[1]\n",
    );
    assert_eq!(run(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        run(&["run", "/nonexistent/config.toml"]).status.code(),
        Some(2)
    );
}

#[test]
fn exact_experiments_match_goldens() {
    let dir = tempfile::tempdir().unwrap();
    for (config, files) in [
        ("enumerate.toml", vec!["enumerate.csv"]),
        ("pressure-scan.toml", vec!["pressure.csv", "curvature.csv"]),
    ] {
        let out = dir.path().join(config);
        let o = run(&[
            "run",
            golden(config).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        for f in files {
            assert_eq!(
                fs::read(out.join(f)).unwrap(),
                fs::read(golden(f)).unwrap(),
                "{f}"
            );
        }
    }
}

#[test]
fn mc_runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", SMALL_MSD);
    let cfg = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = dir.path().join(tag);
        let o = run(&[
            "run",
            cfg,
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        outputs.push((
            fs::read(out.join("msd.csv")).unwrap(),
            fs::read(out.join("fit.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let out = dir.path().join("d");
    run(&["run", cfg, "--seed", "10", "--out", out.to_str().unwrap()]);
    let other = fs::read(out.join("msd.csv")).unwrap();
    assert_ne!(other, outputs[0].0);
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.seed, 10);
}

#[test]
fn manifest_is_finalized() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    run(&[
        "run",
        golden("enumerate.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.kind, "enumerate");
    assert_eq!(m.status, TaskStatus::Ok);
    assert_eq!(m.config_hash.len(), 64);
    assert_eq!(m.outputs, ["enumerate.csv"]);
    assert_eq!(m.tasks.len(), 12);
    assert!(m.finished_at.is_some());
    assert_eq!(m.code_version, env!("CARGO_PKG_VERSION"));
    let csv = fs::read_to_string(out.join("enumerate.csv")).unwrap();
    assert!(csv.starts_with(&format!("# config_hash={}\n", m.config_hash)));
    assert!(!csv.contains('\r'));
}

#[test]
fn unconverged_chains_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u");
    let o = run(&[
        "run",
        golden("unconverged.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.status, TaskStatus::Unconverged);
    assert!(fs::read_to_string(out.join("msd.csv"))
        .unwrap()
        .contains(",false"));
}

#[test]
fn report_renders_fit_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", SMALL_MSD);
    let out = dir.path().join("r");
    run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let o = run(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for col in [
        "gamma_hat",
        "gamma_se",
        "regime",
        "msd_over_n",
        "msd_over_n2",
    ] {
        assert!(text.contains(col), "{text}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2 + 3);
}

#[test]
fn report_requires_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["report", dir.path().to_str().unwrap()]).status.code(),
        Some(2)
    );
    fs::write(dir.path().join("manifest.json"), "[]").unwrap();
    assert_eq!(
        run(&["report", dir.path().to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", golden("enumerate.toml").to_str().unwrap()])
        .env("LRPOLYMER_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let entries: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(entries.len(), 1);
    assert!(entries[0].to_string_lossy().starts_with("enumerate-"));
}

#[test]
fn traces_are_written_per_replica() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_MSD
        .replace("kind = \"gamma-fit\"", "kind = \"msd-scan\"")
        .replace("n = [4, 8, 16]", "n = [8]")
        + "trace = true\n";
    let cfg = write_config(dir.path(), "t.toml", &text);
    let out = dir.path().join("t");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = RunManifest::read(&out).unwrap();
    let traces: Vec<_> = m
        .outputs
        .iter()
        .filter(|f| f.starts_with("trace_"))
        .collect();
    assert_eq!(traces.len(), 2 * 3);
    let t = fs::read_to_string(out.join(traces[0])).unwrap();
    assert_eq!(t.lines().nth(1), Some("sweep,energy,magnetization"));
    assert_eq!(t.lines().count(), 2 + 1000);
}

#[test]
fn clt_outside_hypotheses_is_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
kind = "clt-test"
seed = 4
[model]
alpha = 2.0
beta = [0.5]
drift = [1.0, -1.0]
direction = [1.0, 0.0]
n = [8]
[mcmc]
sweeps = 2200
burn_in = 200
replicas = 2
thinning = 4
batches = 10
"#;
    let cfg = write_config(dir.path(), "c.toml", text);
    let out = dir.path().join("c");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let clt = fs::read_to_string(out.join("clt.csv")).unwrap();
    assert!(clt.contains("outside theorem hypotheses"));
    assert!(clt.contains(",exact,"));
    let report = run(&["report", out.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&report.stdout).contains("p_value"));
}
