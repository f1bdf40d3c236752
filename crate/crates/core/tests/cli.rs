use std::path::Path;
use std::process::{Command, Output};

fn ringqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringqed"))
        .args(args)
        .env_remove("RINGQED_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn sidecar(dir: &Path, experiment: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{experiment}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&ringqed(&["no-such-command"])), 2);
    assert_eq!(code(&ringqed(&["cloud-decay", "--trials", "many"])), 2);
    assert_eq!(code(&ringqed(&["array-map", "--spacing", "-0.3"])), 2);
    assert_eq!(code(&ringqed(&["array-map", "--excitation", "laser"])), 2);
    let out = ringqed(&["array-map", "--filling", "1.5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("filling"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&ringqed(&["--help"])), 0);
    assert_eq!(code(&ringqed(&["spectrum", "--help"])), 0);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 3\n[cavity]\nkappa_x = 1.0\n").unwrap();
    let out = ringqed(&["cloud-decay", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa_x"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = ringqed(&["ring-vs-line", "--trials", "1", "--out", path(&blocker.join("sub"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn emitted_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for exp in ["cloud-decay", "spectrum", "array-map", "disorder", "ring-vs-line", "ratio-sweep", "oracle-check"] {
        let out = ringqed(&["emit-config", exp]);
        assert_eq!(code(&out), 0, "{exp}");
        let text = String::from_utf8(out.stdout).unwrap();
        let parsed: toml::Value = toml::from_str(&text).unwrap();
        assert_eq!(parsed["cavity"]["kappa_i"].as_float(), Some(100.0));
        let file = dir.path().join(format!("{exp}.toml"));
        std::fs::write(&file, &text).unwrap();
        let cfg = ringqed::config::RunConfig::from_path(&file).unwrap();
        assert_eq!(cfg.experiment.name(), exp);
        assert_eq!(cfg.trials, 1000);
    }
}

fn array_map(out_dir: &Path, workers: &str) -> Output {
    let cfg = out_dir.with_extension("toml");
    std::fs::write(
        &cfg,
        "[sweep]\nd_values = [0.1, 0.2, 0.3, 0.4, 0.5]\nn_eff_values = [1.0, 1.3, 1.69, 2.0, 2.4]\n",
    )
    .unwrap();
    ringqed(&[
        "array-map",
        "--config",
        path(&cfg),
        "--n-atoms",
        "8",
        "--workers",
        workers,
        "--out",
        path(out_dir),
    ])
}

#[test]
fn array_map_grid_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&array_map(&a, "1")), 0);
    assert_eq!(code(&array_map(&b, "2")), 0);
    let csv = std::fs::read_to_string(a.join("array_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
    assert_eq!(csv, std::fs::read_to_string(b.join("array_map.csv")).unwrap());
    let (sa, sb) = (sidecar(&a, "array-map"), sidecar(&b, "array-map"));
    assert_eq!(sa["content_hash"], sb["content_hash"]);
    assert!(sa["timestamp"].is_u64());
    assert_eq!(sa["config"]["cavity"]["n_eff"].as_f64(), Some(1.69));
    assert!(!csv.contains(&sa["timestamp"].to_string()));
}

#[test]
fn cloud_decay_is_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let args = ["cloud-decay", "--n-atoms", "6", "--trials", "30", "--seed", "9", "--workers", workers];
        let status = ringqed(&[&args[..], &["--out", path(&out)]].concat());
        assert_eq!(code(&status), 0);
        out
    };
    let (a, b) = (run("a", "1"), run("b", "3"));
    for file in ["cloud_decay.csv", "histograms.csv", "emission.csv", "atoms.json"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let s = sidecar(&a, "cloud-decay");
    assert_eq!(s["seed"], 9);
    assert_eq!(s["config"]["trials"], 30);
    assert!(s["exclusions"].is_object());
    assert_eq!(s["files"]["cloud_decay.csv"].as_str().unwrap().len(), 64);
}

#[test]
fn uniform_single_atom_cloud_reproduces_c1() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["cloud-decay", "--n-atoms", "1", "--uniform-c", "--trials", "5", "--out", path(dir.path())];
    let out = ringqed(&args);
    assert_eq!(code(&out), 0);
    let summary = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(summary.starts_with("gamma_f = 1.000 Γ0, gamma_c = 0.0500 Γ0"), "{summary}");
}

#[test]
fn spectrum_without_free_space_adds_variant() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--n-atoms", "3", "--trials", "4", "--no-freespace", "--out", path(dir.path())];
    assert_eq!(code(&ringqed(&args)), 0);
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("no_freespace_extinction"), "{header}");
}

#[test]
fn disorder_filling_axis_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("d.toml");
    std::fs::write(&cfg, "[sweep]\nvalues = [0.5, 1.0]\nn_targets = [5]\n").unwrap();
    let args = ["disorder", "--axis", "filling", "--trials", "6", "--config", path(&cfg), "--out", path(dir.path())];
    assert_eq!(code(&ringqed(&args)), 0);
    let csv = std::fs::read_to_string(dir.path().join("disorder.csv")).unwrap();
    assert!(csv.starts_with("filling,N"), "{csv}");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn oracle_check_passes_for_two_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("o.toml");
    std::fs::write(&cfg, "[oracle]\ninstances = 2\nt_end = 1.0\n").unwrap();
    let args = ["oracle-check", "--n-atoms", "2", "--config", path(&cfg), "--out", path(dir.path())];
    let out = ringqed(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    assert!(dir.path().join("oracle_check.csv").exists());
}
