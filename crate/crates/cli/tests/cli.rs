use noisy_lattice::model::{load_config, plan_run};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisy-lattice"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_FERMION: &str = r#"
particle = "fermion"
sites = 2
modes_per_site = 1
[noise]
kappa1 = 0.2
kappa2 = 0.1
kappa3 = 0.5
[initial]
occupations = [1, 0]
[[coupling]]
a = [1, 1, 1]
b = [2, 1, 2]
im = 0.25
[[coupling]]
a = [1, 1, 2]
b = [2, 1, 1]
im = -0.25
[[interaction]]
a = [1, 1]
b = [2, 1]
value = 0.2
[run]
time = 0.5
trotter_steps = 4
trajectories = 2000
seed = 11
"#;

#[test]
fn plan_json_matches_library() {
    let cfg = configs().join("fermion_benchmark.toml");
    let o = run(&["plan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let (spec, rc) = load_config(&std::fs::read_to_string(&cfg).unwrap(), &[]).unwrap();
    let plan = plan_run(&spec, rc.time.unwrap(), 0.1, &rc).unwrap();
    assert_eq!(
        v["constants"]["lambda"].as_f64().unwrap(),
        plan.constants.lambda
    );
    assert_eq!(v["trotter_steps"].as_u64(), plan.trotter_steps);
    assert_eq!(v["trotter_steps_bound"].as_u64(), plan.trotter_steps_bound);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn empty_and_violating_configs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(
        dir.path(),
        "empty.toml",
        "particle = \"fermion\"\nsites = 2\nmodes_per_site = 1\n",
    );
    let o = run(&["plan", "--config", &empty, "--time", "1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trotter_steps"].as_u64(), Some(1));
    assert!(v["violations"].as_array().unwrap().is_empty());

    let bad = write(
        dir.path(),
        "bad.toml",
        "particle = \"fermion\"\nsites = 2\nmodes_per_site = 1\n[[interaction]]\na = [1, 1]\nb = [2, 1]\nvalue = 1.0\n",
    );
    let o = run(&["plan", "--config", &bad, "--time", "1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["plan"])), 2);
    assert_eq!(code(&run(&["plan", "--config", "/no/such/file.toml"])), 2);
    let cfg = write(dir.path(), "f.toml", SMALL_FERMION);
    assert_eq!(
        code(&run(&[
            "plan",
            "--config",
            &cfg,
            "--override",
            "noise.kappa3=oops"
        ])),
        2
    );
    let out = dir.path().join("o");
    assert_eq!(
        code(&run(&[
            "sample-boson",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "gate-demo",
            "--gate",
            "Y",
            "--out",
            out.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn validate_passes_at_zero_time_and_fails_when_underpowered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "f.toml", SMALL_FERMION);
    let out = dir.path().join("zero");
    let o = run(&[
        "validate",
        "--config",
        &cfg,
        "--time",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("validation.csv")).unwrap();
    for line in csv.lines().skip(1).filter(|l| l.starts_with("n_")) {
        assert_eq!(line.split(',').nth(4), Some("0"), "{line}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], serde_json::json!(true));
    assert_eq!(manifest["seed"], serde_json::json!(11));

    let out = dir.path().join("few");
    let o = run(&[
        "validate",
        "--config",
        &cfg,
        "--trajectories",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn reruns_write_identical_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "f.toml", SMALL_FERMION);
    let read = |sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&[
            "sample-fermion",
            "--config",
            &cfg,
            "--trajectories",
            "300",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        (
            std::fs::read(out.join("occupations.csv")).unwrap(),
            std::fs::read(out.join("samples.csv")).unwrap(),
        )
    };
    let a = read("a");
    let b = read("b");
    assert_eq!(a, b);
    let o = run(&[
        "sample-fermion",
        "--config",
        &cfg,
        "--trajectories",
        "300",
        "--seed",
        "12",
        "--out",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_ne!(
        std::fs::read(dir.path().join("c/samples.csv")).unwrap(),
        a.1
    );
}

#[test]
fn experiment_commands_emit_csv_with_unit_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ent");
    let o = run(&[
        "fermion-entanglement",
        "--kappas",
        "2,4",
        "--steps",
        "300",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let head = std::fs::read_to_string(out.join("peaks.csv")).unwrap();
    assert!(head.starts_with("model,J[E],kappa[E],t_star[1/E]"));

    let out = dir.path().join("gate");
    let o = run(&[
        "gate-demo",
        "--gate",
        "T",
        "--p",
        "2,4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("gates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let out = dir.path().join("w");
    let o = run(&[
        "wigner",
        "--alpha",
        "1",
        "--times",
        "0,2",
        "--kappa-over-u",
        "0.1",
        "--step",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("wigner.csv")).unwrap();
    assert!(csv.starts_with("kappa_over_U[-],alpha[-],t[1/E],W_min[-]"));
    assert!(out.join("manifest.json").exists());

    let cfg = write(dir.path(), "f.toml", SMALL_FERMION);
    let out = dir.path().join("oracle");
    let o = run(&["oracle", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let fock = std::fs::read_to_string(out.join("fock.csv")).unwrap();
    assert_eq!(fock.lines().count(), 5);
}
