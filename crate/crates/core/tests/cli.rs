use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xy-entropy"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

const REFERENCE: &[&str] = &[
    "--beta-left",
    "1",
    "--beta-right",
    "3",
    "--gamma",
    "0.5",
    "--lambda",
    "0.3",
];

#[test]
fn limit_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("hot.toml"),
        "[model]\nbeta_L = 0\nbeta_R = 0\ngamma = 0.5\nlambda = 0.3\n[run]\noutput = \"res\"\n",
    )
    .unwrap();
    let out = run(dir.path(), &["limit", "--config", "hot.toml"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/limit.json")).unwrap())
            .unwrap();
    assert!((v["result"]["C"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    assert!(dir.path().join("res/limit.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = REFERENCE.to_vec();
    args[5] = "1.0";
    args.push("limit");
    let out = run(dir.path(), &args);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["schema"], 1);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("gamma must lie in (-1,1)"));

    fs::write(
        dir.path().join("bad.toml"),
        "[model]\nbeta_L = 1\nbeta_R ==\n",
    )
    .unwrap();
    let out = run(dir.path(), &["limit", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(
        dir.path(),
        &[
            "entropy",
            "--n",
            "4,2",
            "--beta-left",
            "1",
            "--beta-right",
            "3",
            "--gamma",
            "0",
            "--lambda",
            "0",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn swapped_reservoirs_warn_but_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "limit",
            "--beta-left",
            "3",
            "--beta-right",
            "1",
            "--gamma",
            "0.5",
            "--lambda",
            "0.3",
            "--format",
            "json",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/limit.json")).unwrap())
            .unwrap();
    assert_eq!(v["config"]["theorem_domain"], false);
}

#[test]
fn non_convergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("tight.toml"),
        "[model]\nbeta_L = 1\nbeta_R = 3\ngamma = 0.5\nlambda = 0.3\n[quadrature]\nabs_tol = 1e-300\nrel_tol = 1e-300\nmax_subdivisions = 1\n",
    )
    .unwrap();
    let out = run(dir.path(), &["limit", "--config", "tight.toml"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "non_convergence");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = REFERENCE.to_vec();
    args.extend(["--n", "4,8,16", "--format", "csv,json,plot", "entropy"]);
    assert!(run(dir.path(), &args).status.success());
    let names = ["entropy.csv", "entropy.json", "entropy.py"];
    let first: Vec<Vec<u8>> = names
        .iter()
        .map(|f| fs::read(dir.path().join("out").join(f)).unwrap())
        .collect();
    assert!(run(dir.path(), &args).status.success());
    for (name, bytes) in names.iter().zip(first) {
        assert_eq!(
            bytes,
            fs::read(dir.path().join("out").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn oracle_check_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = REFERENCE.to_vec();
    args.extend(["oracle-check", "--sizes", "1,2,3", "--seed", "11"]);
    let out = run(dir.path(), &args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/oracle-check.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["result"]["seed"], 11);

    let mut args = REFERENCE.to_vec();
    args.extend(["figure-h", "--format", "plot"]);
    assert!(run(dir.path(), &args).status.success());
    assert!(dir.path().join("out/figure-h.py").exists());
    assert!(dir.path().join("out/figure-h.csv").exists());
    assert!(!dir.path().join("out/figure-h.json").exists());
}
