//! Black-box tests of the `cluvrp` binary: the gen -> preprocess -> solve ->
//! bench pipeline, the JSON config file, and error reporting.

use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cluvrp"))
}

fn write_cvrp(path: &Path, n: usize) {
    let mut text = String::new();
    text.push_str("NAME : tiny\n");
    text.push_str(&format!("DIMENSION : {}\n", n + 1));
    text.push_str("CAPACITY : 20\nVEHICLES : 3\nEDGE_WEIGHT_TYPE : EUC_2D\n");
    text.push_str("NODE_COORD_SECTION\n");
    text.push_str("1 35 35\n");
    for id in 2..=(n + 1) {
        let x = (id * 17) % 70;
        let y = (id * 29) % 70;
        text.push_str(&format!("{id} {x} {y}\n"));
    }
    text.push_str("DEMAND_SECTION\n1 0\n");
    for id in 2..=(n + 1) {
        text.push_str(&format!("{id} {}\n", 1 + id % 3));
    }
    text.push_str("EOF\n");
    std::fs::write(path, text).unwrap();
}

#[test]
fn gen_preprocess_solve_pipeline() {
    let dir = TempDir::new().unwrap();
    let cvrp = dir.path().join("tiny.vrp");
    write_cvrp(&cvrp, 18);
    let clustered = dir.path().join("tiny.cluvrp");

    let out = bin()
        .args(["gen", "--cvrp"])
        .arg(&cvrp)
        .args(["--theta", "3", "--seed", "4", "--out"])
        .arg(&clustered)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(clustered.exists());

    let out = bin()
        .args(["preprocess", "--instance"])
        .arg(&clustered)
        .args(["--cache-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cached = String::from_utf8_lossy(&out.stdout);
    assert!(cached.contains("endpoint pairs"), "{cached}");

    let json = dir.path().join("result.json");
    let out = bin()
        .args(["solve", "--instance"])
        .arg(&clustered)
        .args(["--solver", "ils-clu", "--seed", "3", "--time-limit", "10", "--json-out"])
        .arg(&json)
        .args(["--cache-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["solver"], "ils-clu");
    assert!(report["cost"].as_f64().unwrap() > 0.0);
    assert!(report["routes"].as_array().unwrap().len() <= 3);
}

#[test]
fn bench_writes_reports() {
    let dir = TempDir::new().unwrap();
    let cvrp = dir.path().join("tiny.vrp");
    write_cvrp(&cvrp, 12);
    let grid = dir.path().join("grid");
    std::fs::create_dir(&grid).unwrap();
    let inst = grid.join("tiny.cluvrp");
    let out = bin()
        .args(["gen", "--cvrp"])
        .arg(&cvrp)
        .args(["--theta", "3", "--seed", "1", "--out"])
        .arg(&inst)
        .output()
        .unwrap();
    assert!(out.status.success());

    let csv = dir.path().join("runs.csv");
    let md = dir.path().join("report.md");
    let bks = dir.path().join("bks.csv");
    std::fs::write(&bks, "instance,cost\ntiny-t3,1\n").unwrap();
    let out = bin()
        .args(["bench", "--instances"])
        .arg(&grid)
        .args(["--solvers", "uhgs", "--runs", "2", "--workers", "2", "--time-limit", "5", "--bks"])
        .arg(&bks)
        .args(["--csv"])
        .arg(&csv)
        .args(["--markdown"])
        .arg(&md)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(runs.lines().count(), 3); // header + 2 seeds
    let report = std::fs::read_to_string(&md).unwrap();
    assert!(report.contains("Avg. % Dev."));
    assert!(report.contains("theta="));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    let cvrp = dir.path().join("tiny.vrp");
    write_cvrp(&cvrp, 10);
    let out_path = dir.path().join("cfg-out.cluvrp");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "gen": {"cvrp": cvrp, "theta": 2.0, "seed": 5, "out": out_path}
        })
        .to_string(),
    )
    .unwrap();
    let out = bin().args(["--config"]).arg(&cfg).arg("gen").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_path.exists());

    // An explicit flag overrides the config value.
    let other = dir.path().join("other.cluvrp");
    let out = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["gen", "--out"])
        .arg(&other)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(other.exists());
}

#[test]
fn unknown_solver_is_reported() {
    let out = bin()
        .args(["solve", "--instance", "/nonexistent", "--solver", "tabu"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown solver"), "{err}");
}

#[test]
fn lambda_cap_reports_hint() {
    let dir = TempDir::new().unwrap();
    let cvrp = dir.path().join("tiny.vrp");
    write_cvrp(&cvrp, 16);
    let inst = dir.path().join("big-cluster.cluvrp");
    let out = bin()
        .args(["gen", "--cvrp"])
        .arg(&cvrp)
        .args(["--theta", "16", "--seed", "2", "--out"])
        .arg(&inst)
        .output()
        .unwrap();
    assert!(out.status.success());
    // theta=16 packs most customers into very few clusters; a tiny
    // lambda-max must fail with the raise-the-flag hint.
    let out = bin()
        .args(["preprocess", "--instance"])
        .arg(&inst)
        .args(["--lambda-max", "3", "--cache-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--lambda-max"), "{err}");
}
