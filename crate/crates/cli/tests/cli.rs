use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

fn scratch() -> PathBuf {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!("fblab-cli-{}-{}", std::process::id(), NEXT.fetch_add(1, Ordering::SeqCst)));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn fblab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fblab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FBLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn result(path: PathBuf) -> Value {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["schema"], "fblab/1");
    v["result"].clone()
}

#[test]
fn admissibility_example() {
    let dir = scratch();
    let o = fblab(&["admissibility", "--d", "3", "--q", "145/48", "--delta", "0.36"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(dir.join("admissibility.json"));
    assert_eq!(r["admissible"], true);
    assert_eq!(r["star_margin_sign"], "positive");
    assert!((r["star_margin"].as_f64().unwrap() - 1.0 / 72.0).abs() < 1e-12);
}

#[test]
fn moser_example() {
    let dir = scratch();
    let o = fblab(&["moser", "--d", "5", "--q", "6", "--r0", "2", "--k", "3", "--n", "20"], &dir);
    assert!(o.status.success());
    let r = result(dir.join("moser.json"));
    assert_eq!(r["r1"], "10/3");
    assert_eq!(r["alpha_bound"], "12/25");
    assert_eq!(r["gamma_lower"], "1/25");
    assert_eq!(r["verification"]["passed"], true);
    let csv = std::fs::read_to_string(dir.join("moser.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn outputs_are_byte_identical_without_timestamp() {
    let (a, b) = (scratch(), scratch());
    let args = ["figure1", "--d-range", "5:9", "--eps", "1/2", "--no-timestamp"];
    assert!(fblab(&args, &a).status.success());
    assert!(fblab(&args, &b).status.success());
    let x = std::fs::read(a.join("figure1.csv")).unwrap();
    assert_eq!(x, std::fs::read(b.join("figure1.csv")).unwrap());
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("# schema: fblab/1\n# subcommand: figure1\n"));
    assert!(!text.contains("generated"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
}

#[test]
fn seeded_runs_repeat() {
    let (a, b) = (scratch(), scratch());
    let args = ["blowup", "--deltas", "16,49", "--n-paths", "200", "--dt", "1e-3", "--seed", "5", "--no-timestamp"];
    assert!(fblab(&args, &a).status.success());
    assert!(fblab(&args, &b).status.success());
    let csv = std::fs::read_to_string(a.join("blowup.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("blowup.csv")).unwrap());
    assert!(csv.contains("# config: seed = 5\n"));
}

#[test]
fn config_file_and_flags() {
    let dir = scratch();
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# moser run\nd = 5\nq = 6\nn = 4\n").unwrap();
    let o = fblab(&["moser", "--config", cfg.to_str().unwrap(), "--n", "3"], &dir);
    assert!(o.status.success());
    let r = result(dir.join("moser.json"));
    assert_eq!(r["verification"]["passed"], true);
    let csv = std::fs::read_to_string(dir.join("moser.csv")).unwrap();
    assert!(csv.contains("# config: n = 3\n"));
}

#[test]
fn exit_codes() {
    let dir = scratch();
    // usage errors
    assert_eq!(fblab(&["admissibility", "--bogus", "1"], &dir).status.code(), Some(2));
    assert_eq!(fblab(&["blowup", "--n-paths", "10"], &dir).status.code(), Some(2));
    // configuration errors
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "d = 3\nq = 4\nfoo = 1\n").unwrap();
    assert_eq!(fblab(&["admissibility", "--config", cfg.to_str().unwrap(), "--delta", "1"], &dir).status.code(), Some(3));
    assert_eq!(fblab(&["admissibility", "--d", "3", "--q", "4"], &dir).status.code(), Some(3));
    assert_eq!(fblab(&["admissibility", "--d", "3", "--q", "x", "--delta", "1"], &dir).status.code(), Some(3));
    assert_eq!(fblab(&["moser", "--d", "5", "--q", "4"], &dir).status.code(), Some(3));
    assert_eq!(fblab(&["accept", "--criteria", "13"], &dir).status.code(), Some(3));
}

#[test]
fn output_directory_from_environment() {
    let dir = scratch();
    let o = Command::new(env!("CARGO_BIN_EXE_fblab"))
        .args(["admissibility", "--d", "4", "--q", "5", "--delta", "1/64"])
        .env("FBLAB_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.join("admissibility.json").exists());
}

#[test]
fn accept_runs_selected_criteria() {
    let dir = scratch();
    let o = fblab(&["accept", "--criteria", "1,3"], &dir);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 2);
    assert!(dir.join("acceptance.txt").exists());
}

#[test]
fn small_pipeline() {
    let dir = scratch();
    let drift = ["--drift-delta", "9/25", "--mollify-n", "2", "--mollify-eps", "0.04", "--n-r", "200"];
    let o = fblab(&[&["verify-thm1"], drift.as_slice()].concat(), &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(dir.join("verify_thm1.json"));
    assert_eq!(r["verification"]["status"], "passed");
    assert_eq!(r["maximum_principle"], true);
    let o = fblab(&["sde-compare", "--drift-kind", "zero", "--n-paths", "2000", "--dt", "0.01", "--pde-n-r", "500", "--seed", "1"], &dir);
    assert!(o.status.success());
    assert_eq!(result(dir.join("sde_compare.json"))["passed"], true);
}
