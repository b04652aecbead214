use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn modrelu(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modrelu"))
        .args(args)
        .current_dir(dir)
        .env("MODRELU_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stats_json(dir: &Path, file: &str) -> serde_json::Value {
    let out = modrelu(dir, &["stats", file]);
    assert!(out.status.success());
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn build_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = modrelu(dir.path(), &["build", "--primitive", "re", "--R", "2", "--eps", "0.01", "-o", "re.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats = stats_json(dir.path(), "re.json");
    assert_eq!(stats["weight_count"], 10);
    assert_eq!(stats["depth"], 2);
    let text = fs::read_to_string(dir.path().join("re.json")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(meta["meta"]["primitive"]["kind"], "re");
}

#[test]
fn build_structured_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let out = modrelu(dir.path(), &["build", "--primitive", "product", "--R", "3", "--M", "1", "--eps", "0.1", "-o", "p.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    fs::write(dir.path().join("pts.txt"), "0.5,0.5;0.5,-0.5\n# comment\n\n0,0;0.3,0.1\n").unwrap();
    let out = modrelu(dir.path(), &["eval", "p.json", "pts.txt", "-o", "vals.txt"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let vals = fs::read_to_string(dir.path().join("vals.txt")).unwrap();
    let lines: Vec<&str> = vals.lines().collect();
    assert_eq!(lines.len(), 2);
    let (re, im) = lines[0].split_once(',').unwrap();
    let (re, im): (f64, f64) = (re.parse().unwrap(), im.parse().unwrap());
    assert!(((re - 0.5).powi(2) + im * im).sqrt() <= 0.1);
}

#[test]
fn eval_rejects_bad_points() {
    let dir = tempfile::tempdir().unwrap();
    assert!(modrelu(dir.path(), &["build", "--primitive", "identity", "--R", "2", "-o", "id.json"]).status.success());
    fs::write(dir.path().join("bad.txt"), "1,2;3,4\n").unwrap();
    let out = modrelu(dir.path(), &["eval", "id.json", "bad.txt", "-o", "vals.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("vals.txt").exists());
}

#[test]
fn verify_lipschitz_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = modrelu(dir.path(), &["verify", "--suite", "lipschitz", "--seed", "7", "-o", "r.jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    let report: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["frobnicate"],
        &["build", "--primitive", "re", "--R", "2", "--eps", "1.5", "-o", "x.json"],
        &["build", "--primitive", "nope", "--eps", "0.1", "-o", "x.json"],
        &["verify", "--suite", "nope"],
        &["stats", "missing.json"],
    ];
    for args in cases {
        let out = modrelu(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn malformed_network_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"layers\": [\n  }").unwrap();
    let out = modrelu(dir.path(), &["stats", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn sweep_writes_one_row_per_eps() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--d", "1", "--n", "2", "--target", "quad", "--eps", "0.3,0.25", "--samples", "9", "-o", "sweep.csv"];
    let out = modrelu(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epsilon,depth,weights,max_weight,sup_error,build_ms,eval_ms");
    assert_eq!(lines.len(), 3);
    // identical runs agree apart from the timing columns
    assert!(modrelu(dir.path(), &[&args[..11], &["-o", "again.csv"]].concat()).status.success());
    let again = fs::read_to_string(dir.path().join("again.csv")).unwrap();
    let strip = |s: &str| s.lines().map(|l| l.rsplitn(3, ',').last().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(strip(&csv), strip(&again));
}

#[test]
fn compiled_target_build() {
    let dir = tempfile::tempdir().unwrap();
    let out = modrelu(dir.path(), &["build", "--target", "quad", "--d", "1", "--n", "2", "--eps", "0.3", "-o", "g.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats = stats_json(dir.path(), "g.json");
    assert_eq!(stats["neuron_counts"][0], 1);
    let text = fs::read_to_string(dir.path().join("g.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["meta"]["plan"]["N"], 5);
}
