use std::process::Command;

fn wlogdet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wlogdet")).args(args).output().expect("binary runs")
}

#[test]
fn clt_output_is_byte_identical_across_runs() {
    let args = ["clt", "--ensemble", "gue", "--n", "256", "--replicates", "50", "--seed", "7", "--law", "gue"];
    let a = wlogdet(&args);
    let b = wlogdet(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["summary"]["summary"]["mean"].is_f64());
    assert!(v["summary"]["ks"]["d"].is_f64());
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn worker_count_does_not_change_results() {
    let run = |w: &str| {
        let out = wlogdet(&["clt", "--ensemble", "goe", "--n", "128", "--replicates", "40", "--seed", "3", "--records", "--workers", w]);
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["config"]["workers"] = serde_json::Value::Null;
        v
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn moments_exact_goe_n2() {
    let out = wlogdet(&["moments", "--n", "2", "--class", "goe", "--seed", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["summary"]["exact"], "7");

    let out = wlogdet(&["moments", "--n", "2", "--class", "gue", "--seed", "1", "--format", "csv"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("n,class,exact,mc_estimate,mc_stderr\n2,gue,3,"));
}

#[test]
fn sample_csv_has_all_entries() {
    let out = wlogdet(&["sample", "--ensemble", "goe", "--n", "5", "--seed", "2", "--format", "csv"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 26);
    let out = wlogdet(&["sample", "--beta", "1", "--n", "5", "--seed", "2", "--format", "csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("i,a,b\n"));
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("wlogdet-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ftc.json");
    let out = wlogdet(&["ftc", "--n", "16", "--seed", "5", "--z0-re", "0.1", "--z0-im", "0.05", "--output", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["summary"]["result"]["residual"].as_f64().unwrap() < 1e-6);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn exit_codes() {
    assert_eq!(wlogdet(&["clt", "--ensemble", "nope", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(wlogdet(&["clt", "--n", "8"]).status.code(), Some(2));
    assert_eq!(wlogdet(&["phase", "--ensemble", "gue", "--n", "0", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(wlogdet(&["clt", "--format", "csv", "--seed", "1", "--n", "8", "--replicates", "10"]).status.code(), Some(2));
    // An unattainable tolerance is a numerical failure.
    let out = wlogdet(&["ftc", "--n", "16", "--seed", "5", "--z0-im", "0.05", "--tolerance", "1e-300"]);
    assert_eq!(out.status.code(), Some(3));
}
