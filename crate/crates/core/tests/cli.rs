use std::process::{Command, Output};

fn kroncirc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kroncirc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exponent_prints_value() {
    let o = kroncirc(&["exponent", "--family", "wh", "--k", "6"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1.4422");
    let o = kroncirc(&["--json", "exponent", "--family", "js"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.2716).abs() < 1e-4);
}

#[test]
fn build_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r6");
    let o = out.to_str().unwrap();
    let b = kroncirc(&["--json", "build", "--decomp", "partition:r1-rows", "--n", "6", "--out", o]);
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(rep["n"], 6);
    assert!(out.join("manifest.json").exists() && out.join("f0.smx").exists() && out.join("f1.smx").exists());
    for mode in ["exact", "random"] {
        let v = kroncirc(&["--json", "verify", "--circuit", o, "--mode", mode, "--seed", "3"]);
        assert_eq!(v.status.code(), Some(0));
        let r: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
        assert_eq!(r["pass"], true);
    }
}

#[test]
fn mixed_product_and_boost_builds() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("h8");
    let o = o.to_str().unwrap();
    assert!(kroncirc(&["build", "--method", "mixed-product", "--base", "h1", "--n", "8", "--depth", "4", "--out", o]).status.success());
    assert!(kroncirc(&["verify", "--circuit", o]).status.success());
    assert!(kroncirc(&["build", "--method", "boost", "--decomp", "onehot:h1", "--n", "8", "--depth", "4", "--out", o]).status.success());
    assert!(kroncirc(&["verify", "--circuit", o, "--mode", "random"]).status.success());
}

#[test]
fn invalid_input_and_caps() {
    assert_eq!(kroncirc(&["build", "--decomp", "onehot:i2", "--n", "3"]).status.code(), Some(2));
    assert_eq!(kroncirc(&["build", "--method", "mixed-product", "--base", "h1", "--n", "3", "--depth", "4"]).status.code(), Some(2));
    assert_eq!(kroncirc(&["build", "--decomp", "partition:r1-rows", "--n", "12", "--max-terms", "8"]).status.code(), Some(3));
    assert_eq!(kroncirc(&["verify", "--circuit", "/nonexistent"]).status.code(), Some(2));
}

#[test]
fn rigidity_and_partition_commands() {
    let o = kroncirc(&["rigidity", "report", "--max-k", "5", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "k,generic_bound,generic_measured,wh_bound,wh_measured");
    assert!(text.lines().any(|l| l == "4,96,96,96,96"));

    let o = kroncirc(&["--json", "rigidity", "construct", "--family", "wh", "--k", "5"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["changes"], 448);

    let o = kroncirc(&["--json", "rigidity", "poly", "--base", "omega:2", "--n", "4", "--l", "1", "--h", "3"]);
    assert!(o.status.success());

    let o = kroncirc(&["--json", "partition", "js", "--n", "4"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["state"]["s"], 17);
    assert_eq!(v["state"]["r"], 12);

    let o = kroncirc(&["partition", "search", "--base", "r1", "--max-parts", "2"]);
    assert!(stdout(&o).contains("objective: 2.4142"));
}

#[test]
fn expectation_matches_build() {
    let o = kroncirc(&["expect", "--decomp", "partition:r1-rows", "--n", "3"]);
    assert!(o.status.success());
    let b = kroncirc(&["--json", "build", "--decomp", "partition:r1-rows", "--n", "3"]);
    let rep: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    let e = stdout(&o);
    let mut lines = e.lines();
    assert_eq!(lines.next().unwrap(), format!("layer1: {}", rep["per_layer"][0]));
    assert_eq!(lines.next().unwrap(), format!("layer2: {}", rep["per_layer"][1]));
}
