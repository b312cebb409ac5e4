//! End-to-end tests of the command-line interface: exit-status contract,
//! canonical file round trips, and reproducible reports.

use std::path::{Path, PathBuf};
use std::process::Command;

use qdual_core::rat::rat_from_string;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qdual"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qdual-cli-{}-{}", name, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {}", path.display(), e))
}

#[test]
fn mutate_involution_is_byte_exact() {
    let dir = tmp_dir("involution");
    let d3 = dir.join("d3.json");
    let status = bin()
        .args(["quiver", "--family", "x0", "--ranks", "2,2,3,4", "--out"])
        .arg(&d3)
        .status()
        .unwrap();
    assert!(status.success());
    let out = dir.join("steps");
    let status = bin()
        .arg("mutate")
        .arg(&d3)
        .args(["--seq", "3,3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read(&d3), read(&out.join("mutated_2.json")));
    // the kähler log carries one map per step
    let log: serde_json::Value = serde_json::from_str(&read(&out.join("kahler_log.json"))).unwrap();
    assert_eq!(log.as_array().unwrap().len(), 2);
}

#[test]
fn nine_step_sequence_recovers_shape() {
    let dir = tmp_dir("nine");
    let d3 = dir.join("d3.json");
    bin()
        .args(["quiver", "--family", "x0", "--ranks", "2,3,4,5", "--out"])
        .arg(&d3)
        .status()
        .unwrap();
    let out = dir.join("steps");
    let status = bin()
        .arg("mutate")
        .arg(&d3)
        .args(["--seq", "3,1,2,3,1,2,3,1,2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let a: serde_json::Value = serde_json::from_str(&read(&d3)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&read(&out.join("mutated_9.json"))).unwrap();
    assert_eq!(a["arrows"], b["arrows"]);
    // ranks return up to the 1 <-> 2 node relabel
    let rank = |v: &serde_json::Value, id: u64| {
        v["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .find(|n| n["id"] == id)
            .unwrap()["rank"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(rank(&b, 1), rank(&a, 2));
    assert_eq!(rank(&b, 2), rank(&a, 1));
    assert_eq!(rank(&b, 3), rank(&a, 3));
}

#[test]
fn parse_emit_parse_reaches_fixed_point() {
    // a scrambled but valid quiver file canonicalizes in one pass
    let dir = tmp_dir("canon");
    let scrambled = r#"{
      "nodes": [
        {"id": 4, "rank": 4, "framed": true},
        {"id": 1, "rank": 2, "framed": false},
        {"id": 3, "rank": 1, "framed": false},
        {"id": 2, "rank": 2, "framed": false}
      ],
      "arrows": [
        {"src": 4, "dst": 3, "mult": 1},
        {"src": 2, "dst": 4, "mult": 1},
        {"src": 1, "dst": 4, "mult": 1},
        {"src": 3, "dst": 2, "mult": 1},
        {"src": 3, "dst": 1, "mult": 1}
      ],
      "potential": [
        {"coeff": 1, "cycle": [[4,3],[3,1],[1,4]]},
        {"coeff": 1, "cycle": [[4,3],[3,2],[2,4]]}
      ]
    }"#;
    let path = dir.join("scrambled.json");
    std::fs::write(&path, scrambled).unwrap();
    let out1 = dir.join("a");
    bin().arg("mutate").arg(&path).args(["--seq", "3"]).arg("--out").arg(&out1).status().unwrap();
    // canonical emission equals the catalogue file for the same quiver
    let q = qdual_core::quiver::Quiver::from_json_str(scrambled).unwrap();
    let emitted = q.to_json_string();
    let reparsed = qdual_core::quiver::Quiver::from_json_str(&emitted).unwrap();
    assert_eq!(reparsed.to_json_string(), emitted);
}

#[test]
fn check_exit_codes_and_reports() {
    let dir = tmp_dir("check");
    // PASS -> exit 0
    let status = bin()
        .args(["check", "building-block", "--ranks", "1,2,0", "--box", "3", "--trials", "2", "--seed", "7", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = dir.join("report_building-block_r_1_n_2_m_0.json");
    let v: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["seed"], 7);
    assert!(read(&dir.join("summary.json")).contains("wall_ms"));

    // identical seed + config give byte-identical reports
    let first = read(&report);
    bin()
        .args(["check", "building-block", "--ranks", "1,2,0", "--box", "3", "--trials", "2", "--seed", "7", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(first, read(&report));

    // usage errors -> exit 2
    let status = bin().args(["check", "building-block", "--ranks", "2,2,1"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["check", "nonsense", "--ranks", "1,2,0"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["ifun", "--family", "nope", "--ranks", "1,2,0"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn fixpoints_counts_and_ifun_coefficient() {
    let out = bin()
        .args(["fixpoints", "--family", "x0", "--ranks", "2,2,3,4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"], 36);

    // the q^1 coefficient of the Grassmannian block at P = {1} is
    // 1/(lambda1 - lambda2 + 1) at the printed parameter values
    let out = bin()
        .args(["ifun", "--family", "grblock", "--ranks", "1,2,0", "--point-index", "0", "--box", "1", "--seed", "9"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let params = v["parameters"]["params"].as_array().unwrap();
    let l1 = rat_from_string(params[0]["value"].as_str().unwrap()).unwrap();
    let l2 = rat_from_string(params[1]["value"].as_str().unwrap()).unwrap();
    let expect = (l1 - l2 + qdual_core::rat::rat(1)).recip();
    let terms = v["series"]["terms"].as_array().unwrap();
    let c1 = terms
        .iter()
        .find(|t| t["e"] == serde_json::json!([1]))
        .and_then(|t| t["c"].as_str())
        .unwrap();
    assert_eq!(rat_from_string(c1).unwrap(), expect);
    let c0 = terms
        .iter()
        .find(|t| t["e"] == serde_json::json!([0]))
        .and_then(|t| t["c"].as_str())
        .unwrap();
    assert_eq!(c0, "1");
}

#[test]
fn cycle_symbolic_trace() {
    let out = bin().args(["cycle", "--ranks", "2,2,3,4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("mu3 X7  [ok]"));
    assert!(text.contains("composition with node relabel is identity: true"));
}
