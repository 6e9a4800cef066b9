use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const NAND_NOR: &str = "INPUT(A)\nINPUT(B)\nINPUT(C)\nOUTPUT(f)\nn1 = NAND(A, B)\nn2 = INV(n1)\nn3 = NOR(B, C)\nf = NOR(n2, n3)\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logiclock")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn lock_writes_netlist_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "nand_nor.bench", NAND_NOR);
    let out = dir.path().join("locked.bench");
    let status = run(&["lock", "--scheme", "epic", "--key", "8", "--key-size", "2", "--seed", "1", &input, "-o", out.to_str().unwrap()]);
    assert!(status.status.success());
    let bench = std::fs::read_to_string(&out).unwrap();
    assert!(bench.contains("INPUT(keyinput0)"));
    assert!(!bench.contains("key\""), "the key stays out of the netlist");
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("locked.bench.json")).unwrap()).unwrap();
    assert_eq!(side["schema"], "logiclock.locked/1");
    assert_eq!(side["key"], "8");
    assert_eq!(side["scheme"], "epic");
    assert_eq!(side["seed"], 1);
}

#[test]
fn attack_recovers_nand_nor_key() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "nand_nor.bench", NAND_NOR);
    let out = dir.path().join("locked.bench");
    let out = out.to_str().unwrap();
    assert!(run(&["lock", "--key", "8", "--key-size", "2", "--no-synth", &input, "-o", out]).status.success());
    let v = ok_json(&["attack", "--restarts", "4", "--seed", "3", out]);
    assert_eq!(v["best_guess"], "8");
    assert_eq!(v["best_score"], 0);
    assert_eq!(v["recovered_bits"], 2);
    assert!(v.get("trace").is_none());
    let v = ok_json(&["attack", "--restarts", "4", "--seed", "3", "--verbose", out]);
    assert_eq!(v["trace"].as_array().unwrap().len(), 4);
}

#[test]
fn attack_is_jobs_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let bench = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/ctrl_a.bench");
    let out = dir.path().join("locked.bench");
    let out = out.to_str().unwrap();
    assert!(run(&["lock", "--key-size", "16", "--seed", "5", bench.to_str().unwrap(), "-o", out]).status.success());
    let mut a = ok_json(&["attack", "--restarts", "3", "--seed", "9", "--jobs", "1", out]);
    let mut b = ok_json(&["attack", "--restarts", "3", "--seed", "9", "--jobs", "3", out]);
    a.as_object_mut().unwrap().remove("wall_seconds");
    b.as_object_mut().unwrap().remove("wall_seconds");
    assert_eq!(a, b);
}

#[test]
fn audit_passes_for_meerkat() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "tiny.bench", NAND_NOR);
    let v = ok_json(&["audit", "--key-size", "2", &input]);
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["scheme"], "meerkat");
}

#[test]
fn apply_key_restores_function() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "nand_nor.bench", NAND_NOR);
    let out = dir.path().join("m.bench");
    let out = out.to_str().unwrap();
    assert!(run(&["lock", "--scheme", "meerkat", "--key-size", "2", "--seed", "4", &input, "-o", out]).status.success());
    let side: Value = serde_json::from_str(&std::fs::read_to_string(format!("{out}.json")).unwrap()).unwrap();
    let key = side["key"].as_str().unwrap();
    let res = run(&["apply-key", out, "--key", key]);
    assert!(res.status.success());
    let unlocked = logiclock::circuit::parse_bench(&String::from_utf8(res.stdout).unwrap()).unwrap();
    let original = logiclock::circuit::parse_bench(NAND_NOR).unwrap();
    assert!(logiclock::circuit::equivalent(&unlocked, &original).unwrap());
}

#[test]
fn corruptibility_and_overhead() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "nand_nor.bench", NAND_NOR);
    let out = dir.path().join("l.bench");
    let out = out.to_str().unwrap();
    assert!(run(&["lock", "--key", "8", "--key-size", "2", "--no-synth", &input, "-o", out]).status.success());
    let c = ok_json(&["corruptibility", out]);
    assert_eq!(c["exhaustive"], true);
    let o = ok_json(&["overhead", out, &input]);
    assert_eq!(o["area"], 1.25);
}

#[test]
fn campaign_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let bench = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/ctrl_a.bench");
    let cfg = serde_json::json!({
        "benchmarks": [bench],
        "schemes": ["epic"],
        "key_sizes": [8],
        "runs": 2,
        "attack": {"restarts": 2},
        "sampling": {"inputs": 256, "keys": 16},
        "master_seed": 3,
        "record_timings": false
    });
    let cfg_path = write(dir.path(), "campaign.json", &cfg.to_string());
    let out = dir.path().join("report");
    assert!(run(&["campaign", &cfg_path, "-o", out.to_str().unwrap()]).status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 1);
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    let cells = std::fs::read_to_string(out.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 2);
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 3);
}

#[test]
fn bdd_dot_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "nand_nor.bench", NAND_NOR);
    let out = run(&["bdd-dot", &input]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));
}

#[test]
fn errors_are_machine_parsable() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "nand_nor.bench", NAND_NOR);
    let out = run(&["lock", "--scheme", "sarlock", "--key", "8", &input, "-o", "/dev/null"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: lock: "));
    let out = run(&["attack", dir.path().join("missing.bench").to_str().unwrap()]);
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: io: "));
    let bad = write(dir.path(), "bad.bench", "INPUT(a)\nf = FOO(a)\n");
    let out = run(&["overhead", &bad, &bad]);
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: parse: "));
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["lock", "apply-key", "attack", "audit", "corruptibility", "overhead", "campaign", "bdd-dot"] {
        assert!(run(&[sub, "--help"]).status.success(), "{sub}");
    }
}
