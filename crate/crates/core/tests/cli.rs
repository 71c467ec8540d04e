// Copyright 2026 The qpdm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qpdm::cli::{run, EXIT_DATA, EXIT_FILE, EXIT_NOT_ACCEPTED, EXIT_OK, EXIT_USAGE};
use serde_json::Value;
use tempfile::TempDir;

const FOUR_ROWS: &str = "i1,i2,i3\n1,1,0\n1,0,0\n0,1,1\n1,1,1\n";

const MINING_ROWS: &str = "11100\n00100\n10101\n10111\n10110\n10100\n11100\n11110\n\
                           00100\n01011\n11110\n10100\n01001\n11100\n10111\n10110\n";

const SIXTEEN_ROWS: &str = "1111\n1100\n0110\n0011\n1001\n1010\n0101\n0000\n\
                            1101\n0111\n1110\n1000\n0010\n0100\n0001\n1011\n";

struct Run {
    status: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn qpdm(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = run(std::iter::once("qpdm").chain(args.iter().copied()), &mut out, &mut err);
    Run { status, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write_db(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", FOUR_ROWS);
    let args = ["estimate", "--db", s(&db), "--items", "1,3", "--split", "2", "--p", "6", "--seed", "42"];
    let (a, b) = (qpdm(&args), qpdm(&args));
    assert_eq!(a.status, EXIT_OK, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let v = a.json();
    for key in ["itemset", "estimate", "error_bound", "rounds", "accepted", "qubits_sent"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v.get("exact").is_none());
    assert_eq!(v["itemset"], serde_json::json!([1, 3]));
    assert_eq!(v["qubits_sent"].as_u64().unwrap() % (63 * 10), 0);
}

#[test]
fn empty_items_are_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", FOUR_ROWS);
    let r = qpdm(&["estimate", "--db", s(&db), "--items", "", "--seed", "1"]);
    assert_eq!(r.status, EXIT_USAGE);
    assert!(r.stdout.is_empty());
    assert_eq!(qpdm(&["estimate", "--db", s(&db), "--items", "1,9", "--seed", "1"]).status, EXIT_USAGE);
    assert_eq!(qpdm(&["estimate", "--db", s(&db), "--seed", "1"]).status, EXIT_USAGE);
    assert_eq!(qpdm(&["frobnicate"]).status, EXIT_USAGE);
    assert_eq!(qpdm(&["estimate", "--db", s(&db), "--items", "1", "--enc", "rot13", "--seed", "1"]).status, EXIT_USAGE);
}

#[test]
fn exact_oracle_error_stays_within_bound() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", FOUR_ROWS);
    let mut within = 0;
    for seed in 0..100 {
        let seed = seed.to_string();
        let r = qpdm(&[
            "estimate",
            "--db",
            s(&db),
            "--items",
            "1,3",
            "--split",
            "2",
            "--p",
            "6",
            "--seed",
            &seed,
            "--with-exact-oracle",
        ]);
        assert!(r.status == EXIT_OK || r.status == EXIT_NOT_ACCEPTED);
        let v = r.json();
        assert_eq!(v["exact"], 0.25);
        within += (v["abs_error"].as_f64().unwrap() <= v["error_bound"].as_f64().unwrap()) as usize;
    }
    assert!(within >= 90, "{within} of 100");
}

#[test]
fn exact_oracle_warns_on_large_supports() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", FOUR_ROWS);
    let r = qpdm(&["estimate", "--db", s(&db), "--items", "1", "--p", "6", "--seed", "3", "--with-exact-oracle"]);
    assert!(r.stderr.contains("warning"), "{}", r.stderr);
    let r = qpdm(&["estimate", "--db", s(&db), "--items", "1,3", "--p", "6", "--seed", "3", "--with-exact-oracle"]);
    assert!(!r.stderr.contains("warning"));
}

#[test]
fn exhausted_rounds_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", SIXTEEN_ROWS);
    let found = (0..40).map(|seed| seed.to_string()).find_map(|seed| {
        let r = qpdm(&[
            "estimate",
            "--db",
            s(&db),
            "--items",
            "1,3",
            "--p",
            "3",
            "--max-rounds",
            "1",
            "--band",
            "1e-9",
            "--seed",
            &seed,
        ]);
        (r.status == EXIT_NOT_ACCEPTED).then_some(r)
    });
    let r = found.expect("some seed should disagree in its only round");
    assert_eq!(r.json()["accepted"], false);
    assert_eq!(r.json()["rounds"], 1);
}

#[test]
fn mine_matches_exact_on_a_clear_database() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "m.txt", MINING_ROWS);
    let r = qpdm(&[
        "mine",
        "--db",
        s(&db),
        "--split",
        "2",
        "--s",
        "0.3",
        "--c",
        "0.6",
        "--seed",
        "7",
        "--with-exact-oracle",
    ]);
    assert_eq!(r.status, EXIT_OK, "{}", r.stderr);
    let v = r.json();
    let diff = &v["exact_diff"];
    for key in ["missing_itemsets", "extra_itemsets", "missing_rules", "extra_rules"] {
        assert_eq!(diff[key], serde_json::json!([]), "{key}");
    }
    assert!(v["communication"]["total_qubits"].as_u64().unwrap() > 0);
    assert!(v.get("elapsed_seconds").is_some());
    let rule = &v["rules"][0];
    for key in ["X", "Y", "support", "confidence"] {
        assert!(rule.get(key).is_some(), "rule lacks {key}");
    }
}

#[test]
fn mine_validates_thresholds() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "m.txt", MINING_ROWS);
    assert_eq!(qpdm(&["mine", "--db", s(&db), "--s", "1.1", "--c", "0.6", "--seed", "1"]).status, EXIT_USAGE);
    assert_eq!(qpdm(&["mine", "--db", s(&db), "--s", "0.3", "--c", "0", "--seed", "1"]).status, EXIT_USAGE);
}

#[test]
fn mine_csv_has_one_row_per_rule_and_ci_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "m.txt", MINING_ROWS);
    let base = ["mine", "--db", s(&db), "--s", "0.3", "--c", "0.6", "--p", "9", "--seed", "11", "--ci"];
    let json = qpdm(&base);
    let again = qpdm(&base);
    assert_eq!(json.stdout, again.stdout);
    let v = json.json();
    assert!(v.get("elapsed_seconds").is_none());

    let csv = qpdm(&[&base[..], &["--format", "csv"]].concat());
    let lines: Vec<&str> = csv.stdout.lines().collect();
    assert_eq!(lines[0], "X,Y,support,confidence,support_error_bound,confidence_error_bound");
    assert_eq!(lines.len() - 1, v["rules"].as_array().unwrap().len());

    let table = qpdm(&[&base[..], &["--format", "table"]].concat());
    assert!(table.stdout.contains("frequent:") && table.stdout.contains("rules:"));
}

#[test]
fn ci_mode_requires_a_seed() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", FOUR_ROWS);
    let r = qpdm(&["estimate", "--db", s(&db), "--items", "1", "--ci"]);
    assert_eq!(r.status, EXIT_USAGE);
    assert!(r.stderr.contains("seed"));
}

#[test]
fn attack_demo_reproduces_the_worked_example() {
    let r = qpdm(&["attack-demo", "--p", "11", "--eA", "9", "--eB", "3", "--S1", "2,8"]);
    assert_eq!(r.status, EXIT_OK, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["singly"], serde_json::json!([6, 7]));
    assert_eq!(v["doubly"], serde_json::json!([2, 7]));
    assert_eq!(v["candidates"], serde_json::json!([3]));
    assert!(v["elapsed"].is_number());

    assert_eq!(qpdm(&["attack-demo", "--p", "12", "--eA", "9", "--eB", "3", "--S1", "2,8"]).status, EXIT_USAGE);
    assert_eq!(qpdm(&["attack-demo", "--p", "11", "--eA", "5", "--eB", "3", "--S1", "2,8"]).status, EXIT_USAGE);
    assert_eq!(qpdm(&["attack-demo", "--p", "11", "--eA", "9", "--eB", "3", "--S1", "2,11"]).status, EXIT_USAGE);
}

#[test]
fn attack_demo_recovers_the_key_for_p23() {
    let r = qpdm(&["attack-demo", "--p", "23", "--eA", "7", "--eB", "13", "--S1", "2,5,9,14,20", "--ci"]);
    assert_eq!(r.status, EXIT_OK, "{}", r.stderr);
    let v = r.json();
    assert!(v["candidates"].as_array().unwrap().contains(&serde_json::json!(13)));
    assert!(v.get("elapsed").is_none());
}

#[test]
fn compare_reports_both_costs() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.txt", SIXTEEN_ROWS);
    let r = qpdm(&["compare", "--db", s(&db), "--items", "1,3", "--split", "2", "--p", "6", "--seed", "4"]);
    assert_eq!(r.status, EXIT_OK, "{}", r.stderr);
    let v = r.json();
    let (n, p) = (4u64, 64u64);
    assert_eq!(v["exact_support"], 0.25);
    assert_eq!(v["quantum"]["qubits_per_count"].as_u64().unwrap(), (p - 1) * (4 * n + 2));
    assert_eq!(v["quantum"]["qubits_per_call"].as_u64().unwrap(), 4 * n + 2);
    let c = &v["classical"];
    let prime = c["prime"].as_u64().unwrap();
    assert_eq!(prime, 17);
    let bits_per = 64 - (prime - 1).leading_zeros() as u64;
    let sizes = c["s1_size"].as_u64().unwrap() + c["s2_size"].as_u64().unwrap();
    assert_eq!(c["bits_sent"].as_u64().unwrap(), 2 * sizes * bits_per);
    assert_eq!(c["support"], 0.25);
}

#[test]
fn data_and_file_errors() {
    let dir = TempDir::new().unwrap();
    let empty = write_db(&dir, "e.csv", "");
    assert_eq!(qpdm(&["compare", "--db", s(&empty), "--items", "1", "--seed", "1"]).status, EXIT_DATA);
    let bad = write_db(&dir, "b.csv", "a,b\n1,0\n1,x\n");
    let r = qpdm(&["estimate", "--db", s(&bad), "--items", "1", "--seed", "1"]);
    assert_eq!(r.status, EXIT_DATA);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
    let missing = dir.path().join("missing.csv");
    assert_eq!(qpdm(&["estimate", "--db", s(&missing), "--items", "1", "--seed", "1"]).status, EXIT_FILE);
}

#[test]
fn out_writes_whole_reports_only() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", FOUR_ROWS);
    let out = dir.path().join("report.json");
    let r = qpdm(&["estimate", "--db", s(&db), "--items", "1,3", "--p", "5", "--seed", "9", "--out", s(&out)]);
    assert_eq!(r.status, EXIT_OK);
    assert!(r.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["seed"], 9);

    let bad = write_db(&dir, "b.csv", "a,b\n1,2\n");
    let failed = dir.path().join("failed.json");
    assert_eq!(
        qpdm(&["estimate", "--db", s(&bad), "--items", "1", "--seed", "9", "--out", s(&failed)]).status,
        EXIT_DATA
    );
    assert!(!failed.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 3);

    let nowhere = dir.path().join("no/such/dir/r.json");
    assert_eq!(
        qpdm(&["estimate", "--db", s(&db), "--items", "1", "--p", "4", "--seed", "9", "--out", s(&nowhere)]).status,
        EXIT_FILE
    );
}

#[test]
fn binary_reads_seed_from_environment_and_sets_exit_status() {
    let dir = TempDir::new().unwrap();
    let db = write_db(&dir, "d.csv", FOUR_ROWS);
    let exe = env!("CARGO_BIN_EXE_qpdm");
    let run_bin = |extra: &[&str]| {
        Command::new(exe)
            .args(["estimate", "--db", s(&db), "--p", "5", "--ci"])
            .args(extra)
            .env("QPDM_SEED", "77")
            .output()
            .unwrap()
    };
    let a = run_bin(&["--items", "1,3"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 77);
    assert_eq!(a.stdout, run_bin(&["--items", "1,3"]).stdout);
    assert_eq!(run_bin(&["--items", ""]).status.code(), Some(EXIT_USAGE));

    let help = Command::new(exe).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("attack-demo"));
}
