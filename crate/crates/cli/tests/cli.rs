// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cpabe(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpabe"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("spawn cpabe")
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = cpabe(cwd, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(cwd: &Path, args: &[&str]) -> i32 {
    cpabe(cwd, args).status.code().unwrap()
}

fn authority(dir: &Path) {
    ok(dir, &["setup", "--dir", "auth", "--universe", "admin,analyst,eu"]);
    ok(dir, &["keygen", "--dir", "auth", "--user", "ann", "--attrs", "analyst"]);
    ok(dir, &["keygen", "--dir", "auth", "--user", "root", "--attrs", "admin,eu"]);
}

#[test]
fn file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    authority(d);
    fs::write(d.join("m.txt"), b"payroll").unwrap();
    ok(d, &["enc", "--pub", "auth/pk.bin", "--policy", "admin and eu", "--in", "m.txt", "--out", "m.ct"]);
    ok(d, &["dec", "--pub", "auth/pk.bin", "--key", "auth/root.key", "--in", "m.ct", "--out", "m.out"]);
    assert_eq!(fs::read(d.join("m.out")).unwrap(), b"payroll");

    assert_eq!(code(d, &["dec", "--pub", "auth/pk.bin", "--key", "auth/ann.key", "--in", "m.ct", "--out", "x"]), 3);
    assert!(!d.join("x").exists());

    ok(d, &["enc", "--pub", "auth/pk.bin", "--policy", "analyst", "--in", "m.txt", "--out", "a.ct", "--det"]);
    ok(d, &["enc", "--pub", "auth/pk.bin", "--policy", "analyst", "--in", "m.txt", "--out", "b.ct", "--det"]);
    // Fresh data key per file, so DET does not link separate files.
    assert_ne!(fs::read(d.join("a.ct")).unwrap(), fs::read(d.join("b.ct")).unwrap());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    authority(d);
    fs::write(d.join("m.txt"), b"x").unwrap();

    // usage
    assert_eq!(code(d, &["frobnicate"]), 2);
    assert_eq!(code(d, &["enc", "--pub", "auth/pk.bin", "--policy", "a and", "--in", "m.txt", "--out", "o"]), 2);
    assert_eq!(code(d, &["keygen", "--dir", "auth", "--user", "eve", "--attrs", "root"]), 2);
    assert_eq!(code(d, &["keygen", "--dir", "auth", "--user", "ann", "--attrs", "eu", "--out", "ann2.key"]), 2);
    assert_eq!(code(d, &["bench", "size", "--runs", "0"]), 2);

    // storage
    assert_eq!(code(d, &["setup", "--dir", "auth", "--universe", "x"]), 4);
    assert_eq!(code(d, &["dec", "--pub", "auth/pk.bin", "--key", "auth/root.key", "--in", "missing", "--out", "o"]), 4);
    fs::write(d.join("junk.ct"), b"CPEF\x01\x00").unwrap();
    assert_eq!(code(d, &["dec", "--pub", "auth/pk.bin", "--key", "auth/root.key", "--in", "junk.ct", "--out", "o"]), 4);
    assert_eq!(code(d, &["bench", "queries", "--dir", "nowhere", "--runs", "1"]), 4);

    // registry reflects the two successful issuances only
    let users = fs::read_to_string(d.join("auth/users.tsv")).unwrap();
    assert_eq!(users.lines().count(), 3);
}

#[test]
fn store_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    authority(d);
    let loc = ["--store", "st", "--name", "people", "--pub", "auth/pk.bin"];
    let with = |extra: &[&'static str]| -> Vec<&str> {
        let mut v: Vec<&str> = loc.to_vec();
        v.extend_from_slice(extra);
        v
    };

    let mut create = vec!["store", "create"];
    create.extend(with(&[
        "--field",
        "name:det:analyst or admin",
        "--field",
        "salary:rnd:admin",
        "--field",
        "city:plain",
    ]));
    ok(d, &create);

    fs::write(
        d.join("docs.jsonl"),
        "{\"name\":\"Alice\",\"salary\":100,\"city\":\"Oslo\"}\n{\"name\":\"Bob\",\"salary\":7}\n\n{\"name\":\"Alice\",\"salary\":3}\n",
    )
    .unwrap();
    let mut insert = vec!["store", "insert"];
    insert.extend(with(&["--key", "auth/root.key", "--jsonl", "docs.jsonl"]));
    assert_eq!(ok(d, &insert), "1\n2\n3\n");

    let mut bad = vec!["store", "insert"];
    bad.extend(with(&["--key", "auth/ann.key", "--doc", "{\"name\":\"Eve\",\"salary\":1}"]));
    assert_eq!(code(d, &bad), 3);
    let mut bad = vec!["store", "insert"];
    bad.extend(with(&["--key", "auth/root.key", "--doc", "{\"age\":1}"]));
    assert_eq!(code(d, &bad), 2);

    let mut q = vec!["store", "find-eq"];
    q.extend(with(&["--key", "auth/ann.key", "--field", "name", "--value", "Alice"]));
    let out = ok(d, &q);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["doc_id"], 1);
    assert_eq!(lines[1]["doc_id"], 3);
    assert_eq!(lines[0]["name"], "Alice");
    assert!(lines[0]["salary"]["opaque"].is_string());

    let mut all = vec!["store", "find-all"];
    all.extend(with(&["--key", "auth/root.key"]));
    let out = ok(d, &all);
    let docs: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(docs.len(), 3);
    assert_eq!(docs[0]["salary"], "100");
    assert_eq!(docs[0]["city"], "Oslo");

    let mut rnd = vec!["store", "find-eq"];
    rnd.extend(with(&["--key", "auth/root.key", "--field", "salary", "--value", "7"]));
    assert_eq!(code(d, &rnd), 2);

    // tampered header
    let path = d.join("st/people.cpds");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("analyst or admin", "analyst or admiN", 1)).unwrap();
    assert_eq!(code(d, &all), 4);
}

#[test]
fn bench_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    authority(d);
    ok(
        d,
        &[
            "bench", "size", "--dir", "auth", "--attrs", "1,2", "--sizes-kb", "1,2", "--csv", "size.csv", "--raw",
            "raw.csv",
        ],
    );
    let csv = fs::read_to_string(d.join("size.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "experiment,variant,query,attrs,plaintext_kb,unit,mean,std_dev,runs,reference_ms");
    // attrs sweep at 2 KB plus both attr counts at 1 KB
    assert_eq!(rows.len(), 1 + 4);
    assert!(rows[1..].iter().all(|r| r.starts_with("size,cpabe,,") && r.contains(",bytes,")));

    let out = ok(d, &["bench", "dec-time", "--runs", "2", "--warmup", "0", "--attrs", "1,2", "--sizes-kb", "1"]);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().skip(1).all(|l| l.starts_with("dec-time,cpabe,,") && l.ends_with(",2,")));
}
