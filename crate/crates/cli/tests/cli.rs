// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pepsi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pepsi"))
        .current_dir(dir)
        .env_remove("PEPSI_PASSPHRASE")
        .args(args)
        .output()
        .expect("spawn pepsi")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = pepsi(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const LABEL: [&str; 4] = ["--label", "Temp", "--label", "Irvine, CA"];

fn register(dir: &Path, role: &str, id: &str, out: &str, label: &[&str]) {
    let mut args = vec![
        "ra",
        role,
        "--master",
        "ra.key",
        "--id",
        id,
        "--out",
        out,
        "--ledger",
        "ledger.tsv",
    ];
    args.extend_from_slice(label);
    ok(dir, &args);
}

#[test]
fn seeded_setup_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["ra", "setup", "--seed", "42", "--out", "a.key"]);
    ok(dir.path(), &["ra", "setup", "--seed", "42", "--out", "b.key"]);
    ok(dir.path(), &["ra", "setup", "--seed", "43", "--out", "c.key"]);
    let a = fs::read(dir.path().join("a.key")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.key")).unwrap());
    assert_ne!(a, fs::read(dir.path().join("c.key")).unwrap());
    assert_eq!(&a[..4], b"PEPM");
}

#[test]
fn full_protocol_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["ra", "setup", "--seed", "1", "--out", "ra.key"]);
    register(d, "register-node", "alice", "node.key", &LABEL);
    register(d, "register-querier", "bob", "bob.key", &["--label", "irvine, ca", "--label", "TEMP"]);
    register(d, "register-querier", "carol", "carol.key", &["--label", "noise"]);

    let ledger = fs::read_to_string(d.join("ledger.tsv")).unwrap();
    assert_eq!(ledger.lines().count(), 3);
    assert!(ledger.starts_with("alice\tnode\t"));

    let node_tag = ok(d, &["node", "report", "--key", "node.key", "--payload", "74 F", "--out", "r1.bin"]);
    let bob_tag = ok(d, &["querier", "subscribe", "--key", "bob.key", "--endpoint", "bob", "--out", "bob.sub"]);
    ok(d, &["querier", "subscribe", "--key", "carol.key", "--endpoint", "carol", "--out", "carol.sub"]);
    let tag_line = |s: &str| s.lines().find(|l| l.starts_with("tag=")).unwrap().to_owned();
    assert_eq!(tag_line(&node_tag), tag_line(&bob_tag));
    assert_eq!(fs::read(d.join("r1.bin")).unwrap().len(), 4 + 57);

    let sp = ok(
        d,
        &[
            "sp", "run", "--subscription", "bob.sub", "--subscription", "carol.sub",
            "--report", "r1.bin", "--out-dir", "out",
        ],
    );
    assert!(sp.contains("delivery=1 subscription_id=1 endpoint=bob"));
    assert!(sp.contains("matches_made=1"));
    assert!(sp.contains("subs_active=2"));
    let delivery = fs::read(d.join("out/delivery-1.bin")).unwrap();
    assert_eq!(&delivery[8..], &fs::read(d.join("r1.bin")).unwrap()[..]);

    let plain = ok(d, &["querier", "decrypt", "--key", "bob.key", "--report", "out/delivery-1.bin"]);
    assert!(plain.contains("payload=74 F"));
    let plain = ok(d, &["querier", "decrypt", "--key", "bob.key", "--report", "r1.bin"]);
    assert!(plain.contains("payload=74 F"));

    // Wrong label key: authentication failure is a protocol error.
    let out = pepsi(d, &["querier", "decrypt", "--key", "carol.key", "--report", "r1.bin"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn truncated_key_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["ra", "setup", "--seed", "1", "--out", "ra.key"]);
    register(d, "register-node", "alice", "node.key", &LABEL);
    let key = fs::read(d.join("node.key")).unwrap();
    fs::write(d.join("short.key"), &key[..key.len() - 5]).unwrap();
    let out = pepsi(d, &["node", "report", "--key", "short.key", "--payload", "1", "--out", "r.bin"]);
    assert_eq!(code(&out), 2);
    assert!(!d.join("r.bin").exists());

    // A querier key where a node key is expected is also a format error.
    register(d, "register-querier", "bob", "q.key", &LABEL);
    let out = pepsi(d, &["node", "report", "--key", "q.key", "--payload", "1", "--out", "r.bin"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn wrong_passphrase_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["ra", "setup", "--seed", "1", "--out", "ra.key", "--passphrase", "s3cret"]);
    let args = ["ra", "register-node", "--master", "ra.key", "--id", "a", "--out", "n.key", "--label", "x"];
    assert_eq!(code(&pepsi(d, &args)), 2);
    let mut with = args.to_vec();
    with.extend(["--passphrase", "s3cret"]);
    ok(d, &with);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&pepsi(d, &[])), 1);
    assert_eq!(code(&pepsi(d, &["ra", "frobnicate"])), 1);
    assert_eq!(code(&pepsi(d, &["bench", "report", "--trials", "zero"])), 1);
    assert_eq!(code(&pepsi(d, &["sim", "run", "--config", "missing.toml"])), 1);
    assert_eq!(code(&pepsi(d, &["--help"])), 0);

    ok(d, &["ra", "setup", "--seed", "1", "--out", "ra.key"]);
    let out = pepsi(d, &["ra", "register-node", "--master", "ra.key", "--id", "a", "--out", "n.key", "--label", "  "]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no keywords"));
}

#[test]
fn sim_run_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("minimal.toml"),
        "seed = 1\nnum_nodes = 1\nnum_queriers = 1\nreports_per_node = 1\n\
         subscription_density = 1.0\npayload_size = 4\nlabel_universe = [[\"Temp\"]]\n",
    )
    .unwrap();
    let out = ok(d, &["sim", "run", "--config", "minimal.toml"]);
    assert!(out.lines().any(|l| l == "deliveries=1"));
    assert!(out.lines().any(|l| l == "decryptions_ok=1"));

    fs::write(d.join("bad.toml"), "seed = 1\n").unwrap();
    assert_eq!(code(&pepsi(d, &["sim", "run", "--config", "bad.toml"])), 1);
}

#[test]
fn bench_reports_overhead() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["bench", "report", "--trials", "3"]);
    assert!(out.lines().any(|l| l == "report_overhead_bytes=57"));
    assert!(out.lines().any(|l| l == "trials=3"));
    let out = ok(dir.path(), &["bench", "report", "--trials", "2", "--warm"]);
    assert!(out.lines().any(|l| l == "cold=false"));
}
