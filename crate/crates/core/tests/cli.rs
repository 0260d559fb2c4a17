// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn kernel(name: &str) -> String {
    root().join("kernels").join(name).display().to_string()
}

fn uil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uil"))
        .args(args)
        .env_remove("UIL_SEED")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn stats_dot_sc_beats_baseline_with_equal_results() {
    let (uil_path, data) = (kernel("dot.uil"), kernel("dot.json"));
    let run = |p: &str| {
        json(&uil(&[
            "stats",
            &uil_path,
            "--pipeline",
            p,
            "--data",
            &data,
            "--json",
        ]))
    };
    let (b, sc) = (run("B"), run("SC"));
    assert!(sc["cycles"].as_u64().unwrap() < b["cycles"].as_u64().unwrap());
    assert_eq!(b["version"], 1);

    let sim = |p: &str| json(&uil(&["sim", &uil_path, "--pipeline", p, "--data", &data]));
    let (b, sc) = (sim("B"), sim("SC"));
    assert_eq!(b["final_state"]["memories"], sc["final_state"]["memories"]);
    let expect: u64 = (1..=8u64).map(|k| k * (9 - k)).sum();
    assert_eq!(sc["final_state"]["memories"]["res"]["data"][0], expect);
}

#[test]
fn emit_after_collapse_shows_one_static_group() {
    let out = uil(&[
        "compile",
        &fixture("quotient.uil"),
        "--pipeline",
        "B",
        "--emit",
        "after:collapse-static",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("static<4> group").count(), 1);
    assert_eq!(text.matches("static<").count(), 1);
}

#[test]
fn sim_quotient_with_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("abcd.json");
    std::fs::write(&data, r#"{"inputs": {"a": 2, "b": 3, "c": 4, "d": 5}}"#).unwrap();
    let trace = dir.path().join("t.jsonl");
    let v = json(&uil(&[
        "sim",
        &fixture("quotient.uil"),
        "--data",
        data.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]));
    assert_eq!(v["final_state"]["outputs"]["out"], (2 + 3) * 4 / 5);
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(lines.lines().count() as u64, v["cycles"].as_u64().unwrap());
    for l in lines.lines() {
        let _: Value = serde_json::from_str(l).unwrap();
    }
}

#[test]
fn compile_writes_output_and_accepts_pass_lists() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.uil");
    let r = uil(&[
        "compile",
        &fixture("compact_chain.uil"),
        "-p",
        "schedule-compaction,collapse-static",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let p = uil::text::parse(&text).unwrap();
    assert_eq!(
        p.components[0]
            .static_groups
            .iter()
            .filter(|g| g.latency == 11)
            .count(),
        1
    );

    let r = uil(&[
        "compile",
        &fixture("compact_chain.uil"),
        "-p",
        "infer-static",
        "-p",
        "static-promote",
    ]);
    assert!(r.status.success());
}

#[test]
fn exit_codes() {
    assert_eq!(
        uil(&["compile", &fixture("quotient.uil"), "--pipeline", "XX"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        uil(&["compile", &fixture("quotient.uil"), "-p", "no-such-pass"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        uil(&[
            "compile",
            &fixture("quotient.uil"),
            "--emit",
            "after:cell-share"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(uil(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        uil(&["sim", &fixture("quotient.uil"), "--cycle-limit", "2"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.uil");
    std::fs::write(
        &bad,
        "component main() -> () {\n  cells {}\n  wires {}\n  control { nowhere; }\n}\n",
    )
    .unwrap();
    let r = uil(&["compile", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("bad.uil:4:"), "{err}");
}

#[test]
fn while_fastpath_flag_changes_cycles() {
    let (k, d) = (kernel("dot.uil"), kernel("dot.json"));
    let run = |extra: &[&str]| {
        let mut a = vec![
            "stats",
            k.as_str(),
            "--pipeline",
            "SC",
            "--data",
            d.as_str(),
            "--json",
        ];
        a.extend(extra);
        json(&uil(&a))["cycles"].as_u64().unwrap()
    };
    assert!(run(&[]) < run(&["--no-while-fastpath"]));
}

#[test]
fn fuzz_subcommand_reads_seed_from_env() {
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_uil"));
        c.args(["fuzz", "--count", "5", "--json"])
            .env_remove("UIL_SEED");
        if let Some(s) = env {
            c.env("UIL_SEED", s);
        }
        json(&c.output().unwrap())
    };
    let v = run(Some("42"));
    assert_eq!(v["seed"], 42);
    assert_eq!(v["checks"], 15);
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    assert_eq!(run(None)["seed"], 0);
}
