// SPDX-License-Identifier: Apache-2.0

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use uil_ffi::*;

const QUOTIENT: &str = include_str!("../../core/tests/fixtures/quotient.uil");

fn last_error() -> String {
    let p = uil_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(src: &str) -> *mut UilProgram {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { uil_program_parse(src.as_ptr(), &mut p) },
        UilStatus::Ok
    );
    assert!(!p.is_null());
    p
}

#[test]
fn parse_pipeline_simulate_round_trip() {
    let p = parse(QUOTIENT);
    let sc = CString::new("SC").unwrap();
    assert_eq!(
        unsafe { uil_program_run_pipeline(p, sc.as_ptr()) },
        UilStatus::Ok
    );

    let data = CString::new(r#"{"inputs": {"a": 2, "b": 3, "c": 4, "d": 5}}"#).unwrap();
    let (mut cycles, mut json) = (0u64, ptr::null_mut());
    assert_eq!(
        unsafe { uil_program_simulate(p, data.as_ptr(), 0, &mut cycles, &mut json) },
        UilStatus::Ok
    );
    let state: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(state["outputs"]["out"], 4);
    assert!(cycles > 4);
    unsafe { uil_string_free(json) };

    let mut text = ptr::null_mut();
    assert_eq!(unsafe { uil_program_print(p, &mut text) }, UilStatus::Ok);
    let printed = unsafe { CStr::from_ptr(text) }
        .to_str()
        .unwrap()
        .to_string();
    assert!(printed.contains("fsm_0"));
    unsafe { uil_string_free(text) };
    let again = parse(&printed);
    unsafe {
        uil_program_free(again);
        uil_program_free(p);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut p = ptr::null_mut();
    let bad = CString::new("component main( {").unwrap();
    assert_eq!(
        unsafe { uil_program_parse(bad.as_ptr(), &mut p) },
        UilStatus::Parse
    );
    assert!(p.is_null());
    assert!(last_error().contains("error"));

    let invalid =
        CString::new("component main() -> () { cells {} wires {} control { g; } }").unwrap();
    assert_eq!(
        unsafe { uil_program_parse(invalid.as_ptr(), &mut p) },
        UilStatus::Invalid
    );

    assert_eq!(
        unsafe { uil_program_parse(ptr::null(), &mut p) },
        UilStatus::NullArgument
    );
    assert_eq!(
        unsafe { uil_program_run_pipeline(ptr::null_mut(), ptr::null()) },
        UilStatus::NullArgument
    );

    let p = parse(QUOTIENT);
    let nope = CString::new("XY").unwrap();
    assert_eq!(
        unsafe { uil_program_run_pipeline(p, nope.as_ptr()) },
        UilStatus::Pipeline
    );
    assert!(last_error().contains("XY"));
    let list = CString::new("infer-static, static-promote").unwrap();
    assert_eq!(
        unsafe { uil_program_run_pipeline(p, list.as_ptr()) },
        UilStatus::Ok
    );
    assert!(uil_last_error().is_null());

    let junk = CString::new("{").unwrap();
    assert_eq!(
        unsafe { uil_program_simulate(p, junk.as_ptr(), 0, ptr::null_mut(), ptr::null_mut()) },
        UilStatus::Data
    );
    assert_eq!(
        unsafe { uil_program_simulate(p, ptr::null(), 2, ptr::null_mut(), ptr::null_mut()) },
        UilStatus::Simulation
    );
    assert!(last_error().contains("cycle limit"));
    unsafe {
        uil_program_free(p);
        uil_program_free(ptr::null_mut());
        uil_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(uil_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and links the static library.
#[test]
fn c_client_links_against_static_library() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libuil_ffi.a");
    assert!(lib.exists(), "{}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let fixture = manifest.join("../core/tests/fixtures/quotient.uil");
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "uil.h"

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    fseek(f, 0, SEEK_SET);
    char *buf = malloc(n + 1);
    fread(buf, 1, n, f);
    buf[n] = 0;
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    char *src = slurp(argv[1]);
    UilProgram *p = NULL;
    if (uil_program_parse(src, &p) != UIL_STATUS_OK) { fprintf(stderr, "%s\n", uil_last_error()); return 1; }
    free(src);
    if (uil_program_run_pipeline(p, "SC") != UIL_STATUS_OK) return 2;
    uint64_t cycles = 0;
    char *state = NULL;
    UilStatus s = uil_program_simulate(p, "{\"inputs\": {\"a\": 2, \"b\": 3, \"c\": 4, \"d\": 5}}", 0, &cycles, &state);
    if (s != UIL_STATUS_OK) return 3;
    printf("%s\n", state);
    uil_string_free(state);
    if (uil_program_run_pipeline(p, "bogus") != UIL_STATUS_PIPELINE) return 4;
    uil_program_free(p);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("client");
    let out = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&bin).arg(&fixture).output().unwrap();
    assert!(
        run.status.success(),
        "exit {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let state: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(state["outputs"]["out"], 4);
}
