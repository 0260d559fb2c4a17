// SPDX-License-Identifier: Apache-2.0

//! C interface: parse a program, run a pipeline over it, print it and
//! simulate it. Programs are opaque handles; every call returns a status code
//! and leaves a message for `uil_last_error` on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uil::ir::{validate, Program, Severity};
use uil::pipeline::{self, Pipeline, PipelineOptions};
use uil::sim::{simulate, MemoryData, SimConfig};
use uil::text::{parse, print};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UilStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Invalid = 4,
    Pipeline = 5,
    Data = 6,
    Simulation = 7,
    Panic = 8,
}

/// A parsed, validated program.
pub struct UilProgram {
    program: Program,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

type Failure = (UilStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UilStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UilStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            UilStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err((UilStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| (UilStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("no interior nul")
        .into_raw()
}

/// Parses and validates `source`. On success `*out` owns a new program that
/// must be released with `uil_program_free`.
///
/// # Safety
/// `source` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn uil_program_parse(
    source: *const c_char,
    out: *mut *mut UilProgram,
) -> UilStatus {
    guard(|| {
        if out.is_null() {
            return Err((UilStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let program =
            parse(text(source, "source")?).map_err(|e| (UilStatus::Parse, e.to_string()))?;
        let errors: Vec<String> = validate(&program)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        if !errors.is_empty() {
            return Err((UilStatus::Invalid, errors.join("\n")));
        }
        *out = Box::into_raw(Box::new(UilProgram { program }));
        Ok(())
    })
}

/// Releases a program. Null is ignored.
///
/// # Safety
/// `program` must come from `uil_program_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uil_program_free(program: *mut UilProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Replaces the program with the result of a pipeline: either a preset name
/// (`B`, `SH`, `SC`, `SH-SC`, `SC-SH`) or a comma-separated pass list.
///
/// # Safety
/// `program` must be a live handle and `pipeline` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uil_program_run_pipeline(
    program: *mut UilProgram,
    pipeline: *const c_char,
) -> UilStatus {
    guard(|| {
        let handle = program
            .as_mut()
            .ok_or((UilStatus::NullArgument, "program is null".to_string()))?;
        let name = text(pipeline, "pipeline")?;
        let pl = if name.contains(',') || pipeline::is_pass(name) {
            Pipeline::custom(&name.split(',').map(str::trim).collect::<Vec<_>>())
        } else {
            Pipeline::preset(name)
        }
        .map_err(|e| (UilStatus::Pipeline, e.to_string()))?;
        let out = pipeline::run(&pl, &handle.program, &PipelineOptions::default(), None)
            .map_err(|e| (UilStatus::Pipeline, e.to_string()))?;
        handle.program = out.program;
        Ok(())
    })
}

/// Prints the program as text into `*out`; release with `uil_string_free`.
///
/// # Safety
/// `program` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn uil_program_print(
    program: *const UilProgram,
    out: *mut *mut c_char,
) -> UilStatus {
    guard(|| {
        if out.is_null() {
            return Err((UilStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let handle = program
            .as_ref()
            .ok_or((UilStatus::NullArgument, "program is null".to_string()))?;
        *out = owned(print(&handle.program));
        Ok(())
    })
}

/// Simulates the program. `data_json` may be null for no initial data;
/// `cycle_limit` 0 uses the default. On success `*cycles` holds the cycle
/// count and `*final_state_json` the final state, to be released with
/// `uil_string_free`. Either output pointer may be null.
///
/// # Safety
/// `program` must be a live handle; non-null pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn uil_program_simulate(
    program: *const UilProgram,
    data_json: *const c_char,
    cycle_limit: u64,
    cycles: *mut u64,
    final_state_json: *mut *mut c_char,
) -> UilStatus {
    guard(|| {
        if !final_state_json.is_null() {
            *final_state_json = ptr::null_mut();
        }
        let handle = program
            .as_ref()
            .ok_or((UilStatus::NullArgument, "program is null".to_string()))?;
        let data = if data_json.is_null() {
            MemoryData::default()
        } else {
            MemoryData::from_json(text(data_json, "data_json")?)
                .map_err(|e| (UilStatus::Data, e.to_string()))?
        };
        let mut config = SimConfig::default();
        if cycle_limit > 0 {
            config.cycle_limit = cycle_limit;
        }
        let t = simulate(&handle.program, &data, &config)
            .map_err(|e| (UilStatus::Simulation, e.to_string()))?;
        if !cycles.is_null() {
            *cycles = t.cycles;
        }
        if !final_state_json.is_null() {
            *final_state_json =
                owned(serde_json::to_string(&t.final_state).expect("final state serializes"));
        }
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uil_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn uil_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn uil_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
