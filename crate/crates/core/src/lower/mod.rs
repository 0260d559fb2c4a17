// SPDX-License-Identifier: Apache-2.0

//! Lowering of static constructs to the dynamic core: island collapsing,
//! FSM instantiation and wrapper insertion.

mod collapse;
mod fsm;
mod wrapper;

use rayon::prelude::*;
use thiserror::Error;

use crate::ir::{Component, Program};

pub use collapse::collapse_static_control;
pub use fsm::{fsm_of, fsm_width, instantiate_fsms};
pub use wrapper::insert_wrappers;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("component `{component}`: {message}")]
    Internal { component: String, message: String },
}

impl LowerError {
    pub(crate) fn internal(component: &str, message: impl Into<String>) -> Self {
        LowerError::Internal {
            component: component.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LowerOptions {
    /// Compile `while c { s }` with a single static island body as one loop wrapper.
    pub while_fastpath: bool,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions {
            while_fastpath: true,
        }
    }
}

/// Pass names as accepted by `-p`.
pub const COLLAPSE: &str = "collapse-static";
pub const FSM: &str = "static-fsm";
pub const WRAPPER: &str = "static-wrapper";
pub const PASSES: [&str; 3] = [COLLAPSE, FSM, WRAPPER];

/// Applies `f` to every component; components are independent, so this runs in parallel.
pub fn map_components<E: Send>(
    program: &Program,
    f: impl Fn(&Program, &Component) -> Result<Component, E> + Sync,
) -> Result<Program, E> {
    let components = program
        .components
        .par_iter()
        .map(|c| f(program, c))
        .collect::<Result<Vec<_>, E>>()?;
    Ok(Program {
        components,
        ..program.clone()
    })
}

/// Runs one lowering pass by name; `None` if the name is unknown.
pub fn run_pass(
    name: &str,
    program: &Program,
    options: LowerOptions,
) -> Option<Result<Program, LowerError>> {
    Some(match name {
        COLLAPSE => map_components(program, collapse_static_control),
        FSM => map_components(program, |_, c| Ok(instantiate_fsms(c))),
        WRAPPER => map_components(program, |_, c| Ok(insert_wrappers(c, options))),
        _ => return None,
    })
}

/// Full lowering: collapse, FSMs, wrappers.
pub fn lower(program: &Program, options: LowerOptions) -> Result<Program, LowerError> {
    let mut p = program.clone();
    for pass in PASSES {
        p = run_pass(pass, &p, options).expect("known pass")?;
    }
    Ok(p)
}
