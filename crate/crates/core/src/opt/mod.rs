// SPDX-License-Identifier: Apache-2.0

//! Timing-aware optimizations: latency inference, static promotion,
//! schedule compaction and cell sharing.

mod compact;
mod infer;
mod promote;
mod share;

use crate::ir::{Diagnostic, Program};
use crate::lower::map_components;

pub use compact::{asap_schedule, compact_schedule, dependency_graph, DependencyGraph, Schedule};
pub use infer::{dynamic_cycles, group_latency, infer_static_timing};
pub use promote::{island_size, promote, PromotionConfig};
pub use share::{share_cells, shareable};

pub const INFER: &str = "infer-static";
pub const PROMOTE: &str = "static-promote";
pub const COMPACT: &str = "schedule-compaction";
pub const SHARE: &str = "cell-share";
pub const PASSES: [&str; 4] = [INFER, PROMOTE, COMPACT, SHARE];

/// Runs one optimization by name over every component; `None` for unknown names.
/// Inference warnings are appended to `warnings`.
pub fn run_pass(
    name: &str,
    program: &Program,
    config: &PromotionConfig,
    warnings: &mut Vec<Diagnostic>,
) -> Option<Program> {
    let never = |r: Result<Program, std::convert::Infallible>| match r {
        Ok(p) => p,
        Err(e) => match e {},
    };
    Some(match name {
        INFER => {
            let mut out = program.clone();
            for (i, c) in program.components.iter().enumerate() {
                let (c, w) = infer_static_timing(program, c);
                out.components[i] = c;
                warnings.extend(w);
            }
            out
        }
        PROMOTE => never(map_components(program, |p, c| Ok(promote(p, c, config)))),
        COMPACT => never(map_components(program, |p, c| Ok(compact_schedule(p, c)))),
        SHARE => never(map_components(program, |p, c| Ok(share_cells(p, c)))),
        _ => return None,
    })
}
