// SPDX-License-Identifier: Apache-2.0

//! Named pass sequences and structural statistics.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ir::{Diagnostic, Program, FSM_ATTR, GENERATED, WRAPPER_ATTR};
use crate::lower::{self, LowerError, LowerOptions};
use crate::opt::{self, PromotionConfig};

pub const PRESETS: [&str; 5] = ["B", "SH", "SC", "SH-SC", "SC-SH"];
pub const CUSTOM: &str = "custom";
pub const STATS_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pipeline {
    pub name: String,
    pub passes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("unknown pipeline preset `{0}` (expected one of B, SH, SC, SH-SC, SC-SH)")]
    UnknownPreset(String),
    #[error("unknown pass `{0}`")]
    UnknownPass(String),
    #[error(transparent)]
    Lower(#[from] LowerError),
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Pipeline {
    pub fn preset(name: &str) -> Result<Self, PipelineError> {
        let front: &[&str] = match name {
            "B" => &[],
            "SH" => &[opt::INFER, opt::PROMOTE, opt::SHARE],
            "SC" => &[opt::INFER, opt::PROMOTE, opt::COMPACT],
            "SH-SC" => &[opt::INFER, opt::PROMOTE, opt::SHARE, opt::COMPACT],
            "SC-SH" => &[opt::INFER, opt::PROMOTE, opt::COMPACT, opt::SHARE],
            _ => return Err(PipelineError::UnknownPreset(name.to_string())),
        };
        let mut passes = names(front);
        passes.extend(names(&lower::PASSES));
        Ok(Pipeline {
            name: name.to_string(),
            passes,
        })
    }

    /// An explicit pass list, run exactly as given.
    pub fn custom<S: AsRef<str>>(passes: &[S]) -> Result<Self, PipelineError> {
        let passes: Vec<String> = passes.iter().map(|p| p.as_ref().to_string()).collect();
        if let Some(bad) = passes.iter().find(|p| !is_pass(p)) {
            return Err(PipelineError::UnknownPass(bad.clone()));
        }
        Ok(Pipeline {
            name: CUSTOM.to_string(),
            passes,
        })
    }
}

pub fn is_pass(name: &str) -> bool {
    opt::PASSES.contains(&name) || lower::PASSES.contains(&name)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PipelineOptions {
    pub promotion: PromotionConfig,
    pub lower: LowerOptions,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub program: Program,
    pub warnings: Vec<Diagnostic>,
    /// Snapshot taken right after the pass named in `emit_after`.
    pub snapshot: Option<Program>,
}

/// Runs every pass of `pipeline` in order.
pub fn run(
    pipeline: &Pipeline,
    program: &Program,
    options: &PipelineOptions,
    emit_after: Option<&str>,
) -> Result<PipelineOutput, PipelineError> {
    if let Some(p) = emit_after.filter(|p| !is_pass(p)) {
        return Err(PipelineError::UnknownPass(p.to_string()));
    }
    let mut p = program.clone();
    let mut warnings = vec![];
    let mut snapshot = None;
    for pass in &pipeline.passes {
        p = match opt::run_pass(pass, &p, &options.promotion, &mut warnings) {
            Some(out) => out,
            None => lower::run_pass(pass, &p, options.lower)
                .ok_or_else(|| PipelineError::UnknownPass(pass.clone()))??,
        };
        if emit_after == Some(pass.as_str()) {
            snapshot = Some(p.clone());
        }
    }
    Ok(PipelineOutput {
        program: p,
        warnings,
        snapshot,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StatsReport {
    pub version: u32,
    pub pipeline: String,
    pub passes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u64>,
    pub groups: usize,
    pub static_groups: usize,
    pub fsm_bits: u64,
    pub cells_by_prototype: BTreeMap<String, usize>,
    pub cells_total: usize,
    /// Cells declared by the user, not introduced by lowering.
    pub datapath_cells: usize,
    pub wrappers: usize,
}

impl StatsReport {
    pub fn new(pipeline: &Pipeline, program: &Program, cycles: Option<u64>) -> Self {
        let mut r = StatsReport {
            version: STATS_VERSION,
            pipeline: pipeline.name.clone(),
            passes: pipeline.passes.clone(),
            cycles,
            groups: 0,
            static_groups: 0,
            fsm_bits: 0,
            cells_by_prototype: BTreeMap::new(),
            cells_total: 0,
            datapath_cells: 0,
            wrappers: 0,
        };
        for c in &program.components {
            r.groups += c.groups.len();
            r.static_groups += c.static_groups.len();
            r.wrappers += c
                .groups
                .iter()
                .filter(|g| g.attributes.has(WRAPPER_ATTR))
                .count();
            for cell in &c.cells {
                *r.cells_by_prototype
                    .entry(cell.prototype.clone())
                    .or_default() += 1;
                r.cells_total += 1;
                if !cell.attributes.has(GENERATED) {
                    r.datapath_cells += 1;
                }
                if cell.attributes.has(FSM_ATTR) {
                    r.fsm_bits += cell.args.first().copied().unwrap_or(0);
                }
            }
        }
        r
    }
}
