// SPDX-License-Identifier: Apache-2.0

//! Seeded random programs and the differential refinement harness.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ir::{validate, Program, Severity};
use crate::lower;
use crate::opt;
use crate::pipeline::{self, Pipeline, PipelineOptions};
use crate::sim::{check_refinement, MemoryData, SimConfig};
use crate::text::{parse, print};

const W: u32 = 8;

struct Gen {
    rng: ChaCha8Rng,
    cells: String,
    groups: String,
    next: usize,
}

impl Gen {
    fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{base}{}", self.next)
    }

    fn cell(&mut self, base: &str, proto: &str, width: u32) -> String {
        let name = self.fresh(base);
        writeln!(self.cells, "    {name} = {proto}({width});").unwrap();
        name
    }

    fn group(&mut self, body: &str, done: &str) -> String {
        let name = self.fresh("g");
        writeln!(
            self.groups,
            "    group {name} {{ {body} {name}[done] = {done}; }}"
        )
        .unwrap();
        name
    }

    fn static_group(&mut self, latency: u64, body: &str) -> String {
        let name = self.fresh("s");
        writeln!(
            self.groups,
            "    static<{latency}> group {name} {{ {body} }}"
        )
        .unwrap();
        name
    }

    fn pick(&mut self, regs: &[usize]) -> usize {
        regs[self.rng.gen_range(0..regs.len())]
    }

    fn konst(&mut self) -> String {
        format!("{W}'d{}", self.rng.gen_range(1..16))
    }

    fn operand(&mut self, regs: &[usize]) -> String {
        if self.rng.gen_bool(0.5) {
            format!("r{}.out", self.pick(regs))
        } else {
            self.konst()
        }
    }

    fn store(&mut self, dst: usize, src: &str) -> String {
        self.group(
            &format!("r{dst}.in = {src}; r{dst}.write_en = 1'd1;"),
            &format!("r{dst}.done"),
        )
    }

    fn leaf(&mut self, regs: &[usize]) -> String {
        let (x, d) = (self.pick(regs), self.pick(regs));
        match self.rng.gen_range(0..10) {
            0..=3 => {
                let op = ["std_add", "std_sub", "std_xor"][self.rng.gen_range(0..3)];
                let a = self.cell("a", op, W);
                let rhs = self.operand(regs);
                let body = format!(
                    "{a}.left = r{x}.out; {a}.right = {rhs}; r{d}.in = {a}.out; r{d}.write_en = 1'd1;"
                );
                self.group(&body, &format!("r{d}.done"))
            }
            4 | 5 => {
                let m = self.cell("m", "std_mult_pipe", W);
                let rhs = self.operand(regs);
                let run = self.group(
                    &format!("{m}.left = r{x}.out; {m}.right = {rhs}; {m}.go = 1'd1;"),
                    &format!("{m}.done"),
                );
                let st = self.store(d, &format!("{m}.out"));
                format!("seq {{ {run}; {st}; }}")
            }
            6 => {
                let q = self.cell("q", "std_div", W);
                let rhs = self.konst();
                let run = self.group(
                    &format!("{q}.left = r{x}.out; {q}.right = {rhs}; {q}.go = 1'd1;"),
                    &format!("{q}.done"),
                );
                let st = self.store(d, &format!("{q}.out"));
                format!("seq {{ {run}; {st}; }}")
            }
            _ => self.static_leaf(regs),
        }
    }

    /// A static leaf, for use under static control.
    fn static_leaf(&mut self, regs: &[usize]) -> String {
        let (x, d) = (self.pick(regs), self.pick(regs));
        let rhs = self.konst();
        if self.rng.gen_bool(0.6) {
            let a = self.cell("a", "std_add", W);
            self.static_group(
                1,
                &format!("{a}.left = r{x}.out; {a}.right = {rhs}; r{d}.in = {a}.out; r{d}.write_en = 1'd1;"),
            )
        } else {
            let m = self.cell("m", "std_mult", W);
            self.static_group(
                4,
                &format!(
                    "{m}.left = %[0:3] ? r{x}.out; {m}.right = %[0:3] ? {rhs}; {m}.go = %[0:3] ? 1'd1; \
                     r{d}.in = %3 ? {m}.out; r{d}.write_en = %3 ? 1'd1;"
                ),
            )
        }
    }

    fn split(&mut self, regs: &[usize], k: usize) -> Vec<Vec<usize>> {
        let mut parts = vec![vec![]; k];
        for (i, &r) in regs.iter().enumerate() {
            let slot = if i < k { i } else { self.rng.gen_range(0..k) };
            parts[slot].push(r);
        }
        parts
    }

    fn static_control(&mut self, depth: u32, regs: &[usize]) -> String {
        if depth == 0 {
            return self.static_leaf(regs);
        }
        match self.rng.gen_range(0..4) {
            0 => {
                let n = self.rng.gen_range(2..4);
                let kids: Vec<String> = (0..n)
                    .map(|_| self.static_control(depth - 1, regs))
                    .collect();
                format!(
                    "static seq {{ {} }}",
                    kids.iter()
                        .map(|k| format!("{k};"))
                        .collect::<Vec<_>>()
                        .join(" ")
                )
            }
            1 if regs.len() >= 2 => {
                let parts = self.split(regs, 2);
                let kids: Vec<String> = parts
                    .iter()
                    .map(|p| self.static_control(depth - 1, p))
                    .collect();
                format!(
                    "static par {{ {} }}",
                    kids.iter()
                        .map(|k| format!("{k};"))
                        .collect::<Vec<_>>()
                        .join(" ")
                )
            }
            2 => {
                let n = self.rng.gen_range(1..4);
                let body = self.static_control(depth - 1, regs);
                format!("static repeat {n} {{ {body}; }}")
            }
            _ => self.static_leaf(regs),
        }
    }

    fn control(&mut self, depth: u32, regs: &[usize]) -> String {
        if depth == 0 {
            return self.leaf(regs);
        }
        match self.rng.gen_range(0..8) {
            0 | 1 => {
                let n = self.rng.gen_range(2..5);
                let kids: Vec<String> = (0..n).map(|_| self.control(depth - 1, regs)).collect();
                format!(
                    "seq {{ {} }}",
                    kids.iter()
                        .map(|k| format!("{k};"))
                        .collect::<Vec<_>>()
                        .join(" ")
                )
            }
            2 if regs.len() >= 2 => {
                let k = self.rng.gen_range(2..=regs.len().min(3));
                let parts = self.split(regs, k);
                let kids: Vec<String> = parts.iter().map(|p| self.control(depth - 1, p)).collect();
                format!(
                    "par {{ {} }}",
                    kids.iter()
                        .map(|k| format!("{k};"))
                        .collect::<Vec<_>>()
                        .join(" ")
                )
            }
            3 => {
                let f = self.cell("f", "std_reg", 1);
                let c = self.cell("c", "std_lt", W);
                let x = self.pick(regs);
                let rhs = self.konst();
                let set = self.group(
                    &format!("{c}.left = r{x}.out; {c}.right = {rhs}; {f}.in = {c}.out; {f}.write_en = 1'd1;"),
                    &format!("{f}.done"),
                );
                let t = self.control(depth - 1, regs);
                let e = self.control(depth - 1, regs);
                format!("seq {{ {set}; if {f}.out {{ {t}; }} else {{ {e}; }} }}")
            }
            4 => {
                let n = self.rng.gen_range(1..4);
                let cnt = self.cell("n", "std_reg", W);
                let f = self.cell("f", "std_reg", 1);
                let sub = self.cell("d", "std_sub", W);
                let ne = self.cell("c", "std_neq", W);
                let init = self.group(
                    &format!("{cnt}.in = {W}'d{n}; {cnt}.write_en = 1'd1;"),
                    &format!("{cnt}.done"),
                );
                let arm = self.group(
                    &format!("{f}.in = 1'd1; {f}.write_en = 1'd1;"),
                    &format!("{f}.done"),
                );
                let step = self.group(
                    &format!("{sub}.left = {cnt}.out; {sub}.right = {W}'d1; {cnt}.in = {sub}.out; {cnt}.write_en = 1'd1;"),
                    &format!("{cnt}.done"),
                );
                let check = self.group(
                    &format!("{ne}.left = {cnt}.out; {ne}.right = {W}'d0; {f}.in = {ne}.out; {f}.write_en = 1'd1;"),
                    &format!("{f}.done"),
                );
                let body = self.control(depth - 1, regs);
                format!("seq {{ {init}; {arm}; while {f}.out {{ seq {{ {body}; {step}; {check}; }} }} }}")
            }
            5 => {
                let n = self.rng.gen_range(1..4);
                let body = self.control(depth - 1, regs);
                format!("repeat {n} {{ {body}; }}")
            }
            6 => self.static_control(depth.min(2), regs),
            _ => self.leaf(regs),
        }
    }
}

/// A random well-formed, race-free, terminating program for `seed`.
pub fn generate(seed: u64) -> Program {
    parse(&generate_text(seed)).expect("generated text parses")
}

pub fn generate_text(seed: u64) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cells: String::new(),
        groups: String::new(),
        next: 0,
    };
    let nregs = g.rng.gen_range(2..6);
    let regs: Vec<usize> = (0..nregs).collect();
    let depth = g.rng.gen_range(1..4);
    let control = g.control(depth, &regs);
    let outs: Vec<String> = regs.iter().map(|r| format!("o{r}: {W}")).collect();
    let mut cells = String::new();
    let mut wires = String::new();
    for r in &regs {
        writeln!(cells, "    r{r} = std_reg({W});").unwrap();
        writeln!(wires, "    o{r} = r{r}.out;").unwrap();
    }
    format!(
        "component main() -> ({}) {{\n  cells {{\n{cells}{}  }}\n  wires {{\n{}{wires}  }}\n  control {{ {control}; }}\n}}\n",
        outs.join(", "),
        g.cells,
        g.groups
    )
}

/// Pipelines every trial is checked against, by name.
pub fn trial_pipelines() -> Vec<Pipeline> {
    let mut promote = vec![opt::INFER, opt::PROMOTE];
    promote.extend(lower::PASSES);
    let mut p = Pipeline::custom(&promote).expect("known passes");
    p.name = "promote+lower".into();
    vec![
        p,
        Pipeline::preset("SH-SC").unwrap(),
        Pipeline::preset("SC-SH").unwrap(),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub pipeline: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: u64,
    pub checks: u64,
    pub equal: u64,
    pub not_slower: u64,
    pub failures: Vec<Failure>,
}

impl FuzzReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks one generated program against every trial pipeline.
pub fn trial(seed: u64) -> Vec<Result<(), Failure>> {
    let fail = |pipeline: &str, reason: String| Failure {
        seed,
        pipeline: pipeline.to_string(),
        reason,
    };
    let program = generate(seed);
    let errors: Vec<_> = validate(&program)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return vec![Err(fail("generate", format!("{errors:?}")))];
    }
    let data = MemoryData::default();
    let config = SimConfig::default();
    trial_pipelines()
        .iter()
        .map(|pl| {
            let out = pipeline::run(pl, &program, &PipelineOptions::default(), None)
                .map_err(|e| fail(&pl.name, e.to_string()))?;
            let r = check_refinement(&program, &out.program, &data, &config)
                .map_err(|e| fail(&pl.name, e.to_string()))?;
            if let Some(m) = r.mismatch {
                return Err(fail(
                    &pl.name,
                    format!("final state differs: {m}\n{}", print(&out.program)),
                ));
            }
            if r.refined_cycles > r.original_cycles {
                return Err(fail(
                    &pl.name,
                    format!(
                        "slower: {} > {} cycles",
                        r.refined_cycles, r.original_cycles
                    ),
                ));
            }
            Ok(())
        })
        .collect()
}

/// Runs `count` trials with seeds `seed, seed + 1, ...` in parallel.
pub fn fuzz(seed: u64, count: u64) -> FuzzReport {
    let results: Vec<Vec<Result<(), Failure>>> = (0..count)
        .into_par_iter()
        .map(|i| trial(seed.wrapping_add(i)))
        .collect();
    let mut report = FuzzReport {
        seed,
        trials: count,
        ..FuzzReport::default()
    };
    for r in results.into_iter().flatten() {
        report.checks += 1;
        match r {
            Ok(()) => {
                report.equal += 1;
                report.not_slower += 1;
            }
            Err(f) => {
                if f.reason.starts_with("slower") {
                    report.equal += 1;
                }
                report.failures.push(f);
            }
        }
    }
    report
}
