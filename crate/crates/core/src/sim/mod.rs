// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate interpreter for dynamic (go/done) and static
//! (timing-guard) semantics.
//!
//! Each cycle runs in three phases: the control interpreter emits the go
//! signals it wants asserted, the port network is iterated to a fixed point,
//! and finally state commits and control advances. Dynamic steps finish on
//! the cycle their `done` is high; the next step starts on the following
//! cycle.

mod control;
mod data;
mod model;
mod netlist;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::ir::{Direction, Program};

use control::{concurrent, Emitter, Exec, Frame, Island, Synth, Thread};
use model::{mask, CellKind};
use netlist::{CAssign, CGuard, Netlist};

pub use data::{FinalState, MemoryData, MemoryImage};
pub use model::{div_latency, Write};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("guard conflict in cycle {cycle}: `{port}` driven with {values:?}")]
    GuardConflict {
        cycle: u64,
        port: String,
        values: Vec<u64>,
    },
    #[error(
        "data race in cycle {cycle}: parallel threads access `{cell}` and at least one writes"
    )]
    DataRace { cycle: u64, cell: String },
    #[error("combinational divergence in cycle {cycle}: ports did not settle")]
    CombinationalDivergence { cycle: u64 },
    #[error("cycle limit exceeded: program still running after {limit} cycles")]
    CycleLimitExceeded { limit: u64 },
    #[error(
        "memory `{memory}` written out of bounds in cycle {cycle}: address {addr}, size {size}"
    )]
    MemoryOutOfBounds {
        cycle: u64,
        memory: String,
        addr: u64,
        size: usize,
    },
    #[error("cannot simulate: {0}")]
    Setup(String),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub cycle_limit: u64,
    /// Keep per-cycle records (active groups, committed writes).
    pub record_cycles: bool,
    /// Keep activation spans of static control nodes in the entry component.
    pub record_spans: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            cycle_limit: 1_000_000,
            record_cycles: false,
            record_spans: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleRecord {
    pub cycle: u64,
    pub active: Vec<String>,
    pub writes: Vec<Write>,
}

/// A static group starting from counter value 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Activation {
    pub group: String,
    pub start: u64,
}

/// One activation of a static control node: cycles `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StaticSpan {
    /// Pre-order index of the node in the entry component's control tree.
    pub node: usize,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub cycles: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<CycleRecord>,
    pub activations: Vec<Activation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<StaticSpan>,
    pub final_state: FinalState,
}

impl Trace {
    /// Writes one JSON object per recorded cycle.
    pub fn write_jsonl(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn activations_of<'t>(&'t self, group: &'t str) -> impl Iterator<Item = u64> + 't {
        self.activations
            .iter()
            .filter(move |a| a.group == group)
            .map(|a| a.start)
    }
}

enum Root<'a> {
    Dynamic {
        frame: Option<Frame<'a>>,
        started: bool,
        done: bool,
    },
    Static(Island<'a>),
}

struct Runtime<'n, 'a> {
    exec: Exec<'n, 'a>,
    root: Root<'a>,
}

/// Runs the entry component of `program` to completion.
pub fn simulate(
    program: &Program,
    data: &MemoryData,
    config: &SimConfig,
) -> Result<Trace, SimError> {
    let net = Netlist::build(program).map_err(SimError::Setup)?;
    Simulator::new(&net, data, config)?.run()
}

struct Simulator<'n, 'a> {
    net: &'n Netlist<'a>,
    config: &'n SimConfig,
    cells: Vec<model::CellModel>,
    counters: Vec<u64>,
    inputs: Vec<(usize, u64)>,
    runtimes: Vec<Runtime<'n, 'a>>,
    spans: BTreeMap<(usize, u64), u64>,
    trace: Trace,
}

impl<'n, 'a> Simulator<'n, 'a> {
    fn new(
        net: &'n Netlist<'a>,
        data: &MemoryData,
        config: &'n SimConfig,
    ) -> Result<Self, SimError> {
        let mut cells = net.cells.clone();
        for (name, img) in &data.memories {
            let cell = cells
                .iter_mut()
                .find(|c| c.inst == 0 && c.name == *name)
                .ok_or_else(|| SimError::Setup(format!("no memory named `{name}`")))?;
            let CellKind::Mem {
                width,
                data: contents,
                ..
            } = &mut cell.kind
            else {
                return Err(SimError::Setup(format!("`{name}` is not a memory")));
            };
            if img.width != *width || img.size != contents.len() || img.data.len() > img.size {
                return Err(SimError::Setup(format!(
                    "memory `{name}` is {}x{}, data describes {}x{} with {} values",
                    width,
                    contents.len(),
                    img.width,
                    img.size,
                    img.data.len()
                )));
            }
            for (slot, v) in contents.iter_mut().zip(&img.data) {
                *slot = v & mask(*width);
            }
        }
        let io: HashMap<String, usize> = net.entry_io(Direction::Input).into_iter().collect();
        let mut inputs = vec![];
        for (name, v) in &data.inputs {
            let port = io
                .get(name)
                .ok_or_else(|| SimError::Setup(format!("no input port named `{name}`")))?;
            inputs.push((*port, v & mask(net.ports[*port].width)));
        }

        let mut runtimes = vec![];
        for inst in 0..net.instances.len() {
            let exec = Exec::new(net, inst);
            let comp = net.instances[inst].comp;
            let root = if comp.is_static() {
                let lat = exec.info.lat(&comp.control);
                Root::Static(Island::new(&comp.control, lat, false))
            } else {
                Root::Dynamic {
                    frame: None,
                    started: false,
                    done: false,
                }
            };
            runtimes.push(Runtime { exec, root });
        }
        Ok(Simulator {
            net,
            config,
            cells,
            counters: vec![0; net.groups.len()],
            inputs,
            runtimes,
            spans: BTreeMap::new(),
            trace: Trace {
                cycles: 0,
                records: vec![],
                activations: vec![],
                spans: vec![],
                final_state: FinalState::default(),
            },
        })
    }

    fn base(&self) -> Vec<u64> {
        let mut base = vec![0; self.net.ports.len()];
        for &(p, v) in &self.inputs {
            base[p] = v;
        }
        for c in &self.cells {
            c.drive_state(&mut base);
        }
        for (inst, rt) in self.runtimes.iter().enumerate().skip(1) {
            if let (Root::Dynamic { done: true, .. }, Some(d)) =
                (&rt.root, self.net.instances[inst].done)
            {
                base[d] = 1;
            }
        }
        base
    }

    fn timing(&self) -> Vec<bool> {
        self.net
            .assigns
            .iter()
            .map(|a| match a.timing {
                Some((g, iv)) => iv.contains(self.counters[g]),
                None => true,
            })
            .collect()
    }

    fn active(a: &CAssign, timing_ok: bool, vals: &[u64]) -> bool {
        timing_ok && a.gate.map(|g| vals[g] != 0).unwrap_or(true) && a.guard.eval(vals)
    }

    fn settle(
        &self,
        base: &[u64],
        timing: &[bool],
        synth: &[Synth],
        cycle: u64,
    ) -> Result<Vec<u64>, SimError> {
        let limit = self.net.ports.len() + 5;
        let mut vals = base.to_vec();
        for _ in 0..limit {
            let mut next = base.to_vec();
            for c in &self.cells {
                c.eval_comb(&vals, &mut next);
            }
            let all = self.net.assigns.iter().zip(timing.iter().copied());
            for (a, t) in all.chain(synth.iter().map(|s| (&s.assign, true))) {
                if Self::active(a, t, &vals) {
                    next[a.dst] = a.src.get(&vals) & mask(self.net.ports[a.dst].width);
                }
            }
            if next == vals {
                return Ok(vals);
            }
            vals = next;
        }
        Err(SimError::CombinationalDivergence { cycle })
    }

    fn check_conflicts(
        &self,
        vals: &[u64],
        timing: &[bool],
        synth: &[Synth],
        cycle: u64,
    ) -> Result<(), SimError> {
        let mut seen: HashMap<usize, u64> = HashMap::new();
        let all = self.net.assigns.iter().zip(timing.iter().copied());
        for (a, t) in all.chain(synth.iter().map(|s| (&s.assign, true))) {
            if !Self::active(a, t, vals) {
                continue;
            }
            let v = a.src.get(vals) & mask(self.net.ports[a.dst].width);
            match seen.get(&a.dst) {
                Some(&prev) if prev != v => {
                    return Err(SimError::GuardConflict {
                        cycle,
                        port: self.net.ports[a.dst].name.clone(),
                        values: vec![prev, v],
                    })
                }
                _ => {
                    seen.insert(a.dst, v);
                }
            }
        }
        Ok(())
    }

    /// Accesses to stateful cells from different arms of a dynamic `par`.
    fn check_races(
        &self,
        vals: &[u64],
        timing: &[bool],
        synth: &[Synth],
        cycle: u64,
    ) -> Result<(), SimError> {
        if synth.iter().all(|s| s.thread.is_none()) {
            return Ok(());
        }
        // Owner thread of each group, found through whoever drives its go hole.
        let mut go_drivers: HashMap<usize, Vec<Result<Thread, usize>>> = HashMap::new();
        for s in synth {
            if Self::active(&s.assign, true, vals) && s.assign.src.get(vals) != 0 {
                go_drivers
                    .entry(s.assign.dst)
                    .or_default()
                    .push(Ok(s.thread.clone()));
            }
        }
        for (a, t) in self.net.assigns.iter().zip(timing.iter().copied()) {
            if let Some(g) = a.group {
                if Self::active(a, t, vals) && a.src.get(vals) != 0 {
                    go_drivers.entry(a.dst).or_default().push(Err(g));
                }
            }
        }
        let mut owners: HashMap<usize, Thread> = HashMap::new();
        fn owner(
            g: usize,
            net: &Netlist,
            drivers: &HashMap<usize, Vec<Result<Thread, usize>>>,
            owners: &mut HashMap<usize, Thread>,
            visiting: &mut HashSet<usize>,
        ) -> Thread {
            if let Some(t) = owners.get(&g) {
                return t.clone();
            }
            if !visiting.insert(g) {
                return None;
            }
            let mut found = None;
            for d in drivers.get(&net.groups[g].go).into_iter().flatten() {
                let t = match d {
                    Ok(t) => t.clone(),
                    Err(h) => owner(*h, net, drivers, owners, visiting),
                };
                if t.is_some() {
                    found = t;
                    break;
                }
            }
            owners.insert(g, found.clone());
            found
        }

        let mut accesses: BTreeMap<usize, Vec<(Thread, bool)>> = BTreeMap::new();
        let mut record = |a: &CAssign, thread: Thread| {
            if thread.is_none() {
                return;
            }
            if let Some(&cell) = self.net.go_writer.get(&a.dst) {
                if a.src.get(vals) != 0 {
                    accesses
                        .entry(cell)
                        .or_default()
                        .push((thread.clone(), true));
                }
            }
            let mut reads = vec![];
            a.guard.ports(&mut reads);
            if let netlist::CVal::Port(p) = a.src {
                reads.push(p);
            }
            for p in reads {
                if let Some(&cell) = self.net.value_reader.get(&p) {
                    accesses
                        .entry(cell)
                        .or_default()
                        .push((thread.clone(), false));
                }
            }
        };
        for s in synth {
            if Self::active(&s.assign, true, vals) {
                record(&s.assign, s.thread.clone());
            }
        }
        for (a, t) in self.net.assigns.iter().zip(timing.iter().copied()) {
            let Some(g) = a.group else { continue };
            if !Self::active(a, t, vals) {
                continue;
            }
            let thread = owner(g, self.net, &go_drivers, &mut owners, &mut HashSet::new());
            record(a, thread);
        }
        for (cell, list) in accesses {
            for (i, (t1, w1)) in list.iter().enumerate() {
                for (t2, w2) in &list[i + 1..] {
                    if (*w1 || *w2) && concurrent(t1, t2) {
                        return Err(SimError::DataRace {
                            cycle,
                            cell: self.cells[cell].name.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<Trace, SimError> {
        let mut cycle = 0u64;
        // An entry component whose control takes no cycles finishes immediately.
        let entry_done = |rts: &mut Vec<Runtime<'n, 'a>>| -> bool {
            let Runtime { exec, root } = &mut rts[0];
            let comp = exec.net.instances[0].comp;
            match root {
                Root::Dynamic { frame, started, .. } => {
                    if !*started {
                        *started = true;
                        *frame = exec.start(&comp.control);
                    }
                    frame.is_none()
                }
                Root::Static(island) => island.latency == 0,
            }
        };
        if !entry_done(&mut self.runtimes) {
            loop {
                if cycle >= self.config.cycle_limit {
                    return Err(SimError::CycleLimitExceeded {
                        limit: self.config.cycle_limit,
                    });
                }
                if self.step(cycle)? {
                    cycle += 1;
                    break;
                }
                cycle += 1;
            }
        }
        self.trace.cycles = cycle;
        self.finish(cycle)
    }

    /// Simulates one cycle; returns true once the entry control has completed.
    fn step(&mut self, cycle: u64) -> Result<bool, SimError> {
        let base = self.base();
        let timing = self.timing();

        let mut synth = vec![];
        for (inst, rt) in self.runtimes.iter_mut().enumerate() {
            let gate = match self.net.instances[inst].go {
                Some(go) => CGuard::Port(go),
                None => CGuard::True,
            };
            let comp = self.net.instances[inst].comp;
            let mut em = Emitter {
                net: self.net,
                inst,
                info: &rt.exec.info,
                out: &mut synth,
                cycle,
                spans: (inst == 0 && self.config.record_spans).then_some(&mut self.spans),
            };
            match &mut rt.root {
                Root::Dynamic {
                    frame,
                    started,
                    done,
                } => {
                    if *done {
                        continue;
                    }
                    if !*started {
                        *started = true;
                        *frame = rt.exec.start(&comp.control);
                    }
                    if let Some(f) = frame {
                        rt.exec.emit(f, &mut em, &gate, &None);
                    }
                }
                Root::Static(island) => island.emit(&mut em, &gate, &None),
            }
        }

        let vals = self.settle(&base, &timing, &synth, cycle)?;
        self.check_conflicts(&vals, &timing, &synth, cycle)?;
        self.check_races(&vals, &timing, &synth, cycle)?;

        for (g, info) in self.net.groups.iter().enumerate() {
            if info.latency.is_some() && vals[info.go] != 0 && self.counters[g] == 0 {
                self.trace.activations.push(Activation {
                    group: info.name.clone(),
                    start: cycle,
                });
            }
        }
        let active: Vec<String> = if self.config.record_cycles {
            self.net
                .groups
                .iter()
                .filter(|g| vals[g.go] != 0)
                .map(|g| g.name.clone())
                .collect()
        } else {
            vec![]
        };

        // Control advances before state commits so that conditions see this cycle's values.
        let mut entry_finished = false;
        for (inst, rt) in self.runtimes.iter_mut().enumerate() {
            let go = self.net.instances[inst].go;
            let enabled = go.map(|g| vals[g] != 0).unwrap_or(true);
            match &mut rt.root {
                Root::Dynamic {
                    frame,
                    started,
                    done,
                } => {
                    if *done {
                        *done = false;
                        *started = false;
                        continue;
                    }
                    if !enabled {
                        continue;
                    }
                    let finished = match frame {
                        Some(f) => rt.exec.advance(f, &vals),
                        None => true,
                    };
                    if finished {
                        *frame = None;
                        if inst == 0 {
                            entry_finished = true;
                        } else {
                            *done = true;
                        }
                    }
                }
                Root::Static(island) => {
                    if enabled && island.latency > 0 && island.advance(&vals) {
                        island.restart();
                        if inst == 0 {
                            entry_finished = true;
                        }
                    }
                }
            }
        }

        let mut writes = vec![];
        for c in self.cells.iter_mut() {
            match c.commit(&vals) {
                Ok(Some(w)) => writes.push(w),
                Ok(None) => {}
                Err(e) => {
                    return Err(SimError::MemoryOutOfBounds {
                        cycle,
                        memory: c.name.clone(),
                        addr: e.addr,
                        size: e.size,
                    })
                }
            }
        }
        for (g, info) in self.net.groups.iter().enumerate() {
            if let Some(l) = info.latency {
                if vals[info.go] != 0 {
                    self.counters[g] = (self.counters[g] + 1) % l.max(1);
                }
            }
        }
        if self.config.record_cycles {
            self.trace.records.push(CycleRecord {
                cycle,
                active,
                writes,
            });
        }
        Ok(entry_finished)
    }

    fn finish(mut self, cycle: u64) -> Result<Trace, SimError> {
        let base = self.base();
        let timing = self.timing();
        let vals = self.settle(&base, &timing, &[], cycle)?;
        let mut fs = FinalState::default();
        for (name, port) in self.net.entry_io(Direction::Output) {
            fs.outputs.insert(name, vals[port]);
        }
        for c in &self.cells {
            if c.inst != 0 {
                continue;
            }
            match &c.kind {
                CellKind::Mem { width, data, .. } => {
                    fs.memories.insert(
                        c.name.clone(),
                        MemoryImage {
                            width: *width,
                            size: data.len(),
                            data: data.clone(),
                        },
                    );
                }
                CellKind::Reg { value, .. } => {
                    fs.registers.insert(c.name.clone(), *value);
                }
                _ => {}
            }
        }
        self.trace.final_state = fs;
        self.trace.spans = self
            .spans
            .iter()
            .map(|(&(node, start), &end)| StaticSpan { node, start, end })
            .collect();
        Ok(self.trace)
    }
}

/// Outcome of comparing a program against a refined version of itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Refinement {
    pub equal: bool,
    pub original_cycles: u64,
    pub refined_cycles: u64,
    pub mismatch: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RefinementError {
    #[error("original program: {0}")]
    Original(SimError),
    #[error("refined program: {0}")]
    Refined(SimError),
}

/// Simulates both programs and compares their observable final states.
pub fn check_refinement(
    original: &Program,
    refined: &Program,
    data: &MemoryData,
    config: &SimConfig,
) -> Result<Refinement, RefinementError> {
    let a = simulate(original, data, config).map_err(RefinementError::Original)?;
    let b = simulate(refined, data, config).map_err(RefinementError::Refined)?;
    let mismatch = a.final_state.diff(&b.final_state);
    Ok(Refinement {
        equal: mismatch.is_none(),
        original_cycles: a.cycles,
        refined_cycles: b.cycles,
        mismatch,
    })
}

/// Writes the final state as pretty JSON.
pub fn write_final_state(state: &FinalState, mut out: impl std::io::Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, state)?;
    out.write_all(b"\n")
}
