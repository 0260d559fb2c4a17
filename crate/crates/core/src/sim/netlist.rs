// SPDX-License-Identifier: Apache-2.0

//! Flattened port space of an instance tree, with compiled assignments.

use std::collections::HashMap;

use crate::ir::{
    Assignment, Atom, CmpOp, Component, Direction, GuardExpr, Hole, Interval, LatencyKind, PortRef,
    Program,
};

use super::model::{mask, CellKind, CellModel, CombOp, PortId};

#[derive(Clone, Debug)]
pub struct PortInfo {
    pub name: String,
    pub width: u32,
}

#[derive(Clone, Copy, Debug)]
pub enum CVal {
    Port(PortId),
    Const(u64),
}

impl CVal {
    pub fn get(self, vals: &[u64]) -> u64 {
        match self {
            CVal::Port(p) => vals[p],
            CVal::Const(c) => c,
        }
    }
}

#[derive(Clone, Debug)]
pub enum CGuard {
    True,
    Port(PortId),
    Not(Box<CGuard>),
    And(Box<CGuard>, Box<CGuard>),
    Or(Box<CGuard>, Box<CGuard>),
    Cmp(CmpOp, CVal, CVal),
}

impl CGuard {
    pub fn eval(&self, vals: &[u64]) -> bool {
        match self {
            CGuard::True => true,
            CGuard::Port(p) => vals[*p] != 0,
            CGuard::Not(g) => !g.eval(vals),
            CGuard::And(a, b) => a.eval(vals) && b.eval(vals),
            CGuard::Or(a, b) => a.eval(vals) || b.eval(vals),
            CGuard::Cmp(op, a, b) => op.eval(a.get(vals), b.get(vals)),
        }
    }

    pub fn and(self, other: CGuard) -> CGuard {
        match (self, other) {
            (CGuard::True, g) | (g, CGuard::True) => g,
            (a, b) => CGuard::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn ports(&self, out: &mut Vec<PortId>) {
        match self {
            CGuard::True => {}
            CGuard::Port(p) => out.push(*p),
            CGuard::Not(g) => g.ports(out),
            CGuard::And(a, b) | CGuard::Or(a, b) => {
                a.ports(out);
                b.ports(out);
            }
            CGuard::Cmp(_, a, b) => {
                for v in [a, b] {
                    if let CVal::Port(p) = v {
                        out.push(*p)
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CAssign {
    pub dst: PortId,
    pub src: CVal,
    pub guard: CGuard,
    /// Go hole of the enclosing group.
    pub gate: Option<PortId>,
    /// Enclosing static group and the interval of its counter.
    pub timing: Option<(usize, Interval)>,
    /// Enclosing group, for attributing accesses to control threads.
    pub group: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct GroupInfo {
    pub name: String,
    pub go: PortId,
    pub done: Option<PortId>,
    pub latency: Option<u64>,
}

pub struct Instance<'a> {
    pub comp: &'a Component,
    pub ports: HashMap<PortRef, PortId>,
    pub groups: HashMap<String, usize>,
    pub cells: HashMap<String, usize>,
    /// Interface of a sub-component instance; `None` for the entry.
    pub go: Option<PortId>,
    pub done: Option<PortId>,
}

impl Instance<'_> {
    pub fn port(&self, p: &PortRef) -> PortId {
        *self
            .ports
            .get(p)
            .unwrap_or_else(|| panic!("unresolved port `{p}` in `{}`", self.comp.name))
    }

    pub fn hole(&self, group: &str, hole: Hole) -> PortId {
        self.port(&PortRef::hole(group, hole))
    }

    pub fn val(&self, a: &Atom, width: u32) -> CVal {
        match a {
            Atom::Port(p) => CVal::Port(self.port(p)),
            Atom::Const(c) => CVal::Const(c.value & mask(width)),
        }
    }

    pub fn guard(&self, g: &GuardExpr, ports: &[PortInfo]) -> CGuard {
        match g {
            GuardExpr::True => CGuard::True,
            GuardExpr::Port(p) => CGuard::Port(self.port(p)),
            GuardExpr::Not(inner) => CGuard::Not(Box::new(self.guard(inner, ports))),
            GuardExpr::And(a, b) => CGuard::And(
                Box::new(self.guard(a, ports)),
                Box::new(self.guard(b, ports)),
            ),
            GuardExpr::Or(a, b) => CGuard::Or(
                Box::new(self.guard(a, ports)),
                Box::new(self.guard(b, ports)),
            ),
            GuardExpr::Cmp(op, a, b) => {
                let width = [a, b]
                    .iter()
                    .find_map(|x| x.port().map(|p| ports[self.port(p)].width))
                    .unwrap_or(64);
                CGuard::Cmp(*op, self.val(a, width), self.val(b, width))
            }
        }
    }
}

pub struct Netlist<'a> {
    pub program: &'a Program,
    pub ports: Vec<PortInfo>,
    pub instances: Vec<Instance<'a>>,
    pub cells: Vec<CellModel>,
    pub groups: Vec<GroupInfo>,
    pub assigns: Vec<CAssign>,
    /// Stateful cell whose value output is this port.
    pub value_reader: HashMap<PortId, usize>,
    /// Stateful cell whose go/write-enable is this port.
    pub go_writer: HashMap<PortId, usize>,
    /// Cell id of each sub-component instance (index = instance id).
    pub instance_cell: Vec<Option<usize>>,
}

impl<'a> Netlist<'a> {
    pub fn build(program: &'a Program) -> Result<Self, String> {
        let entry = program
            .entry_component()
            .ok_or_else(|| format!("entry component `{}` not found", program.entry))?;
        let mut net = Netlist {
            program,
            ports: vec![],
            instances: vec![],
            cells: vec![],
            groups: vec![],
            assigns: vec![],
            value_reader: HashMap::new(),
            go_writer: HashMap::new(),
            instance_cell: vec![],
        };
        let mut this = HashMap::new();
        for p in entry.inputs.iter().chain(&entry.outputs) {
            this.insert(p.name.clone(), net.new_port(p.name.clone(), p.width));
        }
        net.instantiate(entry, String::new(), this, None, None, None)?;
        for (id, cell) in net.cells.iter().enumerate() {
            if !cell.is_stateful() {
                continue;
            }
            for p in cell.value_outputs() {
                net.value_reader.insert(p, id);
            }
            if let Some(g) = cell.go_port() {
                net.go_writer.insert(g, id);
            }
        }
        Ok(net)
    }

    fn new_port(&mut self, name: String, width: u32) -> PortId {
        self.ports.push(PortInfo { name, width });
        self.ports.len() - 1
    }

    fn instantiate(
        &mut self,
        comp: &'a Component,
        prefix: String,
        this: HashMap<String, PortId>,
        go: Option<PortId>,
        done: Option<PortId>,
        cell_id: Option<usize>,
    ) -> Result<usize, String> {
        let inst_id = self.instances.len();
        self.instances.push(Instance {
            comp,
            ports: HashMap::new(),
            groups: HashMap::new(),
            cells: HashMap::new(),
            go,
            done,
        });
        self.instance_cell.push(cell_id);
        let mut ports: HashMap<PortRef, PortId> = this
            .into_iter()
            .map(|(k, v)| (PortRef::this(k), v))
            .collect();

        for cell in &comp.cells {
            let name = format!("{prefix}{}", cell.name);
            let mut port = |net: &mut Self, p: &str, w: u32| {
                let id = net.new_port(format!("{name}.{p}"), w);
                ports.insert(PortRef::cell(&cell.name, p), id);
                id
            };
            if let Some(callee) = self.program.component(&cell.prototype) {
                let mut child_this = HashMap::new();
                let mut outputs = vec![];
                for p in &callee.inputs {
                    child_this.insert(p.name.clone(), port(self, &p.name, p.width));
                }
                for p in &callee.outputs {
                    let id = port(self, &p.name, p.width);
                    outputs.push(id);
                    child_this.insert(p.name.clone(), id);
                }
                let go = port(self, "go", 1);
                let done = (!callee.is_static()).then(|| port(self, "done", 1));
                let cell_id = self.cells.len();
                self.cells.push(CellModel {
                    name: name.clone(),
                    inst: inst_id,
                    kind: CellKind::Instance {
                        inst: usize::MAX,
                        go,
                        outputs,
                    },
                });
                self.instances[inst_id]
                    .cells
                    .insert(cell.name.clone(), cell_id);
                let child = self.instantiate(
                    callee,
                    format!("{name}."),
                    child_this,
                    Some(go),
                    done,
                    Some(cell_id),
                )?;
                if let CellKind::Instance { inst, .. } = &mut self.cells[cell_id].kind {
                    *inst = child;
                }
                continue;
            }
            let prim = self
                .program
                .primitive(&cell.prototype)
                .ok_or_else(|| format!("unknown prototype `{}`", cell.prototype))?;
            let mut ids: HashMap<&str, PortId> = HashMap::new();
            for decl in prim.inputs.iter().chain(&prim.outputs) {
                let (w, _) = prim
                    .port_width(&decl.name, &cell.args)
                    .ok_or_else(|| format!("cell `{name}`: bad parameters"))?;
                ids.insert(decl.name.as_str(), port(self, &decl.name, w));
            }
            let arg = |i: usize| cell.args.get(i).copied().unwrap_or(0) as u32;
            let kind = if let Some(op) = CombOp::from_prototype(&prim.name) {
                CellKind::Comb {
                    op,
                    left: ids[if op.is_unary() { "in" } else { "left" }],
                    right: (!op.is_unary()).then(|| ids["right"]),
                    out: ids["out"],
                    width: arg(0),
                    out_width: self.ports[ids["out"]].width,
                }
            } else {
                match prim.name.as_str() {
                    "std_reg" => CellKind::Reg {
                        input: ids["in"],
                        we: ids["write_en"],
                        out: ids["out"],
                        done: ids["done"],
                        width: arg(0),
                        value: 0,
                        done_flag: false,
                    },
                    "std_mem_d1" => CellKind::Mem {
                        addr: ids["addr0"],
                        wdata: ids["write_data"],
                        we: ids["write_en"],
                        rdata: ids["read_data"],
                        done: ids["done"],
                        width: arg(0),
                        data: vec![0; cell.args.get(1).copied().unwrap_or(0) as usize],
                        done_flag: false,
                    },
                    "std_mult" | "std_mult_pipe" => CellKind::Mult {
                        go: ids["go"],
                        left: ids["left"],
                        right: ids["right"],
                        out: ids["out"],
                        done: ids.get("done").copied(),
                        width: arg(0),
                        latency: match prim.latency {
                            LatencyKind::Fixed(n) => n,
                            _ => prim.hint.unwrap_or(1),
                        },
                        count: 0,
                        value: 0,
                        done_flag: false,
                    },
                    "std_div" => CellKind::Div {
                        go: ids["go"],
                        left: ids["left"],
                        right: ids["right"],
                        out: ids["out"],
                        done: ids["done"],
                        width: arg(0),
                        busy: None,
                        value: 0,
                        done_flag: false,
                    },
                    other => return Err(format!("no simulation model for primitive `{other}`")),
                }
            };
            self.instances[inst_id]
                .cells
                .insert(cell.name.clone(), self.cells.len());
            self.cells.push(CellModel {
                name,
                inst: inst_id,
                kind,
            });
        }

        for g in &comp.groups {
            let go = self.new_port(format!("{prefix}{}[go]", g.name), 1);
            let done = self.new_port(format!("{prefix}{}[done]", g.name), 1);
            ports.insert(PortRef::hole(&g.name, Hole::Go), go);
            ports.insert(PortRef::hole(&g.name, Hole::Done), done);
            self.instances[inst_id]
                .groups
                .insert(g.name.clone(), self.groups.len());
            self.groups.push(GroupInfo {
                name: format!("{prefix}{}", g.name),
                go,
                done: Some(done),
                latency: None,
            });
        }
        for g in &comp.static_groups {
            let go = self.new_port(format!("{prefix}{}[go]", g.name), 1);
            ports.insert(PortRef::hole(&g.name, Hole::Go), go);
            self.instances[inst_id]
                .groups
                .insert(g.name.clone(), self.groups.len());
            self.groups.push(GroupInfo {
                name: format!("{prefix}{}", g.name),
                go,
                done: None,
                latency: Some(g.latency),
            });
        }
        self.instances[inst_id].ports = ports;

        let mut compiled = vec![];
        {
            let inst = &self.instances[inst_id];
            let compile =
                |a: &Assignment, group: Option<usize>, gate: Option<PortId>, is_static: bool| {
                    let dst = inst.port(&a.dst);
                    let timing = if is_static {
                        a.guard.timing.map(|iv| (group.unwrap(), iv))
                    } else {
                        None
                    };
                    CAssign {
                        dst,
                        src: inst.val(&a.src, self.ports[dst].width),
                        guard: inst.guard(&a.guard.expr, &self.ports),
                        gate,
                        timing,
                        group,
                    }
                };
            for a in &comp.continuous {
                compiled.push(compile(a, None, None, false));
            }
            for g in &comp.groups {
                let gid = inst.groups[&g.name];
                for a in &g.assignments {
                    let gate = if g.is_done_assignment(a) {
                        None
                    } else {
                        Some(self.groups[gid].go)
                    };
                    compiled.push(compile(a, Some(gid), gate, false));
                }
            }
            for g in &comp.static_groups {
                let gid = inst.groups[&g.name];
                for a in &g.assignments {
                    compiled.push(compile(a, Some(gid), Some(self.groups[gid].go), true));
                }
            }
        }
        self.assigns.extend(compiled);
        Ok(inst_id)
    }

    /// Input ports of the entry component, by name.
    pub fn entry_io(&self, dir: Direction) -> Vec<(String, PortId)> {
        let inst = &self.instances[0];
        let defs = match dir {
            Direction::Input => &inst.comp.inputs,
            Direction::Output => &inst.comp.outputs,
        };
        defs.iter()
            .map(|p| (p.name.clone(), inst.port(&PortRef::this(&p.name))))
            .collect()
    }
}
