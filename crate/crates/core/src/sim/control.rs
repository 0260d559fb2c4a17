// SPDX-License-Identifier: Apache-2.0

//! Control-program interpreter. Each cycle the frames emit synthetic
//! assignments (group go signals, invoke bindings); after the netlist
//! settles they advance using the converged port values.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::ir::{Binding, Control, ControlKind, Hole, LatencyCtx, PortRef};

use super::model::PortId;
use super::netlist::{CAssign, CGuard, CVal, Netlist};

/// Position inside nested dynamic `par` blocks.
#[derive(Debug)]
pub struct PathNode {
    /// (instance, node id) of the `par`.
    pub par: (usize, usize),
    pub child: usize,
    pub parent: Thread,
}

pub type Thread = Option<Rc<PathNode>>;

fn path(t: &Thread) -> Vec<((usize, usize), usize)> {
    let mut out = vec![];
    let mut cur = t.clone();
    while let Some(n) = cur {
        out.push((n.par, n.child));
        cur = n.parent.clone();
    }
    out.reverse();
    out
}

/// True if the two threads are different arms of one dynamic `par`.
pub fn concurrent(a: &Thread, b: &Thread) -> bool {
    let (pa, pb) = (path(a), path(b));
    for (x, y) in pa.iter().zip(&pb) {
        if x.0 == y.0 && x.1 != y.1 {
            return true;
        }
        if x != y {
            return false;
        }
    }
    false
}

pub struct Synth {
    pub assign: CAssign,
    pub thread: Thread,
}

/// Per-instance lookup tables for control nodes.
pub struct NodeInfo {
    pub ids: HashMap<*const Control, usize>,
    pub latency: HashMap<*const Control, u64>,
}

impl NodeInfo {
    pub fn new(net: &Netlist, inst: usize) -> Self {
        let comp = net.instances[inst].comp;
        let ctx = LatencyCtx::new(net.program, comp);
        let mut ids = HashMap::new();
        let mut latency = HashMap::new();
        comp.control.walk(&mut |c| {
            ids.insert(c as *const Control, ids.len());
            if c.is_static() {
                if let Some(l) = ctx.latency_of(c) {
                    latency.insert(c as *const Control, l);
                }
            }
        });
        NodeInfo { ids, latency }
    }

    fn id(&self, c: &Control) -> usize {
        self.ids[&(c as *const Control)]
    }

    pub fn lat(&self, c: &Control) -> u64 {
        match c.kind {
            ControlKind::Empty => 0,
            _ => self
                .latency
                .get(&(c as *const Control))
                .copied()
                .unwrap_or(0),
        }
    }
}

pub struct Emitter<'e, 'a> {
    pub net: &'e Netlist<'a>,
    pub inst: usize,
    pub info: &'e NodeInfo,
    pub out: &'e mut Vec<Synth>,
    pub cycle: u64,
    /// Static node activations `(node id, start) -> end`, entry instance only.
    pub spans: Option<&'e mut BTreeMap<(usize, u64), u64>>,
}

impl Emitter<'_, '_> {
    fn push(&mut self, dst: PortId, src: CVal, guard: CGuard, thread: &Thread) {
        self.out.push(Synth {
            assign: CAssign {
                dst,
                src,
                guard,
                gate: None,
                timing: None,
                group: None,
            },
            thread: thread.clone(),
        });
    }

    fn go_one(&mut self, dst: PortId, guard: CGuard, thread: &Thread) {
        self.push(dst, CVal::Const(1), guard, thread);
    }

    fn invoke(
        &mut self,
        cell: &str,
        bindings: &[Binding],
        guard: CGuard,
        thread: &Thread,
        dynamic: bool,
    ) -> PortId {
        let inst = &self.net.instances[self.inst];
        let c = inst.comp.cell(cell).expect("validated invoke");
        let (go, done) = match self.net.program.primitive(&c.prototype) {
            Some(p) => (p.go_port().unwrap_or("go"), p.done_port().unwrap_or("done")),
            None => ("go", "done"),
        };
        let go = inst.port(&PortRef::cell(cell, go));
        let done = inst.ports.get(&PortRef::cell(cell, done)).copied();
        let guard = match done {
            Some(d) if dynamic => guard.and(CGuard::Not(Box::new(CGuard::Port(d)))),
            _ => guard,
        };
        self.go_one(go, guard.clone(), thread);
        for b in bindings {
            let dst = inst.port(&PortRef::cell(cell, &b.port));
            let src = inst.val(&b.src, self.net.ports[dst].width);
            self.push(dst, src, guard.clone(), thread);
        }
        done.unwrap_or(go)
    }
}

/// Static subtree executing against a local cycle offset.
pub struct Island<'a> {
    pub node: &'a Control,
    pub latency: u64,
    pub offset: u64,
    /// Dynamic parents observe completion one cycle after the last body cycle.
    pub handshake: bool,
    stash: HashMap<(usize, u64), bool>,
    pending: Vec<(usize, u64, PortId)>,
}

impl<'a> Island<'a> {
    pub fn new(node: &'a Control, latency: u64, handshake: bool) -> Self {
        Island {
            node,
            latency,
            offset: 0,
            handshake,
            stash: HashMap::new(),
            pending: vec![],
        }
    }

    pub fn emit(&mut self, em: &mut Emitter, gate: &CGuard, thread: &Thread) {
        self.pending.clear();
        if self.offset < self.latency {
            let t = self.offset;
            self.visit(self.node, t, 0, gate.clone(), em, thread);
        }
    }

    fn visit(
        &mut self,
        node: &'a Control,
        t: u64,
        base: u64,
        guard: CGuard,
        em: &mut Emitter,
        thread: &Thread,
    ) {
        let lat = em.info.lat(node);
        if t < base || t - base >= lat {
            return;
        }
        let rel = t - base;
        if let Some(spans) = em.spans.as_deref_mut() {
            let start = em.cycle - rel;
            spans.insert((em.info.id(node), start), em.cycle + 1);
        }
        match &node.kind {
            ControlKind::StaticEnable { group } => {
                let inst = &em.net.instances[em.inst];
                em.go_one(inst.hole(group, Hole::Go), guard, thread);
            }
            ControlKind::StaticSeq(cs) => {
                let mut acc = base;
                for c in cs {
                    let l = em.info.lat(c);
                    if t < acc + l {
                        self.visit(c, t, acc, guard, em, thread);
                        break;
                    }
                    acc += l;
                }
            }
            ControlKind::StaticPar(cs) => {
                for c in cs {
                    self.visit(c, t, base, guard.clone(), em, thread);
                }
            }
            ControlKind::StaticRepeat { body, .. } => {
                let b = em.info.lat(body);
                if let Some(k) = rel.checked_div(b) {
                    self.visit(body, t, base + k * b, guard, em, thread);
                }
            }
            ControlKind::StaticIf { cond, tru, fls } => {
                let key = (em.info.id(node), base);
                if rel == 0 {
                    let c = em.net.instances[em.inst].port(cond);
                    self.pending.push((key.0, key.1, c));
                    let yes = guard.clone().and(CGuard::Port(c));
                    let no = guard.and(CGuard::Not(Box::new(CGuard::Port(c))));
                    self.visit(tru, t, base, yes, em, thread);
                    self.visit(fls, t, base, no, em, thread);
                } else {
                    let taken = self.stash.get(&key).copied().unwrap_or(false);
                    self.visit(if taken { tru } else { fls }, t, base, guard, em, thread);
                }
            }
            ControlKind::StaticInvoke { cell, bindings } => {
                em.invoke(cell, bindings, guard, thread, false);
            }
            _ => unreachable!("dynamic node inside a static island"),
        }
    }

    /// Returns true when the island has finished.
    pub fn advance(&mut self, vals: &[u64]) -> bool {
        if self.offset < self.latency {
            for (id, base, port) in self.pending.drain(..) {
                self.stash.insert((id, base), vals[port] != 0);
            }
            self.offset += 1;
            !self.handshake && self.offset == self.latency
        } else {
            true
        }
    }

    pub fn restart(&mut self) {
        self.offset = 0;
        self.stash.clear();
        self.pending.clear();
    }
}

pub enum Frame<'a> {
    Enable {
        group: usize,
    },
    Invoke {
        node: &'a Control,
        done: Option<PortId>,
    },
    Island(Island<'a>),
    Seq {
        children: &'a [Control],
        idx: usize,
        cur: Box<Frame<'a>>,
    },
    Par {
        id: usize,
        threads: Vec<Option<Frame<'a>>>,
    },
    If {
        node: &'a Control,
        branch: Option<Box<Frame<'a>>>,
    },
    While {
        node: &'a Control,
        body: Option<Box<Frame<'a>>>,
    },
    Repeat {
        body: &'a Control,
        remaining: u64,
        cur: Box<Frame<'a>>,
    },
}

/// State for one instance's control program.
pub struct Exec<'n, 'a> {
    pub net: &'n Netlist<'a>,
    pub inst: usize,
    pub info: NodeInfo,
}

impl<'n, 'a> Exec<'n, 'a> {
    pub fn new(net: &'n Netlist<'a>, inst: usize) -> Self {
        Exec {
            net,
            inst,
            info: NodeInfo::new(net, inst),
        }
    }

    /// `None` if the node completes without taking a cycle.
    pub fn start(&self, node: &'a Control) -> Option<Frame<'a>> {
        match &node.kind {
            ControlKind::Empty => None,
            ControlKind::Enable { group } => Some(Frame::Enable {
                group: self.net.instances[self.inst].groups[group],
            }),
            _ if node.is_static() => {
                let lat = self.info.lat(node);
                (lat > 0).then(|| Frame::Island(Island::new(node, lat, true)))
            }
            ControlKind::Seq(cs) => self.seq_from(cs, 0),
            ControlKind::Par(cs) => {
                let threads: Vec<_> = cs.iter().map(|c| self.start(c)).collect();
                threads.iter().any(|t| t.is_some()).then(|| Frame::Par {
                    id: self.info.id(node),
                    threads,
                })
            }
            ControlKind::If { .. } => Some(Frame::If { node, branch: None }),
            ControlKind::While { .. } => Some(Frame::While { node, body: None }),
            ControlKind::Repeat { count, body } => {
                if *count == 0 {
                    return None;
                }
                let cur = self.start(body)?;
                Some(Frame::Repeat {
                    body,
                    remaining: *count,
                    cur: Box::new(cur),
                })
            }
            ControlKind::Invoke { .. } => Some(Frame::Invoke { node, done: None }),
            _ => unreachable!(),
        }
    }

    fn seq_from(&self, cs: &'a [Control], from: usize) -> Option<Frame<'a>> {
        (from..cs.len()).find_map(|i| {
            self.start(&cs[i]).map(|f| Frame::Seq {
                children: cs,
                idx: i,
                cur: Box::new(f),
            })
        })
    }

    pub fn emit(&self, frame: &mut Frame<'a>, em: &mut Emitter, gate: &CGuard, thread: &Thread) {
        match frame {
            Frame::Enable { group } => {
                let g = &self.net.groups[*group];
                let guard = gate
                    .clone()
                    .and(CGuard::Not(Box::new(CGuard::Port(g.done.unwrap()))));
                em.go_one(g.go, guard, thread);
            }
            Frame::Invoke { node, done } => {
                let ControlKind::Invoke { cell, bindings } = &node.kind else {
                    unreachable!()
                };
                *done = Some(em.invoke(cell, bindings, gate.clone(), thread, true));
            }
            Frame::Island(island) => island.emit(em, gate, thread),
            Frame::Seq { cur, .. } | Frame::Repeat { cur, .. } => self.emit(cur, em, gate, thread),
            Frame::Par { id, threads } => {
                for (i, t) in threads.iter_mut().enumerate() {
                    if let Some(t) = t {
                        let sub = Some(Rc::new(PathNode {
                            par: (self.inst, *id),
                            child: i,
                            parent: thread.clone(),
                        }));
                        self.emit(t, em, gate, &sub);
                    }
                }
            }
            Frame::If {
                branch: Some(b), ..
            }
            | Frame::While { body: Some(b), .. } => self.emit(b, em, gate, thread),
            Frame::If { .. } | Frame::While { .. } => {}
        }
    }

    /// Returns true when the frame has completed.
    pub fn advance(&self, frame: &mut Frame<'a>, vals: &[u64]) -> bool {
        let inst = &self.net.instances[self.inst];
        match frame {
            Frame::Enable { group } => vals[self.net.groups[*group].done.unwrap()] != 0,
            Frame::Invoke { done, .. } => done.map(|d| vals[d] != 0).unwrap_or(true),
            Frame::Island(island) => island.advance(vals),
            Frame::Seq { children, idx, cur } => {
                if !self.advance(cur, vals) {
                    return false;
                }
                match self.seq_from(children, *idx + 1) {
                    Some(next) => {
                        *frame = next;
                        false
                    }
                    None => true,
                }
            }
            Frame::Par { threads, .. } => {
                for t in threads.iter_mut() {
                    if let Some(f) = t {
                        if self.advance(f, vals) {
                            *t = None;
                        }
                    }
                }
                threads.iter().all(|t| t.is_none())
            }
            Frame::If { node, branch } => match branch {
                Some(b) => self.advance(b, vals),
                None => {
                    let ControlKind::If { cond, tru, fls } = &node.kind else {
                        unreachable!()
                    };
                    let taken = if vals[inst.port(cond)] != 0 { tru } else { fls };
                    match self.start(taken) {
                        Some(f) => {
                            *branch = Some(Box::new(f));
                            false
                        }
                        None => true,
                    }
                }
            },
            Frame::While { node, body } => {
                let ControlKind::While { cond, body: b } = &node.kind else {
                    unreachable!()
                };
                match body {
                    Some(f) => {
                        if self.advance(f, vals) {
                            *body = None;
                        }
                        false
                    }
                    None => {
                        if vals[inst.port(cond)] == 0 {
                            return true;
                        }
                        *body = self.start(b).map(Box::new);
                        false
                    }
                }
            }
            Frame::Repeat {
                body,
                remaining,
                cur,
            } => {
                if !self.advance(cur, vals) {
                    return false;
                }
                *remaining -= 1;
                if *remaining == 0 {
                    return true;
                }
                **cur = self.start(body).expect("repeat body started before");
                false
            }
        }
    }
}
