// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ir::{
    normalize_guards, Assignment, Atom, Cell, Component, Control, ControlKind, Hole, LatencyCtx,
    LatencyKind, PortRef, Program,
};

/// Cells that hold no state across uses: combinational operators and
/// fixed-latency units without a done signal.
pub fn shareable(program: &Program, cell: &Cell) -> bool {
    match program.primitive(&cell.prototype) {
        Some(p) => {
            p.is_combinational()
                || (matches!(p.latency, LatencyKind::Fixed(_)) && p.done_port().is_none())
        }
        None => false,
    }
}

type Path = Vec<(usize, usize)>;

#[derive(Clone, Debug)]
struct Use {
    occurrence: usize,
    path: Path,
    /// Cycle window inside a static island; `None` covers the whole activation.
    window: Option<(u64, u64)>,
}

fn concurrent(a: &Path, b: &Path) -> bool {
    a.iter().zip(b).any(|(x, y)| x.0 == y.0 && x.1 != y.1)
}

fn conflicts(a: &[Use], b: &[Use]) -> bool {
    for x in a {
        for y in b {
            let clash = if x.occurrence == y.occurrence {
                match (x.window, y.window) {
                    (Some((s1, e1)), Some((s2, e2))) => s1 < e2 && s2 < e1,
                    _ => true,
                }
            } else {
                concurrent(&x.path, &y.path)
            };
            if clash {
                return true;
            }
        }
    }
    false
}

fn cells_of(a: &Assignment) -> impl Iterator<Item = &str> {
    std::iter::once(&a.dst)
        .chain(a.reads())
        .filter_map(|p| p.cell_name())
}

struct Collector<'a> {
    comp: &'a Component,
    ctx: LatencyCtx<'a>,
    uses: BTreeMap<String, Vec<Use>>,
    excluded: BTreeSet<String>,
    reached: BTreeSet<String>,
    next_occurrence: usize,
    next_par: usize,
}

impl<'a> Collector<'a> {
    /// Groups started by `group` through go holes, including itself.
    fn closure(&self, group: &str) -> Vec<String> {
        let mut out = vec![];
        let mut todo = vec![group.to_string()];
        while let Some(g) = todo.pop() {
            if out.contains(&g) {
                continue;
            }
            let assigns: Vec<&Assignment> = match (self.comp.group(&g), self.comp.static_group(&g))
            {
                (Some(d), _) => d.assignments.iter().collect(),
                (_, Some(s)) => s.assignments.iter().collect(),
                _ => vec![],
            };
            for a in assigns {
                if let PortRef::Hole {
                    group,
                    hole: Hole::Go,
                } = &a.dst
                {
                    todo.push(group.clone());
                }
            }
            out.push(g);
        }
        out
    }

    fn record(&mut self, cell: &str, occurrence: usize, path: &Path, window: Option<(u64, u64)>) {
        self.uses.entry(cell.to_string()).or_default().push(Use {
            occurrence,
            path: path.clone(),
            window,
        });
    }

    fn dynamic(&mut self, node: &Control, path: &Path) {
        if node.is_static() {
            let occ = self.next_occurrence;
            self.next_occurrence += 1;
            let mut windows: BTreeMap<String, (u64, u64)> = BTreeMap::new();
            self.static_windows(node, 0, &mut windows);
            for (cell, w) in windows {
                self.record(&cell, occ, path, Some(w));
            }
            return;
        }
        match &node.kind {
            ControlKind::Enable { group } => {
                let occ = self.next_occurrence;
                self.next_occurrence += 1;
                for g in self.closure(group) {
                    self.reached.insert(g.clone());
                    let cells: BTreeSet<String> = match self.comp.group(&g) {
                        Some(d) => d
                            .assignments
                            .iter()
                            .flat_map(cells_of)
                            .map(String::from)
                            .collect(),
                        None => self
                            .comp
                            .static_group(&g)
                            .map(|s| {
                                s.assignments
                                    .iter()
                                    .flat_map(cells_of)
                                    .map(String::from)
                                    .collect()
                            })
                            .unwrap_or_default(),
                    };
                    for c in cells {
                        self.record(&c, occ, path, None);
                    }
                }
            }
            ControlKind::Invoke { cell, bindings } => {
                self.excluded.insert(cell.clone());
                let occ = self.next_occurrence;
                self.next_occurrence += 1;
                for b in bindings {
                    if let Some(c) = b.src.port().and_then(|p| p.cell_name()) {
                        self.record(c, occ, path, None);
                    }
                }
            }
            ControlKind::Par(cs) => {
                let id = self.next_par;
                self.next_par += 1;
                for (arm, c) in cs.iter().enumerate() {
                    let mut p = path.clone();
                    p.push((id, arm));
                    self.dynamic(c, &p);
                }
            }
            ControlKind::If { cond, .. } | ControlKind::While { cond, .. } => {
                self.excluded.extend(cond.cell_name().map(String::from));
                for c in node.children() {
                    self.dynamic(c, path);
                }
            }
            _ => {
                for c in node.children() {
                    self.dynamic(c, path);
                }
            }
        }
    }

    fn widen(windows: &mut BTreeMap<String, (u64, u64)>, cell: &str, w: (u64, u64)) {
        let e = windows.entry(cell.to_string()).or_insert(w);
        *e = (e.0.min(w.0), e.1.max(w.1));
    }

    /// Hull of the cycles in which each cell is touched, per static node.
    fn static_windows(
        &mut self,
        node: &Control,
        offset: u64,
        out: &mut BTreeMap<String, (u64, u64)>,
    ) {
        match &node.kind {
            ControlKind::StaticEnable { group } => {
                let Some(g) = self.comp.static_group(group) else {
                    return;
                };
                let whole = (offset, offset + g.latency);
                for name in self.closure(group) {
                    self.reached.insert(name.clone());
                    if name == *group {
                        for a in normalize_guards(g.clone()).assignments {
                            let iv = a.guard.timing.expect("normalized");
                            for c in cells_of(&a) {
                                Self::widen(out, c, (offset + iv.start, offset + iv.end));
                            }
                        }
                    } else if let Some(h) = self.comp.static_group(&name) {
                        for a in &h.assignments {
                            for c in cells_of(a) {
                                Self::widen(out, c, whole);
                            }
                        }
                    }
                }
            }
            ControlKind::StaticSeq(cs) => {
                let mut t = offset;
                for c in cs {
                    self.static_windows(c, t, out);
                    t += self.ctx.latency_of(c).unwrap_or(0);
                }
            }
            ControlKind::StaticPar(cs) => {
                for c in cs {
                    self.static_windows(c, offset, out);
                }
            }
            ControlKind::StaticIf { cond, tru, fls } => {
                self.excluded.extend(cond.cell_name().map(String::from));
                self.static_windows(tru, offset, out);
                self.static_windows(fls, offset, out);
            }
            ControlKind::StaticRepeat { count, body } => {
                let b = self.ctx.latency_of(body).unwrap_or(0);
                let mut inner = BTreeMap::new();
                self.static_windows(body, offset, &mut inner);
                let extra = count.saturating_sub(1) * b;
                for (c, (s, e)) in inner {
                    Self::widen(out, &c, (s, e + extra));
                }
            }
            ControlKind::StaticInvoke { cell, bindings } => {
                self.excluded.insert(cell.clone());
                let l = self.ctx.cell_latency(cell).unwrap_or(0);
                for b in bindings {
                    if let Some(c) = b.src.port().and_then(|p| p.cell_name()) {
                        Self::widen(out, c, (offset, offset + l));
                    }
                }
            }
            _ => {}
        }
    }
}

/// Merges shareable cells of the same prototype whose live ranges never
/// overlap, first-fit in declaration order.
pub fn share_cells(program: &Program, comp: &Component) -> Component {
    let mut col = Collector {
        comp,
        ctx: LatencyCtx::new(program, comp),
        uses: BTreeMap::new(),
        excluded: BTreeSet::new(),
        reached: BTreeSet::new(),
        next_occurrence: 0,
        next_par: 0,
    };
    col.dynamic(&comp.control, &vec![]);
    for a in &comp.continuous {
        col.excluded.extend(cells_of(a).map(String::from));
    }
    let unreached = comp
        .groups
        .iter()
        .map(|g| (&g.name, &g.assignments))
        .chain(comp.static_groups.iter().map(|g| (&g.name, &g.assignments)))
        .filter(|(n, _)| !col.reached.contains(*n));
    for (_, assigns) in unreached {
        for a in assigns {
            col.excluded.extend(cells_of(a).map(String::from));
        }
    }

    let mut reps: Vec<(String, Vec<String>)> = vec![];
    let mut rename: HashMap<String, String> = HashMap::new();
    for cell in &comp.cells {
        if !shareable(program, cell) || col.excluded.contains(&cell.name) {
            continue;
        }
        let Some(uses) = col.uses.get(&cell.name) else {
            continue;
        };
        let stateful = !program
            .primitive(&cell.prototype)
            .is_some_and(|p| p.is_combinational());
        if stateful && uses.iter().any(|u| u.occurrence != uses[0].occurrence) {
            continue;
        }
        let fits = |members: &[String]| members.iter().all(|m| !conflicts(&col.uses[m], uses));
        let slot = reps.iter_mut().find(|(rep, members)| {
            let r = comp.cell(rep).expect("representative exists");
            r.prototype == cell.prototype && r.args == cell.args && fits(members)
        });
        match slot {
            Some((rep, members)) => {
                members.push(cell.name.clone());
                rename.insert(cell.name.clone(), rep.clone());
            }
            None => reps.push((cell.name.clone(), vec![cell.name.clone()])),
        }
    }
    if rename.is_empty() {
        return comp.clone();
    }

    let mut c = comp.clone();
    c.cells.retain(|x| !rename.contains_key(&x.name));
    let mut fix = |p: &mut PortRef| {
        if let PortRef::Cell { cell, .. } = p {
            if let Some(r) = rename.get(cell) {
                *cell = r.clone();
            }
        }
    };
    for a in c.all_assignments_mut() {
        a.map_ports(&mut fix);
    }
    c.control.walk_mut(&mut |n| match &mut n.kind {
        ControlKind::If { cond, .. }
        | ControlKind::While { cond, .. }
        | ControlKind::StaticIf { cond, .. } => fix(cond),
        ControlKind::Invoke { bindings, .. } | ControlKind::StaticInvoke { bindings, .. } => {
            for b in bindings {
                if let Atom::Port(p) = &mut b.src {
                    fix(p);
                }
            }
        }
        _ => {}
    });
    c
}
