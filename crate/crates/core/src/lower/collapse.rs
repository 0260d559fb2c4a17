// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use crate::ir::{
    normalize_guards, Assignment, Cell, Component, Const, Control, ControlKind, Guard, GuardExpr,
    Hole, Interval, LatencyCtx, PortRef, Program, StaticGroup,
};

use super::LowerError;

/// Replaces every static island by a single static group, bottom-up.
///
/// Zero-length islands become `empty`. Groups that were merged into a
/// collapsed group and are no longer referenced are removed.
pub fn collapse_static_control(
    program: &Program,
    comp: &Component,
) -> Result<Component, LowerError> {
    let mut c = Collapser {
        program,
        comp: comp.clone(),
        merged: BTreeSet::new(),
    };
    let control = std::mem::replace(&mut c.comp.control, Control::empty());
    c.comp.control = c.rewrite(control)?;
    c.remove_dead();
    Ok(c.comp)
}

struct Collapser<'a> {
    program: &'a Program,
    comp: Component,
    merged: BTreeSet<String>,
}

impl Collapser<'_> {
    fn err(&self, msg: impl Into<String>) -> LowerError {
        LowerError::internal(&self.comp.name, msg)
    }

    fn rewrite(&mut self, mut node: Control) -> Result<Control, LowerError> {
        if node.is_static() {
            let attrs = node.attributes.clone();
            return Ok(match self.island(&node)? {
                Some((g, _)) => {
                    let mut out = Control::static_enable(g);
                    out.attributes = attrs;
                    out
                }
                None => Control::empty(),
            });
        }
        match &mut node.kind {
            ControlKind::Seq(cs) | ControlKind::Par(cs) => {
                for c in cs.iter_mut() {
                    *c = self.rewrite(std::mem::replace(c, Control::empty()))?;
                }
            }
            ControlKind::If { tru, fls, .. } => {
                **tru = self.rewrite(std::mem::replace(tru, Control::empty()))?;
                **fls = self.rewrite(std::mem::replace(fls, Control::empty()))?;
            }
            ControlKind::While { body, .. } | ControlKind::Repeat { body, .. } => {
                **body = self.rewrite(std::mem::replace(body, Control::empty()))?;
            }
            _ => {}
        }
        Ok(node)
    }

    fn latency(&self, group: &str) -> Result<u64, LowerError> {
        self.comp
            .static_group(group)
            .map(|g| g.latency)
            .ok_or_else(|| self.err(format!("unknown static group `{group}`")))
    }

    /// Normalized assignments of `group` shifted by `offset` cycles.
    fn shifted(&mut self, group: &str, offset: u64) -> Vec<Assignment> {
        let g = self.comp.static_group(group).expect("checked").clone();
        self.merged.insert(g.name.clone());
        normalize_guards(g)
            .assignments
            .into_iter()
            .map(|mut a| {
                a.guard.timing = a.guard.timing.map(|iv| iv.shift(offset));
                a
            })
            .collect()
    }

    fn add_group(&mut self, base: &str, latency: u64, assignments: Vec<Assignment>) -> String {
        let name = self.comp.fresh_name(base);
        let mut g = StaticGroup::new(name.clone(), latency);
        g.assignments = assignments;
        self.comp.static_groups.push(g);
        name
    }

    /// Collapses a static node; `None` when it takes zero cycles.
    fn island(&mut self, node: &Control) -> Result<Option<(String, u64)>, LowerError> {
        match &node.kind {
            ControlKind::Empty => Ok(None),
            ControlKind::StaticEnable { group } => {
                let l = self.latency(group)?;
                Ok((l > 0).then(|| (group.clone(), l)))
            }
            ControlKind::StaticSeq(cs) | ControlKind::StaticPar(cs) => {
                let is_seq = matches!(node.kind, ControlKind::StaticSeq(_));
                let mut kids = vec![];
                for c in cs {
                    kids.extend(self.island(c)?);
                }
                if kids.len() <= 1 {
                    return Ok(kids.pop());
                }
                let mut assigns = vec![];
                let mut offset = 0;
                for (g, l) in &kids {
                    assigns.extend(self.shifted(g, if is_seq { offset } else { 0 }));
                    offset = if is_seq { offset + l } else { offset.max(*l) };
                }
                let base = if is_seq { "comp_seq" } else { "comp_par" };
                Ok(Some((self.add_group(base, offset, assigns), offset)))
            }
            ControlKind::StaticIf { cond, tru, fls } => {
                let t = self.island(tru)?;
                let f = self.island(fls)?;
                let latency = t.iter().chain(&f).map(|(_, l)| *l).max().unwrap_or(0);
                if latency == 0 {
                    return Ok(None);
                }
                let mut assigns = vec![];
                let first = Interval::new(0, 1);
                let rest = Interval::new(1, latency);
                let stash = if latency > 1 {
                    let name = self.comp.fresh_name("cond_stash");
                    self.comp
                        .cells
                        .push(Cell::new(name.clone(), "std_reg", vec![1]));
                    assigns.push(Assignment::guarded(
                        PortRef::cell(&name, "in"),
                        cond.clone(),
                        Guard::timed(first, GuardExpr::True),
                    ));
                    assigns.push(Assignment::guarded(
                        PortRef::cell(&name, "write_en"),
                        Const::sized(1, 1),
                        Guard::timed(first, GuardExpr::True),
                    ));
                    Some(GuardExpr::port(PortRef::cell(&name, "out")))
                } else {
                    None
                };
                let now = GuardExpr::port(cond.clone());
                for (branch, positive) in [(t, true), (f, false)] {
                    let Some((g, _)) = branch else { continue };
                    let pick = |e: GuardExpr| if positive { e } else { e.not() };
                    for a in self.shifted(&g, 0) {
                        let iv = a.guard.timing.expect("normalized");
                        let windows = [
                            (first, now.clone()),
                            (rest, stash.clone().unwrap_or(GuardExpr::True)),
                        ];
                        for (w, sel) in windows {
                            if let Some(part) = iv.intersect(w) {
                                let mut b = a.clone();
                                b.guard = Guard::timed(part, pick(sel).and(a.guard.expr.clone()));
                                assigns.push(b);
                            }
                        }
                    }
                }
                Ok(Some((self.add_group("comp_if", latency, assigns), latency)))
            }
            ControlKind::StaticRepeat { count, body } => {
                let Some((g, l)) = self.island(body)? else {
                    return Ok(None);
                };
                match count {
                    0 => Ok(None),
                    1 => Ok(Some((g, l))),
                    n => {
                        let total = n * l;
                        let go = Assignment::guarded(
                            PortRef::hole(&g, Hole::Go),
                            Const::sized(1, 1),
                            Guard::timed(Interval::new(0, total), GuardExpr::True),
                        );
                        Ok(Some((self.add_group("repeat", total, vec![go]), total)))
                    }
                }
            }
            ControlKind::StaticInvoke { cell, bindings } => {
                let ctx = LatencyCtx::new(self.program, &self.comp);
                let l = ctx
                    .cell_latency(cell)
                    .ok_or_else(|| self.err(format!("`{cell}` has no static latency")))?;
                let go = self.go_port(cell)?;
                let whole = Guard::timed(Interval::new(0, l), GuardExpr::True);
                let mut assigns = vec![Assignment::guarded(
                    PortRef::cell(cell, go),
                    Const::sized(1, 1),
                    whole.clone(),
                )];
                for b in bindings {
                    assigns.push(Assignment::guarded(
                        PortRef::cell(cell, &b.port),
                        b.src.clone(),
                        whole.clone(),
                    ));
                }
                Ok(Some((self.add_group("invoke", l, assigns), l)))
            }
            _ => Err(self.err("dynamic control inside a static island")),
        }
    }

    fn go_port(&self, cell: &str) -> Result<String, LowerError> {
        let proto = &self
            .comp
            .cell(cell)
            .ok_or_else(|| self.err(format!("unknown cell `{cell}`")))?
            .prototype;
        if self.program.component(proto).is_some() {
            return Ok("go".into());
        }
        self.program
            .primitive(proto)
            .and_then(|p| p.go_port())
            .map(str::to_string)
            .ok_or_else(|| self.err(format!("`{cell}` has no go port")))
    }

    /// Drops merged static groups that nothing refers to any more.
    fn remove_dead(&mut self) {
        loop {
            let mut used: BTreeSet<String> = self
                .comp
                .control
                .enabled_groups()
                .into_iter()
                .map(String::from)
                .collect();
            for a in self.comp.all_assignments() {
                let mut ports = a.reads();
                ports.push(&a.dst);
                for p in ports {
                    if let PortRef::Hole { group, .. } = p {
                        used.insert(group.clone());
                    }
                }
            }
            let before = self.comp.static_groups.len();
            let merged = &self.merged;
            self.comp
                .static_groups
                .retain(|g| used.contains(&g.name) || !merged.contains(&g.name));
            if self.comp.static_groups.len() == before {
                break;
            }
        }
    }
}
