// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::ir::{
    Atom, Component, Control, ControlKind, Diagnostic, GuardExpr, LatencyCtx, PortRef, Program,
    STATIC_HINT,
};

const MAX_CHAIN: usize = 8;

/// True when some assignment outside `group` mentions one of its holes.
fn holes_used_elsewhere(comp: &Component, group: &str) -> bool {
    let mentions = |p: &PortRef| matches!(p, PortRef::Hole { group: g, .. } if g == group);
    let outside = comp
        .continuous
        .iter()
        .chain(
            comp.groups
                .iter()
                .filter(|g| g.name != group)
                .flat_map(|g| &g.assignments),
        )
        .chain(comp.static_groups.iter().flat_map(|g| &g.assignments));
    for a in outside {
        if mentions(&a.dst) || a.reads().into_iter().any(mentions) {
            return true;
        }
    }
    false
}

/// Cycle, counted from the group's first cycle, on which `port` (a done
/// output) first goes high.
fn done_time(
    program: &Program,
    comp: &Component,
    group: &str,
    port: &PortRef,
    depth: usize,
) -> Option<u64> {
    if depth > MAX_CHAIN {
        return None;
    }
    let PortRef::Cell { cell, port: pname } = port else {
        return None;
    };
    let proto = &comp.cell(cell)?.prototype;
    let prim = program.primitive(proto)?;
    if prim.done_port() != Some(pname.as_str()) {
        return None;
    }
    let latency = prim.known_latency()?;
    let go = PortRef::cell(cell, prim.go_port()?);
    if comp.continuous.iter().any(|a| a.dst == go) {
        return None;
    }
    let g = comp.group(group)?;
    let mut drivers = g.assignments.iter().filter(|a| a.dst == go);
    let a = drivers.next()?;
    if drivers.next().is_some() {
        return None;
    }
    let start = match (&a.src, &a.guard.expr) {
        (Atom::Const(c), GuardExpr::True) if c.value != 0 => 0,
        (Atom::Const(c), GuardExpr::Port(p)) if c.value != 0 => {
            done_time(program, comp, group, p, depth + 1)?
        }
        (Atom::Port(p), GuardExpr::True) => done_time(program, comp, group, p, depth + 1)?,
        _ => return None,
    };
    Some(start + latency)
}

/// Latency of a dynamic group whose `done` follows from unconditionally
/// started cells of known latency; the group then behaves as `static<n>`.
pub fn group_latency(program: &Program, comp: &Component, group: &str) -> Option<u64> {
    let g = comp.group(group)?;
    if holes_used_elsewhere(comp, group) {
        return None;
    }
    let mut done = g.done_assignments();
    let d = done.next()?;
    if done.next().is_some() || d.guard.timing.is_some() {
        return None;
    }
    for a in g.assignments.iter().filter(|a| !g.is_done_assignment(a)) {
        if a.reads()
            .iter()
            .any(|p| matches!(p, PortRef::Hole { group: h, .. } if h == group))
        {
            return None;
        }
    }
    let n = match (&d.src, &d.guard.expr) {
        (Atom::Port(p), GuardExpr::True) => done_time(program, comp, group, p, 0)?,
        (Atom::Const(c), GuardExpr::Port(p)) if c.value != 0 => {
            done_time(program, comp, group, p, 0)?
        }
        _ => return None,
    };
    (n >= 1).then_some(n)
}

/// Attaches `@static(n)` hints to dynamic groups and control nodes whose
/// latency is known. User hints are re-derived; disagreements become warnings.
pub fn infer_static_timing(program: &Program, comp: &Component) -> (Component, Vec<Diagnostic>) {
    let mut c = comp.clone();
    let mut warnings = vec![];
    let mut hints = HashMap::new();
    for i in 0..c.groups.len() {
        let name = c.groups[i].name.clone();
        let derived = group_latency(program, comp, &name);
        let g = &mut c.groups[i];
        if let Some(user) = g.attributes.static_hint() {
            if Some(user) != derived {
                warnings.push(Diagnostic::warning(
                    format!(
                        "{}: group `{name}` is annotated @static({user}) but its latency is {}",
                        comp.name,
                        show(derived)
                    ),
                    &g.span,
                ));
            }
        }
        match derived {
            Some(n) => {
                g.attributes.set_static_hint(n);
                hints.insert(name, n);
            }
            None => {
                g.attributes.remove(STATIC_HINT);
            }
        }
    }
    let mut control = std::mem::replace(&mut c.control, Control::empty());
    let ctx = LatencyCtx::new(program, &c);
    annotate(&mut control, &hints, &ctx, &comp.name, &mut warnings);
    c.control = control;
    (c, warnings)
}

fn show(n: Option<u64>) -> String {
    n.map(|n| n.to_string()).unwrap_or_else(|| "unknown".into())
}

fn annotate(
    node: &mut Control,
    hints: &HashMap<String, u64>,
    ctx: &LatencyCtx,
    comp: &str,
    warnings: &mut Vec<Diagnostic>,
) -> Option<u64> {
    if node.is_static() {
        return ctx.latency_of(node);
    }
    let kids: Vec<Option<u64>> = node
        .children_mut()
        .into_iter()
        .map(|c| annotate(c, hints, ctx, comp, warnings))
        .collect();
    let all = || kids.iter().copied().collect::<Option<Vec<u64>>>();
    let derived = match &node.kind {
        ControlKind::Empty => return Some(0),
        ControlKind::Enable { group } => return hints.get(group).copied(),
        ControlKind::Seq(_) => all().map(|v| v.iter().sum()),
        ControlKind::Par(_) | ControlKind::If { .. } => {
            all().map(|v| v.into_iter().max().unwrap_or(0))
        }
        ControlKind::Repeat { count, .. } => kids[0].map(|b| count * b),
        _ => None,
    };
    if let Some(user) = node.attributes.static_hint() {
        if Some(user) != derived {
            warnings.push(Diagnostic::warning(
                format!(
                    "{comp}: control annotated @static({user}) but its latency is {}",
                    show(derived)
                ),
                &node.span,
            ));
        }
    }
    match derived {
        Some(n) if n > 0 => node.attributes.set_static_hint(n),
        _ => {
            node.attributes.remove(STATIC_HINT);
        }
    }
    derived
}

/// Fewest cycles `node` can take under the dynamic handshake model, using
/// the `@static` hints of groups; `None` when some part is unbounded or unknown.
///
/// A group of latency n takes n + 1 cycles (the extra one is its done
/// cycle), `if` spends one cycle on its condition, and a static island
/// under dynamic control takes its latency plus one.
pub fn dynamic_cycles(comp: &Component, ctx: &LatencyCtx, node: &Control) -> Option<u64> {
    if node.is_static() {
        let l = ctx.latency_of(node)?;
        return Some(if l == 0 { 0 } else { l + 1 });
    }
    let kids = || {
        node.children()
            .into_iter()
            .map(|c| dynamic_cycles(comp, ctx, c))
    };
    match &node.kind {
        ControlKind::Empty => Some(0),
        ControlKind::Enable { group } => comp.group(group)?.attributes.static_hint().map(|n| n + 1),
        ControlKind::Seq(_) => kids().sum(),
        ControlKind::Par(_) => kids().try_fold(0, |m, k| k.map(|k| m.max(k))),
        ControlKind::If { .. } => kids()
            .try_fold(u64::MAX, |m, k| k.map(|k| m.min(k)))
            .map(|m| m + 1),
        ControlKind::Repeat { count, body } => dynamic_cycles(comp, ctx, body).map(|b| count * b),
        _ => None,
    }
}
