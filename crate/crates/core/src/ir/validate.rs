// SPDX-License-Identifier: Apache-2.0

//! Well-formedness checks. Every violation becomes a [`Diagnostic`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::{
    Assignment, Atom, Component, Control, ControlKind, Direction, GuardExpr, Hole, LatencyCtx,
    LatencyKind, PortRef, PortRole, Program, SourceSpan, DELAY_PREFIX,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: &SourceSpan) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            span: span.clone(),
        }
    }
    pub fn warning(message: impl Into<String>, span: &SourceSpan) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
            span: span.clone(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if self.span.is_known() {
            write!(f, "{}: {sev}: {}", self.span, self.message)
        } else {
            write!(f, "{sev}: {}", self.message)
        }
    }
}

/// Checks every structural invariant of the program. Returns an empty list
/// iff the program is well formed.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    let mut diags = vec![];
    let nowhere = SourceSpan::default();

    let mut seen = HashSet::new();
    for comp in &program.components {
        if !seen.insert(comp.name.as_str()) {
            diags.push(Diagnostic::error(
                format!("duplicate component `{}`", comp.name),
                &comp.span,
            ));
        }
        if program.primitive(&comp.name).is_some() {
            diags.push(Diagnostic::error(
                format!("component `{}` shadows a primitive", comp.name),
                &comp.span,
            ));
        }
    }
    if program.entry_component().is_none() {
        diags.push(Diagnostic::error(
            format!("entry component `{}` is not defined", program.entry),
            &nowhere,
        ));
    }
    check_recursion(program, &mut diags);
    for comp in &program.components {
        ComponentChecker {
            program,
            comp,
            diags: &mut diags,
        }
        .run();
    }
    diags
}

fn check_recursion(program: &Program, diags: &mut Vec<Diagnostic>) {
    fn visit<'a>(
        program: &'a Program,
        name: &'a str,
        stack: &mut Vec<&'a str>,
        done: &mut HashSet<&'a str>,
        diags: &mut Vec<Diagnostic>,
    ) {
        if done.contains(name) {
            return;
        }
        if stack.contains(&name) {
            let comp = program.component(name).unwrap();
            diags.push(Diagnostic::error(
                format!(
                    "component `{name}` instantiates itself (via {})",
                    stack.join(" -> ")
                ),
                &comp.span,
            ));
            return;
        }
        let Some(comp) = program.component(name) else {
            return;
        };
        stack.push(name);
        for cell in &comp.cells {
            if program.component(&cell.prototype).is_some() {
                visit(program, &cell.prototype, stack, done, diags);
            }
        }
        stack.pop();
        done.insert(name);
    }
    let mut done = HashSet::new();
    for comp in &program.components {
        visit(program, &comp.name, &mut vec![], &mut done, diags);
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Access {
    Read,
    Write,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum GroupKind {
    Dynamic,
    Static(u64),
}

struct ComponentChecker<'a, 'd> {
    program: &'a Program,
    comp: &'a Component,
    diags: &'d mut Vec<Diagnostic>,
}

impl<'a> ComponentChecker<'a, '_> {
    fn err(&mut self, msg: impl Into<String>, span: &SourceSpan) {
        self.diags.push(Diagnostic::error(
            format!("{}: {}", self.comp.name, msg.into()),
            span,
        ));
    }

    fn group_kind(&self, name: &str) -> Option<GroupKind> {
        if self.comp.group(name).is_some() {
            Some(GroupKind::Dynamic)
        } else {
            self.comp
                .static_group(name)
                .map(|g| GroupKind::Static(g.latency))
        }
    }

    fn run(&mut self) {
        let comp = self.comp;
        let mut io = HashSet::new();
        for p in comp.inputs.iter().chain(&comp.outputs) {
            if !io.insert(p.name.as_str()) {
                self.err(format!("duplicate port `{}`", p.name), &comp.span);
            }
            if p.width == 0 || p.width > 64 {
                self.err(
                    format!("port `{}` has unsupported width {}", p.name, p.width),
                    &comp.span,
                );
            }
        }

        let mut names = HashSet::new();
        for cell in &comp.cells {
            if !names.insert(cell.name.as_str()) {
                self.err(format!("duplicate name `{}`", cell.name), &cell.span);
            }
            if let Some(callee) = self.program.component(&cell.prototype) {
                if !cell.args.is_empty() {
                    self.err(
                        format!("component `{}` takes no parameters", callee.name),
                        &cell.span,
                    );
                }
            } else if let Some(prim) = self.program.primitive(&cell.prototype) {
                if prim.params.len() != cell.args.len() {
                    self.err(
                        format!(
                            "`{}` expects {} parameters, got {}",
                            prim.name,
                            prim.params.len(),
                            cell.args.len()
                        ),
                        &cell.span,
                    );
                } else {
                    for port in prim.inputs.iter().chain(&prim.outputs) {
                        if let Some((w, _)) = prim.port_width(&port.name, &cell.args) {
                            if w == 0 || w > 64 {
                                self.err(
                                    format!(
                                        "cell `{}` port `{}` has unsupported width {w}",
                                        cell.name, port.name
                                    ),
                                    &cell.span,
                                );
                            }
                        }
                    }
                }
            } else {
                self.err(
                    format!(
                        "cell `{}` has unknown prototype `{}`",
                        cell.name, cell.prototype
                    ),
                    &cell.span,
                );
            }
        }
        for g in &comp.groups {
            if !names.insert(g.name.as_str()) {
                self.err(format!("duplicate name `{}`", g.name), &g.span);
            }
            if g.name.starts_with(DELAY_PREFIX) {
                self.err(
                    format!("`{}` uses the reserved prefix `{DELAY_PREFIX}`", g.name),
                    &g.span,
                );
            }
        }
        for g in &comp.static_groups {
            if !names.insert(g.name.as_str()) {
                self.err(format!("duplicate name `{}`", g.name), &g.span);
            }
            if g.name.starts_with(DELAY_PREFIX) && !g.assignments.is_empty() {
                self.err(
                    format!(
                        "`{}` uses the reserved prefix `{DELAY_PREFIX}` but is not empty",
                        g.name
                    ),
                    &g.span,
                );
            }
        }

        for a in &comp.continuous {
            if a.guard.timing.is_some() {
                self.err("timing interval outside a static group", &a.span);
            }
            self.check_assignment(a, None);
        }
        for g in &comp.groups {
            let mut has_done = false;
            for a in &g.assignments {
                if a.guard.timing.is_some() {
                    self.err(
                        format!("timing interval in dynamic group `{}`", g.name),
                        &a.span,
                    );
                }
                if g.is_done_assignment(a) {
                    has_done = true;
                }
                self.check_assignment(a, Some(&g.name));
            }
            if !has_done {
                self.err(
                    format!("group `{}` never assigns its done signal", g.name),
                    &g.span,
                );
            }
            self.check_exclusive(&g.name, &g.assignments);
        }
        for g in &comp.static_groups {
            if g.latency == 0 {
                self.err(format!("static group `{}` has latency 0", g.name), &g.span);
            }
            for a in &g.assignments {
                if let Some(iv) = a.guard.timing {
                    if iv.start >= iv.end {
                        self.err(
                            format!("empty timing interval %[{}:{}]", iv.start, iv.end),
                            &a.span,
                        );
                    } else if iv.end > g.latency {
                        self.err(
                            format!(
                                "timing interval exceeds latency: %[{}:{}] in static<{}> group `{}`",
                                iv.start, iv.end, g.latency, g.name
                            ),
                            &a.span,
                        );
                    }
                }
                self.check_assignment(a, Some(&g.name));
            }
            self.check_exclusive(&g.name, &g.assignments);
        }

        self.check_control(&comp.control, false);

        if let Some(lat) = comp.latency {
            let ctx = LatencyCtx::new(self.program, comp);
            if !comp.control.is_static() && !comp.control.is_empty() {
                self.err(
                    format!("static<{lat}> component must have static control"),
                    &comp.span,
                );
            } else if let Some(actual) = ctx.latency_of(&comp.control) {
                if actual != lat {
                    self.err(
                        format!("declared latency {lat} differs from control latency {actual}"),
                        &comp.span,
                    );
                }
            }
        }

        self.check_comb_cycles();
    }

    /// Two unconditional drivers of one port whose intervals overlap.
    fn check_exclusive(&mut self, group: &str, assigns: &[Assignment]) {
        for (i, a) in assigns.iter().enumerate() {
            for b in &assigns[i + 1..] {
                if a.dst != b.dst || a.src == b.src {
                    continue;
                }
                if !a.guard.expr.is_true() || !b.guard.expr.is_true() {
                    continue;
                }
                let overlap = match (a.guard.timing, b.guard.timing) {
                    (Some(x), Some(y)) => x.intersect(y).is_some(),
                    _ => true,
                };
                if overlap {
                    self.err(
                        format!(
                            "conflicting unconditional drivers of `{}` in `{group}`",
                            a.dst
                        ),
                        &b.span,
                    );
                }
            }
        }
    }

    /// Width and access check for a port reference.
    fn port(&mut self, p: &PortRef, access: Access, span: &SourceSpan) -> Option<u32> {
        let comp = self.comp;
        match p {
            PortRef::This { port } => {
                let Some((def, dir)) = comp.io_port(port) else {
                    self.err(format!("unknown port `{port}`"), span);
                    return None;
                };
                match (dir, access) {
                    (Direction::Input, Access::Write) => {
                        self.err(format!("cannot drive input port `{port}`"), span)
                    }
                    (Direction::Output, Access::Read) => {
                        self.err(format!("cannot read output port `{port}`"), span)
                    }
                    _ => {}
                }
                Some(def.width)
            }
            PortRef::Hole { group, hole } => {
                match (self.group_kind(group), hole) {
                    (None, _) => {
                        self.err(format!("unknown group `{group}`"), span);
                        return None;
                    }
                    (Some(GroupKind::Static(_)), Hole::Done) => {
                        self.err(format!("static group `{group}` has no done signal"), span);
                        return None;
                    }
                    _ => {}
                }
                Some(1)
            }
            PortRef::Cell { cell, port } => {
                let Some(c) = comp.cell(cell) else {
                    self.err(format!("unknown cell `{cell}`"), span);
                    return None;
                };
                let (width, dir) = if let Some(callee) = self.program.component(&c.prototype) {
                    match callee.io_port(port) {
                        Some((def, dir)) => (def.width, dir),
                        None if port == "go" => (1, Direction::Input),
                        None if port == "done" && !callee.is_static() => (1, Direction::Output),
                        None => {
                            self.err(format!("`{cell}` has no port `{port}`"), span);
                            return None;
                        }
                    }
                } else {
                    let prim = self.program.primitive(&c.prototype)?;
                    match prim.port_width(port, &c.args) {
                        Some(x) => x,
                        None => {
                            self.err(format!("`{cell}` has no port `{port}`"), span);
                            return None;
                        }
                    }
                };
                match (dir, access) {
                    (Direction::Output, Access::Write) => {
                        self.err(format!("cannot drive output port `{cell}.{port}`"), span)
                    }
                    (Direction::Input, Access::Read) => {
                        self.err(format!("cannot read input port `{cell}.{port}`"), span)
                    }
                    _ => {}
                }
                Some(width)
            }
        }
    }

    fn atom(&mut self, a: &Atom, expected: Option<u32>, span: &SourceSpan) -> Option<u32> {
        match a {
            Atom::Port(p) => self.port(p, Access::Read, span),
            Atom::Const(c) => {
                if let Some(w) = c.width.or(expected) {
                    if w < 64 && c.value >> w != 0 {
                        self.err(
                            format!("constant {} does not fit in {w} bits", c.value),
                            span,
                        );
                    }
                }
                c.width
            }
        }
    }

    fn guard(&mut self, g: &GuardExpr, span: &SourceSpan) {
        match g {
            GuardExpr::True => {}
            GuardExpr::Port(p) => {
                if let Some(w) = self.port(p, Access::Read, span) {
                    if w != 1 {
                        self.err(
                            format!("guard port `{p}` must be 1 bit wide, found {w}"),
                            span,
                        );
                    }
                }
            }
            GuardExpr::Not(inner) => self.guard(inner, span),
            GuardExpr::And(a, b) | GuardExpr::Or(a, b) => {
                self.guard(a, span);
                self.guard(b, span);
            }
            GuardExpr::Cmp(op, l, r) => {
                let lw = self.atom(l, None, span);
                let rw = self.atom(r, lw, span);
                if lw.is_none() && rw.is_some() {
                    self.atom(l, rw, span);
                }
                if let (Some(x), Some(y)) = (lw, rw) {
                    if x != y {
                        self.err(
                            format!("width mismatch in comparison `{}`: {x} vs {y}", op.as_str()),
                            span,
                        );
                    }
                }
            }
        }
    }

    fn check_assignment(&mut self, a: &Assignment, group: Option<&str>) {
        if let PortRef::Hole {
            group: target,
            hole: Hole::Done,
        } = &a.dst
        {
            if Some(target.as_str()) != group {
                self.err(
                    format!("`{}` may only be driven inside group `{target}`", a.dst),
                    &a.span,
                );
            }
        }
        let dw = self.port(&a.dst, Access::Write, &a.span);
        let sw = self.atom(&a.src, dw, &a.span);
        if let (Some(d), Some(s)) = (dw, sw) {
            if d != s {
                self.err(
                    format!(
                        "width mismatch: `{}` is {d} bits, source is {s} bits",
                        a.dst
                    ),
                    &a.span,
                );
            }
        }
        self.guard(&a.guard.expr, &a.span);
    }

    fn cond_port(&mut self, p: &PortRef, span: &SourceSpan) {
        if let Some(w) = self.port(p, Access::Read, span) {
            if w != 1 {
                self.err(format!("condition `{p}` must be 1 bit wide"), span);
            }
        }
    }

    fn check_invoke(
        &mut self,
        cell: &str,
        bindings: &[super::Binding],
        is_static: bool,
        span: &SourceSpan,
    ) {
        let Some(c) = self.comp.cell(cell) else {
            self.err(format!("invoke of unknown cell `{cell}`"), span);
            return;
        };
        let ctx = LatencyCtx::new(self.program, self.comp);
        let static_callee = ctx.cell_latency(cell).is_some();
        let dynamic_callee = if let Some(callee) = self.program.component(&c.prototype) {
            !callee.is_static()
        } else if let Some(prim) = self.program.primitive(&c.prototype) {
            prim.latency == LatencyKind::Dynamic
        } else {
            return;
        };
        if is_static && !static_callee {
            self.err(
                format!("static parent, dynamic child: `static invoke` of dynamic cell `{cell}`"),
                span,
            );
        }
        if !is_static && !dynamic_callee {
            self.err(
                format!("`invoke` of `{cell}` which has no go/done interface"),
                span,
            );
        }
        for b in bindings {
            let role_port = self
                .program
                .primitive(&c.prototype)
                .and_then(|p| p.port(&b.port))
                .map(|(d, _)| d.role != PortRole::None)
                .unwrap_or(b.port == "go");
            if role_port {
                self.err(
                    format!("cannot bind control port `{cell}.{}`", b.port),
                    span,
                );
                continue;
            }
            let dst = PortRef::cell(cell, b.port.clone());
            let dw = self.port(&dst, Access::Write, span);
            let sw = self.atom(&b.src, dw, span);
            if let (Some(d), Some(s)) = (dw, sw) {
                if d != s {
                    self.err(format!("width mismatch binding `{cell}.{}`", b.port), span);
                }
            }
        }
    }

    fn check_control(&mut self, c: &Control, in_static: bool) {
        if in_static && !c.is_static() && !c.is_empty() {
            self.err(
                format!("static parent, dynamic child: {}", describe(c)),
                &c.span,
            );
        }
        match &c.kind {
            ControlKind::Empty => {}
            ControlKind::Enable { group } => match self.group_kind(group) {
                Some(GroupKind::Dynamic) => {}
                Some(GroupKind::Static(_)) => self.err(
                    format!("static group `{group}` enabled dynamically"),
                    &c.span,
                ),
                None => self.err(format!("unknown group `{group}`"), &c.span),
            },
            ControlKind::StaticEnable { group } => match self.group_kind(group) {
                Some(GroupKind::Static(_)) => {}
                Some(GroupKind::Dynamic) => self.err(
                    format!("static parent, dynamic child: group `{group}` is dynamic"),
                    &c.span,
                ),
                None => self.err(format!("unknown group `{group}`"), &c.span),
            },
            ControlKind::Seq(cs) | ControlKind::Par(cs) => {
                for ch in cs {
                    self.check_control(ch, false)
                }
            }
            ControlKind::StaticSeq(cs) | ControlKind::StaticPar(cs) => {
                for ch in cs {
                    self.check_control(ch, true)
                }
            }
            ControlKind::If { cond, tru, fls } => {
                self.cond_port(cond, &c.span);
                self.check_control(tru, false);
                self.check_control(fls, false);
            }
            ControlKind::StaticIf { cond, tru, fls } => {
                self.cond_port(cond, &c.span);
                self.check_control(tru, true);
                self.check_control(fls, true);
            }
            ControlKind::While { cond, body } => {
                self.cond_port(cond, &c.span);
                self.check_control(body, false);
            }
            ControlKind::Repeat { body, .. } => self.check_control(body, false),
            ControlKind::StaticRepeat { body, .. } => self.check_control(body, true),
            ControlKind::Invoke { cell, bindings } => {
                self.check_invoke(cell, bindings, false, &c.span)
            }
            ControlKind::StaticInvoke { cell, bindings } => {
                self.check_invoke(cell, bindings, true, &c.span)
            }
        }
    }

    /// Looks for a cycle through combinational paths in the union of all
    /// assignments, treating stateful cells as cuts.
    fn check_comb_cycles(&mut self) {
        let comp = self.comp;
        let mut edges: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut add = |from: String, to: String| edges.entry(from).or_default().push(to);
        let assign_edges =
            |a: &Assignment, group: Option<&str>, add: &mut dyn FnMut(String, String)| {
                let dst = a.dst.to_string();
                for r in a.reads() {
                    add(r.to_string(), dst.clone());
                }
                if let Some(g) = group {
                    if !matches!(&a.dst, PortRef::Hole { group, hole: Hole::Done } if group == g) {
                        add(PortRef::hole(g, Hole::Go).to_string(), dst);
                    }
                }
            };
        for a in &comp.continuous {
            assign_edges(a, None, &mut add);
        }
        for g in &comp.groups {
            add(
                PortRef::hole(&g.name, Hole::Done).to_string(),
                PortRef::hole(&g.name, Hole::Go).to_string(),
            );
            for a in &g.assignments {
                assign_edges(a, Some(&g.name), &mut add);
            }
        }
        for g in &comp.static_groups {
            for a in &g.assignments {
                assign_edges(a, Some(&g.name), &mut add);
            }
        }
        for cell in &comp.cells {
            let Some(prim) = self.program.primitive(&cell.prototype) else {
                continue;
            };
            let pairs: Vec<(&str, &str)> = if prim.is_combinational() {
                prim.inputs
                    .iter()
                    .flat_map(|i| {
                        prim.outputs
                            .iter()
                            .map(move |o| (i.name.as_str(), o.name.as_str()))
                    })
                    .collect()
            } else if prim.name == "std_mem_d1" {
                vec![("addr0", "read_data")]
            } else {
                vec![]
            };
            for (i, o) in pairs {
                add(format!("{}.{i}", cell.name), format!("{}.{o}", cell.name));
            }
        }

        let mut state: HashMap<&str, u8> = HashMap::new();
        let mut stack: Vec<&str> = vec![];
        fn dfs<'e>(
            n: &'e str,
            edges: &'e BTreeMap<String, Vec<String>>,
            state: &mut HashMap<&'e str, u8>,
            stack: &mut Vec<&'e str>,
        ) -> Option<Vec<String>> {
            state.insert(n, 1);
            stack.push(n);
            for m in edges.get(n).into_iter().flatten() {
                match state.get(m.as_str()).copied().unwrap_or(0) {
                    0 => {
                        if let Some(c) = dfs(m, edges, state, stack) {
                            return Some(c);
                        }
                    }
                    1 => {
                        let pos = stack.iter().position(|s| *s == m).unwrap();
                        let mut cyc: Vec<String> =
                            stack[pos..].iter().map(|s| s.to_string()).collect();
                        cyc.push(m.clone());
                        return Some(cyc);
                    }
                    _ => {}
                }
            }
            stack.pop();
            state.insert(n, 2);
            None
        }
        let keys: Vec<&str> = edges.keys().map(|s| s.as_str()).collect();
        for k in keys {
            if state.get(k).copied().unwrap_or(0) == 0 {
                if let Some(cycle) = dfs(k, &edges, &mut state, &mut stack) {
                    let span = comp.span.clone();
                    self.err(
                        format!("combinational cycle: {}", cycle.join(" -> ")),
                        &span,
                    );
                    return;
                }
            }
        }
    }
}

fn describe(c: &Control) -> String {
    match &c.kind {
        ControlKind::Enable { group } => format!("dynamic group `{group}`"),
        ControlKind::Invoke { cell, .. } => format!("dynamic invoke of `{cell}`"),
        ControlKind::Seq(_) => "dynamic seq".into(),
        ControlKind::Par(_) => "dynamic par".into(),
        ControlKind::If { .. } => "dynamic if".into(),
        ControlKind::While { .. } => "while loop".into(),
        ControlKind::Repeat { .. } => "dynamic repeat".into(),
        _ => "static node".into(),
    }
}
