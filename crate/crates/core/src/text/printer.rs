// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use crate::ir::{
    Assignment, Atom, Attributes, Binding, Component, Const, Control, ControlKind, Guard,
    GuardExpr, Interval, LatencyKind, PortDecl, PrimitiveDecl, Program, StaticGroup, WidthExpr,
};

const INDENT: &str = "  ";

/// Canonical text of a program. Declaration order is preserved.
pub fn print(program: &Program) -> String {
    let mut out = String::new();
    for i in &program.imports {
        writeln!(out, "import \"{i}\";").unwrap();
    }
    for p in &program.externs {
        if !out.is_empty() {
            out.push('\n');
        }
        print_primitive(&mut out, p);
    }
    for c in &program.components {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&print_component(c));
    }
    out
}

fn attrs(a: &Attributes) -> String {
    let mut s = String::new();
    for (k, v) in a.iter() {
        match v {
            Some(n) => write!(s, "@{k}({n}) ").unwrap(),
            None => write!(s, "@{k} ").unwrap(),
        }
    }
    s
}

fn print_primitive(out: &mut String, p: &PrimitiveDecl) {
    if let Some(h) = p.hint {
        write!(out, "@static({h}) ").unwrap();
    }
    if let LatencyKind::Fixed(n) = p.latency {
        write!(out, "static<{n}> ").unwrap();
    }
    write!(out, "primitive {}", p.name).unwrap();
    if !p.params.is_empty() {
        write!(out, "[{}]", p.params.join(", ")).unwrap();
    }
    let ports = |ps: &[PortDecl]| {
        ps.iter()
            .map(|d| match &d.width {
                WidthExpr::Const(n) => format!("{}: {n}", d.name),
                WidthExpr::Param(p) => format!("{}: {p}", d.name),
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    writeln!(out, "({}) -> ({});", ports(&p.inputs), ports(&p.outputs)).unwrap();
}

pub fn print_component(c: &Component) -> String {
    let mut out = String::new();
    out.push_str(&attrs(&c.attributes));
    if let Some(n) = c.latency {
        write!(out, "static<{n}> ").unwrap();
    }
    let sig = |ps: &[crate::ir::PortDef]| {
        ps.iter()
            .map(|p| format!("{}: {}", p.name, p.width))
            .collect::<Vec<_>>()
            .join(", ")
    };
    writeln!(
        out,
        "component {}({}) -> ({}) {{",
        c.name,
        sig(&c.inputs),
        sig(&c.outputs)
    )
    .unwrap();

    if c.cells.is_empty() {
        writeln!(out, "{INDENT}cells {{}}").unwrap();
    } else {
        writeln!(out, "{INDENT}cells {{").unwrap();
        for cell in &c.cells {
            let args: Vec<String> = cell.args.iter().map(|a| a.to_string()).collect();
            writeln!(
                out,
                "{INDENT}{INDENT}{}{} = {}({});",
                attrs(&cell.attributes),
                cell.name,
                cell.prototype,
                args.join(", ")
            )
            .unwrap();
        }
        writeln!(out, "{INDENT}}}").unwrap();
    }

    if c.groups.is_empty() && c.static_groups.is_empty() && c.continuous.is_empty() {
        writeln!(out, "{INDENT}wires {{}}").unwrap();
    } else {
        writeln!(out, "{INDENT}wires {{").unwrap();
        let ind2 = INDENT.repeat(2);
        let ind3 = INDENT.repeat(3);
        for g in &c.groups {
            writeln!(out, "{ind2}{}group {} {{", attrs(&g.attributes), g.name).unwrap();
            for a in &g.assignments {
                writeln!(out, "{ind3}{}", print_assignment(a)).unwrap();
            }
            writeln!(out, "{ind2}}}").unwrap();
        }
        for g in &c.static_groups {
            for line in print_static_group(g).lines() {
                writeln!(out, "{ind2}{line}").unwrap();
            }
        }
        for a in &c.continuous {
            writeln!(out, "{ind2}{}", print_assignment(a)).unwrap();
        }
        writeln!(out, "{INDENT}}}").unwrap();
    }

    if c.control.is_empty() && c.control.attributes.is_empty() {
        writeln!(out, "{INDENT}control {{}}").unwrap();
    } else {
        writeln!(out, "{INDENT}control {{").unwrap();
        control(&mut out, &c.control, 2);
        writeln!(out, "{INDENT}}}").unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn print_static_group(g: &StaticGroup) -> String {
    let mut out = format!(
        "{}static<{}> group {} {{\n",
        attrs(&g.attributes),
        g.latency,
        g.name
    );
    for a in &g.assignments {
        writeln!(out, "{INDENT}{}", print_assignment(a)).unwrap();
    }
    out.push_str("}\n");
    out
}

fn konst(c: &Const) -> String {
    match c.width {
        Some(w) => format!("{w}'d{}", c.value),
        None => c.value.to_string(),
    }
}

fn atom(a: &Atom) -> String {
    match a {
        Atom::Port(p) => p.to_string(),
        Atom::Const(c) => konst(c),
    }
}

fn interval(iv: &Interval) -> String {
    format!("%[{}:{}]", iv.start, iv.end)
}

/// Precedence levels: 1 = `|`, 2 = `&`, 3 = comparisons, 4 = operand of `!`.
fn guard_expr(g: &GuardExpr, ctx: u8) -> String {
    match g {
        GuardExpr::True => "(1'd1 == 1'd1)".into(),
        GuardExpr::Port(p) => p.to_string(),
        GuardExpr::Cmp(op, a, b) => {
            let s = format!("{} {} {}", atom(a), op.as_str(), atom(b));
            if ctx > 3 {
                format!("({s})")
            } else {
                s
            }
        }
        GuardExpr::Not(inner) => format!("!{}", guard_expr(inner, 4)),
        GuardExpr::And(a, b) => {
            let s = format!("{} & {}", guard_expr(a, 2), guard_expr(b, 3));
            if ctx > 2 {
                format!("({s})")
            } else {
                s
            }
        }
        GuardExpr::Or(a, b) => {
            let s = format!("{} | {}", guard_expr(a, 1), guard_expr(b, 2));
            if ctx > 1 {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

pub fn print_guard(g: &Guard) -> Option<String> {
    match (&g.timing, g.expr.is_true()) {
        (None, true) => None,
        (Some(iv), true) => Some(interval(iv)),
        (None, false) => Some(guard_expr(&g.expr, 1)),
        (Some(iv), false) => Some(format!("{} & {}", interval(iv), guard_expr(&g.expr, 2))),
    }
}

pub fn print_assignment(a: &Assignment) -> String {
    match print_guard(&a.guard) {
        Some(g) => format!("{} = {g} ? {};", a.dst, atom(&a.src)),
        None => format!("{} = {};", a.dst, atom(&a.src)),
    }
}

fn bindings(bs: &[Binding]) -> String {
    bs.iter()
        .map(|b| format!("{}={}", b.port, atom(&b.src)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Text of a control tree, without the surrounding `control { }`.
pub fn print_control(c: &Control) -> String {
    let mut out = String::new();
    control(&mut out, c, 0);
    out
}

fn control(out: &mut String, c: &Control, depth: usize) {
    let ind = INDENT.repeat(depth);
    let a = attrs(&c.attributes);
    let list = |out: &mut String, head: &str, cs: &[Control]| {
        if cs.is_empty() {
            writeln!(out, "{ind}{a}{head} {{}}").unwrap();
            return;
        }
        writeln!(out, "{ind}{a}{head} {{").unwrap();
        for ch in cs {
            control(out, ch, depth + 1);
        }
        writeln!(out, "{ind}}}").unwrap();
    };
    let body = |out: &mut String, b: &Control| {
        if b.is_empty() && b.attributes.is_empty() {
            return;
        }
        control(out, b, depth + 1);
    };
    match &c.kind {
        ControlKind::Empty => writeln!(out, "{ind}{a}empty;").unwrap(),
        ControlKind::Enable { group } | ControlKind::StaticEnable { group } => {
            writeln!(out, "{ind}{a}{group};").unwrap()
        }
        ControlKind::Seq(cs) => list(out, "seq", cs),
        ControlKind::Par(cs) => list(out, "par", cs),
        ControlKind::StaticSeq(cs) => list(out, "static seq", cs),
        ControlKind::StaticPar(cs) => list(out, "static par", cs),
        ControlKind::If { cond, tru, fls } | ControlKind::StaticIf { cond, tru, fls } => {
            let kw = if c.is_static() { "static if" } else { "if" };
            writeln!(out, "{ind}{a}{kw} {cond} {{").unwrap();
            body(out, tru);
            if fls.is_empty() && fls.attributes.is_empty() {
                writeln!(out, "{ind}}}").unwrap();
            } else {
                writeln!(out, "{ind}}} else {{").unwrap();
                body(out, fls);
                writeln!(out, "{ind}}}").unwrap();
            }
        }
        ControlKind::While { cond, body: b } => {
            writeln!(out, "{ind}{a}while {cond} {{").unwrap();
            body(out, b);
            writeln!(out, "{ind}}}").unwrap();
        }
        ControlKind::Repeat { count, body: b } | ControlKind::StaticRepeat { count, body: b } => {
            let kw = if c.is_static() {
                "static repeat"
            } else {
                "repeat"
            };
            writeln!(out, "{ind}{a}{kw} {count} {{").unwrap();
            body(out, b);
            writeln!(out, "{ind}}}").unwrap();
        }
        ControlKind::Invoke { cell, bindings: bs } => {
            writeln!(out, "{ind}{a}invoke {cell}({});", bindings(bs)).unwrap()
        }
        ControlKind::StaticInvoke { cell, bindings: bs } => {
            writeln!(out, "{ind}{a}static invoke {cell}({});", bindings(bs)).unwrap()
        }
    }
}
