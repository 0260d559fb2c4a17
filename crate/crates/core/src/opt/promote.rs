// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use crate::ir::{Component, Control, ControlKind, LatencyCtx, Program, StaticGroup, STATIC_HINT};

use super::dynamic_cycles;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromotionConfig {
    /// Smallest island, in group enables plus condition ports, worth promoting.
    pub threshold: u64,
    /// Islands running longer than this are split into their children.
    pub max_cycles: u64,
}

impl Default for PromotionConfig {
    fn default() -> Self {
        PromotionConfig {
            threshold: 1,
            max_cycles: 4096,
        }
    }
}

/// Group enables plus condition ports in a subtree.
pub fn island_size(node: &Control) -> u64 {
    let mut n = 0;
    node.walk(&mut |c| match c.kind {
        ControlKind::Enable { .. }
        | ControlKind::StaticEnable { .. }
        | ControlKind::If { .. }
        | ControlKind::While { .. }
        | ControlKind::StaticIf { .. } => n += 1,
        _ => {}
    });
    n
}

/// Turns the largest profitable `@static`-annotated subtrees into static control.
///
/// A subtree is promoted when its latency is within `max_cycles`, its size
/// reaches `threshold`, and running it as a static island (latency plus one
/// handshake cycle) is no slower than its fastest dynamic execution.
pub fn promote(program: &Program, comp: &Component, config: &PromotionConfig) -> Component {
    let mut c = comp.clone();
    if c.is_static() {
        return c;
    }
    let mut control = std::mem::replace(&mut c.control, Control::empty());
    let mut promoted = BTreeSet::new();
    {
        let ctx = LatencyCtx::new(program, &c);
        visit(&c, &ctx, config, &mut control, &mut promoted);
    }
    c.control = control;

    let still_dynamic: BTreeSet<String> = {
        let mut s = BTreeSet::new();
        c.control.walk(&mut |n| {
            if let ControlKind::Enable { group } = &n.kind {
                s.insert(group.clone());
            }
        });
        s
    };
    for name in promoted {
        let g = c.group(&name).expect("promoted group exists").clone();
        let latency = g
            .attributes
            .static_hint()
            .expect("promoted groups are annotated");
        let target = if still_dynamic.contains(&name) {
            let fresh = c.fresh_name(&format!("{name}_static"));
            c.control.walk_mut(&mut |n| {
                if let ControlKind::StaticEnable { group } = &mut n.kind {
                    if *group == name {
                        *group = fresh.clone();
                    }
                }
            });
            fresh
        } else {
            c.groups.retain(|x| x.name != name);
            name.clone()
        };
        let mut sg = StaticGroup::new(target, latency);
        sg.assignments = g
            .assignments
            .iter()
            .filter(|a| !g.is_done_assignment(a))
            .cloned()
            .collect();
        sg.attributes = g.attributes.clone();
        sg.attributes.remove(STATIC_HINT);
        sg.span = g.span.clone();
        c.static_groups.push(sg);
    }
    c
}

fn hint(comp: &Component, node: &Control) -> Option<u64> {
    match &node.kind {
        ControlKind::Enable { group } => comp.group(group)?.attributes.static_hint(),
        _ => node.attributes.static_hint(),
    }
}

fn visit(
    comp: &Component,
    ctx: &LatencyCtx,
    config: &PromotionConfig,
    node: &mut Control,
    promoted: &mut BTreeSet<String>,
) {
    if node.is_static() {
        return;
    }
    if let Some(n) = hint(comp, node) {
        let fits = n >= 1 && n <= config.max_cycles && island_size(node) >= config.threshold;
        if fits && dynamic_cycles(comp, ctx, node).is_some_and(|d| n < d) {
            *node = convert(std::mem::replace(node, Control::empty()), promoted);
            return;
        }
    }
    if let ControlKind::Seq(children) = &mut node.kind {
        promote_runs(comp, ctx, config, children, promoted);
    }
    for c in node.children_mut() {
        visit(comp, ctx, config, c, promoted);
    }
}

fn latency(comp: &Component, ctx: &LatencyCtx, node: &Control) -> Option<u64> {
    if node.is_static() {
        ctx.latency_of(node)
    } else {
        hint(comp, node)
    }
}

/// Folds maximal runs of timed children of a dynamic `seq` into one static seq.
fn promote_runs(
    comp: &Component,
    ctx: &LatencyCtx,
    config: &PromotionConfig,
    children: &mut Vec<Control>,
    promoted: &mut BTreeSet<String>,
) {
    let mut out = Vec::with_capacity(children.len());
    let mut run: Vec<Control> = vec![];
    let flush =
        |run: &mut Vec<Control>, out: &mut Vec<Control>, promoted: &mut BTreeSet<String>| {
            let n: u64 = run.iter().map(|c| latency(comp, ctx, c).unwrap_or(0)).sum();
            let seq = Control::seq(std::mem::take(run));
            let ControlKind::Seq(kids) = &seq.kind else {
                unreachable!()
            };
            let fits = kids.len() >= 2
                && n >= 1
                && n <= config.max_cycles
                && island_size(&seq) >= config.threshold;
            if fits && dynamic_cycles(comp, ctx, &seq).is_some_and(|d| n < d) {
                out.push(convert(seq, promoted));
            } else if let ControlKind::Seq(kids) = seq.kind {
                out.extend(kids);
            }
        };
    for c in std::mem::take(children) {
        if latency(comp, ctx, &c).is_some() {
            run.push(c);
        } else {
            flush(&mut run, &mut out, promoted);
            out.push(c);
        }
    }
    flush(&mut run, &mut out, promoted);
    *children = out;
}

fn convert(node: Control, promoted: &mut BTreeSet<String>) -> Control {
    if node.is_static() {
        return node;
    }
    let mut attributes = node.attributes;
    attributes.remove(STATIC_HINT);
    let mut conv = |c: Control| convert(c, promoted);
    let kind = match node.kind {
        ControlKind::Enable { group } => {
            promoted.insert(group.clone());
            ControlKind::StaticEnable { group }
        }
        ControlKind::Seq(cs) => ControlKind::StaticSeq(cs.into_iter().map(&mut conv).collect()),
        ControlKind::Par(cs) => ControlKind::StaticPar(cs.into_iter().map(&mut conv).collect()),
        ControlKind::If { cond, tru, fls } => ControlKind::StaticIf {
            cond,
            tru: Box::new(conv(*tru)),
            fls: Box::new(conv(*fls)),
        },
        ControlKind::Repeat { count, body } => ControlKind::StaticRepeat {
            count,
            body: Box::new(conv(*body)),
        },
        other => other,
    };
    Control {
        kind,
        attributes,
        span: node.span,
    }
}
