// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::ir::{
    Assignment, Cell, CmpOp, Component, Const, Control, ControlKind, Group, Guard, GuardExpr, Hole,
    PortRef, GENERATED, WRAPPER_ATTR,
};

use super::{fsm_of, fsm_width, instantiate_fsms, LowerOptions};

fn one() -> Const {
    Const::sized(1, 1)
}

/// Gives every static group enabled from dynamic control a dynamic wrapper.
///
/// A wrapper drives the group's go and finishes once its counter has come
/// back to zero, which a one-bit `sig` register detects. With the fast
/// path enabled, `while c { g }` over a single static group becomes one
/// wrapper that re-checks `c` whenever the counter is at zero.
pub fn insert_wrappers(comp: &Component, options: LowerOptions) -> Component {
    if comp.is_static() {
        return comp.clone();
    }
    let mut w = Wrapper {
        comp: instantiate_fsms(comp),
        cache: HashMap::new(),
        options,
    };
    let control = std::mem::replace(&mut w.comp.control, Control::empty());
    w.comp.control = w.rewrite(control);
    w.comp
}

struct Wrapper {
    comp: Component,
    cache: HashMap<String, String>,
    options: LowerOptions,
}

impl Wrapper {
    fn rewrite(&mut self, mut node: Control) -> Control {
        match &mut node.kind {
            ControlKind::StaticEnable { group } => {
                let w = self.wrap(&group.clone());
                return self.keep_attrs(node, w);
            }
            ControlKind::While { cond, body } if self.options.while_fastpath => {
                if let ControlKind::StaticEnable { group } = &body.kind {
                    let w = self.wrap_while(&cond.clone(), &group.clone());
                    return self.keep_attrs(node, w);
                }
                **body = self.rewrite(std::mem::replace(body, Control::empty()));
            }
            ControlKind::Seq(cs) | ControlKind::Par(cs) => {
                for c in cs.iter_mut() {
                    *c = self.rewrite(std::mem::replace(c, Control::empty()));
                }
            }
            ControlKind::If { tru, fls, .. } => {
                **tru = self.rewrite(std::mem::replace(tru, Control::empty()));
                **fls = self.rewrite(std::mem::replace(fls, Control::empty()));
            }
            ControlKind::While { body, .. } | ControlKind::Repeat { body, .. } => {
                **body = self.rewrite(std::mem::replace(body, Control::empty()));
            }
            _ => {}
        }
        node
    }

    fn keep_attrs(&self, old: Control, group: String) -> Control {
        let mut out = Control::enable(group);
        out.attributes = old.attributes;
        out
    }

    fn new_group(&mut self) -> Group {
        let mut g = Group::new(self.comp.fresh_name("wrapper"));
        g.attributes.insert(GENERATED, None);
        g.attributes.insert(WRAPPER_ATTR, None);
        g
    }

    /// `fsm == 0` for the counter of `group`, or true when it has none.
    fn at_zero(&self, group: &str) -> (GuardExpr, Option<(String, u32)>) {
        let latency = self
            .comp
            .static_group(group)
            .map(|g| g.latency)
            .unwrap_or(1);
        match fsm_of(&self.comp, group) {
            Some(f) => {
                let width = fsm_width(latency);
                let e = GuardExpr::cmp(CmpOp::Eq, PortRef::cell(&f, "out"), Const::sized(width, 0));
                (e, Some((f, width)))
            }
            None => (GuardExpr::True, None),
        }
    }

    fn wrap(&mut self, group: &str) -> String {
        if let Some(w) = self.cache.get(group) {
            return w.clone();
        }
        let (zero, _) = self.at_zero(group);
        let sig = self.comp.fresh_name("sig");
        let mut cell = Cell::new(sig.clone(), "std_reg", vec![1]);
        cell.attributes.insert(GENERATED, None);
        self.comp.cells.push(cell);
        let sig_out = GuardExpr::port(PortRef::cell(&sig, "out"));

        let mut w = self.new_group();
        let done = PortRef::hole(&w.name, Hole::Done);
        w.assignments = vec![
            Assignment::new(PortRef::hole(group, Hole::Go), one()),
            Assignment::new(PortRef::cell(&sig, "in"), one()),
            Assignment::guarded(
                PortRef::cell(&sig, "write_en"),
                one(),
                Guard::expr(sig_out.clone().not()),
            ),
            Assignment::guarded(done.clone(), one(), Guard::expr(zero.and(sig_out))),
        ];
        self.comp.continuous.push(Assignment::guarded(
            PortRef::cell(&sig, "in"),
            Const::sized(1, 0),
            Guard::expr(GuardExpr::port(done.clone())),
        ));
        self.comp.continuous.push(Assignment::guarded(
            PortRef::cell(&sig, "write_en"),
            one(),
            Guard::expr(GuardExpr::port(done)),
        ));
        let name = w.name.clone();
        self.comp.groups.push(w);
        self.cache.insert(group.to_string(), name.clone());
        name
    }

    fn wrap_while(&mut self, cond: &PortRef, group: &str) -> String {
        let (zero, fsm) = self.at_zero(group);
        let c = GuardExpr::port(cond.clone());
        let mut w = self.new_group();
        let launch = match fsm {
            Some((f, width)) => {
                GuardExpr::cmp(CmpOp::Neq, PortRef::cell(&f, "out"), Const::sized(width, 0))
                    .or(c.clone())
            }
            None => c.clone(),
        };
        w.assignments = vec![
            Assignment::guarded(PortRef::hole(group, Hole::Go), one(), Guard::expr(launch)),
            Assignment::guarded(
                PortRef::hole(&w.name, Hole::Done),
                one(),
                Guard::expr(zero.and(c.not())),
            ),
        ];
        let name = w.name.clone();
        self.comp.groups.push(w);
        name
    }
}
