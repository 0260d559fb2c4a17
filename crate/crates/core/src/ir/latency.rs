// SPDX-License-Identifier: Apache-2.0

use super::{Component, Control, ControlKind, LatencyKind, Program};

/// Lookup context for the latency algebra of static control.
#[derive(Clone, Copy)]
pub struct LatencyCtx<'a> {
    pub program: &'a Program,
    pub component: &'a Component,
}

impl<'a> LatencyCtx<'a> {
    pub fn new(program: &'a Program, component: &'a Component) -> Self {
        LatencyCtx { program, component }
    }

    /// Guaranteed latency of a cell when used through the static calling
    /// convention, i.e. a static component or a fixed-latency primitive.
    pub fn cell_latency(&self, cell: &str) -> Option<u64> {
        let cell = self.component.cell(cell)?;
        if let Some(comp) = self.program.component(&cell.prototype) {
            return comp.latency;
        }
        match self.program.primitive(&cell.prototype)?.latency {
            LatencyKind::Fixed(n) => Some(n),
            _ => None,
        }
    }

    /// Latency of a static node; `None` for dynamic nodes or unresolved names.
    ///
    /// `Empty` counts as zero so that it can appear inside static composites.
    pub fn latency_of(&self, node: &Control) -> Option<u64> {
        match &node.kind {
            ControlKind::Empty => Some(0),
            ControlKind::StaticEnable { group } => {
                self.component.static_group(group).map(|g| g.latency)
            }
            ControlKind::StaticSeq(cs) => cs.iter().map(|c| self.latency_of(c)).sum(),
            ControlKind::StaticPar(cs) => cs
                .iter()
                .map(|c| self.latency_of(c))
                .try_fold(0, |acc, l| l.map(|l| acc.max(l))),
            ControlKind::StaticIf { tru, fls, .. } => {
                Some(self.latency_of(tru)?.max(self.latency_of(fls)?))
            }
            ControlKind::StaticRepeat { count, body } => Some(count * self.latency_of(body)?),
            ControlKind::StaticInvoke { cell, .. } => self.cell_latency(cell),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Cell, StaticGroup};

    fn ctx_fixture() -> Program {
        let mut comp = Component::new("main");
        for (name, lat) in [("do_add", 1), ("do_mult", 3), ("a", 1), ("b", 2)] {
            comp.static_groups.push(StaticGroup::new(name, lat));
        }
        comp.cells.push(Cell::new("m", "std_mult", vec![32]));
        Program {
            imports: vec![],
            externs: vec![],
            components: vec![comp],
            entry: "main".into(),
        }
    }

    #[test]
    fn algebra() {
        let prog = ctx_fixture();
        let ctx = LatencyCtx::new(&prog, &prog.components[0]);
        let seq = Control::static_seq(vec![
            Control::static_enable("do_add"),
            Control::static_enable("do_mult"),
        ]);
        assert_eq!(ctx.latency_of(&seq), Some(4));
        let par = Control::static_par(vec![
            Control::static_enable("a"),
            Control::static_enable("b"),
        ]);
        assert_eq!(ctx.latency_of(&par), Some(2));
        let rep0 = Control::static_repeat(5, Control::static_seq(vec![]));
        assert_eq!(ctx.latency_of(&rep0), Some(0));
        let rep = Control::static_repeat(3, Control::static_enable("b"));
        assert_eq!(ctx.latency_of(&rep), Some(6));
        let iff = Control::static_if(
            crate::ir::PortRef::cell("x", "out"),
            Control::static_enable("do_mult"),
            Control::static_enable("a"),
        );
        assert_eq!(ctx.latency_of(&iff), Some(3));
        let inv: Control = ControlKind::StaticInvoke {
            cell: "m".into(),
            bindings: vec![],
        }
        .into();
        assert_eq!(ctx.latency_of(&inv), Some(3));
        assert_eq!(ctx.latency_of(&Control::enable("a")), None);
        assert_eq!(ctx.latency_of(&Control::seq(vec![])), None);
    }
}
