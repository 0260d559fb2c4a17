// SPDX-License-Identifier: Apache-2.0

use crate::ir::{
    Assignment, Atom, Cell, CmpOp, Component, Const, GuardExpr, Interval, PortRef, FSM_ATTR,
    GENERATED,
};

/// Bits of a binary counter over `[0, latency)`.
pub fn fsm_width(latency: u64) -> u32 {
    (64 - latency.saturating_sub(1).leading_zeros()).max(1)
}

/// The counter register driven by `group`, if one was instantiated.
pub fn fsm_of(comp: &Component, group: &str) -> Option<String> {
    let g = comp.static_group(group)?;
    g.assignments.iter().find_map(|a| {
        let cell = comp.cell(a.dst.cell_name()?)?;
        cell.attributes.has(FSM_ATTR).then(|| cell.name.clone())
    })
}

fn count_is(fsm: &str, op: CmpOp, width: u32, k: u64) -> GuardExpr {
    GuardExpr::cmp(op, PortRef::cell(fsm, "out"), Const::sized(width, k))
}

/// `j <= f < k` over counter `fsm`, folded where one side is trivial.
fn interval_guard(fsm: &str, width: u32, iv: Interval, latency: u64) -> GuardExpr {
    if iv.start == 0 && iv.end >= latency {
        GuardExpr::True
    } else if iv.len() == 1 {
        count_is(fsm, CmpOp::Eq, width, iv.start)
    } else if iv.start == 0 {
        count_is(fsm, CmpOp::Lt, width, iv.end)
    } else if iv.end >= latency {
        count_is(fsm, CmpOp::Geq, width, iv.start)
    } else {
        count_is(fsm, CmpOp::Geq, width, iv.start).and(count_is(fsm, CmpOp::Lt, width, iv.end))
    }
}

fn generated(cell: Cell, fsm: bool) -> Cell {
    let mut cell = cell;
    cell.attributes.insert(GENERATED, None);
    if fsm {
        cell.attributes.insert(FSM_ATTR, None);
    }
    cell
}

/// Gives every static group of latency above one a wrapping counter and
/// rewrites its timing intervals into comparisons on that counter.
pub fn instantiate_fsms(comp: &Component) -> Component {
    let mut comp = comp.clone();
    for gi in 0..comp.static_groups.len() {
        let latency = comp.static_groups[gi].latency;
        let name = comp.static_groups[gi].name.clone();
        if latency <= 1 {
            for a in &mut comp.static_groups[gi].assignments {
                a.guard.timing = None;
            }
            continue;
        }
        let width = fsm_width(latency);
        let fsm = match fsm_of(&comp, &name) {
            Some(f) => f,
            None => {
                let fsm = comp.fresh_name("fsm");
                comp.cells.push(generated(
                    Cell::new(fsm.clone(), "std_reg", vec![width as u64]),
                    true,
                ));
                let incr = comp.fresh_name("incr");
                comp.cells.push(generated(
                    Cell::new(incr.clone(), "std_add", vec![width as u64]),
                    false,
                ));
                let out = PortRef::cell(&fsm, "out");
                let last = latency - 1;
                let counter = vec![
                    Assignment::new(PortRef::cell(&incr, "left"), out.clone()),
                    Assignment::new(PortRef::cell(&incr, "right"), Const::sized(width, 1)),
                    Assignment::guarded(
                        PortRef::cell(&fsm, "in"),
                        PortRef::cell(&incr, "out"),
                        crate::ir::Guard::expr(count_is(&fsm, CmpOp::Neq, width, last)),
                    ),
                    Assignment::guarded(
                        PortRef::cell(&fsm, "in"),
                        Atom::Const(Const::sized(width, 0)),
                        crate::ir::Guard::expr(count_is(&fsm, CmpOp::Eq, width, last)),
                    ),
                    Assignment::new(PortRef::cell(&fsm, "write_en"), Const::sized(1, 1)),
                ];
                comp.static_groups[gi].assignments.extend(counter);
                fsm
            }
        };
        for a in &mut comp.static_groups[gi].assignments {
            if let Some(iv) = a.guard.timing.take() {
                let t = interval_guard(&fsm, width, iv, latency);
                a.guard.expr = t.and(std::mem::replace(&mut a.guard.expr, GuardExpr::True));
            }
        }
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(fsm_width(2), 1);
        assert_eq!(fsm_width(4), 2);
        assert_eq!(fsm_width(5), 3);
        assert_eq!(fsm_width(22), 5);
    }

    #[test]
    fn interval_folding() {
        assert!(interval_guard("f", 2, Interval::new(0, 4), 4).is_true());
        assert_eq!(
            interval_guard("f", 2, Interval::new(0, 3), 4),
            count_is("f", CmpOp::Lt, 2, 3)
        );
        assert_eq!(
            interval_guard("f", 2, Interval::cycle(3), 4),
            count_is("f", CmpOp::Eq, 2, 3)
        );
        assert_eq!(
            interval_guard("f", 2, Interval::new(1, 4), 4),
            count_is("f", CmpOp::Geq, 2, 1)
        );
    }
}
