// SPDX-License-Identifier: Apache-2.0

use super::{Interval, StaticGroup};

/// Gives every assignment of a static group an explicit timing interval.
/// Assignments without one are active for the whole group: `[0, latency)`.
pub fn normalize_guards(mut group: StaticGroup) -> StaticGroup {
    let whole = Interval::new(0, group.latency);
    for a in &mut group.assignments {
        a.guard.timing.get_or_insert(whole);
    }
    group
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Assignment, Guard, GuardExpr, PortRef};

    #[test]
    fn fills_missing_intervals() {
        let mut g = StaticGroup::new("do_mult", 3);
        g.assignments.push(Assignment::new(
            PortRef::cell("mult", "right"),
            PortRef::this("c"),
        ));
        g.assignments.push(Assignment::guarded(
            PortRef::cell("ans", "write_en"),
            crate::ir::Atom::Const(crate::ir::Const::bare(1)),
            Guard::timed(Interval::cycle(2), GuardExpr::True),
        ));
        let n = normalize_guards(g);
        assert_eq!(n.assignments[0].guard.timing, Some(Interval::new(0, 3)));
        assert_eq!(n.assignments[1].guard.timing, Some(Interval::new(2, 3)));
        assert_eq!(normalize_guards(n.clone()), n);
    }
}
