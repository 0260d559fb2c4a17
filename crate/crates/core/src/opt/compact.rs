// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use crate::ir::{
    Component, Control, ControlKind, Hole, LatencyCtx, PortRef, Program, StaticGroup, DELAY_PREFIX,
};

/// Data dependencies between the children of one `seq`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    pub latencies: Vec<u64>,
    /// `(u, v)` with `u < v`: `v` may not start before `u` finishes.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub starts: Vec<u64>,
    pub makespan: u64,
}

#[derive(Clone, Default)]
struct Footprint {
    reads: BTreeSet<String>,
    writes: BTreeSet<String>,
}

impl Footprint {
    fn extend(&mut self, other: &Footprint) {
        self.reads.extend(other.reads.iter().cloned());
        self.writes.extend(other.writes.iter().cloned());
    }

    fn hazard(&self, later: &Footprint) -> bool {
        !self.writes.is_disjoint(&later.reads)
            || !self.writes.is_disjoint(&later.writes)
            || !self.reads.is_disjoint(&later.writes)
    }
}

const SELF: &str = "";

fn cell_key(p: &PortRef) -> Option<String> {
    match p {
        PortRef::Cell { cell, .. } => Some(cell.clone()),
        PortRef::This { .. } => Some(SELF.to_string()),
        PortRef::Hole { .. } => None,
    }
}

fn footprint(comp: &Component, node: &Control) -> Footprint {
    let mut f = Footprint::default();
    let mut groups = vec![];
    node.walk(&mut |n| match &n.kind {
        ControlKind::StaticEnable { group } => groups.push(group.clone()),
        ControlKind::StaticIf { cond, .. } => f.reads.extend(cell_key(cond)),
        ControlKind::StaticInvoke { cell, bindings } => {
            f.writes.insert(cell.clone());
            for b in bindings {
                f.reads.extend(b.src.port().and_then(cell_key));
            }
        }
        _ => {}
    });
    let mut seen = BTreeSet::new();
    while let Some(g) = groups.pop() {
        if !seen.insert(g.clone()) {
            continue;
        }
        f.writes.insert(format!("group {g}"));
        let Some(sg) = comp.static_group(&g) else {
            continue;
        };
        for a in &sg.assignments {
            match &a.dst {
                PortRef::Hole {
                    group,
                    hole: Hole::Go,
                } => groups.push(group.clone()),
                dst => f.writes.extend(cell_key(dst)),
            }
            for p in a.reads() {
                f.reads.extend(cell_key(p));
            }
        }
    }
    f
}

/// Dependency graph of `children`, or `None` if any child is not static.
pub fn dependency_graph(ctx: &LatencyCtx, children: &[Control]) -> Option<DependencyGraph> {
    let latencies = children
        .iter()
        .map(|c| ctx.latency_of(c))
        .collect::<Option<Vec<_>>>()?;
    let prints: Vec<Footprint> = children
        .iter()
        .map(|c| footprint(ctx.component, c))
        .collect();
    let mut edges = vec![];
    for v in 0..children.len() {
        for u in 0..v {
            if prints[u].hazard(&prints[v]) {
                edges.push((u, v));
            }
        }
    }
    Some(DependencyGraph { latencies, edges })
}

/// As-soon-as-possible start times; nodes are already in a topological order.
pub fn asap_schedule(g: &DependencyGraph) -> Schedule {
    let mut starts = vec![0u64; g.latencies.len()];
    for &(u, v) in &g.edges {
        starts[v] = starts[v].max(starts[u] + g.latencies[u]);
    }
    let makespan = starts
        .iter()
        .zip(&g.latencies)
        .map(|(s, l)| s + l)
        .max()
        .unwrap_or(0);
    Schedule { starts, makespan }
}

/// Rewrites each `seq` of static children into a `static par` of delayed
/// threads following the ASAP schedule, when that shortens it.
pub fn compact_schedule(program: &Program, comp: &Component) -> Component {
    let mut c = comp.clone();
    let mut control = std::mem::replace(&mut c.control, Control::empty());
    let mut delays: BTreeMap<u64, String> = BTreeMap::new();
    for g in &c.static_groups {
        if g.name.starts_with(DELAY_PREFIX) && g.assignments.is_empty() {
            delays.entry(g.latency).or_insert_with(|| g.name.clone());
        }
    }
    let mut new_delays = vec![];
    rewrite(
        program,
        &mut c,
        &mut control,
        &Footprint::default(),
        &mut delays,
        &mut new_delays,
    );
    c.static_groups.extend(new_delays);
    c.control = control;
    c
}

/// `foreign` is everything touched by threads running in lockstep with `node`
/// under an enclosing `static par`; a seq touching any of it keeps its timing.
fn rewrite(
    program: &Program,
    comp: &mut Component,
    node: &mut Control,
    foreign: &Footprint,
    delays: &mut BTreeMap<u64, String>,
    new_delays: &mut Vec<StaticGroup>,
) {
    if let ControlKind::StaticPar(threads) = &mut node.kind {
        let prints: Vec<Footprint> = threads.iter().map(|t| footprint(comp, t)).collect();
        for (i, t) in threads.iter_mut().enumerate() {
            let mut f = foreign.clone();
            for (j, p) in prints.iter().enumerate() {
                if j != i {
                    f.extend(p);
                }
            }
            rewrite(program, comp, t, &f, delays, new_delays);
        }
    } else {
        for child in node.children_mut() {
            rewrite(program, comp, child, foreign, delays, new_delays);
        }
    }
    let mine = footprint(comp, node);
    let children = match &mut node.kind {
        ControlKind::Seq(cs) | ControlKind::StaticSeq(cs) => cs,
        _ => return,
    };
    children.retain(|c| !c.is_empty());
    if children.len() < 2 || !children.iter().all(Control::is_static) {
        return;
    }
    if foreign.hazard(&mine) || mine.hazard(foreign) {
        return;
    }
    let ctx = LatencyCtx::new(program, comp);
    let Some(graph) = dependency_graph(&ctx, children) else {
        return;
    };
    let schedule = asap_schedule(&graph);
    if schedule.makespan >= graph.latencies.iter().sum() {
        return;
    }
    let mut threads = vec![];
    for (child, &d) in std::mem::take(children).into_iter().zip(&schedule.starts) {
        if d == 0 {
            threads.push(child);
            continue;
        }
        let name = delays
            .entry(d)
            .or_insert_with(|| {
                let taken = |n: &str| comp.name_taken(n) || new_delays.iter().any(|g| g.name == n);
                let name = (0..)
                    .map(|k| format!("{DELAY_PREFIX}{k}"))
                    .find(|n| !taken(n))
                    .unwrap();
                new_delays.push(StaticGroup::new(name.clone(), d));
                name
            })
            .clone();
        threads.push(Control::static_seq(vec![
            Control::static_enable(name),
            child,
        ]));
    }
    node.kind = ControlKind::StaticPar(threads);
}
