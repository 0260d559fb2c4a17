// SPDX-License-Identifier: Apache-2.0

//! Abstract syntax of the IL: programs, components, cells, guarded
//! assignments, groups and the control tree.

mod latency;
mod normalize;
pub mod primitives;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use latency::LatencyCtx;
pub use normalize::normalize_guards;
pub use primitives::{LatencyKind, PortDecl, PortRole, PrimitiveDecl, WidthExpr};
pub use validate::{validate, Diagnostic, Severity};

/// Location of a syntax node in its source file.
///
/// Spans never take part in structural equality: two programs that differ
/// only in where they were parsed from compare equal.
#[derive(Clone, Debug, Default)]
pub struct SourceSpan {
    pub file: Option<Arc<str>>,
    pub line: u32,
    pub col_start: u32,
    pub col_end: u32,
}

impl SourceSpan {
    pub fn new(file: Option<Arc<str>>, line: u32, col_start: u32, col_end: u32) -> Self {
        debug_assert!(col_start <= col_end || line == 0);
        SourceSpan {
            file,
            line,
            col_start,
            col_end,
        }
    }

    pub fn is_known(&self) -> bool {
        self.line > 0
    }
}

impl PartialEq for SourceSpan {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for SourceSpan {}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = self.file.as_deref().unwrap_or("<input>");
        write!(f, "{}:{}:{}", file, self.line, self.col_start)
    }
}

/// `@name` / `@name(n)` annotations. Ordered so printing is deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Attributes(BTreeMap<String, Option<u64>>);

impl Attributes {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn get(&self, key: &str) -> Option<Option<u64>> {
        self.0.get(key).copied()
    }
    pub fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }
    pub fn value(&self, key: &str) -> Option<u64> {
        self.0.get(key).copied().flatten()
    }
    pub fn insert(&mut self, key: impl Into<String>, value: Option<u64>) {
        self.0.insert(key.into(), value);
    }
    pub fn remove(&mut self, key: &str) -> Option<Option<u64>> {
        self.0.remove(key)
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Option<u64>)> {
        self.0.iter()
    }
    /// The erasable latency hint, `@static(n)`.
    pub fn static_hint(&self) -> Option<u64> {
        self.value(STATIC_HINT)
    }
    pub fn set_static_hint(&mut self, n: u64) {
        self.insert(STATIC_HINT, Some(n));
    }
}

pub const STATIC_HINT: &str = "static";
/// Marks cells created by lowering (FSM counters, wrapper signals, stashes).
pub const GENERATED: &str = "generated";
pub const FSM_ATTR: &str = "fsm";
pub const WRAPPER_ATTR: &str = "wrapper";
/// Reserved prefix of the empty groups emitted by schedule compaction.
pub const DELAY_PREFIX: &str = "__delay_";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub imports: Vec<String>,
    pub externs: Vec<PrimitiveDecl>,
    pub components: Vec<Component>,
    pub entry: String,
}

impl Program {
    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }
    pub fn component_mut(&mut self, name: &str) -> Option<&mut Component> {
        self.components.iter_mut().find(|c| c.name == name)
    }
    pub fn entry_component(&self) -> Option<&Component> {
        self.component(&self.entry)
    }
    /// Looks a prototype up among user externs first, then the builtin library.
    pub fn primitive(&self, name: &str) -> Option<&PrimitiveDecl> {
        self.externs
            .iter()
            .find(|p| p.name == name)
            .or_else(|| primitives::builtin(name))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortDef {
    pub name: String,
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub inputs: Vec<PortDef>,
    pub outputs: Vec<PortDef>,
    pub cells: Vec<Cell>,
    pub continuous: Vec<Assignment>,
    pub groups: Vec<Group>,
    pub static_groups: Vec<StaticGroup>,
    pub control: Control,
    pub attributes: Attributes,
    /// Guaranteed latency of a static component (`static<n> component`).
    pub latency: Option<u64>,
    pub span: SourceSpan,
}

impl Component {
    pub fn new(name: impl Into<String>) -> Self {
        Component {
            name: name.into(),
            inputs: vec![],
            outputs: vec![],
            cells: vec![],
            continuous: vec![],
            groups: vec![],
            static_groups: vec![],
            control: Control::empty(),
            attributes: Attributes::new(),
            latency: None,
            span: SourceSpan::default(),
        }
    }
    pub fn cell(&self, name: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.name == name)
    }
    pub fn group(&self, name: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.name == name)
    }
    pub fn group_mut(&mut self, name: &str) -> Option<&mut Group> {
        self.groups.iter_mut().find(|g| g.name == name)
    }
    pub fn static_group(&self, name: &str) -> Option<&StaticGroup> {
        self.static_groups.iter().find(|g| g.name == name)
    }
    pub fn static_group_mut(&mut self, name: &str) -> Option<&mut StaticGroup> {
        self.static_groups.iter_mut().find(|g| g.name == name)
    }
    pub fn is_static(&self) -> bool {
        self.latency.is_some()
    }
    pub fn io_port(&self, name: &str) -> Option<(&PortDef, Direction)> {
        self.inputs
            .iter()
            .find(|p| p.name == name)
            .map(|p| (p, Direction::Input))
            .or_else(|| {
                self.outputs
                    .iter()
                    .find(|p| p.name == name)
                    .map(|p| (p, Direction::Output))
            })
    }
    /// Returns a name not used by any cell or group, of the form `{base}_{k}`.
    pub fn fresh_name(&self, base: &str) -> String {
        (0..)
            .map(|k| format!("{base}_{k}"))
            .find(|n| !self.name_taken(n))
            .unwrap()
    }
    pub fn name_taken(&self, name: &str) -> bool {
        self.cell(name).is_some() || self.group(name).is_some() || self.static_group(name).is_some()
    }
    /// Every assignment in the component: continuous, dynamic and static groups.
    pub fn all_assignments(&self) -> impl Iterator<Item = &Assignment> {
        self.continuous
            .iter()
            .chain(self.groups.iter().flat_map(|g| g.assignments.iter()))
            .chain(self.static_groups.iter().flat_map(|g| g.assignments.iter()))
    }
    pub fn all_assignments_mut(&mut self) -> impl Iterator<Item = &mut Assignment> {
        self.continuous
            .iter_mut()
            .chain(
                self.groups
                    .iter_mut()
                    .flat_map(|g| g.assignments.iter_mut()),
            )
            .chain(
                self.static_groups
                    .iter_mut()
                    .flat_map(|g| g.assignments.iter_mut()),
            )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub name: String,
    pub prototype: String,
    pub args: Vec<u64>,
    pub attributes: Attributes,
    pub span: SourceSpan,
}

impl Cell {
    pub fn new(name: impl Into<String>, prototype: impl Into<String>, args: Vec<u64>) -> Self {
        Cell {
            name: name.into(),
            prototype: prototype.into(),
            args,
            attributes: Attributes::new(),
            span: SourceSpan::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hole {
    Go,
    Done,
}

impl Hole {
    pub fn as_str(self) -> &'static str {
        match self {
            Hole::Go => "go",
            Hole::Done => "done",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PortRef {
    /// `cell.port`
    Cell { cell: String, port: String },
    /// A port of the enclosing component's signature.
    This { port: String },
    /// `group[go]` / `group[done]`
    Hole { group: String, hole: Hole },
}

impl PortRef {
    pub fn cell(cell: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef::Cell {
            cell: cell.into(),
            port: port.into(),
        }
    }
    pub fn this(port: impl Into<String>) -> Self {
        PortRef::This { port: port.into() }
    }
    pub fn hole(group: impl Into<String>, hole: Hole) -> Self {
        PortRef::Hole {
            group: group.into(),
            hole,
        }
    }
    pub fn cell_name(&self) -> Option<&str> {
        match self {
            PortRef::Cell { cell, .. } => Some(cell),
            _ => None,
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortRef::Cell { cell, port } => write!(f, "{cell}.{port}"),
            PortRef::This { port } => write!(f, "{port}"),
            PortRef::Hole { group, hole } => write!(f, "{group}[{}]", hole.as_str()),
        }
    }
}

/// A literal. `width` is `None` for bare numbers, whose width is taken from context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Const {
    pub value: u64,
    pub width: Option<u32>,
}

impl Const {
    pub fn bare(value: u64) -> Self {
        Const { value, width: None }
    }
    pub fn sized(width: u32, value: u64) -> Self {
        Const {
            value,
            width: Some(width),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    Port(PortRef),
    Const(Const),
}

impl Atom {
    pub fn port(&self) -> Option<&PortRef> {
        match self {
            Atom::Port(p) => Some(p),
            Atom::Const(_) => None,
        }
    }
}

impl From<PortRef> for Atom {
    fn from(p: PortRef) -> Self {
        Atom::Port(p)
    }
}

impl From<Const> for Atom {
    fn from(c: Const) -> Self {
        Atom::Const(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Neq,
    Lt,
    Gt,
    Leq,
    Geq,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Neq => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Leq => "<=",
            CmpOp::Geq => ">=",
        }
    }
    pub fn eval(self, a: u64, b: u64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Neq => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Gt => a > b,
            CmpOp::Leq => a <= b,
            CmpOp::Geq => a >= b,
        }
    }
}

/// Boolean part of a guard.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GuardExpr {
    True,
    Port(PortRef),
    Not(Box<GuardExpr>),
    And(Box<GuardExpr>, Box<GuardExpr>),
    Or(Box<GuardExpr>, Box<GuardExpr>),
    Cmp(CmpOp, Atom, Atom),
}

impl GuardExpr {
    pub fn port(p: PortRef) -> Self {
        GuardExpr::Port(p)
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        match self {
            GuardExpr::Not(inner) => *inner,
            other => GuardExpr::Not(Box::new(other)),
        }
    }
    /// Conjunction with `true` folded away.
    pub fn and(self, other: GuardExpr) -> Self {
        match (self, other) {
            (GuardExpr::True, g) | (g, GuardExpr::True) => g,
            (a, b) => GuardExpr::And(Box::new(a), Box::new(b)),
        }
    }
    pub fn or(self, other: GuardExpr) -> Self {
        match (self, other) {
            (GuardExpr::True, _) | (_, GuardExpr::True) => GuardExpr::True,
            (a, b) => GuardExpr::Or(Box::new(a), Box::new(b)),
        }
    }
    pub fn cmp(op: CmpOp, a: impl Into<Atom>, b: impl Into<Atom>) -> Self {
        GuardExpr::Cmp(op, a.into(), b.into())
    }
    pub fn is_true(&self) -> bool {
        matches!(self, GuardExpr::True)
    }
    /// Every port read by the expression.
    pub fn ports(&self) -> Vec<&PortRef> {
        let mut out = vec![];
        self.collect_ports(&mut out);
        out
    }
    fn collect_ports<'a>(&'a self, out: &mut Vec<&'a PortRef>) {
        match self {
            GuardExpr::True => {}
            GuardExpr::Port(p) => out.push(p),
            GuardExpr::Not(g) => g.collect_ports(out),
            GuardExpr::And(a, b) | GuardExpr::Or(a, b) => {
                a.collect_ports(out);
                b.collect_ports(out);
            }
            GuardExpr::Cmp(_, a, b) => {
                out.extend(a.port());
                out.extend(b.port());
            }
        }
    }
    pub fn map_ports(&mut self, f: &mut impl FnMut(&mut PortRef)) {
        match self {
            GuardExpr::True => {}
            GuardExpr::Port(p) => f(p),
            GuardExpr::Not(g) => g.map_ports(f),
            GuardExpr::And(a, b) | GuardExpr::Or(a, b) => {
                a.map_ports(f);
                b.map_ports(f);
            }
            GuardExpr::Cmp(_, a, b) => {
                if let Atom::Port(p) = a {
                    f(p)
                }
                if let Atom::Port(p) = b {
                    f(p)
                }
            }
        }
    }
}

impl From<PortRef> for GuardExpr {
    fn from(p: PortRef) -> Self {
        GuardExpr::Port(p)
    }
}

/// Half-open cycle interval `[start, end)` relative to the enclosing static group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
}

impl Interval {
    pub fn new(start: u64, end: u64) -> Self {
        Interval { start, end }
    }
    pub fn cycle(k: u64) -> Self {
        Interval {
            start: k,
            end: k + 1,
        }
    }
    pub fn contains(&self, t: u64) -> bool {
        self.start <= t && t < self.end
    }
    pub fn shift(self, by: u64) -> Self {
        Interval {
            start: self.start + by,
            end: self.end + by,
        }
    }
    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start < end).then_some(Interval { start, end })
    }
    pub fn len(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Guard {
    pub timing: Option<Interval>,
    pub expr: GuardExpr,
}

impl Guard {
    pub fn always() -> Self {
        Guard {
            timing: None,
            expr: GuardExpr::True,
        }
    }
    pub fn expr(expr: GuardExpr) -> Self {
        Guard { timing: None, expr }
    }
    pub fn timed(interval: Interval, expr: GuardExpr) -> Self {
        Guard {
            timing: Some(interval),
            expr,
        }
    }
    pub fn is_always(&self) -> bool {
        self.timing.is_none() && self.expr.is_true()
    }
}

impl Default for Guard {
    fn default() -> Self {
        Guard::always()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub dst: PortRef,
    pub src: Atom,
    pub guard: Guard,
    pub span: SourceSpan,
}

impl Assignment {
    pub fn new(dst: PortRef, src: impl Into<Atom>) -> Self {
        Assignment {
            dst,
            src: src.into(),
            guard: Guard::always(),
            span: SourceSpan::default(),
        }
    }
    pub fn guarded(dst: PortRef, src: impl Into<Atom>, guard: Guard) -> Self {
        Assignment {
            dst,
            src: src.into(),
            guard,
            span: SourceSpan::default(),
        }
    }
    pub fn konst(dst: PortRef, value: u64) -> Self {
        Assignment::new(dst, Atom::Const(Const::bare(value)))
    }
    /// Ports read by the assignment: the source and every guard port.
    pub fn reads(&self) -> Vec<&PortRef> {
        let mut out = self.guard.expr.ports();
        out.extend(self.src.port());
        out
    }
    pub fn map_ports(&mut self, f: &mut impl FnMut(&mut PortRef)) {
        f(&mut self.dst);
        if let Atom::Port(p) = &mut self.src {
            f(p);
        }
        self.guard.expr.map_ports(f);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    pub assignments: Vec<Assignment>,
    pub attributes: Attributes,
    pub span: SourceSpan,
}

impl Group {
    pub fn new(name: impl Into<String>) -> Self {
        Group {
            name: name.into(),
            assignments: vec![],
            attributes: Attributes::new(),
            span: SourceSpan::default(),
        }
    }
    pub fn is_done_assignment(&self, a: &Assignment) -> bool {
        matches!(&a.dst, PortRef::Hole { group, hole: Hole::Done } if *group == self.name)
    }
    pub fn done_assignments(&self) -> impl Iterator<Item = &Assignment> {
        self.assignments
            .iter()
            .filter(|a| self.is_done_assignment(a))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticGroup {
    pub name: String,
    pub latency: u64,
    pub assignments: Vec<Assignment>,
    pub attributes: Attributes,
    pub span: SourceSpan,
}

impl StaticGroup {
    pub fn new(name: impl Into<String>, latency: u64) -> Self {
        StaticGroup {
            name: name.into(),
            latency,
            assignments: vec![],
            attributes: Attributes::new(),
            span: SourceSpan::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub port: String,
    pub src: Atom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ControlKind {
    Empty,
    Enable {
        group: String,
    },
    StaticEnable {
        group: String,
    },
    Seq(Vec<Control>),
    Par(Vec<Control>),
    If {
        cond: PortRef,
        tru: Box<Control>,
        fls: Box<Control>,
    },
    While {
        cond: PortRef,
        body: Box<Control>,
    },
    Repeat {
        count: u64,
        body: Box<Control>,
    },
    Invoke {
        cell: String,
        bindings: Vec<Binding>,
    },
    StaticSeq(Vec<Control>),
    StaticPar(Vec<Control>),
    StaticIf {
        cond: PortRef,
        tru: Box<Control>,
        fls: Box<Control>,
    },
    StaticRepeat {
        count: u64,
        body: Box<Control>,
    },
    StaticInvoke {
        cell: String,
        bindings: Vec<Binding>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Control {
    pub kind: ControlKind,
    pub attributes: Attributes,
    pub span: SourceSpan,
}

impl From<ControlKind> for Control {
    fn from(kind: ControlKind) -> Self {
        Control {
            kind,
            attributes: Attributes::new(),
            span: SourceSpan::default(),
        }
    }
}

impl Control {
    pub fn empty() -> Self {
        ControlKind::Empty.into()
    }
    pub fn enable(group: impl Into<String>) -> Self {
        ControlKind::Enable {
            group: group.into(),
        }
        .into()
    }
    pub fn static_enable(group: impl Into<String>) -> Self {
        ControlKind::StaticEnable {
            group: group.into(),
        }
        .into()
    }
    pub fn seq(children: Vec<Control>) -> Self {
        ControlKind::Seq(children).into()
    }
    pub fn par(children: Vec<Control>) -> Self {
        ControlKind::Par(children).into()
    }
    pub fn static_seq(children: Vec<Control>) -> Self {
        ControlKind::StaticSeq(children).into()
    }
    pub fn static_par(children: Vec<Control>) -> Self {
        ControlKind::StaticPar(children).into()
    }
    pub fn while_(cond: PortRef, body: Control) -> Self {
        ControlKind::While {
            cond,
            body: Box::new(body),
        }
        .into()
    }
    pub fn if_(cond: PortRef, tru: Control, fls: Control) -> Self {
        ControlKind::If {
            cond,
            tru: Box::new(tru),
            fls: Box::new(fls),
        }
        .into()
    }
    pub fn static_if(cond: PortRef, tru: Control, fls: Control) -> Self {
        ControlKind::StaticIf {
            cond,
            tru: Box::new(tru),
            fls: Box::new(fls),
        }
        .into()
    }
    pub fn repeat(count: u64, body: Control) -> Self {
        ControlKind::Repeat {
            count,
            body: Box::new(body),
        }
        .into()
    }
    pub fn static_repeat(count: u64, body: Control) -> Self {
        ControlKind::StaticRepeat {
            count,
            body: Box::new(body),
        }
        .into()
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.kind, ControlKind::Empty)
    }

    /// True for the statically-timed variants.
    pub fn is_static(&self) -> bool {
        matches!(
            self.kind,
            ControlKind::StaticEnable { .. }
                | ControlKind::StaticSeq(_)
                | ControlKind::StaticPar(_)
                | ControlKind::StaticIf { .. }
                | ControlKind::StaticRepeat { .. }
                | ControlKind::StaticInvoke { .. }
        )
    }

    pub fn children(&self) -> Vec<&Control> {
        match &self.kind {
            ControlKind::Seq(cs)
            | ControlKind::Par(cs)
            | ControlKind::StaticSeq(cs)
            | ControlKind::StaticPar(cs) => cs.iter().collect(),
            ControlKind::If { tru, fls, .. } | ControlKind::StaticIf { tru, fls, .. } => {
                vec![tru, fls]
            }
            ControlKind::While { body, .. }
            | ControlKind::Repeat { body, .. }
            | ControlKind::StaticRepeat { body, .. } => vec![body],
            _ => vec![],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Control> {
        match &mut self.kind {
            ControlKind::Seq(cs)
            | ControlKind::Par(cs)
            | ControlKind::StaticSeq(cs)
            | ControlKind::StaticPar(cs) => cs.iter_mut().collect(),
            ControlKind::If { tru, fls, .. } | ControlKind::StaticIf { tru, fls, .. } => {
                vec![&mut **tru, &mut **fls]
            }
            ControlKind::While { body, .. }
            | ControlKind::Repeat { body, .. }
            | ControlKind::StaticRepeat { body, .. } => vec![&mut **body],
            _ => vec![],
        }
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Control)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Control)) {
        f(self);
        for c in self.children_mut() {
            c.walk_mut(f);
        }
    }

    /// Names of every group enabled (statically or dynamically) in the tree.
    pub fn enabled_groups(&self) -> Vec<&str> {
        let mut out = vec![];
        self.walk(&mut |c| match &c.kind {
            ControlKind::Enable { group } | ControlKind::StaticEnable { group } => {
                out.push(group.as_str())
            }
            _ => {}
        });
        out
    }
}
