// SPDX-License-Identifier: Apache-2.0

use crate::ir::{
    Assignment, Atom, Attributes, Binding, Cell, CmpOp, Component, Const, Control, ControlKind,
    Group, Guard, GuardExpr, Hole, Interval, LatencyCtx, LatencyKind, PortDecl, PortDef, PortRef,
    PortRole, PrimitiveDecl, Program, SourceSpan, StaticGroup, WidthExpr,
};

use super::lexer::{Tok, Token};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

/// Guard syntax before the timing interval is pulled out of the conjunction.
enum RawGuard {
    Timing(Interval),
    Expr(GuardExpr),
    And(Box<RawGuard>, Box<RawGuard>),
    Or(Box<RawGuard>, Box<RawGuard>),
    Not(Box<RawGuard>),
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::new(msg, self.span()))
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        self.error(format!("expected {what}, found {}", self.peek().describe()))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.expected(&t.describe())
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.expected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(_) => match self.bump() {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => self.expected("identifier"),
        }
    }

    fn number(&mut self) -> PResult<u64> {
        match self.peek() {
            Tok::Num(n) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            _ => self.expected("number"),
        }
    }

    fn width(&mut self) -> PResult<u32> {
        let n = self.number()?;
        u32::try_from(n).or_else(|_| self.error(format!("width {n} too large")))
    }

    /// `static<n>`, with the `static` keyword already consumed.
    fn latency(&mut self) -> PResult<u64> {
        self.expect(Tok::Lt)?;
        let n = self.number()?;
        self.expect(Tok::Gt)?;
        Ok(n)
    }

    fn attributes(&mut self) -> PResult<Attributes> {
        let mut attrs = Attributes::new();
        while self.eat(&Tok::At) {
            let name = self.ident()?;
            let value = if self.eat(&Tok::LParen) {
                let v = self.number()?;
                self.expect(Tok::RParen)?;
                Some(v)
            } else {
                None
            };
            attrs.insert(name, value);
        }
        Ok(attrs)
    }

    pub fn program(&mut self) -> PResult<Program> {
        let mut imports = vec![];
        let mut externs = vec![];
        let mut components: Vec<Component> = vec![];
        loop {
            if *self.peek() == Tok::Eof {
                break;
            }
            if self.eat_kw("import") {
                let span = self.span();
                let Tok::Str(name) = self.bump() else {
                    return Err(ParseError::new("expected string after `import`", span));
                };
                if name != "primitives" {
                    return Err(ParseError::new(
                        format!("unsupported import \"{name}\""),
                        span,
                    ));
                }
                self.expect(Tok::Semi)?;
                imports.push(name);
                continue;
            }
            let span = self.span();
            let attrs = self.attributes()?;
            let latency = if self.eat_kw("static") {
                Some(self.latency()?)
            } else {
                None
            };
            if self.eat_kw("primitive") {
                externs.push(self.primitive(attrs, latency)?);
            } else if self.eat_kw("component") {
                let mut comp = self.component(attrs, latency)?;
                comp.span = span;
                components.push(comp);
            } else {
                return self.expected("`component` or `primitive`");
            }
        }
        let entry = if components.len() == 1 {
            components[0].name.clone()
        } else if let Some(c) = components.iter().find(|c| c.attributes.has("toplevel")) {
            c.name.clone()
        } else if components.iter().any(|c| c.name == "main") {
            "main".into()
        } else {
            components
                .last()
                .map(|c| c.name.clone())
                .unwrap_or_else(|| "main".into())
        };
        let mut program = Program {
            imports,
            externs,
            components,
            entry,
        };
        resolve_kinds(&mut program);
        Ok(program)
    }

    fn primitive(&mut self, attrs: Attributes, latency: Option<u64>) -> PResult<PrimitiveDecl> {
        let name = self.ident()?;
        let mut params = vec![];
        if self.eat(&Tok::LBrack) {
            while !self.eat(&Tok::RBrack) {
                params.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    self.expect(Tok::RBrack)?;
                    break;
                }
            }
        }
        let inputs = self.prim_ports()?;
        self.expect(Tok::Arrow)?;
        let outputs = self.prim_ports()?;
        self.expect(Tok::Semi)?;
        let has_done = outputs.iter().any(|p| p.role == PortRole::Done);
        let kind = match latency {
            Some(n) => LatencyKind::Fixed(n),
            None if has_done => LatencyKind::Dynamic,
            None => LatencyKind::Combinational,
        };
        Ok(PrimitiveDecl {
            name,
            params,
            inputs,
            outputs,
            latency: kind,
            hint: attrs.static_hint(),
        })
    }

    fn prim_ports(&mut self) -> PResult<Vec<PortDecl>> {
        self.expect(Tok::LParen)?;
        let mut out = vec![];
        while !self.eat(&Tok::RParen) {
            let name = self.ident()?;
            self.expect(Tok::Colon)?;
            let width = match self.bump() {
                Tok::Num(n) => WidthExpr::Const(n as u32),
                Tok::Ident(p) => WidthExpr::Param(p),
                _ => return self.expected("width"),
            };
            let role = match name.as_str() {
                "go" => PortRole::Go,
                "done" => PortRole::Done,
                "clk" => PortRole::Clk,
                "reset" => PortRole::Reset,
                _ => PortRole::None,
            };
            out.push(PortDecl { name, width, role });
            if !self.eat(&Tok::Comma) {
                self.expect(Tok::RParen)?;
                break;
            }
        }
        Ok(out)
    }

    fn signature(&mut self) -> PResult<Vec<PortDef>> {
        self.expect(Tok::LParen)?;
        let mut out = vec![];
        while !self.eat(&Tok::RParen) {
            let name = self.ident()?;
            self.expect(Tok::Colon)?;
            let width = self.width()?;
            out.push(PortDef { name, width });
            if !self.eat(&Tok::Comma) {
                self.expect(Tok::RParen)?;
                break;
            }
        }
        Ok(out)
    }

    fn component(&mut self, attributes: Attributes, latency: Option<u64>) -> PResult<Component> {
        let mut comp = Component::new(self.ident()?);
        comp.attributes = attributes;
        comp.latency = latency;
        comp.inputs = self.signature()?;
        self.expect(Tok::Arrow)?;
        comp.outputs = self.signature()?;
        self.expect(Tok::LBrace)?;

        self.expect_kw("cells")?;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            let attributes = self.attributes()?;
            let name = self.ident()?;
            self.expect(Tok::Assign)?;
            let prototype = self.ident()?;
            self.expect(Tok::LParen)?;
            let mut args = vec![];
            while !self.eat(&Tok::RParen) {
                args.push(self.number()?);
                if !self.eat(&Tok::Comma) {
                    self.expect(Tok::RParen)?;
                    break;
                }
            }
            self.expect(Tok::Semi)?;
            comp.cells.push(Cell {
                name,
                prototype,
                args,
                attributes,
                span,
            });
        }

        self.expect_kw("wires")?;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            let attributes = self.attributes()?;
            if self.eat_kw("static") {
                let latency = self.latency()?;
                self.eat_kw("group");
                let mut g = StaticGroup::new(self.ident()?, latency);
                g.attributes = attributes;
                g.span = span;
                g.assignments = self.assignment_block()?;
                comp.static_groups.push(g);
            } else if self.is_kw("group") && matches!(self.peek_at(1), Tok::Ident(_)) {
                self.bump();
                let mut g = Group::new(self.ident()?);
                g.attributes = attributes;
                g.span = span;
                g.assignments = self.assignment_block()?;
                comp.groups.push(g);
            } else {
                if !attributes.is_empty() {
                    return self.expected("`group`");
                }
                comp.continuous.push(self.assignment()?);
            }
        }

        self.expect_kw("control")?;
        self.expect(Tok::LBrace)?;
        comp.control = self.block_body(false)?;
        self.expect(Tok::RBrace)?;
        self.expect(Tok::RBrace)?;
        Ok(comp)
    }

    fn assignment_block(&mut self) -> PResult<Vec<Assignment>> {
        self.expect(Tok::LBrace)?;
        let mut out = vec![];
        while !self.eat(&Tok::RBrace) {
            out.push(self.assignment()?);
        }
        Ok(out)
    }

    fn port_ref(&mut self) -> PResult<PortRef> {
        let first = self.ident()?;
        if self.eat(&Tok::Dot) {
            let port = self.ident()?;
            Ok(PortRef::Cell { cell: first, port })
        } else if *self.peek() == Tok::LBrack {
            self.bump();
            let hole = match self.ident()?.as_str() {
                "go" => Hole::Go,
                "done" => Hole::Done,
                other => return self.error(format!("unknown hole `{other}`")),
            };
            self.expect(Tok::RBrack)?;
            Ok(PortRef::Hole { group: first, hole })
        } else {
            Ok(PortRef::This { port: first })
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        match *self.peek() {
            Tok::Num(n) => {
                self.bump();
                Ok(Atom::Const(Const::bare(n)))
            }
            Tok::Sized(w, v) => {
                self.bump();
                Ok(Atom::Const(Const::sized(w, v)))
            }
            Tok::Ident(_) => Ok(Atom::Port(self.port_ref()?)),
            _ => self.expected("port or constant"),
        }
    }

    fn assignment(&mut self) -> PResult<Assignment> {
        let span = self.span();
        let dst = self.port_ref()?;
        self.expect(Tok::Assign)?;
        let save = self.pos;
        let guard = match self.guard_or() {
            Ok(raw) if *self.peek() == Tok::Question => {
                self.bump();
                Some(split_timing(raw).map_err(|m| ParseError::new(m, span.clone()))?)
            }
            _ => {
                self.pos = save;
                None
            }
        };
        let src = self.atom()?;
        self.expect(Tok::Semi)?;
        Ok(Assignment {
            dst,
            src,
            guard: guard.unwrap_or_default(),
            span,
        })
    }

    fn guard_or(&mut self) -> PResult<RawGuard> {
        let mut lhs = self.guard_and()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.guard_and()?;
            lhs = RawGuard::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn guard_and(&mut self) -> PResult<RawGuard> {
        let mut lhs = self.guard_unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.guard_unary()?;
            lhs = RawGuard::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn guard_unary(&mut self) -> PResult<RawGuard> {
        if self.eat(&Tok::Bang) {
            return Ok(RawGuard::Not(Box::new(self.guard_unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let g = self.guard_or()?;
            self.expect(Tok::RParen)?;
            return Ok(g);
        }
        if self.eat(&Tok::Percent) {
            let iv = if self.eat(&Tok::LBrack) {
                let i = self.number()?;
                self.expect(Tok::Colon)?;
                let j = self.number()?;
                self.expect(Tok::RBrack)?;
                Interval::new(i, j)
            } else {
                Interval::cycle(self.number()?)
            };
            return Ok(RawGuard::Timing(iv));
        }
        let lhs = self.atom()?;
        let op = match self.peek() {
            Tok::EqEq => Some(CmpOp::Eq),
            Tok::Neq => Some(CmpOp::Neq),
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::Le => Some(CmpOp::Leq),
            Tok::Ge => Some(CmpOp::Geq),
            _ => None,
        };
        match (op, lhs) {
            (Some(op), lhs) => {
                self.bump();
                let rhs = self.atom()?;
                Ok(RawGuard::Expr(GuardExpr::Cmp(op, lhs, rhs)))
            }
            (None, Atom::Port(p)) => Ok(RawGuard::Expr(GuardExpr::Port(p))),
            (None, Atom::Const(_)) => self.error("constant used as a guard"),
        }
    }

    /// Statements up to the closing brace (not consumed). Several statements
    /// form an implicit sequence.
    fn block_body(&mut self, is_static: bool) -> PResult<Control> {
        let span = self.span();
        let mut stmts = vec![];
        while *self.peek() != Tok::RBrace {
            if self.eat(&Tok::Semi) {
                continue;
            }
            stmts.push(self.stmt()?);
        }
        Ok(match stmts.len() {
            0 => Control::empty(),
            1 => stmts.pop().unwrap(),
            _ => {
                let kind = if is_static {
                    ControlKind::StaticSeq(stmts)
                } else {
                    ControlKind::Seq(stmts)
                };
                Control {
                    kind,
                    attributes: Attributes::new(),
                    span,
                }
            }
        })
    }

    fn braced(&mut self, is_static: bool) -> PResult<Control> {
        self.expect(Tok::LBrace)?;
        let c = self.block_body(is_static)?;
        self.expect(Tok::RBrace)?;
        Ok(c)
    }

    fn list(&mut self) -> PResult<Vec<Control>> {
        self.expect(Tok::LBrace)?;
        let mut out = vec![];
        while !self.eat(&Tok::RBrace) {
            if self.eat(&Tok::Semi) {
                continue;
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn invoke(&mut self) -> PResult<(String, Vec<Binding>)> {
        let cell = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut bindings = vec![];
        while !self.eat(&Tok::RParen) {
            let port = self.ident()?;
            self.expect(Tok::Assign)?;
            let src = self.atom()?;
            bindings.push(Binding { port, src });
            if !self.eat(&Tok::Comma) {
                self.expect(Tok::RParen)?;
                break;
            }
        }
        if self.eat(&Tok::LParen) {
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::Semi)?;
        Ok((cell, bindings))
    }

    fn stmt(&mut self) -> PResult<Control> {
        let span = self.span();
        let attributes = self.attributes()?;
        let kind = if self.eat_kw("static") {
            if self.eat_kw("seq") {
                ControlKind::StaticSeq(self.list()?)
            } else if self.eat_kw("par") {
                ControlKind::StaticPar(self.list()?)
            } else if self.eat_kw("if") {
                let cond = self.port_ref()?;
                let tru = Box::new(self.braced(true)?);
                let fls = Box::new(if self.eat_kw("else") {
                    self.braced(true)?
                } else {
                    Control::empty()
                });
                ControlKind::StaticIf { cond, tru, fls }
            } else if self.eat_kw("repeat") {
                let count = self.number()?;
                ControlKind::StaticRepeat {
                    count,
                    body: Box::new(self.braced(true)?),
                }
            } else if self.eat_kw("invoke") {
                let (cell, bindings) = self.invoke()?;
                ControlKind::StaticInvoke { cell, bindings }
            } else {
                return self.expected("`seq`, `par`, `if`, `repeat` or `invoke` after `static`");
            }
        } else if self.eat_kw("seq") {
            ControlKind::Seq(self.list()?)
        } else if self.eat_kw("par") {
            ControlKind::Par(self.list()?)
        } else if self.eat_kw("if") {
            let cond = self.port_ref()?;
            let tru = Box::new(self.braced(false)?);
            let fls = Box::new(if self.eat_kw("else") {
                self.braced(false)?
            } else {
                Control::empty()
            });
            ControlKind::If { cond, tru, fls }
        } else if self.eat_kw("while") {
            let cond = self.port_ref()?;
            ControlKind::While {
                cond,
                body: Box::new(self.braced(false)?),
            }
        } else if self.eat_kw("repeat") {
            let count = self.number()?;
            ControlKind::Repeat {
                count,
                body: Box::new(self.braced(false)?),
            }
        } else if self.eat_kw("invoke") {
            let (cell, bindings) = self.invoke()?;
            ControlKind::Invoke { cell, bindings }
        } else if self.is_kw("empty") && *self.peek_at(1) == Tok::Semi {
            self.bump();
            self.bump();
            ControlKind::Empty
        } else {
            let group = self.ident()?;
            self.expect(Tok::Semi)?;
            ControlKind::Enable { group }
        };
        Ok(Control {
            kind,
            attributes,
            span,
        })
    }
}

/// Removes the single timing interval from the top-level conjunction.
fn split_timing(raw: RawGuard) -> Result<Guard, String> {
    fn strip(raw: RawGuard, timing: &mut Option<Interval>) -> Result<Option<GuardExpr>, String> {
        match raw {
            RawGuard::Timing(iv) => {
                if timing.replace(iv).is_some() {
                    return Err("a guard may contain only one timing interval".into());
                }
                Ok(None)
            }
            RawGuard::And(a, b) => {
                let a = strip(*a, timing)?;
                let b = strip(*b, timing)?;
                Ok(match (a, b) {
                    (Some(a), Some(b)) => Some(GuardExpr::And(Box::new(a), Box::new(b))),
                    (x, None) | (None, x) => x,
                })
            }
            other => plain(other).map(Some),
        }
    }
    fn plain(raw: RawGuard) -> Result<GuardExpr, String> {
        Ok(match raw {
            RawGuard::Timing(_) => {
                return Err("timing interval must be a top-level conjunct of the guard".into())
            }
            RawGuard::Expr(e) => e,
            RawGuard::And(a, b) => GuardExpr::And(Box::new(plain(*a)?), Box::new(plain(*b)?)),
            RawGuard::Or(a, b) => GuardExpr::Or(Box::new(plain(*a)?), Box::new(plain(*b)?)),
            RawGuard::Not(a) => GuardExpr::Not(Box::new(plain(*a)?)),
        })
    }
    let mut timing = None;
    let expr = strip(raw, &mut timing)?.unwrap_or(GuardExpr::True);
    Ok(Guard { timing, expr })
}

/// Enables of static groups and invokes of static callees become their
/// static variants.
fn resolve_kinds(program: &mut Program) {
    for i in 0..program.components.len() {
        let comp = &program.components[i];
        let ctx = LatencyCtx::new(program, comp);
        let static_groups: Vec<String> =
            comp.static_groups.iter().map(|g| g.name.clone()).collect();
        let static_cells: Vec<String> = comp
            .cells
            .iter()
            .filter(|c| ctx.cell_latency(&c.name).is_some())
            .map(|c| c.name.clone())
            .collect();
        let mut control = std::mem::replace(&mut program.components[i].control, Control::empty());
        control.walk_mut(&mut |c| match &mut c.kind {
            ControlKind::Enable { group } if static_groups.contains(group) => {
                c.kind = ControlKind::StaticEnable {
                    group: std::mem::take(group),
                };
            }
            ControlKind::Invoke { cell, bindings } if static_cells.contains(cell) => {
                c.kind = ControlKind::StaticInvoke {
                    cell: std::mem::take(cell),
                    bindings: std::mem::take(bindings),
                };
            }
            _ => {}
        });
        program.components[i].control = control;
    }
}
