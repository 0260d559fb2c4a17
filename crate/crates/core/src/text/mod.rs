// SPDX-License-Identifier: Apache-2.0

//! Textual form of the IL (`.uil` files).

mod lexer;
mod parser;
mod printer;

use std::fmt;
use std::sync::Arc;

use crate::ir::{Program, SourceSpan};

pub use printer::{
    print, print_assignment, print_component, print_control, print_guard, print_static_group,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError {
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parses a program. Name resolution beyond enable/invoke kinds is left to
/// [`crate::ir::validate`].
pub fn parse(src: &str) -> Result<Program, ParseError> {
    parse_named(src, None)
}

/// Like [`parse`], recording `file` in every span.
pub fn parse_named(src: &str, file: Option<&str>) -> Result<Program, ParseError> {
    let tokens = lexer::lex(src, file.map(Arc::from))?;
    parser::Parser::new(tokens).program()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{ControlKind, Interval};

    const QUOTIENT: &str = include_str!("../../tests/fixtures/quotient.uil");
    const MULT_AND_STORE: &str = include_str!("../../tests/fixtures/mult_and_store.uil");

    #[test]
    fn quotient_shape() {
        let p = parse(QUOTIENT).unwrap();
        assert_eq!(p.components.len(), 1);
        let c = &p.components[0];
        assert_eq!(
            (c.cells.len(), c.static_groups.len(), c.groups.len()),
            (3, 2, 1)
        );
        assert_eq!(p.entry, "expr");
        let ControlKind::Seq(children) = &c.control.kind else {
            panic!()
        };
        assert!(matches!(children[0].kind, ControlKind::StaticSeq(_)));
        assert!(matches!(children[1].kind, ControlKind::Enable { .. }));
        assert!(print(&p).contains("static<3> group do_mult"));
    }

    #[test]
    fn mult_and_store_interval() {
        let p = parse(MULT_AND_STORE).unwrap();
        let g = &p.components[0].static_groups[0];
        assert_eq!(g.latency, 4);
        let go = g
            .assignments
            .iter()
            .find(|a| a.dst.to_string() == "mult.go")
            .unwrap();
        assert_eq!(go.guard.timing, Some(Interval::new(0, 3)));
        let st = g
            .assignments
            .iter()
            .find(|a| a.dst.to_string() == "ans.write_en")
            .unwrap();
        assert_eq!(st.guard.timing, Some(Interval::cycle(3)));
    }

    #[test]
    fn empty_component() {
        let p = parse("component c() -> () { cells {} wires {} control {} }").unwrap();
        let text: String = print(&p).split_whitespace().collect();
        assert_eq!(text, "componentc()->(){cells{}wires{}control{}}");
    }

    #[test]
    fn round_trips_fixtures() {
        for src in [QUOTIENT, MULT_AND_STORE] {
            let p = parse(src).unwrap();
            let text = print(&p);
            assert_eq!(parse(&text).unwrap(), p);
            assert_eq!(print(&parse(&text).unwrap()), text);
        }
    }

    #[test]
    fn guard_precedence() {
        let src = "component c(x: 1, y: 1, z: 4) -> (o: 4) { cells {} wires { \
                   o = !x | y & z == 3 ? 2; o = %[1:3] & (x | y) ? 1; } control {} }";
        let p = parse(src).unwrap();
        let text = print(&p);
        assert!(text.contains("o = !x | y & z == 3 ? 2;"), "{text}");
        assert!(text.contains("o = %[1:3] & (x | y) ? 1;"), "{text}");
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn errors_carry_spans() {
        let e = parse("component c() -> () {\n  cells { r = std_reg(32) }\n}").unwrap_err();
        assert_eq!(e.span.line, 2);
        assert!(e.message.contains("expected `;`"), "{}", e.message);
        let e =
            parse("component c(x: 1) -> () { cells {} wires { x.a = x | %2 ? 1; } control {} }")
                .unwrap_err();
        assert!(e.message.contains("top-level conjunct"));
    }
}
