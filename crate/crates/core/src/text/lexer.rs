// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use crate::ir::SourceSpan;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    /// `W'dV`, `W'bV`, `W'hV`
    Sized(u32, u64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Semi,
    Comma,
    Colon,
    Dot,
    Assign,
    Question,
    Bang,
    Amp,
    Pipe,
    At,
    Percent,
    Arrow,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Neq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Sized(w, v) => format!("`{w}'d{v}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", punct(other)),
        }
    }
}

fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrack => "[",
        Tok::RBrack => "]",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Colon => ":",
        Tok::Dot => ".",
        Tok::Assign => "=",
        Tok::Question => "?",
        Tok::Bang => "!",
        Tok::Amp => "&",
        Tok::Pipe => "|",
        Tok::At => "@",
        Tok::Percent => "%",
        Tok::Arrow => "->",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Le => "<=",
        Tok::Ge => ">=",
        Tok::EqEq => "==",
        Tok::Neq => "!=",
        _ => "?",
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub fn lex(src: &str, file: Option<Arc<str>>) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = vec![];
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let span = |line, c0, c1| SourceSpan::new(file.clone(), line, c0, c1);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(
                        "unterminated block comment",
                        span(l0, c0, c0 + 2),
                    ));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }

        let start = i;
        let c0 = col;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            if chars.get(i) == Some(&'\'') {
                let width: u32 = digits
                    .parse()
                    .map_err(|_| ParseError::new("constant width too large", span(line, c0, c0)))?;
                i += 1;
                let radix = match chars.get(i) {
                    Some('d') => 10,
                    Some('b') => 2,
                    Some('h') => 16,
                    Some('o') => 8,
                    _ => {
                        return Err(ParseError::new(
                            "expected base `d`, `b`, `h` or `o` after `'`",
                            span(line, c0, col + (i - start) as u32),
                        ))
                    }
                };
                i += 1;
                let vstart = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[vstart..i].iter().filter(|c| **c != '_').collect();
                let value = u64::from_str_radix(&text, radix).map_err(|_| {
                    ParseError::new(
                        format!(
                            "malformed constant `{}`",
                            chars[start..i].iter().collect::<String>()
                        ),
                        span(line, c0, c0 + (i - start) as u32),
                    )
                })?;
                Tok::Sized(width, value)
            } else {
                let value = digits.parse().map_err(|_| {
                    ParseError::new(
                        format!("number `{digits}` out of range"),
                        span(line, c0, c0),
                    )
                })?;
                Tok::Num(value)
            }
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if chars.get(i) != Some(&'"') {
                return Err(ParseError::new(
                    "unterminated string",
                    span(line, c0, c0 + 1),
                ));
            }
            i += 1;
            Tok::Str(chars[start + 1..i - 1].iter().collect())
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('!', Some('=')) => (Tok::Neq, 2),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBrack, 1),
                (']', _) => (Tok::RBrack, 1),
                (';', _) => (Tok::Semi, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('.', _) => (Tok::Dot, 1),
                ('=', _) => (Tok::Assign, 1),
                ('?', _) => (Tok::Question, 1),
                ('!', _) => (Tok::Bang, 1),
                ('&', _) => (Tok::Amp, 1),
                ('|', _) => (Tok::Pipe, 1),
                ('@', _) => (Tok::At, 1),
                ('%', _) => (Tok::Percent, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                _ => {
                    return Err(ParseError::new(
                        format!("unexpected character `{c}`"),
                        span(line, c0, c0 + 1),
                    ))
                }
            };
            i += len;
            tok
        };
        col += (i - start) as u32;
        out.push(Token {
            tok,
            span: span(line, c0, col),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span(line, col, col),
    });
    Ok(out)
}
