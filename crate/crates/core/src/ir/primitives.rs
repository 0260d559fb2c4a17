// SPDX-License-Identifier: Apache-2.0

//! Primitive declarations and the builtin `std_*` library.

use std::sync::OnceLock;

use super::Direction;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WidthExpr {
    Const(u32),
    Param(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortRole {
    None,
    Go,
    Done,
    Clk,
    Reset,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub width: WidthExpr,
    pub role: PortRole,
}

/// Timing behaviour of a primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatencyKind {
    /// Outputs are a pure function of the current inputs.
    Combinational,
    /// Static calling convention: `go` held for exactly n cycles, no `done`.
    Fixed(u64),
    /// go/done handshake.
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimitiveDecl {
    pub name: String,
    pub params: Vec<String>,
    pub inputs: Vec<PortDecl>,
    pub outputs: Vec<PortDecl>,
    pub latency: LatencyKind,
    /// Erasable `@static(n)` hint for dynamic primitives with known timing.
    pub hint: Option<u64>,
}

impl PrimitiveDecl {
    fn resolve(&self, w: &WidthExpr, args: &[u64]) -> Option<u32> {
        match w {
            WidthExpr::Const(n) => Some(*n),
            WidthExpr::Param(p) => {
                let idx = self.params.iter().position(|q| q == p)?;
                args.get(idx).map(|&v| v as u32)
            }
        }
    }

    pub fn port(&self, name: &str) -> Option<(&PortDecl, Direction)> {
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

    /// Width and direction of `port` for a cell instantiated with `args`.
    pub fn port_width(&self, port: &str, args: &[u64]) -> Option<(u32, Direction)> {
        let (decl, dir) = self.port(port)?;
        Some((self.resolve(&decl.width, args)?, dir))
    }

    pub fn go_port(&self) -> Option<&str> {
        self.inputs
            .iter()
            .find(|p| p.role == PortRole::Go)
            .map(|p| p.name.as_str())
    }

    pub fn done_port(&self) -> Option<&str> {
        self.outputs
            .iter()
            .find(|p| p.role == PortRole::Done)
            .map(|p| p.name.as_str())
    }

    /// Cycles from `go` to completion, guaranteed or hinted.
    pub fn known_latency(&self) -> Option<u64> {
        match self.latency {
            LatencyKind::Fixed(n) => Some(n),
            LatencyKind::Dynamic => self.hint,
            LatencyKind::Combinational => None,
        }
    }

    pub fn is_combinational(&self) -> bool {
        self.latency == LatencyKind::Combinational
    }
}

fn p(name: &str, width: &str, role: PortRole) -> PortDecl {
    let width = match width.parse::<u32>() {
        Ok(n) => WidthExpr::Const(n),
        Err(_) => WidthExpr::Param(width.to_string()),
    };
    PortDecl {
        name: name.to_string(),
        width,
        role,
    }
}

fn decl(
    name: &str,
    params: &[&str],
    inputs: Vec<PortDecl>,
    outputs: Vec<PortDecl>,
    latency: LatencyKind,
    hint: Option<u64>,
) -> PrimitiveDecl {
    PrimitiveDecl {
        name: name.to_string(),
        params: params.iter().map(|s| s.to_string()).collect(),
        inputs,
        outputs,
        latency,
        hint,
    }
}

/// Latency of the builtin static multiplier.
pub const MULT_LATENCY: u64 = 3;

fn library() -> &'static [PrimitiveDecl] {
    static LIB: OnceLock<Vec<PrimitiveDecl>> = OnceLock::new();
    LIB.get_or_init(|| {
        use LatencyKind::*;
        use PortRole::None as N;
        let mut lib = vec![];
        for name in [
            "std_add", "std_sub", "std_and", "std_or", "std_xor", "std_lsh", "std_rsh",
        ] {
            lib.push(decl(
                name,
                &["W"],
                vec![p("left", "W", N), p("right", "W", N)],
                vec![p("out", "W", N)],
                Combinational,
                None,
            ));
        }
        for name in ["std_lt", "std_gt", "std_eq", "std_neq", "std_le", "std_ge"] {
            lib.push(decl(
                name,
                &["W"],
                vec![p("left", "W", N), p("right", "W", N)],
                vec![p("out", "1", N)],
                Combinational,
                None,
            ));
        }
        for name in ["std_not", "std_wire"] {
            lib.push(decl(
                name,
                &["W"],
                vec![p("in", "W", N)],
                vec![p("out", "W", N)],
                Combinational,
                None,
            ));
        }
        for name in ["std_slice", "std_pad"] {
            lib.push(decl(
                name,
                &["IN", "OUT"],
                vec![p("in", "IN", N)],
                vec![p("out", "OUT", N)],
                Combinational,
                None,
            ));
        }
        lib.push(decl(
            "std_reg",
            &["W"],
            vec![p("in", "W", N), p("write_en", "1", PortRole::Go)],
            vec![p("out", "W", N), p("done", "1", PortRole::Done)],
            Dynamic,
            Some(1),
        ));
        lib.push(decl(
            "std_mult",
            &["W"],
            vec![
                p("go", "1", PortRole::Go),
                p("left", "W", N),
                p("right", "W", N),
            ],
            vec![p("out", "W", N)],
            Fixed(MULT_LATENCY),
            None,
        ));
        lib.push(decl(
            "std_mult_pipe",
            &["W"],
            vec![
                p("go", "1", PortRole::Go),
                p("left", "W", N),
                p("right", "W", N),
            ],
            vec![p("out", "W", N), p("done", "1", PortRole::Done)],
            Dynamic,
            Some(MULT_LATENCY),
        ));
        lib.push(decl(
            "std_div",
            &["W"],
            vec![
                p("go", "1", PortRole::Go),
                p("left", "W", N),
                p("right", "W", N),
            ],
            vec![p("out", "W", N), p("done", "1", PortRole::Done)],
            Dynamic,
            None,
        ));
        lib.push(decl(
            "std_mem_d1",
            &["W", "SIZE", "IDX"],
            vec![
                p("addr0", "IDX", N),
                p("write_data", "W", N),
                p("write_en", "1", PortRole::Go),
            ],
            vec![p("read_data", "W", N), p("done", "1", PortRole::Done)],
            Dynamic,
            Some(1),
        ));
        lib
    })
}

pub fn builtin(name: &str) -> Option<&'static PrimitiveDecl> {
    library().iter().find(|p| p.name == name)
}

pub fn builtins() -> &'static [PrimitiveDecl] {
    library()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_primitives_have_no_done() {
        for prim in builtins() {
            match prim.latency {
                LatencyKind::Fixed(_) => {
                    assert!(prim.done_port().is_none(), "{}", prim.name);
                    assert!(prim.go_port().is_some(), "{}", prim.name);
                }
                LatencyKind::Dynamic => {
                    assert!(prim.done_port().is_some(), "{}", prim.name);
                    assert!(prim.go_port().is_some(), "{}", prim.name);
                }
                LatencyKind::Combinational => {}
            }
        }
    }

    #[test]
    fn width_params_resolve() {
        let mem = builtin("std_mem_d1").unwrap();
        assert_eq!(
            mem.port_width("addr0", &[32, 8, 3]),
            Some((3, Direction::Input))
        );
        assert_eq!(
            mem.port_width("read_data", &[32, 8, 3]),
            Some((32, Direction::Output))
        );
        let lt = builtin("std_lt").unwrap();
        assert_eq!(lt.port_width("out", &[8]), Some((1, Direction::Output)));
    }
}
