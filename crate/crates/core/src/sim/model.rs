// SPDX-License-Identifier: Apache-2.0

//! Behavioural models of the builtin primitives.

use serde::Serialize;

pub type PortId = usize;

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Lsh,
    Rsh,
    Lt,
    Gt,
    Eq,
    Neq,
    Le,
    Ge,
    Not,
    Wire,
    Slice,
    Pad,
}

impl CombOp {
    pub fn from_prototype(name: &str) -> Option<Self> {
        Some(match name {
            "std_add" => CombOp::Add,
            "std_sub" => CombOp::Sub,
            "std_and" => CombOp::And,
            "std_or" => CombOp::Or,
            "std_xor" => CombOp::Xor,
            "std_lsh" => CombOp::Lsh,
            "std_rsh" => CombOp::Rsh,
            "std_lt" => CombOp::Lt,
            "std_gt" => CombOp::Gt,
            "std_eq" => CombOp::Eq,
            "std_neq" => CombOp::Neq,
            "std_le" => CombOp::Le,
            "std_ge" => CombOp::Ge,
            "std_not" => CombOp::Not,
            "std_wire" => CombOp::Wire,
            "std_slice" => CombOp::Slice,
            "std_pad" => CombOp::Pad,
            _ => return None,
        })
    }

    pub fn is_unary(self) -> bool {
        matches!(
            self,
            CombOp::Not | CombOp::Wire | CombOp::Slice | CombOp::Pad
        )
    }

    /// Result before masking to the output width.
    pub fn eval(self, a: u64, b: u64, width: u32) -> u64 {
        let m = mask(width);
        match self {
            CombOp::Add => a.wrapping_add(b) & m,
            CombOp::Sub => a.wrapping_sub(b) & m,
            CombOp::And => a & b,
            CombOp::Or => a | b,
            CombOp::Xor => a ^ b,
            CombOp::Lsh => {
                if b >= width as u64 {
                    0
                } else {
                    (a << b) & m
                }
            }
            CombOp::Rsh => {
                if b >= width as u64 {
                    0
                } else {
                    a >> b
                }
            }
            CombOp::Lt => (a < b) as u64,
            CombOp::Gt => (a > b) as u64,
            CombOp::Eq => (a == b) as u64,
            CombOp::Neq => (a != b) as u64,
            CombOp::Le => (a <= b) as u64,
            CombOp::Ge => (a >= b) as u64,
            CombOp::Not => !a & m,
            CombOp::Wire | CombOp::Slice | CombOp::Pad => a,
        }
    }
}

/// Latency of the divider for a given dividend.
pub fn div_latency(dividend: u64, divisor: u64) -> u64 {
    if divisor == 0 {
        1
    } else {
        (64 - dividend.leading_zeros() as u64).max(1)
    }
}

#[derive(Clone, Debug)]
pub enum CellKind {
    Comb {
        op: CombOp,
        left: PortId,
        right: Option<PortId>,
        out: PortId,
        width: u32,
        out_width: u32,
    },
    Reg {
        input: PortId,
        we: PortId,
        out: PortId,
        done: PortId,
        width: u32,
        value: u64,
        done_flag: bool,
    },
    Mem {
        addr: PortId,
        wdata: PortId,
        we: PortId,
        rdata: PortId,
        done: PortId,
        width: u32,
        data: Vec<u64>,
        done_flag: bool,
    },
    Mult {
        go: PortId,
        left: PortId,
        right: PortId,
        out: PortId,
        done: Option<PortId>,
        width: u32,
        latency: u64,
        count: u64,
        value: u64,
        done_flag: bool,
    },
    Div {
        go: PortId,
        left: PortId,
        right: PortId,
        out: PortId,
        done: PortId,
        width: u32,
        busy: Option<(u64, u64)>,
        value: u64,
        done_flag: bool,
    },
    /// Sub-component instance; its behaviour lives in the simulator.
    Instance {
        inst: usize,
        go: PortId,
        outputs: Vec<PortId>,
    },
}

#[derive(Clone, Debug)]
pub struct CellModel {
    /// Hierarchical name, `inst.cell` below the entry component.
    pub name: String,
    pub inst: usize,
    pub kind: CellKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Write {
    Reg { cell: String, value: u64 },
    Mem { cell: String, addr: u64, value: u64 },
}

pub struct OutOfBounds {
    pub addr: u64,
    pub size: usize,
}

impl CellModel {
    pub fn is_stateful(&self) -> bool {
        !matches!(self.kind, CellKind::Comb { .. })
    }

    /// Port whose assertion starts an operation or a write.
    pub fn go_port(&self) -> Option<PortId> {
        match &self.kind {
            CellKind::Comb { .. } => None,
            CellKind::Reg { we, .. } | CellKind::Mem { we, .. } => Some(*we),
            CellKind::Mult { go, .. }
            | CellKind::Div { go, .. }
            | CellKind::Instance { go, .. } => Some(*go),
        }
    }

    /// Data outputs whose reads count as accesses to the cell's state.
    pub fn value_outputs(&self) -> Vec<PortId> {
        match &self.kind {
            CellKind::Comb { .. } => vec![],
            CellKind::Reg { out, .. } | CellKind::Mult { out, .. } | CellKind::Div { out, .. } => {
                vec![*out]
            }
            CellKind::Mem { rdata, .. } => vec![*rdata],
            CellKind::Instance { outputs, .. } => outputs.clone(),
        }
    }

    /// Writes outputs that depend only on state.
    pub fn drive_state(&self, vals: &mut [u64]) {
        match &self.kind {
            CellKind::Reg {
                out,
                done,
                value,
                done_flag,
                ..
            } => {
                vals[*out] = *value;
                vals[*done] = *done_flag as u64;
            }
            CellKind::Mem {
                done, done_flag, ..
            } => vals[*done] = *done_flag as u64,
            CellKind::Mult {
                out,
                done,
                value,
                done_flag,
                ..
            } => {
                vals[*out] = *value;
                if let Some(d) = done {
                    vals[*d] = *done_flag as u64;
                }
            }
            CellKind::Div {
                out,
                done,
                value,
                done_flag,
                ..
            } => {
                vals[*out] = *value;
                vals[*done] = *done_flag as u64;
            }
            CellKind::Comb { .. } | CellKind::Instance { .. } => {}
        }
    }

    /// Combinational outputs as a function of `vals`, written into `next`.
    pub fn eval_comb(&self, vals: &[u64], next: &mut [u64]) {
        match &self.kind {
            CellKind::Comb {
                op,
                left,
                right,
                out,
                width,
                out_width,
            } => {
                let a = vals[*left];
                let b = right.map(|r| vals[r]).unwrap_or(0);
                next[*out] = op.eval(a, b, *width) & mask(*out_width);
            }
            CellKind::Mem {
                addr, rdata, data, ..
            } => {
                next[*rdata] = data.get(vals[*addr] as usize).copied().unwrap_or(0);
            }
            _ => {}
        }
    }

    /// Clock edge.
    pub fn commit(&mut self, vals: &[u64]) -> Result<Option<Write>, OutOfBounds> {
        let name = &self.name;
        match &mut self.kind {
            CellKind::Reg {
                input,
                we,
                width,
                value,
                done_flag,
                ..
            } => {
                *done_flag = vals[*we] != 0;
                if *done_flag {
                    *value = vals[*input] & mask(*width);
                    return Ok(Some(Write::Reg {
                        cell: name.clone(),
                        value: *value,
                    }));
                }
            }
            CellKind::Mem {
                addr,
                wdata,
                we,
                width,
                data,
                done_flag,
                ..
            } => {
                *done_flag = vals[*we] != 0;
                if *done_flag {
                    let a = vals[*addr];
                    if a as usize >= data.len() {
                        return Err(OutOfBounds {
                            addr: a,
                            size: data.len(),
                        });
                    }
                    let v = vals[*wdata] & mask(*width);
                    data[a as usize] = v;
                    return Ok(Some(Write::Mem {
                        cell: name.clone(),
                        addr: a,
                        value: v,
                    }));
                }
            }
            CellKind::Mult {
                go,
                left,
                right,
                done,
                width,
                latency,
                count,
                value,
                done_flag,
                ..
            } => {
                *done_flag = false;
                if vals[*go] != 0 {
                    *count += 1;
                    if *count >= *latency {
                        *value = vals[*left].wrapping_mul(vals[*right]) & mask(*width);
                        *count = 0;
                        *done_flag = done.is_some();
                    }
                } else {
                    *count = 0;
                }
            }
            CellKind::Div {
                go,
                left,
                right,
                width,
                busy,
                value,
                done_flag,
                ..
            } => {
                *done_flag = false;
                let step = match busy.take() {
                    Some((remaining, result)) => Some((remaining - 1, result)),
                    None if vals[*go] != 0 => {
                        let (l, r) = (vals[*left], vals[*right]);
                        let result = l.checked_div(r).unwrap_or_else(|| mask(*width));
                        Some((div_latency(l, r) - 1, result))
                    }
                    None => None,
                };
                match step {
                    Some((0, result)) => {
                        *value = result;
                        *done_flag = true;
                    }
                    Some(b) => *busy = Some(b),
                    None => {}
                }
            }
            CellKind::Comb { .. } | CellKind::Instance { .. } => {}
        }
        Ok(None)
    }
}
