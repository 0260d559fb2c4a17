// SPDX-License-Identifier: Apache-2.0

//! Compiler and cycle-accurate simulator for a hardware IL that mixes
//! latency-insensitive (dynamic) and statically scheduled control.

pub mod fuzz;
pub mod ir;
pub mod lower;
pub mod opt;
pub mod pipeline;
pub mod sim;
pub mod text;
