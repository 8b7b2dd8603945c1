//! Core of the technology-mapper generator.
//!
//! Primitive models written in a combinational Verilog subset are elaborated
//! into bitvector semantics ([`verilog`]), instantiated into sketches with
//! parameter and port-binding holes ([`templates`]), solved against a design
//! by enumeration or counterexample-guided synthesis ([`synthesis`]), and
//! rendered back to structural Verilog ([`emit`]).
//!
//! The crate is `no_std` and needs only `alloc`. Talking to an SMT solver is
//! abstracted behind [`synthesis::SmtSolver`]; process spawning, file formats
//! and the command line live in the `techmap` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod emit;
pub mod fuzz;
pub mod ir;
pub mod library;
pub mod models;
pub mod rng;
pub mod semantics;
pub mod smt;
pub mod synthesis;
pub mod templates;
pub mod verilog;

pub use ir::{Design, Expr, ExprKind, IrError, OutputDef, Port};
pub use library::{Library, Param, PrimitiveSemantics, TemplateDescriptor};
pub use num_bigint::BigUint;
pub use semantics::Env;
