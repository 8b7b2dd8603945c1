//! Front end for the combinational Verilog subset.
//!
//! Accepted: one `module` with an ANSI port list, `parameter` declarations
//! with literal defaults, `wire` declarations and continuous `assign`
//! statements over the operators `~ & | ^ + - * << >> == != < ?:`,
//! concatenation, replication and bit or part selects. Netlists may also
//! instantiate library primitives with named connections. Everything else is
//! reported as [`VerilogError::Unsupported`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ir::IrError;

pub mod ast;
mod elaborate;
mod lexer;
mod parser;
mod print;

pub use elaborate::{elaborate, elaborate_with_library, Elaborated, ParamMode};
pub use print::{print_module, sized as sized_hex};

use crate::library::{Library, PrimitiveSemantics};
use crate::Design;
use ast::ModuleAst;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub const fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerilogError {
    #[error("{loc}: syntax error: {message}")]
    Syntax { loc: Loc, message: String },
    #[error("{loc}: unsupported construct `{construct}`")]
    Unsupported { loc: Loc, construct: String },
    #[error("{loc}: undeclared identifier `{name}`")]
    Undeclared { loc: Loc, name: String },
    #[error("{loc}: `{name}` is already declared")]
    Redeclared { loc: Loc, name: String },
    #[error("{loc}: select [{msb}:{lsb}] out of range for `{name}` of width {width}")]
    SelectOutOfRange {
        loc: Loc,
        name: String,
        msb: u32,
        lsb: u32,
        width: u32,
    },
    #[error("combinational cycle through {}", .0.join(" -> "))]
    CombinationalCycle(Vec<String>),
    #[error("bit {bit} of `{name}` has more than one driver")]
    MultipleDrivers { name: String, bit: u32 },
    #[error("bit {bit} of `{name}` is never driven")]
    Undriven { name: String, bit: u32 },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("{loc}: unknown primitive `{name}`")]
    UnknownPrimitive { loc: Loc, name: String },
    #[error("{loc}: primitive `{primitive}` has no port or parameter `{pin}`")]
    UnknownPin { loc: Loc, primitive: String, pin: String },
    #[error("{loc}: input `{pin}` of instance `{instance}` is not connected")]
    UnconnectedPin { loc: Loc, instance: String, pin: String },
    #[error("{loc}: output `{pin}` of instance `{instance}` must drive a wire or output")]
    InvalidConnection { loc: Loc, instance: String, pin: String },
    #[error(transparent)]
    Ir(#[from] IrError),
}

impl VerilogError {
    /// Source location, for errors tied to one.
    pub fn loc(&self) -> Option<Loc> {
        match self {
            VerilogError::Syntax { loc, .. }
            | VerilogError::Unsupported { loc, .. }
            | VerilogError::Undeclared { loc, .. }
            | VerilogError::Redeclared { loc, .. }
            | VerilogError::SelectOutOfRange { loc, .. }
            | VerilogError::UnknownPrimitive { loc, .. }
            | VerilogError::UnknownPin { loc, .. }
            | VerilogError::UnconnectedPin { loc, .. }
            | VerilogError::InvalidConnection { loc, .. } => Some(*loc),
            _ => None,
        }
    }
}

/// Parses a primitive model or design; instantiation is rejected.
pub fn parse(src: &str) -> Result<ModuleAst, VerilogError> {
    parser::parse_module(src, false)
}

/// Parses a structural netlist, which may instantiate primitives.
pub fn parse_netlist(src: &str) -> Result<ModuleAst, VerilogError> {
    parser::parse_module(src, true)
}

/// Parses and elaborates a primitive model with symbolic parameters.
pub fn import_primitive(src: &str) -> Result<PrimitiveSemantics, VerilogError> {
    let ast = parse(src)?;
    Ok(elaborate(&ast, &ParamMode::Symbolic)?.into_primitive().expect("symbolic mode yields a primitive"))
}

/// Parses and elaborates a design with parameters at their defaults.
pub fn import_design(src: &str) -> Result<Design, VerilogError> {
    let ast = parse(src)?;
    Ok(elaborate(&ast, &ParamMode::Bound(Default::default()))?.into_design().expect("bound mode yields a design"))
}

/// Parses a netlist and inlines its instances from `library`.
pub fn import_netlist(src: &str, library: &Library) -> Result<Design, VerilogError> {
    let ast = parse_netlist(src)?;
    Ok(elaborate_with_library(&ast, &ParamMode::Bound(Default::default()), library)?
        .into_design()
        .expect("bound mode yields a design"))
}

#[cfg(test)]
mod tests;
