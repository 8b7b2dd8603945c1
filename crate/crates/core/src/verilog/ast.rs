use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;

use super::Loc;

/// A source location that never affects equality, so that ASTs parsed from
/// differently formatted text compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span(pub Loc);

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub direction: Direction,
    pub name: String,
    pub width: u32,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub width: u32,
    pub default: BigUint,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireDecl {
    pub name: String,
    pub width: u32,
    pub span: Span,
}

/// Assignment target: a whole signal or bits `msb..=lsb` of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LValue {
    pub name: String,
    pub select: Option<(u32, u32)>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VUnaryOp {
    Not,
    Neg,
    Plus,
    RedAnd,
    RedOr,
    RedXor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VBinaryOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VExpr {
    Ident(String, Span),
    Literal { width: Option<u32>, value: BigUint },
    /// `name[index]`; the index is dynamic unless it is a literal.
    Index { name: String, index: Box<VExpr>, span: Span },
    /// `name[msb:lsb]` with normalized bounds.
    Slice { name: String, msb: u32, lsb: u32, span: Span },
    Unary(VUnaryOp, Box<VExpr>),
    Binary(VBinaryOp, Box<VExpr>, Box<VExpr>),
    Ternary(Box<VExpr>, Box<VExpr>, Box<VExpr>),
    Concat(Vec<VExpr>),
    Replicate(u32, Vec<VExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assign {
    pub lhs: LValue,
    pub rhs: VExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamOverride {
    pub name: String,
    pub width: Option<u32>,
    pub value: BigUint,
}

/// A named-port instantiation, only accepted when parsing netlists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceDecl {
    pub primitive: String,
    pub name: String,
    pub params: Vec<ParamOverride>,
    /// `.PIN(expr)`; `None` for an explicitly empty `.PIN()`.
    pub connections: Vec<(String, Option<VExpr>)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleAst {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub ports: Vec<PortDecl>,
    pub wires: Vec<WireDecl>,
    pub assigns: Vec<Assign>,
    pub instances: Vec<InstanceDecl>,
}

impl ModuleAst {
    pub fn inputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.direction == Direction::Output)
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }
}
