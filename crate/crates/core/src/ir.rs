//! Width-annotated bitvector expression DAG.
//!
//! Every design, primitive model and template sketch is expressed in this IR.
//! Nodes are immutable and reference-counted, so sub-expressions can be shared
//! freely; passes that walk an expression visit each shared node once.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
    RedAnd,
    RedOr,
    RedXor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Shl,
    LShr,
    Eq,
    Ult,
}

impl UnaryOp {
    pub fn mnemonic(self) -> &'static str {
        match self {
            UnaryOp::Not => "not",
            UnaryOp::Neg => "neg",
            UnaryOp::RedAnd => "redand",
            UnaryOp::RedOr => "redor",
            UnaryOp::RedXor => "redxor",
        }
    }

    pub fn is_reduction(self) -> bool {
        matches!(self, UnaryOp::RedAnd | UnaryOp::RedOr | UnaryOp::RedXor)
    }
}

impl BinaryOp {
    pub fn mnemonic(self) -> &'static str {
        match self {
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
            BinaryOp::Xor => "xor",
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Shl => "shl",
            BinaryOp::LShr => "lshr",
            BinaryOp::Eq => "eq",
            BinaryOp::Ult => "ult",
        }
    }

    pub fn is_shift(self) -> bool {
        matches!(self, BinaryOp::Shl | BinaryOp::LShr)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ult)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    Hole(String),
    Const(BigUint),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
    /// `Mux(cond, then, else)`; a condition of 1 selects `then`.
    Mux(Expr, Expr, Expr),
    Extract { hi: u32, lo: u32, arg: Expr },
    /// `Concat(hi, lo)`; `hi` occupies the most-significant bits.
    Concat(Expr, Expr),
    ZeroExt(Expr),
    SignExt(Expr),
}

#[derive(Debug, PartialEq, Eq)]
struct Node {
    width: u32,
    kind: ExprKind,
}

/// A shared handle to an expression node.
///
/// The width stored in each node is the width implied by its constructor.
/// Constructors do not check operand constraints; [`validate`] does.
#[derive(Clone, PartialEq, Eq)]
pub struct Expr(Arc<Node>);

/// Which symbols a substitution replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Vars,
    Holes,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("width mismatch at {node}: expected {expected}, found {actual}")]
    WidthMismatch {
        node: String,
        expected: u32,
        actual: u32,
    },
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("hole `{0}` is not allowed here")]
    HoleNotAllowed(String),
    #[error("constant {value} does not fit in {width} bits")]
    ConstOutOfRange { width: u32, value: String },
    #[error("{node} has zero width")]
    ZeroWidth { node: String },
    #[error("extract [{hi}:{lo}] out of range for a {width}-bit operand")]
    ExtractOutOfRange { hi: u32, lo: u32, width: u32 },
    #[error("extension to {new_width} bits is narrower than the {width}-bit operand")]
    NarrowingExtension { width: u32, new_width: u32 },
    #[error("symbol `{0}` is used both as a variable and as a hole")]
    SymbolConflict(String),
    #[error("empty symbol name")]
    EmptyName,
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    fn new(width: u32, kind: ExprKind) -> Self {
        Expr(Arc::new(Node { width, kind }))
    }

    pub fn var(name: impl Into<String>, width: u32) -> Self {
        Self::new(width, ExprKind::Var(name.into()))
    }

    pub fn hole(name: impl Into<String>, width: u32) -> Self {
        Self::new(width, ExprKind::Hole(name.into()))
    }

    pub fn constant(width: u32, value: impl Into<BigUint>) -> Self {
        Self::new(width, ExprKind::Const(value.into()))
    }

    pub fn bit(value: bool) -> Self {
        Self::constant(1, u32::from(value))
    }

    pub fn zero(width: u32) -> Self {
        Self::constant(width, 0u32)
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Self {
        let width = if op.is_reduction() { 1 } else { a.width() };
        Self::new(width, ExprKind::Unary(op, a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        let width = if op.is_comparison() { 1 } else { a.width() };
        Self::new(width, ExprKind::Binary(op, a, b))
    }

    pub fn not(a: Expr) -> Self {
        Self::unary(UnaryOp::Not, a)
    }

    pub fn neg(a: Expr) -> Self {
        Self::unary(UnaryOp::Neg, a)
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::And, a, b)
    }

    pub fn or(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Or, a, b)
    }

    pub fn xor(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Xor, a, b)
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Add, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Mul, a, b)
    }

    pub fn lshr(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::LShr, a, b)
    }

    pub fn eq(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Eq, a, b)
    }

    pub fn mux(cond: Expr, then: Expr, otherwise: Expr) -> Self {
        let width = then.width();
        Self::new(width, ExprKind::Mux(cond, then, otherwise))
    }

    pub fn extract(hi: u32, lo: u32, arg: Expr) -> Self {
        let width = hi.saturating_sub(lo).saturating_add(1);
        Self::new(width, ExprKind::Extract { hi, lo, arg })
    }

    pub fn concat(hi: Expr, lo: Expr) -> Self {
        let width = hi.width().saturating_add(lo.width());
        Self::new(width, ExprKind::Concat(hi, lo))
    }

    /// Concatenates `parts`, most-significant first. Returns `None` when empty.
    pub fn concat_all(parts: impl IntoIterator<Item = Expr>) -> Option<Self> {
        parts.into_iter().reduce(Expr::concat)
    }

    pub fn zext(a: Expr, new_width: u32) -> Self {
        Self::new(new_width, ExprKind::ZeroExt(a))
    }

    pub fn sext(a: Expr, new_width: u32) -> Self {
        Self::new(new_width, ExprKind::SignExt(a))
    }

    pub fn width(&self) -> u32 {
        self.0.width
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    /// Identity of the shared node; stable for the lifetime of the handle.
    pub fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn as_const(&self) -> Option<&BigUint> {
        match self.kind() {
            ExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self.kind() {
            ExprKind::Var(_) | ExprKind::Hole(_) | ExprKind::Const(_) => vec![],
            ExprKind::Unary(_, a)
            | ExprKind::Extract { arg: a, .. }
            | ExprKind::ZeroExt(a)
            | ExprKind::SignExt(a) => vec![a],
            ExprKind::Binary(_, a, b) | ExprKind::Concat(a, b) => vec![a, b],
            ExprKind::Mux(c, a, b) => vec![c, a, b],
        }
    }

    /// Short operator name, matching the JSON `op` tags.
    pub fn mnemonic(&self) -> &'static str {
        match self.kind() {
            ExprKind::Var(_) => "var",
            ExprKind::Hole(_) => "hole",
            ExprKind::Const(_) => "const",
            ExprKind::Unary(op, _) => op.mnemonic(),
            ExprKind::Binary(op, _, _) => op.mnemonic(),
            ExprKind::Mux(..) => "mux",
            ExprKind::Extract { .. } => "extract",
            ExprKind::Concat(..) => "concat",
            ExprKind::ZeroExt(_) => "zext",
            ExprKind::SignExt(_) => "sext",
        }
    }

    /// Rebuilds this node with new children, in `children()` order.
    fn with_children(&self, mut kids: Vec<Expr>) -> Expr {
        let width = self.width();
        let kind = match self.kind() {
            ExprKind::Var(_) | ExprKind::Hole(_) | ExprKind::Const(_) => return self.clone(),
            ExprKind::Unary(op, _) => ExprKind::Unary(*op, kids.remove(0)),
            ExprKind::Extract { hi, lo, .. } => ExprKind::Extract {
                hi: *hi,
                lo: *lo,
                arg: kids.remove(0),
            },
            ExprKind::ZeroExt(_) => ExprKind::ZeroExt(kids.remove(0)),
            ExprKind::SignExt(_) => ExprKind::SignExt(kids.remove(0)),
            ExprKind::Binary(op, _, _) => {
                let b = kids.pop().unwrap();
                let a = kids.pop().unwrap();
                ExprKind::Binary(*op, a, b)
            }
            ExprKind::Concat(_, _) => {
                let b = kids.pop().unwrap();
                let a = kids.pop().unwrap();
                ExprKind::Concat(a, b)
            }
            ExprKind::Mux(..) => {
                let b = kids.pop().unwrap();
                let a = kids.pop().unwrap();
                let c = kids.pop().unwrap();
                ExprKind::Mux(c, a, b)
            }
        };
        Expr::new(width, kind)
    }
}

/// Every distinct node reachable from `roots`, children before parents.
pub fn post_order<'a>(roots: impl IntoIterator<Item = &'a Expr>) -> Vec<Expr> {
    let mut seen = BTreeMap::<usize, ()>::new();
    let mut order = Vec::new();
    for root in roots {
        if seen.contains_key(&root.node_id()) {
            continue;
        }
        // (node, children already pushed)
        let mut stack: Vec<(Expr, bool)> = vec![(root.clone(), false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded {
                if seen.insert(node.node_id(), ()).is_none() {
                    order.push(node);
                }
                continue;
            }
            if seen.contains_key(&node.node_id()) {
                continue;
            }
            stack.push((node.clone(), true));
            for child in node.children().into_iter().rev() {
                if !seen.contains_key(&child.node_id()) {
                    stack.push((child.clone(), false));
                }
            }
        }
    }
    order
}

/// Checks every width rule and symbol reference; returns the expression width.
pub fn validate(expr: &Expr, env: &BTreeMap<String, u32>, allow_holes: bool) -> Result<u32, IrError> {
    let mut holes = BTreeMap::new();
    validate_with(expr, env, allow_holes, &mut holes)
}

/// Like [`validate`], threading hole widths across several expressions so
/// that a hole shared between outputs must agree on its width.
pub fn validate_with(
    expr: &Expr,
    env: &BTreeMap<String, u32>,
    allow_holes: bool,
    holes: &mut BTreeMap<String, u32>,
) -> Result<u32, IrError> {
    for node in post_order([expr]) {
        check_node(&node, env, allow_holes, holes)?;
    }
    Ok(expr.width())
}

fn mismatch(node: &Expr, expected: u32, actual: u32) -> IrError {
    IrError::WidthMismatch {
        node: node.mnemonic().to_string(),
        expected,
        actual,
    }
}

fn check_node(
    node: &Expr,
    env: &BTreeMap<String, u32>,
    allow_holes: bool,
    holes: &mut BTreeMap<String, u32>,
) -> Result<(), IrError> {
    let w = node.width();
    match node.kind() {
        ExprKind::Var(name) => {
            if name.is_empty() {
                return Err(IrError::EmptyName);
            }
            if holes.contains_key(name) {
                return Err(IrError::SymbolConflict(name.clone()));
            }
            match env.get(name) {
                None => return Err(IrError::UnknownVar(name.clone())),
                Some(&expected) if expected != w => {
                    return Err(IrError::WidthMismatch {
                        node: alloc::format!("var {name}"),
                        expected,
                        actual: w,
                    })
                }
                Some(_) => {}
            }
        }
        ExprKind::Hole(name) => {
            if name.is_empty() {
                return Err(IrError::EmptyName);
            }
            if !allow_holes {
                return Err(IrError::HoleNotAllowed(name.clone()));
            }
            if env.contains_key(name) {
                return Err(IrError::SymbolConflict(name.clone()));
            }
            if w == 0 {
                return Err(IrError::ZeroWidth {
                    node: alloc::format!("hole {name}"),
                });
            }
            if let Some(&prev) = holes.get(name) {
                if prev != w {
                    return Err(IrError::WidthMismatch {
                        node: alloc::format!("hole {name}"),
                        expected: prev,
                        actual: w,
                    });
                }
            }
            holes.insert(name.clone(), w);
        }
        ExprKind::Const(value) => {
            if w == 0 {
                return Err(IrError::ZeroWidth { node: "const".into() });
            }
            if value.bits() > u64::from(w) {
                return Err(IrError::ConstOutOfRange {
                    width: w,
                    value: value.to_string(),
                });
            }
        }
        ExprKind::Unary(..) => {}
        ExprKind::Binary(op, a, b) => {
            if !op.is_shift() && a.width() != b.width() {
                return Err(mismatch(node, a.width(), b.width()));
            }
        }
        ExprKind::Mux(c, a, b) => {
            if c.width() != 1 {
                return Err(mismatch(node, 1, c.width()));
            }
            if a.width() != b.width() {
                return Err(mismatch(node, a.width(), b.width()));
            }
        }
        ExprKind::Extract { hi, lo, arg } => {
            if hi < lo || *hi >= arg.width() {
                return Err(IrError::ExtractOutOfRange {
                    hi: *hi,
                    lo: *lo,
                    width: arg.width(),
                });
            }
        }
        ExprKind::Concat(..) => {}
        ExprKind::ZeroExt(a) | ExprKind::SignExt(a) => {
            if w < a.width() {
                return Err(IrError::NarrowingExtension {
                    width: a.width(),
                    new_width: w,
                });
            }
        }
    }
    Ok(())
}

/// Referenced variables and holes, each with its width.
pub fn free_symbols(expr: &Expr) -> (BTreeMap<String, u32>, BTreeMap<String, u32>) {
    free_symbols_all([expr])
}

pub fn free_symbols_all<'a>(
    exprs: impl IntoIterator<Item = &'a Expr>,
) -> (BTreeMap<String, u32>, BTreeMap<String, u32>) {
    let mut vars = BTreeMap::new();
    let mut holes = BTreeMap::new();
    for node in post_order(exprs) {
        match node.kind() {
            ExprKind::Var(n) => {
                vars.insert(n.clone(), node.width());
            }
            ExprKind::Hole(n) => {
                holes.insert(n.clone(), node.width());
            }
            _ => {}
        }
    }
    (vars, holes)
}

/// Replaces every targeted symbol that has a binding. Shared nodes are
/// rewritten once, so the result keeps the sharing of the input.
pub fn substitute(expr: &Expr, bindings: &BTreeMap<String, Expr>, target: SymbolKind) -> Result<Expr, IrError> {
    let mut memo = BTreeMap::new();
    substitute_memo(expr, bindings, target, &mut memo)
}

/// Substitution over several roots sharing one rewrite cache.
pub fn substitute_all(
    exprs: &[Expr],
    bindings: &BTreeMap<String, Expr>,
    target: SymbolKind,
) -> Result<Vec<Expr>, IrError> {
    let mut memo = BTreeMap::new();
    exprs
        .iter()
        .map(|e| substitute_memo(e, bindings, target, &mut memo))
        .collect()
}

fn substitute_memo(
    expr: &Expr,
    bindings: &BTreeMap<String, Expr>,
    target: SymbolKind,
    memo: &mut BTreeMap<usize, Expr>,
) -> Result<Expr, IrError> {
    for node in post_order([expr]) {
        if memo.contains_key(&node.node_id()) {
            continue;
        }
        let replaced = match (node.kind(), target) {
            (ExprKind::Var(name), SymbolKind::Vars) | (ExprKind::Hole(name), SymbolKind::Holes) => {
                match bindings.get(name) {
                    Some(b) if b.width() != node.width() => {
                        return Err(IrError::WidthMismatch {
                            node: alloc::format!("binding for {name}"),
                            expected: node.width(),
                            actual: b.width(),
                        })
                    }
                    Some(b) => b.clone(),
                    None => node.clone(),
                }
            }
            _ => {
                let old = node.children();
                if old.is_empty() {
                    node.clone()
                } else {
                    let new: Vec<Expr> = old.iter().map(|c| memo[&c.node_id()].clone()).collect();
                    if old.iter().zip(&new).all(|(o, n)| o.ptr_eq(n)) {
                        node.clone()
                    } else {
                        node.with_children(new)
                    }
                }
            }
        };
        memo.insert(node.node_id(), replaced);
    }
    Ok(memo[&expr.node_id()].clone())
}

/// `2^width - 1`.
pub fn mask(width: u32) -> BigUint {
    (BigUint::one() << width as usize) - BigUint::one()
}

/// A named, sized port of a design or primitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Port {
    pub name: String,
    pub width: u32,
}

impl Port {
    pub fn new(name: impl Into<String>, width: u32) -> Self {
        Port {
            name: name.into(),
            width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDef {
    pub name: String,
    pub expr: Expr,
}

impl OutputDef {
    pub fn new(name: impl Into<String>, expr: Expr) -> Self {
        OutputDef { name: name.into(), expr }
    }
}

/// A hardware design to be mapped: outputs defined over input variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub name: String,
    pub inputs: Vec<Port>,
    pub outputs: Vec<OutputDef>,
}

impl Design {
    pub fn input_env(&self) -> BTreeMap<String, u32> {
        ports_env(&self.inputs)
    }

    pub fn input_bits(&self) -> u64 {
        self.inputs.iter().map(|p| u64::from(p.width)).sum()
    }

    pub fn output_ports(&self) -> Vec<Port> {
        self.outputs.iter().map(|o| Port::new(o.name.clone(), o.expr.width())).collect()
    }

    pub fn output(&self, name: &str) -> Option<&OutputDef> {
        self.outputs.iter().find(|o| o.name == name)
    }

    pub fn validate(&self) -> Result<(), IrError> {
        check_unique(self.inputs.iter().map(|p| p.name.as_str()).chain(self.outputs.iter().map(|o| o.name.as_str())))?;
        for p in &self.inputs {
            if p.width == 0 {
                return Err(IrError::ZeroWidth {
                    node: alloc::format!("input {}", p.name),
                });
            }
        }
        let env = self.input_env();
        for out in &self.outputs {
            validate(&out.expr, &env, false)?;
        }
        Ok(())
    }
}

pub fn ports_env(ports: &[Port]) -> BTreeMap<String, u32> {
    ports.iter().map(|p| (p.name.clone(), p.width)).collect()
}

pub(crate) fn check_unique<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<(), IrError> {
    let mut seen = BTreeMap::new();
    for n in names {
        if n.is_empty() {
            return Err(IrError::EmptyName);
        }
        if seen.insert(n, ()).is_some() {
            return Err(IrError::DuplicateName(n.to_string()));
        }
    }
    Ok(())
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// S-expression rendering, e.g. `(and a:4 (const 4 8))`. Shared nodes are
/// printed at every use.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Var(n) => write!(f, "{n}:{}", self.width()),
            ExprKind::Hole(n) => write!(f, "?{n}:{}", self.width()),
            ExprKind::Const(v) => write!(f, "(const {} {v})", self.width()),
            ExprKind::Extract { hi, lo, arg } => write!(f, "(extract {hi} {lo} {arg})"),
            ExprKind::ZeroExt(a) | ExprKind::SignExt(a) => {
                write!(f, "({} {} {a})", self.mnemonic(), self.width())
            }
            _ => {
                write!(f, "({}", self.mnemonic())?;
                for c in self.children() {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}
