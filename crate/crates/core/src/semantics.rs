//! Concrete evaluation and exhaustive truth tables.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::ir::{self, mask, BinaryOp, Design, Expr, ExprKind, OutputDef, Port, UnaryOp};
use crate::library::PrimitiveSemantics;

/// Exhaustive oracles stop at this many input bits unless told otherwise.
pub const DEFAULT_MAX_INPUT_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("expression still contains hole `{0}`")]
    HolePresent(String),
    #[error("value for `{name}` does not fit in {width} bits")]
    ValueOutOfRange { name: String, width: u32 },
    #[error("`{name}` is {actual} bits wide here but {expected} bits in the environment")]
    WidthMismatch { name: String, expected: u32, actual: u32 },
    #[error("{bits} input bits exceed the exhaustive limit of {max}")]
    TooManyInputBits { bits: u64, max: u32 },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

/// Named, width-checked concrete values.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Env {
    values: BTreeMap<String, (u32, BigUint)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, width: u32, value: impl Into<BigUint>) -> Result<(), EvalError> {
        let name = name.into();
        let value = value.into();
        if value.bits() > u64::from(width) {
            return Err(EvalError::ValueOutOfRange { name, width });
        }
        self.values.insert(name, (width, value));
        Ok(())
    }

    pub fn with(mut self, name: &str, width: u32, value: u64) -> Self {
        self.insert(name, width, value).expect("value out of range");
        self
    }

    pub fn get(&self, name: &str) -> Option<&BigUint> {
        self.values.get(name).map(|(_, v)| v)
    }

    pub fn width(&self, name: &str) -> Option<u32> {
        self.values.get(name).map(|(w, _)| *w)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(name, width, value)` in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32, &BigUint)> {
        self.values.iter().map(|(n, (w, v))| (n.as_str(), *w, v))
    }

    pub fn widths(&self) -> BTreeMap<String, u32> {
        self.values.iter().map(|(n, (w, _))| (n.clone(), *w)).collect()
    }

    /// Builds an environment from positional values over `ports`.
    pub fn from_ports(ports: &[Port], values: &[BigUint]) -> Result<Self, EvalError> {
        let mut env = Env::new();
        for (p, v) in ports.iter().zip(values) {
            env.insert(p.name.clone(), p.width, v.clone())?;
        }
        Ok(env)
    }

    /// Values for `ports` in order; absent names read as zero.
    pub fn values_for(&self, ports: &[Port]) -> Vec<BigUint> {
        ports.iter().map(|p| self.get(&p.name).cloned().unwrap_or_default()).collect()
    }
}

#[derive(Debug, Clone)]
enum Inst {
    Slot(usize),
    Const(BigUint),
    Unary(UnaryOp, usize, u32),
    Binary(BinaryOp, usize, usize, u32),
    Mux(usize, usize, usize),
    Extract(u32, u32, usize),
    Concat(usize, usize, u32),
    ZeroExt(usize),
    SignExt(usize, u32, u32),
}

/// A straight-line evaluator for a set of expressions.
///
/// Variables and holes are both read from positional slots, so the same
/// program serves simulation (no holes) and enumeration over hole values.
#[derive(Debug, Clone)]
pub struct Program {
    insts: Vec<Inst>,
    roots: Vec<usize>,
    regs: Vec<BigUint>,
}

impl Program {
    /// Compiles `roots` reading symbols from `slots`. A symbol absent from
    /// `slots` is reported as an unknown variable or a leftover hole.
    pub fn compile(roots: &[Expr], slots: &[Port]) -> Result<Self, EvalError> {
        let slot_index: BTreeMap<&str, (usize, u32)> = slots
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.as_str(), (i, p.width)))
            .collect();
        let order = ir::post_order(roots);
        let mut index = BTreeMap::new();
        let mut insts = Vec::with_capacity(order.len());
        for node in &order {
            let at = |e: &Expr| index[&e.node_id()];
            let inst = match node.kind() {
                ExprKind::Var(name) | ExprKind::Hole(name) => match slot_index.get(name.as_str()) {
                    Some(&(i, w)) if w == node.width() => Inst::Slot(i),
                    Some(&(_, w)) => {
                        return Err(EvalError::WidthMismatch {
                            name: name.clone(),
                            expected: w,
                            actual: node.width(),
                        })
                    }
                    None if matches!(node.kind(), ExprKind::Hole(_)) => return Err(EvalError::HolePresent(name.clone())),
                    None => return Err(EvalError::UnknownVar(name.clone())),
                },
                ExprKind::Const(v) => Inst::Const(v.clone()),
                ExprKind::Unary(op, a) => Inst::Unary(*op, at(a), a.width()),
                ExprKind::Binary(op, a, b) => Inst::Binary(*op, at(a), at(b), a.width()),
                ExprKind::Mux(c, a, b) => Inst::Mux(at(c), at(a), at(b)),
                ExprKind::Extract { hi, lo, arg } => Inst::Extract(*lo, hi - lo + 1, at(arg)),
                ExprKind::Concat(hi, lo) => Inst::Concat(at(hi), at(lo), lo.width()),
                ExprKind::ZeroExt(a) => Inst::ZeroExt(at(a)),
                ExprKind::SignExt(a) => Inst::SignExt(at(a), a.width(), node.width()),
            };
            index.insert(node.node_id(), insts.len());
            insts.push(inst);
        }
        let roots = roots.iter().map(|r| index[&r.node_id()]).collect();
        let regs = vec![BigUint::zero(); insts.len()];
        Ok(Program { insts, roots, regs })
    }

    /// Evaluates every root for the given slot values.
    pub fn run(&mut self, slots: &[BigUint]) -> Vec<BigUint> {
        for i in 0..self.insts.len() {
            let v = self.step(i, slots);
            self.regs[i] = v;
        }
        self.roots.iter().map(|&r| self.regs[r].clone()).collect()
    }

    fn step(&self, i: usize, slots: &[BigUint]) -> BigUint {
        let r = &self.regs;
        match &self.insts[i] {
            Inst::Slot(s) => slots[*s].clone(),
            Inst::Const(v) => v.clone(),
            Inst::Unary(op, a, w) => eval_unary(*op, &r[*a], *w),
            Inst::Binary(op, a, b, w) => eval_binary(*op, &r[*a], &r[*b], *w),
            Inst::Mux(c, a, b) => {
                if r[*c].is_zero() {
                    r[*b].clone()
                } else {
                    r[*a].clone()
                }
            }
            Inst::Extract(lo, w, a) => (&r[*a] >> *lo as usize) & mask(*w),
            Inst::Concat(hi, lo, lo_width) => (&r[*hi] << *lo_width as usize) | &r[*lo],
            Inst::ZeroExt(a) => r[*a].clone(),
            Inst::SignExt(a, from, to) => {
                let v = &r[*a];
                if v.bit(u64::from(*from) - 1) {
                    v | (mask(*to) ^ mask(*from))
                } else {
                    v.clone()
                }
            }
        }
    }
}

fn bool_bit(b: bool) -> BigUint {
    if b {
        BigUint::one()
    } else {
        BigUint::zero()
    }
}

fn eval_unary(op: UnaryOp, a: &BigUint, w: u32) -> BigUint {
    match op {
        UnaryOp::Not => a ^ mask(w),
        UnaryOp::Neg => {
            if a.is_zero() {
                BigUint::zero()
            } else {
                (BigUint::one() << w as usize) - a
            }
        }
        UnaryOp::RedAnd => bool_bit(*a == mask(w)),
        UnaryOp::RedOr => bool_bit(!a.is_zero()),
        UnaryOp::RedXor => bool_bit(a.count_ones() % 2 == 1),
    }
}

/// Shift distance if it is below the operand width.
fn shift_amount(b: &BigUint, w: u32) -> Option<usize> {
    b.to_u32().filter(|&s| s < w).map(|s| s as usize)
}

fn eval_binary(op: BinaryOp, a: &BigUint, b: &BigUint, w: u32) -> BigUint {
    match op {
        BinaryOp::And => a & b,
        BinaryOp::Or => a | b,
        BinaryOp::Xor => a ^ b,
        BinaryOp::Add => (a + b) & mask(w),
        BinaryOp::Sub => ((BigUint::one() << w as usize) + a - b) & mask(w),
        BinaryOp::Mul => (a * b) & mask(w),
        BinaryOp::Shl => match shift_amount(b, w) {
            Some(s) => (a << s) & mask(w),
            None => BigUint::zero(),
        },
        BinaryOp::LShr => match shift_amount(b, w) {
            Some(s) => a >> s,
            None => BigUint::zero(),
        },
        BinaryOp::Eq => bool_bit(a == b),
        BinaryOp::Ult => bool_bit(a < b),
    }
}

/// Evaluates a hole-free expression under `env`.
pub fn eval_concrete(expr: &Expr, env: &Env) -> Result<BigUint, EvalError> {
    let slots: Vec<Port> = env.iter().map(|(n, w, _)| Port::new(n, w)).collect();
    let values: Vec<BigUint> = env.iter().map(|(_, _, v)| v.clone()).collect();
    let mut program = Program::compile(core::slice::from_ref(expr), &slots)?;
    Ok(program.run(&values).remove(0))
}

/// Splits a row index into per-port values; the first port is most significant.
pub fn split_row(mut index: u64, ports: &[Port]) -> Vec<BigUint> {
    let mut values = vec![BigUint::zero(); ports.len()];
    for (slot, p) in values.iter_mut().zip(ports).rev() {
        let m = if p.width >= 64 { u64::MAX } else { (1u64 << p.width) - 1 };
        *slot = BigUint::from(index & m);
        index = if p.width >= 64 { 0 } else { index >> p.width };
    }
    values
}

/// Inverse of [`split_row`].
pub fn join_row(values: &[BigUint], ports: &[Port]) -> BigUint {
    let mut acc = BigUint::zero();
    for (v, p) in values.iter().zip(ports) {
        acc = (acc << p.width as usize) | v;
    }
    acc
}

pub fn total_bits(ports: &[Port]) -> u64 {
    ports.iter().map(|p| u64::from(p.width)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRow {
    pub inputs: Vec<BigUint>,
    pub outputs: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    pub rows: Vec<TruthRow>,
}

/// Enumerates every input combination in ascending concatenated order.
pub fn truth_table(inputs: &[Port], outputs: &[OutputDef], max_input_bits: u32) -> Result<TruthTable, EvalError> {
    let bits = total_bits(inputs);
    if bits > u64::from(max_input_bits) || bits >= 64 {
        return Err(EvalError::TooManyInputBits {
            bits,
            max: max_input_bits,
        });
    }
    let exprs: Vec<Expr> = outputs.iter().map(|o| o.expr.clone()).collect();
    let mut program = Program::compile(&exprs, inputs)?;
    let rows = (0..1u64 << bits)
        .map(|r| {
            let ins = split_row(r, inputs);
            let outs = program.run(&ins);
            TruthRow {
                inputs: ins,
                outputs: outs,
            }
        })
        .collect();
    Ok(TruthTable {
        inputs: inputs.to_vec(),
        outputs: outputs.iter().map(|o| Port::new(o.name.clone(), o.expr.width())).collect(),
        rows,
    })
}

pub fn design_truth_table(design: &Design, max_input_bits: u32) -> Result<TruthTable, EvalError> {
    truth_table(&design.inputs, &design.outputs, max_input_bits)
}

/// Truth table of a primitive. Parameters named in `binding` are fixed
/// (others take their defaults); with no binding every parameter is
/// enumerated as an extra input after the ports.
pub fn primitive_truth_table(
    prim: &PrimitiveSemantics,
    max_input_bits: u32,
    binding: Option<&BTreeMap<String, BigUint>>,
) -> Result<TruthTable, EvalError> {
    match binding {
        None => {
            let mut inputs = prim.inputs.clone();
            inputs.extend(prim.params.iter().map(|p| Port::new(p.name.clone(), p.width)));
            truth_table(&inputs, &prim.outputs, max_input_bits)
        }
        Some(binding) => {
            let bound = prim.bind_params(binding)?;
            truth_table(&prim.inputs, &bound, max_input_bits)
        }
    }
}

impl PrimitiveSemantics {
    /// Output expressions with parameters folded to constants.
    pub fn bind_params(&self, binding: &BTreeMap<String, BigUint>) -> Result<Vec<OutputDef>, EvalError> {
        if let Some(unknown) = binding.keys().find(|k| !self.params.iter().any(|p| &p.name == *k)) {
            return Err(EvalError::UnknownParam(unknown.to_string()));
        }
        let mut map = BTreeMap::new();
        for p in &self.params {
            let v = binding.get(&p.name).unwrap_or(&p.default);
            if v.bits() > u64::from(p.width) {
                return Err(EvalError::ValueOutOfRange {
                    name: p.name.clone(),
                    width: p.width,
                });
            }
            map.insert(p.name.clone(), Expr::constant(p.width, v.clone()));
        }
        let exprs: Vec<Expr> = self.outputs.iter().map(|o| o.expr.clone()).collect();
        let bound = ir::substitute_all(&exprs, &map, ir::SymbolKind::Vars).expect("parameter widths match by construction");
        Ok(self
            .outputs
            .iter()
            .zip(bound)
            .map(|(o, e)| OutputDef::new(o.name.clone(), e))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{BinaryOp, Expr};

    fn c(w: u32, v: u32) -> Expr {
        Expr::constant(w, v)
    }

    fn ev(e: &Expr) -> u64 {
        eval_concrete(e, &Env::new()).unwrap().to_u64().unwrap()
    }

    #[test]
    fn modular_wraparound() {
        assert_eq!(ev(&Expr::add(c(4, 15), c(4, 1))), 0);
        assert_eq!(ev(&Expr::binary(BinaryOp::Sub, c(4, 0), c(4, 1))), 15);
        assert_eq!(ev(&Expr::mul(c(4, 7), c(4, 3))), 5);
        assert_eq!(ev(&Expr::neg(c(4, 1))), 15);
        assert_eq!(ev(&Expr::neg(c(4, 0))), 0);
    }

    #[test]
    fn lut2_row_read() {
        // INIT = 8, index {I1=1, I0=1} = 3
        let idx = Expr::concat(c(1, 1), c(1, 1));
        let e = Expr::extract(0, 0, Expr::lshr(c(4, 8), idx));
        assert_eq!(ev(&e), 1);
    }

    #[test]
    fn mux_selects_else_on_zero() {
        let env = Env::new().with("a", 4, 3).with("b", 4, 9);
        let e = Expr::mux(c(1, 0), Expr::var("a", 4), Expr::var("b", 4));
        assert_eq!(eval_concrete(&e, &env).unwrap(), BigUint::from(9u32));
    }

    #[test]
    fn shifts_saturate() {
        assert_eq!(ev(&Expr::binary(BinaryOp::Shl, c(4, 1), c(8, 3))), 8);
        assert_eq!(ev(&Expr::binary(BinaryOp::Shl, c(4, 1), c(8, 4))), 0);
        assert_eq!(ev(&Expr::lshr(c(4, 8), c(8, 200))), 0);
        assert_eq!(ev(&Expr::lshr(c(4, 8), c(1, 1))), 4);
    }

    #[test]
    fn reductions_and_extensions() {
        assert_eq!(ev(&Expr::unary(UnaryOp::RedAnd, c(3, 7))), 1);
        assert_eq!(ev(&Expr::unary(UnaryOp::RedAnd, c(3, 6))), 0);
        assert_eq!(ev(&Expr::unary(UnaryOp::RedOr, c(3, 0))), 0);
        assert_eq!(ev(&Expr::unary(UnaryOp::RedXor, c(3, 7))), 1);
        assert_eq!(ev(&Expr::sext(c(3, 4), 6)), 0b111100);
        assert_eq!(ev(&Expr::sext(c(3, 3), 6)), 3);
        assert_eq!(ev(&Expr::zext(c(3, 4), 6)), 4);
        assert_eq!(ev(&Expr::concat(c(2, 2), c(3, 1))), 0b10001);
        assert_eq!(ev(&Expr::binary(BinaryOp::Ult, c(3, 2), c(3, 5))), 1);
    }

    #[test]
    fn errors() {
        let e = Expr::and(Expr::var("a", 1), Expr::hole("h", 1));
        assert_eq!(eval_concrete(&e, &Env::new()), Err(EvalError::UnknownVar("a".into())));
        let env = Env::new().with("a", 1, 1);
        assert_eq!(eval_concrete(&e, &env), Err(EvalError::HolePresent("h".into())));
        assert!(Env::new().insert("x", 2, 4u32).is_err());
    }

    #[test]
    fn xor2_table() {
        let ins = [Port::new("a", 1), Port::new("b", 1)];
        let outs = [OutputDef::new("y", Expr::xor(Expr::var("a", 1), Expr::var("b", 1)))];
        let t = truth_table(&ins, &outs, DEFAULT_MAX_INPUT_BITS).unwrap();
        let got: Vec<(u32, u32, u32)> = t
            .rows
            .iter()
            .map(|r| {
                (
                    r.inputs[0].to_u32().unwrap(),
                    r.inputs[1].to_u32().unwrap(),
                    r.outputs[0].to_u32().unwrap(),
                )
            })
            .collect();
        assert_eq!(got, vec![(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]);
    }

    #[test]
    fn table_limit() {
        let ins = [Port::new("a", 12), Port::new("b", 12)];
        let outs = [OutputDef::new("y", Expr::var("a", 12))];
        assert!(matches!(
            truth_table(&ins, &outs, DEFAULT_MAX_INPUT_BITS),
            Err(EvalError::TooManyInputBits { bits: 24, max: 20 })
        ));
    }

    #[test]
    fn row_split_join() {
        let ports = [Port::new("a", 4), Port::new("b", 4), Port::new("cin", 1)];
        let v = split_row(0b1_1110_0001, &ports);
        assert_eq!(v, vec![BigUint::from(15u32), BigUint::zero(), BigUint::one()]);
        assert_eq!(join_row(&v, &ports), BigUint::from(0b1_1110_0001u32));
    }
}
