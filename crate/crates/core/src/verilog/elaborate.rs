//! Lowering of a parsed module to bitvector expressions.
//!
//! Each output is built by substituting the drivers of the signals it reads,
//! recursively, so the result refers only to inputs and parameters.
//!
//! Expression sizing follows a simplified rule: operands of arithmetic and
//! bitwise operators are zero-extended to the wider of the assignment target
//! and the operands themselves; comparison operands are extended to their
//! mutual maximum; reduction operands, concatenation items, shift amounts and
//! ternary conditions are self-determined. A ternary condition wider than one
//! bit is reduced with OR.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::ast::*;
use super::{Loc, VerilogError};
use crate::ir::{self, BinaryOp, Design, Expr, OutputDef, Port, SymbolKind, UnaryOp};
use crate::library::{Library, Param, PrimitiveSemantics};

/// How parameters are treated during elaboration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamMode {
    /// Parameters stay free variables; the result is a primitive.
    Symbolic,
    /// Parameters are folded to constants (defaults where unbound); the
    /// result is a design.
    Bound(BTreeMap<String, BigUint>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Elaborated {
    Primitive(PrimitiveSemantics),
    Design(Design),
}

impl Elaborated {
    pub fn into_primitive(self) -> Option<PrimitiveSemantics> {
        match self {
            Elaborated::Primitive(p) => Some(p),
            Elaborated::Design(_) => None,
        }
    }

    pub fn into_design(self) -> Option<Design> {
        match self {
            Elaborated::Design(d) => Some(d),
            Elaborated::Primitive(_) => None,
        }
    }
}

/// Elaborates a module without submodule instances.
pub fn elaborate(ast: &ModuleAst, mode: &ParamMode) -> Result<Elaborated, VerilogError> {
    if let Some(inst) = ast.instances.first() {
        return Err(VerilogError::Unsupported {
            loc: inst.span.0,
            construct: "module instantiation".into(),
        });
    }
    Elab::new(ast, None, mode)?.run(mode)
}

/// Elaborates a module whose instances refer to primitives in `library`;
/// each instance is replaced by the primitive's semantics.
pub fn elaborate_with_library(ast: &ModuleAst, mode: &ParamMode, library: &Library) -> Result<Elaborated, VerilogError> {
    Elab::new(ast, Some(library), mode)?.run(mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SignalKind {
    Input,
    Output,
    Wire,
    Param,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Driver {
    Assign(usize),
    Instance(usize, String),
}

type BitDriver = Option<(Driver, u32)>;

struct Elab<'a> {
    ast: &'a ModuleAst,
    library: Option<&'a Library>,
    signals: BTreeMap<String, (SignalKind, u32)>,
    params: BTreeMap<String, Expr>,
    drivers: BTreeMap<String, Vec<BitDriver>>,
    values: BTreeMap<String, Expr>,
    driver_values: BTreeMap<Driver, Expr>,
    instance_outputs: BTreeMap<usize, BTreeMap<String, Expr>>,
    stack: Vec<String>,
}

impl<'a> Elab<'a> {
    fn new(ast: &'a ModuleAst, library: Option<&'a Library>, mode: &ParamMode) -> Result<Self, VerilogError> {
        let mut signals = BTreeMap::new();
        for p in &ast.ports {
            let kind = match p.direction {
                Direction::Input => SignalKind::Input,
                Direction::Output => SignalKind::Output,
            };
            signals.insert(p.name.clone(), (kind, p.width));
        }
        for w in &ast.wires {
            signals.insert(w.name.clone(), (SignalKind::Wire, w.width));
        }
        let mut params = BTreeMap::new();
        if let ParamMode::Bound(values) = mode {
            if let Some(unknown) = values.keys().find(|k| ast.param(k).is_none()) {
                return Err(VerilogError::UnknownParam(unknown.clone()));
            }
        }
        for p in &ast.params {
            signals.insert(p.name.clone(), (SignalKind::Param, p.width));
            let e = match mode {
                ParamMode::Symbolic => Expr::var(p.name.clone(), p.width),
                ParamMode::Bound(values) => {
                    let v = values.get(&p.name).unwrap_or(&p.default);
                    if v.bits() > u64::from(p.width) {
                        return Err(VerilogError::Ir(ir::IrError::ConstOutOfRange {
                            width: p.width,
                            value: v.to_string(),
                        }));
                    }
                    Expr::constant(p.width, v.clone())
                }
            };
            params.insert(p.name.clone(), e);
        }
        let mut elab = Elab {
            ast,
            library,
            signals,
            params,
            drivers: BTreeMap::new(),
            values: BTreeMap::new(),
            driver_values: BTreeMap::new(),
            instance_outputs: BTreeMap::new(),
            stack: Vec::new(),
        };
        elab.collect_drivers()?;
        Ok(elab)
    }

    fn run(mut self, mode: &ParamMode) -> Result<Elaborated, VerilogError> {
        // evaluate every driver so that cycles and width errors surface even
        // in logic that does not reach an output
        for i in 0..self.ast.assigns.len() {
            self.driver_value(&Driver::Assign(i))?;
        }
        for i in 0..self.ast.instances.len() {
            self.instance(i)?;
        }
        let mut outputs = Vec::new();
        for p in self.ast.outputs() {
            outputs.push(OutputDef::new(p.name.clone(), self.signal(&p.name, p.span.0)?));
        }
        let inputs: Vec<Port> = self.ast.inputs().map(|p| Port::new(p.name.clone(), p.width)).collect();
        let result = match mode {
            ParamMode::Symbolic => {
                let prim = PrimitiveSemantics {
                    name: self.ast.name.clone(),
                    inputs,
                    params: self
                        .ast
                        .params
                        .iter()
                        .map(|p| Param {
                            name: p.name.clone(),
                            width: p.width,
                            default: p.default.clone(),
                        })
                        .collect(),
                    outputs,
                };
                prim.validate()?;
                Elaborated::Primitive(prim)
            }
            ParamMode::Bound(_) => {
                let design = Design {
                    name: self.ast.name.clone(),
                    inputs,
                    outputs,
                };
                design.validate()?;
                Elaborated::Design(design)
            }
        };
        Ok(result)
    }

    fn collect_drivers(&mut self) -> Result<(), VerilogError> {
        for (k, (kind, width)) in &self.signals {
            if matches!(kind, SignalKind::Output | SignalKind::Wire) {
                self.drivers.insert(k.clone(), alloc::vec![None; *width as usize]);
            }
        }
        let ast = self.ast;
        for (i, a) in ast.assigns.iter().enumerate() {
            let (hi, lo) = self.target_bits(&a.lhs)?;
            for bit in lo..=hi {
                self.drive(&a.lhs.name, bit, Driver::Assign(i), bit - lo)?;
            }
        }
        for (i, inst) in ast.instances.iter().enumerate() {
            let prim = self.primitive(inst)?;
            for (pin, conn) in &inst.connections {
                if prim.input(pin).is_some() {
                    continue;
                }
                let Some(out) = prim.output(pin) else {
                    return Err(VerilogError::UnknownPin {
                        loc: inst.span.0,
                        primitive: prim.name.clone(),
                        pin: pin.clone(),
                    });
                };
                let Some(conn) = conn else { continue };
                let lv = as_lvalue(conn).ok_or_else(|| VerilogError::InvalidConnection {
                    loc: inst.span.0,
                    instance: inst.name.clone(),
                    pin: pin.clone(),
                })?;
                match self.signals.get(&lv.name) {
                    Some((SignalKind::Output | SignalKind::Wire, _)) => {}
                    _ => {
                        return Err(VerilogError::InvalidConnection {
                            loc: inst.span.0,
                            instance: inst.name.clone(),
                            pin: pin.clone(),
                        })
                    }
                }
                let (hi, lo) = self.target_bits(&lv)?;
                let n = (hi - lo + 1).min(out.expr.width());
                for j in 0..n {
                    self.drive(&lv.name, lo + j, Driver::Instance(i, pin.clone()), j)?;
                }
            }
        }
        Ok(())
    }

    fn target_bits(&self, lv: &LValue) -> Result<(u32, u32), VerilogError> {
        let width = self.signals[&lv.name].1;
        Ok(lv.select.unwrap_or((width - 1, 0)))
    }

    fn drive(&mut self, name: &str, bit: u32, driver: Driver, driver_bit: u32) -> Result<(), VerilogError> {
        let slots = self.drivers.get_mut(name).expect("resolved at parse time");
        let slot = &mut slots[bit as usize];
        if slot.is_some() {
            return Err(VerilogError::MultipleDrivers {
                name: name.to_string(),
                bit,
            });
        }
        *slot = Some((driver, driver_bit));
        Ok(())
    }

    fn primitive(&self, inst: &InstanceDecl) -> Result<&'a PrimitiveSemantics, VerilogError> {
        let unknown = || VerilogError::UnknownPrimitive {
            loc: inst.span.0,
            name: inst.primitive.clone(),
        };
        self.library.ok_or_else(unknown)?.get(&inst.primitive).ok_or_else(unknown)
    }

    fn signal(&mut self, name: &str, loc: Loc) -> Result<Expr, VerilogError> {
        let Some(&(kind, width)) = self.signals.get(name) else {
            return Err(VerilogError::Undeclared {
                loc,
                name: name.to_string(),
            });
        };
        match kind {
            SignalKind::Input => return Ok(Expr::var(name, width)),
            SignalKind::Param => return Ok(self.params[name].clone()),
            SignalKind::Output | SignalKind::Wire => {}
        }
        if let Some(v) = self.values.get(name) {
            return Ok(v.clone());
        }
        if let Some(pos) = self.stack.iter().position(|s| s == name) {
            let mut cycle: Vec<String> = self.stack[pos..].to_vec();
            cycle.push(name.to_string());
            return Err(VerilogError::CombinationalCycle(cycle));
        }
        self.stack.push(name.to_string());
        let result = self.build_signal(name);
        self.stack.pop();
        let value = result?;
        self.values.insert(name.to_string(), value.clone());
        Ok(value)
    }

    fn build_signal(&mut self, name: &str) -> Result<Expr, VerilogError> {
        let bits = self.drivers[name].clone();
        let mut segments = Vec::new();
        let mut i = 0;
        while i < bits.len() {
            let Some((driver, lo)) = bits[i].clone() else {
                return Err(VerilogError::Undriven {
                    name: name.to_string(),
                    bit: i as u32,
                });
            };
            let mut hi = lo;
            let mut j = i + 1;
            while j < bits.len() && bits[j].as_ref().is_some_and(|(d, b)| *d == driver && *b == hi + 1) {
                hi += 1;
                j += 1;
            }
            let value = self.driver_value(&driver)?;
            let segment = if lo == 0 && hi + 1 == value.width() {
                value
            } else {
                Expr::extract(hi, lo, value)
            };
            segments.push(segment);
            i = j;
        }
        segments.reverse();
        Ok(Expr::concat_all(segments).expect("signals have at least one bit"))
    }

    fn driver_value(&mut self, driver: &Driver) -> Result<Expr, VerilogError> {
        if let Some(v) = self.driver_values.get(driver) {
            return Ok(v.clone());
        }
        let value = match driver {
            Driver::Assign(i) => {
                let a = &self.ast.assigns[*i];
                let (hi, lo) = self.target_bits(&a.lhs)?;
                self.lower_to_width(&a.rhs, hi - lo + 1)?
            }
            Driver::Instance(i, pin) => self.instance(*i)?[pin].clone(),
        };
        self.driver_values.insert(driver.clone(), value.clone());
        Ok(value)
    }

    fn instance(&mut self, i: usize) -> Result<BTreeMap<String, Expr>, VerilogError> {
        if let Some(outs) = self.instance_outputs.get(&i) {
            return Ok(outs.clone());
        }
        let inst = &self.ast.instances[i];
        let prim = self.primitive(inst)?;
        let loc = inst.span.0;
        let mut bindings = BTreeMap::new();
        for ov in &inst.params {
            let Some(p) = prim.param(&ov.name) else {
                return Err(VerilogError::UnknownPin {
                    loc,
                    primitive: prim.name.clone(),
                    pin: ov.name.clone(),
                });
            };
            if ov.value.bits() > u64::from(p.width) {
                return Err(VerilogError::Ir(ir::IrError::ConstOutOfRange {
                    width: p.width,
                    value: ov.value.to_string(),
                }));
            }
            bindings.insert(p.name.clone(), Expr::constant(p.width, ov.value.clone()));
        }
        for p in &prim.params {
            bindings
                .entry(p.name.clone())
                .or_insert_with(|| Expr::constant(p.width, p.default.clone()));
        }
        for pin in &prim.inputs {
            let conn = inst.connections.iter().find(|(n, _)| n == &pin.name).and_then(|(_, e)| e.as_ref());
            let Some(conn) = conn else {
                return Err(VerilogError::UnconnectedPin {
                    loc,
                    instance: inst.name.clone(),
                    pin: pin.name.clone(),
                });
            };
            let value = self.lower_to_width(conn, pin.width)?;
            bindings.insert(pin.name.clone(), value);
        }
        let exprs: Vec<Expr> = prim.outputs.iter().map(|o| o.expr.clone()).collect();
        let inlined = ir::substitute_all(&exprs, &bindings, SymbolKind::Vars)?;
        let outs: BTreeMap<String, Expr> = prim.outputs.iter().map(|o| o.name.clone()).zip(inlined).collect();
        self.instance_outputs.insert(i, outs.clone());
        Ok(outs)
    }

    /// Lowers `e` in a context of `width` bits, truncating if the expression
    /// is wider.
    fn lower_to_width(&mut self, e: &VExpr, width: u32) -> Result<Expr, VerilogError> {
        let ctx = width.max(self.self_width(e)?);
        let v = self.lower(e, ctx)?;
        Ok(if ctx > width { Expr::extract(width - 1, 0, v) } else { v })
    }

    fn self_width(&self, e: &VExpr) -> Result<u32, VerilogError> {
        Ok(match e {
            VExpr::Ident(name, span) => {
                self.signals
                    .get(name)
                    .ok_or_else(|| VerilogError::Undeclared {
                        loc: span.0,
                        name: name.clone(),
                    })?
                    .1
            }
            VExpr::Literal { width, value } => width.unwrap_or_else(|| (value.bits() as u32).max(1)),
            VExpr::Index { .. } => 1,
            VExpr::Slice { msb, lsb, .. } => msb - lsb + 1,
            VExpr::Unary(op, a) => match op {
                VUnaryOp::Not | VUnaryOp::Neg | VUnaryOp::Plus => self.self_width(a)?,
                _ => 1,
            },
            VExpr::Binary(op, a, b) => match op {
                VBinaryOp::Eq | VBinaryOp::Ne | VBinaryOp::Lt => 1,
                VBinaryOp::Shl | VBinaryOp::Shr => self.self_width(a)?,
                _ => self.self_width(a)?.max(self.self_width(b)?),
            },
            VExpr::Ternary(_, a, b) => self.self_width(a)?.max(self.self_width(b)?),
            VExpr::Concat(items) => self.items_width(items)?,
            VExpr::Replicate(n, items) => n.saturating_mul(self.items_width(items)?),
        })
    }

    fn items_width(&self, items: &[VExpr]) -> Result<u32, VerilogError> {
        items.iter().try_fold(0u32, |acc, i| Ok(acc.saturating_add(self.self_width(i)?)))
    }

    fn lower(&mut self, e: &VExpr, w: u32) -> Result<Expr, VerilogError> {
        let ext = |x: Expr| if x.width() == w { x } else { Expr::zext(x, w) };
        Ok(match e {
            VExpr::Ident(name, span) => ext(self.signal(name, span.0)?),
            VExpr::Literal { value, .. } => {
                let sw = self.self_width(e)?;
                ext(Expr::constant(sw, value.clone()))
            }
            VExpr::Index { name, index, span } => {
                let base = self.signal(name, span.0)?;
                let bit = match index.as_ref() {
                    VExpr::Literal { value, .. } => {
                        let i = value.to_u32().unwrap_or(u32::MAX);
                        if i >= base.width() {
                            return Err(VerilogError::SelectOutOfRange {
                                loc: span.0,
                                name: name.clone(),
                                msb: i,
                                lsb: i,
                                width: base.width(),
                            });
                        }
                        Expr::extract(i, i, base)
                    }
                    dynamic => {
                        let sw = self.self_width(dynamic)?;
                        let mut idx = self.lower(dynamic, sw)?;
                        if idx.width() < base.width() {
                            idx = Expr::zext(idx, base.width());
                        }
                        Expr::extract(0, 0, Expr::lshr(base, idx))
                    }
                };
                ext(bit)
            }
            VExpr::Slice { name, msb, lsb, .. } => {
                let base = self.signal(name, Loc::default())?;
                ext(Expr::extract(*msb, *lsb, base))
            }
            VExpr::Unary(op, a) => match op {
                VUnaryOp::Not => Expr::not(self.lower(a, w)?),
                VUnaryOp::Neg => Expr::neg(self.lower(a, w)?),
                VUnaryOp::Plus => self.lower(a, w)?,
                VUnaryOp::RedAnd | VUnaryOp::RedOr | VUnaryOp::RedXor => {
                    let sw = self.self_width(a)?;
                    let inner = self.lower(a, sw)?;
                    let op = match op {
                        VUnaryOp::RedAnd => UnaryOp::RedAnd,
                        VUnaryOp::RedOr => UnaryOp::RedOr,
                        _ => UnaryOp::RedXor,
                    };
                    ext(Expr::unary(op, inner))
                }
            },
            VExpr::Binary(op, a, b) => match op {
                VBinaryOp::Eq | VBinaryOp::Ne | VBinaryOp::Lt => {
                    let m = self.self_width(a)?.max(self.self_width(b)?);
                    let (x, y) = (self.lower(a, m)?, self.lower(b, m)?);
                    let cmp = match op {
                        VBinaryOp::Eq => Expr::eq(x, y),
                        VBinaryOp::Ne => Expr::not(Expr::eq(x, y)),
                        _ => Expr::binary(BinaryOp::Ult, x, y),
                    };
                    ext(cmp)
                }
                VBinaryOp::Shl | VBinaryOp::Shr => {
                    let x = self.lower(a, w)?;
                    let sw = self.self_width(b)?;
                    let y = self.lower(b, sw)?;
                    let op = if *op == VBinaryOp::Shl { BinaryOp::Shl } else { BinaryOp::LShr };
                    Expr::binary(op, x, y)
                }
                _ => {
                    let x = self.lower(a, w)?;
                    let y = self.lower(b, w)?;
                    let op = match op {
                        VBinaryOp::And => BinaryOp::And,
                        VBinaryOp::Or => BinaryOp::Or,
                        VBinaryOp::Xor => BinaryOp::Xor,
                        VBinaryOp::Add => BinaryOp::Add,
                        VBinaryOp::Sub => BinaryOp::Sub,
                        _ => BinaryOp::Mul,
                    };
                    Expr::binary(op, x, y)
                }
            },
            VExpr::Ternary(c, a, b) => {
                let sw = self.self_width(c)?;
                let mut cond = self.lower(c, sw)?;
                if cond.width() > 1 {
                    cond = Expr::unary(UnaryOp::RedOr, cond);
                }
                Expr::mux(cond, self.lower(a, w)?, self.lower(b, w)?)
            }
            VExpr::Concat(items) => ext(self.concat(items)?),
            VExpr::Replicate(n, items) => {
                let one = self.concat(items)?;
                let all = Expr::concat_all((0..*n).map(|_| one.clone())).expect("count is nonzero");
                ext(all)
            }
        })
    }

    fn concat(&mut self, items: &[VExpr]) -> Result<Expr, VerilogError> {
        let mut parts = Vec::with_capacity(items.len());
        for i in items {
            let sw = self.self_width(i)?;
            parts.push(self.lower(i, sw)?);
        }
        Ok(Expr::concat_all(parts).expect("concatenation has at least one item"))
    }
}

fn as_lvalue(e: &VExpr) -> Option<LValue> {
    match e {
        VExpr::Ident(name, span) => Some(LValue {
            name: name.clone(),
            select: None,
            span: *span,
        }),
        VExpr::Index { name, index, span } => match index.as_ref() {
            VExpr::Literal { value, .. } => {
                let i = value.to_u32()?;
                Some(LValue {
                    name: name.clone(),
                    select: Some((i, i)),
                    span: *span,
                })
            }
            _ => None,
        },
        VExpr::Slice { name, msb, lsb, span } => Some(LValue {
            name: name.clone(),
            select: Some((*msb, *lsb)),
            span: *span,
        }),
        _ => None,
    }
}
