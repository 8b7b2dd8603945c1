use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{Loc, VerilogError};

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "always",
    "always_comb",
    "always_ff",
    "always_latch",
    "initial",
    "reg",
    "logic",
    "bit",
    "integer",
    "real",
    "time",
    "function",
    "endfunction",
    "task",
    "endtask",
    "generate",
    "endgenerate",
    "genvar",
    "localparam",
    "defparam",
    "signed",
    "unsigned",
    "inout",
    "begin",
    "end",
    "if",
    "else",
    "case",
    "casez",
    "casex",
    "endcase",
    "for",
    "while",
    "specify",
    "endspecify",
    "supply0",
    "supply1",
    "tri",
    "primitive",
    "typedef",
    "struct",
    "interface",
    "package",
    "import",
];

const KEYWORDS: &[&str] = &["module", "endmodule", "input", "output", "wire", "parameter", "assign"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DeclKind {
    Input,
    Output,
    Wire,
    Param,
}

#[derive(Debug, Clone, Copy)]
struct Decl {
    kind: DeclKind,
    width: u32,
    lsb: u32,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    allow_instances: bool,
    decls: BTreeMap<String, Decl>,
}

pub(crate) fn parse_module(src: &str, allow_instances: bool) -> Result<ModuleAst, VerilogError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        allow_instances,
        decls: BTreeMap::new(),
    };
    let mut module = p.module()?;
    p.resolve(&mut module)?;
    Ok(module)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, VerilogError> {
        if let Tok::Unsupported(construct) = self.peek() {
            return Err(VerilogError::Unsupported {
                loc: self.loc(),
                construct: construct.clone(),
            });
        }
        Err(VerilogError::Syntax {
            loc: self.loc(),
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => alloc::format!("`{s}`"),
            Tok::Number { .. } => "number".into(),
            Tok::Sym(s) => alloc::format!("`{s}`"),
            Tok::Unsupported(s) => alloc::format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), VerilogError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            let found = self.describe();
            self.error(alloc::format!("expected `{s}`, found {found}"))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), VerilogError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            let found = self.describe();
            self.error(alloc::format!("expected `{kw}`, found {found}"))
        }
    }

    fn check_unsupported(&self) -> Result<(), VerilogError> {
        if let Tok::Ident(s) = self.peek() {
            if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                return Err(VerilogError::Unsupported {
                    loc: self.loc(),
                    construct: s.clone(),
                });
            }
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<(String, Loc), VerilogError> {
        self.check_unsupported()?;
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok((s, loc))
            }
            _ => {
                let found = self.describe();
                self.error(alloc::format!("expected identifier, found {found}"))
            }
        }
    }

    fn number(&mut self) -> Result<(Option<u32>, BigUint), VerilogError> {
        match self.peek().clone() {
            Tok::Number { width, value } => {
                self.bump();
                Ok((width, value))
            }
            _ => {
                let found = self.describe();
                self.error(alloc::format!("expected number, found {found}"))
            }
        }
    }

    fn small_number(&mut self) -> Result<u32, VerilogError> {
        let loc = self.loc();
        let (_, v) = self.number()?;
        v.to_u32().ok_or(VerilogError::Syntax {
            loc,
            message: "number too large".into(),
        })
    }

    fn declare(&mut self, name: &str, loc: Loc, decl: Decl) -> Result<(), VerilogError> {
        if self.decls.insert(name.to_string(), decl).is_some() {
            return Err(VerilogError::Redeclared {
                loc,
                name: name.to_string(),
            });
        }
        Ok(())
    }

    /// `[msb:lsb]` -> (width, lsb); absent range is a single bit.
    fn range(&mut self) -> Result<(u32, u32), VerilogError> {
        if !self.is_sym("[") {
            return Ok((1, 0));
        }
        let loc = self.loc();
        self.bump();
        let msb = self.small_number()?;
        self.expect_sym(":")?;
        let lsb = self.small_number()?;
        self.expect_sym("]")?;
        if msb < lsb {
            return Err(VerilogError::Unsupported {
                loc,
                construct: "ascending range".into(),
            });
        }
        Ok((msb - lsb + 1, lsb))
    }

    fn module(&mut self) -> Result<ModuleAst, VerilogError> {
        self.check_unsupported()?;
        self.expect_kw("module")?;
        let (name, _) = self.ident()?;
        let mut m = ModuleAst {
            name,
            params: Vec::new(),
            ports: Vec::new(),
            wires: Vec::new(),
            assigns: Vec::new(),
            instances: Vec::new(),
        };
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            loop {
                self.eat_kw("parameter");
                self.param_decl(&mut m)?;
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym("(")?;
        if !self.is_sym(")") {
            let mut direction = None;
            loop {
                self.check_unsupported()?;
                if self.eat_kw("input") {
                    direction = Some(Direction::Input);
                } else if self.eat_kw("output") {
                    direction = Some(Direction::Output);
                }
                let Some(dir) = direction else {
                    return Err(VerilogError::Unsupported {
                        loc: self.loc(),
                        construct: "non-ANSI port list".into(),
                    });
                };
                self.eat_kw("wire");
                self.check_unsupported()?;
                let (width, lsb) = self.range()?;
                let (pname, loc) = self.ident()?;
                let kind = if dir == Direction::Input {
                    DeclKind::Input
                } else {
                    DeclKind::Output
                };
                self.declare(&pname, loc, Decl { kind, width, lsb })?;
                m.ports.push(PortDecl {
                    direction: dir,
                    name: pname,
                    width,
                    span: Span(loc),
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;

        loop {
            self.check_unsupported()?;
            let loc = self.loc();
            match self.peek().clone() {
                Tok::Ident(kw) if kw == "endmodule" => {
                    self.bump();
                    break;
                }
                Tok::Ident(kw) if kw == "parameter" => {
                    self.bump();
                    loop {
                        self.param_decl(&mut m)?;
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                }
                Tok::Ident(kw) if kw == "wire" => {
                    self.bump();
                    self.check_unsupported()?;
                    let (width, lsb) = self.range()?;
                    loop {
                        let (wname, wloc) = self.ident()?;
                        self.declare(
                            &wname,
                            wloc,
                            Decl {
                                kind: DeclKind::Wire,
                                width,
                                lsb,
                            },
                        )?;
                        m.wires.push(WireDecl {
                            name: wname.clone(),
                            width,
                            span: Span(wloc),
                        });
                        if self.eat_sym("=") {
                            let rhs = self.expr()?;
                            m.assigns.push(Assign {
                                lhs: LValue {
                                    name: wname,
                                    select: None,
                                    span: Span(wloc),
                                },
                                rhs,
                                span: Span(wloc),
                            });
                        }
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                }
                Tok::Ident(kw) if kw == "assign" => {
                    self.bump();
                    loop {
                        let aloc = self.loc();
                        let lhs = self.lvalue()?;
                        self.expect_sym("=")?;
                        let rhs = self.expr()?;
                        m.assigns.push(Assign {
                            lhs,
                            rhs,
                            span: Span(aloc),
                        });
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                }
                Tok::Ident(kw) if kw == "input" || kw == "output" => {
                    return Err(VerilogError::Unsupported {
                        loc,
                        construct: "port declaration in module body".into(),
                    });
                }
                Tok::Ident(kw) if kw == "module" => {
                    return Err(VerilogError::Unsupported {
                        loc,
                        construct: "nested module".into(),
                    });
                }
                Tok::Ident(_) => {
                    if !self.allow_instances {
                        return Err(VerilogError::Unsupported {
                            loc,
                            construct: "module instantiation".into(),
                        });
                    }
                    let inst = self.instance()?;
                    m.instances.push(inst);
                }
                Tok::Eof => return self.error("missing `endmodule`"),
                _ => {
                    let found = self.describe();
                    return self.error(alloc::format!("unexpected {found} in module body"));
                }
            }
        }
        if !matches!(self.peek(), Tok::Eof) {
            if self.is_kw("module") {
                return Err(VerilogError::Unsupported {
                    loc: self.loc(),
                    construct: "multiple modules".into(),
                });
            }
            return self.error("trailing input after `endmodule`");
        }
        Ok(m)
    }

    fn param_decl(&mut self, m: &mut ModuleAst) -> Result<(), VerilogError> {
        self.check_unsupported()?;
        let explicit = self.is_sym("[");
        let (range_width, lsb) = self.range()?;
        let (name, loc) = self.ident()?;
        self.expect_sym("=")?;
        if let Tok::Sym("\"") = self.peek() {
            return Err(VerilogError::Unsupported {
                loc,
                construct: "string parameter".into(),
            });
        }
        let vloc = self.loc();
        let (lit_width, value) = match self.peek() {
            Tok::Number { .. } => self.number()?,
            _ => {
                return Err(VerilogError::Unsupported {
                    loc: vloc,
                    construct: "non-literal parameter value".into(),
                })
            }
        };
        if lsb != 0 {
            return Err(VerilogError::Unsupported {
                loc,
                construct: "parameter range with nonzero lsb".into(),
            });
        }
        let width = if explicit {
            range_width
        } else {
            lit_width.unwrap_or(32)
        };
        if value.bits() > u64::from(width) {
            return Err(VerilogError::Syntax {
                loc: vloc,
                message: alloc::format!("default of `{name}` does not fit in {width} bits"),
            });
        }
        self.declare(
            &name,
            loc,
            Decl {
                kind: DeclKind::Param,
                width,
                lsb: 0,
            },
        )?;
        m.params.push(ParamDecl {
            name,
            width,
            default: value,
            span: Span(loc),
        });
        Ok(())
    }

    fn lvalue(&mut self) -> Result<LValue, VerilogError> {
        let (name, loc) = self.ident()?;
        let select = if self.eat_sym("[") {
            let msb = self.small_number()?;
            let lsb = if self.eat_sym(":") { self.small_number()? } else { msb };
            self.expect_sym("]")?;
            Some((msb, lsb))
        } else {
            None
        };
        Ok(LValue {
            name,
            select,
            span: Span(loc),
        })
    }

    fn instance(&mut self) -> Result<InstanceDecl, VerilogError> {
        let (primitive, loc) = self.ident()?;
        let mut params = Vec::new();
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            if !self.is_sym(")") {
                loop {
                    self.expect_sym(".")?;
                    let (name, _) = self.ident()?;
                    self.expect_sym("(")?;
                    let (width, value) = self.number()?;
                    self.expect_sym(")")?;
                    params.push(ParamOverride { name, width, value });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        let (name, _) = self.ident()?;
        self.expect_sym("(")?;
        let mut connections = Vec::new();
        if !self.is_sym(")") {
            loop {
                if !self.is_sym(".") {
                    return Err(VerilogError::Unsupported {
                        loc: self.loc(),
                        construct: "positional port connection".into(),
                    });
                }
                self.bump();
                let (pin, _) = self.ident()?;
                self.expect_sym("(")?;
                let e = if self.is_sym(")") { None } else { Some(self.expr()?) };
                self.expect_sym(")")?;
                connections.push((pin, e));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(InstanceDecl {
            primitive,
            name,
            params,
            connections,
            span: Span(loc),
        })
    }

    fn expr(&mut self) -> Result<VExpr, VerilogError> {
        let cond = self.binary(1)?;
        if self.eat_sym("?") {
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(VExpr::Ternary(Box::new(cond), Box::new(a), Box::new(b)));
        }
        Ok(cond)
    }

    fn binary_op(&self) -> Option<(VBinaryOp, u8)> {
        let Tok::Sym(s) = self.peek() else { return None };
        Some(match *s {
            "|" => (VBinaryOp::Or, 1),
            "^" => (VBinaryOp::Xor, 2),
            "&" => (VBinaryOp::And, 3),
            "==" => (VBinaryOp::Eq, 4),
            "!=" => (VBinaryOp::Ne, 4),
            "<" => (VBinaryOp::Lt, 5),
            "<<" => (VBinaryOp::Shl, 6),
            ">>" => (VBinaryOp::Shr, 6),
            "+" => (VBinaryOp::Add, 7),
            "-" => (VBinaryOp::Sub, 7),
            "*" => (VBinaryOp::Mul, 8),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<VExpr, VerilogError> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = VExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<VExpr, VerilogError> {
        let op = match self.peek() {
            Tok::Sym("~") => VUnaryOp::Not,
            Tok::Sym("-") => VUnaryOp::Neg,
            Tok::Sym("+") => VUnaryOp::Plus,
            Tok::Sym("&") => VUnaryOp::RedAnd,
            Tok::Sym("|") => VUnaryOp::RedOr,
            Tok::Sym("^") => VUnaryOp::RedXor,
            _ => return self.primary(),
        };
        self.bump();
        let a = self.unary()?;
        Ok(VExpr::Unary(op, Box::new(a)))
    }

    fn primary(&mut self) -> Result<VExpr, VerilogError> {
        self.check_unsupported()?;
        match self.peek().clone() {
            Tok::Number { width, value } => {
                self.bump();
                Ok(VExpr::Literal { width, value })
            }
            Tok::Ident(_) => {
                let (name, loc) = self.ident()?;
                if !self.eat_sym("[") {
                    return Ok(VExpr::Ident(name, Span(loc)));
                }
                let index = self.expr()?;
                if self.eat_sym(":") {
                    let lsb = self.small_number()?;
                    self.expect_sym("]")?;
                    let msb = match index {
                        VExpr::Literal { value, .. } => value.to_u32().unwrap_or(u32::MAX),
                        _ => {
                            return Err(VerilogError::Unsupported {
                                loc,
                                construct: "non-constant part select".into(),
                            })
                        }
                    };
                    return Ok(VExpr::Slice {
                        name,
                        msb,
                        lsb,
                        span: Span(loc),
                    });
                }
                self.expect_sym("]")?;
                Ok(VExpr::Index {
                    name,
                    index: Box::new(index),
                    span: Span(loc),
                })
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                let replicate = matches!(self.peek(), Tok::Number { .. }) && matches!(self.peek_at(1), Tok::Sym("{"));
                if replicate {
                    let count = self.small_number()?;
                    self.expect_sym("{")?;
                    let items = self.expr_list()?;
                    self.expect_sym("}")?;
                    self.expect_sym("}")?;
                    if count == 0 {
                        return self.error("zero replication count");
                    }
                    return Ok(VExpr::Replicate(count, items));
                }
                let items = self.expr_list()?;
                self.expect_sym("}")?;
                Ok(VExpr::Concat(items))
            }
            _ => {
                let found = self.describe();
                self.error(alloc::format!("expected expression, found {found}"))
            }
        }
    }

    fn expr_list(&mut self) -> Result<Vec<VExpr>, VerilogError> {
        let mut items = Vec::new();
        loop {
            items.push(self.expr()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        Ok(items)
    }

    // --- declaration resolution and range normalization ---

    fn lookup(&self, name: &str, loc: Loc) -> Result<Decl, VerilogError> {
        self.decls.get(name).copied().ok_or_else(|| VerilogError::Undeclared {
            loc,
            name: name.to_string(),
        })
    }

    fn normalize_select(&self, name: &str, loc: Loc, msb: u32, lsb: u32) -> Result<(u32, u32), VerilogError> {
        let d = self.lookup(name, loc)?;
        if msb < lsb || lsb < d.lsb || msb - d.lsb >= d.width {
            return Err(VerilogError::SelectOutOfRange {
                loc,
                name: name.to_string(),
                msb,
                lsb,
                width: d.width,
            });
        }
        Ok((msb - d.lsb, lsb - d.lsb))
    }

    fn resolve(&self, m: &mut ModuleAst) -> Result<(), VerilogError> {
        for a in &mut m.assigns {
            self.resolve_lvalue(&mut a.lhs)?;
            self.resolve_expr(&mut a.rhs)?;
        }
        for inst in &mut m.instances {
            for (_, e) in inst.connections.iter_mut() {
                if let Some(e) = e {
                    self.resolve_expr(e)?;
                }
            }
        }
        Ok(())
    }

    fn resolve_lvalue(&self, lv: &mut LValue) -> Result<(), VerilogError> {
        let loc = lv.span.0;
        let d = self.lookup(&lv.name, loc)?;
        if !matches!(d.kind, DeclKind::Output | DeclKind::Wire) {
            return Err(VerilogError::Syntax {
                loc,
                message: alloc::format!("cannot assign to `{}`", lv.name),
            });
        }
        if let Some((msb, lsb)) = lv.select {
            lv.select = Some(self.normalize_select(&lv.name, loc, msb, lsb)?);
        }
        Ok(())
    }

    fn resolve_expr(&self, e: &mut VExpr) -> Result<(), VerilogError> {
        match e {
            VExpr::Ident(name, span) => {
                self.lookup(name, span.0)?;
            }
            VExpr::Literal { .. } => {}
            VExpr::Index { name, index, span } => {
                let d = self.lookup(name, span.0)?;
                if let VExpr::Literal { value, .. } = index.as_mut() {
                    let i = value.to_u32().unwrap_or(u32::MAX);
                    let (n, _) = self.normalize_select(name, span.0, i, i)?;
                    *value = BigUint::from(n);
                } else {
                    if d.lsb != 0 {
                        return Err(VerilogError::Unsupported {
                            loc: span.0,
                            construct: "dynamic select on a vector with nonzero lsb".into(),
                        });
                    }
                    self.resolve_expr(index)?;
                }
            }
            VExpr::Slice { name, msb, lsb, span } => {
                let (m, l) = self.normalize_select(name, span.0, *msb, *lsb)?;
                *msb = m;
                *lsb = l;
            }
            VExpr::Unary(_, a) => self.resolve_expr(a)?,
            VExpr::Binary(_, a, b) => {
                self.resolve_expr(a)?;
                self.resolve_expr(b)?;
            }
            VExpr::Ternary(c, a, b) => {
                self.resolve_expr(c)?;
                self.resolve_expr(a)?;
                self.resolve_expr(b)?;
            }
            VExpr::Concat(items) | VExpr::Replicate(_, items) => {
                for i in items {
                    self.resolve_expr(i)?;
                }
            }
        }
        Ok(())
    }
}
