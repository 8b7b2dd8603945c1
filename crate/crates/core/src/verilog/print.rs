use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use num_bigint::BigUint;

use super::ast::*;

/// Renders a module in the accepted subset. Declarations use `[w-1:0]`
/// ranges and every compound expression is parenthesized, so reparsing the
/// output yields an equal AST.
pub fn print_module(m: &ModuleAst) -> String {
    let mut out = String::new();
    out.push_str("module ");
    out.push_str(&m.name);
    if !m.params.is_empty() {
        out.push_str(" #(\n");
        for (i, p) in m.params.iter().enumerate() {
            let sep = if i + 1 == m.params.len() { "" } else { "," };
            let _ = writeln!(
                out,
                "  parameter {}{} = {}{}",
                range(p.width),
                p.name,
                sized(p.width, &p.default),
                sep
            );
        }
        out.push(')');
    }
    out.push_str(" (\n");
    for (i, p) in m.ports.iter().enumerate() {
        let dir = match p.direction {
            Direction::Input => "input",
            Direction::Output => "output",
        };
        let sep = if i + 1 == m.ports.len() { "" } else { "," };
        let _ = writeln!(out, "  {dir} {}{}{sep}", range(p.width), p.name);
    }
    out.push_str(");\n");
    for w in &m.wires {
        let _ = writeln!(out, "  wire {}{};", range(w.width), w.name);
    }
    for a in &m.assigns {
        let _ = writeln!(out, "  assign {} = {};", lvalue(&a.lhs), expr(&a.rhs));
    }
    for inst in &m.instances {
        out.push_str("  ");
        out.push_str(&inst.primitive);
        if !inst.params.is_empty() {
            out.push_str(" #(");
            for (i, p) in inst.params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let value = literal(p.width, &p.value);
                let _ = write!(out, ".{}({value})", p.name);
            }
            out.push(')');
        }
        let _ = write!(out, " {} (", inst.name);
        for (i, (pin, e)) in inst.connections.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let e = e.as_ref().map(expr).unwrap_or_default();
            let _ = write!(out, ".{pin}({e})");
        }
        out.push_str(");\n");
    }
    out.push_str("endmodule\n");
    out
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

/// `w'h<uppercase hex>`.
pub fn sized(width: u32, value: &BigUint) -> String {
    format!("{width}'h{}", value.to_str_radix(16).to_uppercase())
}

fn literal(width: Option<u32>, value: &BigUint) -> String {
    match width {
        Some(w) => sized(w, value),
        None => value.to_str_radix(10),
    }
}

fn lvalue(lv: &LValue) -> String {
    match lv.select {
        None => lv.name.clone(),
        Some((m, l)) if m == l => format!("{}[{m}]", lv.name),
        Some((m, l)) => format!("{}[{m}:{l}]", lv.name),
    }
}

fn list(items: &[VExpr]) -> String {
    let parts: alloc::vec::Vec<String> = items.iter().map(expr).collect();
    parts.join(", ")
}

pub(crate) fn expr(e: &VExpr) -> String {
    match e {
        VExpr::Ident(name, _) => name.clone(),
        VExpr::Literal { width, value } => literal(*width, value),
        VExpr::Index { name, index, .. } => format!("{name}[{}]", expr(index)),
        VExpr::Slice { name, msb, lsb, .. } => format!("{name}[{msb}:{lsb}]"),
        VExpr::Unary(op, a) => {
            let op = match op {
                VUnaryOp::Not => "~",
                VUnaryOp::Neg => "-",
                VUnaryOp::Plus => "+",
                VUnaryOp::RedAnd => "&",
                VUnaryOp::RedOr => "|",
                VUnaryOp::RedXor => "^",
            };
            format!("{op}({})", expr(a))
        }
        VExpr::Binary(op, a, b) => {
            let op = match op {
                VBinaryOp::And => "&",
                VBinaryOp::Or => "|",
                VBinaryOp::Xor => "^",
                VBinaryOp::Add => "+",
                VBinaryOp::Sub => "-",
                VBinaryOp::Mul => "*",
                VBinaryOp::Shl => "<<",
                VBinaryOp::Shr => ">>",
                VBinaryOp::Eq => "==",
                VBinaryOp::Ne => "!=",
                VBinaryOp::Lt => "<",
            };
            format!("({} {op} {})", expr(a), expr(b))
        }
        VExpr::Ternary(c, a, b) => format!("({} ? {} : {})", expr(c), expr(a), expr(b)),
        VExpr::Concat(items) => format!("{{{}}}", list(items)),
        VExpr::Replicate(n, items) => format!("{{{n}{{{}}}}}", list(items)),
    }
}
