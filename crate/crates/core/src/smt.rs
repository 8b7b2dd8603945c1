//! SMT-LIB v2 (QF_BV) term printing and solver response parsing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::Num;
use thiserror::Error;

use crate::ir::{self, BinaryOp, Expr, ExprKind, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("symbol `{0}` has no SMT name")]
    UnmappedSymbol(String),
}

/// `#b` literal of exactly `width` digits.
pub fn bv_literal(value: &BigUint, width: u32) -> String {
    let digits = value.to_str_radix(2);
    let mut s = String::with_capacity(width as usize + 2);
    s.push_str("#b");
    for _ in digits.len()..width as usize {
        s.push('0');
    }
    s.push_str(&digits);
    s
}

/// Renders `expr` as a QF_BV term. Symbols are renamed through `symbols`.
///
/// Non-leaf nodes referenced more than once are bound with `let` so that
/// shared sub-terms are printed once.
pub fn lower_to_smt(expr: &Expr, symbols: &BTreeMap<String, String>) -> Result<String, SmtError> {
    let order = ir::post_order([expr]);
    let mut uses: BTreeMap<usize, u32> = BTreeMap::new();
    for node in &order {
        let weight = match node.kind() {
            ExprKind::Unary(op, a) if op.is_reduction() => a.width(),
            _ => 1,
        };
        for c in node.children() {
            *uses.entry(c.node_id()).or_default() += weight;
        }
    }

    let mut refs: BTreeMap<usize, String> = BTreeMap::new();
    let mut lets: Vec<(String, String)> = Vec::new();
    for node in &order {
        let text = render(node, &refs, symbols)?;
        let leaf = node.children().is_empty();
        let shared = uses.get(&node.node_id()).copied().unwrap_or(0) > 1;
        let reference = if shared && !leaf {
            let name = format!("?t{}", lets.len());
            lets.push((name.clone(), text));
            name
        } else {
            text
        };
        refs.insert(node.node_id(), reference);
    }

    let mut out = refs.remove(&expr.node_id()).unwrap_or_default();
    for (name, bound) in lets.into_iter().rev() {
        out = format!("(let (({name} {bound})) {out})");
    }
    Ok(out)
}

fn render(node: &Expr, refs: &BTreeMap<usize, String>, symbols: &BTreeMap<String, String>) -> Result<String, SmtError> {
    let r = |e: &Expr| refs[&e.node_id()].as_str();
    Ok(match node.kind() {
        ExprKind::Var(n) | ExprKind::Hole(n) => symbols
            .get(n)
            .cloned()
            .ok_or_else(|| SmtError::UnmappedSymbol(n.clone()))?,
        ExprKind::Const(v) => bv_literal(v, node.width()),
        ExprKind::Unary(op, a) => match op {
            UnaryOp::Not => format!("(bvnot {})", r(a)),
            UnaryOp::Neg => format!("(bvneg {})", r(a)),
            UnaryOp::RedAnd => reduce("bvand", r(a), a.width()),
            UnaryOp::RedOr => reduce("bvor", r(a), a.width()),
            UnaryOp::RedXor => reduce("bvxor", r(a), a.width()),
        },
        ExprKind::Binary(op, a, b) => match op {
            BinaryOp::Eq => format!("(ite (= {} {}) #b1 #b0)", r(a), r(b)),
            BinaryOp::Ult => format!("(ite (bvult {} {}) #b1 #b0)", r(a), r(b)),
            BinaryOp::Shl | BinaryOp::LShr => {
                let f = if *op == BinaryOp::Shl { "bvshl" } else { "bvlshr" };
                let (wa, wb) = (a.width(), b.width());
                if wb > wa {
                    format!(
                        "((_ extract {} 0) ({f} {} {}))",
                        wa - 1,
                        zero_extend(r(a), wb - wa),
                        r(b)
                    )
                } else {
                    format!("({f} {} {})", r(a), zero_extend(r(b), wa - wb))
                }
            }
            _ => {
                let f = match op {
                    BinaryOp::And => "bvand",
                    BinaryOp::Or => "bvor",
                    BinaryOp::Xor => "bvxor",
                    BinaryOp::Add => "bvadd",
                    BinaryOp::Sub => "bvsub",
                    BinaryOp::Mul => "bvmul",
                    _ => unreachable!(),
                };
                format!("({f} {} {})", r(a), r(b))
            }
        },
        ExprKind::Mux(c, a, b) => format!("(ite (= {} #b1) {} {})", r(c), r(a), r(b)),
        ExprKind::Extract { hi, lo, arg } => format!("((_ extract {hi} {lo}) {})", r(arg)),
        ExprKind::Concat(hi, lo) => format!("(concat {} {})", r(hi), r(lo)),
        ExprKind::ZeroExt(a) => zero_extend(r(a), node.width() - a.width()),
        ExprKind::SignExt(a) => {
            let extra = node.width() - a.width();
            if extra == 0 {
                r(a).to_string()
            } else {
                format!("((_ sign_extend {extra}) {})", r(a))
            }
        }
    })
}

fn zero_extend(term: &str, extra: u32) -> String {
    if extra == 0 {
        term.to_string()
    } else {
        format!("((_ zero_extend {extra}) {term})")
    }
}

fn reduce(op: &str, term: &str, width: u32) -> String {
    if width == 1 {
        return term.to_string();
    }
    let mut out = format!("((_ extract {i} {i}) {term})", i = width - 1);
    for i in (0..width - 1).rev() {
        out = format!("({op} ((_ extract {i} {i}) {term}) {out})");
    }
    out
}

/// Maps arbitrary names onto SMT-LIB simple symbols (letters, digits and `_`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    to_smt: BTreeMap<String, String>,
    from_smt: BTreeMap<String, String>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `name` under `prefix`, renaming deterministically on clashes.
    pub fn add(&mut self, prefix: &str, name: &str) -> String {
        if let Some(s) = self.to_smt.get(name) {
            return s.clone();
        }
        let mut base = String::from(prefix);
        base.extend(name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }));
        let mut candidate = base.clone();
        let mut n = 2;
        while self.from_smt.contains_key(&candidate) {
            candidate = format!("{base}_{n}");
            n += 1;
        }
        self.to_smt.insert(name.to_string(), candidate.clone());
        self.from_smt.insert(candidate.clone(), name.to_string());
        candidate
    }

    pub fn smt_name(&self, name: &str) -> Option<&str> {
        self.to_smt.get(name).map(String::as_str)
    }

    pub fn original(&self, smt_name: &str) -> Option<&str> {
        self.from_smt.get(smt_name).map(String::as_str)
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.to_smt
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(l) => Some(l),
            SExpr::Atom(_) => None,
        }
    }
}

/// Parses a sequence of s-expressions. Handles `|quoted|` symbols,
/// `"string"` literals with `""` escapes and `;` comments.
pub fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, String> {
    let mut stack: Vec<Vec<SExpr>> = Vec::new();
    let mut top: Vec<SExpr> = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((at, c)) = chars.next() {
        let atom = match c {
            c if c.is_whitespace() => continue,
            ';' => {
                for (_, c) in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
                continue;
            }
            '(' => {
                stack.push(core::mem::take(&mut top));
                continue;
            }
            ')' => {
                let inner = core::mem::replace(&mut top, stack.pop().ok_or_else(|| format!("unbalanced `)` at byte {at}"))?);
                top.push(SExpr::List(inner));
                continue;
            }
            '|' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '|')) => break,
                        Some((_, c)) => s.push(c),
                        None => return Err("unterminated quoted symbol".into()),
                    }
                }
                s
            }
            '"' => {
                let mut s = String::from("\"");
                loop {
                    match chars.next() {
                        Some((_, '"')) if chars.peek().map(|p| p.1) == Some('"') => {
                            chars.next();
                            s.push('"');
                        }
                        Some((_, '"')) => break,
                        Some((_, c)) => s.push(c),
                        None => return Err("unterminated string literal".into()),
                    }
                }
                s.push('"');
                s
            }
            c => {
                let mut s = String::from(c);
                while let Some(&(_, n)) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                s
            }
        };
        top.push(SExpr::Atom(atom));
    }
    if !stack.is_empty() {
        return Err("unbalanced `(`".into());
    }
    Ok(top)
}

/// Reads `#b…`, `#x…` or `(_ bvN W)` into a value and its width.
pub fn parse_bv_value(e: &SExpr) -> Option<(BigUint, u32)> {
    match e {
        SExpr::Atom(a) => {
            if let Some(bits) = a.strip_prefix("#b") {
                Some((BigUint::from_str_radix(bits, 2).ok()?, bits.len() as u32))
            } else if let Some(hex) = a.strip_prefix("#x") {
                Some((BigUint::from_str_radix(hex, 16).ok()?, hex.len() as u32 * 4))
            } else {
                None
            }
        }
        SExpr::List(items) => match items.as_slice() {
            [SExpr::Atom(u), SExpr::Atom(v), SExpr::Atom(w)] if u == "_" => {
                let value = BigUint::from_str_radix(v.strip_prefix("bv")?, 10).ok()?;
                Some((value, w.parse().ok()?))
            }
            _ => None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckSat {
    Sat,
    Unsat,
    Unknown,
}

/// Splits solver output into the `check-sat` verdict and whatever follows.
pub fn split_check_sat(stdout: &str) -> Result<(CheckSat, &str), String> {
    let trimmed = stdout.trim_start();
    let end = trimmed.find(|c: char| c.is_whitespace()).unwrap_or(trimmed.len());
    let verdict = match &trimmed[..end] {
        "sat" => CheckSat::Sat,
        "unsat" => CheckSat::Unsat,
        "unknown" => CheckSat::Unknown,
        _ => return Err(format!("expected sat/unsat/unknown, got `{}`", first_line(trimmed))),
    };
    Ok((verdict, &trimmed[end..]))
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms(names: &[&str]) -> BTreeMap<String, String> {
        names.iter().map(|n| (n.to_string(), n.to_string())).collect()
    }

    #[test]
    fn constants_print_exact_width() {
        let e = Expr::constant(4, 10u32);
        assert_eq!(lower_to_smt(&e, &BTreeMap::new()).unwrap(), "#b1010");
        assert_eq!(bv_literal(&BigUint::from(1u32), 5), "#b00001");
    }

    #[test]
    fn eq_wraps_in_ite() {
        let e = Expr::eq(Expr::var("a", 4), Expr::var("b", 4));
        assert_eq!(lower_to_smt(&e, &syms(&["a", "b"])).unwrap(), "(ite (= a b) #b1 #b0)");
    }

    #[test]
    fn shift_operand_equalization() {
        let e = Expr::lshr(Expr::var("a", 4), Expr::var("b", 2));
        assert_eq!(
            lower_to_smt(&e, &syms(&["a", "b"])).unwrap(),
            "(bvlshr a ((_ zero_extend 2) b))"
        );
        let e = Expr::binary(BinaryOp::Shl, Expr::var("a", 2), Expr::var("b", 4));
        assert_eq!(
            lower_to_smt(&e, &syms(&["a", "b"])).unwrap(),
            "((_ extract 1 0) (bvshl ((_ zero_extend 2) a) b))"
        );
    }

    #[test]
    fn reductions_expand_over_bits() {
        let e = Expr::unary(UnaryOp::RedXor, Expr::var("a", 3));
        assert_eq!(
            lower_to_smt(&e, &syms(&["a"])).unwrap(),
            "(bvxor ((_ extract 0 0) a) (bvxor ((_ extract 1 1) a) ((_ extract 2 2) a)))"
        );
    }

    #[test]
    fn shared_nodes_use_let() {
        let s = Expr::add(Expr::var("a", 4), Expr::var("b", 4));
        let e = Expr::mul(s.clone(), s);
        assert_eq!(
            lower_to_smt(&e, &syms(&["a", "b"])).unwrap(),
            "(let ((?t0 (bvadd a b))) (bvmul ?t0 ?t0))"
        );
    }

    #[test]
    fn unmapped_symbol() {
        let e = Expr::var("a", 1);
        assert_eq!(lower_to_smt(&e, &BTreeMap::new()), Err(SmtError::UnmappedSymbol("a".into())));
    }

    #[test]
    fn symbol_table_sanitizes_and_dedups() {
        let mut t = SymbolTable::new();
        assert_eq!(t.add("h_", "inst_0.INIT"), "h_inst_0_INIT");
        assert_eq!(t.add("h_", "inst_0$INIT"), "h_inst_0_INIT_2");
        assert_eq!(t.add("h_", "inst_0.INIT"), "h_inst_0_INIT");
        assert_eq!(t.original("h_inst_0_INIT_2"), Some("inst_0$INIT"));
    }

    #[test]
    fn sexpr_and_values() {
        let parsed = parse_sexprs("((h #b1000) (|odd name| #x8) (g (_ bv5 3)))").unwrap();
        let pairs = parsed[0].as_list().unwrap();
        assert_eq!(parse_bv_value(&pairs[0].as_list().unwrap()[1]), Some((BigUint::from(8u32), 4)));
        assert_eq!(pairs[1].as_list().unwrap()[0], SExpr::Atom("odd name".into()));
        assert_eq!(parse_bv_value(&pairs[1].as_list().unwrap()[1]), Some((BigUint::from(8u32), 4)));
        assert_eq!(parse_bv_value(&pairs[2].as_list().unwrap()[1]), Some((BigUint::from(5u32), 3)));
        assert!(parse_sexprs("((a b)").is_err());
        assert!(parse_sexprs("a)").is_err());
    }

    #[test]
    fn check_sat_verdicts() {
        assert_eq!(split_check_sat("sat\n((x #b1))").unwrap().0, CheckSat::Sat);
        assert_eq!(split_check_sat("unsat\n").unwrap().0, CheckSat::Unsat);
        assert!(split_check_sat("(error \"x\")").is_err());
    }
}
