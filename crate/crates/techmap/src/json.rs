//! JSON encoding of expressions, designs, primitives and template descriptors.
//!
//! Objects are written with sorted keys, so encoding is canonical: equal
//! values always produce identical text.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use techmap_core::ir::{self, BinaryOp, UnaryOp};
use techmap_core::library::Roles;
use techmap_core::{BigUint, Design, Expr, ExprKind, IrError, OutputDef, Param, Port, PrimitiveSemantics, TemplateDescriptor};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] IrError),
}

impl From<serde_json::Error> for JsonError {
    fn from(e: serde_json::Error) -> Self {
        JsonError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

fn schema(path: &str, message: impl Into<String>) -> JsonError {
    JsonError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Canonical text: pretty-printed, sorted keys, trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

pub fn parse(text: &str) -> Result<Value, JsonError> {
    Ok(serde_json::from_str(text)?)
}

fn unary_op(op: UnaryOp) -> &'static str {
    op.mnemonic()
}

fn unary_from(name: &str) -> Option<UnaryOp> {
    [UnaryOp::Not, UnaryOp::Neg, UnaryOp::RedAnd, UnaryOp::RedOr, UnaryOp::RedXor]
        .into_iter()
        .find(|op| op.mnemonic() == name)
}

fn binary_from(name: &str) -> Option<BinaryOp> {
    [
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Xor,
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Shl,
        BinaryOp::LShr,
        BinaryOp::Eq,
        BinaryOp::Ult,
    ]
    .into_iter()
    .find(|op| op.mnemonic() == name)
}

pub fn expr_to_value(e: &Expr) -> Value {
    match e.kind() {
        ExprKind::Var(n) => json!({"op": "var", "name": n, "width": e.width()}),
        ExprKind::Hole(n) => json!({"op": "hole", "name": n, "width": e.width()}),
        ExprKind::Const(v) => json!({"op": "const", "width": e.width(), "value": v.to_string()}),
        ExprKind::Unary(op, a) => json!({"op": unary_op(*op), "args": [expr_to_value(a)]}),
        ExprKind::Binary(op, a, b) => json!({"op": op.mnemonic(), "args": [expr_to_value(a), expr_to_value(b)]}),
        ExprKind::Mux(c, a, b) => json!({"op": "mux", "args": [expr_to_value(c), expr_to_value(a), expr_to_value(b)]}),
        ExprKind::Extract { hi, lo, arg } => json!({"op": "extract", "hi": hi, "lo": lo, "args": [expr_to_value(arg)]}),
        ExprKind::Concat(hi, lo) => json!({"op": "concat", "args": [expr_to_value(hi), expr_to_value(lo)]}),
        ExprKind::ZeroExt(a) => json!({"op": "zext", "width": e.width(), "args": [expr_to_value(a)]}),
        ExprKind::SignExt(a) => json!({"op": "sext", "width": e.width(), "args": [expr_to_value(a)]}),
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, JsonError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn field<'a>(o: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, JsonError> {
    o.get(key).ok_or_else(|| schema(path, format!("missing field `{key}`")))
}

fn string<'a>(o: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, JsonError> {
    field(o, key, path)?
        .as_str()
        .ok_or_else(|| schema(&format!("{path}.{key}"), "expected a string"))
}

fn uint(o: &Map<String, Value>, key: &str, path: &str) -> Result<u32, JsonError> {
    field(o, key, path)?
        .as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| schema(&format!("{path}.{key}"), "expected a non-negative integer"))
}

fn decimal(o: &Map<String, Value>, key: &str, path: &str) -> Result<BigUint, JsonError> {
    let s = string(o, key, path)?;
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(schema(&format!("{path}.{key}"), "expected a decimal string"));
    }
    Ok(s.parse().expect("digits parse"))
}

fn array<'a>(o: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Vec<Value>, JsonError> {
    field(o, key, path)?
        .as_array()
        .ok_or_else(|| schema(&format!("{path}.{key}"), "expected an array"))
}

fn build(v: &Value, path: &str) -> Result<Expr, JsonError> {
    let o = object(v, path)?;
    let op = string(o, "op", path)?;
    let args = |n: usize| -> Result<Vec<Expr>, JsonError> {
        let a = array(o, "args", path)?;
        if a.len() != n {
            return Err(schema(path, format!("`{op}` takes {n} arguments, found {}", a.len())));
        }
        a.iter()
            .enumerate()
            .map(|(i, x)| build(x, &format!("{path}.args[{i}]")))
            .collect()
    };
    let e = match op {
        "var" => Expr::var(string(o, "name", path)?, uint(o, "width", path)?),
        "hole" => Expr::hole(string(o, "name", path)?, uint(o, "width", path)?),
        "const" => Expr::constant(uint(o, "width", path)?, decimal(o, "value", path)?),
        "mux" => {
            let [c, a, b]: [Expr; 3] = args(3)?.try_into().expect("length checked");
            Expr::mux(c, a, b)
        }
        "extract" => {
            let [a]: [Expr; 1] = args(1)?.try_into().expect("length checked");
            Expr::extract(uint(o, "hi", path)?, uint(o, "lo", path)?, a)
        }
        "concat" => {
            let [h, l]: [Expr; 2] = args(2)?.try_into().expect("length checked");
            Expr::concat(h, l)
        }
        "zext" | "sext" => {
            let [a]: [Expr; 1] = args(1)?.try_into().expect("length checked");
            let w = uint(o, "width", path)?;
            if op == "zext" {
                Expr::zext(a, w)
            } else {
                Expr::sext(a, w)
            }
        }
        other => {
            if let Some(u) = unary_from(other) {
                let [a]: [Expr; 1] = args(1)?.try_into().expect("length checked");
                Expr::unary(u, a)
            } else if let Some(b) = binary_from(other) {
                let [x, y]: [Expr; 2] = args(2)?.try_into().expect("length checked");
                Expr::binary(b, x, y)
            } else {
                return Err(schema(path, format!("unknown op `{other}`")));
            }
        }
    };
    Ok(e)
}

/// Decodes an expression and validates it against the widths its own
/// variables declare. Holes are allowed.
pub fn expr_from_value(v: &Value) -> Result<Expr, JsonError> {
    let e = build(v, "$")?;
    let (vars, _) = ir::free_symbols(&e);
    ir::validate(&e, &vars, true)?;
    Ok(e)
}

pub fn expr_to_json(e: &Expr) -> String {
    to_text(&expr_to_value(e))
}

pub fn expr_from_json(text: &str) -> Result<Expr, JsonError> {
    expr_from_value(&parse(text)?)
}

fn ports_to_value(ports: &[Port]) -> Value {
    Value::Array(ports.iter().map(|p| json!({"name": p.name, "width": p.width})).collect())
}

fn ports_from(o: &Map<String, Value>, key: &str, path: &str) -> Result<Vec<Port>, JsonError> {
    array(o, key, path)?
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let path = format!("{path}.{key}[{i}]");
            let po = object(p, &path)?;
            Ok(Port::new(string(po, "name", &path)?, uint(po, "width", &path)?))
        })
        .collect()
}

fn outputs_to_value(outputs: &[OutputDef]) -> Value {
    Value::Array(outputs.iter().map(|o| json!({"name": o.name, "expr": expr_to_value(&o.expr)})).collect())
}

fn outputs_from(o: &Map<String, Value>, path: &str) -> Result<Vec<OutputDef>, JsonError> {
    array(o, "outputs", path)?
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let path = format!("{path}.outputs[{i}]");
            let dobj = object(d, &path)?;
            let expr = build(field(dobj, "expr", &path)?, &format!("{path}.expr"))?;
            Ok(OutputDef::new(string(dobj, "name", &path)?, expr))
        })
        .collect()
}

pub fn design_to_value(d: &Design) -> Value {
    json!({"name": d.name, "inputs": ports_to_value(&d.inputs), "outputs": outputs_to_value(&d.outputs)})
}

pub fn design_from_value(v: &Value) -> Result<Design, JsonError> {
    let o = object(v, "$")?;
    let d = Design {
        name: string(o, "name", "$")?.to_string(),
        inputs: ports_from(o, "inputs", "$")?,
        outputs: outputs_from(o, "$")?,
    };
    d.validate()?;
    Ok(d)
}

pub fn design_to_json(d: &Design) -> String {
    to_text(&design_to_value(d))
}

pub fn design_from_json(text: &str) -> Result<Design, JsonError> {
    design_from_value(&parse(text)?)
}

pub fn primitive_to_value(p: &PrimitiveSemantics) -> Value {
    let params: Vec<Value> = p
        .params
        .iter()
        .map(|q| json!({"name": q.name, "width": q.width, "default": q.default.to_string()}))
        .collect();
    json!({
        "name": p.name,
        "inputs": ports_to_value(&p.inputs),
        "params": params,
        "outputs": outputs_to_value(&p.outputs),
    })
}

pub fn primitive_from_value(v: &Value) -> Result<PrimitiveSemantics, JsonError> {
    let o = object(v, "$")?;
    let params = array(o, "params", "$")?
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let path = format!("$.params[{i}]");
            let qo = object(q, &path)?;
            Ok(Param {
                name: string(qo, "name", &path)?.to_string(),
                width: uint(qo, "width", &path)?,
                default: decimal(qo, "default", &path)?,
            })
        })
        .collect::<Result<Vec<_>, JsonError>>()?;
    let p = PrimitiveSemantics {
        name: string(o, "name", "$")?.to_string(),
        inputs: ports_from(o, "inputs", "$")?,
        params,
        outputs: outputs_from(o, "$")?,
    };
    p.validate()?;
    Ok(p)
}

pub fn primitive_to_json(p: &PrimitiveSemantics) -> String {
    to_text(&primitive_to_value(p))
}

pub fn primitive_from_json(text: &str) -> Result<PrimitiveSemantics, JsonError> {
    primitive_from_value(&parse(text)?)
}

pub fn descriptor_to_value(d: &TemplateDescriptor) -> Value {
    let mut roles = Map::new();
    let r = &d.roles;
    for (key, v) in [("sum", &r.sum), ("cout", &r.cout), ("cin", &r.cin), ("product", &r.product)] {
        if let Some(v) = v {
            roles.insert(key.into(), Value::String(v.clone()));
        }
    }
    if !r.operands.is_empty() {
        roles.insert("operands".into(), json!(r.operands));
    }
    json!({"primitive": d.primitive, "roles": roles})
}

pub fn descriptor_from_value(v: &Value) -> Result<TemplateDescriptor, JsonError> {
    let o = object(v, "$")?;
    let ro = object(field(o, "roles", "$")?, "$.roles")?;
    let opt = |key: &str| -> Result<Option<String>, JsonError> {
        match ro.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(schema(&format!("$.roles.{key}"), "expected a string")),
        }
    };
    let operands = match ro.get("operands") {
        None => Vec::new(),
        Some(_) => array(ro, "operands", "$.roles")?
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| schema("$.roles.operands", "expected strings")))
            .collect::<Result<_, _>>()?,
    };
    if let Some(k) = ro.keys().find(|k| !["sum", "cout", "cin", "product", "operands"].contains(&k.as_str())) {
        return Err(schema("$.roles", format!("unknown role `{k}`")));
    }
    Ok(TemplateDescriptor {
        primitive: string(o, "primitive", "$")?.to_string(),
        roles: Roles {
            sum: opt("sum")?,
            cout: opt("cout")?,
            cin: opt("cin")?,
            operands,
            product: opt("product")?,
        },
    })
}

pub fn descriptor_to_json(d: &TemplateDescriptor) -> String {
    to_text(&descriptor_to_value(d))
}

pub fn descriptor_from_json(text: &str) -> Result<TemplateDescriptor, JsonError> {
    descriptor_from_value(&parse(text)?)
}

/// Hole assignment as name → decimal string.
pub fn holes_to_value(holes: &BTreeMap<String, BigUint>) -> Value {
    Value::Object(holes.iter().map(|(k, v)| (k.clone(), Value::String(v.to_string()))).collect())
}
