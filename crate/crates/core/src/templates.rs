//! Sketches: primitive instance patterns with parameter and port-binding
//! holes, instantiated for one design signature.
//!
//! A port-binding hole with candidates `c0..c(m-1)` becomes a selector hole
//! of `max(1, ceil(log2 m))` bits driving a mux chain; selector values past
//! the last candidate select the last candidate.
//!
//! Holes are ordered by instance, then parameters, then input pins in
//! declaration order, then bit. Hole names are `inst_<k>_<PARAM>`,
//! `inst_<k>_<PIN>_sel` for one-bit pins and `inst_<k>_<PIN>_<bit>_sel`
//! otherwise.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;
use thiserror::Error;

use crate::ir::{self, Design, Expr, IrError, OutputDef, Port, SymbolKind};
use crate::library::{Library, PrimitiveSemantics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplateKind {
    LutSingle,
    BitwisePerBit,
    CarryChain,
    Multiplier,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 4] = [
        TemplateKind::LutSingle,
        TemplateKind::BitwisePerBit,
        TemplateKind::CarryChain,
        TemplateKind::Multiplier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::LutSingle => "lut_single",
            TemplateKind::BitwisePerBit => "bitwise_per_bit",
            TemplateKind::CarryChain => "carry_chain",
            TemplateKind::Multiplier => "multiplier",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateKind {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("no primitive compatible with {kind}: {reason}")]
    NoCompatiblePrimitive { kind: TemplateKind, reason: String },
    #[error("design does not fit {kind}: {reason}")]
    SignatureMismatch { kind: TemplateKind, reason: String },
    #[error("sketch refers to unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("sketch is malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// A one-bit signal source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    /// Bit `bit` of a design input.
    Signal { input: String, bit: u32 },
    ConstBit(bool),
    /// Bit `bit` of an output port of an earlier instance.
    Net { instance: usize, port: String, bit: u32 },
}

/// How one bit of an instance input pin is driven.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PinBinding {
    Fixed(Source),
    Hole { hole: String, candidates: Vec<Source> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamValue {
    Hole { hole: String, width: u32 },
    Const(BigUint),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub primitive: String,
    /// One entry per primitive parameter, in declaration order.
    pub params: Vec<(String, ParamValue)>,
    /// One entry per primitive input pin; bindings are LSB first.
    pub pins: Vec<(String, Vec<PinBinding>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    pub kind: TemplateKind,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    /// In topological order: nets only refer to earlier instances.
    pub instances: Vec<Instance>,
    /// One source per design output bit, LSB first.
    pub output_map: Vec<(String, Vec<Source>)>,
}

/// Width of a selector hole over `m` candidates.
pub fn selector_width(m: usize) -> u32 {
    let mut w = 0;
    while (1usize << w) < m {
        w += 1;
    }
    w.max(1)
}

/// `candidates[min(selector, m-1)]`.
pub fn select_candidate<'a>(candidates: &'a [Source], selector: &BigUint) -> &'a Source {
    let last = candidates.len() - 1;
    let i = usize::try_from(selector).map_or(last, |s| s.min(last));
    &candidates[i]
}

impl Sketch {
    /// Holes in canonical order with their widths.
    pub fn holes(&self) -> Vec<Port> {
        let mut holes = Vec::new();
        for inst in &self.instances {
            for (_, v) in &inst.params {
                if let ParamValue::Hole { hole, width } = v {
                    holes.push(Port::new(hole.clone(), *width));
                }
            }
            for (_, bits) in &inst.pins {
                for b in bits {
                    if let PinBinding::Hole { hole, candidates } = b {
                        holes.push(Port::new(hole.clone(), selector_width(candidates.len())));
                    }
                }
            }
        }
        holes
    }

    /// Candidate list of a port-binding hole.
    pub fn binding_candidates(&self, hole: &str) -> Option<&[Source]> {
        self.instances.iter().flat_map(|i| i.pins.iter()).flat_map(|(_, b)| b.iter()).find_map(|b| match b {
            PinBinding::Hole { hole: h, candidates } if h == hole => Some(candidates.as_slice()),
            _ => None,
        })
    }
}

/// Number of hole assignments, `2^(sum of hole widths)`.
pub fn hole_space(holes: &[Port]) -> BigUint {
    BigUint::from(1u32) << holes.iter().map(|h| h.width as usize).sum::<usize>()
}

/// Choices that refine template construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemplateOptions {
    /// Use this primitive instead of choosing one.
    pub primitive: Option<String>,
    /// LUT templates only: bind LUT pin `i` to the `i`-th design input bit
    /// (declaration order, LSB first) and the remaining pins to 0, instead of
    /// creating port-binding holes.
    pub pinned: bool,
}

pub fn instantiate(
    kind: TemplateKind,
    design: &Design,
    library: &Library,
    options: &TemplateOptions,
) -> Result<Sketch, TemplateError> {
    let mut sketch = Sketch {
        kind,
        inputs: design.inputs.clone(),
        outputs: design.output_ports(),
        instances: Vec::new(),
        output_map: Vec::new(),
    };
    match kind {
        TemplateKind::LutSingle => lut_single(&mut sketch, library, options)?,
        TemplateKind::BitwisePerBit => bitwise_per_bit(&mut sketch, library, options)?,
        TemplateKind::CarryChain => carry_chain(&mut sketch, library, options)?,
        TemplateKind::Multiplier => multiplier(&mut sketch, library, options)?,
    }
    Ok(sketch)
}

fn no_primitive(kind: TemplateKind, reason: impl Into<String>) -> TemplateError {
    TemplateError::NoCompatiblePrimitive {
        kind,
        reason: reason.into(),
    }
}

fn mismatch(kind: TemplateKind, reason: impl Into<String>) -> TemplateError {
    TemplateError::SignatureMismatch {
        kind,
        reason: reason.into(),
    }
}

/// `k` if `p` has `k` one-bit inputs, one one-bit output and one `2^k`-bit
/// parameter.
pub fn lut_arity(p: &PrimitiveSemantics) -> Option<u32> {
    let k = p.inputs.len() as u32;
    let ok = (1..31).contains(&k)
        && p.inputs.iter().all(|i| i.width == 1)
        && p.outputs.len() == 1
        && p.outputs[0].expr.width() == 1
        && p.params.len() == 1
        && p.params[0].width == 1 << k;
    ok.then_some(k)
}

/// The named primitive, or the LUT with the fewest inputs that is at least
/// `needed` (ties by name); the widest LUT if none is large enough.
fn choose_lut<'a>(
    kind: TemplateKind,
    library: &'a Library,
    options: &TemplateOptions,
    needed: u32,
) -> Result<(&'a PrimitiveSemantics, u32), TemplateError> {
    if let Some(name) = &options.primitive {
        let p = library.get(name).ok_or_else(|| TemplateError::UnknownPrimitive(name.clone()))?;
        let k = lut_arity(p).ok_or_else(|| no_primitive(kind, format!("`{name}` is not a lookup table")))?;
        return Ok((p, k));
    }
    let luts: Vec<(&PrimitiveSemantics, u32)> = library.primitives().filter_map(|p| lut_arity(p).map(|k| (p, k))).collect();
    let fitting = luts.iter().filter(|(_, k)| *k >= needed).min_by(|a, b| (a.1, &a.0.name).cmp(&(b.1, &b.0.name)));
    let widest = luts.iter().max_by(|a, b| (a.1, &b.0.name).cmp(&(b.1, &a.0.name)));
    fitting
        .or(widest)
        .copied()
        .ok_or_else(|| no_primitive(kind, "library has no lookup table"))
}

fn design_bits(inputs: &[Port]) -> Vec<Source> {
    inputs
        .iter()
        .flat_map(|p| {
            (0..p.width).map(|bit| Source::Signal {
                input: p.name.clone(),
                bit,
            })
        })
        .collect()
}

fn with_constants(mut sources: Vec<Source>) -> Vec<Source> {
    sources.push(Source::ConstBit(false));
    sources.push(Source::ConstBit(true));
    sources
}

fn inst_name(k: usize) -> String {
    format!("inst_{k}")
}

fn param_holes(k: usize, p: &PrimitiveSemantics) -> Vec<(String, ParamValue)> {
    p.params
        .iter()
        .map(|param| {
            let v = ParamValue::Hole {
                hole: format!("inst_{k}_{}", param.name),
                width: param.width,
            };
            (param.name.clone(), v)
        })
        .collect()
}

fn hole_binding(k: usize, pin: &Port, bit: u32, candidates: Vec<Source>) -> PinBinding {
    let hole = if pin.width == 1 {
        format!("inst_{k}_{}_sel", pin.name)
    } else {
        format!("inst_{k}_{}_{bit}_sel", pin.name)
    };
    PinBinding::Hole { hole, candidates }
}

fn single_output(kind: TemplateKind, sketch: &Sketch) -> Result<Port, TemplateError> {
    match sketch.outputs.as_slice() {
        [o] => Ok(o.clone()),
        _ => Err(mismatch(kind, format!("expected one output, found {}", sketch.outputs.len()))),
    }
}

fn lut_instance(k: usize, lut: &PrimitiveSemantics, pin_sources: impl Fn(usize, &Port) -> PinBinding) -> Instance {
    Instance {
        name: inst_name(k),
        primitive: lut.name.clone(),
        params: param_holes(k, lut),
        pins: lut
            .inputs
            .iter()
            .enumerate()
            .map(|(i, pin)| (pin.name.clone(), alloc::vec![pin_sources(i, pin)]))
            .collect(),
    }
}

fn lut_single(sketch: &mut Sketch, library: &Library, options: &TemplateOptions) -> Result<(), TemplateError> {
    let kind = TemplateKind::LutSingle;
    let out = single_output(kind, sketch)?;
    if out.width != 1 {
        return Err(mismatch(kind, format!("output `{}` is {} bits wide", out.name, out.width)));
    }
    let bits = design_bits(&sketch.inputs);
    let (lut, k) = choose_lut(kind, library, options, bits.len() as u32)?;
    if options.pinned && bits.len() > k as usize {
        return Err(mismatch(
            kind,
            format!("{} input bits cannot be pinned to a {k}-input table", bits.len()),
        ));
    }
    let candidates = with_constants(bits.clone());
    let inst = lut_instance(0, lut, |i, pin| {
        if options.pinned {
            PinBinding::Fixed(bits.get(i).cloned().unwrap_or(Source::ConstBit(false)))
        } else {
            hole_binding(0, pin, 0, candidates.clone())
        }
    });
    let lut_out = lut.outputs[0].name.clone();
    sketch.instances.push(inst);
    sketch.output_map.push((
        out.name,
        alloc::vec![Source::Net {
            instance: 0,
            port: lut_out,
            bit: 0,
        }],
    ));
    Ok(())
}

fn bitwise_per_bit(sketch: &mut Sketch, library: &Library, options: &TemplateOptions) -> Result<(), TemplateError> {
    let kind = TemplateKind::BitwisePerBit;
    let out = single_output(kind, sketch)?;
    let n_inputs = sketch.inputs.len() as u32;
    let (lut, k) = choose_lut(kind, library, options, n_inputs)?;
    let mut map = Vec::new();
    for i in 0..out.width {
        let column: Vec<Source> = sketch
            .inputs
            .iter()
            .filter(|p| p.width > i)
            .map(|p| Source::Signal {
                input: p.name.clone(),
                bit: i,
            })
            .collect();
        if options.pinned && column.len() > k as usize {
            return Err(mismatch(
                kind,
                format!("bit {i} has {} sources for a {k}-input table", column.len()),
            ));
        }
        let candidates = with_constants(column.clone());
        let idx = sketch.instances.len();
        let inst = lut_instance(idx, lut, |j, pin| {
            if options.pinned {
                PinBinding::Fixed(column.get(j).cloned().unwrap_or(Source::ConstBit(false)))
            } else {
                hole_binding(idx, pin, 0, candidates.clone())
            }
        });
        sketch.instances.push(inst);
        map.push(Source::Net {
            instance: idx,
            port: lut.outputs[0].name.clone(),
            bit: 0,
        });
    }
    sketch.output_map.push((out.name, map));
    Ok(())
}

fn choose_described<'a>(
    kind: TemplateKind,
    library: &'a Library,
    options: &TemplateOptions,
    usable: impl Fn(&PrimitiveSemantics, &crate::library::Roles) -> Result<(), String>,
) -> Result<(&'a PrimitiveSemantics, &'a crate::library::Roles), TemplateError> {
    let mut reasons = Vec::new();
    for p in library.primitives() {
        if options.primitive.as_ref().is_some_and(|n| *n != p.name) {
            continue;
        }
        let Some(desc) = library.descriptor(&p.name) else {
            reasons.push(format!("`{}` has no template descriptor", p.name));
            continue;
        };
        match usable(p, &desc.roles) {
            Ok(()) => return Ok((p, &desc.roles)),
            Err(r) => reasons.push(format!("`{}`: {r}", p.name)),
        }
    }
    if let Some(name) = &options.primitive {
        if library.get(name).is_none() {
            return Err(TemplateError::UnknownPrimitive(name.clone()));
        }
    }
    let reason = if reasons.is_empty() {
        "library is empty".to_string()
    } else {
        reasons.join("; ")
    };
    Err(no_primitive(kind, reason))
}

fn port_width(p: &PrimitiveSemantics, name: &str) -> Option<u32> {
    p.input(name).map(|i| i.width).or_else(|| p.output(name).map(|o| o.expr.width()))
}

fn carry_chain(sketch: &mut Sketch, library: &Library, options: &TemplateOptions) -> Result<(), TemplateError> {
    let kind = TemplateKind::CarryChain;
    let (cell, roles) = choose_described(kind, library, options, |p, r| {
        let (Some(sum), Some(cout), Some(cin)) = (&r.sum, &r.cout, &r.cin) else {
            return Err("descriptor lacks sum, cout or cin".into());
        };
        if r.operands.is_empty() {
            return Err("descriptor lists no operands".into());
        }
        let one_bit = |n: &str| port_width(p, n) == Some(1);
        if !(one_bit(sum) && one_bit(cout) && one_bit(cin) && r.operands.iter().all(|o| one_bit(o))) {
            return Err("carry roles must be one-bit pins".into());
        }
        if p.input(cin).is_none() || p.output(sum).is_none() || p.output(cout).is_none() {
            return Err("cin must be an input and sum/cout outputs".into());
        }
        Ok(())
    })?;
    let sum_pin = roles.sum.clone().expect("checked");
    let cout_pin = roles.cout.clone().expect("checked");
    let cin_pin = roles.cin.clone().expect("checked");

    let n_ops = roles.operands.len();
    let Some(sum_out) = sketch.outputs.first().cloned() else {
        return Err(mismatch(kind, "design has no outputs"));
    };
    let n = sum_out.width;
    let design_cout = match sketch.outputs.get(1..).unwrap_or(&[]) {
        [] => None,
        [c] if c.width == 1 => Some(c.name.clone()),
        _ => return Err(mismatch(kind, "expected a sum output and at most one one-bit carry-out")),
    };
    if sketch.inputs.len() < n_ops {
        return Err(mismatch(kind, format!("expected {n_ops} operand inputs")));
    }
    let design_cin = match &sketch.inputs[n_ops..] {
        [] => None,
        [c] if c.width == 1 => Some(c.name.clone()),
        _ => return Err(mismatch(kind, "expected at most one one-bit carry-in besides the operands")),
    };

    for i in 0..n {
        let column: Vec<Source> = sketch
            .inputs
            .iter()
            .filter(|p| p.width > i)
            .map(|p| Source::Signal {
                input: p.name.clone(),
                bit: i,
            })
            .collect();
        let candidates = with_constants(column);
        let mut pins = Vec::new();
        for pin in &cell.inputs {
            let binding = if pin.name == cin_pin {
                if i == 0 {
                    let mut c: Vec<Source> = design_cin
                        .iter()
                        .map(|name| Source::Signal {
                            input: name.clone(),
                            bit: 0,
                        })
                        .collect();
                    c.extend([Source::ConstBit(false), Source::ConstBit(true)]);
                    hole_binding(0, pin, 0, c)
                } else {
                    PinBinding::Fixed(Source::Net {
                        instance: i as usize - 1,
                        port: cout_pin.clone(),
                        bit: 0,
                    })
                }
            } else if roles.operands.contains(&pin.name) {
                hole_binding(i as usize, pin, 0, candidates.clone())
            } else {
                let bits = (0..pin.width)
                    .map(|b| hole_binding(i as usize, pin, b, with_constants(Vec::new())))
                    .collect();
                pins.push((pin.name.clone(), bits));
                continue;
            };
            pins.push((pin.name.clone(), alloc::vec![binding]));
        }
        sketch.instances.push(Instance {
            name: inst_name(i as usize),
            primitive: cell.name.clone(),
            params: param_holes(i as usize, cell),
            pins,
        });
    }
    let sums = (0..n)
        .map(|i| Source::Net {
            instance: i as usize,
            port: sum_pin.clone(),
            bit: 0,
        })
        .collect();
    sketch.output_map.push((sum_out.name, sums));
    if let Some(c) = design_cout {
        sketch.output_map.push((
            c,
            alloc::vec![Source::Net {
                instance: n as usize - 1,
                port: cout_pin,
                bit: 0,
            }],
        ));
    }
    Ok(())
}

fn multiplier(sketch: &mut Sketch, library: &Library, options: &TemplateOptions) -> Result<(), TemplateError> {
    let kind = TemplateKind::Multiplier;
    if sketch.inputs.len() != 2 {
        return Err(mismatch(
            kind,
            format!("expected two operand inputs, found {}", sketch.inputs.len()),
        ));
    }
    let out = single_output(kind, sketch)?;
    let (a, b) = (sketch.inputs[0].clone(), sketch.inputs[1].clone());
    let (cell, roles) = choose_described(kind, library, options, |p, r| {
        let Some(product) = &r.product else {
            return Err("descriptor lacks a product".into());
        };
        let [x, y] = r.operands.as_slice() else {
            return Err("descriptor must list two operands".into());
        };
        let (Some(xp), Some(yp), Some(pp)) = (p.input(x), p.input(y), p.output(product)) else {
            return Err("operands must be inputs and product an output".into());
        };
        if p.inputs.len() != 2 {
            return Err("cell has inputs besides the operands".into());
        }
        if a.width > xp.width || b.width > yp.width || out.width > pp.expr.width() {
            return Err(format!(
                "{}x{}->{} does not fit {}x{}->{}",
                a.width,
                b.width,
                out.width,
                xp.width,
                yp.width,
                pp.expr.width()
            ));
        }
        Ok(())
    })?;
    let bind = |pin: &Port, input: &Port| {
        let bits = (0..pin.width)
            .map(|bit| {
                PinBinding::Fixed(if bit < input.width {
                    Source::Signal {
                        input: input.name.clone(),
                        bit,
                    }
                } else {
                    Source::ConstBit(false)
                })
            })
            .collect();
        (pin.name.clone(), bits)
    };
    let pins = cell
        .inputs
        .iter()
        .map(|pin| if pin.name == roles.operands[0] { bind(pin, &a) } else { bind(pin, &b) })
        .collect();
    sketch.instances.push(Instance {
        name: inst_name(0),
        primitive: cell.name.clone(),
        params: param_holes(0, cell),
        pins,
    });
    let product = roles.product.clone().expect("checked");
    let map = (0..out.width)
        .map(|bit| Source::Net {
            instance: 0,
            port: product.clone(),
            bit,
        })
        .collect();
    sketch.output_map.push((out.name, map));
    Ok(())
}

fn bit_of(e: &Expr, bit: u32) -> Expr {
    if e.width() == 1 {
        e.clone()
    } else {
        Expr::extract(bit, bit, e.clone())
    }
}

fn source_expr(
    s: &Source,
    nets: &[BTreeMap<String, Expr>],
    input_vars: &BTreeMap<String, Expr>,
) -> Result<Expr, TemplateError> {
    Ok(match s {
        Source::Signal { input, bit } => {
            let v = input_vars
                .get(input)
                .ok_or_else(|| TemplateError::Malformed(format!("unknown design input `{input}`")))?;
            bit_of(v, *bit)
        }
        Source::ConstBit(b) => Expr::bit(*b),
        Source::Net { instance, port, bit } => {
            let outs = nets
                .get(*instance)
                .ok_or_else(|| TemplateError::Malformed(format!("net from instance {instance} is not earlier")))?;
            let e = outs
                .get(port)
                .ok_or_else(|| TemplateError::Malformed(format!("instance {instance} has no output `{port}`")))?;
            bit_of(e, *bit)
        }
    })
}

/// The expression for one binding: the fixed source, or the selector mux
/// chain over the candidates.
fn binding_expr(
    b: &PinBinding,
    nets: &[BTreeMap<String, Expr>],
    input_vars: &BTreeMap<String, Expr>,
) -> Result<Expr, TemplateError> {
    match b {
        PinBinding::Fixed(s) => source_expr(s, nets, input_vars),
        PinBinding::Hole { hole, candidates } => {
            if candidates.is_empty() {
                return Err(TemplateError::Malformed(format!("hole `{hole}` has no candidates")));
            }
            let w = selector_width(candidates.len());
            let sel = Expr::hole(hole.clone(), w);
            let exprs = candidates
                .iter()
                .map(|c| source_expr(c, nets, input_vars))
                .collect::<Result<Vec<_>, _>>()?;
            let mut acc = exprs.last().expect("nonempty").clone();
            for (i, c) in exprs.iter().enumerate().rev().skip(1) {
                acc = Expr::mux(Expr::eq(sel.clone(), Expr::constant(w, i as u32)), c.clone(), acc);
            }
            Ok(acc)
        }
    }
}

/// Inlines every instance and returns one hole-bearing expression per design
/// output, in design order.
pub fn sketch_to_exprs(sketch: &Sketch, library: &Library) -> Result<Vec<OutputDef>, TemplateError> {
    let input_vars: BTreeMap<String, Expr> =
        sketch.inputs.iter().map(|p| (p.name.clone(), Expr::var(p.name.clone(), p.width))).collect();
    let mut nets: Vec<BTreeMap<String, Expr>> = Vec::with_capacity(sketch.instances.len());
    for inst in &sketch.instances {
        let prim = library
            .get(&inst.primitive)
            .ok_or_else(|| TemplateError::UnknownPrimitive(inst.primitive.clone()))?;
        let mut bindings = BTreeMap::new();
        for param in &prim.params {
            let value = inst
                .params
                .iter()
                .find(|(n, _)| *n == param.name)
                .map(|(_, v)| v)
                .ok_or_else(|| TemplateError::Malformed(format!("{}: parameter `{}` unset", inst.name, param.name)))?;
            let e = match value {
                ParamValue::Hole { hole, width } => Expr::hole(hole.clone(), *width),
                ParamValue::Const(v) => Expr::constant(param.width, v.clone()),
            };
            bindings.insert(param.name.clone(), e);
        }
        for pin in &prim.inputs {
            let bits = inst
                .pins
                .iter()
                .find(|(n, _)| *n == pin.name)
                .map(|(_, b)| b)
                .ok_or_else(|| TemplateError::Malformed(format!("{}: pin `{}` unbound", inst.name, pin.name)))?;
            if bits.len() != pin.width as usize {
                return Err(TemplateError::Malformed(format!(
                    "{}: pin `{}` has {} bindings for {} bits",
                    inst.name,
                    pin.name,
                    bits.len(),
                    pin.width
                )));
            }
            let mut parts = Vec::with_capacity(bits.len());
            for b in bits.iter().rev() {
                parts.push(binding_expr(b, &nets, &input_vars)?);
            }
            bindings.insert(pin.name.clone(), Expr::concat_all(parts).expect("pins are at least one bit"));
        }
        let exprs: Vec<Expr> = prim.outputs.iter().map(|o| o.expr.clone()).collect();
        let inlined = ir::substitute_all(&exprs, &bindings, SymbolKind::Vars)?;
        nets.push(prim.outputs.iter().map(|o| o.name.clone()).zip(inlined).collect());
    }
    let mut outs = Vec::with_capacity(sketch.outputs.len());
    for port in &sketch.outputs {
        let sources = sketch
            .output_map
            .iter()
            .find(|(n, _)| *n == port.name)
            .map(|(_, s)| s)
            .ok_or_else(|| TemplateError::Malformed(format!("output `{}` unmapped", port.name)))?;
        if sources.len() != port.width as usize {
            return Err(TemplateError::Malformed(format!("output `{}` maps {} bits", port.name, sources.len())));
        }
        let mut parts = Vec::with_capacity(sources.len());
        for s in sources.iter().rev() {
            parts.push(source_expr(s, &nets, &input_vars)?);
        }
        outs.push(OutputDef::new(port.name.clone(), Expr::concat_all(parts).expect("outputs are at least one bit")));
    }
    Ok(outs)
}
