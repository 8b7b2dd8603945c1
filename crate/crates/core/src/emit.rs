//! Structural netlists: resolving a solved sketch, printing it as Verilog,
//! and checking a printed netlist against its design after re-import.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use thiserror::Error;

use crate::ir::{Design, OutputDef, Port};
use crate::library::Library;
use crate::semantics::{self, Env, EvalError};
use crate::synthesis::{self, SmtSolver, SynthesisError};
use crate::templates::{self, ParamValue, PinBinding, Sketch, Source, TemplateKind};
use crate::verilog::{self, VerilogError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("no value for hole `{0}`")]
    MissingHole(String),
    #[error("value of `{name}` does not fit in {width} bits")]
    ValueOutOfRange { name: String, width: u32 },
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("netlist interface differs from the design: {0}")]
    InterfaceMismatch(String),
    #[error("{bits} input bits exceed the exhaustive limit of {max}")]
    TooManyInputBits { bits: u64, max: u32 },
    #[error(transparent)]
    Verilog(#[from] VerilogError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetInstance {
    pub name: String,
    pub primitive: String,
    /// `(name, width, value)` in declaration order.
    pub params: Vec<(String, u32, BigUint)>,
    /// Input pins in declaration order, each bit LSB first.
    pub inputs: Vec<(String, Vec<Source>)>,
    /// Output pins in declaration order with their widths.
    pub outputs: Vec<Port>,
}

/// A sketch with every hole resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    pub kind: TemplateKind,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    /// In topological order.
    pub instances: Vec<NetInstance>,
    /// One source per design output bit, LSB first.
    pub output_map: Vec<(String, Vec<Source>)>,
}

/// Replaces parameter holes by their values and each port-binding hole by
/// `candidates[min(selector, m-1)]`.
pub fn resolve(
    name: &str,
    sketch: &Sketch,
    holes: &BTreeMap<String, BigUint>,
    library: &Library,
) -> Result<Netlist, EmitError> {
    let lookup = |h: &str| holes.get(h).ok_or_else(|| EmitError::MissingHole(h.to_string()));
    let mut instances = Vec::with_capacity(sketch.instances.len());
    for inst in &sketch.instances {
        let prim = library
            .get(&inst.primitive)
            .ok_or_else(|| EmitError::UnknownPrimitive(inst.primitive.clone()))?;
        let mut params = Vec::new();
        for p in &prim.params {
            let value = match inst.params.iter().find(|(n, _)| *n == p.name).map(|(_, v)| v) {
                Some(ParamValue::Hole { hole, .. }) => lookup(hole)?.clone(),
                Some(ParamValue::Const(v)) => v.clone(),
                None => p.default.clone(),
            };
            if value.bits() > u64::from(p.width) {
                return Err(EmitError::ValueOutOfRange {
                    name: format!("{}.{}", inst.name, p.name),
                    width: p.width,
                });
            }
            params.push((p.name.clone(), p.width, value));
        }
        let mut inputs = Vec::new();
        for (pin, bits) in &inst.pins {
            let mut resolved = Vec::with_capacity(bits.len());
            for b in bits {
                resolved.push(match b {
                    PinBinding::Fixed(s) => s.clone(),
                    PinBinding::Hole { hole, candidates } => {
                        templates::select_candidate(candidates, lookup(hole)?).clone()
                    }
                });
            }
            inputs.push((pin.clone(), resolved));
        }
        let outputs = prim.outputs.iter().map(|o| Port::new(o.name.clone(), o.expr.width())).collect();
        instances.push(NetInstance {
            name: inst.name.clone(),
            primitive: inst.primitive.clone(),
            params,
            inputs,
            outputs,
        });
    }
    Ok(Netlist {
        name: name.to_string(),
        kind: sketch.kind,
        inputs: sketch.inputs.clone(),
        outputs: sketch.outputs.clone(),
        instances,
        output_map: sketch.output_map.clone(),
    })
}

/// How an instance output port is connected in the printed netlist.
enum PortConn {
    /// Straight to design output bits starting at the given offset.
    Direct(String, u32),
    /// Through a declared wire.
    Wire(String, u32),
    Open,
}

struct Printer<'a> {
    n: &'a Netlist,
    conns: BTreeMap<(usize, String), PortConn>,
}

/// `(output, output bit, net bit)`.
type OutputBit = (String, u32, u32);

impl<'a> Printer<'a> {
    fn new(n: &'a Netlist) -> Self {
        // design output bits each net bit feeds
        let mut out_uses: BTreeMap<(usize, String), Vec<OutputBit>> = BTreeMap::new();
        for (out, bits) in &n.output_map {
            for (i, s) in bits.iter().enumerate() {
                if let Source::Net { instance, port, bit } = s {
                    out_uses.entry((*instance, port.clone())).or_default().push((out.clone(), i as u32, *bit));
                }
            }
        }
        let mut pin_uses: BTreeSet<(usize, String)> = BTreeSet::new();
        for inst in &n.instances {
            for (_, bits) in &inst.inputs {
                for s in bits {
                    if let Source::Net { instance, port, .. } = s {
                        pin_uses.insert((*instance, port.clone()));
                    }
                }
            }
        }
        let mut conns = BTreeMap::new();
        for (k, inst) in n.instances.iter().enumerate() {
            for port in &inst.outputs {
                let key = (k, port.name.clone());
                let uses = out_uses.get(&key).map(Vec::as_slice).unwrap_or(&[]);
                let direct = uses.first().and_then(|(out, _, _)| {
                    let lo = uses.iter().map(|u| u.1).min()?;
                    let contiguous =
                        uses.len() as u32 == port.width && uses.iter().all(|(o, i, b)| o == out && *i == lo + b);
                    contiguous.then(|| (out.clone(), lo))
                });
                let conn = if let Some((out, lo)) = direct {
                    PortConn::Direct(out, lo)
                } else if uses.is_empty() && !pin_uses.contains(&key) {
                    PortConn::Open
                } else {
                    PortConn::Wire(wire_name(n, k, &port.name), port.width)
                };
                conns.insert(key, conn);
            }
        }
        Printer { n, conns }
    }

    fn input_width(&self, name: &str) -> u32 {
        self.n.inputs.iter().find(|p| p.name == name).map_or(1, |p| p.width)
    }

    fn output_width(&self, name: &str) -> u32 {
        self.n.outputs.iter().find(|p| p.name == name).map_or(1, |p| p.width)
    }

    /// Signal name, width and bit offset that carry a net.
    fn net_signal(&self, instance: usize, port: &str) -> (String, u32, u32) {
        match &self.conns[&(instance, port.to_string())] {
            PortConn::Direct(out, lo) => (out.clone(), self.output_width(out), *lo),
            PortConn::Wire(w, width) => (w.clone(), *width, 0),
            PortConn::Open => unreachable!("used nets are connected"),
        }
    }

    /// `(signal, width, bit)` for a non-constant source.
    fn locate(&self, s: &Source) -> Option<(String, u32, u32)> {
        match s {
            Source::Signal { input, bit } => Some((input.clone(), self.input_width(input), *bit)),
            Source::ConstBit(_) => None,
            Source::Net { instance, port, bit } => {
                let (name, width, lo) = self.net_signal(*instance, port);
                Some((name, width, lo + *bit))
            }
        }
    }

    /// Verilog expression for a vector given LSB first, merging runs of
    /// constants and of consecutive bits of one signal.
    fn vector(&self, bits: &[Source]) -> String {
        enum Part {
            Consts(String),
            Bits(String, u32, u32, u32),
        }
        let mut parts: Vec<Part> = Vec::new();
        for s in bits.iter().rev() {
            match (self.locate(s), parts.last_mut()) {
                (None, Some(Part::Consts(digits))) => digits.push(const_char(s)),
                (None, _) => parts.push(Part::Consts(const_char(s).to_string())),
                (Some((name, width, bit)), Some(Part::Bits(n, w, _, lo))) if *n == name && *w == width && *lo == bit + 1 => {
                    *lo = bit;
                }
                (Some((name, width, bit)), _) => parts.push(Part::Bits(name, width, bit, bit)),
            }
        }
        let texts: Vec<String> = parts
            .into_iter()
            .map(|p| match p {
                Part::Consts(d) => format!("{}'b{d}", d.len()),
                Part::Bits(name, width, hi, lo) => select(&name, width, hi, lo),
            })
            .collect();
        if texts.len() == 1 {
            texts.into_iter().next().expect("one part")
        } else {
            format!("{{{}}}", texts.join(", "))
        }
    }

    fn print(&self) -> String {
        let n = self.n;
        let mut out = String::new();
        out.push_str(&format!("module {} (\n", n.name));
        let ports: Vec<String> = n
            .inputs
            .iter()
            .map(|p| format!("  input {}{}", range(p.width), p.name))
            .chain(n.outputs.iter().map(|p| format!("  output {}{}", range(p.width), p.name)))
            .collect();
        out.push_str(&ports.join(",\n"));
        out.push_str("\n);\n");
        let wires: BTreeMap<&str, u32> = self
            .conns
            .values()
            .filter_map(|c| match c {
                PortConn::Wire(name, w) => Some((name.as_str(), *w)),
                _ => None,
            })
            .collect();
        for (name, w) in &wires {
            out.push_str(&format!("  wire {}{name};\n", range(*w)));
        }
        for (k, inst) in n.instances.iter().enumerate() {
            out.push_str("  ");
            out.push_str(&inst.primitive);
            if !inst.params.is_empty() {
                let ps: Vec<String> = inst
                    .params
                    .iter()
                    .map(|(name, w, v)| format!(".{name}({})", verilog::sized_hex(*w, v)))
                    .collect();
                out.push_str(&format!(" #({})", ps.join(", ")));
            }
            let mut pins: Vec<String> = inst.inputs.iter().map(|(pin, bits)| format!(".{pin}({})", self.vector(bits))).collect();
            for port in &inst.outputs {
                let text = match &self.conns[&(k, port.name.clone())] {
                    PortConn::Direct(o, lo) => select(o, self.output_width(o), lo + port.width - 1, *lo),
                    PortConn::Wire(o, _) => o.clone(),
                    PortConn::Open => String::new(),
                };
                pins.push(format!(".{}({text})", port.name));
            }
            out.push_str(&format!(" {} ({});\n", inst.name, pins.join(", ")));
        }
        for (name, bits) in &n.output_map {
            let driven = |s: &Source| match s {
                Source::Net { instance, port, .. } => {
                    matches!(&self.conns[&(*instance, port.clone())], PortConn::Direct(o, _) if o == name)
                }
                _ => false,
            };
            let width = bits.len() as u32;
            let mut i = 0;
            while i < bits.len() {
                if driven(&bits[i]) {
                    i += 1;
                    continue;
                }
                let lo = i;
                while i < bits.len() && !driven(&bits[i]) {
                    i += 1;
                }
                let lhs = select(name, width, i as u32 - 1, lo as u32);
                out.push_str(&format!("  assign {lhs} = {};\n", self.vector(&bits[lo..i])));
            }
        }
        out.push_str("endmodule\n");
        out
    }
}

/// `name`, `name[hi]` or `name[hi:lo]` for bits `hi..=lo` of a `width`-bit
/// signal.
fn select(name: &str, width: u32, hi: u32, lo: u32) -> String {
    if lo == 0 && hi + 1 == width {
        name.to_string()
    } else if hi == lo {
        format!("{name}[{hi}]")
    } else {
        format!("{name}[{hi}:{lo}]")
    }
}

fn const_char(s: &Source) -> char {
    match s {
        Source::ConstBit(true) => '1',
        _ => '0',
    }
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

/// Carry chains name the carry between stage `k` and `k+1` `c<k>`; other
/// internal nets are `<instance>_<port>`.
fn wire_name(n: &Netlist, k: usize, port: &str) -> String {
    let feeds_next = n.instances.get(k + 1).is_some_and(|next| {
        next.inputs.iter().flat_map(|(_, b)| b).any(|s| matches!(s, Source::Net { instance, port: p, .. } if *instance == k && p == port))
    });
    if n.kind == TemplateKind::CarryChain && feeds_next {
        format!("c{k}")
    } else {
        format!("{}_{port}", n.instances[k].name)
    }
}

/// Renders the netlist as structural Verilog. Wires are sorted by name,
/// instances keep their topological order, and parameters are sized
/// uppercase hex.
pub fn print_verilog(n: &Netlist) -> String {
    Printer::new(n).print()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub counterexample: Option<Env>,
}

pub enum CheckMode<'a> {
    /// Every input row; at most `max_input_bits` input bits.
    Exhaustive { max_input_bits: u32 },
    /// One miter query.
    Solver(&'a mut dyn SmtSolver),
}

impl CheckMode<'_> {
    pub const fn exhaustive() -> Self {
        CheckMode::Exhaustive { max_input_bits: 16 }
    }
}

/// Re-imports `netlist_source`, inlining instances from `library`, and
/// compares it with `design`.
pub fn check_equivalence(
    design: &Design,
    netlist_source: &str,
    library: &Library,
    mode: CheckMode<'_>,
) -> Result<EquivalenceReport, EmitError> {
    let netlist = verilog::import_netlist(netlist_source, library)?;
    check_designs(design, &netlist, mode)
}

/// Compares two designs with the same interface.
pub fn check_designs(design: &Design, other: &Design, mode: CheckMode<'_>) -> Result<EquivalenceReport, EmitError> {
    if design.inputs != other.inputs {
        return Err(EmitError::InterfaceMismatch(format!(
            "inputs {:?} vs {:?}",
            names(&design.inputs),
            names(&other.inputs)
        )));
    }
    let mut aligned = Vec::with_capacity(design.outputs.len());
    for o in &design.outputs {
        let m = other
            .output(&o.name)
            .ok_or_else(|| EmitError::InterfaceMismatch(format!("missing output `{}`", o.name)))?;
        if m.expr.width() != o.expr.width() {
            return Err(EmitError::InterfaceMismatch(format!("output `{}` width differs", o.name)));
        }
        aligned.push(OutputDef::new(o.name.clone(), m.expr.clone()));
    }
    if other.outputs.len() != design.outputs.len() {
        return Err(EmitError::InterfaceMismatch("extra outputs".into()));
    }
    let other = Design {
        name: other.name.clone(),
        inputs: other.inputs.clone(),
        outputs: aligned,
    };
    let counterexample = match mode {
        CheckMode::Exhaustive { max_input_bits } => {
            let bits = semantics::total_bits(&design.inputs);
            if bits > u64::from(max_input_bits) {
                return Err(EmitError::TooManyInputBits {
                    bits,
                    max: max_input_bits,
                });
            }
            synthesis::first_difference(design, &other)?
        }
        CheckMode::Solver(solver) => synthesis::find_difference_smt(design, &other, solver)?,
    };
    Ok(EquivalenceReport {
        equivalent: counterexample.is_none(),
        counterexample,
    })
}

fn names(ports: &[Port]) -> Vec<&str> {
    ports.iter().map(|p| p.name.as_str()).collect()
}
