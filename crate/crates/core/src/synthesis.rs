//! Solving for hole values that make a sketch equal to a design on every
//! input: exhaustive enumeration, and counterexample-guided synthesis over a
//! QF_BV solver.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::ir::{self, Design, Expr, IrError, OutputDef, Port, SymbolKind};
use crate::library::Library;
use crate::rng::Lcg;
use crate::semantics::{self, Env, EvalError, Program};
use crate::smt::{self, CheckSat, SExpr, SmtError, SymbolTable};
use crate::templates::{self, Sketch, TemplateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Backend {
    Brute,
    Cegis,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Brute => "brute",
            Backend::Cegis => "cegis",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" => Ok(Backend::Brute),
            "cegis" => Ok(Backend::Cegis),
            _ => Err(format!("unknown backend `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("no hole assignment makes the template equal to the design")]
    TemplateInfeasible,
    #[error("{limit} is {value}, above the limit of {max}")]
    LimitExceeded { limit: &'static str, value: String, max: String },
    #[error("no solution within {0} iterations")]
    BudgetExceeded(u32),
    #[error("solver answered unknown")]
    SolverUnknown,
    #[error("solver protocol error: {message}")]
    SolverProtocol { message: String, transcript: String },
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("counterexample repeats an earlier example")]
    NoProgress,
    #[error("problem is malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Design outputs against hole-bearing sketch outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisProblem {
    pub design: Design,
    /// Aligned with `design.outputs` by position, name and width.
    pub sketch: Vec<OutputDef>,
    pub holes: Vec<Port>,
    pub inputs: Vec<Port>,
}

impl SynthesisProblem {
    pub fn new(design: Design, sketch: Vec<OutputDef>, holes: Vec<Port>) -> Result<Self, SynthesisError> {
        design.validate()?;
        if design.outputs.len() != sketch.len() {
            return Err(SynthesisError::Malformed(format!(
                "{} design outputs but {} sketch outputs",
                design.outputs.len(),
                sketch.len()
            )));
        }
        let env = design.input_env();
        let mut hole_env = BTreeMap::new();
        for h in &holes {
            if hole_env.insert(h.name.clone(), h.width).is_some() {
                return Err(IrError::DuplicateName(h.name.clone()).into());
            }
            if env.contains_key(&h.name) {
                return Err(IrError::SymbolConflict(h.name.clone()).into());
            }
        }
        for (d, s) in design.outputs.iter().zip(&sketch) {
            if d.name != s.name {
                return Err(SynthesisError::Malformed(format!(
                    "output `{}` is aligned with `{}`",
                    d.name, s.name
                )));
            }
            let w = ir::validate_with(&s.expr, &env, true, &mut hole_env.clone())?;
            if w != d.expr.width() {
                return Err(IrError::WidthMismatch {
                    node: format!("output {}", d.name),
                    expected: d.expr.width(),
                    actual: w,
                }
                .into());
            }
        }
        let (_, used) = ir::free_symbols_all(sketch.iter().map(|o| &o.expr));
        if let Some((h, _)) = used.iter().find(|(h, _)| !hole_env.contains_key(*h)) {
            return Err(SynthesisError::Malformed(format!("hole `{h}` is not declared")));
        }
        let inputs = design.inputs.clone();
        Ok(SynthesisProblem {
            design,
            sketch,
            holes,
            inputs,
        })
    }

    pub fn from_sketch(design: &Design, sketch: &Sketch, library: &Library) -> Result<Self, SynthesisError> {
        let exprs = templates::sketch_to_exprs(sketch, library)?;
        Self::new(design.clone(), exprs, sketch.holes())
    }

    pub fn hole_bits(&self) -> u64 {
        semantics::total_bits(&self.holes)
    }

    pub fn input_bits(&self) -> u64 {
        semantics::total_bits(&self.inputs)
    }

    /// Sketch outputs with the holes replaced by constants.
    pub fn instantiate(&self, holes: &BTreeMap<String, BigUint>) -> Result<Vec<OutputDef>, SynthesisError> {
        let bindings = self.hole_bindings(holes)?;
        let exprs: Vec<Expr> = self.sketch.iter().map(|o| o.expr.clone()).collect();
        let done = ir::substitute_all(&exprs, &bindings, SymbolKind::Holes)?;
        Ok(self.sketch.iter().zip(done).map(|(o, e)| OutputDef::new(o.name.clone(), e)).collect())
    }

    fn hole_bindings(&self, holes: &BTreeMap<String, BigUint>) -> Result<BTreeMap<String, Expr>, SynthesisError> {
        let mut bindings = BTreeMap::new();
        for h in &self.holes {
            let v = holes
                .get(&h.name)
                .ok_or_else(|| SynthesisError::Malformed(format!("no value for hole `{}`", h.name)))?;
            if v.bits() > u64::from(h.width) {
                return Err(IrError::ConstOutOfRange {
                    width: h.width,
                    value: v.to_string(),
                }
                .into());
            }
            bindings.insert(h.name.clone(), Expr::constant(h.width, v.clone()));
        }
        Ok(bindings)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: u64,
    pub solver_calls: u64,
    /// Filled in by callers that can read a clock.
    pub wall_time_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub holes: BTreeMap<String, BigUint>,
    pub backend: Backend,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteLimits {
    pub max_hole_space: u64,
    pub max_input_bits: u32,
}

impl Default for BruteLimits {
    fn default() -> Self {
        BruteLimits {
            max_hole_space: 1 << 20,
            max_input_bits: 16,
        }
    }
}

fn row_values(ports: &[Port]) -> impl Iterator<Item = Vec<BigUint>> + '_ {
    let rows = 1u64 << semantics::total_bits(ports);
    (0..rows).map(move |r| semantics::split_row(r, ports))
}

fn check_input_bits(p: &SynthesisProblem, max: u32) -> Result<(), SynthesisError> {
    if p.input_bits() > u64::from(max) {
        return Err(SynthesisError::LimitExceeded {
            limit: "input bits",
            value: p.input_bits().to_string(),
            max: max.to_string(),
        });
    }
    Ok(())
}

/// Enumerates hole assignments in ascending order of their concatenation
/// (first hole most significant) and returns the first one that matches the
/// design on every input row.
pub fn solve_brute_force(p: &SynthesisProblem, limits: &BruteLimits) -> Result<Solution, SynthesisError> {
    check_input_bits(p, limits.max_input_bits)?;
    let hole_bits = p.hole_bits();
    if hole_bits >= 64 || (1u64 << hole_bits) > limits.max_hole_space {
        return Err(SynthesisError::LimitExceeded {
            limit: "hole space",
            value: format!("2^{hole_bits}"),
            max: limits.max_hole_space.to_string(),
        });
    }
    let design_roots: Vec<Expr> = p.design.outputs.iter().map(|o| o.expr.clone()).collect();
    let mut design = Program::compile(&design_roots, &p.inputs)?;
    let sketch_roots: Vec<Expr> = p.sketch.iter().map(|o| o.expr.clone()).collect();
    let slots: Vec<Port> = p.inputs.iter().chain(&p.holes).cloned().collect();
    let mut sketch = Program::compile(&sketch_roots, &slots)?;

    let rows: Vec<(Vec<BigUint>, Vec<BigUint>)> = row_values(&p.inputs)
        .map(|r| {
            let out = design.run(&r);
            (r, out)
        })
        .collect();

    // rows that rejected earlier candidates are tried first
    let mut hot: Vec<usize> = Vec::new();
    let mut slot_values: Vec<BigUint> = alloc::vec![BigUint::zero(); slots.len()];
    let n_in = p.inputs.len();
    for a in 0..(1u64 << hole_bits) {
        let iterations = a + 1;
        for (s, v) in slot_values[n_in..].iter_mut().zip(semantics::split_row(a, &p.holes)) {
            *s = v;
        }
        let mut fails = |i: usize, slot_values: &mut Vec<BigUint>| {
            let (inputs, expected) = &rows[i];
            slot_values[..n_in].clone_from_slice(inputs);
            sketch.run(slot_values) != *expected
        };
        let mut rejected = hot.iter().any(|&i| fails(i, &mut slot_values));
        if !rejected {
            if let Some(i) = (0..rows.len()).find(|&i| fails(i, &mut slot_values)) {
                hot.push(i);
                rejected = true;
            }
        }
        if !rejected {
            let holes = p
                .holes
                .iter()
                .map(|h| h.name.clone())
                .zip(slot_values[n_in..].iter().cloned())
                .collect();
            return Ok(Solution {
                holes,
                backend: Backend::Brute,
                stats: SolveStats {
                    iterations,
                    ..SolveStats::default()
                },
            });
        }
    }
    Err(SynthesisError::TemplateInfeasible)
}

/// Exhaustively compares the instantiated sketch with the design; returns
/// the first differing input row.
pub fn find_mismatch(
    p: &SynthesisProblem,
    holes: &BTreeMap<String, BigUint>,
    max_input_bits: u32,
) -> Result<Option<Env>, SynthesisError> {
    check_input_bits(p, max_input_bits)?;
    let concrete = p.instantiate(holes)?;
    let other = Design {
        name: p.design.name.clone(),
        inputs: p.inputs.clone(),
        outputs: concrete,
    };
    Ok(first_difference(&p.design, &other)?)
}

/// First input row (ascending) on which two designs with the same inputs
/// disagree.
pub fn first_difference(a: &Design, b: &Design) -> Result<Option<Env>, EvalError> {
    let ra: Vec<Expr> = a.outputs.iter().map(|o| o.expr.clone()).collect();
    let rb: Vec<Expr> = b.outputs.iter().map(|o| o.expr.clone()).collect();
    let mut pa = Program::compile(&ra, &a.inputs)?;
    let mut pb = Program::compile(&rb, &a.inputs)?;
    for row in row_values(&a.inputs) {
        if pa.run(&row) != pb.run(&row) {
            return Ok(Some(Env::from_ports(&a.inputs, &row)?));
        }
    }
    Ok(None)
}

/// A QF_BV solver that runs one complete script per call.
pub trait SmtSolver {
    /// Runs `script` and returns everything the solver printed.
    fn run(&mut self, script: &str) -> Result<String, SolverFailure>;
}

/// The solver could not be run or exited abnormally.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct SolverFailure(pub String);

impl From<SolverFailure> for SynthesisError {
    fn from(e: SolverFailure) -> Self {
        SynthesisError::Solver(e.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CegisBudget {
    pub max_iters: u32,
    pub seed: u64,
    pub init_examples: u32,
}

impl Default for CegisBudget {
    fn default() -> Self {
        CegisBudget {
            max_iters: 64,
            seed: 0,
            init_examples: 4,
        }
    }
}

const HEADER: &str = "(set-option :produce-models true)\n(set-logic QF_BV)\n";

fn declare(out: &mut String, smt_name: &str, width: u32) {
    out.push_str(&format!("(declare-const {smt_name} (_ BitVec {width}))\n"));
}

fn get_value(out: &mut String, names: &[String]) {
    out.push_str("(check-sat)\n");
    if !names.is_empty() {
        out.push_str(&format!("(get-value ({}))\n", names.join(" ")));
    }
}

fn port_table(prefix: &str, ports: &[Port]) -> SymbolTable {
    let mut t = SymbolTable::new();
    for p in ports {
        t.add(prefix, &p.name);
    }
    t
}

fn hole_table(p: &SynthesisProblem) -> SymbolTable {
    port_table("h_", &p.holes)
}

/// Query for hole values that agree with the design on every example.
/// Asserts one equality per example and output.
pub fn emit_synth_query(p: &SynthesisProblem, examples: &[Env]) -> Result<String, SynthesisError> {
    let table = hole_table(p);
    let mut out = String::from(HEADER);
    let names: Vec<String> = p.holes.iter().map(|h| table.smt_name(&h.name).expect("registered").to_string()).collect();
    for (h, n) in p.holes.iter().zip(&names) {
        declare(&mut out, n, h.width);
    }
    let roots: Vec<Expr> = p.sketch.iter().map(|o| o.expr.clone()).collect();
    for e in examples {
        let bindings: BTreeMap<String, Expr> = p
            .inputs
            .iter()
            .map(|i| {
                let v = e.get(&i.name).cloned().unwrap_or_default();
                (i.name.clone(), Expr::constant(i.width, v))
            })
            .collect();
        let concrete = ir::substitute_all(&roots, &bindings, SymbolKind::Vars)?;
        for (d, s) in p.design.outputs.iter().zip(concrete) {
            let expected = semantics::eval_concrete(&d.expr, e)?;
            let term = smt::lower_to_smt(&s, table.map())?;
            out.push_str(&format!("(assert (= {term} {}))\n", smt::bv_literal(&expected, d.expr.width())));
        }
    }
    get_value(&mut out, &names);
    Ok(out)
}

/// Query for an input on which the sketch, with `holes` filled in, differs
/// from the design.
pub fn emit_verify_query(p: &SynthesisProblem, holes: &BTreeMap<String, BigUint>) -> Result<String, SynthesisError> {
    let concrete = p.instantiate(holes)?;
    miter_query(&p.inputs, &p.design.outputs, &concrete)
}

/// Satisfiable iff some input makes `a` and `b` differ.
pub fn miter_query(inputs: &[Port], a: &[OutputDef], b: &[OutputDef]) -> Result<String, SynthesisError> {
    let table = port_table("i_", inputs);
    let mut out = String::from(HEADER);
    let names: Vec<String> = inputs.iter().map(|i| table.smt_name(&i.name).expect("registered").to_string()).collect();
    for (i, n) in inputs.iter().zip(&names) {
        declare(&mut out, n, i.width);
    }
    let mut eqs = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let tx = smt::lower_to_smt(&x.expr, table.map())?;
        let ty = smt::lower_to_smt(&y.expr, table.map())?;
        eqs.push(format!("(= {tx} {ty})"));
    }
    let body = match eqs.as_slice() {
        [] => "true".to_string(),
        [one] => one.clone(),
        many => format!("(and {})", many.join(" ")),
    };
    out.push_str(&format!("(assert (not {body}))\n"));
    get_value(&mut out, &names);
    Ok(out)
}

fn protocol(message: impl Into<String>, transcript: &str) -> SynthesisError {
    SynthesisError::SolverProtocol {
        message: message.into(),
        transcript: transcript.to_string(),
    }
}

/// Parses a `get-value` response. Symbols are mapped back through `table`;
/// every value is checked against the width of its symbol in `expected`.
/// Symbols the solver omitted are absent from the result.
pub fn parse_model(
    response: &str,
    table: &SymbolTable,
    expected: &[Port],
) -> Result<BTreeMap<String, BigUint>, SynthesisError> {
    let parsed = smt::parse_sexprs(response).map_err(|m| protocol(m, response))?;
    let mut out = BTreeMap::new();
    let Some(first) = parsed.first() else {
        return Ok(out);
    };
    let pairs = first.as_list().ok_or_else(|| protocol("expected a list of values", response))?;
    for pair in pairs {
        let [SExpr::Atom(sym), value] = pair.as_list().unwrap_or(&[]) else {
            return Err(protocol("expected `(symbol value)`", response));
        };
        let name = table.original(sym).ok_or_else(|| protocol(format!("unexpected symbol `{sym}`"), response))?;
        let port = expected
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| protocol(format!("unexpected symbol `{sym}`"), response))?;
        let (v, w) = smt::parse_bv_value(value).ok_or_else(|| protocol(format!("bad value for `{sym}`"), response))?;
        if w != port.width {
            return Err(protocol(format!("`{sym}` has {w} bits, expected {}", port.width), response));
        }
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

/// Runs a script and returns the verdict and the text after it.
fn query(solver: &mut dyn SmtSolver, script: &str, calls: &mut u64) -> Result<(CheckSat, String), SynthesisError> {
    *calls += 1;
    let stdout = solver.run(script)?;
    let (verdict, rest) = smt::split_check_sat(&stdout).map_err(|m| protocol(m, &stdout))?;
    if verdict == CheckSat::Unknown {
        return Err(SynthesisError::SolverUnknown);
    }
    Ok((verdict, rest.to_string()))
}

fn input_model(response: &str, table: &SymbolTable, inputs: &[Port]) -> Result<Env, SynthesisError> {
    let model = parse_model(response, table, inputs)?;
    let mut env = Env::new();
    for i in inputs {
        let v = model
            .get(&i.name)
            .ok_or_else(|| protocol(format!("no value for input `{}`", i.name), response))?;
        env.insert(i.name.clone(), i.width, v.clone())?;
    }
    Ok(env)
}

/// Asks the solver for an input on which two designs with the same inputs
/// and aligned outputs differ.
pub fn find_difference_smt(a: &Design, b: &Design, solver: &mut dyn SmtSolver) -> Result<Option<Env>, SynthesisError> {
    let script = miter_query(&a.inputs, &a.outputs, &b.outputs)?;
    let (verdict, rest) = query(solver, &script, &mut 0)?;
    if verdict == CheckSat::Unsat {
        return Ok(None);
    }
    Ok(Some(input_model(&rest, &port_table("i_", &a.inputs), &a.inputs)?))
}

/// The examples CEGIS starts from: all zeros, then seeded random inputs.
pub fn initial_examples(inputs: &[Port], budget: &CegisBudget) -> Vec<Env> {
    let mut rng = Lcg::new(budget.seed);
    let mut out: Vec<Env> = Vec::new();
    for k in 0..budget.init_examples.max(1) {
        let mut env = Env::new();
        for i in inputs {
            let v = if k == 0 { BigUint::zero() } else { rng.bits(i.width) };
            env.insert(i.name.clone(), i.width, v).expect("value fits by construction");
        }
        if !out.contains(&env) {
            out.push(env);
        }
    }
    out
}

pub fn solve_cegis(
    p: &SynthesisProblem,
    solver: &mut dyn SmtSolver,
    budget: &CegisBudget,
) -> Result<Solution, SynthesisError> {
    let mut examples = initial_examples(&p.inputs, budget);
    let hole_names = hole_table(p);
    let inputs = port_table("i_", &p.inputs);
    let mut calls = 0u64;
    let mut seen: BTreeSet<Vec<BigUint>> = examples.iter().map(|e| e.values_for(&p.inputs)).collect();
    for iteration in 1..=u64::from(budget.max_iters) {
        let candidate = if p.holes.is_empty() {
            BTreeMap::new()
        } else {
            let script = emit_synth_query(p, &examples)?;
            let (verdict, rest) = query(solver, &script, &mut calls)?;
            if verdict == CheckSat::Unsat {
                return Err(SynthesisError::TemplateInfeasible);
            }
            let mut model = parse_model(&rest, &hole_names, &p.holes)?;
            for h in &p.holes {
                model.entry(h.name.clone()).or_insert_with(BigUint::zero);
            }
            model
        };
        let script = emit_verify_query(p, &candidate)?;
        let (verdict, rest) = query(solver, &script, &mut calls)?;
        if verdict == CheckSat::Unsat {
            return Ok(Solution {
                holes: candidate,
                backend: Backend::Cegis,
                stats: SolveStats {
                    iterations: iteration,
                    solver_calls: calls,
                    wall_time_ms: None,
                },
            });
        }
        if p.holes.is_empty() {
            return Err(SynthesisError::TemplateInfeasible);
        }
        let env = input_model(&rest, &inputs, &p.inputs)?;
        if !seen.insert(env.values_for(&p.inputs)) {
            return Err(SynthesisError::NoProgress);
        }
        examples.push(env);
    }
    Err(SynthesisError::BudgetExceeded(budget.max_iters))
}
