//! The `techmap` command line. Exit codes: 0 success, 1 user error,
//! 2 internal or solver failure, 3 no mapping found or designs differ.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use techmap_core::emit::{self, CheckMode, EmitError};
use techmap_core::semantics::{self, eval_concrete};
use techmap_core::synthesis::{
    solve_brute_force, solve_cegis, BruteLimits, CegisBudget, Solution, SynthesisError, SynthesisProblem,
};
use techmap_core::templates::{self, TemplateError, TemplateKind, TemplateOptions};
use techmap_core::verilog::{self, VerilogError};
use techmap_core::{models, BigUint, Design, Env, Library};

use crate::json;
use crate::solver::SolverConfig;
use crate::store;

#[derive(Debug, Parser)]
#[command(name = "techmap", version, about = "Solver-driven FPGA technology mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the semantics of a primitive model as JSON.
    Import {
        model: PathBuf,
        /// Primitive name; defaults to the module name.
        #[arg(long)]
        name: Option<String>,
        /// Output file; standard output if absent.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Map a design onto library primitives and write a netlist.
    Map(MapArgs),
    /// Check a netlist against its design.
    Verify(VerifyArgs),
    /// Evaluate a design on one input assignment.
    Simulate {
        #[arg(long)]
        design: PathBuf,
        /// Comma-separated `name=value` pairs; values in decimal, 0x or 0b.
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Brute,
    Cegis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Solver,
}

#[derive(Debug, clap::Args)]
struct SolverArgs {
    /// Solver executable; defaults to $TECHMAP_SOLVER, then z3.
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Replaces the solver's default arguments; repeatable.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut c = match &self.solver {
            Some(p) => SolverConfig::for_program(p.clone()),
            None => SolverConfig::from_env(),
        };
        if !self.solver_args.is_empty() {
            c.args = self.solver_args.clone();
        }
        c
    }
}

#[derive(Debug, clap::Args)]
struct MapArgs {
    /// Design as Verilog (`.v`) or JSON.
    #[arg(long)]
    design: PathBuf,
    /// Library directory; the built-in models if absent.
    #[arg(long)]
    library: Option<PathBuf>,
    /// Templates to try, in order.
    #[arg(long, value_delimiter = ',', required = true)]
    template: Vec<String>,
    #[arg(long, value_enum, default_value_t = BackendArg::Brute)]
    backend: BackendArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    max_iters: u32,
    /// Restrict templates to this primitive.
    #[arg(long)]
    primitive: Option<String>,
    /// Wire LUT pins to design inputs in order instead of searching.
    #[arg(long)]
    pinned: bool,
    #[arg(short = 'o', long)]
    output: PathBuf,
    /// Report path; defaults to the output path with extension `report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    netlist: PathBuf,
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    #[command(flatten)]
    solver: SolverArgs,
}

/// A failed command and its exit code.
#[derive(Debug)]
enum Failure {
    User(String),
    Internal(String),
    Negative(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::User(_) => 1,
            Failure::Internal(_) => 2,
            Failure::Negative(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::User(m) | Failure::Internal(m) | Failure::Negative(m) => m,
        }
    }
}

fn user(m: impl Display) -> Failure {
    Failure::User(m.to_string())
}

fn internal(m: impl Display) -> Failure {
    Failure::Internal(m.to_string())
}

/// Runs the command line with the given arguments, program name first.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Import { model, name, output } => cmd_import(&model, name.as_deref(), output.as_deref(), out),
        Command::Map(a) => cmd_map(&a, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Simulate { design, inputs } => cmd_simulate(&design, &inputs, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn verilog_error(path: &Path, e: &VerilogError) -> Failure {
    match e.loc() {
        Some(loc) => user(format!("{}:{loc}: {e}", path.display())),
        None => user(format!("{}: {e}", path.display())),
    }
}

fn load_design(path: &Path) -> Result<Design, Failure> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "v" || e == "sv") {
        verilog::import_design(&text).map_err(|e| verilog_error(path, &e))
    } else {
        json::design_from_json(&text).map_err(|e| user(format!("{}: {e}", path.display())))
    }
}

fn load_library(dir: Option<&Path>) -> Result<Library, Failure> {
    match dir {
        Some(d) => store::load_library(d).map_err(user),
        None => Ok(models::default_library()),
    }
}

fn cmd_import(model: &Path, name: Option<&str>, output: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let text = read(model)?;
    let mut prim = verilog::import_primitive(&text).map_err(|e| verilog_error(model, &e))?;
    if let Some(n) = name {
        prim.name = n.to_string();
    }
    let encoded = json::primitive_to_json(&prim);
    match output {
        Some(p) => write_file(p, &encoded),
        None => out.write_all(encoded.as_bytes()).map_err(internal),
    }
}

enum Attempt {
    Solved(Solution),
    Rejected(String),
}

fn attempt(
    kind: TemplateKind,
    design: &Design,
    library: &Library,
    a: &MapArgs,
) -> Result<(Option<templates::Sketch>, Attempt), Failure> {
    let options = TemplateOptions {
        primitive: a.primitive.clone(),
        pinned: a.pinned,
    };
    let sketch = match templates::instantiate(kind, design, library, &options) {
        Ok(s) => s,
        Err(e @ (TemplateError::NoCompatiblePrimitive { .. } | TemplateError::SignatureMismatch { .. })) => {
            return Ok((None, Attempt::Rejected(e.to_string())))
        }
        Err(e @ (TemplateError::UnknownPrimitive(_) | TemplateError::UnknownTemplate(_))) => return Err(user(e)),
        Err(e) => return Err(internal(e)),
    };
    let problem = SynthesisProblem::from_sketch(design, &sketch, library).map_err(internal)?;
    let result = match a.backend {
        BackendArg::Brute => solve_brute_force(&problem, &BruteLimits::default()),
        BackendArg::Cegis => {
            let budget = CegisBudget {
                max_iters: a.max_iters,
                seed: a.seed,
                ..CegisBudget::default()
            };
            solve_cegis(&problem, &mut a.solver.config(), &budget)
        }
    };
    match result {
        Ok(sol) => Ok((Some(sketch), Attempt::Solved(sol))),
        Err(
            e @ (SynthesisError::TemplateInfeasible
            | SynthesisError::LimitExceeded { .. }
            | SynthesisError::BudgetExceeded(_)),
        ) => Ok((Some(sketch), Attempt::Rejected(e.to_string()))),
        Err(e) => Err(internal(e)),
    }
}

fn report_path(a: &MapArgs) -> PathBuf {
    a.report.clone().unwrap_or_else(|| a.output.with_extension("report.json"))
}

fn cmd_map(a: &MapArgs, err: &mut dyn Write) -> Result<(), Failure> {
    let design = load_design(&a.design)?;
    let library = load_library(a.library.as_deref())?;
    let kinds = a
        .template
        .iter()
        .map(|t| t.parse::<TemplateKind>().map_err(user))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reasons = Vec::new();
    for kind in kinds {
        let start = Instant::now();
        let (sketch, outcome) = attempt(kind, &design, &library, a)?;
        let elapsed = start.elapsed().as_millis() as u64;
        let sol = match outcome {
            Attempt::Rejected(r) => {
                reasons.push(format!("{kind}: {r}"));
                continue;
            }
            Attempt::Solved(s) => s,
        };
        let sketch = sketch.expect("solved attempts carry their sketch");
        let netlist = emit::resolve(&design.name, &sketch, &sol.holes, &library).map_err(internal)?;
        let text = emit::print_verilog(&netlist);
        let mode = if semantics::total_bits(&design.inputs) <= 16 {
            Some(CheckMode::exhaustive())
        } else {
            None
        };
        let mut solver = a.solver.config();
        let mode = match (mode, a.backend) {
            (Some(m), _) => Some(m),
            (None, BackendArg::Cegis) => Some(CheckMode::Solver(&mut solver)),
            (None, BackendArg::Brute) => None,
        };
        if let Some(mode) = mode {
            let report = emit::check_equivalence(&design, &text, &library, mode).map_err(internal)?;
            if !report.equivalent {
                return Err(internal("emitted netlist failed re-verification"));
            }
        }
        write_file(&a.output, &text)?;
        let mut stats = json!({"iterations": sol.stats.iterations, "solver_calls": sol.stats.solver_calls});
        if a.timing {
            stats["wall_time_ms"] = json!(elapsed);
        }
        let report = json!({
            "template": kind.name(),
            "backend": sol.backend.name(),
            "holes": json::holes_to_value(&sol.holes),
            "stats": stats,
        });
        write_file(&report_path(a), &json::to_text(&report))?;
        let _ = writeln!(
            err,
            "mapped `{}` with {kind} ({}): {} instances, {} iterations, {} solver calls, {elapsed} ms",
            design.name,
            sol.backend,
            netlist.instances.len(),
            sol.stats.iterations,
            sol.stats.solver_calls
        );
        return Ok(());
    }
    Err(Failure::Negative(format!("no template produced a mapping\n  {}", reasons.join("\n  "))))
}

fn format_env(env: &Env, ports: &[techmap_core::Port]) -> String {
    ports
        .iter()
        .map(|p| format!("{}=0x{:X}", p.name, env.get(&p.name).cloned().unwrap_or_default()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let design = load_design(&a.design)?;
    let library = load_library(a.library.as_deref())?;
    let source = read(&a.netlist)?;
    let mut solver = a.solver.config();
    let mode = match a.mode {
        ModeArg::Exhaustive => CheckMode::exhaustive(),
        ModeArg::Solver => CheckMode::Solver(&mut solver),
    };
    let report = match emit::check_equivalence(&design, &source, &library, mode) {
        Ok(r) => r,
        Err(EmitError::Verilog(e)) => return Err(verilog_error(&a.netlist, &e)),
        Err(e @ (EmitError::TooManyInputBits { .. } | EmitError::InterfaceMismatch(_))) => return Err(user(e)),
        Err(e) => return Err(internal(e)),
    };
    if report.equivalent {
        writeln!(out, "equivalent").map_err(internal)?;
        return Ok(());
    }
    let cex = report.counterexample.expect("inequivalent reports carry a counterexample");
    writeln!(out, "counterexample: {}", format_env(&cex, &design.inputs)).map_err(internal)?;
    Err(Failure::Negative("netlist differs from the design".into()))
}

/// Parses `0x..`, `0b..` or decimal.
pub fn parse_value(s: &str) -> Option<BigUint> {
    let s = s.trim().replace('_', "");
    let (digits, radix) = if let Some(h) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        (h, 16)
    } else if let Some(b) = s.strip_prefix("0b").or_else(|| s.strip_prefix("0B")) {
        (b, 2)
    } else {
        (s.as_str(), 10)
    };
    if digits.is_empty() {
        return None;
    }
    BigUint::parse_bytes(digits.as_bytes(), radix)
}

fn cmd_simulate(design: &Path, inputs: &[String], out: &mut dyn Write) -> Result<(), Failure> {
    let design = load_design(design)?;
    let mut given: BTreeMap<&str, BigUint> = BTreeMap::new();
    for pair in inputs.iter().filter(|s| !s.trim().is_empty()) {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| user(format!("expected `name=value`, found `{pair}`")))?;
        let value = parse_value(value).ok_or_else(|| user(format!("bad value `{value}` for `{name}`")))?;
        if given.insert(name.trim(), value).is_some() {
            return Err(user(format!("input `{name}` given twice")));
        }
    }
    let mut env = Env::new();
    for p in &design.inputs {
        let v = given
            .remove(p.name.as_str())
            .ok_or_else(|| user(format!("missing input `{}`", p.name)))?;
        env.insert(p.name.clone(), p.width, v).map_err(user)?;
    }
    if let Some(extra) = given.keys().next() {
        return Err(user(format!("design has no input `{extra}`")));
    }
    let mut fields = Vec::with_capacity(design.outputs.len());
    for o in &design.outputs {
        let v = eval_concrete(&o.expr, &env).map_err(internal)?;
        fields.push(format!("{}=0x{v:X}", o.name));
    }
    writeln!(out, "{}", fields.join(" ")).map_err(internal)?;
    Ok(())
}

