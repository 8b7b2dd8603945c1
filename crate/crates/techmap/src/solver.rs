//! External SMT-LIB solvers run as one subprocess per query.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use techmap_core::synthesis::{SmtSolver, SolverFailure};

/// Environment variable naming the default solver executable.
pub const SOLVER_ENV: &str = "TECHMAP_SOLVER";

/// An executable plus the arguments that make it read SMT-LIB v2 from
/// standard input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl SolverConfig {
    pub fn z3() -> Self {
        Self::new("z3", ["-in", "-smt2"])
    }

    pub fn cvc5() -> Self {
        Self::new("cvc5", ["--lang=smt2"])
    }

    pub fn new<S: Into<String>>(program: impl Into<PathBuf>, args: impl IntoIterator<Item = S>) -> Self {
        SolverConfig {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    /// Default arguments for known solvers, recognized by file stem.
    pub fn for_program(program: impl Into<PathBuf>) -> Self {
        let program = program.into();
        let stem = program.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let args = match stem {
            "z3" => Self::z3().args,
            "cvc5" | "cvc4" => Self::cvc5().args,
            _ => Vec::new(),
        };
        SolverConfig { program, args }
    }

    /// `$TECHMAP_SOLVER` if set, else z3 from the search path.
    pub fn from_env() -> Self {
        match std::env::var_os(SOLVER_ENV).filter(|v| !v.is_empty()) {
            Some(p) => Self::for_program(PathBuf::from(p)),
            None => Self::z3(),
        }
    }

    /// Runs a trivial query; true iff the solver answers `sat`.
    pub fn probe(&self) -> bool {
        let mut s = self.clone();
        matches!(s.run("(check-sat)\n"), Ok(out) if out.trim() == "sat")
    }

    fn describe(&self) -> String {
        let mut parts: Vec<OsString> = vec![self.program.as_os_str().to_owned()];
        parts.extend(self.args.iter().map(OsString::from));
        parts.iter().map(|p| p.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" ")
    }

    pub fn program(&self) -> &Path {
        &self.program
    }
}

impl SmtSolver for SolverConfig {
    fn run(&mut self, script: &str) -> Result<String, SolverFailure> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SolverFailure(format!("cannot start `{}`: {e}", self.describe())))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let written = stdin.write_all(script.as_bytes()).and_then(|_| stdin.write_all(b"(exit)\n"));
        drop(stdin);
        let out = child
            .wait_with_output()
            .map_err(|e| SolverFailure(format!("`{}` failed: {e}", self.describe())))?;
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        if stdout.trim().is_empty() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            let reason = match written {
                Err(e) => e.to_string(),
                Ok(()) => format!("{}: {}", out.status, stderr.trim()),
            };
            return Err(SolverFailure(format!("`{}` produced no output ({reason})", self.describe())));
        }
        Ok(stdout)
    }
}
