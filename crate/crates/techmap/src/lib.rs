//! File formats, solver processes and the command line around
//! `techmap-core`.

pub mod cli;
pub mod json;
pub mod solver;
pub mod store;

pub use solver::SolverConfig;
pub use store::{load_library, save_library};
