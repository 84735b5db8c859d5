//! Posynomial algebra, AM-GM condensation, a log-barrier solver for
//! standard-form GPs and the sequential condensation loop built on them.

mod posynomial;
mod sequential;
mod solver;

pub use posynomial::{condense, evaluate, Monomial, Posynomial, VarId, GAMMA_FLOOR};
pub use sequential::{
    sequential_condensation, CondensationProblem, CondensationSettings, Condensed, SolveStatus,
    SolveTrace, TraceEntry,
};
pub use solver::{
    solve_standard_gp, solve_standard_gp_with, GpProblem, GpSolution, LogSumExp, SolverSettings,
};
