use std::io::Write;

use serde::{Deserialize, Serialize};

use super::solver::{solve_standard_gp, GpProblem};
use crate::error::{Error, Result};

/// A standard GP obtained by condensing the reversed problem at some point,
/// plus a strictly feasible start in the GP's own variables.
#[derive(Debug, Clone)]
pub struct Condensed {
    pub problem: GpProblem,
    pub start: Vec<f64>,
}

/// A reversed GP that is maximized by repeated condensation.
pub trait CondensationProblem {
    /// Objective of the original problem (maximized).
    fn objective(&self, x: &[f64]) -> f64;
    /// Largest relative violation of the original constraints.
    fn residual(&self, x: &[f64]) -> f64;
    fn condense_at(&self, x: &[f64]) -> Result<Condensed>;
    /// Maps a solution of the condensed GP back to original variables.
    fn extract(&self, gp_point: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub point: Vec<f64>,
    pub objective: f64,
    /// Relative Euclidean distance to the previous iterate.
    pub step_norm: f64,
    pub feasibility_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace {
    pub entries: Vec<TraceEntry>,
    pub status: SolveStatus,
    pub message: Option<String>,
}

impl SolveTrace {
    /// Number of condensed GPs solved.
    pub fn iterations(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn last(&self) -> &TraceEntry {
        self.entries.last().expect("trace always holds the start point")
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.objective).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["iteration", "objective", "step_norm", "feasibility_residual"])?;
        for e in &self.entries {
            wtr.write_record([
                e.iteration.to_string(),
                format!("{:e}", e.objective),
                format!("{:e}", e.step_norm),
                format!("{:e}", e.feasibility_residual),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensationSettings {
    /// Relative change in the objective below which iteration stops.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Residual tolerated at the initial point.
    pub feasibility_tol: f64,
}

impl Default for CondensationSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iter: 50,
            feasibility_tol: 1e-6,
        }
    }
}

fn relative_step(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let base: f64 = b.iter().map(|y| y * y).sum();
    (diff / base.max(1e-300)).sqrt()
}

/// Condense at the current iterate, solve the standard GP, repeat until the
/// objective changes by less than `epsilon` (relative) or `max_iter` GPs have
/// been solved. The trace starts with the initial point.
pub fn sequential_condensation<P: CondensationProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    settings: &CondensationSettings,
) -> SolveTrace {
    let residual = problem.residual(x0);
    let mut trace = SolveTrace {
        entries: vec![TraceEntry {
            iteration: 0,
            point: x0.to_vec(),
            objective: problem.objective(x0),
            step_norm: 0.0,
            feasibility_residual: residual,
        }],
        status: SolveStatus::MaxIter,
        message: None,
    };
    if residual > settings.feasibility_tol {
        trace.status = SolveStatus::Infeasible;
        trace.message = Some(format!("initial point violates constraints by {residual:.3e}"));
        return trace;
    }
    for iteration in 1..=settings.max_iter {
        let prev = trace.last().clone();
        let solved = problem
            .condense_at(&prev.point)
            .and_then(|c| solve_standard_gp(&c.problem, &c.start));
        let sol = match solved {
            Ok(sol) => sol,
            Err(e) => {
                trace.status = match e {
                    Error::Infeasible(_) => SolveStatus::Infeasible,
                    _ => SolveStatus::NumericalFailure,
                };
                trace.message = Some(e.to_string());
                return trace;
            }
        };
        let point = problem.extract(&sol.x);
        let objective = problem.objective(&point);
        let scale = prev.objective.abs().max(f64::MIN_POSITIVE);
        if objective < prev.objective - 1e-9 * scale {
            // The inner approximation cannot lose ground beyond solver
            // tolerance; keep the previous iterate.
            trace.status = SolveStatus::Converged;
            return trace;
        }
        trace.entries.push(TraceEntry {
            iteration,
            step_norm: relative_step(&point, &prev.point),
            feasibility_residual: problem.residual(&point),
            point,
            objective,
        });
        if (objective - prev.objective).abs() < settings.epsilon * scale {
            trace.status = SolveStatus::Converged;
            return trace;
        }
    }
    trace
}
