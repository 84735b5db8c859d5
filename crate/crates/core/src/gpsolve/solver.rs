//! Standard-form GP solved as a convex program in `u = ln x` by a
//! log-barrier Newton method, with a phase-I search when the supplied start
//! is not strictly feasible.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::posynomial::{log_sum_exp, Monomial, Posynomial, VarId};
use crate::error::{invalid, Error, Result};

/// `minimize objective(x)` subject to `m(x) ≤ 1`, `f(x) ≤ 1` and
/// `x_i ≥ floors[i]` (a floor of 0 means no floor).
#[derive(Debug, Clone, Serialize)]
pub struct GpProblem {
    pub n_vars: usize,
    pub objective: Monomial,
    pub monomial_constraints: Vec<Monomial>,
    pub posynomial_constraints: Vec<Posynomial>,
    pub floors: Vec<f64>,
}

impl GpProblem {
    pub fn new(n_vars: usize, objective: Monomial) -> Self {
        Self {
            n_vars,
            objective,
            monomial_constraints: Vec::new(),
            posynomial_constraints: Vec::new(),
            floors: vec![0.0; n_vars],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let max_var = std::iter::once(self.objective.max_var())
            .chain(self.monomial_constraints.iter().map(Monomial::max_var))
            .chain(self.posynomial_constraints.iter().map(Posynomial::max_var))
            .flatten()
            .max();
        if max_var.is_some_and(|v| v >= self.n_vars) {
            return Err(invalid("constraint references a variable outside the problem"));
        }
        if self.floors.len() != self.n_vars || self.floors.iter().any(|f| !(*f >= 0.0)) {
            return Err(invalid("floors must be one non-negative value per variable"));
        }
        Ok(())
    }

    /// Largest relative constraint violation `max(g(x) − 1, 0)` at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mono = self.monomial_constraints.iter().map(|m| m.eval(x));
        let posy = self.posynomial_constraints.iter().map(|p| p.eval(x));
        let floors = self
            .floors
            .iter()
            .zip(x)
            .filter(|(f, _)| **f > 0.0)
            .map(|(f, xi)| f / xi);
        mono.chain(posy)
            .chain(floors)
            .map(|g| (g - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub mu: f64,
    pub t0: f64,
    /// Duality-gap target in log units of the objective.
    pub gap_tol: f64,
    pub newton_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_newton: usize,
    /// Newton steps per centering; near the precision limit the decrement
    /// can stall above `newton_tol`.
    pub max_centering: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            mu: 10.0,
            t0: 1.0,
            gap_tol: 1e-10,
            newton_tol: 1e-10,
            armijo: 0.3,
            backtrack: 0.8,
            max_newton: 5000,
            max_centering: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
}

/// `ln Σ_k exp(a_k·u + b_k)` with rows `a_k`.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LogSumExp {
    pub fn from_posynomial(p: &Posynomial, n: usize) -> Self {
        let rows = p.terms().len();
        let mut a = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        for (k, t) in p.terms().iter().enumerate() {
            b[k] = t.log_coeff;
            for (&v, &e) in &t.exps {
                a[(k, v)] = e;
            }
        }
        Self { a, b }
    }

    fn floor(var: VarId, floor: f64, n: usize) -> Self {
        let mut a = DMatrix::zeros(1, n);
        a[(0, var)] = -1.0;
        Self {
            a,
            b: DVector::from_element(1, floor.ln()),
        }
    }

    fn softmax(&self, u: &DVector<f64>) -> (f64, DVector<f64>) {
        let z = &self.a * u + &self.b;
        let value = log_sum_exp(z.iter().copied());
        (value, z.map(|zk| (zk - value).exp()))
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        log_sum_exp((&self.a * u + &self.b).iter().copied())
    }

    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        let (_, pi) = self.softmax(u);
        self.a.tr_mul(&pi)
    }

    /// Value, gradient and Hessian `Aᵀ(diag π − ππᵀ)A`.
    fn derivatives(&self, u: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (value, pi) = self.softmax(u);
        let grad = self.a.tr_mul(&pi);
        let weighted = DMatrix::from_fn(self.a.nrows(), self.a.ncols(), |k, j| pi[k] * self.a[(k, j)]);
        let hess = self.a.tr_mul(&weighted) - &grad * grad.transpose();
        (value, grad, hess)
    }

    fn with_extra_column(&self, coeff: f64) -> Self {
        let n = self.a.ncols();
        let mut a = self.a.clone().resize_horizontally(n + 1, 0.0);
        a.column_mut(n).fill(coeff);
        Self { a, b: self.b.clone() }
    }
}

/// Convex program `min c·u` s.t. `f_i(u) ≤ 0`.
struct LogProblem {
    c: DVector<f64>,
    constraints: Vec<LogSumExp>,
}

impl LogProblem {
    fn from_gp(prob: &GpProblem) -> Self {
        let n = prob.n_vars;
        let mut c = DVector::zeros(n);
        for (&v, &e) in &prob.objective.exps {
            c[v] = e;
        }
        let mut constraints: Vec<LogSumExp> = prob
            .monomial_constraints
            .iter()
            .map(|m| LogSumExp::from_posynomial(&m.clone().into(), n))
            .chain(
                prob.posynomial_constraints
                    .iter()
                    .map(|p| LogSumExp::from_posynomial(p, n)),
            )
            .collect();
        for (v, &f) in prob.floors.iter().enumerate() {
            if f > 0.0 {
                constraints.push(LogSumExp::floor(v, f, n));
            }
        }
        Self { c, constraints }
    }

    fn max_constraint(&self, u: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|f| f.value(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn barrier(&self, t: f64, u: &DVector<f64>) -> f64 {
        let mut phi = t * self.c.dot(u);
        for f in &self.constraints {
            let v = f.value(u);
            if !(v < 0.0) {
                return f64::INFINITY;
            }
            phi -= (-v).ln();
        }
        phi
    }

    /// Barrier method from a strictly feasible `u`. `stop` is checked after
    /// every Newton step and ends the run early when it returns true.
    fn solve(
        &self,
        mut u: DVector<f64>,
        settings: &SolverSettings,
        stop: impl Fn(&DVector<f64>) -> bool,
    ) -> Result<(DVector<f64>, usize)> {
        let n = u.len();
        let m = self.constraints.len().max(1) as f64;
        let mut t = settings.t0;
        let mut steps = 0;
        loop {
            for _ in 0..settings.max_centering {
                let mut grad = &self.c * t;
                let mut hess = DMatrix::zeros(n, n);
                for f in &self.constraints {
                    let (v, g, h) = f.derivatives(&u);
                    let inv = -1.0 / v;
                    grad.axpy(inv, &g, 1.0);
                    hess += &g * g.transpose() * (inv * inv) + h * inv;
                }
                let step = newton_direction(hess, &grad)?;
                let decrement = -grad.dot(&step);
                if decrement / 2.0 <= settings.newton_tol {
                    break;
                }
                steps += 1;
                if steps > settings.max_newton {
                    return Err(Error::Numerical("barrier Newton iteration limit reached".into()));
                }
                let phi0 = self.barrier(t, &u);
                let mut s = 1.0;
                let mut accepted = false;
                for _ in 0..400 {
                    let trial = &u + &step * s;
                    let phi = self.barrier(t, &trial);
                    if phi.is_finite() && phi <= phi0 - settings.armijo * s * decrement {
                        u = trial;
                        accepted = true;
                        break;
                    }
                    s *= settings.backtrack;
                }
                if !accepted {
                    // No progress possible at this precision; treat the
                    // centering step as done.
                    break;
                }
                if stop(&u) {
                    return Ok((u, steps));
                }
            }
            if m / t < settings.gap_tol {
                return Ok((u, steps));
            }
            t *= settings.mu;
        }
    }
}

fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = hess.diagonal().amax().max(1e-300);
    let mut shift = 0.0;
    for _ in 0..30 {
        let mut h = hess.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += shift;
        }
        if let Some(chol) = h.cholesky() {
            let step = chol.solve(&(-grad));
            if step.iter().all(|s| s.is_finite()) {
                return Ok(step);
            }
        }
        shift = if shift == 0.0 { scale * 1e-14 } else { shift * 10.0 };
    }
    Err(Error::Numerical("Newton system could not be factorized".into()))
}

/// Half-width (log units) of the search box used by phase I.
const PHASE_ONE_BOX: f64 = 30.0;

fn phase_one(lp: &LogProblem, u0: &DVector<f64>, settings: &SolverSettings) -> Result<DVector<f64>> {
    let n = u0.len();
    let mut constraints: Vec<LogSumExp> = lp.constraints.iter().map(|f| f.with_extra_column(-1.0)).collect();
    // s ≥ −1 and a box around the start keep the auxiliary problem bounded;
    // without the box, constraints that can be driven to −∞ (such as an
    // epigraph variable) send Newton off to infinity.
    let mut a = DMatrix::zeros(1, n + 1);
    a[(0, n)] = -1.0;
    constraints.push(LogSumExp {
        a,
        b: DVector::from_element(1, -1.0),
    });
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut a = DMatrix::zeros(1, n + 1);
            a[(0, j)] = sign;
            constraints.push(LogSumExp {
                a,
                b: DVector::from_element(1, -sign * u0[j] - PHASE_ONE_BOX),
            });
        }
    }
    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    let aux = LogProblem { c, constraints };

    let s0 = lp.max_constraint(u0).max(-0.5) + 1.0;
    let start = u0.clone().insert_row(n, s0);
    let (v, _) = aux.solve(start, settings, |v| v[n] < -1e-2)?;
    let u = v.rows(0, n).into_owned();
    if lp.max_constraint(&u) < 0.0 {
        Ok(u)
    } else {
        Err(Error::Infeasible(format!(
            "no strictly feasible point (phase-I optimum {:.3e})",
            v[n]
        )))
    }
}

/// Solves `prob` from `x0`, falling back to a phase-I search when `x0` is
/// not strictly feasible.
pub fn solve_standard_gp(prob: &GpProblem, x0: &[f64]) -> Result<GpSolution> {
    solve_standard_gp_with(prob, x0, &SolverSettings::default())
}

pub fn solve_standard_gp_with(
    prob: &GpProblem,
    x0: &[f64],
    settings: &SolverSettings,
) -> Result<GpSolution> {
    prob.validate()?;
    if x0.len() != prob.n_vars || x0.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(invalid("start point must be positive with one entry per variable"));
    }
    let lp = LogProblem::from_gp(prob);
    let mut u = DVector::from_iterator(x0.len(), x0.iter().map(|x| x.ln()));
    if !(lp.max_constraint(&u) < 0.0) {
        u = phase_one(&lp, &u, settings)?;
    }
    let (u, newton_steps) = lp.solve(u, settings, |_| false)?;
    let x: Vec<f64> = u.iter().map(|ui| ui.exp()).collect();
    Ok(GpSolution {
        objective: prob.objective.eval(&x),
        x,
        newton_steps,
    })
}
