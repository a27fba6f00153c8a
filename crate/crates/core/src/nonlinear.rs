//! The coupled system
//!
//! ```text
//! -[phi(u')]' = f1(t, u, v),   (w_u(0), -w_u(T)) in gamma(u(0), u(T))
//! -[phi(v')]' = f2(t, u, v),   (w_v(0), -w_v(T)) in eta(v(0), v(T))
//! ```
//!
//! and its fixed-point form `(u, v) = Q(u, v)` with
//! `Q = (S_gamma o N_g1, S_eta o N_g2)`, `g1 = f1 + x`, `g2 = f2 + y`.
//!
//! [`solve_system`] tries, in order, relaxed fixed-point iteration, Newton on
//! the monolithic discretization, and continuation along the homotopy
//! `(u, v) = s Q(u, v)` for `s = 0.1, 0.2, ..., 1`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{self, Case, GrowthConstants};
use crate::boundary::BoundaryOperator;
use crate::collocation::{self, Grid, NewtonOptions, ResidualNorms, SolveError, TwoPointSystem};
use crate::expr::{EvalError, Expr, ParseError};
use crate::geometry::{phi_inverse_into, phi_inverse_jacobian};
use crate::linsolve::{boundary_closure, h1_norm_sq, solve_s_from, GridFunction, LinearOptions, LinearProblem};

/// A continuous map `f: [0, T] x R^n x R^m -> R^dim`.
pub trait Forcing: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), EvalError>;

    /// Smallest `(n, m)` the map reads from; used to validate problems.
    fn required_dims(&self) -> (usize, usize) {
        (0, 0)
    }
}

/// One expression per output component.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprForcing {
    components: Vec<Expr>,
}

impl ExprForcing {
    pub fn new(components: Vec<Expr>) -> Self {
        Self { components }
    }

    pub fn parse<S: AsRef<str>>(texts: &[S]) -> Result<Self, ParseError> {
        let components = texts.iter().map(|s| Expr::parse(s.as_ref())).collect::<Result<_, _>>()?;
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

impl Forcing for ExprForcing {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.components) {
            *o = e.evaluate(t, x, y)?;
        }
        Ok(())
    }

    fn required_dims(&self) -> (usize, usize) {
        self.components.iter().fold((0, 0), |(a, b), e| {
            let (c, d) = e.required_dims();
            (a.max(c), b.max(d))
        })
    }
}

/// A forcing term given by a closure writing into its output slice.
pub struct FnForcing<F> {
    dim: usize,
    f: F,
}

impl<F> FnForcing<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Forcing for FnForcing<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        (self.f)(t, x, y, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("{0}")]
    Dimension(String),
    #[error("forcing term {which} is not finite at t={t}: {source}")]
    Eval { which: usize, t: f64, source: EvalError },
}

#[derive(Clone)]
pub struct SystemProblem {
    pub t_end: f64,
    pub n: usize,
    pub m: usize,
    pub f1: Arc<dyn Forcing>,
    pub f2: Arc<dyn Forcing>,
    pub gamma: BoundaryOperator,
    pub eta: BoundaryOperator,
}

impl fmt::Debug for SystemProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemProblem")
            .field("t_end", &self.t_end)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("gamma", &self.gamma.kind())
            .field("eta", &self.eta.kind())
            .finish_non_exhaustive()
    }
}

impl SystemProblem {
    pub fn new(
        t_end: f64,
        f1: Arc<dyn Forcing>,
        f2: Arc<dyn Forcing>,
        gamma: BoundaryOperator,
        eta: BoundaryOperator,
    ) -> Result<Self, ProblemError> {
        let n = gamma.q();
        let m = eta.q();
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(ProblemError::Dimension(format!("T must be positive, got {t_end}")));
        }
        if f1.dim() != n || f2.dim() != m {
            return Err(ProblemError::Dimension(format!(
                "f1 has {} components and f2 has {}, boundary operators need {n} and {m}",
                f1.dim(),
                f2.dim()
            )));
        }
        for (which, f) in [(1, &f1), (2, &f2)] {
            let (rn, rm) = f.required_dims();
            if rn > n || rm > m {
                return Err(ProblemError::Dimension(format!(
                    "f{which} refers to x{rn}/y{rm} but n = {n}, m = {m}"
                )));
            }
        }
        let prob = Self { t_end, n, m, f1, f2, gamma, eta };
        prob.probe()?;
        Ok(prob)
    }

    /// Evaluates both forcing terms on a small deterministic box.
    fn probe(&self) -> Result<(), ProblemError> {
        let mut o1 = vec![0.0; self.n];
        let mut o2 = vec![0.0; self.m];
        for k in 0..=8 {
            let t = self.t_end * k as f64 / 8.0;
            for s in [0.0, 0.5, -1.0] {
                let x: Vec<f64> = (0..self.n).map(|i| s * (1.0 + 0.1 * i as f64)).collect();
                let y: Vec<f64> = (0..self.m).map(|i| -s * (1.0 + 0.2 * i as f64)).collect();
                self.f1.eval(t, &x, &y, &mut o1).map_err(|source| ProblemError::Eval { which: 1, t, source })?;
                self.f2.eval(t, &x, &y, &mut o2).map_err(|source| ProblemError::Eval { which: 2, t, source })?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub u: GridFunction,
    pub v: GridFunction,
}

impl SystemState {
    pub fn zeros(n: usize, m: usize, nodes: usize) -> Self {
        Self { u: GridFunction::zeros(n, nodes), v: GridFunction::zeros(m, nodes) }
    }

    pub fn nodes(&self) -> usize {
        self.u.nodes()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.u.max_abs_diff(&other.u).max(self.v.max_abs_diff(&other.v))
    }

    pub fn max_abs(&self) -> f64 {
        self.u.u.iter().chain(&self.u.w).chain(&self.v.u).chain(&self.v.w).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_velocity(&self) -> f64 {
        self.u.max_velocity().max(self.v.max_velocity())
    }

    fn blend(&self, other: &Self, theta: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (1.0 - theta) * x + theta * y).collect();
        Self {
            u: GridFunction::from_parts(self.u.q(), mix(&self.u.u, &other.u.u), mix(&self.u.w, &other.u.w)).unwrap(),
            v: GridFunction::from_parts(self.v.q(), mix(&self.v.u, &other.v.u), mix(&self.v.w, &other.v.w)).unwrap(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { u: self.u.scaled(factor), v: self.v.scaled(factor) }
    }

    fn to_flat(&self) -> Vec<f64> {
        let (n, m) = (self.u.q(), self.v.q());
        let mut x = Vec::with_capacity(2 * (n + m) * self.nodes());
        for i in 0..self.nodes() {
            x.extend_from_slice(self.u.u_at(i));
            x.extend_from_slice(self.u.w_at(i));
            x.extend_from_slice(self.v.u_at(i));
            x.extend_from_slice(self.v.w_at(i));
        }
        x
    }

    fn from_flat(n: usize, m: usize, x: &[f64]) -> Self {
        let p = 2 * (n + m);
        let nodes = x.len() / p;
        let mut s = Self::zeros(n, m, nodes);
        for i in 0..nodes {
            let b = &x[i * p..(i + 1) * p];
            s.u.u[i * n..(i + 1) * n].copy_from_slice(&b[..n]);
            s.u.w[i * n..(i + 1) * n].copy_from_slice(&b[n..2 * n]);
            s.v.u[i * m..(i + 1) * m].copy_from_slice(&b[2 * n..2 * n + m]);
            s.v.w[i * m..(i + 1) * m].copy_from_slice(&b[2 * n + m..]);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    FixedPoint,
    Newton,
    Continuation,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::FixedPoint => "fixed_point",
            Strategy::Newton => "newton",
            Strategy::Continuation => "continuation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub intervals: usize,
    pub tol: f64,
    /// Relaxation weight of the fixed-point step.
    pub theta: f64,
    pub max_fixed_point: usize,
    /// Fixed-point iteration stagnates once a step is below
    /// `step_tol * (1 + |state|)`.
    pub step_tol: f64,
    pub continuation_steps: usize,
    pub linear: LinearOptions,
    pub newton: NewtonOptions,
    /// Run a single strategy instead of the full ladder.
    pub force: Option<Strategy>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            intervals: 200,
            tol: 1e-8,
            theta: 0.5,
            max_fixed_point: 500,
            step_tol: 1e-9,
            continuation_steps: 10,
            linear: LinearOptions::default(),
            newton: NewtonOptions { tol: 1e-10, max_iter: 50, max_halvings: 30 },
            force: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub u_h1: f64,
    pub v_h1: f64,
    pub total: f64,
}

impl Norms {
    pub fn of(state: &SystemState, grid: &Grid) -> Self {
        let u_h1 = h1_norm_sq(&state.u, grid).sqrt();
        let v_h1 = h1_norm_sq(&state.v, grid).sqrt();
        Self { u_h1, v_h1, total: u_h1 + v_h1 }
    }
}

/// Squared norms of the homotopy solution `(u, v) = s (u~, v~)` at one
/// continuation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord {
    pub homotopy: f64,
    pub u_h1_sq: f64,
    pub v_h1_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub case: Case,
    pub bound: Option<f64>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub grid: Grid,
    pub state: SystemState,
    pub ode_res: f64,
    pub bc_res: f64,
    pub iterations: usize,
    pub strategy: Strategy,
    pub norms: Norms,
    pub max_velocity: f64,
    pub stages: Vec<StageRecord>,
    pub bound_check: Option<BoundCheck>,
}

/// Discretized coupled system in the unknowns `(u, w_u, v, w_v)` at homotopy
/// parameter `s`, for the scaled pair `(u, v) / s`.
struct CoupledSystem<'a> {
    prob: &'a SystemProblem,
    homotopy: f64,
    lambda: f64,
}

impl CoupledSystem<'_> {
    fn forcing(&self, t: f64, x: &[f64], f1: &mut [f64], f2: &mut [f64]) -> Result<(), EvalError> {
        let (n, m) = (self.prob.n, self.prob.m);
        let s = self.homotopy;
        let u: Vec<f64> = x[..n].iter().map(|v| s * v).collect();
        let v: Vec<f64> = x[2 * n..2 * n + m].iter().map(|v| s * v).collect();
        self.prob.f1.eval(t, &u, &v, f1)?;
        self.prob.f2.eval(t, &u, &v, f2)
    }
}

impl TwoPointSystem for CoupledSystem<'_> {
    fn width(&self) -> usize {
        2 * (self.prob.n + self.prob.m)
    }

    fn field(&self, _node: usize, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), SolveError> {
        let (n, m) = (self.prob.n, self.prob.m);
        let s = self.homotopy;
        let mut f1 = vec![0.0; n];
        let mut f2 = vec![0.0; m];
        self.forcing(t, x, &mut f1, &mut f2)?;
        phi_inverse_into(&x[n..2 * n], &mut out[..n]);
        for k in 0..n {
            // w' = u~ - g1(t, s u~, s v~) = (1 - s) u~ - f1
            out[n + k] = (1.0 - s) * x[k] - f1[k];
        }
        let vo = 2 * n;
        phi_inverse_into(&x[vo + m..vo + 2 * m], &mut out[vo..vo + m]);
        for k in 0..m {
            out[vo + m + k] = (1.0 - s) * x[vo + k] - f2[k];
        }
        Ok(())
    }

    fn field_jacobian(&self, _node: usize, t: f64, x: &[f64], jac: &mut [f64]) -> Result<(), SolveError> {
        let (n, m) = (self.prob.n, self.prob.m);
        let p = self.width();
        let s = self.homotopy;
        let vo = 2 * n;
        jac.iter_mut().for_each(|v| *v = 0.0);

        let mut dpsi = vec![0.0; n * n];
        phi_inverse_jacobian(&x[n..2 * n], &mut dpsi);
        for a in 0..n {
            for b in 0..n {
                jac[a * p + n + b] = dpsi[a * n + b];
            }
            jac[(n + a) * p + a] = 1.0 - s;
        }
        let mut dpsi = vec![0.0; m * m];
        phi_inverse_jacobian(&x[vo + m..vo + 2 * m], &mut dpsi);
        for a in 0..m {
            for b in 0..m {
                jac[(vo + a) * p + vo + m + b] = dpsi[a * m + b];
            }
            jac[(vo + m + a) * p + vo + a] = 1.0 - s;
        }

        // Nemytskii blocks by forward differences in the u~ and v~ slots.
        let mut f1 = vec![0.0; n];
        let mut f2 = vec![0.0; m];
        self.forcing(t, x, &mut f1, &mut f2)?;
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; m];
        let mut probe = x.to_vec();
        let columns = (0..n).chain(vo..vo + m);
        for col in columns {
            let h = 1e-7 * (1.0 + x[col].abs());
            probe[col] = x[col] + h;
            self.forcing(t, &probe, &mut g1, &mut g2)?;
            probe[col] = x[col];
            for a in 0..n {
                jac[(n + a) * p + col] -= (g1[a] - f1[a]) / h;
            }
            for a in 0..m {
                jac[(vo + m + a) * p + col] -= (g2[a] - f2[a]) / h;
            }
        }
        Ok(())
    }

    fn boundary(&self, first: &[f64], last: &[f64], out: &mut [f64]) {
        let (n, m) = (self.prob.n, self.prob.m);
        let vo = 2 * n;
        let (head, tail) = out.split_at_mut(2 * n);
        boundary_closure(&self.prob.gamma, self.lambda, n, &first[..vo], &last[..vo], head);
        boundary_closure(&self.prob.eta, self.lambda, m, &first[vo..], &last[vo..], tail);
    }
}

fn nemytskii_into(
    which: usize,
    prob: &SystemProblem,
    state: &SystemState,
    grid: &Grid,
) -> Result<Vec<f64>, SolveError> {
    let q = if which == 1 { prob.n } else { prob.m };
    let mut out = vec![0.0; q * grid.len()];
    for (i, t) in grid.nodes().enumerate() {
        let x = state.u.u_at(i);
        let y = state.v.u_at(i);
        let o = &mut out[i * q..(i + 1) * q];
        if which == 1 {
            prob.f1.eval(t, x, y, o)?;
            for k in 0..q {
                o[k] += x[k];
            }
        } else {
            prob.f2.eval(t, x, y, o)?;
            for k in 0..q {
                o[k] += y[k];
            }
        }
    }
    Ok(out)
}

/// Nodal values of `g1 = f1 + x` (`which = 1`) or `g2 = f2 + y` (`which = 2`).
pub fn nemytskii_g(which: usize, prob: &SystemProblem, state: &SystemState) -> Result<Vec<f64>, SolveError> {
    if which != 1 && which != 2 {
        return Err(SolveError::Shape(format!("no Nemytskii operator {which}")));
    }
    check_state(prob, state)?;
    let grid = Grid::new(prob.t_end, state.nodes() - 1)?;
    nemytskii_into(which, prob, state, &grid)
}

fn check_state(prob: &SystemProblem, state: &SystemState) -> Result<(), SolveError> {
    if state.u.q() != prob.n || state.v.q() != prob.m || state.u.nodes() != state.v.nodes() {
        return Err(SolveError::Shape("state does not match the problem dimensions".into()));
    }
    Ok(())
}

/// `Q(u, v) = (S_gamma(N_g1(u, v)), S_eta(N_g2(u, v)))`.
pub fn apply_q(prob: &SystemProblem, state: &SystemState, opts: &LinearOptions) -> Result<SystemState, SolveError> {
    check_state(prob, state)?;
    let grid = Grid::new(prob.t_end, state.nodes() - 1)?;
    apply_q_on(prob, state, &grid, opts)
}

fn apply_q_on(
    prob: &SystemProblem,
    state: &SystemState,
    grid: &Grid,
    opts: &LinearOptions,
) -> Result<SystemState, SolveError> {
    let g1 = nemytskii_into(1, prob, state, grid)?;
    let g2 = nemytskii_into(2, prob, state, grid)?;
    let pu = LinearProblem::new(*grid, prob.gamma.clone(), g1)?;
    let pv = LinearProblem::new(*grid, prob.eta.clone(), g2)?;
    Ok(SystemState { u: solve_s_from(&pu, opts, Some(&state.u))?, v: solve_s_from(&pv, opts, Some(&state.v))? })
}

/// Residual norms of `state` in the discretized system (at full homotopy).
pub fn system_residual(prob: &SystemProblem, state: &SystemState, lambda: f64) -> Result<ResidualNorms, SolveError> {
    check_state(prob, state)?;
    let grid = Grid::new(prob.t_end, state.nodes() - 1)?;
    let sys = CoupledSystem { prob, homotopy: 1.0, lambda };
    let x = state.to_flat();
    let mut r = vec![0.0; x.len()];
    collocation::residual(&sys, &grid, &x, &mut r)
}

struct Attempt {
    state: SystemState,
    iterations: usize,
    stages: Vec<StageRecord>,
}

fn fixed_point(
    prob: &SystemProblem,
    grid: &Grid,
    opts: &SolveOptions,
    best: &mut (f64, Option<SystemState>),
) -> Result<Attempt, SolveError> {
    let mut state = SystemState::zeros(prob.n, prob.m, grid.len());
    for k in 1..=opts.max_fixed_point {
        let mapped = apply_q_on(prob, &state, grid, &opts.linear)?;
        let next = state.blend(&mapped, opts.theta);
        let step = next.max_abs_diff(&state);
        state = next;
        if !state.max_abs().is_finite() || state.max_abs() > 1e12 {
            break;
        }
        let res = system_residual(prob, &state, opts.linear.lambda)?.max();
        record_best(best, res, &state);
        if res <= 0.01 * opts.tol {
            return Ok(Attempt { state, iterations: k, stages: Vec::new() });
        }
        if step < opts.step_tol * (1.0 + state.max_abs()) {
            if res <= opts.tol {
                return Ok(Attempt { state, iterations: k, stages: Vec::new() });
            }
            break;
        }
    }
    Err(SolveError::NoConvergence { best_residual: best.0 })
}

fn record_best(best: &mut (f64, Option<SystemState>), res: f64, state: &SystemState) {
    if res < best.0 {
        *best = (res, Some(state.clone()));
    }
}

fn newton_at(
    prob: &SystemProblem,
    grid: &Grid,
    opts: &SolveOptions,
    homotopy: f64,
    x: &mut [f64],
) -> Result<usize, SolveError> {
    let sys = CoupledSystem { prob, homotopy, lambda: opts.linear.lambda };
    let newton = NewtonOptions { tol: opts.newton.tol.min(opts.tol), ..opts.newton };
    match collocation::newton(&sys, grid, x, &newton) {
        Ok(out) => Ok(out.iterations),
        // keep a state that meets the outer tolerance even if the tighter
        // Newton target was out of reach
        Err(SolveError::NewtonDivergence { residual, iterations }) if residual <= opts.tol => Ok(iterations),
        Err(e) => Err(e),
    }
}

fn monolithic_newton(
    prob: &SystemProblem,
    grid: &Grid,
    opts: &SolveOptions,
    start: Option<&SystemState>,
    best: &mut (f64, Option<SystemState>),
) -> Result<Attempt, SolveError> {
    let mut x = match start {
        Some(s) => s.to_flat(),
        None => vec![0.0; 2 * (prob.n + prob.m) * grid.len()],
    };
    let result = newton_at(prob, grid, opts, 1.0, &mut x);
    let state = SystemState::from_flat(prob.n, prob.m, &x);
    if let Ok(r) = system_residual(prob, &state, opts.linear.lambda) {
        record_best(best, r.max(), &state);
    }
    let iterations = result?;
    Ok(Attempt { state, iterations, stages: Vec::new() })
}

fn continuation(
    prob: &SystemProblem,
    grid: &Grid,
    opts: &SolveOptions,
    best: &mut (f64, Option<SystemState>),
) -> Result<Attempt, SolveError> {
    const MAX_REFINEMENTS: u32 = 6;
    let steps = opts.continuation_steps.max(1);
    let mut x = vec![0.0; 2 * (prob.n + prob.m) * grid.len()];
    let mut stages = Vec::with_capacity(steps);
    let mut iterations = 0;
    let mut reached = 0.0;
    for k in 1..=steps {
        let target = k as f64 / steps as f64;
        // subdivide the stage on failure, warm-starting from the last success
        let mut sub = 1u32;
        let mut level = 0;
        while reached < target - 1e-12 {
            let next = (reached + (target - reached) / sub as f64).min(target);
            let mut trial = x.clone();
            match newton_at(prob, grid, opts, next, &mut trial) {
                Ok(it) => {
                    iterations += it;
                    x = trial;
                    reached = next;
                }
                Err(SolveError::NewtonDivergence { .. }) | Err(SolveError::Singular(_)) if level < MAX_REFINEMENTS => {
                    sub *= 2;
                    level += 1;
                }
                Err(e) => {
                    let partial = SystemState::from_flat(prob.n, prob.m, &x);
                    if let Ok(r) = system_residual(prob, &partial, opts.linear.lambda) {
                        record_best(best, r.max(), &partial);
                    }
                    return Err(match e {
                        SolveError::NewtonDivergence { .. } | SolveError::Singular(_) => {
                            SolveError::NoConvergence { best_residual: best.0 }
                        }
                        other => other,
                    });
                }
            }
        }
        let scaled = SystemState::from_flat(prob.n, prob.m, &x);
        let s2 = target * target;
        stages.push(StageRecord {
            homotopy: target,
            u_h1_sq: s2 * h1_norm_sq(&scaled.u, grid),
            v_h1_sq: s2 * h1_norm_sq(&scaled.v, grid),
        });
    }
    let state = SystemState::from_flat(prob.n, prob.m, &x);
    Ok(Attempt { state, iterations, stages })
}

/// Solves the coupled system. On success both residual norms are at most
/// `opts.tol` and every nodal velocity is strictly below one.
pub fn solve_system(prob: &SystemProblem, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let grid = Grid::new(prob.t_end, opts.intervals)?;
    let mut best: (f64, Option<SystemState>) = (f64::INFINITY, None);
    let attempt = match opts.force {
        Some(Strategy::FixedPoint) => fixed_point(prob, &grid, opts, &mut best).map(|a| (a, Strategy::FixedPoint)),
        Some(Strategy::Newton) => {
            monolithic_newton(prob, &grid, opts, None, &mut best).map(|a| (a, Strategy::Newton))
        }
        Some(Strategy::Continuation) => {
            continuation(prob, &grid, opts, &mut best).map(|a| (a, Strategy::Continuation))
        }
        None => ladder(prob, &grid, opts, &mut best),
    };
    let (attempt, strategy) = match attempt {
        Ok(a) => a,
        Err(SolveError::Eval(e)) if best.1.is_none() => return Err(SolveError::Eval(e)),
        Err(_) => return Err(SolveError::NoConvergence { best_residual: best.0 }),
    };
    let res = system_residual(prob, &attempt.state, opts.linear.lambda)?;
    if res.max() > opts.tol {
        return Err(SolveError::NoConvergence { best_residual: res.max().min(best.0) });
    }
    Ok(SolveReport {
        grid,
        norms: Norms::of(&attempt.state, &grid),
        max_velocity: attempt.state.max_velocity(),
        state: attempt.state,
        ode_res: res.ode,
        bc_res: res.bc,
        iterations: attempt.iterations,
        strategy,
        stages: attempt.stages,
        bound_check: None,
    })
}

fn ladder(
    prob: &SystemProblem,
    grid: &Grid,
    opts: &SolveOptions,
    best: &mut (f64, Option<SystemState>),
) -> Result<(Attempt, Strategy), SolveError> {
    if let Ok(a) = fixed_point(prob, grid, opts, best) {
        return Ok((a, Strategy::FixedPoint));
    }
    let warm = best.1.clone();
    if let Some(start) = warm.as_ref() {
        if let Ok(a) = monolithic_newton(prob, grid, opts, Some(start), best) {
            return Ok((a, Strategy::Newton));
        }
    }
    if let Ok(a) = monolithic_newton(prob, grid, opts, None, best) {
        return Ok((a, Strategy::Newton));
    }
    continuation(prob, grid, opts, best).map(|a| (a, Strategy::Continuation))
}

/// Outcome of [`verify_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct Checklist {
    pub residual_ok: bool,
    pub velocity_ok: bool,
    /// Realized norms respect the bound of the applicable case (vacuously
    /// true when no case applies).
    pub bound_ok: bool,
    pub case: Case,
    pub bound: Option<f64>,
    pub realized: Norms,
}

impl Checklist {
    pub fn all_ok(&self) -> bool {
        self.residual_ok && self.velocity_ok && self.bound_ok
    }

    pub fn bound_check(&self) -> BoundCheck {
        BoundCheck { case: self.case, bound: self.bound, satisfied: self.bound_ok }
    }
}

/// Relative slack allowed between realized discrete norms and the
/// theoretical bounds.
pub const BOUND_SLACK: f64 = 0.05;

/// Re-checks a report against the problem: residuals at most `tol`,
/// velocities below one, and norms within the bound of the first applicable
/// existence case (with [`BOUND_SLACK`]).
pub fn verify_report(
    prob: &SystemProblem,
    report: &SolveReport,
    constants: Option<&GrowthConstants>,
    tol: f64,
) -> Checklist {
    let residual_ok = system_residual(prob, &report.state, crate::boundary::DEFAULT_LAMBDA)
        .map(|r| r.max() <= tol)
        .unwrap_or(false);
    let velocity_ok = report.state.max_velocity() < 1.0;
    let realized = Norms::of(&report.state, &report.grid);
    let n = report.grid.intervals().max(analysis::LAMBDA1_MIN_INTERVALS);
    let l1 = |bop: &BoundaryOperator| {
        analysis::lambda1_estimate(bop, prob.t_end, n).map(|e| e.value).unwrap_or(0.0)
    };
    let selection = analysis::select_case(l1(&prob.gamma), l1(&prob.eta), constants, prob.t_end);
    let bound_ok = match selection.squared {
        None => true,
        Some([bu, bv]) => {
            let u_sq = realized.u_h1 * realized.u_h1;
            let v_sq = realized.v_h1 * realized.v_h1;
            u_sq <= bu * (1.0 + BOUND_SLACK)
                && v_sq <= bv * (1.0 + BOUND_SLACK)
                && realized.total <= selection.bound.unwrap_or(f64::INFINITY) * (1.0 + BOUND_SLACK)
        }
    };
    Checklist { residual_ok, velocity_ok, bound_ok, case: selection.case, bound: selection.bound, realized }
}
