//! The solution operator `S`: for a right-hand side `h`, the solution of
//! `-[phi(u')]' + u = h` on `[0, T]` with `(w(0), -w(T)) in gamma(u(0), u(T))`,
//! where `w = phi(u')`.
//!
//! The problem is discretized as the first-order system `u' = phi^{-1}(w)`,
//! `w' = u - h` in the unknowns `(u, w)`. Since `phi^{-1}` maps into the open
//! unit ball, every iterate has an admissible velocity.

use crate::boundary::{BoundaryOperator, DEFAULT_LAMBDA};
use crate::collocation::{self, Grid, NewtonOptions, ResidualNorms, SolveError, TwoPointSystem};
use crate::geometry::{dot, phi, phi_inverse_into, phi_inverse_jacobian, phi_jacobian, DomainError};

/// Nodal values of `u` and `w = phi(u')`, each `(N + 1) x q`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    q: usize,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(q: usize, nodes: usize) -> Self {
        Self { q, u: vec![0.0; q * nodes], w: vec![0.0; q * nodes] }
    }

    pub fn from_parts(q: usize, u: Vec<f64>, w: Vec<f64>) -> Result<Self, SolveError> {
        if q == 0 || u.len() != w.len() || !u.len().is_multiple_of(q) {
            return Err(SolveError::Shape(format!(
                "u has {} entries and w has {} for dimension {q}",
                u.len(),
                w.len()
            )));
        }
        Ok(Self { q, u, w })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn nodes(&self) -> usize {
        self.u.len() / self.q
    }

    pub fn u_at(&self, i: usize) -> &[f64] {
        &self.u[i * self.q..(i + 1) * self.q]
    }

    pub fn w_at(&self, i: usize) -> &[f64] {
        &self.w[i * self.q..(i + 1) * self.q]
    }

    /// Recovered velocity `u'(t_i) = phi^{-1}(w_i)`.
    pub fn velocity_at(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.q];
        phi_inverse_into(self.w_at(i), &mut v);
        v
    }

    pub fn max_velocity(&self) -> f64 {
        (0..self.nodes()).map(|i| dot(&self.velocity_at(i), &self.velocity_at(i)).sqrt()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            q: self.q,
            u: self.u.iter().map(|v| v * factor).collect(),
            w: self.w.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest absolute difference over both `u` and `w`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .chain(self.w.iter().zip(&other.w))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn to_state(&self) -> Vec<f64> {
        let q = self.q;
        let mut x = Vec::with_capacity(2 * self.u.len());
        for i in 0..self.nodes() {
            x.extend_from_slice(&self.u[i * q..(i + 1) * q]);
            x.extend_from_slice(&self.w[i * q..(i + 1) * q]);
        }
        x
    }

    pub(crate) fn from_state(q: usize, x: &[f64]) -> Self {
        let nodes = x.len() / (2 * q);
        let mut gf = Self::zeros(q, nodes);
        for i in 0..nodes {
            gf.u[i * q..(i + 1) * q].copy_from_slice(&x[2 * q * i..2 * q * i + q]);
            gf.w[i * q..(i + 1) * q].copy_from_slice(&x[2 * q * i + q..2 * q * (i + 1)]);
        }
        gf
    }
}

/// Trapezoidal weights on the grid.
pub(crate) fn trapezoid<F: Fn(usize) -> f64>(grid: &Grid, f: F) -> f64 {
    let n = grid.intervals();
    let inner: f64 = (1..n).map(&f).sum();
    grid.step() * (inner + 0.5 * (f(0) + f(n)))
}

/// Discrete `||u||_{L^2}^2`.
pub fn l2_norm_sq(gf: &GridFunction, grid: &Grid) -> f64 {
    trapezoid(grid, |i| dot(gf.u_at(i), gf.u_at(i)))
}

/// Discrete `||u'||_{L^2}^2` with `u' = phi^{-1}(w)`.
pub fn velocity_norm_sq(gf: &GridFunction, grid: &Grid) -> f64 {
    trapezoid(grid, |i| {
        let v = gf.velocity_at(i);
        dot(&v, &v)
    })
}

/// Discrete `||u||_{H^1}^2 = ||u'||^2 + ||u||^2`.
pub fn h1_norm_sq(gf: &GridFunction, grid: &Grid) -> f64 {
    velocity_norm_sq(gf, grid) + l2_norm_sq(gf, grid)
}

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub grid: Grid,
    pub bop: BoundaryOperator,
    /// Nodal right-hand side, `(N + 1) x q` row-major.
    pub h: Vec<f64>,
}

impl LinearProblem {
    pub fn new(grid: Grid, bop: BoundaryOperator, h: Vec<f64>) -> Result<Self, SolveError> {
        if h.len() != grid.len() * bop.q() {
            return Err(SolveError::Shape(format!(
                "right-hand side has {} entries, expected {}",
                h.len(),
                grid.len() * bop.q()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::Eval(crate::expr::EvalError::NonFinite));
        }
        Ok(Self { grid, bop, h })
    }

    /// Right-hand side given pointwise.
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(grid: Grid, bop: BoundaryOperator, h: F) -> Result<Self, SolveError> {
        let values = grid.nodes().flat_map(h).collect();
        Self::new(grid, bop, values)
    }

    pub fn q(&self) -> usize {
        self.bop.q()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    pub lambda: f64,
    pub newton: NewtonOptions,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self { lambda: DEFAULT_LAMBDA, newton: NewtonOptions::default() }
    }
}

struct LinearSystem<'a> {
    q: usize,
    h: &'a [f64],
    scale: f64,
    bop: &'a BoundaryOperator,
    lambda: f64,
}

impl TwoPointSystem for LinearSystem<'_> {
    fn width(&self) -> usize {
        2 * self.q
    }

    fn field(&self, node: usize, _t: f64, x: &[f64], out: &mut [f64]) -> Result<(), SolveError> {
        let q = self.q;
        let (u, w) = x.split_at(q);
        phi_inverse_into(w, &mut out[..q]);
        let h = &self.h[node * q..(node + 1) * q];
        for k in 0..q {
            out[q + k] = u[k] - self.scale * h[k];
        }
        Ok(())
    }

    fn field_jacobian(&self, _node: usize, _t: f64, x: &[f64], jac: &mut [f64]) -> Result<(), SolveError> {
        let q = self.q;
        let p = 2 * q;
        jac.iter_mut().for_each(|v| *v = 0.0);
        let mut dpsi = vec![0.0; q * q];
        phi_inverse_jacobian(&x[q..], &mut dpsi);
        for a in 0..q {
            for b in 0..q {
                jac[a * p + q + b] = dpsi[a * q + b];
            }
            jac[(q + a) * p + a] = 1.0;
        }
        Ok(())
    }

    fn boundary(&self, first: &[f64], last: &[f64], out: &mut [f64]) {
        boundary_closure(self.bop, self.lambda, self.q, first, last, out);
    }
}

/// Boundary residual of `(u, w)` nodal states: position `(u_0, u_N)`, flux
/// `(w_0, -w_N)`.
pub(crate) fn boundary_closure(
    bop: &BoundaryOperator,
    lambda: f64,
    q: usize,
    first: &[f64],
    last: &[f64],
    out: &mut [f64],
) {
    let mut pos = vec![0.0; 2 * q];
    let mut flux = vec![0.0; 2 * q];
    pos[..q].copy_from_slice(&first[..q]);
    pos[q..].copy_from_slice(&last[..q]);
    flux[..q].copy_from_slice(&first[q..2 * q]);
    for k in 0..q {
        flux[q + k] = -last[q + k];
    }
    bop.residual_into(lambda, &pos, &flux, out);
}

fn solve_scaled(
    p: &LinearProblem,
    opts: &LinearOptions,
    scale: f64,
    x: &mut [f64],
) -> Result<(), SolveError> {
    let sys = LinearSystem { q: p.q(), h: &p.h, scale, bop: &p.bop, lambda: opts.lambda };
    collocation::newton(&sys, &p.grid, x, &opts.newton).map(|_| ())
}

/// `S(h)` from the zero initial guess.
pub fn solve_s(p: &LinearProblem, opts: &LinearOptions) -> Result<GridFunction, SolveError> {
    solve_s_from(p, opts, None)
}

/// `S(h)` from a warm start. On Newton failure the right-hand side is ramped
/// in as `s h` for `s = 0.25, 0.5, 0.75, 1` from zero.
pub fn solve_s_from(
    p: &LinearProblem,
    opts: &LinearOptions,
    initial: Option<&GridFunction>,
) -> Result<GridFunction, SolveError> {
    let q = p.q();
    let zero = || vec![0.0; 2 * q * p.grid.len()];
    let mut x = match initial {
        Some(gf) if gf.q() == q && gf.nodes() == p.grid.len() => gf.to_state(),
        Some(_) => return Err(SolveError::Shape("warm start does not match the grid".into())),
        None => zero(),
    };
    match solve_scaled(p, opts, 1.0, &mut x) {
        Ok(()) => Ok(GridFunction::from_state(q, &x)),
        Err(SolveError::NewtonDivergence { .. }) => {
            let mut x = zero();
            for s in [0.25, 0.5, 0.75, 1.0] {
                solve_scaled(p, opts, s, &mut x)?;
            }
            Ok(GridFunction::from_state(q, &x))
        }
        Err(e) => Err(e),
    }
}

/// Infinity norms of the collocation defect of `-w' + u - h` (and of
/// `u' - phi^{-1}(w)`) and of the boundary residual.
pub fn discrete_residual(gf: &GridFunction, p: &LinearProblem) -> Result<ResidualNorms, SolveError> {
    discrete_residual_with(gf, p, DEFAULT_LAMBDA)
}

pub fn discrete_residual_with(
    gf: &GridFunction,
    p: &LinearProblem,
    lambda: f64,
) -> Result<ResidualNorms, SolveError> {
    if gf.q() != p.q() || gf.nodes() != p.grid.len() {
        return Err(SolveError::Shape("grid function does not match the problem".into()));
    }
    let sys = LinearSystem { q: p.q(), h: &p.h, scale: 1.0, bop: &p.bop, lambda };
    let x = gf.to_state();
    let mut r = vec![0.0; x.len()];
    collocation::residual(&sys, &p.grid, &x, &mut r)
}

/// A closed-form test solution with its first two derivatives.
pub struct Manufactured {
    pub q: usize,
    pub value: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub velocity: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub acceleration: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
}

impl Manufactured {
    /// `u*(t) = amplitude sin(frequency t)` in one dimension.
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self {
            q: 1,
            value: Box::new(move |t| vec![amplitude * (frequency * t).sin()]),
            velocity: Box::new(move |t| vec![amplitude * frequency * (frequency * t).cos()]),
            acceleration: Box::new(move |t| vec![-amplitude * frequency * frequency * (frequency * t).sin()]),
        }
    }

    pub fn constant(values: Vec<f64>) -> Self {
        let q = values.len();
        Self {
            q,
            value: Box::new(move |_| values.clone()),
            velocity: Box::new(move |_| vec![0.0; q]),
            acceleration: Box::new(move |_| vec![0.0; q]),
        }
    }
}

/// Nodal `h = -d/dt phi(u*') + u*` together with the exact `(u*, phi(u*'))`.
pub fn manufactured_rhs(
    u_star: &Manufactured,
    grid: &Grid,
) -> Result<(Vec<f64>, GridFunction), DomainError> {
    let q = u_star.q;
    let mut h = Vec::with_capacity(q * grid.len());
    let mut exact = GridFunction::zeros(q, grid.len());
    for (i, t) in grid.nodes().enumerate() {
        let u = (u_star.value)(t);
        let v = (u_star.velocity)(t);
        let a = (u_star.acceleration)(t);
        let dphi = phi_jacobian(&v)?;
        let w = phi(&v)?;
        for r in 0..q {
            let flux_rate: f64 = (0..q).map(|c| dphi[r * q + c] * a[c]).sum();
            h.push(u[r] - flux_rate);
        }
        exact.u[i * q..(i + 1) * q].copy_from_slice(&u);
        exact.w[i * q..(i + 1) * q].copy_from_slice(&w);
    }
    Ok((h, exact))
}

/// Both sides of the continuity estimate
/// `||u1 - u2||_{H^1}^2 <= sqrt(T) ||h1 - h2||_inf ||u1 - u2||_{L^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityGap {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn continuity_gap(
    h1: &[f64],
    h2: &[f64],
    bop: &BoundaryOperator,
    grid: &Grid,
    opts: &LinearOptions,
) -> Result<ContinuityGap, SolveError> {
    let p1 = LinearProblem::new(*grid, bop.clone(), h1.to_vec())?;
    let p2 = LinearProblem::new(*grid, bop.clone(), h2.to_vec())?;
    let u1 = solve_s(&p1, opts)?;
    let u2 = solve_s(&p2, opts)?;
    let q = bop.q();
    let diff_sq = |i: usize| {
        let a = u1.u_at(i);
        let b = u2.u_at(i);
        (0..q).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>()
    };
    let vel_sq = |i: usize| {
        let a = u1.velocity_at(i);
        let b = u2.velocity_at(i);
        (0..q).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>()
    };
    let l2_sq = trapezoid(grid, diff_sq);
    let lhs = trapezoid(grid, vel_sq) + l2_sq;
    let h_sup = h1.iter().zip(h2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rhs = grid.t_end().sqrt() * h_sup * l2_sq.sqrt();
    Ok(ContinuityGap { lhs, rhs })
}
