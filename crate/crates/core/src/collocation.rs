//! Trapezoidal collocation for first-order two-point boundary value problems
//! `x' = F(t, x)` on a uniform grid, closed by a boundary residual
//! `B(x(0), x(T)) = 0`, solved by damped Newton.
//!
//! Unknowns are nodal values `x_0, ..., x_N`, each of width `p`, stored
//! row-major. Interval equations are
//! `(x_{i+1} - x_i) / dt - (F_i + F_{i+1}) / 2 = 0`.
//!
//! The Newton matrix couples `x_0` and `x_N` through the boundary rows. To
//! keep it banded, a copy `z_i` of `x_0` is carried along the grid
//! (`z_0 = x_0`, `z_{i+1} = z_i`) and the boundary rows use `z_N` instead.

use thiserror::Error;

use crate::banded::BandMatrix;
use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("Newton iteration stalled at residual {residual:e} after {iterations} iterations")]
    NewtonDivergence { residual: f64, iterations: usize },
    #[error("no strategy converged; best residual {best_residual:e}")]
    NoConvergence { best_residual: f64 },
    #[error("singular Newton matrix (column {0})")]
    Singular(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Uniform partition of `[0, T]` into `N` intervals, `N >= 16` and even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t_end: f64,
    intervals: usize,
}

impl Grid {
    pub const MIN_INTERVALS: usize = 16;

    pub fn new(t_end: f64, intervals: usize) -> Result<Self, SolveError> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(SolveError::Grid(format!("T must be positive, got {t_end}")));
        }
        if intervals < Self::MIN_INTERVALS || !intervals.is_multiple_of(2) {
            return Err(SolveError::Grid(format!(
                "N must be even and at least {}, got {intervals}",
                Self::MIN_INTERVALS
            )));
        }
        Ok(Self { t_end, intervals })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.intervals as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.t_end
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }
}

/// A first-order system on a grid.
pub trait TwoPointSystem {
    /// Width `p` of the nodal state.
    fn width(&self) -> usize;

    fn field(&self, node: usize, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), SolveError>;

    /// Row-major `p x p` Jacobian of [`TwoPointSystem::field`].
    fn field_jacobian(&self, node: usize, t: f64, x: &[f64], jac: &mut [f64]) -> Result<(), SolveError>;

    /// Boundary residual of width `p` from the first and last nodal states.
    fn boundary(&self, first: &[f64], last: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, max_halvings: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub iterations: usize,
    pub residual: f64,
}

/// Infinity norms of the interval defects and the boundary residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub ode: f64,
    pub bc: f64,
}

impl ResidualNorms {
    pub fn max(&self) -> f64 {
        self.ode.max(self.bc)
    }
}

/// Fills `out` (length `p (N + 1)`) with interval defects followed by the
/// boundary residual.
pub fn residual<S: TwoPointSystem + ?Sized>(
    sys: &S,
    grid: &Grid,
    x: &[f64],
    out: &mut [f64],
) -> Result<ResidualNorms, SolveError> {
    let p = sys.width();
    let n = grid.intervals();
    if x.len() != p * (n + 1) || out.len() != p * (n + 1) {
        return Err(SolveError::Shape(format!(
            "state of length {} for width {p} and {n} intervals",
            x.len()
        )));
    }
    let dt = grid.step();
    let mut f_prev = vec![0.0; p];
    let mut f_next = vec![0.0; p];
    sys.field(0, grid.node(0), &x[..p], &mut f_prev)?;
    let mut ode = 0.0f64;
    for i in 0..n {
        let xi = &x[i * p..(i + 1) * p];
        let xj = &x[(i + 1) * p..(i + 2) * p];
        sys.field(i + 1, grid.node(i + 1), xj, &mut f_next)?;
        for k in 0..p {
            let d = (xj[k] - xi[k]) / dt - 0.5 * (f_prev[k] + f_next[k]);
            out[i * p + k] = d;
            ode = ode.max(d.abs());
        }
        std::mem::swap(&mut f_prev, &mut f_next);
    }
    let tail = &mut out[n * p..];
    sys.boundary(&x[..p], &x[n * p..], tail);
    let bc = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(ode.is_finite() && bc.is_finite()) {
        return Err(SolveError::Eval(EvalError::NonFinite));
    }
    Ok(ResidualNorms { ode, bc })
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn boundary_jacobian<S: TwoPointSystem + ?Sized>(
    sys: &S,
    first: &[f64],
    last: &[f64],
    base: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let p = sys.width();
    let mut j0 = vec![0.0; p * p];
    let mut jn = vec![0.0; p * p];
    let mut probe = vec![0.0; p];
    let mut a = first.to_vec();
    let mut b = last.to_vec();
    for k in 0..p {
        let h = 1e-7 * (1.0 + first[k].abs());
        a[k] = first[k] + h;
        sys.boundary(&a, last, &mut probe);
        a[k] = first[k];
        for r in 0..p {
            j0[r * p + k] = (probe[r] - base[r]) / h;
        }
        let h = 1e-7 * (1.0 + last[k].abs());
        b[k] = last[k] + h;
        sys.boundary(first, &b, &mut probe);
        b[k] = last[k];
        for r in 0..p {
            jn[r * p + k] = (probe[r] - base[r]) / h;
        }
    }
    (j0, jn)
}

fn newton_step<S: TwoPointSystem + ?Sized>(
    sys: &S,
    grid: &Grid,
    x: &[f64],
    r: &[f64],
) -> Result<Vec<f64>, SolveError> {
    let p = sys.width();
    let n = grid.intervals();
    let dt = grid.step();
    let block = 2 * p;
    let size = block * (n + 1);
    let band = 3 * p - 1;
    let mut m = BandMatrix::zeros(size, band, band);
    let mut rhs = vec![0.0; size];

    let mut jacs = vec![0.0; p * p * (n + 1)];
    for i in 0..=n {
        sys.field_jacobian(i, grid.node(i), &x[i * p..(i + 1) * p], &mut jacs[i * p * p..(i + 1) * p * p])?;
    }

    // x_0 - z_0 = 0
    for k in 0..p {
        m.add(k, k, 1.0);
        m.add(k, p + k, -1.0);
    }
    for i in 0..n {
        let row0 = p + block * i;
        let col_i = block * i;
        let col_j = block * (i + 1);
        let ji = &jacs[i * p * p..(i + 1) * p * p];
        let jj = &jacs[(i + 1) * p * p..(i + 2) * p * p];
        for a in 0..p {
            let row = row0 + a;
            for b in 0..p {
                let diag = if a == b { 1.0 / dt } else { 0.0 };
                let ei = -diag - 0.5 * ji[a * p + b];
                let fj = diag - 0.5 * jj[a * p + b];
                if ei != 0.0 {
                    m.add(row, col_i + b, ei);
                }
                if fj != 0.0 {
                    m.add(row, col_j + b, fj);
                }
            }
            rhs[row] = -r[i * p + a];
            // z_{i+1} - z_i = 0
            let crow = row0 + p + a;
            m.add(crow, col_j + p + a, 1.0);
            m.add(crow, col_i + p + a, -1.0);
        }
    }
    let row0 = p + block * n;
    let col_n = block * n;
    let (j0, jn) = boundary_jacobian(sys, &x[..p], &x[n * p..], &r[n * p..]);
    for a in 0..p {
        for b in 0..p {
            m.add(row0 + a, col_n + p + b, j0[a * p + b]);
            m.add(row0 + a, col_n + b, jn[a * p + b]);
        }
        rhs[row0 + a] = -r[n * p + a];
    }
    m.solve_in_place(&mut rhs).map_err(|e| SolveError::Singular(e.column))?;
    let mut step = vec![0.0; p * (n + 1)];
    for i in 0..=n {
        step[i * p..(i + 1) * p].copy_from_slice(&rhs[block * i..block * i + p]);
    }
    Ok(step)
}

/// Damped Newton with Armijo halving on the Euclidean residual norm;
/// converged when the infinity norm of the residual is at most `opts.tol`.
pub fn newton<S: TwoPointSystem + ?Sized>(
    sys: &S,
    grid: &Grid,
    x: &mut [f64],
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, SolveError> {
    let len = x.len();
    let mut r = vec![0.0; len];
    let mut norms = residual(sys, grid, x, &mut r)?;
    let mut trial = vec![0.0; len];
    let mut r_trial = vec![0.0; len];
    for it in 0..opts.max_iter {
        if norms.max() <= opts.tol {
            return Ok(NewtonOutcome { iterations: it, residual: norms.max() });
        }
        let step = match newton_step(sys, grid, x, &r) {
            Ok(s) => s,
            Err(SolveError::Singular(_)) => {
                return Err(SolveError::NewtonDivergence { residual: norms.max(), iterations: it })
            }
            Err(e) => return Err(e),
        };
        let merit = two_norm(&r);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            for k in 0..len {
                trial[k] = x[k] + alpha * step[k];
            }
            if let Ok(nt) = residual(sys, grid, &trial, &mut r_trial) {
                if two_norm(&r_trial) <= (1.0 - 1e-4 * alpha) * merit {
                    x.copy_from_slice(&trial);
                    std::mem::swap(&mut r, &mut r_trial);
                    norms = nt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            if norms.max() <= opts.tol {
                break;
            }
            return Err(SolveError::NewtonDivergence { residual: norms.max(), iterations: it });
        }
    }
    if norms.max() <= opts.tol {
        Ok(NewtonOutcome { iterations: opts.max_iter, residual: norms.max() })
    } else {
        Err(SolveError::NewtonDivergence { residual: norms.max(), iterations: opts.max_iter })
    }
}
