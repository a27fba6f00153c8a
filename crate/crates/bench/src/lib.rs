//! Problem builders shared by the benchmarks.

use std::f64::consts::TAU;
use std::sync::Arc;

use mbvp_core::{BoundaryOperator, ExprForcing, Grid, LinearProblem, SystemProblem};

/// Scalar linear problem `u' = phi^{-1}(w), w' = u - h` with `h = cos(2 pi t)`.
pub fn linear_problem(bop: BoundaryOperator, intervals: usize) -> LinearProblem {
    let grid = Grid::new(1.0, intervals).expect("valid grid");
    let q = bop.q();
    LinearProblem::from_fn(grid, bop, |t| vec![(TAU * t).cos(); q]).expect("valid problem")
}

/// Coupled system with growth constants `a, b` and the cross terms of the worked example.
pub fn coupled_problem(a: f64, b: f64, gamma: BoundaryOperator, eta: BoundaryOperator) -> SystemProblem {
    let f1 = format!("({a}-1)*x1 + ({b})/(1+normx^2)*(normy^2*x1 + cos({TAU}*t))");
    let f2 = format!("({b})/(1+normy^2)*(normx^2*y1 + sin({TAU}*t)) + ({a}-1)*y1");
    SystemProblem::new(
        1.0,
        Arc::new(ExprForcing::parse(&[f1]).expect("valid f1")),
        Arc::new(ExprForcing::parse(&[f2]).expect("valid f2")),
        gamma,
        eta,
    )
    .expect("valid system")
}
