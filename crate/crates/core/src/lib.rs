//! Solvers for systems driven by the relativistic operator
//! `-[phi(u')]' = f(t, u, v)` on `[0, T]`, with boundary conditions written as
//! inclusions into maximal monotone operators.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
mod banded;
pub mod boundary;
pub mod collocation;
pub mod expr;
pub mod geometry;
pub mod linsolve;
pub mod matrices;
pub mod nonlinear;

pub use analysis::{
    check_growth, coercivity_constants, lambda1_estimate, select_case, AnalysisError, Case, CaseSelection,
    CoercivityConstants, GrowthConstants, GrowthRole, Inequality, Lambda1Estimate, Lambda1Method, SampleBox,
};
pub use boundary::{
    build_boundary, BoundaryError, BoundaryKind, BoundaryOperator, BoundaryParams, BoundaryPoint, ConvexSet,
    DomainDescriptor,
};
pub use collocation::{Grid, NewtonOptions, ResidualNorms, SolveError};
pub use expr::{parse_expression, EvalError, Expr, ParseError};
pub use geometry::{phi, phi_inverse, BallVec, DomainError};
pub use linsolve::{solve_s, GridFunction, LinearOptions, LinearProblem};
pub use matrices::{ConvMatrix, MatrixError};
pub use nonlinear::{
    apply_q, solve_system, verify_report, ExprForcing, FnForcing, Forcing, SolveOptions, SolveReport, Strategy,
    SystemProblem, SystemState,
};
