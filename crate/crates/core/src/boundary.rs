//! Maximal monotone boundary operators on `R^q x R^q`.
//!
//! An operator `gamma` encodes the boundary inclusion
//! `(w(0), -w(T)) in gamma(u(0), u(T))` with `w = phi(u')`. It is represented
//! only through its resolvent `J = (I + lambda * gamma)^{-1}`, which is
//! single-valued, total and firmly nonexpansive. The inclusion `a in gamma(x)`
//! is then the fixed-point statement `x = J(x + lambda * a)`.
//!
//! Pairs in `R^q x R^q` are stored as flat slices of length `2q`: the first
//! `q` entries belong to `t = 0`, the last `q` to `t = T`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::{dot, norm};

/// Default resolvent parameter.
pub const DEFAULT_LAMBDA: f64 = 1.0;

const CERTIFICATE_SAMPLES: usize = 10_000;
const CERTIFICATE_SEED: u64 = 0x6d62_7670;
const PSD_TOLERANCE: f64 = 1e-10;
const EIGEN_CHECK_MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error("invalid boundary parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Periodic,
    Antiperiodic,
    LinearPsd,
    ProjectionProx,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Periodic => "periodic",
            BoundaryKind::Antiperiodic => "antiperiodic",
            BoundaryKind::LinearPsd => "linear_psd",
            BoundaryKind::ProjectionProx => "projection",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "dirichlet" => BoundaryKind::Dirichlet,
            "neumann" => BoundaryKind::Neumann,
            "periodic" => BoundaryKind::Periodic,
            "antiperiodic" => BoundaryKind::Antiperiodic,
            "linear_psd" => BoundaryKind::LinearPsd,
            "projection" => BoundaryKind::ProjectionProx,
            _ => return None,
        })
    }

    pub const ALL: [BoundaryKind; 6] = [
        BoundaryKind::Dirichlet,
        BoundaryKind::Neumann,
        BoundaryKind::Periodic,
        BoundaryKind::Antiperiodic,
        BoundaryKind::LinearPsd,
        BoundaryKind::ProjectionProx,
    ];
}

/// Shape of `D(gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainDescriptor {
    SinglePoint0,
    FullSpace,
    Diagonal,
    Antidiagonal,
    ConvexSet,
}

impl DomainDescriptor {
    /// Domains that are linear subspaces, for which the Rayleigh quotient
    /// defining the first eigenvalue-like constant is scale invariant.
    pub fn is_cone(self) -> bool {
        !matches!(self, DomainDescriptor::ConvexSet)
    }
}

pub type ProjectionFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Closed convex set `C` containing the origin. The boundary operator built
/// from it is the normal cone of `C`, whose resolvent is the projection onto
/// `C` for every `lambda`.
#[derive(Clone)]
pub enum ConvexSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { radius: f64 },
    /// User-supplied projection. Only necessary conditions are checked.
    Custom(ProjectionFn),
}

impl fmt::Debug for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexSet::Box { lower, upper } => f
                .debug_struct("Box")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            ConvexSet::Ball { radius } => f.debug_struct("Ball").field("radius", radius).finish(),
            ConvexSet::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ConvexSet {
    fn project(&self, z: &[f64], out: &mut [f64]) {
        match self {
            ConvexSet::Box { lower, upper } => {
                for i in 0..z.len() {
                    out[i] = z[i].clamp(lower[i], upper[i]);
                }
            }
            ConvexSet::Ball { radius } => {
                let n = norm(z);
                let s = if n > *radius { radius / n } else { 1.0 };
                for i in 0..z.len() {
                    out[i] = z[i] * s;
                }
            }
            ConvexSet::Custom(p) => p(z, out),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub enum BoundaryParams {
    #[default]
    None,
    /// Row-major `2q x 2q` matrix for [`BoundaryKind::LinearPsd`].
    Matrix(Vec<f64>),
    Projection(ConvexSet),
}

#[derive(Debug, Clone)]
enum Repr {
    Dirichlet,
    Neumann,
    Periodic,
    Antiperiodic,
    Linear(DMatrix<f64>),
    Projection(ConvexSet),
}

#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    q: usize,
    repr: Repr,
}

/// Boundary values `(u(0), u(T))` together with the flux pair
/// `(w(0), -w(T))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub position: Vec<f64>,
    pub flux: Vec<f64>,
}

pub fn build_boundary(
    kind: BoundaryKind,
    q: usize,
    params: BoundaryParams,
) -> Result<BoundaryOperator, BoundaryError> {
    if q == 0 {
        return Err(BoundaryError::InvalidParams("dimension must be at least 1".into()));
    }
    let repr = match (kind, params) {
        (BoundaryKind::Dirichlet, BoundaryParams::None) => Repr::Dirichlet,
        (BoundaryKind::Neumann, BoundaryParams::None) => Repr::Neumann,
        (BoundaryKind::Periodic, BoundaryParams::None) => Repr::Periodic,
        (BoundaryKind::Antiperiodic, BoundaryParams::None) => Repr::Antiperiodic,
        (BoundaryKind::LinearPsd, BoundaryParams::Matrix(entries)) => {
            let dim = 2 * q;
            if entries.len() != dim * dim {
                return Err(BoundaryError::InvalidParams(format!(
                    "linear_psd matrix needs {} entries, got {}",
                    dim * dim,
                    entries.len()
                )));
            }
            if entries.iter().any(|v| !v.is_finite()) {
                return Err(BoundaryError::InvalidParams("matrix has non-finite entries".into()));
            }
            let a = DMatrix::from_row_slice(dim, dim, &entries);
            check_psd(&a)?;
            Repr::Linear(a)
        }
        (BoundaryKind::ProjectionProx, BoundaryParams::Projection(set)) => {
            validate_set(&set, q)?;
            Repr::Projection(set)
        }
        (kind, params) => {
            return Err(BoundaryError::InvalidParams(format!(
                "parameters {params:?} do not fit boundary kind {}",
                kind.name()
            )))
        }
    };
    Ok(BoundaryOperator { q, repr })
}

fn check_psd(a: &DMatrix<f64>) -> Result<(), BoundaryError> {
    let dim = a.nrows();
    let scale = a.abs().max().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(CERTIFICATE_SEED);
    for _ in 0..CERTIFICATE_SAMPLES {
        let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let quad = z.dot(&(a * &z));
        if quad < -PSD_TOLERANCE * scale * z.norm_squared() {
            return Err(BoundaryError::InvalidParams(format!(
                "matrix is not positive semi-definite: <Az|z> = {quad:e} on a sample"
            )));
        }
    }
    if dim <= EIGEN_CHECK_MAX_DIM {
        let sym = (a + a.transpose()) * 0.5;
        let min_eig = sym.symmetric_eigenvalues().min();
        if min_eig < -PSD_TOLERANCE * scale {
            return Err(BoundaryError::InvalidParams(format!(
                "symmetric part has eigenvalue {min_eig:e} < 0"
            )));
        }
    }
    Ok(())
}

fn validate_set(set: &ConvexSet, q: usize) -> Result<(), BoundaryError> {
    let dim = 2 * q;
    match set {
        ConvexSet::Box { lower, upper } => {
            if lower.len() != dim || upper.len() != dim {
                return Err(BoundaryError::InvalidParams(format!(
                    "box bounds need {dim} entries"
                )));
            }
            for i in 0..dim {
                if !(lower[i] <= 0.0 && 0.0 <= upper[i]) {
                    return Err(BoundaryError::InvalidParams(format!(
                        "box must contain the origin (coordinate {i}: [{}, {}])",
                        lower[i], upper[i]
                    )));
                }
            }
        }
        ConvexSet::Ball { radius } => {
            if !(*radius >= 0.0 && radius.is_finite()) {
                return Err(BoundaryError::InvalidParams(format!("bad ball radius {radius}")));
            }
        }
        ConvexSet::Custom(p) => {
            let mut rng = ChaCha8Rng::seed_from_u64(CERTIFICATE_SEED);
            let mut once = vec![0.0; dim];
            let mut twice = vec![0.0; dim];
            p(&vec![0.0; dim], &mut once);
            if norm(&once) != 0.0 {
                return Err(BoundaryError::InvalidParams(
                    "projection does not fix the origin".into(),
                ));
            }
            for _ in 0..CERTIFICATE_SAMPLES {
                let z: Vec<f64> = (0..dim)
                    .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 3.0 * z })
                    .collect();
                p(&z, &mut once);
                p(&once, &mut twice);
                let gap = once.iter().zip(&twice).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if gap > 1e-10 * (1.0 + norm(&z)) {
                    return Err(BoundaryError::InvalidParams(format!(
                        "projection is not idempotent (gap {gap:e})"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl BoundaryOperator {
    pub fn dirichlet(q: usize) -> Self {
        Self { q, repr: Repr::Dirichlet }
    }

    pub fn neumann(q: usize) -> Self {
        Self { q, repr: Repr::Neumann }
    }

    pub fn periodic(q: usize) -> Self {
        Self { q, repr: Repr::Periodic }
    }

    pub fn antiperiodic(q: usize) -> Self {
        Self { q, repr: Repr::Antiperiodic }
    }

    /// `gamma(x, y) = (y, -x)`, the skew linear operator with
    /// `A = [[0, I], [-I, 0]]`. Monotone but not a subdifferential.
    pub fn rotation(q: usize) -> Self {
        let dim = 2 * q;
        let mut a = DMatrix::zeros(dim, dim);
        for i in 0..q {
            a[(i, q + i)] = 1.0;
            a[(q + i, i)] = -1.0;
        }
        Self { q, repr: Repr::Linear(a) }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kind(&self) -> BoundaryKind {
        match self.repr {
            Repr::Dirichlet => BoundaryKind::Dirichlet,
            Repr::Neumann => BoundaryKind::Neumann,
            Repr::Periodic => BoundaryKind::Periodic,
            Repr::Antiperiodic => BoundaryKind::Antiperiodic,
            Repr::Linear(_) => BoundaryKind::LinearPsd,
            Repr::Projection(_) => BoundaryKind::ProjectionProx,
        }
    }

    pub fn domain(&self) -> DomainDescriptor {
        match self.repr {
            Repr::Dirichlet => DomainDescriptor::SinglePoint0,
            Repr::Neumann | Repr::Linear(_) => DomainDescriptor::FullSpace,
            Repr::Periodic => DomainDescriptor::Diagonal,
            Repr::Antiperiodic => DomainDescriptor::Antidiagonal,
            Repr::Projection(_) => DomainDescriptor::ConvexSet,
        }
    }

    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.repr {
            Repr::Linear(a) => Some(a),
            _ => None,
        }
    }

    pub fn convex_set(&self) -> Option<&ConvexSet> {
        match &self.repr {
            Repr::Projection(set) => Some(set),
            _ => None,
        }
    }

    /// Evaluates `J_lambda(z)` into `out`; both slices have length `2q`.
    pub fn resolvent_into(&self, lambda: f64, z: &[f64], out: &mut [f64]) {
        let q = self.q;
        debug_assert_eq!(z.len(), 2 * q);
        match &self.repr {
            Repr::Dirichlet => out.iter_mut().for_each(|o| *o = 0.0),
            Repr::Neumann => out.copy_from_slice(z),
            Repr::Periodic => {
                for i in 0..q {
                    let mean = 0.5 * (z[i] + z[q + i]);
                    out[i] = mean;
                    out[q + i] = mean;
                }
            }
            Repr::Antiperiodic => {
                for i in 0..q {
                    let half = 0.5 * (z[i] - z[q + i]);
                    out[i] = half;
                    out[q + i] = -half;
                }
            }
            Repr::Linear(a) => {
                let dim = 2 * q;
                let m = DMatrix::identity(dim, dim) + a * lambda;
                let rhs = DVector::from_column_slice(z);
                // I + lambda*A is invertible for monotone A and lambda > 0.
                let x = m.lu().solve(&rhs).expect("I + lambda A is nonsingular for PSD A");
                out.copy_from_slice(x.as_slice());
            }
            Repr::Projection(set) => set.project(z, out),
        }
    }

    pub fn resolvent(&self, lambda: f64, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.resolvent_into(lambda, z, &mut out);
        out
    }

    /// `R = position - J_lambda(position + lambda * flux)`, written into `out`.
    pub fn residual_into(&self, lambda: f64, position: &[f64], flux: &[f64], out: &mut [f64]) {
        let z: Vec<f64> = position.iter().zip(flux).map(|(p, f)| p + lambda * f).collect();
        self.resolvent_into(lambda, &z, out);
        for (o, p) in out.iter_mut().zip(position) {
            *o = p - *o;
        }
    }
}

pub fn resolvent(bop: &BoundaryOperator, lambda: f64, z: &[f64]) -> Vec<f64> {
    bop.resolvent(lambda, z)
}

/// Residual of the boundary inclusion; vanishes iff `flux in gamma(position)`.
pub fn boundary_residual(bop: &BoundaryOperator, lambda: f64, bp: &BoundaryPoint) -> Vec<f64> {
    let mut out = vec![0.0; bp.position.len()];
    bop.residual_into(lambda, &bp.position, &bp.flux, &mut out);
    out
}

/// Sign pattern of the closed conical hull of an interval `[lo, hi]` that
/// contains zero.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Ray {
    Zero,
    Positive,
    Negative,
    Line,
}

impl Ray {
    fn of(lo: f64, hi: f64) -> Self {
        match (lo < 0.0, hi > 0.0) {
            (false, false) => Ray::Zero,
            (false, true) => Ray::Positive,
            (true, false) => Ray::Negative,
            (true, true) => Ray::Line,
        }
    }

    fn meets_nontrivially(self, other: Ray) -> bool {
        use Ray::*;
        !matches!(
            (self, other),
            (Zero, _) | (_, Zero) | (Positive, Negative) | (Negative, Positive)
        )
    }
}

/// Whether the closure of `cone D(gamma)` meets the diagonal
/// `{(xi, xi)}` only at the origin. `true` certifies a positive first
/// eigenvalue-like constant.
pub fn cone_diagonal_check(bop: &BoundaryOperator) -> Result<bool, BoundaryError> {
    let q = bop.q;
    match &bop.repr {
        Repr::Dirichlet | Repr::Antiperiodic => Ok(true),
        Repr::Neumann | Repr::Periodic | Repr::Linear(_) => Ok(false),
        Repr::Projection(ConvexSet::Ball { radius }) => Ok(*radius == 0.0),
        Repr::Projection(ConvexSet::Box { lower, upper }) => {
            // The cone of a box through the origin is a product of rays, so a
            // nonzero diagonal point exists iff some coordinate pair shares a ray.
            let shared = (0..q).any(|i| {
                Ray::of(lower[i], upper[i]).meets_nontrivially(Ray::of(lower[q + i], upper[q + i]))
            });
            Ok(!shared)
        }
        Repr::Projection(ConvexSet::Custom(_)) => Err(BoundaryError::Unsupported(
            "no analytic cone for a user-supplied projection".into(),
        )),
    }
}

/// Largest violation of firm nonexpansiveness
/// `|J z1 - J z2|^2 <= <<z1 - z2 | J z1 - J z2>>` over the supplied pairs.
pub fn firm_nonexpansive_violation(
    bop: &BoundaryOperator,
    lambda: f64,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (z1, z2) in pairs {
        let j1 = bop.resolvent(lambda, z1);
        let j2 = bop.resolvent(lambda, z2);
        let dj: Vec<f64> = j1.iter().zip(&j2).map(|(a, b)| a - b).collect();
        let dz: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| a - b).collect();
        worst = worst.max(dot(&dj, &dj) - dot(&dz, &dj));
    }
    worst
}
