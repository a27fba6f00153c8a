//! The relativistic homeomorphism `phi(y) = y / sqrt(1 - |y|^2)` between the
//! open unit ball and `R^q`, together with its inverse.
//!
//! Solvers never call [`phi`] on iterates: they carry `w = phi(u')` as an
//! unknown and recover the velocity with [`phi_inverse`], which is total and
//! always lands strictly inside the unit ball.

use thiserror::Error;

/// Distance from the unit sphere below which [`phi`] refuses to evaluate.
pub const BALL_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("velocity norm {norm} is at or beyond the light-cone boundary")]
pub struct DomainError {
    pub norm: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A point of the open unit ball `B_1(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallVec(Vec<f64>);

impl BallVec {
    pub fn new(components: Vec<f64>) -> Result<Self, DomainError> {
        let n = norm(&components);
        if !(n < 1.0 - BALL_GUARD) {
            return Err(DomainError { norm: n });
        }
        Ok(Self(components))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `phi(y) = y / sqrt(1 - |y|^2)`.
pub fn phi(y: &[f64]) -> Result<Vec<f64>, DomainError> {
    let sq = dot(y, y);
    let n = sq.sqrt();
    if !(n < 1.0 - BALL_GUARD) {
        return Err(DomainError { norm: n });
    }
    let scale = 1.0 / (1.0 - sq).sqrt();
    Ok(y.iter().map(|c| c * scale).collect())
}

/// `phi^{-1}(z) = z / sqrt(1 + |z|^2)`, written into `out`.
///
/// For huge `|z|` the result is kept strictly inside the unit ball, where
/// rounding would otherwise land on the sphere.
pub fn phi_inverse_into(z: &[f64], out: &mut [f64]) {
    let sq = dot(z, z);
    let mut scale = 1.0 / (1.0 + sq).sqrt();
    if sq * scale * scale >= 1.0 - 4.0 * f64::EPSILON {
        scale = (1.0 - 4.0 * f64::EPSILON) / sq.sqrt();
    }
    for (o, c) in out.iter_mut().zip(z) {
        *o = c * scale;
    }
}

pub fn phi_inverse(z: &[f64]) -> BallVec {
    let mut out = vec![0.0; z.len()];
    phi_inverse_into(z, &mut out);
    BallVec(out)
}

/// Jacobian of `phi^{-1}` at `z`: `(I - psi psi^T) / sqrt(1 + |z|^2)` with
/// `psi = phi^{-1}(z)`. Row-major `q x q`.
pub fn phi_inverse_jacobian(z: &[f64], out: &mut [f64]) {
    let q = z.len();
    let s = (1.0 + dot(z, z)).sqrt();
    for i in 0..q {
        for j in 0..q {
            let delta = if i == j { 1.0 } else { 0.0 };
            out[i * q + j] = (delta - z[i] * z[j] / (s * s)) / s;
        }
    }
}

/// Jacobian of `phi` at `y` inside the ball: `I / s + y y^T / s^3` with
/// `s = sqrt(1 - |y|^2)`.
pub fn phi_jacobian(y: &[f64]) -> Result<Vec<f64>, DomainError> {
    let sq = dot(y, y);
    if !(sq.sqrt() < 1.0 - BALL_GUARD) {
        return Err(DomainError { norm: sq.sqrt() });
    }
    let q = y.len();
    let s = (1.0 - sq).sqrt();
    let mut out = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let delta = if i == j { 1.0 } else { 0.0 };
            out[i * q + j] = delta / s + y[i] * y[j] / (s * s * s);
        }
    }
    Ok(out)
}
