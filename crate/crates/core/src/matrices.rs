//! Nonnegative 2x2 matrices that are convergent to zero, and the a-priori
//! bound vector `(I - M)^{-1} (delta T, delta T)^T` they produce.
//!
//! A nonnegative square matrix `M` is convergent to zero (`M^k -> 0`) iff
//! `I - M` is invertible with `(I - M)^{-1} = I + M + M^2 + ...`, iff its
//! spectral radius is below one, iff `(I - M)^{-1}` exists and has
//! nonnegative entries. All four tests are provided separately so they can be
//! checked against each other.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("matrix is not convergent to zero (spectral radius {spectral_radius})")]
    NotConvergent { spectral_radius: f64 },
    #[error("delta and T must satisfy delta >= 0, T > 0 (got delta = {delta}, T = {t_end})")]
    BadBoundInput { delta: f64, t_end: f64 },
}

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

/// Maximum absolute entry.
pub fn max_norm(a: &Mat2) -> f64 {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// The matrix `[[a, b], [c, d]]` of growth constants. Entries are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvMatrix(Mat2);

impl ConvMatrix {
    pub fn new(entries: Mat2) -> Result<Self, MatrixError> {
        for (row, r) in entries.iter().enumerate() {
            for (col, &value) in r.iter().enumerate() {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(MatrixError::NegativeEntry { row, col, value });
                }
            }
        }
        Ok(Self(entries))
    }

    pub fn from_constants(a: f64, b: f64, c: f64, d: f64) -> Result<Self, MatrixError> {
        Self::new([[a, b], [c, d]])
    }

    pub fn entries(&self) -> &Mat2 {
        &self.0
    }

    /// Spectral radius from the characteristic polynomial
    /// `lambda^2 - tr lambda + det`.
    pub fn spectral_radius(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let tr = a + d;
        let det = a * d - b * c;
        // (a - d)^2 + 4bc avoids the cancellation in tr^2 - 4 det.
        let disc = (a - d) * (a - d) + 4.0 * b * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let l1 = 0.5 * (tr + s);
            let l2 = 0.5 * (tr - s);
            l1.abs().max(l2.abs())
        } else {
            det.abs().sqrt()
        }
    }

    fn i_minus(&self) -> Mat2 {
        let [[a, b], [c, d]] = self.0;
        [[1.0 - a, -b], [-c, 1.0 - d]]
    }

    /// Inverse of `I - M` through the adjugate, if `det(I - M) != 0`.
    fn raw_inverse(&self) -> Option<Mat2> {
        let [[p, q], [r, s]] = self.i_minus();
        let det = p * s - q * r;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some([[s / det, -q / det], [-r / det, p / det]])
    }
}

/// Convergence verdict together with the spectral radius. A radius of exactly
/// one is not convergent.
pub fn is_convergent_to_zero(m: &ConvMatrix) -> (bool, f64) {
    let rho = m.spectral_radius();
    (rho < 1.0, rho)
}

pub fn inverse_i_minus_m(m: &ConvMatrix) -> Result<Mat2, MatrixError> {
    let (ok, rho) = is_convergent_to_zero(m);
    if !ok {
        return Err(MatrixError::NotConvergent { spectral_radius: rho });
    }
    m.raw_inverse().ok_or(MatrixError::NotConvergent { spectral_radius: rho })
}

/// Bound vector `beta = (I - M)^{-1} (delta T, delta T)^T` on the squared
/// `H^1` norms of every homotopy solution, and `sqrt(beta_u) + sqrt(beta_v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriBound {
    pub beta_u: f64,
    pub beta_v: f64,
    pub total: f64,
}

pub fn apriori_bound_iv(m: &ConvMatrix, delta: f64, t_end: f64) -> Result<AprioriBound, MatrixError> {
    if !(delta >= 0.0) || !(t_end > 0.0) {
        return Err(MatrixError::BadBoundInput { delta, t_end });
    }
    let inv = inverse_i_minus_m(m)?;
    let dt = delta * t_end;
    let beta_u = (inv[0][0] + inv[0][1]) * dt;
    let beta_v = (inv[1][0] + inv[1][1]) * dt;
    Ok(AprioriBound { beta_u, beta_v, total: beta_u.sqrt() + beta_v.sqrt() })
}

/// Matrix powers by repeated squaring: `M^(2^j)` for growing `j`. Convergent
/// once an iterate drops below `1e-12`, divergent once it exceeds `1e12`.
pub fn power_test(m: &ConvMatrix) -> bool {
    const MAX_SQUARINGS: usize = 80;
    let mut p = *m.entries();
    if max_norm(&p) < 1e-12 {
        return true;
    }
    for _ in 0..MAX_SQUARINGS {
        p = mat_mul(&p, &p);
        let n = max_norm(&p);
        if n < 1e-12 {
            return true;
        }
        if !(n < 1e12) {
            return false;
        }
    }
    false
}

/// Partial sums of `I + M + M^2 + ...`, doubled at each step via
/// `S_{2k} = S_k + M^k S_k`. Convergent when the sums settle and the limit
/// inverts `I - M`.
pub fn neumann_series_test(m: &ConvMatrix) -> bool {
    const MAX_DOUBLINGS: usize = 80;
    let mut sum = IDENTITY;
    let mut power = *m.entries();
    for _ in 0..MAX_DOUBLINGS {
        let tail = mat_mul(&power, &sum);
        sum = mat_add(&sum, &tail);
        power = mat_mul(&power, &power);
        let scale = max_norm(&sum);
        if !scale.is_finite() || scale > 1e15 {
            return false;
        }
        if max_norm(&tail) <= 1e-15 * scale {
            let check = mat_mul(&sum, &m.i_minus());
            let err = max_norm(&[
                [check[0][0] - 1.0, check[0][1]],
                [check[1][0], check[1][1] - 1.0],
            ]);
            return err <= 1e-8 * scale;
        }
    }
    false
}

/// Every eigenvalue of `M` lies in the open unit disc.
pub fn eigenvalue_test(m: &ConvMatrix) -> bool {
    is_convergent_to_zero(m).0
}

/// `I - M` is invertible and its inverse is entrywise nonnegative.
pub fn nonnegative_inverse_test(m: &ConvMatrix) -> bool {
    match m.raw_inverse() {
        Some(inv) => inv.iter().flatten().all(|v| *v >= 0.0),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn convergence_examples() {
        let zero = ConvMatrix::new([[0.0; 2]; 2]).unwrap();
        assert_eq!(is_convergent_to_zero(&zero), (true, 0.0));

        let m = ConvMatrix::new([[0.3, 0.4], [0.4, 0.3]]).unwrap();
        let (ok, rho) = is_convergent_to_zero(&m);
        assert!(ok && (rho - 0.7).abs() < 1e-12);

        let m = ConvMatrix::new([[0.6, 0.5], [0.5, 0.6]]).unwrap();
        let (ok, rho) = is_convergent_to_zero(&m);
        assert!(!ok && (rho - 1.1).abs() < 1e-12);

        let id = ConvMatrix::new(IDENTITY).unwrap();
        assert_eq!(is_convergent_to_zero(&id), (false, 1.0));
    }

    #[test]
    fn negative_entries_rejected() {
        assert_eq!(
            ConvMatrix::new([[0.1, -0.2], [0.0, 0.0]]),
            Err(MatrixError::NegativeEntry { row: 0, col: 1, value: -0.2 })
        );
        assert!(ConvMatrix::new([[f64::NAN, 0.0], [0.0, 0.0]]).is_err());
    }

    #[test]
    fn inverse_examples() {
        let zero = ConvMatrix::new([[0.0; 2]; 2]).unwrap();
        assert_eq!(inverse_i_minus_m(&zero).unwrap(), IDENTITY);

        let half = ConvMatrix::new([[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert!(close(&inverse_i_minus_m(&half).unwrap(), &[[2.0, 0.0], [0.0, 2.0]], 1e-15));

        let m = ConvMatrix::new([[0.3, 0.4], [0.4, 0.3]]).unwrap();
        let inv = inverse_i_minus_m(&m).unwrap();
        let expect = [[0.7 / 0.33, 0.4 / 0.33], [0.4 / 0.33, 0.7 / 0.33]];
        assert!(close(&inv, &expect, 1e-12));
        assert!((inv[0][0] - 2.1212).abs() < 1e-4 && (inv[0][1] - 1.2121).abs() < 1e-4);

        let bad = ConvMatrix::new([[0.6, 0.5], [0.5, 0.6]]).unwrap();
        assert!(matches!(inverse_i_minus_m(&bad), Err(MatrixError::NotConvergent { .. })));
    }

    #[test]
    fn inverse_agrees_with_truncated_series() {
        let m = ConvMatrix::new([[0.3, 0.4], [0.4, 0.3]]).unwrap();
        let inv = inverse_i_minus_m(&m).unwrap();
        let mut sum = IDENTITY;
        let mut p = IDENTITY;
        for _ in 0..200 {
            p = mat_mul(&p, m.entries());
            sum = mat_add(&sum, &p);
        }
        assert!(close(&inv, &sum, 1e-10));
        let prod = mat_mul(&inv, &m.i_minus());
        assert!(close(&prod, &IDENTITY, 1e-12));
    }

    #[test]
    fn bound_examples() {
        let zero = ConvMatrix::new([[0.0; 2]; 2]).unwrap();
        assert_eq!(
            apriori_bound_iv(&zero, 0.0, 1.0).unwrap(),
            AprioriBound { beta_u: 0.0, beta_v: 0.0, total: 0.0 }
        );
        assert_eq!(
            apriori_bound_iv(&zero, 1.0, 1.0).unwrap(),
            AprioriBound { beta_u: 1.0, beta_v: 1.0, total: 2.0 }
        );
        let half = ConvMatrix::new([[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let b = apriori_bound_iv(&half, 1.0, 2.0).unwrap();
        assert!((b.beta_u - 4.0).abs() < 1e-14 && (b.beta_v - 4.0).abs() < 1e-14);
        assert!((b.total - 4.0).abs() < 1e-14);
        assert!(apriori_bound_iv(&half, -1.0, 2.0).is_err());
        let id = ConvMatrix::new(IDENTITY).unwrap();
        assert!(apriori_bound_iv(&id, 1.0, 1.0).is_err());
    }

    #[test]
    fn characterizations_on_examples() {
        for (entries, expect) in [
            ([[0.3, 0.4], [0.4, 0.3]], true),
            ([[0.6, 0.5], [0.5, 0.6]], false),
            ([[0.0, 2.0], [0.0, 0.99]], true),
            ([[2.0, 0.0], [0.0, 0.5]], false),
            ([[0.0, 0.0], [0.0, 0.0]], true),
        ] {
            let m = ConvMatrix::new(entries).unwrap();
            assert_eq!(power_test(&m), expect, "{entries:?}");
            assert_eq!(neumann_series_test(&m), expect, "{entries:?}");
            assert_eq!(eigenvalue_test(&m), expect, "{entries:?}");
            assert_eq!(nonnegative_inverse_test(&m), expect, "{entries:?}");
        }
    }
}
