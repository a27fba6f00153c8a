//! Banded Gaussian elimination with partial pivoting.
//!
//! Row `r` stores columns `r - kl ..= r + ku + kl`; the extra `kl`
//! super-diagonals absorb fill-in from row interchanges.

#[derive(Debug, Clone, PartialEq)]
pub struct SingularMatrix {
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.ku + self.kl, "({row}, {col}) outside band");
        row * self.width + (col + self.kl - row)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[self.slot(row, col)]
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            col + self.kl >= row && col <= row + self.ku,
            "entry ({row}, {col}) outside kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    /// Solves `A x = b` in place, destroying the matrix.
    pub fn solve_in_place(mut self, b: &mut [f64]) -> Result<(), SingularMatrix> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.kl + self.ku;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * 1e-3;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best > tiny) {
                return Err(SingularMatrix { column: k });
            }
            let last_col = (k + reach).min(n - 1);
            if piv != k {
                for c in k..=last_col {
                    let a = self.slot(k, c);
                    let p = self.slot(piv, c);
                    self.data.swap(a, p);
                }
                b.swap(k, piv);
            }
            let pivot = self.get(k, k);
            for r in k + 1..=last_row {
                let l = self.get(r, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                let s = self.slot(r, k);
                self.data[s] = 0.0;
                for c in k + 1..=last_col {
                    let kc = self.get(k, c);
                    if kc != 0.0 {
                        let rc = self.slot(r, c);
                        self.data[rc] -= l * kc;
                    }
                }
                b[r] -= l * b[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = b[k];
            for (c, bc) in b.iter().enumerate().take(last_col + 1).skip(k + 1) {
                acc -= self.get(k, c) * bc;
            }
            b[k] = acc / self.get(k, k);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (20, 3, 2), (40, 5, 5), (33, 0, 4), (33, 4, 0)] {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = DMatrix::<f64>::zeros(n, n);
            for r in 0..n {
                for c in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                    // weak diagonal so that pivoting actually happens
                    let v: f64 = rng.random_range(-1.0..1.0) + if r == c { 0.1 } else { 0.0 };
                    band.add(r, c, v);
                    dense[(r, c)] = v;
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let expect = dense.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let mut x = b.clone();
            band.solve_in_place(&mut x).unwrap();
            for i in 0..n {
                assert!((x[i] - expect[i]).abs() < 1e-8 * (1.0 + expect[i].abs()), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn detects_singular() {
        let mut band = BandMatrix::zeros(3, 1, 1);
        band.add(0, 0, 1.0);
        band.add(1, 0, 1.0);
        band.add(2, 2, 1.0);
        let mut b = vec![1.0, 1.0, 1.0];
        assert!(band.solve_in_place(&mut b).is_err());
    }
}
