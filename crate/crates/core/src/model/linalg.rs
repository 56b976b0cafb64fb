//! Dense Cholesky factorization for the Gaussian-process covariance.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::real::Real;

/// Lower-triangular factor `L` with `A = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Array2<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors a symmetric matrix, reading only its lower triangle.
    ///
    /// Fails with the 1-based index of the first non-positive leading minor.
    pub fn new(a: &Array2<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim("Cholesky needs a square matrix"));
        }
        let mut l = Array2::<T>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d = d - l[[j, k]] * l[[j, k]];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { minor: j + 1 });
            }
            let djj = d.sqrt();
            l[[j, j]] = djj;
            for i in j + 1..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s = s - l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Array2<T> {
        &self.l
    }

    /// `ln det A`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        self.l.diag().iter().map(|&d| two * d.ln()).sum()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[T]) -> Array1<T> {
        let n = self.l.nrows();
        let mut y = Array1::<T>::zeros(n);
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s = s - self.l[[i, k]] * y[k];
            }
            y[i] = s / self.l[[i, i]];
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Array1<T> {
        let n = self.l.nrows();
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s = s - self.l[[k, i]] * x[k];
            }
            x[i] = s / self.l[[i, i]];
        }
        x
    }

    /// `b^T A^{-1} b`.
    pub fn quad_form(&self, b: &[T]) -> T {
        self.forward(b).iter().map(|&v| v * v).sum()
    }

    /// Full inverse `A^{-1}`, symmetric.
    pub fn inverse(&self) -> Array2<T> {
        let n = self.l.nrows();
        // Invert L in place, then form L^{-T} L^{-1}.
        let mut li = Array2::<T>::zeros((n, n));
        for j in 0..n {
            li[[j, j]] = T::one() / self.l[[j, j]];
            for i in j + 1..n {
                let mut s = T::zero();
                for k in j..i {
                    s = s - self.l[[i, k]] * li[[k, j]];
                }
                li[[i, j]] = s / self.l[[i, i]];
            }
        }
        let mut inv = Array2::<T>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut s = T::zero();
                for k in i..n {
                    s = s + li[[k, i]] * li[[k, j]];
                }
                inv[[i, j]] = s;
                inv[[j, i]] = s;
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn factors_and_solves() {
        let a = array![[4.0f64, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let c = Cholesky::new(&a).unwrap();
        let l = c.factor();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let b = [1.0, -2.0, 0.5];
        let x = c.solve(&b);
        let ax = a.dot(&x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
        let inv = c.inverse();
        let id = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[[i, j]] - want).abs() < 1e-12);
            }
        }
        let det = 4.0 * (5.0 * 3.0 - 1.0) - 2.0 * (2.0 * 3.0 - 0.6) + 0.6 * (2.0 - 5.0 * 0.6);
        assert!((c.log_det() - f64::ln(det)).abs() < 1e-12);
        let q: f64 = b.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
        assert!((c.quad_form(&b) - q).abs() < 1e-12);
    }

    #[test]
    fn reports_offending_minor() {
        let a = array![[1.0f64, 2.0], [2.0, 1.0]];
        match Cholesky::new(&a) {
            Err(Error::NotPositiveDefinite { minor }) => assert_eq!(minor, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_precision() {
        let a = array![[2.0f32, 0.5], [0.5, 1.0]];
        let c = Cholesky::new(&a).unwrap();
        assert!((c.log_det() - 1.75f32.ln()).abs() < 1e-6);
    }
}
