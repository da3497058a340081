//! Dense complex Hermitian matrices with an upper Cholesky factor.

use num_complex::Complex64;

use super::NumericsError;

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as loss of positive definiteness.
const PIVOT_FLOOR: f64 = 1e-14;

/// An `M x M` Hermitian matrix stored row-major, optionally carrying the
/// upper-triangular factor `U` with `A = U^H U`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
    chol: Option<Vec<Complex64>>,
}

impl HermitianMatrix {
    /// Builds a matrix from the upper triangle produced by `f(m, n)` for
    /// `m <= n`; the lower triangle is filled by conjugation and the diagonal
    /// is forced real.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for m in 0..dim {
            entries[m * dim + m] = Complex64::new(f(m, m).re, 0.0);
            for n in m + 1..dim {
                let v = f(m, n);
                entries[m * dim + n] = v;
                entries[n * dim + m] = v.conj();
            }
        }
        Self { dim, entries, chol: None }
    }

    /// Builds from a full row-major entry list, rejecting non-Hermitian input.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self, NumericsError> {
        if entries.len() != dim * dim {
            return Err(NumericsError::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for m in 0..dim {
            for n in m..dim {
                let a = entries[m * dim + n];
                let b = entries[n * dim + m].conj();
                if (a - b).norm() > 1e-12 * scale {
                    return Err(NumericsError::NotHermitian { row: m, col: n });
                }
            }
        }
        Ok(Self::from_fn(dim, |m, n| entries[m * dim + n]))
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Self::from_fn(dim, |m, n| if m == n { Complex64::new(value, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.dim + n]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Upper Cholesky factor, row-major, if the matrix has been factored.
    pub fn chol(&self) -> Option<&[Complex64]> {
        self.chol.as_deref()
    }

    pub fn is_factored(&self) -> bool {
        self.chol.is_some()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Consumes the matrix and returns it with its Cholesky factor attached.
    pub fn factored(mut self) -> Result<Self, NumericsError> {
        self.chol = Some(cholesky_upper(self.dim, &self.entries)?);
        Ok(self)
    }

    fn factor_or_err(&self) -> Result<&[Complex64], NumericsError> {
        self.chol.as_deref().ok_or(NumericsError::NotFactored)
    }

    fn check_len(&self, len: usize) -> Result<(), NumericsError> {
        if len != self.dim {
            Err(NumericsError::DimensionMismatch { expected: self.dim, found: len })
        } else {
            Ok(())
        }
    }

    /// Solves `U^H y = b` (forward substitution); `y` is the whitened vector
    /// up to the factor `sqrt(2)`.
    pub fn whiten(&self, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        self.check_len(b.len())?;
        let u = self.factor_or_err()?;
        let mut y = b.to_vec();
        forward_solve(self.dim, u, &mut y);
        Ok(y)
    }

    /// `x^H A^{-1} x` via the two triangular factors.
    pub fn inverse_quadratic_form(&self, x: &[Complex64]) -> Result<f64, NumericsError> {
        Ok(self.whiten(x)?.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Solves `A x = b` with a forward and a backward triangular solve.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        self.check_len(b.len())?;
        let u = self.factor_or_err()?;
        let mut x = b.to_vec();
        forward_solve(self.dim, u, &mut x);
        backward_solve(self.dim, u, &mut x);
        Ok(x)
    }

    /// Writes `U^H w` into `out`; with `w ~ CN(0, I)` the result has
    /// covariance `A`.
    pub fn color_into(&self, w: &[Complex64], out: &mut [Complex64]) -> Result<(), NumericsError> {
        self.check_len(w.len())?;
        self.check_len(out.len())?;
        let u = self.factor_or_err()?;
        let n = self.dim;
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=i {
                acc += u[k * n + i].conj() * w[k];
            }
            out[i] = acc;
        }
        Ok(())
    }

    /// Matrix-vector product `A x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        self.check_len(x.len())?;
        let n = self.dim;
        Ok((0..n).map(|m| (0..n).map(|k| self.entries[m * n + k] * x[k]).sum()).collect())
    }
}

/// Factors `a` as `U^H U` and returns the row-major upper factor.
fn cholesky_upper(n: usize, a: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
    let max_diag = (0..n).map(|i| a[i * n + i].re).fold(0.0, f64::max);
    let floor = PIVOT_FLOOR * max_diag;
    let mut u = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        let mut pivot = a[i * n + i].re;
        for k in 0..i {
            pivot -= u[k * n + i].norm_sqr();
        }
        if !(pivot > floor) {
            return Err(NumericsError::NotPositiveDefinite { index: i, pivot });
        }
        let d = pivot.sqrt();
        u[i * n + i] = Complex64::new(d, 0.0);
        for j in i + 1..n {
            let mut s = a[i * n + j];
            for k in 0..i {
                s -= u[k * n + i].conj() * u[k * n + j];
            }
            u[i * n + j] = s / d;
        }
    }
    Ok(u)
}

/// In-place solve of `U^H y = b`.
fn forward_solve(n: usize, u: &[Complex64], y: &mut [Complex64]) {
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= u[k * n + i].conj() * y[k];
        }
        y[i] = s / u[i * n + i].re;
    }
}

/// In-place solve of `U x = y`.
fn backward_solve(n: usize, u: &[Complex64], x: &mut [Complex64]) {
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= u[i * n + k] * x[k];
        }
        x[i] = s / u[i * n + i].re;
    }
}

/// Returns `A` with its Cholesky factor populated.
pub fn cholesky(a: HermitianMatrix) -> Result<HermitianMatrix, NumericsError> {
    a.factored()
}
