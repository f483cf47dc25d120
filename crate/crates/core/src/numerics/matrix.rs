use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;
pub type RealMatrix = DMatrix<f64>;
pub type RealVector = DVector<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(cr)
}

pub fn real_part(m: &ComplexMatrix) -> RealMatrix {
    m.map(|z| z.re)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn real_frobenius(m: &RealMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest entrywise deviation from Hermiticity, max |m_ij - conj(m_ji)|.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigenvalues of a Hermitian matrix (symmetrized first), ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn symmetric_eigenvalues(m: &RealMatrix) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    m.singular_values().iter().sum()
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Column-stacking vectorization.
pub fn vec_cols(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_iterator(m.len(), m.iter().copied())
}

/// Inverse of [`vec_cols`] for a d×d matrix.
pub fn unvec_cols(v: &ComplexVector, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_iterator(d, d, v.iter().copied())
}

pub fn ensure_square<T>(m: &DMatrix<T>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn ensure_finite_complex(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

/// Partial trace over the second factor of a (d_a·d_b)-dimensional operator,
/// with index ordering `i_a * d_b + i_b` (the Kronecker convention of [`kron`]).
pub fn partial_trace_second(m: &ComplexMatrix, d_a: usize, d_b: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d_a, d_a);
    for i in 0..d_a {
        for j in 0..d_a {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d_b {
                acc += m[(i * d_b + k, j * d_b + k)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Symmetric square root S with S·Sᵀ = m for a symmetric PSD matrix.
///
/// Eigenvalues in [-tol, 0) are clipped to zero; anything more negative is a
/// numerical failure.
pub fn psd_factor(m: &RealMatrix, tol: f64, what: &str) -> Result<RealMatrix> {
    let n = ensure_square(m, what)?;
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut d = RealMatrix::zeros(n, n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if !l.is_finite() || l < -tol {
            return Err(Error::NumericalFailure(format!(
                "{what} is indefinite: eigenvalue {l:e}"
            )));
        }
        d[(i, i)] = l.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(v * d * v.transpose())
}
