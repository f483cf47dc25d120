use nalgebra::DVector;

use super::{ensure_square, real_frobenius, RealMatrix};
use crate::{Error, Result};

const HURWITZ_MARGIN: f64 = 1e-12;

/// True iff every eigenvalue of `a` has real part below `-1e-12`.
pub fn is_hurwitz(a: &RealMatrix) -> bool {
    if a.nrows() != a.ncols() || a.iter().any(|x| !x.is_finite()) {
        return false;
    }
    if a.nrows() == 0 {
        return true;
    }
    a.complex_eigenvalues()
        .iter()
        .all(|ev| ev.re < -HURWITZ_MARGIN)
}

/// ‖AM + MAᵀ + Q‖_F.
pub fn lyapunov_residual(a: &RealMatrix, m: &RealMatrix, q: &RealMatrix) -> f64 {
    real_frobenius(&(a * m + m * a.transpose() + q))
}

/// Solves AM + MAᵀ + Q = 0 for the stationary covariance M.
///
/// Uses the column-stacked Kronecker form (I ⊗ A + A ⊗ I) vec(M) = -vec(Q),
/// which is O(n⁶) and meant for n up to a few dozen.
pub fn solve_lyapunov(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    let n = ensure_square(a, "Lyapunov drift A")?;
    if q.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "Lyapunov source Q is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    if !is_hurwitz(a) {
        return Err(Error::Stability("drift matrix is not Hurwitz".into()));
    }
    let eye = RealMatrix::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, q.iter().map(|x| -x));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular Lyapunov system".into()))?;
    let m = RealMatrix::from_iterator(n, n, sol.iter().copied());
    Ok((&m + m.transpose()) * 0.5)
}
