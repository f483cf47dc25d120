//! Truncated bosonic Fock spaces: ladder operators, coherent and exponential
//! vectors, Weyl operators, quadratures and tensor products.
//!
//! A single mode truncated at occupation N has basis |0⟩..|N⟩. Product spaces
//! use the Kronecker ordering of [`kron`], first factor slowest.

use num_complex::Complex64;

use crate::numerics::{c, cr, dagger, expm, identity, kron, ComplexMatrix, ComplexVector};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    pub cutoff: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::InvalidInput("Fock cutoff must be at least 1".into()));
        }
        Ok(Self { cutoff })
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    /// Dimension of each tensor factor.
    pub dims: Vec<usize>,
    pub matrix: ComplexMatrix,
}

impl FockOperator {
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        let d: usize = dims.iter().product();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "operator is {}x{} but the space has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dims, matrix })
    }

    fn single(space: FockSpace, matrix: ComplexMatrix) -> Self {
        Self {
            dims: vec![space.dim()],
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            matrix: dagger(&self.matrix),
        }
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.dims != self.dims {
            return Err(Error::Dimension("operator and vector live on different spaces".into()));
        }
        Ok(FockVector {
            dims: v.dims.clone(),
            amplitudes: &self.matrix * &v.amplitudes,
            tail: v.tail,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub dims: Vec<usize>,
    pub amplitudes: ComplexVector,
    /// Squared norm the exact vector carries above the cutoff.
    pub tail: f64,
}

impl FockVector {
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        if self.dims != other.dims {
            return Err(Error::Dimension("vectors live on different spaces".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Whether the truncation discards a noticeable part of the vector.
    pub fn heavy_tail(&self) -> bool {
        self.tail > 1e-8
    }
}

/// a with a|n⟩ = √n |n-1⟩.
pub fn annihilation(space: FockSpace) -> FockOperator {
    let d = space.dim();
    let mut m = ComplexMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = cr((n as f64).sqrt());
    }
    FockOperator::single(space, m)
}

pub fn creation(space: FockSpace) -> FockOperator {
    annihilation(space).dagger()
}

pub fn number_operator(space: FockSpace) -> FockOperator {
    let d = space.dim();
    let m = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(d, (0..d).map(|n| cr(n as f64))));
    FockOperator::single(space, m)
}

pub fn number_state(n: usize, space: FockSpace) -> Result<FockVector> {
    if n > space.cutoff {
        return Err(Error::InvalidInput(format!("level {n} exceeds cutoff {}", space.cutoff)));
    }
    let mut v = ComplexVector::zeros(space.dim());
    v[n] = cr(1.0);
    Ok(FockVector {
        dims: vec![space.dim()],
        amplitudes: v,
        tail: 0.0,
    })
}

pub fn vacuum(space: FockSpace) -> FockVector {
    number_state(0, space).expect("level 0 always exists")
}

/// Σ_{n>N} xⁿ/n!.
fn series_tail(x: f64, cutoff: usize) -> f64 {
    let mut term = 1.0;
    for n in 1..=cutoff {
        term *= x / n as f64;
    }
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        term *= x / n as f64;
        tail += term;
        if term <= 1e-17 * tail || term == 0.0 || n > cutoff + 10_000 {
            return tail;
        }
        n += 1;
    }
}

/// Amplitudes uⁿ/√n!, n = 0..N.
fn power_amplitudes(u: Complex64, space: FockSpace) -> ComplexVector {
    let mut v = ComplexVector::zeros(space.dim());
    v[0] = cr(1.0);
    for n in 1..space.dim() {
        v[n] = v[n - 1] * u / (n as f64).sqrt();
    }
    v
}

/// Coherent vector e^{-|α|²/2} Σ αⁿ/√n! |n⟩; `tail` is the Poisson mass
/// above the cutoff.
pub fn coherent_vector(alpha: Complex64, space: FockSpace) -> FockVector {
    let x = alpha.norm_sqr();
    let scale = (-0.5 * x).exp();
    FockVector {
        dims: vec![space.dim()],
        amplitudes: power_amplitudes(alpha, space) * cr(scale),
        tail: (-x).exp() * series_tail(x, space.cutoff),
    }
}

/// Unnormalized exponential vector Σ uⁿ/√n! |n⟩ with ⟨e(u)|e(v)⟩ = e^{ū v}.
pub fn exponential_vector(u: Complex64, space: FockSpace) -> FockVector {
    FockVector {
        dims: vec![space.dim()],
        amplitudes: power_amplitudes(u, space),
        tail: series_tail(u.norm_sqr(), space.cutoff),
    }
}

/// W(α) = exp(α a† - ᾱ a) on the truncated space.
pub fn weyl(alpha: Complex64, space: FockSpace) -> Result<FockOperator> {
    let a = annihilation(space).matrix;
    let gen = dagger(&a) * alpha - a * alpha.conj();
    Ok(FockOperator::single(space, expm(&gen)?))
}

/// q = a + a†, p = i(a† - a), so [q, p] = 2i away from the cutoff.
pub fn quadratures(space: FockSpace) -> (FockOperator, FockOperator) {
    let a = annihilation(space).matrix;
    let ad = dagger(&a);
    let q = &a + &ad;
    let p = (&ad - &a) * c(0.0, 1.0);
    (FockOperator::single(space, q), FockOperator::single(space, p))
}

pub fn tensor(a: &FockOperator, b: &FockOperator) -> FockOperator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    FockOperator {
        dims,
        matrix: kron(&a.matrix, &b.matrix),
    }
}

pub fn tensor_vectors(a: &FockVector, b: &FockVector) -> FockVector {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    let amps = kron(
        &ComplexMatrix::from_column_slice(a.amplitudes.len(), 1, a.amplitudes.as_slice()),
        &ComplexMatrix::from_column_slice(b.amplitudes.len(), 1, b.amplitudes.as_slice()),
    );
    let (na, nb) = (a.amplitudes.norm_squared(), b.amplitudes.norm_squared());
    FockVector {
        dims,
        amplitudes: ComplexVector::from_column_slice(amps.as_slice()),
        tail: a.tail * (nb + b.tail) + b.tail * na,
    }
}

pub fn identity_operator(dims: Vec<usize>) -> FockOperator {
    let d = dims.iter().product();
    FockOperator {
        dims,
        matrix: identity(d),
    }
}

/// Spectral norm of the first `levels` columns of `m`, i.e. of m restricted to
/// span{|0⟩..|levels-1⟩}.
pub fn interior_norm(m: &ComplexMatrix, levels: usize) -> f64 {
    let k = levels.min(m.ncols());
    m.columns(0, k).into_owned().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Residuals of the basic identities at one cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockResiduals {
    pub cutoff: usize,
    /// max deviation of [a, a†] from diag(1, .., 1, -N)
    pub ccr_corner: f64,
    /// ‖a|ψ(α)⟩ - α|ψ(α)⟩‖
    pub coherent_eigen: f64,
    /// ‖(W(u)W(v) - e^{-i Im(ūv)}W(u+v)) P‖ on the lowest ⌊N/3⌋+1 levels
    pub weyl_composition: f64,
    /// ‖W(α)|Ω⟩ - |ψ(α)⟩‖
    pub displaced_vacuum: f64,
    /// ‖W(α)†W(α) - I‖_max
    pub unitarity: f64,
}

pub fn fock_residuals(cutoff: usize, alpha: Complex64, u: Complex64, v: Complex64) -> Result<FockResiduals> {
    let space = FockSpace::new(cutoff)?;
    let a = annihilation(space);
    let ad = a.dagger();
    let comm = &a.matrix * &ad.matrix - &ad.matrix * &a.matrix;
    let d = space.dim();
    let mut ccr_corner: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let want = if i != j {
                0.0
            } else if i == cutoff {
                -(cutoff as f64)
            } else {
                1.0
            };
            ccr_corner = ccr_corner.max((comm[(i, j)] - cr(want)).norm());
        }
    }
    let psi = coherent_vector(alpha, space);
    let coherent_eigen = (&a.matrix * &psi.amplitudes - &psi.amplitudes * alpha).norm();
    let wu = weyl(u, space)?.matrix;
    let wv = weyl(v, space)?.matrix;
    let wuv = weyl(u + v, space)?.matrix;
    let phase = Complex64::from_polar(1.0, -(u.conj() * v).im);
    let weyl_composition = interior_norm(&(&wu * &wv - wuv * phase), cutoff / 3 + 1);
    let wa = weyl(alpha, space)?;
    let displaced_vacuum = (wa.apply(&vacuum(space))?.amplitudes - &psi.amplitudes).norm();
    let unitarity = (dagger(&wa.matrix) * &wa.matrix - identity(d)).camax();
    Ok(FockResiduals {
        cutoff,
        ccr_corner,
        coherent_eigen,
        weyl_composition,
        displaced_vacuum,
        unitarity,
    })
}
