//! State-space realizations (A, B, C, M) of stationary Gaussian processes whose
//! covariance is a sum of decaying exponentials and damped cosines.
//!
//! The state obeys dx = Ax dt + B dW with stationary covariance M solving
//! AM + MAᵀ + BBᵀ = 0; the output is y = Cx with covariance R(τ) = C e^{Aτ} M Cᵀ.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{
    expm, lyapunov_residual, psd_factor, real_frobenius, solve_lyapunov, ComplexMatrix,
    RandomStream, RealMatrix, RealVector,
};
use crate::{Error, Result};

pub use crate::numerics::is_hurwitz;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    /// Covariance c·e^{-γ|τ|}.
    Exp { c: f64, gamma: f64 },
    /// Covariance c·e^{-γ|τ|}(cos ω₀τ + (γ/ω₀) sin ω₀|τ|).
    Osc { c: f64, gamma: f64, omega0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub modes: Vec<Mode>,
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be positive, got {v}")))
    }
}

impl Mode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Mode::Exp { c, gamma } => {
                positive(c, "mode weight c")?;
                positive(gamma, "mode rate gamma")
            }
            Mode::Osc { c, gamma, omega0 } => {
                positive(c, "mode weight c")?;
                positive(gamma, "mode rate gamma")?;
                positive(omega0, "mode frequency omega0")?;
                if gamma * gamma + omega0 * omega0 < 1e-300 {
                    return Err(Error::InvalidInput("degenerate oscillator mode".into()));
                }
                Ok(())
            }
        }
    }

    pub fn weight(&self) -> f64 {
        match *self {
            Mode::Exp { c, .. } | Mode::Osc { c, .. } => c,
        }
    }

    fn order(&self) -> usize {
        match self {
            Mode::Exp { .. } => 1,
            Mode::Osc { .. } => 2,
        }
    }

    pub fn covariance(&self, tau: f64) -> f64 {
        let s = tau.abs();
        match *self {
            Mode::Exp { c, gamma } => c * (-gamma * s).exp(),
            Mode::Osc { c, gamma, omega0 } => {
                c * (-gamma * s).exp() * ((omega0 * s).cos() + gamma / omega0 * (omega0 * s).sin())
            }
        }
    }

    /// ∫_ℝ R(τ) e^{-iωτ} dτ.
    pub fn spectrum(&self, omega: f64) -> f64 {
        match *self {
            Mode::Exp { c, gamma } => 2.0 * gamma * c / (gamma * gamma + omega * omega),
            Mode::Osc { c, gamma, omega0 } => {
                let w2 = gamma * gamma + omega0 * omega0;
                let d = w2 - omega * omega;
                4.0 * gamma * w2 * c / (d * d + 4.0 * gamma * gamma * omega * omega)
            }
        }
    }
}

impl KernelSpec {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        let spec = Self { modes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidInput("kernel spec has no modes".into()));
        }
        self.modes.iter().try_for_each(Mode::validate)
    }

    /// Requested covariance Σ_j R_j(τ).
    pub fn covariance(&self, tau: f64) -> f64 {
        self.modes.iter().map(|m| m.covariance(tau)).sum()
    }

    pub fn spectrum(&self, omega: f64) -> f64 {
        self.modes.iter().map(|m| m.spectrum(omega)).sum()
    }

    pub fn total_variance(&self) -> f64 {
        self.modes.iter().map(Mode::weight).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceModel {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    pub m: RealMatrix,
}

impl StateSpaceModel {
    /// Builds a model and computes M from the Lyapunov equation.
    pub fn from_abc(a: RealMatrix, b: RealMatrix, c: RealMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "incompatible state-space shapes A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        let q = &b * b.transpose();
        let m = solve_lyapunov(&a, &q)?;
        Ok(Self { a, b, c, m })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// ‖AM + MAᵀ + BBᵀ‖_F.
    pub fn lyapunov_residual(&self) -> f64 {
        lyapunov_residual(&self.a, &self.m, &(&self.b * self.b.transpose()))
    }

    pub fn validate(&self) -> Result<()> {
        if !is_hurwitz(&self.a) {
            return Err(Error::Stability("drift matrix is not Hurwitz".into()));
        }
        let bbt = &self.b * self.b.transpose();
        let tol = 1e-10 * real_frobenius(&bbt).max(1.0);
        let res = self.lyapunov_residual();
        if res > tol {
            return Err(Error::NumericalFailure(format!(
                "stationary covariance has Lyapunov residual {res:e}"
            )));
        }
        Ok(())
    }
}

/// Block-diagonal realization, one block per mode.
pub fn realize(kernel: &KernelSpec) -> Result<StateSpaceModel> {
    kernel.validate()?;
    let n: usize = kernel.modes.iter().map(Mode::order).sum();
    let mut a = RealMatrix::zeros(n, n);
    let mut b = RealMatrix::zeros(n, kernel.modes.len());
    let mut c = RealMatrix::zeros(1, n);
    let mut i = 0;
    for (j, mode) in kernel.modes.iter().enumerate() {
        match *mode {
            Mode::Exp { c: w, gamma } => {
                a[(i, i)] = -gamma;
                b[(i, j)] = (2.0 * gamma * w).sqrt();
                c[(0, i)] = 1.0;
            }
            Mode::Osc { c: w, gamma, omega0 } => {
                let w2 = gamma * gamma + omega0 * omega0;
                a[(i, i + 1)] = 1.0;
                a[(i + 1, i)] = -w2;
                a[(i + 1, i + 1)] = -2.0 * gamma;
                // position variance of x'' + 2γx' + Ω²x = bξ is b²/(4γΩ²)
                b[(i + 1, j)] = (4.0 * gamma * w2 * w).sqrt();
                c[(0, i)] = 1.0;
            }
        }
        i += mode.order();
    }
    let model = StateSpaceModel::from_abc(a, b, c)?;
    model.validate()?;
    Ok(model)
}

/// R(τ) = C e^{Aτ} M Cᵀ, with R(-τ) = R(τ)ᵀ.
pub fn covariance_of_model(model: &StateSpaceModel, tau: f64) -> Result<RealMatrix> {
    let f = expm(&(&model.a * tau.abs()))?;
    let r = &model.c * f * &model.m * model.c.transpose();
    Ok(if tau < 0.0 { r.transpose() } else { r })
}

/// S(ω) = Φ(iω)Φ(iω)* with Φ(iω) = C(iωI - A)^{-1}B.
pub fn spectral_density_of_model(model: &StateSpaceModel, omega: f64) -> Result<ComplexMatrix> {
    let n = model.state_dim();
    let to_c = |m: &RealMatrix| m.map(|x| Complex64::new(x, 0.0));
    let shifted = ComplexMatrix::identity(n, n) * Complex64::new(0.0, omega) - to_c(&model.a);
    let inv = shifted
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure(format!("iωI - A singular at ω = {omega}")))?;
    let phi = to_c(&model.c) * inv * to_c(&model.b);
    Ok(&phi * phi.adjoint())
}

/// Exact one-step discretization x_{k+1} = F x_k + w_k, Cov(w) = M - FMFᵀ.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub f: RealMatrix,
    pub q: RealMatrix,
    /// Symmetric square root of Q.
    pub q_factor: RealMatrix,
    /// Symmetric square root of M.
    pub m_factor: RealMatrix,
}

pub fn discretize(model: &StateSpaceModel, dt: f64) -> Result<Discretization> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let f = expm(&(&model.a * dt))?;
    let q = &model.m - &f * &model.m * f.transpose();
    let q_factor = psd_factor(&q, 1e-12, "one-step noise covariance")?;
    let m_factor = psd_factor(&model.m, 1e-12, "stationary covariance")?;
    Ok(Discretization {
        f,
        q,
        q_factor,
        m_factor,
    })
}

fn draw(stream: &mut RandomStream, factor: &RealMatrix) -> RealVector {
    let g = RealVector::from_iterator(factor.ncols(), (0..factor.ncols()).map(|_| stream.gaussian()));
    factor * g
}

/// Stationary output paths y_0..y_steps of trajectory j, generated from
/// `RandomStream::new(seed, j)`. Only the first output component is recorded.
pub fn sample_stationary_paths(
    model: &StateSpaceModel,
    dt: f64,
    steps: usize,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let disc = discretize(model, dt)?;
    let paths = (0..n_traj)
        .into_par_iter()
        .map(|j| {
            let mut stream = RandomStream::new(seed, j as u64);
            let mut x = draw(&mut stream, &disc.m_factor);
            let mut y = Vec::with_capacity(steps + 1);
            y.push((&model.c * &x)[(0, 0)]);
            for _ in 0..steps {
                x = &disc.f * &x + draw(&mut stream, &disc.q_factor);
                y.push((&model.c * &x)[(0, 0)]);
            }
            y
        })
        .collect();
    Ok(paths)
}

/// Zero-mean autocovariance estimate at `lag` samples, pooled over
/// trajectories and time origins.
pub fn ensemble_autocovariance(paths: &[Vec<f64>], lag: usize) -> Result<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for p in paths {
        if p.len() > lag {
            for t in 0..p.len() - lag {
                sum += p[t] * p[t + lag];
            }
            count += p.len() - lag;
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput(format!("no samples at lag {lag}")));
    }
    Ok(sum / count as f64)
}
