//! Lindblad master equations
//!
//! dρ/dt = -(i/ħ)[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k†L_k, ρ})
//!
//! together with the Heisenberg-picture generator
//!
//! 𝓛(X) = (i/ħ)[H, X] + ½ Σ_k ([L_k†, X] L_k + L_k† [X, L_k]),
//!
//! which satisfies Tr(𝓛*(ρ) X) = Tr(ρ 𝓛(X)).

use num_complex::Complex64;

use crate::fock::{quadratures, FockSpace};
use crate::numerics::{
    anticommutator, commutator, cr, dagger, ensure_finite_complex, ensure_square, hermitian_defect,
    hermitian_eigenvalues, hermitize, identity, kron, trace, unvec_cols, ComplexMatrix, ComplexVector,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e-12 and positivity to -1e-10.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, 1e-12, 1e-10)
    }

    pub fn with_tolerances(matrix: ComplexMatrix, trace_tol: f64, eig_tol: f64) -> Result<Self> {
        ensure_square(&matrix, "density matrix")?;
        ensure_finite_complex(&matrix, "density matrix")?;
        let herm = hermitian_defect(&matrix);
        if herm > 1e-12 {
            return Err(Error::InvalidInput(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        let tr = trace(&matrix);
        if (tr - cr(1.0)).norm() > trace_tol {
            return Err(Error::InvalidInput(format!("density matrix trace is {tr}")));
        }
        let min = hermitian_eigenvalues(&matrix)[0];
        if min < -eig_tol {
            return Err(Error::InvalidInput(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// |ψ⟩⟨ψ| for a normalized ψ.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        let v = psi / cr(n);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Tr(ρX).
    pub fn expectation(&self, x: &ComplexMatrix) -> Complex64 {
        trace(&(&self.matrix * x))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    pub h: ComplexMatrix,
    pub lindblad_ops: Vec<ComplexMatrix>,
    pub hbar: f64,
}

impl LindbladModel {
    pub fn new(h: ComplexMatrix, lindblad_ops: Vec<ComplexMatrix>, hbar: f64) -> Result<Self> {
        let d = ensure_square(&h, "Hamiltonian")?;
        ensure_finite_complex(&h, "Hamiltonian")?;
        let defect = hermitian_defect(&h);
        if defect > 1e-12 * h.norm().max(1.0) {
            return Err(Error::InvalidInput(format!("Hamiltonian not Hermitian (defect {defect:e})")));
        }
        for (k, l) in lindblad_ops.iter().enumerate() {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::Dimension(format!(
                    "Lindblad operator {k} is {}x{}, expected {d}x{d}",
                    l.nrows(),
                    l.ncols()
                )));
            }
            ensure_finite_complex(l, "Lindblad operator")?;
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self {
            h: hermitize(&h),
            lindblad_ops,
            hbar,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn check(&self, m: &ComplexMatrix, what: &str) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "{what} is {}x{}, model dimension is {}",
                m.nrows(),
                m.ncols(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// 𝓛*(ρ).
pub fn lindblad_rhs(rho: &ComplexMatrix, model: &LindbladModel) -> Result<ComplexMatrix> {
    model.check(rho, "density matrix")?;
    let mut out = commutator(&model.h, rho) * Complex64::new(0.0, -1.0 / model.hbar);
    for l in &model.lindblad_ops {
        let ld = dagger(l);
        let ldl = &ld * l;
        out += l * rho * &ld - anticommutator(&ldl, rho) * cr(0.5);
    }
    Ok(out)
}

/// 𝓛(X).
pub fn heisenberg_generator(x: &ComplexMatrix, model: &LindbladModel) -> Result<ComplexMatrix> {
    model.check(x, "observable")?;
    let mut out = commutator(&model.h, x) * Complex64::new(0.0, 1.0 / model.hbar);
    for l in &model.lindblad_ops {
        let ld = dagger(l);
        out += (commutator(&ld, x) * l + &ld * commutator(x, l)) * cr(0.5);
    }
    Ok(out)
}

/// d²×d² matrix G with G·vec(ρ) = vec(𝓛*(ρ)) for column stacking.
pub fn vectorize_generator(model: &LindbladModel) -> ComplexMatrix {
    let d = model.dim();
    let id = identity(d);
    let mut g = (kron(&id, &model.h) - kron(&model.h.transpose(), &id)) * Complex64::new(0.0, -1.0 / model.hbar);
    for l in &model.lindblad_ops {
        let ldl = dagger(l) * l;
        g += kron(&l.conjugate(), l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * cr(0.5);
    }
    g
}

/// 0.1/‖G‖₂, a conservative RK4 step.
pub fn suggested_dt(model: &LindbladModel) -> f64 {
    let g = vectorize_generator(model);
    let norm = g.singular_values().iter().copied().fold(0.0, f64::max);
    if norm > 0.0 {
        0.1 / norm
    } else {
        f64::INFINITY
    }
}

fn rk4_step(rho: &ComplexMatrix, model: &LindbladModel, dt: f64) -> Result<ComplexMatrix> {
    let h = cr(dt);
    let k1 = lindblad_rhs(rho, model)?;
    let k2 = lindblad_rhs(&(rho + &k1 * (h * 0.5)), model)?;
    let k3 = lindblad_rhs(&(rho + &k2 * (h * 0.5)), model)?;
    let k4 = lindblad_rhs(&(rho + &k3 * h), model)?;
    Ok(rho + (k1 + (k2 + k3) * cr(2.0) + k4) * (h / 6.0))
}

/// Aborts when Tr(ρ·observable) exceeds the limit, e.g. a number operator
/// guarding against Fock truncation leakage.
pub struct Monitor<'a> {
    pub observable: &'a ComplexMatrix,
    pub limit: f64,
}

/// Fixed-step RK4; states 0..=steps, each Hermitized and validated.
pub fn evolve(rho0: &DensityMatrix, model: &LindbladModel, dt: f64, steps: usize) -> Result<Vec<DensityMatrix>> {
    evolve_monitored(rho0, model, dt, steps, None)
}

pub fn evolve_monitored(
    rho0: &DensityMatrix,
    model: &LindbladModel,
    dt: f64,
    steps: usize,
    monitor: Option<Monitor<'_>>,
) -> Result<Vec<DensityMatrix>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    model.check(&rho0.matrix, "initial state")?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(rho0.clone());
    let mut rho = rho0.matrix.clone();
    for step in 1..=steps {
        rho = hermitize(&rk4_step(&rho, model, dt)?);
        let tr = trace(&rho);
        let finite = rho.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let min = if finite { hermitian_eigenvalues(&rho)[0] } else { f64::NAN };
        if !finite || (tr - cr(1.0)).norm() > 1e-10 || !(min >= -1e-8) {
            return Err(Error::StepSize {
                step,
                diagnostics: format!(
                    "trace {tr}, min eigenvalue {min:e}, dt {dt:e} (suggested ≤ {:e})",
                    suggested_dt(model)
                ),
            });
        }
        if let Some(m) = &monitor {
            let v = trace(&(&rho * m.observable)).re;
            if v > m.limit {
                return Err(Error::NumericalFailure(format!(
                    "monitored expectation {v} exceeds {} at step {step}",
                    m.limit
                )));
            }
        }
        out.push(DensityMatrix { matrix: rho.clone() });
    }
    Ok(out)
}

/// Unique stationary state from the null space of the vectorized generator.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    let d = model.dim();
    let g = vectorize_generator(model);
    let svd = g.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NumericalFailure("SVD did not produce right singular vectors".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = 1e-10 * smax.max(1.0);
    let kernel_dim = sv.iter().filter(|&&s| s <= tol).count();
    if kernel_dim != 1 {
        return Err(Error::NonUniqueSteadyState { kernel_dim });
    }
    let idx = (0..sv.len()).min_by(|&i, &j| sv[i].total_cmp(&sv[j])).unwrap();
    let v = ComplexVector::from_iterator(d * d, v_t.row(idx).iter().map(|z| z.conj()));
    let rho = hermitize(&unvec_cols(&v, d));
    let tr = trace(&rho);
    let rho = rho / tr;
    let residual = lindblad_rhs(&rho, model)?.norm();
    if residual > 1e-10 * smax.max(1.0) {
        return Err(Error::NumericalFailure(format!("steady-state residual {residual:e}")));
    }
    DensityMatrix::with_tolerances(rho, 1e-10, 1e-10)
}

/// Two-level atom with ground state at index 0 and σ₋ = |g⟩⟨e|:
/// H = ħΩσ₊σ₋, L₁ = √(γ(N+1)) σ₋, L₂ = √(γN) σ₊.
pub fn two_level_thermal(omega: f64, gamma: f64, n_thermal: f64, hbar: f64) -> Result<LindbladModel> {
    if !(gamma >= 0.0) || !(n_thermal >= 0.0) {
        return Err(Error::InvalidInput("two-level rates must be non-negative".into()));
    }
    let sm = sigma_minus();
    let sp = dagger(&sm);
    let h = &sp * &sm * cr(hbar * omega);
    let mut ops = vec![&sm * cr((gamma * (n_thermal + 1.0)).sqrt())];
    if n_thermal > 0.0 {
        ops.push(&sp * cr((gamma * n_thermal).sqrt()));
    }
    LindbladModel::new(h, ops, hbar)
}

pub fn sigma_minus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(0, 1)] = cr(1.0);
    m
}

/// σ_z = |e⟩⟨e| - |g⟩⟨g|.
pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![cr(-1.0), cr(1.0)]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampedOscillator {
    pub mass: f64,
    pub spring: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub k_b: f64,
}

impl DampedOscillator {
    pub fn omega(&self) -> f64 {
        (self.spring / self.mass).sqrt()
    }

    /// Physical X = √(ħ/2Mω)·q and P = √(ħMω/2)·p.
    pub fn position_momentum(&self, space: FockSpace) -> (ComplexMatrix, ComplexMatrix) {
        let (q, p) = quadratures(space);
        let w = self.omega();
        (
            q.matrix * cr((self.hbar / (2.0 * self.mass * w)).sqrt()),
            p.matrix * cr((self.hbar * self.mass * w / 2.0).sqrt()),
        )
    }
}

/// H = P²/2M + ½kX² + (γ/2M){X, P},
/// L = (1/ħ)√(4k_BTγ) X + (i/M)√(γ/(4k_BT)) P,
/// for which d⟨X⟩/dt = ⟨P⟩/M and d⟨P⟩/dt = -k⟨X⟩ - (2γ/M)⟨P⟩.
pub fn damped_ho_model(params: &DampedOscillator, space: FockSpace) -> Result<LindbladModel> {
    let DampedOscillator {
        mass,
        spring,
        gamma,
        temperature,
        hbar,
        k_b,
    } = *params;
    for (name, v) in [("mass", mass), ("spring", spring), ("temperature", temperature), ("hbar", hbar), ("k_b", k_b)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidInput(format!("oscillator {name} must be positive, got {v}")));
        }
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("damping must be non-negative, got {gamma}")));
    }
    let (x, p) = params.position_momentum(space);
    let kbt = k_b * temperature;
    let h = &p * &p * cr(0.5 / mass) + &x * &x * cr(0.5 * spring) + anticommutator(&x, &p) * cr(gamma / (2.0 * mass));
    let ops = if gamma > 0.0 {
        let l = &x * cr((4.0 * kbt * gamma).sqrt() / hbar) + &p * Complex64::new(0.0, (gamma / (4.0 * kbt)).sqrt() / mass);
        vec![l]
    } else {
        Vec::new()
    };
    LindbladModel::new(h, ops, hbar)
}
