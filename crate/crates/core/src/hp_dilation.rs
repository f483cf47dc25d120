//! Collision-model dilation of a Lindblad semigroup.
//!
//! Each interval dt couples the system to a fresh field bin in the vacuum
//! through the unitary U = exp(G) with
//!
//! G = -(i/ħ)H dt ⊗ I + L† ⊗ ΔA - L ⊗ ΔA†,  ΔA = √dt·b,
//!
//! and the bin is traced out. Expanding U to second order and using
//! ⟨Ω|ΔA ΔA†|Ω⟩ = dt yields the Lindblad generator, so the reduced dynamics
//! converge to e^{t𝓛*} at first order in dt. Several Lindblad operators are
//! handled by one bin each, applied in sequence within the step, with the
//! Hamiltonian carried by the first one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::{annihilation, FockOperator, FockSpace};
use crate::lindblad::{vectorize_generator, DensityMatrix, LindbladModel};
use crate::numerics::{
    c, cr, dagger, expm, hermitize, identity, kron, trace, trace_norm, unvec_cols, vec_cols, ComplexMatrix,
};
use crate::{Error, Result};

pub const DEFAULT_BIN_CUTOFF: usize = 2;

fn default_bin_cutoff() -> usize {
    DEFAULT_BIN_CUTOFF
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionConfig {
    pub dt: f64,
    /// Highest occupation kept in each bin.
    #[serde(default = "default_bin_cutoff")]
    pub bin_cutoff: usize,
    pub steps: usize,
}

impl CollisionConfig {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        let c = Self {
            dt,
            bin_cutoff: DEFAULT_BIN_CUTOFF,
            steps,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("bin duration must be positive, got {}", self.dt)));
        }
        if self.bin_cutoff < 1 {
            return Err(Error::InvalidInput("bin cutoff must be at least 1".into()));
        }
        Ok(())
    }

    fn bin_space(&self) -> FockSpace {
        FockSpace { cutoff: self.bin_cutoff }
    }
}

/// (ΔA, ΔA†) on one bin.
pub fn bin_increments(config: &CollisionConfig) -> Result<(FockOperator, FockOperator)> {
    config.validate()?;
    let b = annihilation(config.bin_space());
    let da = FockOperator {
        dims: b.dims.clone(),
        matrix: b.matrix * cr(config.dt.sqrt()),
    };
    let dad = da.dagger();
    Ok((da, dad))
}

pub const ITO_LABELS: [&str; 3] = ["dA", "dA_dag", "dt"];

/// Vacuum second moments ⟨Ω|X Y|Ω⟩ for X, Y ∈ {ΔA, ΔA†, dt·I}.
#[derive(Clone, Debug, PartialEq)]
pub struct ItoTable {
    pub dt: f64,
    /// entries[i][j] = ⟨Ω|X_i X_j|Ω⟩ (real parts; every entry is real)
    pub entries: [[f64; 3]; 3],
}

impl ItoTable {
    /// Entries predicted by the quantum Itô rules: dA·dA† = dt, everything
    /// else zero at first order (dt·dt is second order and kept as dt²).
    pub fn expected(dt: f64) -> [[f64; 3]; 3] {
        let mut e = [[0.0; 3]; 3];
        e[0][1] = dt;
        e[2][2] = dt * dt;
        e
    }

    /// Largest deviation from [`ItoTable::expected`].
    pub fn max_deviation(&self) -> f64 {
        let e = Self::expected(self.dt);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.entries[i][j] - e[i][j]).abs());
            }
        }
        worst
    }
}

pub fn ito_table(config: &CollisionConfig) -> Result<ItoTable> {
    let (da, dad) = bin_increments(config)?;
    let d = da.dim();
    let ops = [da.matrix, dad.matrix, identity(d) * cr(config.dt)];
    let mut entries = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            entries[i][j] = (&ops[i] * &ops[j])[(0, 0)].re;
        }
    }
    Ok(ItoTable { dt: config.dt, entries })
}

/// Generator G for one channel on system ⊗ bin.
fn channel_generator(
    h: Option<&ComplexMatrix>,
    l: Option<&ComplexMatrix>,
    hbar: f64,
    config: &CollisionConfig,
) -> Result<ComplexMatrix> {
    let (da, dad) = bin_increments(config)?;
    let db = da.dim();
    let d = h.or(l).map(|m| m.nrows()).unwrap_or(0);
    let mut g = ComplexMatrix::zeros(d * db, d * db);
    if let Some(h) = h {
        g += kron(h, &identity(db)) * c(0.0, -config.dt / hbar);
    }
    if let Some(l) = l {
        g += kron(&dagger(l), &da.matrix) - kron(l, &dad.matrix);
    }
    Ok(g)
}

/// U = exp(G) for a model with at most one Lindblad operator.
pub fn step_unitary(model: &LindbladModel, config: &CollisionConfig) -> Result<FockOperator> {
    if model.lindblad_ops.len() > 1 {
        return Err(Error::InvalidInput(
            "step_unitary takes one Lindblad operator; use step_unitaries for several".into(),
        ));
    }
    let mut us = step_unitaries(model, config)?;
    Ok(us.remove(0))
}

/// One unitary per channel, applied in order; the first carries H.
pub fn step_unitaries(model: &LindbladModel, config: &CollisionConfig) -> Result<Vec<FockOperator>> {
    config.validate()?;
    let db = config.bin_cutoff + 1;
    let dims = vec![model.dim(), db];
    let mut out = Vec::new();
    if model.lindblad_ops.is_empty() {
        let g = channel_generator(Some(&model.h), None, model.hbar, config)?;
        out.push(FockOperator {
            dims: dims.clone(),
            matrix: expm(&g)?,
        });
    }
    for (k, l) in model.lindblad_ops.iter().enumerate() {
        let h = if k == 0 { Some(&model.h) } else { None };
        let g = channel_generator(h, Some(l), model.hbar, config)?;
        out.push(FockOperator {
            dims: dims.clone(),
            matrix: expm(&g)?,
        });
    }
    Ok(out)
}

/// Kraus operators K_n = ⟨n|U|Ω⟩ of one collision.
pub fn kraus_operators(u: &FockOperator) -> Vec<ComplexMatrix> {
    let (d, db) = (u.dims[0], u.dims[1]);
    (0..db)
        .map(|n| ComplexMatrix::from_fn(d, d, |i, j| u.matrix[(i * db + n, j * db)]))
        .collect()
}

/// Kraus sets of every channel, in application order.
pub fn step_kraus(model: &LindbladModel, config: &CollisionConfig) -> Result<Vec<Vec<ComplexMatrix>>> {
    Ok(step_unitaries(model, config)?.iter().map(kraus_operators).collect())
}

fn apply_kraus(rho: &ComplexMatrix, kraus: &[Vec<ComplexMatrix>]) -> ComplexMatrix {
    let mut r = rho.clone();
    for set in kraus {
        let mut next = ComplexMatrix::zeros(r.nrows(), r.ncols());
        for k in set {
            next += k * &r * dagger(k);
        }
        r = next;
    }
    r
}

/// ρ_{n+1} = Tr_bin[U(ρ_n ⊗ |Ω⟩⟨Ω|)U†], states 0..=steps.
pub fn evolve_reduced(
    rho0: &DensityMatrix,
    model: &LindbladModel,
    config: &CollisionConfig,
) -> Result<Vec<DensityMatrix>> {
    if rho0.dim() != model.dim() {
        return Err(Error::Dimension("initial state does not match the model".into()));
    }
    let kraus = step_kraus(model, config)?;
    let mut out = Vec::with_capacity(config.steps + 1);
    out.push(rho0.clone());
    let mut rho = rho0.matrix.clone();
    for step in 1..=config.steps {
        rho = hermitize(&apply_kraus(&rho, &kraus));
        let tr = trace(&rho);
        if (tr - cr(1.0)).norm() > 1e-12 {
            return Err(Error::NumericalFailure(format!("trace {tr} after collision {step}")));
        }
        out.push(DensityMatrix { matrix: rho.clone() });
    }
    Ok(out)
}

/// T_dt(X) = Σ K_n† X K_n, composed in reverse channel order.
pub fn heisenberg_step(x: &ComplexMatrix, model: &LindbladModel, config: &CollisionConfig) -> Result<ComplexMatrix> {
    if x.nrows() != model.dim() || x.ncols() != model.dim() {
        return Err(Error::Dimension("observable does not match the model".into()));
    }
    let kraus = step_kraus(model, config)?;
    let mut out = x.clone();
    for set in kraus.iter().rev() {
        let mut next = ComplexMatrix::zeros(out.nrows(), out.ncols());
        for k in set {
            next += dagger(k) * &out * k;
        }
        out = next;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilationRow {
    pub dt: f64,
    pub steps: usize,
    /// max_k ‖ρ_k - e^{t_k 𝓛*}ρ₀‖₁
    pub error: f64,
    /// error of the previous row divided by this one
    pub ratio: Option<f64>,
    /// log(ratio)/log(dt_prev/dt)
    pub order: Option<f64>,
}

fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    let steps = (t_final / dt).round();
    if !(steps >= 1.0) || ((steps * dt) - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidInput(format!("t_final {t_final} is not a multiple of dt {dt}")));
    }
    Ok(steps as usize)
}

/// Error of the collision model against the exact semigroup for each dt.
pub fn dilation_error(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt_list: &[f64],
    bin_cutoff: usize,
) -> Result<Vec<DilationRow>> {
    if dt_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("dt list must be strictly decreasing".into()));
    }
    let g = vectorize_generator(model);
    let d = model.dim();
    let errors: Vec<Result<(usize, f64)>> = dt_list
        .par_iter()
        .map(|&dt| {
            let steps = steps_for(t_final, dt)?;
            let config = CollisionConfig { dt, bin_cutoff, steps };
            let states = evolve_reduced(rho0, model, &config)?;
            let prop = expm(&(&g * cr(dt)))?;
            let mut exact = vec_cols(&rho0.matrix);
            let mut worst: f64 = 0.0;
            for s in states.iter().skip(1) {
                exact = &prop * exact;
                worst = worst.max(trace_norm(&(&s.matrix - unvec_cols(&exact, d))));
            }
            Ok((steps, worst))
        })
        .collect();
    let mut rows: Vec<DilationRow> = Vec::with_capacity(dt_list.len());
    for (i, r) in errors.into_iter().enumerate() {
        let (steps, error) = r?;
        let (ratio, order) = match rows.last() {
            Some(prev) => {
                let ratio = prev.error / error;
                (Some(ratio), Some(ratio.ln() / (prev.dt / dt_list[i]).ln()))
            }
            None => (None, None),
        };
        rows.push(DilationRow {
            dt: dt_list[i],
            steps,
            error,
            ratio,
            order,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{heisenberg_generator, lindblad_rhs, sigma_minus, sigma_z, two_level_thermal};
    use crate::numerics::{ComplexVector, RandomStream};

    fn excited() -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![cr(0.0), cr(1.0)]))).unwrap()
    }

    fn cfg(dt: f64, steps: usize) -> CollisionConfig {
        CollisionConfig::new(dt, steps).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CollisionConfig::new(0.0, 1).is_err());
        let bad = CollisionConfig { dt: 0.1, bin_cutoff: 0, steps: 1 };
        assert!(bad.validate().is_err());
        let parsed: CollisionConfig = serde_json::from_str(r#"{"dt":0.1,"steps":3}"#).unwrap();
        assert_eq!(parsed.bin_cutoff, 2);
    }

    #[test]
    fn increments_and_ito_table() {
        let dt = 1e-3;
        let (da, dad) = bin_increments(&cfg(dt, 1)).unwrap();
        assert!(((&da.matrix * &dad.matrix)[(0, 0)].re - dt).abs() <= 4.0 * f64::EPSILON * dt);
        assert_eq!((&dad.matrix * &da.matrix)[(0, 0)], cr(0.0));
        assert_eq!((&da.matrix * &da.matrix)[(0, 0)], cr(0.0));
        assert_eq!((&dad.matrix * &dad.matrix)[(0, 0)], cr(0.0));
        for dt in [1e-2, 5e-3, 2.5e-3, 1e-3] {
            let t = ito_table(&cfg(dt, 1)).unwrap();
            assert!(t.max_deviation() <= 4.0 * f64::EPSILON * dt);
            assert_eq!(t.entries[1][0], 0.0);
            assert_eq!(t.entries[0][2], 0.0);
        }
    }

    #[test]
    fn trivial_unitary() {
        let m = LindbladModel::new(ComplexMatrix::zeros(2, 2), vec![ComplexMatrix::zeros(2, 2)], 1.0).unwrap();
        let u = step_unitary(&m, &cfg(0.1, 1)).unwrap();
        assert!((u.matrix - identity(6)).norm() < 1e-15);
    }

    #[test]
    fn unitarity_and_kraus_completeness() {
        let m = two_level_thermal(1.0, 1.0, 0.0, 1.0).unwrap();
        let u = step_unitary(&m, &cfg(1e-3, 1)).unwrap();
        assert!((dagger(&u.matrix) * &u.matrix - identity(6)).norm() <= 1e-12);
        let thermal = two_level_thermal(1.0, 1.0, 0.7, 1.0).unwrap();
        for set in step_kraus(&thermal, &cfg(1e-2, 1)).unwrap() {
            let mut sum = ComplexMatrix::zeros(2, 2);
            for k in &set {
                sum += dagger(k) * k;
            }
            assert!((sum - identity(2)).norm() <= 1e-12);
        }
    }

    #[test]
    fn vacuum_block_reproduces_drift() {
        let m = two_level_thermal(0.8, 1.3, 0.0, 1.0).unwrap();
        let l = &m.lindblad_ops[0];
        let drift = &m.h * c(0.0, -1.0) - dagger(l) * l * cr(0.5);
        let d_of = |dt: f64| -> ComplexMatrix {
            let k0 = kraus_operators(&step_unitary(&m, &cfg(dt, 1)).unwrap()).remove(0);
            (k0 - identity(2)) / cr(dt)
        };
        let (d1, d2) = (d_of(1e-3), d_of(5e-4));
        let richardson = d2 * cr(2.0) - d1;
        assert!((richardson - &drift).norm() < 1e-5);
        assert!((d_of(1e-3) - &drift).norm() < 5e-3);
    }

    #[test]
    fn decoupled_bin_is_unitary_conjugation() {
        let mut s = RandomStream::new(4, 0);
        let h = hermitize(&ComplexMatrix::from_fn(3, 3, |_, _| c(s.gaussian(), s.gaussian())));
        let m = LindbladModel::new(h.clone(), vec![], 1.0).unwrap();
        let rho0 = DensityMatrix::new(identity(3) * cr(0.2) + ComplexMatrix::from_fn(3, 3, |i, j| if i == j && i == 0 { cr(0.4) } else { cr(0.0) })).unwrap();
        let dt = 0.01;
        let states = evolve_reduced(&rho0, &m, &cfg(dt, 1)).unwrap();
        let u = expm(&(h * c(0.0, -dt))).unwrap();
        let want = &u * &rho0.matrix * dagger(&u);
        assert!((&states[1].matrix - want).norm() < 1e-12);
    }

    #[test]
    fn decay_and_trace() {
        let m = two_level_thermal(0.0, 1.0, 0.0, 1.0).unwrap();
        let dt = 1e-3;
        let states = evolve_reduced(&excited(), &m, &cfg(dt, 1000)).unwrap();
        let pe = states[1000].matrix[(1, 1)].re;
        assert!((pe - (-1.0f64).exp()).abs() < dt);
        // H = 0 decay multiplies p_e by cos²(√(γdt)) per collision
        assert!((pe - (dt.sqrt()).cos().powi(2000)).abs() < 1e-12);
        for s in &states {
            assert!((trace(&s.matrix) - cr(1.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn first_order_convergence() {
        let m = two_level_thermal(1.0, 1.0, 0.5, 1.0).unwrap();
        let rows = dilation_error(&m, &excited(), 1.0, &[1e-2, 5e-3, 2.5e-3], 2).unwrap();
        for r in &rows[1..] {
            let ratio = r.ratio.unwrap();
            assert!((ratio - 2.0).abs() <= 0.3, "{rows:?}");
        }
        let fine = dilation_error(&two_level_thermal(1.0, 1.0, 0.0, 1.0).unwrap(), &excited(), 1.0, &[1e-3], 2).unwrap();
        assert!(fine[0].error < 5e-3);
        assert!(dilation_error(&m, &excited(), 1.0, &[1e-3, 1e-2], 2).is_err());
    }

    #[test]
    fn hamiltonian_only_is_exact() {
        let h = sigma_z() * cr(0.7) + (sigma_minus() + dagger(&sigma_minus())) * cr(0.3);
        let m = LindbladModel::new(h, vec![], 1.0).unwrap();
        let rows = dilation_error(&m, &excited(), 1.0, &[1e-2, 5e-3], 2).unwrap();
        assert!(rows.iter().all(|r| r.error <= 1e-10), "{rows:?}");
    }

    #[test]
    fn bin_cutoff_study() {
        let two_level = two_level_thermal(1.0, 1.0, 0.5, 1.0).unwrap();
        let psi = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let rho_tl = DensityMatrix::pure(&psi).unwrap();
        let space = FockSpace { cutoff: 6 };
        let a = annihilation(space).matrix;
        let oscillator = LindbladModel::new(dagger(&a) * &a, vec![&a * cr(1.5)], 1.0).unwrap();
        let amps = crate::fock::coherent_vector(c(1.0, 0.5), space).amplitudes;
        let rho_ho = DensityMatrix::pure(&(&amps / cr(amps.norm()))).unwrap();
        let one_step = |m: &LindbladModel, rho: &DensityMatrix, dt: f64, bin_cutoff: usize| {
            evolve_reduced(rho, m, &CollisionConfig { dt, bin_cutoff, steps: 1 }).unwrap().remove(1).matrix
        };
        let mut prev = f64::INFINITY;
        for dt in [1e-2, 5e-3, 2.5e-3] {
            // single excitations cannot populate a second bin quantum
            let tl = (one_step(&two_level, &rho_tl, dt, 2) - one_step(&two_level, &rho_tl, dt, 3)).norm();
            assert!(tl < 1e-15);
            let diff = (one_step(&oscillator, &rho_ho, dt, 2) - one_step(&oscillator, &rho_ho, dt, 3)).norm();
            assert!(diff <= dt * dt, "dt={dt}: {diff}");
            assert!(diff < 0.3 * prev, "dt={dt}: {diff} vs {prev}");
            prev = diff;
        }
    }

    #[test]
    fn heisenberg_step_properties() {
        let m = two_level_thermal(1.0, 1.0, 0.4, 1.0).unwrap();
        let config = cfg(1e-3, 1);
        assert!((heisenberg_step(&identity(2), &m, &config).unwrap() - identity(2)).norm() < 1e-13);
        let x = sigma_z();
        let gen = heisenberg_generator(&x, &m).unwrap();
        let mut errs = Vec::new();
        for dt in [1e-3, 5e-4] {
            let t = heisenberg_step(&x, &m, &cfg(dt, 1)).unwrap();
            errs.push(((t - &x) / cr(dt) - &gen).norm());
        }
        assert!(errs[0] < 1e-2 && errs[1] < 0.6 * errs[0], "{errs:?}");

        let mut s = RandomStream::new(12, 0);
        let a = ComplexMatrix::from_fn(2, 2, |_, _| c(s.gaussian(), s.gaussian()));
        let r = &a * a.adjoint();
        let rho0 = DensityMatrix::new(hermitize(&(&r / trace(&r)))).unwrap();
        let y = hermitize(&ComplexMatrix::from_fn(2, 2, |_, _| c(s.gaussian(), s.gaussian())));
        let rho1 = &evolve_reduced(&rho0, &m, &config).unwrap()[1];
        let lhs = trace(&(&rho1.matrix * &y));
        let rhs = trace(&(&rho0.matrix * heisenberg_step(&y, &m, &config).unwrap()));
        assert!((lhs - rhs).norm() < 1e-12);
        let t = heisenberg_step(&y, &m, &config).unwrap();
        assert!((&t - dagger(&t)).norm() < 1e-13);
    }

    #[test]
    fn one_step_matches_lindblad_to_first_order() {
        let m = two_level_thermal(1.0, 1.0, 0.4, 1.0).unwrap();
        let rho0 = excited();
        let dt = 1e-4;
        let rho1 = &evolve_reduced(&rho0, &m, &cfg(dt, 1)).unwrap()[1];
        let euler = &rho0.matrix + lindblad_rhs(&rho0.matrix, &m).unwrap() * cr(dt);
        assert!((&rho1.matrix - euler).norm() < 10.0 * dt * dt);
    }
}
