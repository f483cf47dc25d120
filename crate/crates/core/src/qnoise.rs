//! Quantum Ornstein-Uhlenbeck cascade that reproduces the Ohmic noise kernel.
//!
//! For k_BT > ħΛ/π the symmetric kernel D₁ splits into positive exponentials,
//!
//! D₁(t) = (ħΛ²/2)cot(ħΛ/2k_BT) e^{-Λt} + Σ_{n≥1} 2k_BTΛ²ν_n/(ν_n²-Λ²) e^{-ν_n t},
//!
//! and every term is the stationary correlation λ_k/(2α_k) e^{-α_k t} of an
//! OU process η_k with rate α_k and strength λ_k.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::{interior_norm, quadratures, FockSpace};
use crate::kernels::BathSpec;
use crate::lindblad::{heisenberg_generator, LindbladModel};
use crate::numerics::{anticommutator, c, cr, identity, ComplexMatrix, RandomStream};
use crate::{Error, Result};

pub const DEFAULT_SERIES_TERMS: usize = 200;
pub const DEFAULT_SIMULATION_TERMS: usize = 8;
pub const MIN_GENERATOR_CUTOFF: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNoiseSpec {
    pub bath: BathSpec,
    /// Matsubara modes kept beyond the Λ-mode.
    pub n_terms: usize,
}

impl QNoiseSpec {
    pub fn new(bath: BathSpec, n_terms: usize) -> Result<Self> {
        let s = Self { bath, n_terms };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.bath.validate()?;
        if !self.bath.series_valid() {
            return Err(Error::Constraint(format!(
                "the OU cascade needs k_BT > ħΛ/π (k_BT = {}, ħΛ/π = {})",
                self.bath.kbt(),
                self.bath.hbar * self.bath.lambda / PI
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl OUParams {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Stationary variances λ_k/(2α_k).
    pub fn weights(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.lambda).map(|(a, l)| l / (2.0 * a)).collect()
    }
}

/// ν_n = 2πn k_BT/ħ.
pub fn matsubara(n: usize, bath: &BathSpec) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("Matsubara index starts at 1".into()));
    }
    Ok(2.0 * PI * n as f64 * bath.kbt() / bath.hbar)
}

pub fn ou_params(spec: &QNoiseSpec) -> Result<OUParams> {
    spec.validate()?;
    let b = &spec.bath;
    let (lam, kbt, hbar) = (b.lambda, b.kbt(), b.hbar);
    let mut alpha = Vec::with_capacity(spec.n_terms + 1);
    let mut lambda = Vec::with_capacity(spec.n_terms + 1);
    alpha.push(lam);
    lambda.push(hbar * lam.powi(3) / (hbar * lam / (2.0 * kbt)).tan());
    for n in 1..=spec.n_terms {
        let nu = matsubara(n, b)?;
        alpha.push(nu);
        lambda.push(4.0 * nu * nu * lam * lam * kbt / (nu * nu - lam * lam));
    }
    Ok(OUParams { alpha, lambda })
}

/// Coefficient and rate of the k-th D₁ term, k = 0 being the Λ-mode.
pub fn series_term(k: usize, bath: &BathSpec) -> Result<(f64, f64)> {
    let (lam, kbt, hbar) = (bath.lambda, bath.kbt(), bath.hbar);
    if k == 0 {
        let x = hbar * lam / (2.0 * kbt);
        return Ok((0.5 * hbar * lam * x.cos() / x.sin() * lam, lam));
    }
    let nu = matsubara(k, bath)?;
    Ok((2.0 * kbt * lam * lam * nu / (nu * nu - lam * lam), nu))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Bound on the omitted terms n > n_terms; infinite at t = 0.
    pub tail_bound: f64,
}

/// D₁(t) truncated after `spec.n_terms` Matsubara terms.
pub fn noise_kernel_series(t: f64, spec: &QNoiseSpec) -> Result<SeriesValue> {
    spec.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    let mut value = 0.0;
    for k in 0..=spec.n_terms {
        let (coef, rate) = series_term(k, &spec.bath)?;
        value += coef * (-rate * t).exp();
    }
    // coefficients decrease in n, and e^{-ν_n t} is geometric with ratio e^{-ν₁t}
    let nu1 = matsubara(1, &spec.bath)?;
    let tail_bound = if t == 0.0 {
        f64::INFINITY
    } else {
        let (coef, rate) = series_term(spec.n_terms + 1, &spec.bath)?;
        coef * (-rate * t).exp() / -(-nu1 * t).exp_m1()
    };
    Ok(SeriesValue { value, tail_bound })
}

/// Σ_k λ_k/(2α_k) e^{-α_k τ}.
pub fn ou_correlation_sum(tau: f64, params: &OUParams) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("lag must be non-negative, got {tau}")));
    }
    Ok(params
        .alpha
        .iter()
        .zip(&params.lambda)
        .map(|(a, l)| l / (2.0 * a) * (-a * tau).exp())
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeCorrelation {
    pub dt: f64,
    /// Ê[η(t)η(t+kΔt)] for k = 0..=max_lag, η = Σ_k η_k.
    pub correlation: Vec<f64>,
    pub n_traj: usize,
    pub samples_per_lag: Vec<usize>,
}

impl CascadeCorrelation {
    pub fn lag_time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Classical surrogate of the cascade: independent OU processes
/// dη_k = -α_kη_k dt + √λ_k dW_k started stationary and stepped exactly.
/// Trajectory j draws from `RandomStream::new(seed, j)`.
pub fn simulate_cascade(
    spec: &QNoiseSpec,
    dt: f64,
    steps: usize,
    n_traj: usize,
    seed: u64,
    max_lag: usize,
) -> Result<CascadeCorrelation> {
    let params = ou_params(spec)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let decay: Vec<f64> = params.alpha.iter().map(|a| (-a * dt).exp()).collect();
    let sd: Vec<f64> = params.weights().iter().map(|w| w.sqrt()).collect();
    let innov: Vec<f64> = params
        .weights()
        .iter()
        .zip(&params.alpha)
        .map(|(w, a)| (w * -(-2.0 * a * dt).exp_m1()).sqrt())
        .collect();
    let lags = max_lag + 1;
    let per_traj: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|j| {
            let mut stream = RandomStream::new(seed, j as u64);
            let mut eta: Vec<f64> = sd.iter().map(|s| s * stream.gaussian()).collect();
            let mut ring = vec![0.0; lags];
            let mut sums = vec![0.0; lags];
            for step in 0..=steps {
                if step > 0 {
                    for k in 0..eta.len() {
                        eta[k] = decay[k] * eta[k] + innov[k] * stream.gaussian();
                    }
                }
                let y: f64 = eta.iter().sum();
                ring[step % lags] = y;
                for (lag, s) in sums.iter_mut().enumerate().take(step.min(max_lag) + 1) {
                    *s += y * ring[(step + lags - lag) % lags];
                }
            }
            sums
        })
        .collect();
    let mut sums = vec![0.0; lags];
    for s in &per_traj {
        for (acc, v) in sums.iter_mut().zip(s) {
            *acc += v;
        }
    }
    let samples_per_lag: Vec<usize> = (0..lags).map(|l| n_traj * (steps + 1).saturating_sub(l)).collect();
    let correlation = sums
        .iter()
        .zip(&samples_per_lag)
        .map(|(s, &n)| if n == 0 { f64::NAN } else { s / n as f64 })
        .collect();
    Ok(CascadeCorrelation {
        dt,
        correlation: if n_traj == 0 { Vec::new() } else { correlation },
        n_traj,
        samples_per_lag: if n_traj == 0 { Vec::new() } else { samples_per_lag },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorResiduals {
    pub mode: usize,
    pub cutoff: usize,
    /// ‖𝓛(η) + α_kη‖ on the lowest cutoff/2 levels
    pub eta_drift: f64,
    /// ‖𝓛(ξ) - η‖ on the same block
    pub xi_drift: f64,
    /// ‖𝓛(I)‖
    pub unitality: f64,
    /// ‖[ξ, η] - iħ‖ on the same block
    pub ccr: f64,
}

/// H_k = η²/2 + (α_k/4){ξ, η},  L_k = (√λ_k/ħ)ξ + i(α_k/(2√λ_k))η,
/// with ξ = √(ħ/2)q and η = √(ħ/2)p on a truncated Fock space.
pub fn ou_mode_model(spec: &QNoiseSpec, k: usize, space: FockSpace) -> Result<(LindbladModel, [ComplexMatrix; 2])> {
    let params = ou_params(&QNoiseSpec {
        bath: spec.bath,
        n_terms: spec.n_terms.max(k),
    })?;
    let (alpha, lambda) = (params.alpha[k], params.lambda[k]);
    let hbar = spec.bath.hbar;
    let (q, p) = quadratures(space);
    let s = (hbar / 2.0).sqrt();
    let xi = q.matrix * cr(s);
    let eta = p.matrix * cr(s);
    let h = &eta * &eta * cr(0.5) + anticommutator(&xi, &eta) * cr(alpha / 4.0);
    let l = &xi * cr(lambda.sqrt() / hbar) + &eta * c(0.0, alpha / (2.0 * lambda.sqrt()));
    Ok((LindbladModel::new(h, vec![l], hbar)?, [xi, eta]))
}

pub fn verify_ou_generator(spec: &QNoiseSpec, k: usize, fock_cutoff: usize) -> Result<GeneratorResiduals> {
    if fock_cutoff < MIN_GENERATOR_CUTOFF {
        return Err(Error::InvalidInput(format!(
            "Fock cutoff {fock_cutoff} is below {MIN_GENERATOR_CUTOFF}; truncation would dominate the residuals"
        )));
    }
    let space = FockSpace::new(fock_cutoff)?;
    let (model, [xi, eta]) = ou_mode_model(spec, k, space)?;
    let alpha = ou_params(&QNoiseSpec {
        bath: spec.bath,
        n_terms: spec.n_terms.max(k),
    })?
    .alpha[k];
    let levels = fock_cutoff / 2;
    let scale = |m: &ComplexMatrix| interior_norm(m, levels).max(f64::MIN_POSITIVE);
    let l_eta = heisenberg_generator(&eta, &model)?;
    let l_xi = heisenberg_generator(&xi, &model)?;
    let id = identity(space.dim());
    let ccr = &xi * &eta - &eta * &xi - &id * c(0.0, spec.bath.hbar);
    Ok(GeneratorResiduals {
        mode: k,
        cutoff: fock_cutoff,
        eta_drift: interior_norm(&(l_eta + &eta * cr(alpha)), levels) / scale(&(&eta * cr(alpha))),
        xi_drift: interior_norm(&(l_xi - &eta), levels) / scale(&eta),
        unitality: heisenberg_generator(&id, &model)?.norm(),
        ccr: interior_norm(&ccr, levels),
    })
}
