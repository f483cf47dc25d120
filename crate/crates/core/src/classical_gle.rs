//! Kac-Zwanzig particle-plus-bath dynamics and the generalized Langevin
//! equation it reduces to.
//!
//! The finite bath Hamiltonian is
//!
//! H = p²/2m + U(x) + Σ_k [p_k²/2 + ½ω_k²(x_k - c_k f(x)/ω_k²)²],
//!
//! and eliminating the bath gives
//!
//! ṗ = -U'(x) - g(x)∫₀ᵗ κ(t-s) g(x(s)) ẋ(s) ds + g(x) ξ(t),  g = f',
//!
//! with κ(t) = Σ c_k²/ω_k² cos(ω_k t) and ξ built from the bath initial data.
//! A Markovian version replaces the memory by auxiliary variables z driven by
//! a state-space realization of the kernel.

use serde::{Deserialize, Serialize};

use crate::kernels::{spectral_density, BathSpec};
use crate::numerics::{ensure_square, RandomStream, RealMatrix};
use crate::realization::StateSpaceModel;
use crate::{Error, Result};

/// Polynomial Σ a_i xⁱ with ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * x + i as f64 * a)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&a| a != 0.0).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KZBath {
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl KZBath {
    pub fn new(omegas: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        let bath = Self { omegas, couplings };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omegas.len() != self.couplings.len() {
            return Err(Error::Dimension(format!(
                "{} bath frequencies but {} couplings",
                self.omegas.len(),
                self.couplings.len()
            )));
        }
        if let Some(w) = self.omegas.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(format!("bath frequency must be positive, got {w}")));
        }
        if self.couplings.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("bath couplings must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Comb ω_k = kΔω, k = 1..n, with c_k²/ω_k² = 2J(ω_k)Δω/ω_k so that the
    /// finite kernel approximates the continuum Λe^{-Λ|t|} for |t| ≪ 2π/Δω.
    pub fn ohmic_comb(n: usize, d_omega: f64, spec: &BathSpec) -> Result<Self> {
        if !(d_omega > 0.0) {
            return Err(Error::InvalidInput(format!("comb spacing must be positive, got {d_omega}")));
        }
        let mut omegas = Vec::with_capacity(n);
        let mut couplings = Vec::with_capacity(n);
        for k in 1..=n {
            let w = k as f64 * d_omega;
            omegas.push(w);
            couplings.push((2.0 * spectral_density(w, spec)? * w * d_omega).sqrt());
        }
        Self::new(omegas, couplings)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GLEConfig {
    pub mass: f64,
    pub potential: Poly,
    pub coupling: Poly,
    pub temperature: f64,
    pub k_b: f64,
}

impl GLEConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::InvalidInput(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.temperature >= 0.0) || !(self.k_b > 0.0) {
            return Err(Error::InvalidInput("temperature must be >= 0 and k_b > 0".into()));
        }
        if self.potential.0.iter().chain(&self.coupling.0).any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("polynomial coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Non-fatal remarks, e.g. a potential that is not confining.
    pub fn warnings(&self) -> Vec<String> {
        let d = self.potential.degree();
        let lead = self.potential.0.get(d).copied().unwrap_or(0.0);
        if d % 2 == 1 || lead <= 0.0 {
            vec![format!("potential of degree {d} with leading coefficient {lead} is not confining")]
        } else {
            Vec::new()
        }
    }

    pub fn kbt(&self) -> f64 {
        self.k_b * self.temperature
    }
}

/// Bath initial conditions x_k(0), p_k(0).
#[derive(Clone, Debug, PartialEq)]
pub struct KZInitials {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

/// Uniform-grid trajectory. `aux` holds `aux_dim` values per record, row-major
/// (bath coordinates for the full model, z for the embedded GLE).
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub aux_dim: usize,
    pub aux: Vec<f64>,
    /// Conserved or Lyapunov energy per record, empty when not defined.
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn aux_row(&self, i: usize) -> &[f64] {
        &self.aux[i * self.aux_dim..(i + 1) * self.aux_dim]
    }

    /// max |E(t) - E(0)| / |E(0)|.
    pub fn energy_drift(&self) -> Option<f64> {
        let e0 = *self.energy.first()?;
        Some(
            self.energy
                .iter()
                .map(|e| (e - e0).abs())
                .fold(0.0, f64::max)
                / e0.abs().max(f64::MIN_POSITIVE),
        )
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("time step must be positive, got {dt}")))
    }
}

fn check_finite(step: usize, vals: &[f64], what: &str) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp {
            step,
            what: what.to_string(),
        })
    }
}

/// κ(t) = Σ_k c_k²/ω_k² cos(ω_k t).
pub fn kz_kernel(bath: &KZBath, t: f64) -> f64 {
    bath.omegas
        .iter()
        .zip(&bath.couplings)
        .map(|(w, c)| c * c / (w * w) * (w * t).cos())
        .sum()
}

/// Gibbs sample of the bath conditional on the particle at x0.
pub fn kz_sample_initials(
    bath: &KZBath,
    config: &GLEConfig,
    x0: f64,
    stream: &mut RandomStream,
) -> KZInitials {
    let kbt = config.kbt();
    let f0 = config.coupling.eval(x0);
    let mut x = Vec::with_capacity(bath.len());
    let mut p = Vec::with_capacity(bath.len());
    for (w, c) in bath.omegas.iter().zip(&bath.couplings) {
        let shifted = (kbt.sqrt() / w) * stream.gaussian();
        x.push(shifted + c / (w * w) * f0);
        p.push(kbt.sqrt() * stream.gaussian());
    }
    KZInitials { x, p }
}

/// ξ(t) = Σ_k c_k[(x_k(0) - c_k f(x0)/ω_k²) cos ω_k t + p_k(0)/ω_k sin ω_k t].
pub fn kz_noise(bath: &KZBath, initials: &KZInitials, x0: f64, config: &GLEConfig, t: f64) -> f64 {
    let f0 = config.coupling.eval(x0);
    let mut xi = 0.0;
    for k in 0..bath.len() {
        let (w, c) = (bath.omegas[k], bath.couplings[k]);
        xi += c * ((initials.x[k] - c * f0 / (w * w)) * (w * t).cos() + initials.p[k] / w * (w * t).sin());
    }
    xi
}

fn kz_energy(config: &GLEConfig, bath: &KZBath, x: f64, p: f64, xs: &[f64], ps: &[f64]) -> f64 {
    let f = config.coupling.eval(x);
    let mut e = p * p / (2.0 * config.mass) + config.potential.eval(x);
    for k in 0..bath.len() {
        let w = bath.omegas[k];
        let d = xs[k] - bath.couplings[k] * f / (w * w);
        e += 0.5 * ps[k] * ps[k] + 0.5 * w * w * d * d;
    }
    e
}

/// Forces (-∂H/∂x, -∂H/∂x_k).
fn kz_forces(config: &GLEConfig, bath: &KZBath, x: f64, xs: &[f64], fk: &mut [f64]) -> f64 {
    let f = config.coupling.eval(x);
    let g = config.coupling.deriv(x);
    let mut sum = 0.0;
    for k in 0..bath.len() {
        let (w, c) = (bath.omegas[k], bath.couplings[k]);
        sum += c * (xs[k] - c * f / (w * w));
        fk[k] = -w * w * xs[k] + c * f;
    }
    -config.potential.deriv(x) + g * sum
}

/// Velocity-Verlet integration of the full Hamiltonian. `aux` records the
/// bath coordinates x_k, `energy` the total energy.
pub fn kz_integrate_full(
    config: &GLEConfig,
    bath: &KZBath,
    initials: &KZInitials,
    x0: f64,
    p0: f64,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    config.validate()?;
    bath.validate()?;
    check_dt(dt)?;
    let n = bath.len();
    if initials.x.len() != n || initials.p.len() != n {
        return Err(Error::Dimension("initials do not match bath size".into()));
    }
    let m = config.mass;
    let (mut x, mut p) = (x0, p0);
    let mut xs = initials.x.clone();
    let mut ps = initials.p.clone();
    let mut fk = vec![0.0; n];
    let mut fx = kz_forces(config, bath, x, &xs, &mut fk);

    let mut traj = Trajectory {
        dt,
        x: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
        aux_dim: n,
        aux: Vec::with_capacity((steps + 1) * n),
        energy: Vec::with_capacity(steps + 1),
    };
    let record = |traj: &mut Trajectory, x: f64, p: f64, xs: &[f64], ps: &[f64]| {
        traj.x.push(x);
        traj.v.push(p / m);
        traj.aux.extend_from_slice(xs);
        traj.energy.push(kz_energy(config, bath, x, p, xs, ps));
    };
    record(&mut traj, x, p, &xs, &ps);
    for step in 1..=steps {
        p += 0.5 * dt * fx;
        for k in 0..n {
            ps[k] += 0.5 * dt * fk[k];
        }
        x += dt * p / m;
        for k in 0..n {
            xs[k] += dt * ps[k];
        }
        fx = kz_forces(config, bath, x, &xs, &mut fk);
        p += 0.5 * dt * fx;
        for k in 0..n {
            ps[k] += 0.5 * dt * fk[k];
        }
        check_finite(step, &[x, p, fx], "particle state")?;
        check_finite(step, &xs, "bath coordinates")?;
        record(&mut traj, x, p, &xs, &ps);
    }
    Ok(traj)
}

/// Heun integration of the GLE with a trapezoidal memory integral over the
/// full history; cost grows as steps².
pub fn gle_integrate_direct(
    config: &GLEConfig,
    kernel_fn: &dyn Fn(f64) -> f64,
    noise_fn: &dyn Fn(f64) -> f64,
    x0: f64,
    p0: f64,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    config.validate()?;
    check_dt(dt)?;
    let m = config.mass;
    let kernel: Vec<f64> = (0..=steps).map(|j| kernel_fn(j as f64 * dt)).collect();
    // h_j = g(x_j) ẋ_j
    let mut h: Vec<f64> = Vec::with_capacity(steps + 1);

    // ∫₀^{t_n} κ(t_n - s) h(s) ds over h[0..=n], with h[n] replaced by `last`
    let memory = |h: &[f64], n: usize, last: f64| -> f64 {
        if n == 0 {
            return 0.0;
        }
        let mut s = 0.5 * kernel[n] * h[0] + 0.5 * kernel[0] * last;
        for j in 1..n {
            s += kernel[n - j] * h[j];
        }
        s * dt
    };
    let force = |x: f64, mem: f64, t: f64| -> f64 {
        let g = config.coupling.deriv(x);
        -config.potential.deriv(x) - g * mem + g * noise_fn(t)
    };

    let mut traj = Trajectory {
        dt,
        x: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
        aux_dim: 0,
        aux: Vec::new(),
        energy: Vec::new(),
    };
    let (mut x, mut p) = (x0, p0);
    traj.x.push(x);
    traj.v.push(p / m);
    h.push(config.coupling.deriv(x) * p / m);
    for n in 0..steps {
        let t = n as f64 * dt;
        let f_n = force(x, memory(&h, n, h[n]), t);
        let v_n = p / m;
        let x_pred = x + dt * v_n;
        let p_pred = p + dt * f_n;
        let h_pred = config.coupling.deriv(x_pred) * p_pred / m;
        let f_pred = force(x_pred, memory(&h, n + 1, h_pred), t + dt);
        x += 0.5 * dt * (v_n + p_pred / m);
        p += 0.5 * dt * (f_n + f_pred);
        check_finite(n + 1, &[x, p], "GLE state")?;
        traj.x.push(x);
        traj.v.push(p / m);
        h.push(config.coupling.deriv(x) * p / m);
    }
    Ok(traj)
}

/// Euler-Maruyama integration of the Markovian embedding
///
/// dx = v dt,  m dv = (-U'(x) + f'(x)·Cz) dt,
/// dz = (Az - MCᵀf'(x)v) dt + √(k_BT) B dW,  z(0) ~ N(0, k_BT·M),
///
/// where the model realizes κ. `aux` records z and `energy` the Lyapunov
/// function ½mv² + U(x) + ½zᵀM⁻¹z.
pub fn gle_integrate_embedded(
    config: &GLEConfig,
    model: &StateSpaceModel,
    x0: f64,
    p0: f64,
    dt: f64,
    steps: usize,
    stream: &mut RandomStream,
) -> Result<Trajectory> {
    embedded(config, model, x0, p0, dt, steps, stream, true)
}

/// As [`gle_integrate_embedded`] with B = 0 and z(0) = 0.
pub fn gle_integrate_embedded_noiseless(
    config: &GLEConfig,
    model: &StateSpaceModel,
    x0: f64,
    p0: f64,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    let mut unused = RandomStream::new(0, 0);
    embedded(config, model, x0, p0, dt, steps, &mut unused, false)
}

#[allow(clippy::too_many_arguments)]
fn embedded(
    config: &GLEConfig,
    model: &StateSpaceModel,
    x0: f64,
    p0: f64,
    dt: f64,
    steps: usize,
    stream: &mut RandomStream,
    noisy: bool,
) -> Result<Trajectory> {
    config.validate()?;
    check_dt(dt)?;
    let n = ensure_square(&model.a, "drift matrix")?;
    if model.c.nrows() != 1 {
        return Err(Error::Dimension("embedded GLE needs a scalar-output model".into()));
    }
    let r = model.b.ncols();
    let kbt = config.kbt();
    let m = config.mass;
    let m_inv = model
        .m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("stationary covariance is singular".into()))?;
    // MCᵀ as a plain vector
    let mct: Vec<f64> = (0..n).map(|i| (0..n).map(|j| model.m[(i, j)] * model.c[(0, j)]).sum()).collect();
    let a: Vec<f64> = model.a.transpose().iter().copied().collect(); // row-major A
    let b: Vec<f64> = model.b.transpose().iter().copied().collect(); // row-major B
    let c: Vec<f64> = model.c.iter().copied().collect();

    let mut z = vec![0.0; n];
    if noisy {
        let factor = crate::numerics::psd_factor(&(&model.m * kbt), 1e-12, "initial covariance")?;
        let g: Vec<f64> = (0..n).map(|_| stream.gaussian()).collect();
        for i in 0..n {
            z[i] = (0..n).map(|j| factor[(i, j)] * g[j]).sum();
        }
    }
    let energy = |x: f64, v: f64, z: &[f64]| -> f64 {
        let zv = RealMatrix::from_column_slice(n, 1, z);
        0.5 * m * v * v + config.potential.eval(x) + 0.5 * (zv.transpose() * &m_inv * &zv)[(0, 0)]
    };

    let mut traj = Trajectory {
        dt,
        x: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
        aux_dim: n,
        aux: Vec::with_capacity((steps + 1) * n),
        energy: Vec::with_capacity(steps + 1),
    };
    let (mut x, mut v) = (x0, p0 / m);
    traj.x.push(x);
    traj.v.push(v);
    traj.aux.extend_from_slice(&z);
    traj.energy.push(energy(x, v, &z));
    let sdt = (kbt * dt).sqrt();
    let mut dz = vec![0.0; n];
    let mut dw = vec![0.0; r];
    for step in 1..=steps {
        let g = config.coupling.deriv(x);
        let cz: f64 = c.iter().zip(&z).map(|(ci, zi)| ci * zi).sum();
        let accel = (-config.potential.deriv(x) + g * cz) / m;
        if noisy {
            for w in dw.iter_mut() {
                *w = stream.gaussian();
            }
        }
        for i in 0..n {
            let mut d = -mct[i] * g * v;
            for j in 0..n {
                d += a[i * n + j] * z[j];
            }
            let mut noise = 0.0;
            if noisy {
                for j in 0..r {
                    noise += b[i * r + j] * dw[j];
                }
            }
            dz[i] = d * dt + sdt * noise;
        }
        x += dt * v;
        v += dt * accel;
        for i in 0..n {
            z[i] += dz[i];
        }
        check_finite(step, &[x, v], "embedded GLE particle")?;
        check_finite(step, &z, "embedded GLE auxiliary state")?;
        traj.x.push(x);
        traj.v.push(v);
        traj.aux.extend_from_slice(&z);
        traj.energy.push(energy(x, v, &z));
    }
    Ok(traj)
}

/// Number of lags reported in the velocity autocorrelation.
pub const VACF_LAGS: usize = 100;
const BATCHES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumStats {
    pub samples: usize,
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_v: f64,
    pub var_v: f64,
    /// Batch-means standard errors of the two variances.
    pub var_x_err: f64,
    pub var_v_err: f64,
    /// ⟨v(t)v(t + k·dt)⟩ - ⟨v⟩², k = 0..VACF_LAGS.
    pub vacf: Vec<f64>,
}

fn batch_error(values: &[f64]) -> f64 {
    let b = BATCHES.min(values.len());
    if b < 2 {
        return f64::NAN;
    }
    let size = values.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| values[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mu) * (m - mu)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Time-averaged moments after discarding the first `burn_in_fraction` of
/// the records.
pub fn equilibrium_stats(traj: &Trajectory, burn_in_fraction: f64) -> Result<EquilibriumStats> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(Error::InvalidInput(format!(
            "burn-in fraction must be in [0, 1), got {burn_in_fraction}"
        )));
    }
    let start = (traj.len() as f64 * burn_in_fraction).ceil() as usize;
    if start >= traj.len() {
        return Err(Error::InvalidInput("no samples after burn-in".into()));
    }
    let xs = &traj.x[start..];
    let vs = &traj.v[start..];
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_v = vs.iter().sum::<f64>() / n;
    let dx2: Vec<f64> = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).collect();
    let dv2: Vec<f64> = vs.iter().map(|v| (v - mean_v) * (v - mean_v)).collect();
    let var_x = dx2.iter().sum::<f64>() / n;
    let var_v = dv2.iter().sum::<f64>() / n;
    let lags = VACF_LAGS.min(vs.len() - 1);
    let vacf = (0..=lags)
        .map(|k| {
            let m = vs.len() - k;
            (0..m).map(|i| (vs[i] - mean_v) * (vs[i + k] - mean_v)).sum::<f64>() / m as f64
        })
        .collect();
    Ok(EquilibriumStats {
        samples: xs.len(),
        mean_x,
        var_x,
        mean_v,
        var_v,
        var_x_err: batch_error(&dx2),
        var_v_err: batch_error(&dv2),
        vacf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::{realize, sample_stationary_paths, KernelSpec, Mode};
    use proptest::prelude::*;
    use rayon::prelude::*;
    use std::f64::consts::PI;

    fn harmonic(k: f64) -> Poly {
        Poly(vec![0.0, 0.0, 0.5 * k])
    }

    fn config(potential: Poly, coupling: Poly, t: f64) -> GLEConfig {
        GLEConfig {
            mass: 1.0,
            potential,
            coupling,
            temperature: t,
            k_b: 1.0,
        }
    }

    fn comb32() -> KZBath {
        KZBath::ohmic_comb(32, 0.25, &BathSpec::natural(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn poly_eval_and_derivative() {
        let p = Poly(vec![1.0, -2.0, 0.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(p.deriv(2.0), -2.0 + 36.0);
        assert_eq!(p.degree(), 3);
        assert_eq!(Poly(vec![]).eval(3.0), 0.0);
        assert_eq!(Poly(vec![5.0]).deriv(3.0), 0.0);
    }

    #[test]
    fn confinement_warning() {
        assert!(config(harmonic(1.0), Poly(vec![0.0, 1.0]), 1.0).warnings().is_empty());
        assert_eq!(config(Poly(vec![0.0, 0.0, -1.0]), Poly(vec![0.0, 1.0]), 1.0).warnings().len(), 1);
    }

    #[test]
    fn bath_validation() {
        assert!(KZBath::new(vec![1.0], vec![]).is_err());
        assert!(KZBath::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn kernel_examples() {
        let bath = KZBath::new(vec![2.0], vec![1.0]).unwrap();
        assert!((kz_kernel(&bath, PI / 2.0) + 0.25).abs() < 1e-15);
        let b = comb32();
        let k0: f64 = b.omegas.iter().zip(&b.couplings).map(|(w, c)| c * c / (w * w)).sum();
        assert!((kz_kernel(&b, 0.0) - k0).abs() < 1e-15);
        assert_eq!(kz_kernel(&b, 1.3), kz_kernel(&b, -1.3));
    }

    #[test]
    fn comb_approximates_continuum_kernel() {
        let b = KZBath::ohmic_comb(4000, 0.005, &BathSpec::natural(1.0, 1.0).unwrap()).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            assert!((kz_kernel(&b, t) - (-t).exp()).abs() < 1e-2, "t={t}");
        }
    }

    #[test]
    fn zero_temperature_initials() {
        let b = comb32();
        let cfg = config(harmonic(1.0), Poly(vec![0.0, 1.0, 0.3]), 1e-12);
        let mut s = RandomStream::new(1, 0);
        let init = kz_sample_initials(&b, &cfg, 0.7, &mut s);
        let f0 = cfg.coupling.eval(0.7);
        for k in 0..b.len() {
            let w = b.omegas[k];
            assert!((init.x[k] - b.couplings[k] / (w * w) * f0).abs() < 1e-5);
            assert!(init.p[k].abs() < 1e-5);
        }
        for &t in &[0.0, 1.0, 3.0] {
            assert!(kz_noise(&b, &init, 0.7, &cfg, t).abs() < 1e-4);
        }
    }

    #[test]
    fn gibbs_initial_moments() {
        let b = KZBath::new(vec![0.5, 2.0], vec![1.0, 1.0]).unwrap();
        let cfg = config(harmonic(1.0), Poly(vec![0.0, 1.0]), 1.5);
        let mut s = RandomStream::new(9, 0);
        let n = 100_000;
        let (mut sum, mut sum2) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let init = kz_sample_initials(&b, &cfg, 0.4, &mut s);
            for k in 0..2 {
                let shifted = init.x[k] - b.couplings[k] / b.omegas[k].powi(2) * 0.4;
                sum[k] += shifted;
                sum2[k] += shifted * shifted;
            }
        }
        for k in 0..2 {
            let var0 = 1.5 / b.omegas[k].powi(2);
            let mean = sum[k] / n as f64;
            let var = sum2[k] / n as f64 - mean * mean;
            assert!((var / var0 - 1.0).abs() < 0.03);
            assert!(mean.abs() < 4.0 * (var0 / n as f64).sqrt());
        }
    }

    #[test]
    fn noise_mean_and_fdt() {
        let b = comb32();
        let cfg = config(harmonic(1.0), Poly(vec![0.0, 1.0, 0.2]), 1.0);
        let n = 10_000;
        let times = [0.0, 0.1, 0.2, 0.3];
        let mut s = RandomStream::new(21, 0);
        let mut mean = [0.0; 4];
        let mut prod = [[0.0; 4]; 4];
        for _ in 0..n {
            let init = kz_sample_initials(&b, &cfg, 0.3, &mut s);
            let xi: Vec<f64> = times.iter().map(|&t| kz_noise(&b, &init, 0.3, &cfg, t)).collect();
            for i in 0..4 {
                mean[i] += xi[i] / n as f64;
                for j in 0..4 {
                    prod[i][j] += xi[i] * xi[j] / n as f64;
                }
            }
        }
        let k0 = kz_kernel(&b, 0.0);
        for i in 0..4 {
            assert!(mean[i].abs() <= 4.0 * (k0 / n as f64).sqrt());
            for j in 0..4 {
                let want = kz_kernel(&b, times[i] - times[j]);
                assert!((prod[i][j] / want - 1.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn free_particle_energy_conserved() {
        let b = KZBath::new(vec![1.0, 3.0], vec![0.0, 0.0]).unwrap();
        let cfg = config(harmonic(2.0), Poly(vec![0.0, 1.0]), 1.0);
        let init = KZInitials {
            x: vec![0.5, -0.2],
            p: vec![0.1, 0.3],
        };
        let traj = kz_integrate_full(&cfg, &b, &init, 1.0, 0.0, 1e-3, 10_000).unwrap();
        let w = 2f64.sqrt();
        let e0 = 0.5 * 2.0;
        for i in (0..traj.len()).step_by(500) {
            let t = traj.time(i);
            let e = 0.5 * traj.v[i].powi(2) + traj.x[i].powi(2);
            assert!((e - e0).abs() / e0 < 1e-6);
            assert!((traj.x[i] - (w * t).cos()).abs() < 1e-5);
            // decoupled bath oscillators
            for k in 0..2 {
                let wk = b.omegas[k];
                let want = init.x[k] * (wk * t).cos() + init.p[k] / wk * (wk * t).sin();
                assert!((traj.aux_row(i)[k] - want).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn coupled_bath_energy_drift_small() {
        let b = comb32();
        let cfg = config(Poly(vec![0.0, 0.0, 0.5, 0.0, 0.1]), Poly(vec![0.0, 1.0, 0.2]), 1.0);
        let mut s = RandomStream::new(3, 0);
        let init = kz_sample_initials(&b, &cfg, 0.5, &mut s);
        let traj = kz_integrate_full(&cfg, &b, &init, 0.5, 0.2, 1e-3, 10_000).unwrap();
        assert!(traj.energy_drift().unwrap() <= 1e-4);
    }

    #[test]
    fn direct_gle_without_memory_is_harmonic() {
        let cfg = config(harmonic(1.0), Poly(vec![0.0, 1.0]), 1.0);
        let traj = gle_integrate_direct(&cfg, &|_| 0.0, &|_| 0.0, 1.0, 0.0, 1e-3, 10_000).unwrap();
        for i in (0..traj.len()).step_by(100) {
            assert!((traj.x[i] - traj.time(i).cos()).abs() < 1e-5);
        }
    }

    #[test]
    fn direct_gle_matches_full_hamiltonian() {
        let b = comb32();
        let cfg = config(Poly(vec![0.0, 0.0, 0.5, 0.0, 0.1]), Poly(vec![0.0, 1.0, 0.2]), 1.0);
        let (x0, p0) = (0.5, 0.2);
        let mut s = RandomStream::new(7, 0);
        let init = kz_sample_initials(&b, &cfg, x0, &mut s);
        let dt = 1e-3;
        let steps = 3000;
        let full = kz_integrate_full(&cfg, &b, &init, x0, p0, dt, steps).unwrap();
        let gle = gle_integrate_direct(
            &cfg,
            &|t| kz_kernel(&b, t),
            &|t| kz_noise(&b, &init, x0, &cfg, t),
            x0,
            p0,
            dt,
            steps,
        )
        .unwrap();
        let err = full.x.iter().zip(&gle.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "max |Δx| = {err}");
    }

    // Independent Heun/trapezoid integrator for f(x) = x.
    fn linear_gle(k: f64, kernel: &dyn Fn(f64) -> f64, x0: f64, v0: f64, dt: f64, steps: usize) -> Vec<f64> {
        let kv: Vec<f64> = (0..=steps).map(|j| kernel(j as f64 * dt)).collect();
        let mut xs = vec![x0];
        let mut vs = vec![v0];
        let damping = |vs: &[f64], last: f64| -> f64 {
            let n = vs.len();
            if n == 0 {
                return 0.0;
            }
            let mut total = 0.5 * kv[n] * vs[0] + 0.5 * kv[0] * last;
            for j in 1..n {
                total += kv[n - j] * vs[j];
            }
            total * dt
        };
        for n in 0..steps {
            let (x, v) = (xs[n], vs[n]);
            let mem_n = if n == 0 { 0.0 } else { damping(&vs[..n], v) };
            let a_n = -k * x - mem_n;
            let (xp, vp) = (x + dt * v, v + dt * a_n);
            let a_p = -k * xp - damping(&vs[..=n], vp);
            xs.push(x + 0.5 * dt * (v + vp));
            vs.push(v + 0.5 * dt * (a_n + a_p));
        }
        xs
    }

    #[test]
    fn linear_coupling_specialization() {
        let cfg = config(harmonic(1.5), Poly(vec![0.0, 1.0]), 1.0);
        let kernel = |t: f64| 0.8 * (-1.3 * t).exp();
        let traj = gle_integrate_direct(&cfg, &kernel, &|_| 0.0, 1.0, 0.3, 1e-2, 1500).unwrap();
        let oracle = linear_gle(1.5, &kernel, 1.0, 0.3, 1e-2, 1500);
        let err = traj.x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn noiseless_embedding_dissipates() {
        let cfg = config(harmonic(1.0), Poly(vec![0.0, 1.0]), 1.0);
        let model = realize(&KernelSpec::new(vec![Mode::Exp { c: 1.0, gamma: 1.0 }]).unwrap()).unwrap();
        let traj = gle_integrate_embedded_noiseless(&cfg, &model, 1.0, 0.0, 1e-3, 20_000).unwrap();
        let e0 = traj.energy[0];
        for w in traj.energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-5 * e0);
        }
        assert!(*traj.energy.last().unwrap() < 0.5 * e0);
    }

    #[test]
    fn embedded_matches_direct_memory_term() {
        // B = 0, z(0) = 0 embedding reproduces the noiseless GLE with κ = Ce^{At}MCᵀ
        let cfg = config(harmonic(1.0), Poly(vec![0.0, 1.0, 0.3]), 1.0);
        let spec = KernelSpec::new(vec![Mode::Exp { c: 0.7, gamma: 2.0 }, Mode::Osc { c: 0.4, gamma: 0.5, omega0: 1.5 }]).unwrap();
        let model = realize(&spec).unwrap();
        let dt = 1e-4;
        let steps = 20_000;
        let emb = gle_integrate_embedded_noiseless(&cfg, &model, 0.8, 0.0, dt, steps).unwrap();
        let direct = gle_integrate_direct(&cfg, &|t| spec.covariance(t), &|_| 0.0, 0.8, 0.0, dt, steps).unwrap();
        let err = emb.x.iter().zip(&direct.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn stats_edge_cases() {
        let t = Trajectory {
            dt: 0.1,
            x: vec![2.0; 100],
            v: vec![-1.0; 100],
            aux_dim: 0,
            aux: vec![],
            energy: vec![],
        };
        let s = equilibrium_stats(&t, 0.5).unwrap();
        assert_eq!(s.var_x, 0.0);
        assert_eq!(s.var_v, 0.0);
        assert_eq!(s.mean_x, 2.0);
        let short = Trajectory { x: vec![1.0], v: vec![1.0], ..t };
        assert!(equilibrium_stats(&short, 0.99).is_err());
    }

    #[test]
    fn stats_of_ou_paths() {
        let model = realize(&KernelSpec::new(vec![Mode::Exp { c: 2.0, gamma: 1.0 }]).unwrap()).unwrap();
        let paths = sample_stationary_paths(&model, 0.05, 100_000, 1, 4).unwrap();
        let traj = Trajectory {
            dt: 0.05,
            x: paths[0].clone(),
            v: paths[0].clone(),
            aux_dim: 0,
            aux: vec![],
            energy: vec![],
        };
        let s = equilibrium_stats(&traj, 0.0).unwrap();
        assert!((s.var_x / 2.0 - 1.0).abs() < 0.05);
        assert!(s.var_x_err > 0.0 && s.var_x_err < 0.05);
    }

    #[test]
    fn white_noise_limit() {
        // γ large with c/γ = ζ fixed: the x-marginal follows m ẍ = -kx - ζẋ + noise
        let (k, zeta, gamma) = (1.0, 1.0, 50.0);
        let cfg = config(harmonic(k), Poly(vec![0.0, 1.0]), 1.0);
        let model = realize(&KernelSpec::new(vec![Mode::Exp { c: zeta * gamma, gamma }]).unwrap()).unwrap();
        let dt = 1e-3;
        let lags = [0usize, 500, 1000];
        let runs: Vec<Vec<f64>> = (0..64u64)
            .into_par_iter()
            .map(|j| {
                let mut s = RandomStream::new(77, j);
                let tr = gle_integrate_embedded(&cfg, &model, 0.0, 0.0, dt, 200_000, &mut s).unwrap();
                let xs = &tr.x[20_000..];
                lags.iter()
                    .map(|&l| (0..xs.len() - l).map(|i| xs[i] * xs[i + l]).sum::<f64>() / (xs.len() - l) as f64)
                    .collect()
            })
            .collect();
        let w1 = (k - zeta * zeta / 4.0).sqrt();
        for (li, &l) in lags.iter().enumerate() {
            let tau = l as f64 * dt;
            let est = runs.iter().map(|r| r[li]).sum::<f64>() / runs.len() as f64;
            let want = (-zeta * tau / 2.0).exp() * ((w1 * tau).cos() + zeta / (2.0 * w1) * (w1 * tau).sin());
            assert!((est / want - 1.0).abs() < 0.1, "τ={tau}: {est} vs {want}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn kernel_even(t in -20.0f64..20.0) {
            let b = comb32();
            prop_assert!((kz_kernel(&b, t) - kz_kernel(&b, -t)).abs() < 1e-14);
        }

        #[test]
        fn poly_derivative_matches_difference(coeffs in prop::collection::vec(-2.0f64..2.0, 1..6), x in -1.5f64..1.5) {
            let p = Poly(coeffs);
            let h = 1e-6;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            prop_assert!((fd - p.deriv(x)).abs() < 1e-6);
        }
    }
}
