//! Bath kernels of the Ohmic spectral density with Lorentz-Drude cutoff,
//! J(ω) = (ω/π)·Λ²/(ω² + Λ²).
//!
//! Every kernel is available in closed form and as a frequency quadrature so
//! the two can be checked against each other:
//!
//! * memory kernel      κ(t)  = ∫₀^∞ 2J(ω)/ω · cos(ωt) dω         = Λ e^{-Λt}
//! * dissipation kernel D(t)  = ∫₀^∞ ħJ(ω) sin(ωt) dω             = (ħΛ²/2) e^{-Λt}
//! * noise kernel       D₁(t) = ∫₀^∞ ħJ(ω) coth(ħωβ/2) cos(ωt) dω
//!
//! Frequency integrals are split at ω_max: Gauss-Legendre on [0, ω_max] and the
//! remainder on the rotated contour ω_max + iy (see
//! [`oscillatory_half_line`](crate::numerics::oscillatory_half_line)). The
//! remainder is reported separately as the tail estimate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{integrate, oscillatory_half_line, DEFAULT_POINTS};
use crate::{Error, Result};

/// Default upper frequency for the finite part of the quadratures, in units of Λ.
pub const DEFAULT_OMEGA_MAX_FACTOR: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Cutoff frequency Λ.
    pub lambda: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub k_b: f64,
}

impl BathSpec {
    pub fn new(lambda: f64, temperature: f64, hbar: f64, k_b: f64) -> Result<Self> {
        let spec = Self {
            lambda,
            temperature,
            hbar,
            k_b,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Natural units ħ = k_B = 1.
    pub fn natural(lambda: f64, temperature: f64) -> Result<Self> {
        Self::new(lambda, temperature, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("temperature", self.temperature),
            ("hbar", self.hbar),
            ("k_b", self.k_b),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("bath {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn kbt(&self) -> f64 {
        self.k_b * self.temperature
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.kbt()
    }

    /// k_B T > ħΛ/π: every coefficient of the Matsubara expansion of D₁ is positive.
    pub fn series_valid(&self) -> bool {
        self.kbt() > self.hbar * self.lambda / PI
    }

    pub fn default_omega_max(&self) -> f64 {
        DEFAULT_OMEGA_MAX_FACTOR * self.lambda
    }
}

/// Result of a half-line frequency integral: `value = truncated + tail`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyIntegral {
    pub value: f64,
    /// Gauss-Legendre estimate of ∫₀^{ω_max}.
    pub truncated: f64,
    /// Contribution of (ω_max, ∞).
    pub tail: f64,
}

fn non_negative(x: f64, what: &str) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be >= 0, got {x}")))
    }
}

/// coth(x) for x > 0 as 1 + 2/(e^{2x} - 1), which does not overflow.
pub fn coth_stable(x: f64) -> f64 {
    1.0 + 2.0 / (2.0 * x).exp_m1()
}

fn coth_complex(z: Complex64) -> Complex64 {
    if 2.0 * z.re > 700.0 {
        return Complex64::new(1.0, 0.0);
    }
    1.0 + 2.0 / ((2.0 * z).exp() - 1.0)
}

pub fn spectral_density(omega: f64, spec: &BathSpec) -> Result<f64> {
    non_negative(omega, "frequency")?;
    let l2 = spec.lambda * spec.lambda;
    Ok(omega / PI * l2 / (omega * omega + l2))
}

pub fn memory_kernel(t: f64, spec: &BathSpec) -> Result<f64> {
    non_negative(t, "time")?;
    Ok(spec.lambda * (-spec.lambda * t).exp())
}

/// D(t) = (ħΛ²/2) e^{-Λt}, the closed form of ∫₀^∞ ħJ(ω) sin(ωt) dω.
pub fn dissipation_kernel(t: f64, spec: &BathSpec) -> Result<f64> {
    non_negative(t, "time")?;
    Ok(0.5 * spec.hbar * spec.lambda * spec.lambda * (-spec.lambda * t).exp())
}

pub fn planck_occupation(omega: f64, spec: &BathSpec) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("Planck occupation needs ω > 0, got {omega}")));
    }
    Ok(1.0 / (spec.beta() * spec.hbar * omega).exp_m1())
}

fn check_omega_max(omega_max: f64) -> Result<()> {
    if omega_max > 0.0 && omega_max.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("ω_max must be positive, got {omega_max}")))
    }
}

fn half_line_cosine<F, G>(
    real_integrand: F,
    complex_integrand: G,
    t: f64,
    omega_max: f64,
    n_points: usize,
    sine: bool,
) -> Result<FrequencyIntegral>
where
    F: Fn(f64) -> f64,
    G: Fn(Complex64) -> Complex64,
{
    let truncated = integrate(
        |w| {
            let phase = w * t;
            real_integrand(w) * if sine { phase.sin() } else { phase.cos() }
        },
        0.0,
        omega_max,
        n_points,
    )?;
    let tail_c = oscillatory_half_line(complex_integrand, t, omega_max, n_points)?;
    let tail = if sine { tail_c.im } else { tail_c.re };
    Ok(FrequencyIntegral {
        value: truncated + tail,
        truncated,
        tail,
    })
}

/// κ(t) by quadrature of ∫₀^∞ 2J(ω)/ω · cos(ωt) dω.
pub fn memory_kernel_quadrature(
    t: f64,
    spec: &BathSpec,
    omega_max: f64,
    n_points: usize,
) -> Result<FrequencyIntegral> {
    non_negative(t, "time")?;
    check_omega_max(omega_max)?;
    let l2 = spec.lambda * spec.lambda;
    half_line_cosine(
        |w| 2.0 / PI * l2 / (w * w + l2),
        |z| 2.0 / PI * l2 / (z * z + l2),
        t,
        omega_max,
        n_points,
        false,
    )
}

/// D(t) by quadrature of ∫₀^∞ ħJ(ω) sin(ωt) dω.
pub fn dissipation_kernel_quadrature(
    t: f64,
    spec: &BathSpec,
    omega_max: f64,
    n_points: usize,
) -> Result<FrequencyIntegral> {
    non_negative(t, "time")?;
    check_omega_max(omega_max)?;
    let l2 = spec.lambda * spec.lambda;
    let hbar = spec.hbar;
    half_line_cosine(
        |w| hbar * w / PI * l2 / (w * w + l2),
        |z| hbar * z / PI * l2 / (z * z + l2),
        t,
        omega_max,
        n_points,
        true,
    )
}

/// D₁(t) by quadrature of ∫₀^∞ ħJ(ω) coth(ħωβ/2) cos(ωt) dω.
///
/// D₁ has a logarithmic singularity at t = 0, so `t` must be positive.
pub fn noise_kernel_quadrature(
    t: f64,
    spec: &BathSpec,
    omega_max: f64,
    n_points: usize,
) -> Result<FrequencyIntegral> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("noise kernel is singular at t = 0; got t = {t}")));
    }
    check_omega_max(omega_max)?;
    let l2 = spec.lambda * spec.lambda;
    let hbar = spec.hbar;
    let half_beta_hbar = 0.5 * spec.hbar * spec.beta();
    // ω·coth(aω) is finite at ω = 0 (→ 1/a).
    let w_coth = move |w: f64| {
        let x = half_beta_hbar * w;
        if x < 1e-8 {
            1.0 / half_beta_hbar
        } else {
            w * coth_stable(x)
        }
    };
    half_line_cosine(
        |w| hbar / PI * l2 / (w * w + l2) * w_coth(w),
        |z| hbar / PI * l2 / (z * z + l2) * z * coth_complex(z * half_beta_hbar),
        t,
        omega_max,
        n_points,
        false,
    )
}

/// Noise kernel with default ω_max = 200Λ and default node count.
pub fn noise_kernel_quadrature_default(t: f64, spec: &BathSpec) -> Result<FrequencyIntegral> {
    noise_kernel_quadrature(t, spec, spec.default_omega_max(), DEFAULT_POINTS)
}

/// D₁(t), t > 0, from the Matsubara expansion with the slowly converging
/// 1/ν_n part summed in closed form:
///
/// Σ_{n≥1} 2k_BTΛ²ν_n/(ν_n²-Λ²) e^{-ν_n t}
///   = -(2k_BTΛ²/ν₁) ln(1 - e^{-ν₁t}) + Σ_{n≥1} 2k_BTΛ⁴ e^{-ν_n t} / (ν_n(ν_n²-Λ²)).
///
/// The remaining sum decays like n⁻³ and is cut at `remainder_terms`.
pub fn noise_kernel_accelerated(t: f64, spec: &BathSpec, remainder_terms: usize) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("noise kernel is singular at t = 0; got t = {t}")));
    }
    let (lam, kbt, hbar) = (spec.lambda, spec.kbt(), spec.hbar);
    let x = hbar * lam / (2.0 * kbt);
    let head = 0.5 * hbar * lam * lam * (-lam * t).exp() / x.tan();
    let nu1 = 2.0 * PI * kbt / hbar;
    let log_part = -(2.0 * kbt * lam * lam / nu1) * (-(-nu1 * t).exp_m1()).ln();
    let mut rest = 0.0;
    for n in 1..=remainder_terms {
        let nu = nu1 * n as f64;
        let term = 2.0 * kbt * lam.powi(4) * (-nu * t).exp() / (nu * (nu * nu - lam * lam));
        rest += term;
        if term.abs() < 1e-18 * rest.abs() {
            break;
        }
    }
    Ok(head + log_part + rest)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CallenWelton {
    /// ∫_ℝ cos(ωt) D₁(t) dt
    pub noise_side: f64,
    /// coth(ħωβ/2) · ∫_ℝ sin(ωt) D(t) dt
    pub dissipation_side: f64,
    pub residual: f64,
}

/// Checks ∫ cos(ωt) D₁(t) dt = coth(ħωβ/2) ∫ sin(ωt) D(t) dt by time-domain
/// quadrature; both integrands are even in t, so each side is twice the
/// half-line integral over [0, t_max].
///
/// D₁ enters through [`noise_kernel_accelerated`], D through its closed form.
/// t_max = 40/min(Λ, ν₁), and t = t_max·u⁴ absorbs the logarithmic singularity
/// of D₁ at t = 0.
pub fn callen_welton_residual(omega: f64, spec: &BathSpec) -> Result<CallenWelton> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("Callen-Welton check needs ω > 0, got {omega}")));
    }
    let nu1 = 2.0 * PI * spec.kbt() / spec.hbar;
    let t_max = 40.0 / spec.lambda.min(nu1);
    let n_points = 8192;
    let noise_half = integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let t = t_max * u.powi(4);
            let jac = 4.0 * t_max * u.powi(3);
            let d1 = noise_kernel_accelerated(t, spec, 400).unwrap_or(f64::NAN);
            (omega * t).cos() * d1 * jac
        },
        0.0,
        1.0,
        n_points,
    )?;
    let diss_half = integrate(
        |t| (omega * t).sin() * dissipation_kernel(t, spec).unwrap_or(f64::NAN),
        0.0,
        t_max,
        n_points,
    )?;
    let noise_side = 2.0 * noise_half;
    let dissipation_side = coth_stable(0.5 * spec.hbar * omega * spec.beta()) * 2.0 * diss_half;
    Ok(CallenWelton {
        noise_side,
        dissipation_side,
        residual: (noise_side - dissipation_side).abs() / dissipation_side.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> BathSpec {
        BathSpec::natural(1.0, 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(BathSpec::natural(0.0, 1.0).is_err());
        assert!(BathSpec::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(unit().series_valid());
        assert!(!BathSpec::natural(10.0, 1.0).unwrap().series_valid());
    }

    #[test]
    fn spectral_density_values() {
        let s = unit();
        assert_eq!(spectral_density(0.0, &s).unwrap(), 0.0);
        let s2 = BathSpec::natural(3.0, 1.0).unwrap();
        assert!((spectral_density(3.0, &s2).unwrap() - 3.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(spectral_density(-1.0, &s).is_err());
    }

    #[test]
    fn spectral_density_peaks_at_cutoff() {
        let s = BathSpec::natural(2.5, 1.0).unwrap();
        // grid search oracle
        let (mut best, mut arg) = (f64::MIN, 0.0);
        for i in 1..200_000 {
            let w = i as f64 * 1e-4;
            let j = spectral_density(w, &s).unwrap();
            if j > best {
                best = j;
                arg = w;
            }
        }
        assert!((arg - 2.5).abs() < 2e-4, "argmax {arg}");
    }

    #[test]
    fn closed_form_values() {
        let s = BathSpec::new(2.0, 1.0, 0.7, 1.0).unwrap();
        assert_eq!(memory_kernel(0.0, &s).unwrap(), 2.0);
        assert!((memory_kernel(0.5, &s).unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert!((dissipation_kernel(0.0, &s).unwrap() - 0.5 * 0.7 * 4.0).abs() < 1e-15);
        assert!((dissipation_kernel(1.0, &s).unwrap() - 0.5 * 0.7 * 4.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(memory_kernel(-1.0, &s).is_err());
        assert!(dissipation_kernel(-1.0, &s).is_err());
        // at Λ = 1 the closed form coincides with ħΛ³/2
        assert_eq!(dissipation_kernel(0.0, &unit()).unwrap(), 0.5);
    }

    #[test]
    fn memory_kernel_matches_quadrature() {
        for &(lam, t) in &[(1.0, 0.1), (1.0, 1.0), (2.0, 0.5), (0.5, 3.0)] {
            let s = BathSpec::natural(lam, 1.0).unwrap();
            let q = memory_kernel_quadrature(t, &s, s.default_omega_max(), DEFAULT_POINTS).unwrap();
            let exact = memory_kernel(t, &s).unwrap();
            assert!((q.value - exact).abs() < 1e-6, "Λ={lam} t={t}: {} vs {exact}", q.value);
            // truncated part alone is off by at most the analytic tail estimate
            let w = s.default_omega_max();
            let bound = 2.0 / PI * lam * lam / (w * w * t) * 1.01;
            assert!((q.truncated - exact).abs() <= bound);
            assert!((q.tail).abs() <= bound);
        }
    }

    #[test]
    fn dissipation_kernel_matches_quadrature() {
        for &(lam, hbar, t) in &[(1.0, 1.0, 0.2), (1.0, 1.0, 2.0), (2.0, 0.5, 0.7)] {
            let s = BathSpec::new(lam, 1.0, hbar, 1.0).unwrap();
            let q = dissipation_kernel_quadrature(t, &s, s.default_omega_max(), DEFAULT_POINTS).unwrap();
            let exact = dissipation_kernel(t, &s).unwrap();
            assert!((q.value - exact).abs() < 1e-6, "Λ={lam} t={t}: {} vs {exact}", q.value);
        }
    }

    #[test]
    fn noise_kernel_quadrature_vs_accelerated_series() {
        let s = unit();
        for &t in &[0.1, 0.5, 1.0, 2.0] {
            let q = noise_kernel_quadrature_default(t, &s).unwrap();
            let series = noise_kernel_accelerated(t, &s, 2000).unwrap();
            assert!((q.value - series).abs() < 1e-6, "t={t}: {} vs {series}", q.value);
        }
    }

    #[test]
    fn noise_kernel_classical_limit() {
        let s = BathSpec::new(1.0, 1.0, 1e-4, 1.0).unwrap();
        for &t in &[0.1, 0.5, 1.0, 2.0] {
            let q = noise_kernel_quadrature_default(t, &s).unwrap();
            let classical = s.kbt() * memory_kernel(t, &s).unwrap();
            assert!((q.value / classical - 1.0).abs() < 0.01, "t={t}");
        }
    }

    #[test]
    fn noise_kernel_rejects_bad_arguments() {
        let s = unit();
        assert!(noise_kernel_quadrature(0.0, &s, 200.0, 64).is_err());
        assert!(noise_kernel_quadrature(1.0, &s, 0.0, 64).is_err());
    }

    #[test]
    fn planck_values() {
        let s = unit();
        assert!((planck_occupation(2f64.ln(), &s).unwrap() - 1.0).abs() < 1e-14);
        let v = planck_occupation(10.0, &s).unwrap();
        assert!((v - 1.0 / (10f64.exp() - 1.0)).abs() < 1e-18);
        assert!((v - 4.54e-5).abs() < 1e-7);
        for &x in &[1e-3, 5e-3, 1e-2] {
            let n = planck_occupation(x, &s).unwrap();
            assert!((n * x - 1.0).abs() < 0.01);
        }
        assert!(planck_occupation(0.0, &s).is_err());
    }

    #[test]
    fn coth_is_stable() {
        assert!((coth_stable(0.3) - 1.0 / 0.3f64.tanh()).abs() < 1e-14);
        assert_eq!(coth_stable(800.0), 1.0);
    }

    #[test]
    fn callen_welton_holds() {
        let s = unit();
        for &w in &[0.5, 1.0, 2.0] {
            let cw = callen_welton_residual(w, &s).unwrap();
            assert!(cw.residual <= 1e-4, "ω={w}: {cw:?}");
        }
        let scaled = BathSpec::natural(2.0, 2.0).unwrap();
        for &w in &[1.0, 2.0, 4.0] {
            assert!(callen_welton_residual(w, &scaled).unwrap().residual <= 1e-4);
        }
    }

    proptest! {
        #[test]
        fn kernels_positive_and_decreasing(lam in 0.2f64..3.0, kt_extra in 0.01f64..3.0, t in 0.01f64..5.0) {
            let s = BathSpec::natural(lam, lam / PI + kt_extra).unwrap();
            prop_assert!(s.series_valid());
            let dt = 0.01;
            prop_assert!(memory_kernel(t + dt, &s).unwrap() < memory_kernel(t, &s).unwrap());
            prop_assert!(dissipation_kernel(t + dt, &s).unwrap() < dissipation_kernel(t, &s).unwrap());
            let d1 = noise_kernel_accelerated(t, &s, 200).unwrap();
            let d1b = noise_kernel_accelerated(t + dt, &s, 200).unwrap();
            prop_assert!(d1 > 0.0 && d1b < d1);
        }

        #[test]
        fn spectral_density_nonnegative(w in 0.0f64..1e3, lam in 0.01f64..10.0) {
            let s = BathSpec::natural(lam, 1.0).unwrap();
            prop_assert!(spectral_density(w, &s).unwrap() >= 0.0);
        }
    }

    #[test]
    fn low_frequency_slope() {
        let s = BathSpec::natural(1.7, 1.0).unwrap();
        let w = 1e-7;
        assert!((spectral_density(w, &s).unwrap() / w - 1.0 / PI).abs() < 1e-10);
    }
}
