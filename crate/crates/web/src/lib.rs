//! Browser bindings. Each export takes plain numbers and returns a JSON string
//! the page plots on a canvas.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use oqs_lab::hp_dilation::dilation_error;
use oqs_lab::kernels::{dissipation_kernel, memory_kernel, noise_kernel_accelerated, BathSpec};
use oqs_lab::lindblad::{evolve, steady_state, two_level_thermal, DensityMatrix};
use oqs_lab::numerics::{cr, ComplexVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct KernelCurves {
    pub t: Vec<f64>,
    pub kappa: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub noise: Vec<f64>,
    pub series_valid: bool,
}

#[derive(Serialize)]
pub struct Relaxation {
    pub t: Vec<f64>,
    pub p_excited: Vec<f64>,
    pub coherence: Vec<f64>,
    pub steady_p_excited: f64,
}

#[derive(Serialize)]
pub struct Convergence {
    pub dt: Vec<f64>,
    pub error: Vec<f64>,
    pub order: Vec<Option<f64>>,
}

fn err(e: oqs_lab::Error) -> String {
    format!("{} ({})", e, e.category())
}

pub fn kernel_curves_native(lambda: f64, temperature: f64, t_max: f64, points: usize) -> Result<KernelCurves, String> {
    let spec = BathSpec::natural(lambda, temperature).map_err(err)?;
    if points < 2 || !(t_max > 0.0) {
        return Err("need at least 2 points and t_max > 0".into());
    }
    let t: Vec<f64> = (1..=points).map(|i| t_max * i as f64 / points as f64).collect();
    let mut out = KernelCurves {
        t: t.clone(),
        kappa: Vec::with_capacity(points),
        dissipation: Vec::with_capacity(points),
        noise: Vec::with_capacity(points),
        series_valid: spec.series_valid(),
    };
    for &s in &t {
        out.kappa.push(memory_kernel(s, &spec).map_err(err)?);
        out.dissipation.push(dissipation_kernel(s, &spec).map_err(err)?);
        out.noise.push(noise_kernel_accelerated(s, &spec, 200).map_err(err)?);
    }
    Ok(out)
}

fn excited() -> Result<DensityMatrix, String> {
    let mut psi = ComplexVector::zeros(2);
    psi[1] = cr(1.0);
    DensityMatrix::pure(&psi).map_err(err)
}

pub fn two_level_relaxation_native(
    omega: f64,
    gamma: f64,
    n_thermal: f64,
    t_final: f64,
    points: usize,
) -> Result<Relaxation, String> {
    let model = two_level_thermal(omega, gamma, n_thermal, 1.0).map_err(err)?;
    if points < 2 || !(t_final > 0.0) {
        return Err("need at least 2 points and t_final > 0".into());
    }
    let sub = 10;
    let dt = t_final / (points * sub) as f64;
    let states = evolve(&excited()?, &model, dt, points * sub).map_err(err)?;
    let ss = steady_state(&model).map_err(err)?;
    let mut out = Relaxation {
        t: Vec::new(),
        p_excited: Vec::new(),
        coherence: Vec::new(),
        steady_p_excited: ss.matrix[(1, 1)].re,
    };
    for (i, s) in states.iter().enumerate().step_by(sub) {
        out.t.push(i as f64 * dt);
        out.p_excited.push(s.matrix[(1, 1)].re);
        out.coherence.push(s.matrix[(0, 1)].norm());
    }
    Ok(out)
}

pub fn dilation_convergence_native(gamma: f64, n_thermal: f64, levels: usize) -> Result<Convergence, String> {
    if !(1..=6).contains(&levels) {
        return Err("levels must be between 1 and 6".into());
    }
    let model = two_level_thermal(1.0, gamma, n_thermal, 1.0).map_err(err)?;
    let dts: Vec<f64> = (0..levels).map(|k| 0.02 / (1u32 << k) as f64).collect();
    let rows = dilation_error(&model, &excited()?, 1.0, &dts, 2).map_err(err)?;
    Ok(Convergence {
        dt: rows.iter().map(|r| r.dt).collect(),
        error: rows.iter().map(|r| r.error).collect(),
        order: rows.iter().map(|r| r.order).collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// κ(t), D(t) and D₁(t) on (0, t_max].
#[wasm_bindgen]
pub fn kernel_curves(lambda: f64, temperature: f64, t_max: f64, points: usize) -> Result<String, JsError> {
    to_js(kernel_curves_native(lambda, temperature, t_max, points))
}

/// Excited-state population of the thermal two-level atom, started excited.
#[wasm_bindgen]
pub fn two_level_relaxation(
    omega: f64,
    gamma: f64,
    n_thermal: f64,
    t_final: f64,
    points: usize,
) -> Result<String, JsError> {
    to_js(two_level_relaxation_native(omega, gamma, n_thermal, t_final, points))
}

/// Collision-model error against the exact semigroup for dt = 0.02/2^k.
#[wasm_bindgen]
pub fn dilation_convergence(gamma: f64, n_thermal: f64, levels: usize) -> Result<String, JsError> {
    to_js(dilation_convergence_native(gamma, n_thermal, levels))
}
